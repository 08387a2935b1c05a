import json

import pytest
from hypothesis import given, settings, strategies as st

from eigs import EXAMPLES, example_text, load_example
from eigs.lab import RandomSpecParams, random_spec
from eigs.model import (
    ColouredGraph,
    SpecError,
    chi,
    dump_spec,
    kappa,
    parse_spec,
    validate,
)

from conftest import FIXTURES


def minimal(**rule_overrides):
    rule = {"colour": 1, "vertices": ["p", "x", "m"], "beta_plus": "p", "beta_minus": "m",
            "edges": [{"from": "p", "to": "x", "colour": 1}, {"from": "x", "to": "m", "colour": 1}]}
    rule.update(rule_overrides)
    return {"colours": 1, "initial_colour": 1, "rules": [rule]}


def test_parse_splendor(splendor):
    assert splendor.K == 3
    assert splendor.initial_colour == 1
    assert [r.colour for r in splendor.rules] == [1, 2, 3]


def test_parse_minimal_path():
    spec = parse_spec(json.dumps(minimal()))
    assert spec.K == 1
    assert validate(spec) == []


def test_coincident_planting_is_parse_error():
    with pytest.raises(SpecError, match="planting vertices coincide"):
        parse_spec((FIXTURES / "coincident.json").read_text())


def test_coincident_planting_lenient_parse_reports_violation():
    spec = parse_spec((FIXTURES / "coincident.json").read_text(), check=False)
    assert validate(spec) == ["colour 1: planting vertices coincide"]


def test_syntax_error_has_position():
    with pytest.raises(SpecError) as info:
        parse_spec((FIXTURES / "malformed.json").read_text())
    assert info.value.position is not None
    assert "line" in str(info.value)


@pytest.mark.parametrize(
    "doc, message",
    [
        (minimal(edges=[{"from": "p", "to": "m", "colour": 2}]), "unknown colour"),
        (minimal(beta_minus="zz"), "missing planting vertex"),
        ({**minimal(), "extra": 1}, "unknown field"),
        ({**minimal(), "rules": minimal()["rules"] * 2}, "duplicate colour"),
        ({**minimal(), "colours": 2}, "no rule for colour"),
        (minimal(edges=[{"from": "p", "to": "q", "colour": 1}]), "unknown vertex"),
    ],
)
def test_parse_errors(doc, message):
    with pytest.raises(SpecError, match=message):
        parse_spec(json.dumps(doc))


def test_validate_adjacent_planting():
    doc = minimal(edges=[{"from": "p", "to": "m", "colour": 1}, {"from": "p", "to": "x", "colour": 1}])
    assert validate(parse_spec(json.dumps(doc))) == ["colour 1: planted distance < 2"]


def test_validate_disconnected_vertex():
    doc = minimal(vertices=["p", "x", "m", "lonely"])
    assert validate(parse_spec(json.dumps(doc))) == ["colour 1: rule graph not connected"]


def test_validate_self_loop():
    doc = minimal(edges=minimal()["rules"][0]["edges"] + [{"from": "x", "to": "x", "colour": 1}])
    assert "colour 1: self-loop at vertex x" in validate(parse_spec(json.dumps(doc)))


@pytest.mark.parametrize("name", EXAMPLES)
def test_bundled_examples_valid(name):
    assert validate(load_example(name)) == []


def test_chi_rows(splendor):
    assert chi(splendor.rule(1).graph, 3) == (2, 1, 1)
    assert chi(splendor.rule(3).graph, 3) == (0, 0, 5)
    assert chi(ColouredGraph(("a",)), 3) == (0, 0, 0)


def test_kappa_broken(broken):
    r1 = broken.rule(1)
    assert kappa(r1.graph, r1.beta_plus, 2) == (2, 0, 0, 0)
    assert kappa(r1.graph, r1.beta_minus, 2) == (0, 1, 0, 1)
    assert kappa(ColouredGraph(("a", "b")), "a", 2) == (0, 0, 0, 0)
    with pytest.raises(KeyError):
        kappa(r1.graph, "nope", 2)


def test_kappa_loop_counts_both_ways():
    g = ColouredGraph(("a",), (("a", "a", 1),))
    assert kappa(g, "a", 1) == (1, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_handshake_and_round_trip(seed):
    spec = random_spec(RandomSpecParams(seed=seed))
    for r in spec.rules:
        total = sum(sum(kappa(r.graph, v, spec.K)) for v in r.graph.vertices)
        assert total == 2 * sum(chi(r.graph, spec.K))
    again = parse_spec(dump_spec(spec))
    assert again == spec
    assert dump_spec(again) == dump_spec(spec)


@pytest.mark.parametrize("name", EXAMPLES)
def test_round_trip_examples(name):
    spec = parse_spec(example_text(name))
    assert parse_spec(dump_spec(spec)) == spec
