from collections import Counter, deque

import numpy as np
import pytest

from eigs import engine
from eigs.model import ColouredGraph, IgsSpec, RuleGraph
from eigs.spectral import BudgetExceeded, degree_matrix, vec_mat

from conftest import examples, random_corpus


def naive_substitute(edges, spec, counter):
    """Reference substitution on named vertices, written independently of the engine."""
    out = []
    for a, b, c in edges:
        rule = spec.rule(c)
        local = {rule.beta_plus: a, rule.beta_minus: b}
        for v in rule.interior:
            counter[0] += 1
            local[v] = f"n{counter[0]}"
        out.extend((local[t], local[h], k) for t, h, k in rule.graph.edges)
    return out


def naive(spec, n):
    g0 = spec.start_graph()
    edges = list(g0.edges)
    counter = [0]
    for _ in range(n):
        edges = naive_substitute(edges, spec, counter)
    return edges


def bfs(edges, s, t):
    adj = {}
    for a, b, _ in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    dist = {s: 0}
    q = deque([s])
    while q:
        x = q.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist[t]


def test_splendor_first_steps(splendor):
    g1 = engine.iterate(splendor, 1)
    assert g1.n_edges == 4
    assert engine.degree_histogram(g1) == {2: 4}
    assert engine.planted_distance(g1) == 2
    g2 = engine.iterate(splendor, 2)
    assert g2.n_edges == 17
    assert engine.planted_distance(g2) == 4


def test_initial_graph_is_identity(splendor):
    g = engine.iterate(splendor, 0)
    assert g.n_edges == 1 and g.n_vertices == 2
    assert engine.degree_histogram(g) == {1: 2}
    assert engine.planted_distance(g) == 1


def test_broken_three_steps(broken):
    g = engine.iterate(broken, 3)
    assert g.n_edges == 46
    assert len(naive(broken, 3)) == 46


def test_zero_edge_graph_unchanged(splendor):
    spec = IgsSpec(3, splendor.rules, 1, ColouredGraph(("a", "b")))
    g = engine.iterate(spec, 3)
    assert g.n_edges == 0 and g.n_vertices == 2


@pytest.mark.parametrize("name, spec", sorted(examples().items()))
def test_engine_matches_naive_substitution(name, spec):
    for n in range(5):
        g = engine.iterate(spec, n)
        ref = naive(spec, n)
        assert g.n_edges == len(ref)
        ref_deg = Counter()
        for a, b, _ in ref:
            ref_deg[a] += 1
            ref_deg[b] += 1
        assert engine.degree_histogram(g) == dict(sorted(Counter(ref_deg.values()).items()))
        assert sorted(Counter(g.colour.tolist()).items()) == sorted(Counter(c for *_, c in ref).items())
        if spec.has_planted_pair:
            assert engine.planted_distance(g) == bfs(ref, "v+", "v-")


def test_semigroup_law(broken):
    tables = engine.RuleTables(broken)
    g = engine.iterate(broken, 2)
    for _ in range(2):
        g = engine.substitute_once(g, tables)
    direct = engine.iterate(broken, 4)
    assert np.array_equal(g.tail, direct.tail)
    assert np.array_equal(g.head, direct.head)
    assert np.array_equal(g.colour, direct.colour)


def test_provenance(splendor):
    g = engine.iterate(splendor, 2)
    assert g.birth_generation[:2].tolist() == [0, 0]
    assert g.origin_label(0) == "initial:v+"
    assert g.origin_label(2) == "rule:1:t"
    assert g.birth_kappa(2) == (0, 1, 1, 0, 0, 0)


def test_degree_lemma_per_vertex(splendor, broken):
    for spec in (splendor, broken):
        N = degree_matrix(spec)
        n = 4
        g = engine.iterate(spec, n)
        kap = engine.kappa_vectors(g)
        deg = engine.degrees(g)
        for v in range(g.n_vertices):
            u = g.birth_kappa(v)
            for _ in range(n - int(g.birth_generation[v])):
                u = vec_mat(u, N)
            assert tuple(kap[v]) == u
            assert deg[v] == sum(u)


def test_histogram_totals(broken):
    g = engine.iterate(broken, 5)
    hist = engine.degree_histogram(g)
    assert sum(hist.values()) == g.n_vertices
    assert max(hist) == engine.degrees(g).max()


def test_budget(splendor):
    with pytest.raises(BudgetExceeded, match="would have"):
        engine.iterate(splendor, 20)
    with pytest.raises(BudgetExceeded):
        engine.iterate(splendor, 3, budget=50)


def test_ids_are_32_bit_by_default(splendor):
    g = engine.iterate(splendor, 3)
    assert g.tail.dtype == np.int32


def test_connected_when_rules_connected():
    for spec in random_corpus()[:10]:
        g = engine.iterate(spec, 3)
        engine.diameter(g)  # raises when disconnected


@pytest.mark.parametrize("name", ["splendor", "broken_dhl", "classical_dhl", "binary_tree"])
def test_diameter_bracket(name):
    spec = examples()[name]
    total = 0
    for n in range(1, 5):
        g = engine.iterate(spec, n)
        total += engine.planted_distance(g)
        ratio = engine.diameter(g) / total
        assert 0.25 <= ratio <= 4


def test_export_deterministic(tmp_path, broken):
    paths = []
    for k in range(2):
        g = engine.iterate(broken, 3)
        e, p = tmp_path / f"e{k}.txt", tmp_path / f"p{k}.txt"
        engine.write_edge_list(g, e)
        engine.write_provenance(g, p)
        paths.append((e.read_bytes(), p.read_bytes()))
    assert paths[0] == paths[1]
    lines = paths[0][0].decode().splitlines()
    assert len(lines) == 46
    assert all(len(line.split()) == 3 for line in lines)
    first = paths[0][1].decode().splitlines()[0]
    assert first == "0 0 1,0,0,0 initial:v+"


def test_planted_distance_needs_pair():
    spec = examples()["binary_tree_two_edge"]
    with pytest.raises(ValueError):
        engine.planted_distance(engine.iterate(spec, 1))
