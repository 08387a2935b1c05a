"""Edge iterated graph system data model and its JSON rule-file format.

A system has ``K`` colours; colour ``i`` owns one rule graph ``R_i`` with two
planting vertices.  Substituting an edge ``(a, b)`` of colour ``i`` glues a
fresh copy of ``R_i`` with ``a`` identified to ``beta_plus`` and ``b`` to
``beta_minus``.  Colours are 1-based everywhere in this package.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "SpecError",
    "ColouredGraph",
    "RuleGraph",
    "IgsSpec",
    "parse_spec",
    "load_spec",
    "dump_spec",
    "validate",
    "chi",
    "kappa",
    "single_edge",
]


class SpecError(ValueError):
    """Raised when a rule file cannot be turned into an :class:`IgsSpec`."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (line {position[0]}, column {position[1]})"
        super().__init__(message)


Edge = tuple  # (tail, head, colour)


@dataclass(frozen=True)
class ColouredGraph:
    """A finite directed multigraph with coloured edges and named vertices."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...] = ()

    def index(self) -> dict[str, int]:
        return {v: k for k, v in enumerate(self.vertices)}

    def undirected_adjacency(self) -> list[set[int]]:
        idx = self.index()
        adj: list[set[int]] = [set() for _ in self.vertices]
        for t, h, _ in self.edges:
            a, b = idx[t], idx[h]
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
        return adj

    def distances_from(self, source: str) -> dict[str, int]:
        """Undirected BFS distances from ``source`` (unreachable vertices omitted)."""
        adj = self.undirected_adjacency()
        idx = self.index()
        dist = {idx[source]: 0}
        queue = deque([idx[source]])
        while queue:
            a = queue.popleft()
            for b in adj[a]:
                if b not in dist:
                    dist[b] = dist[a] + 1
                    queue.append(b)
        return {self.vertices[k]: d for k, d in dist.items()}

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        return len(self.distances_from(self.vertices[0])) == len(self.vertices)


@dataclass(frozen=True)
class RuleGraph:
    colour: int
    graph: ColouredGraph
    beta_plus: str
    beta_minus: str

    @property
    def interior(self) -> tuple[str, ...]:
        return tuple(v for v in self.graph.vertices if v not in (self.beta_plus, self.beta_minus))


def single_edge(colour: int) -> ColouredGraph:
    """The default initial graph: one edge of ``colour`` from v+ to v-."""
    return ColouredGraph(("v+", "v-"), (("v+", "v-", colour),))


@dataclass(frozen=True)
class IgsSpec:
    colour_count: int
    rules: tuple[RuleGraph, ...]
    initial_colour: int
    initial_graph: ColouredGraph | None = None
    name: str | None = field(default=None, compare=False)

    @property
    def K(self) -> int:
        return self.colour_count

    def rule(self, colour: int) -> RuleGraph:
        return self.rules[colour - 1]

    def start_graph(self) -> ColouredGraph:
        if self.initial_graph is None:
            return single_edge(self.initial_colour)
        return self.initial_graph

    @property
    def has_planted_pair(self) -> bool:
        return self.initial_graph is None


# ---------------------------------------------------------------------------
# counting vectors


def chi(graph: ColouredGraph, K: int) -> tuple[int, ...]:
    """Number of edges of each colour."""
    counts = [0] * K
    for _, _, c in graph.edges:
        counts[c - 1] += 1
    return tuple(counts)


def kappa(graph: ColouredGraph, v: str, K: int) -> tuple[int, ...]:
    """Out/in colour counts of ``v``: slot ``2i-2`` is out-colour ``i``, ``2i-1`` in-colour ``i``.

    A loop counts once as outgoing and once as incoming.
    """
    if v not in graph.vertices:
        raise KeyError(f"vertex {v!r} not in graph")
    counts = [0] * (2 * K)
    for t, h, c in graph.edges:
        if t == v:
            counts[2 * (c - 1)] += 1
        if h == v:
            counts[2 * (c - 1) + 1] += 1
    return tuple(counts)


# ---------------------------------------------------------------------------
# rule-file format

_TOP_KEYS = {"colours", "initial_colour", "initial_graph", "rules"}
_OPTIONAL_TOP = {"initial_graph", "name"}
_RULE_KEYS = {"colour", "vertices", "beta_plus", "beta_minus", "edges"}
_EDGE_KEYS = {"from", "to", "colour"}
_GRAPH_KEYS = {"vertices", "edges"}


def _require_keys(obj, keys, optional, where):
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected an object")
    unknown = set(obj) - keys - optional
    if unknown:
        raise SpecError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = keys - optional - set(obj)
    if missing:
        raise SpecError(f"{where}: missing field(s) {sorted(missing)}")


def _as_int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(f"{where}: expected an integer, got {value!r}")
    return value


def _parse_graph(vertices, edges, where, K, check):
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        raise SpecError(f"{where}: 'vertices' must be a list of strings")
    if len(set(vertices)) != len(vertices):
        raise SpecError(f"{where}: duplicate vertex names")
    if not isinstance(edges, list):
        raise SpecError(f"{where}: 'edges' must be a list")
    names = set(vertices)
    parsed = []
    for k, e in enumerate(edges):
        ew = f"{where} edge {k}"
        _require_keys(e, _EDGE_KEYS, set(), ew)
        t, h = e["from"], e["to"]
        for end in (t, h):
            if end not in names:
                raise SpecError(f"{ew}: unknown vertex {end!r}")
        c = _as_int(e["colour"], ew)
        if check and not 1 <= c <= K:
            raise SpecError(f"{ew}: unknown colour {c}")
        parsed.append((t, h, c))
    return ColouredGraph(tuple(vertices), tuple(parsed))


def parse_spec(source: str, *, check: bool = True) -> IgsSpec:
    """Parse a rule file.

    With ``check=False`` the semantic invariants (colour ranges, coincident
    planting vertices) are left for :func:`validate` to report.
    """
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SpecError(f"syntax error: {exc.msg}", (exc.lineno, exc.colno)) from None
    _require_keys(doc, _TOP_KEYS | {"name"}, _OPTIONAL_TOP, "top level")
    K = _as_int(doc["colours"], "colours")
    if K < 1:
        raise SpecError("colours: must be >= 1")
    iota = _as_int(doc["initial_colour"], "initial_colour")
    if check and not 1 <= iota <= K:
        raise SpecError(f"initial_colour: unknown colour {iota}")
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise SpecError("name: expected a string")

    rules_doc = doc["rules"]
    if not isinstance(rules_doc, list):
        raise SpecError("rules: expected a list")
    by_colour: dict[int, RuleGraph] = {}
    for k, r in enumerate(rules_doc):
        where = f"rule {k}"
        _require_keys(r, _RULE_KEYS, set(), where)
        c = _as_int(r["colour"], f"{where} colour")
        if not 1 <= c <= K:
            raise SpecError(f"{where}: unknown colour {c}")
        if c in by_colour:
            raise SpecError(f"{where}: duplicate colour {c}")
        g = _parse_graph(r["vertices"], r["edges"], f"rule for colour {c}", K, check)
        bp, bm = r["beta_plus"], r["beta_minus"]
        for label, b in (("beta_plus", bp), ("beta_minus", bm)):
            if b not in g.vertices:
                raise SpecError(f"rule for colour {c}: missing planting vertex {label}={b!r}")
        if check and bp == bm:
            raise SpecError(f"rule for colour {c}: planting vertices coincide")
        by_colour[c] = RuleGraph(c, g, bp, bm)
    missing = [c for c in range(1, K + 1) if c not in by_colour]
    if missing:
        raise SpecError(f"rules: no rule for colour(s) {missing}")

    initial = None
    if doc.get("initial_graph") is not None:
        ig = doc["initial_graph"]
        _require_keys(ig, _GRAPH_KEYS, set(), "initial_graph")
        initial = _parse_graph(ig["vertices"], ig["edges"], "initial_graph", K, check)
    rules = tuple(by_colour[c] for c in range(1, K + 1))
    return IgsSpec(K, rules, iota, initial, name=name)


def load_spec(path, *, check: bool = True) -> IgsSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), check=check)


def _graph_doc(g: ColouredGraph) -> dict:
    return {
        "vertices": list(g.vertices),
        "edges": [{"from": t, "to": h, "colour": c} for t, h, c in g.edges],
    }


def spec_to_dict(spec: IgsSpec) -> dict:
    doc: dict = {"colours": spec.K, "initial_colour": spec.initial_colour}
    if spec.name is not None:
        doc["name"] = spec.name
    if spec.initial_graph is not None:
        doc["initial_graph"] = _graph_doc(spec.initial_graph)
    doc["rules"] = []
    for r in spec.rules:
        d = {"colour": r.colour, "beta_plus": r.beta_plus, "beta_minus": r.beta_minus}
        d.update(_graph_doc(r.graph))
        doc["rules"].append(d)
    return doc


def dump_spec(spec: IgsSpec, indent: int | None = 2) -> str:
    return json.dumps(spec_to_dict(spec), indent=indent, ensure_ascii=False)


# ---------------------------------------------------------------------------
# structural validation


def _graph_colour_violations(g: ColouredGraph, K: int, where: str) -> list[str]:
    out = []
    for t, h, c in g.edges:
        if not 1 <= c <= K:
            out.append(f"{where}: edge {t}->{h} has invalid colour {c}")
    return out


def validate(spec: IgsSpec) -> list[str]:
    """Return the structural violations of ``spec``; an empty list means valid.

    Ordered by colour, then by check.
    """
    K = spec.K
    out: list[str] = []
    if not 1 <= spec.initial_colour <= K:
        out.append(f"initial colour {spec.initial_colour} out of range")
    for r in spec.rules:
        where = f"colour {r.colour}"
        g = r.graph
        out.extend(_graph_colour_violations(g, K, where))
        loops = sorted({t for t, h, _ in g.edges if t == h})
        for v in loops:
            out.append(f"{where}: self-loop at vertex {v}")
        if r.beta_plus == r.beta_minus:
            out.append(f"{where}: planting vertices coincide")
            continue
        if not g.is_connected():
            out.append(f"{where}: rule graph not connected")
        d = g.distances_from(r.beta_plus).get(r.beta_minus)
        if d is None:
            out.append(f"{where}: planting vertices not connected")
        elif d < 2:
            out.append(f"{where}: planted distance < 2")
    if spec.initial_graph is not None:
        out.extend(_graph_colour_violations(spec.initial_graph, K, "initial graph"))
    return out


def graph_from_edges(vertices: Sequence[str], edges: Sequence[Edge]) -> ColouredGraph:
    return ColouredGraph(tuple(vertices), tuple(tuple(e) for e in edges))
