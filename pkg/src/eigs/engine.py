"""Explicit generation of the graphs ``Xi^n`` with per-vertex provenance.

Edges live in flat numpy arrays.  One substitution step keeps every existing
vertex id and appends the interior vertices of each substituted rule copy in
edge order, so ids are deterministic for a fixed system and ``n``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .model import IgsSpec, kappa
from .spectral import BudgetExceeded, mass_matrix, initial_row, vec_mat

__all__ = [
    "DEFAULT_EDGE_BUDGET",
    "GeneratedGraph",
    "RuleTables",
    "initial_graph",
    "substitute_once",
    "iterate",
    "projected_edge_count",
    "planted_distance",
    "degrees",
    "kappa_vectors",
    "degree_histogram",
    "diameter",
    "write_edge_list",
    "write_provenance",
]

DEFAULT_EDGE_BUDGET = 20_000_000
_INT32_LIMIT = 2**31 - 1


class RuleTables:
    """Flattened rule graphs used by the vectorised substitution.

    Local vertex ids: 0 is beta+, 1 is beta-, ``2 + t`` the ``t``-th interior vertex.
    """

    def __init__(self, spec: IgsSpec):
        K = spec.K
        self.K = K
        self.n_interior = np.zeros(K + 1, dtype=np.int64)
        self.n_edges = np.zeros(K + 1, dtype=np.int64)
        self.edge_offset = np.zeros(K + 1, dtype=np.int64)
        src, dst, col = [], [], []
        self.interior_offset = np.zeros(K + 1, dtype=np.int64)
        interior_type: list[tuple[int, ...]] = []
        self.interior_names: list[tuple[int, str]] = []
        for r in spec.rules:
            c = r.colour
            local = {r.beta_plus: 0, r.beta_minus: 1}
            for t, v in enumerate(r.interior):
                local[v] = t + 2
            self.n_interior[c] = len(r.interior)
            self.n_edges[c] = len(r.graph.edges)
            self.edge_offset[c] = len(src)
            self.interior_offset[c] = len(interior_type)
            for a, b, k in r.graph.edges:
                src.append(local[a])
                dst.append(local[b])
                col.append(k)
            for v in r.interior:
                interior_type.append(kappa(r.graph, v, K))
                self.interior_names.append((c, v))
        self.src = np.array(src, dtype=np.int64)
        self.dst = np.array(dst, dtype=np.int64)
        self.col = np.array(col, dtype=np.int64)
        self.interior_type = interior_type


@dataclass
class GeneratedGraph:
    """``Xi^n`` together with vertex provenance.

    ``birth_type`` indexes :attr:`types`; ``origin`` is ``-1`` for initial
    vertices and otherwise an index into ``RuleTables.interior_names``.
    """

    generation: int
    n_vertices: int
    tail: np.ndarray
    head: np.ndarray
    colour: np.ndarray
    birth_generation: np.ndarray
    birth_type: np.ndarray
    origin: np.ndarray
    types: list
    type_index: dict
    vertex_names: list  # names of initial vertices
    interior_names: list
    K: int
    planted_pair: tuple[int, int] | None = None

    @property
    def n_edges(self) -> int:
        return int(self.tail.shape[0])

    def birth_kappa(self, v: int) -> tuple[int, ...]:
        return self.types[int(self.birth_type[v])]

    def origin_label(self, v: int) -> str:
        o = int(self.origin[v])
        if o < 0:
            return f"initial:{self.vertex_names[v]}"
        c, name = self.interior_names[o]
        return f"rule:{c}:{name}"


def _id_dtype(count: int):
    return np.int32 if count <= _INT32_LIMIT else np.int64


def initial_graph(spec: IgsSpec, tables: RuleTables | None = None) -> GeneratedGraph:
    tables = tables or RuleTables(spec)
    g = spec.start_graph()
    idx = g.index()
    types: list = []
    type_index: dict = {}

    def type_id(u):
        if u not in type_index:
            type_index[u] = len(types)
            types.append(u)
        return type_index[u]

    birth_type = np.array([type_id(kappa(g, v, spec.K)) for v in g.vertices], dtype=np.int64)
    for u in tables.interior_type:
        type_id(u)
    E = len(g.edges)
    dt = np.int32
    planted = (idx["v+"], idx["v-"]) if spec.has_planted_pair else None
    return GeneratedGraph(
        generation=0,
        n_vertices=len(g.vertices),
        tail=np.array([idx[t] for t, _, _ in g.edges], dtype=dt).reshape(E),
        head=np.array([idx[h] for _, h, _ in g.edges], dtype=dt).reshape(E),
        colour=np.array([c for _, _, c in g.edges], dtype=np.int8 if spec.K < 128 else np.int32).reshape(E),
        birth_generation=np.zeros(len(g.vertices), dtype=np.int32),
        birth_type=birth_type,
        origin=np.full(len(g.vertices), -1, dtype=np.int64),
        types=types,
        type_index=type_index,
        vertex_names=list(g.vertices),
        interior_names=tables.interior_names,
        K=spec.K,
        planted_pair=planted,
    )


def substitute_once(g: GeneratedGraph, tables: RuleTables) -> GeneratedGraph:
    """Replace every edge by a fresh copy of its colour's rule graph."""
    E = g.n_edges
    if E == 0:
        return GeneratedGraph(**{**g.__dict__, "generation": g.generation + 1})
    C = g.colour.astype(np.int64)
    ni = tables.n_interior[C]
    ne = tables.n_edges[C]
    vbase = g.n_vertices + np.cumsum(ni) - ni
    new_vertices = int(ni.sum())
    total_edges = int(ne.sum())
    V = g.n_vertices + new_vertices
    dt = _id_dtype(max(V, total_edges))

    rows = np.repeat(np.arange(E, dtype=np.int64), ne)
    ebase = np.cumsum(ne) - ne
    k = np.arange(total_edges, dtype=np.int64) - np.repeat(ebase, ne)
    flat = tables.edge_offset[C[rows]] + k
    tail_old = g.tail.astype(np.int64)[rows]
    head_old = g.head.astype(np.int64)[rows]
    base = vbase[rows]

    def place(local):
        out = base + local - 2
        out = np.where(local == 0, tail_old, out)
        out = np.where(local == 1, head_old, out)
        return out.astype(dt)

    new_tail = place(tables.src[flat])
    new_head = place(tables.dst[flat])
    new_colour = tables.col[flat].astype(g.colour.dtype)

    vrows = np.repeat(np.arange(E, dtype=np.int64), ni)
    t_local = np.arange(new_vertices, dtype=np.int64) - np.repeat(np.cumsum(ni) - ni, ni)
    origin_new = tables.interior_offset[C[vrows]] + t_local
    interior_type_ids = np.array(
        [g.type_index[u] for u in tables.interior_type], dtype=np.int64
    ).reshape(len(tables.interior_type))
    type_new = interior_type_ids[origin_new] if new_vertices else np.zeros(0, dtype=np.int64)

    return GeneratedGraph(
        generation=g.generation + 1,
        n_vertices=V,
        tail=new_tail,
        head=new_head,
        colour=new_colour,
        birth_generation=np.concatenate(
            [g.birth_generation, np.full(new_vertices, g.generation + 1, dtype=np.int32)]
        ),
        birth_type=np.concatenate([g.birth_type, type_new]),
        origin=np.concatenate([g.origin, origin_new]),
        types=g.types,
        type_index=g.type_index,
        vertex_names=g.vertex_names,
        interior_names=g.interior_names,
        K=g.K,
        planted_pair=g.planted_pair,
    )


def projected_edge_count(spec: IgsSpec, n: int) -> int:
    """``||chi(Xi^0) M^n||_1`` computed exactly."""
    M = mass_matrix(spec)
    v = initial_row(spec)
    for _ in range(n):
        v = vec_mat(v, M)
    return sum(v)


def iterate(spec: IgsSpec, n: int, budget: int = DEFAULT_EDGE_BUDGET) -> GeneratedGraph:
    """Materialise ``Xi^n``; refuses when the projected edge count exceeds ``budget``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    projected = projected_edge_count(spec, n)
    if projected > budget:
        raise BudgetExceeded(f"Xi^{n} would have {projected} edges (budget {budget})")
    tables = RuleTables(spec)
    g = initial_graph(spec, tables)
    for _ in range(n):
        g = substitute_once(g, tables)
    return g


# ---------------------------------------------------------------------------
# graph-level oracles


def _simple_adjacency(g: GeneratedGraph):
    V = g.n_vertices
    data = np.ones(g.n_edges, dtype=np.int8)
    A = coo_matrix((data, (g.tail.astype(np.int64), g.head.astype(np.int64))), shape=(V, V)).tocsr()
    A.data[:] = 1
    return A


def planted_distance(g: GeneratedGraph) -> int:
    """Undirected BFS distance between the two planted vertices."""
    if g.planted_pair is None:
        raise ValueError("graph has no planted pair (explicit initial graph)")
    s, t = g.planted_pair
    d = shortest_path(_simple_adjacency(g), directed=False, unweighted=True, indices=[s])[0, t]
    if not math.isfinite(d):
        raise ValueError("planted vertices are disconnected")
    return int(d)


def diameter(g: GeneratedGraph) -> int:
    """Exact diameter by all-pairs BFS (small graphs only)."""
    D = shortest_path(_simple_adjacency(g), directed=False, unweighted=True)
    if not np.isfinite(D).all():
        raise ValueError("graph is disconnected")
    return int(D.max())


def degrees(g: GeneratedGraph) -> np.ndarray:
    """Degrees in the underlying undirected multigraph."""
    V = g.n_vertices
    return (np.bincount(g.tail, minlength=V) + np.bincount(g.head, minlength=V)).astype(np.int64)


def kappa_vectors(g: GeneratedGraph) -> np.ndarray:
    """``V x 2K`` array of out/in colour counts of every vertex."""
    V, K = g.n_vertices, g.K
    c = g.colour.astype(np.int64) - 1
    out = np.bincount(g.tail.astype(np.int64) * K + c, minlength=V * K).reshape(V, K)
    inc = np.bincount(g.head.astype(np.int64) * K + c, minlength=V * K).reshape(V, K)
    kap = np.empty((V, 2 * K), dtype=np.int64)
    kap[:, 0::2] = out
    kap[:, 1::2] = inc
    return kap


def degree_histogram(g: GeneratedGraph) -> dict[int, int]:
    counts = Counter(degrees(g).tolist())
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# export


def write_edge_list(g: GeneratedGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t, h, c in zip(g.tail.tolist(), g.head.tolist(), g.colour.tolist()):
            fh.write(f"{t} {h} {c}\n")


def write_provenance(g: GeneratedGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in range(g.n_vertices):
            u = ",".join(map(str, g.birth_kappa(v)))
            fh.write(f"{v} {int(g.birth_generation[v])} {u} {g.origin_label(v)}\n")
