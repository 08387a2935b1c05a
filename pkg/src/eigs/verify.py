"""Cross-oracle suite: every closed-form count is compared against the
explicitly generated graphs for ``n = 0..n_max``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .degree import birth_types, birth_count, combinatorial_histogram
from .distance import bellman_iterates, brute_force_min_product
from .model import IgsSpec, validate
from .spectral import (
    BudgetExceeded,
    choice_family,
    condensation,
    degree_matrix,
    initial_row,
    mass_matrix,
    vec_mat,
)

__all__ = ["CheckResult", "run_oracles", "block_properties"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    counterexample: dict | None = field(default=None, repr=False)


def _edge_count(spec, g, n, ctx):
    expected = ctx["edges"][n]
    if g.n_edges != expected:
        return {"n": n, "edges": g.n_edges, "expected": expected}


def _vertex_count(spec, g, n, ctx):
    expected = g_vertices0 = len(spec.start_graph().vertices)
    for t in ctx["types"]:
        for m in range(1, n + 1):
            expected += birth_count(ctx["x0M"], t.b, m)
    if g.n_vertices != expected:
        return {"n": n, "vertices": g.n_vertices, "expected": expected, "initial": g_vertices0}


def _degrees(spec, g, n, ctx):
    """kappa of every vertex equals its birth kappa times N^(n-m)."""
    N = ctx["N"]
    kap = engine.kappa_vectors(g)
    keys = np.stack([g.birth_type, g.birth_generation.astype(np.int64)], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    table = np.zeros((len(uniq), kap.shape[1]), dtype=np.int64)
    for r, (t, m) in enumerate(uniq.tolist()):
        v = g.types[t]
        for _ in range(n - m):
            v = vec_mat(v, N)
        table[r] = v
    expected = table[inverse.reshape(-1)]
    bad = np.nonzero((expected != kap).any(axis=1))[0]
    if bad.size:
        v = int(bad[0])
        return {
            "n": n,
            "vertex": v,
            "birth_generation": int(g.birth_generation[v]),
            "birth_type": list(g.birth_kappa(v)),
            "kappa": kap[v].tolist(),
            "expected": expected[v].tolist(),
        }


def _planted(spec, g, n, ctx):
    if g.planted_pair is None:
        return None
    bfs = engine.planted_distance(g)
    bell = ctx["bellman"][n]
    brute = brute_force_min_product(spec, spec.initial_colour, n, ctx["cf"])
    if not bfs == bell == brute:
        return {"n": n, "bfs": bfs, "bellman": bell, "brute_force": brute}


def _histogram(spec, g, n, ctx):
    explicit = engine.degree_histogram(g)
    formula = combinatorial_histogram(spec, n)
    if explicit != formula:
        diff = {d: [explicit.get(d, 0), formula.get(d, 0)]
                for d in sorted(set(explicit) | set(formula))
                if explicit.get(d, 0) != formula.get(d, 0)}
        return {"n": n, "degree: [explicit, combinatorial]": diff}


CHECKS = [
    ("edge count = ||x0 M^n||_1", _edge_count),
    ("vertex count = initial + births", _vertex_count),
    ("vertex kappa = birth kappa N^(n-m)", _degrees),
    ("planted BFS = Bellman = brute force", _planted),
    ("combinatorial histogram = explicit histogram", _histogram),
]


def _refines(fine, coarse_block_of, project=lambda i: i) -> dict | None:
    for b in fine.blocks:
        owners = {coarse_block_of[project(i)] for i in b.members}
        if len(owners) != 1:
            return {"block": [i + 1 for i in b.members], "spans": sorted(o + 1 for o in owners)}
    return None


def block_properties(spec: IgsSpec, cf=None, product_limit: int = 20_000) -> list[CheckResult]:
    """Block containment of every assembled choice matrix and of ``N`` in the blocks of ``M``."""
    cf = cf or choice_family(spec)
    M = mass_matrix(spec)
    N = degree_matrix(spec)
    fM = condensation(M)
    fN = condensation(N)
    out = []
    bad = None
    checked = 0
    try:
        for rows in cf.matrices(product_limit):
            fD = condensation(rows)
            checked += 1
            cex = _refines(fD, fM.block_of)
            if cex is None and fD.h < fM.h:
                cex = {"h_D": fD.h, "h_M": fM.h}
            if cex is not None:
                bad = {"D": [list(r) for r in rows], **cex}
                break
        out.append(CheckResult("h_D >= h_M, D blocks inside M blocks", bad is None,
                               f"{checked} choice matrices", bad))
    except BudgetExceeded as exc:
        out.append(CheckResult("h_D >= h_M, D blocks inside M blocks", False, str(exc)))
    cex = None
    for a, row in enumerate(N):
        for b, x in enumerate(row):
            if x > 0 and M[a // 2][b // 2] == 0:
                cex = {"N_entry": [a + 1, b + 1]}
                break
        if cex:
            break
    if cex is None:
        cex = _refines(fN, fM.block_of, project=lambda i: i // 2)
    if cex is None and fN.h < fM.h:
        cex = {"h_N": fN.h, "h_M": fM.h}
    out.append(CheckResult("h_N >= h_M, N blocks project into M blocks", cex is None, "", cex))
    return out


def run_oracles(spec: IgsSpec, n_max: int = 5,
                budget: int = engine.DEFAULT_EDGE_BUDGET) -> list[CheckResult]:
    """Run every identity for ``n = 0..n_max``; stops at the first structural failure."""
    problems = validate(spec)
    if problems:
        return [CheckResult("validate", False, f"{len(problems)} violation(s)",
                            {"violations": problems})]
    results = [CheckResult("validate", True)]
    cf = choice_family(spec)
    M = mass_matrix(spec)
    x0 = initial_row(spec)
    edges = [sum(x0)]
    v = x0
    for _ in range(n_max):
        v = vec_mat(v, M)
        edges.append(sum(v))
    ctx = {
        "cf": cf,
        "N": degree_matrix(spec),
        "x0M": (x0, M),
        "types": birth_types(spec),
        "edges": edges,
        "bellman": bellman_iterates(cf, spec.initial_colour, n_max),
    }
    first: dict[str, dict] = {}
    tables = engine.RuleTables(spec)
    g = None
    for n in range(n_max + 1):
        if edges[n] > budget:
            raise BudgetExceeded(f"Xi^{n} would have {edges[n]} edges (budget {budget})")
        g = engine.initial_graph(spec, tables) if g is None else engine.substitute_once(g, tables)
        for name, check in CHECKS:
            if name in first:
                continue
            cex = check(spec, g, n, ctx)
            if cex is not None:
                first[name] = cex
    for name, _ in CHECKS:
        results.append(CheckResult(name, name not in first, f"n = 0..{n_max}", first.get(name)))
    results.extend(block_properties(spec, cf))
    return results
