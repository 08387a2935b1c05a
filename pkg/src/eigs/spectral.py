"""Matrix machinery: mass/degree matrices, path choice families, Frobenius
normal forms of non-negative integer matrices and asymptotic growth of
``||u X^n||_1``.

Integer matrices are plain nested tuples of Python ints so that powers are
exact at any size; floating point is confined to Perron roots and limit
constants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import IgsSpec, chi, kappa

__all__ = [
    "RHO_RTOL",
    "BudgetExceeded",
    "ConvergenceError",
    "Block",
    "FrobeniusForm",
    "ChoiceFamily",
    "GrowthDescriptor",
    "mass_matrix",
    "degree_matrix",
    "choice_family",
    "condensation",
    "spectral_radius",
    "perron_vector",
    "reachability",
    "kappa_chain",
    "growth_descriptor",
    "rho_equal",
    "vec_mat",
    "mat_mul",
    "submatrix",
    "initial_row",
]

RHO_RTOL = 1e-9


class BudgetExceeded(RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""


class ConvergenceError(RuntimeError):
    pass


Matrix = tuple  # tuple[tuple[int, ...], ...]


def _as_matrix(X) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in X)


def vec_mat(v: Sequence[int], X: Matrix) -> tuple[int, ...]:
    """Exact row-vector times matrix."""
    n = len(X[0]) if X else 0
    out = [0] * n
    for a, va in enumerate(v):
        if va:
            row = X[a]
            for b in range(n):
                if row[b]:
                    out[b] += va * row[b]
    return tuple(out)


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    return tuple(vec_mat(row, B) for row in A)


def submatrix(X: Matrix, idx: Sequence[int]) -> Matrix:
    return tuple(tuple(X[a][b] for b in idx) for a in idx)


def rho_equal(a: float, b: float, rtol: float | None = None) -> bool:
    """Relative-tolerance equality for spectral radii; warns on near ties.

    ``rtol`` defaults to the module-level :data:`RHO_RTOL` at call time.
    """
    if rtol is None:
        rtol = RHO_RTOL
    scale = max(abs(a), abs(b), 1e-300)
    diff = abs(a - b) / scale
    if diff <= rtol:
        return True
    if diff <= 10 * rtol:
        warnings.warn(f"spectral radii {a!r} and {b!r} differ by {diff:.2e}, "
                      "close to the equality tolerance", RuntimeWarning, stacklevel=2)
    return False


# ---------------------------------------------------------------------------
# matrices of a system


def mass_matrix(spec: IgsSpec) -> Matrix:
    """Row ``i`` is the colour-count vector of rule ``i``."""
    return tuple(chi(r.graph, spec.K) for r in spec.rules)


def degree_matrix(spec: IgsSpec) -> Matrix:
    """Rows ``2i-1, 2i`` hold the out/in colour counts of the two planting vertices of rule ``i``."""
    rows = []
    for r in spec.rules:
        rows.append(kappa(r.graph, r.beta_plus, spec.K))
        rows.append(kappa(r.graph, r.beta_minus, spec.K))
    return tuple(rows)


def initial_row(spec: IgsSpec) -> tuple[int, ...]:
    """Colour counts of the initial graph (the basis vector of the initial colour by default)."""
    return chi(spec.start_graph(), spec.K)


@dataclass(frozen=True)
class ChoiceFamily:
    """Per colour, the distinct colour-count vectors of simple planting-to-planting paths."""

    rows: tuple[tuple[tuple[int, ...], ...], ...]

    def options(self, colour: int) -> tuple[tuple[int, ...], ...]:
        return self.rows[colour - 1]

    @property
    def product_size(self) -> int:
        return math.prod(len(r) for r in self.rows)

    def matrices(self, limit: int = 100_000):
        """Yield every assembled matrix (Cartesian product of rows)."""
        if self.product_size > limit:
            raise BudgetExceeded(f"choice family has {self.product_size} matrices (> {limit})")
        yield from _product(self.rows)


def _product(rows):
    if not rows:
        yield ()
        return
    for head in rows[0]:
        for tail in _product(rows[1:]):
            yield (head,) + tail


def _simple_path_vectors(rule, K: int, budget: int) -> set[tuple[int, ...]]:
    g = rule.graph
    idx = g.index()
    incident: list[list[tuple[int, int]]] = [[] for _ in g.vertices]
    for t, h, c in g.edges:
        a, b = idx[t], idx[h]
        if a == b:
            continue
        incident[a].append((b, c))
        incident[b].append((a, c))
    start, goal = idx[rule.beta_plus], idx[rule.beta_minus]
    found: set[tuple[int, ...]] = set()
    counts = [0] * K
    visited = [False] * len(g.vertices)
    visited[start] = True
    steps = 0
    # explicit stack of (vertex, next incident position)
    stack = [[start, 0]]
    trail: list[int] = []
    while stack:
        frame = stack[-1]
        v, pos = frame
        if pos == len(incident[v]):
            stack.pop()
            visited[v] = False
            if trail:
                counts[trail.pop() - 1] -= 1
            continue
        frame[1] += 1
        w, c = incident[v][pos]
        if visited[w]:
            continue
        steps += 1
        if steps > budget:
            raise BudgetExceeded(f"colour {rule.colour}: more than {budget} path extensions")
        if w == goal:
            counts[c - 1] += 1
            found.add(tuple(counts))
            counts[c - 1] -= 1
            continue
        visited[w] = True
        counts[c - 1] += 1
        trail.append(c)
        stack.append([w, 0])
    visited[start] = False
    return found


def choice_family(spec: IgsSpec, path_budget: int = 200_000) -> ChoiceFamily:
    """Enumerate simple undirected beta+ -> beta- paths of every rule by DFS.

    Parallel edges of different colours give distinct paths.
    """
    rows = []
    for r in spec.rules:
        vecs = _simple_path_vectors(r, spec.K, path_budget)
        rows.append(tuple(sorted(vecs)))
    return ChoiceFamily(tuple(rows))


# ---------------------------------------------------------------------------
# strongly connected components


def _tarjan(adj: list[list[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            succ = adj[v]
            while pos < len(succ):
                w = succ[pos]
                pos += 1
                if index[w] == -1:
                    work.append((v, pos))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def _period(members: list[int], X: Matrix) -> int:
    """gcd of cycle lengths inside one strongly connected component (0 if acyclic)."""
    inside = set(members)
    level = {members[0]: 0}
    queue = [members[0]]
    g = 0
    for a in queue:
        for b in members:
            if X[a][b] > 0:
                if b not in level:
                    level[b] = level[a] + 1
                    queue.append(b)
                else:
                    g = math.gcd(g, level[a] + 1 - level[b])
    assert set(level) == inside
    return abs(g)


@dataclass(frozen=True)
class Block:
    members: tuple[int, ...]  # 0-based indices
    rho: float
    irreducible: bool
    primitive: bool
    period: int


@dataclass(frozen=True)
class FrobeniusForm:
    """Blocks in topological order (edges only go from earlier to later blocks)."""

    size: int
    blocks: tuple[Block, ...]
    block_of: tuple[int, ...]
    dag: tuple[frozenset[int], ...]  # direct successors of each block

    @property
    def h(self) -> int:
        return len(self.blocks)

    @property
    def primitive_frobenius(self) -> bool:
        return all(b.primitive for b in self.blocks)

    def reachable_blocks(self, block: int) -> frozenset[int]:
        seen = {block}
        todo = [block]
        while todo:
            k = todo.pop()
            for s in self.dag[k]:
                if s not in seen:
                    seen.add(s)
                    todo.append(s)
        return frozenset(seen)

    def order(self) -> tuple[int, ...]:
        return tuple(i for b in self.blocks for i in b.members)

    def to_dict(self) -> dict:
        return {
            "blocks": [
                {
                    "members": [i + 1 for i in b.members],
                    "rho": b.rho,
                    "irreducible": b.irreducible,
                    "primitive": b.primitive,
                }
                for b in self.blocks
            ],
            "dag": [[k + 1, s + 1] for k in range(self.h) for s in sorted(self.dag[k])],
            "primitive_frobenius": self.primitive_frobenius,
        }


def condensation(X) -> FrobeniusForm:
    """SCC condensation of a square non-negative matrix with per-block Perron data."""
    X = _as_matrix(X)
    n = len(X)
    if any(len(row) != n for row in X):
        raise ValueError("matrix must be square")
    adj = [[b for b in range(n) if X[a][b] > 0] for a in range(n)]
    comps = _tarjan(adj)[::-1]  # topological order
    block_of = [0] * n
    for k, comp in enumerate(comps):
        for i in comp:
            block_of[i] = k
    blocks = []
    for comp in comps:
        if len(comp) == 1:
            d = X[comp[0]][comp[0]]
            irreducible = d > 0
            blocks.append(Block(tuple(comp), float(d), irreducible, irreducible, 1 if irreducible else 0))
            continue
        p = _period(comp, X)
        B = submatrix(X, comp)
        blocks.append(Block(tuple(comp), spectral_radius(B), True, p == 1, p))
    dag = [set() for _ in comps]
    for a in range(n):
        for b in adj[a]:
            if block_of[a] != block_of[b]:
                dag[block_of[a]].add(block_of[b])
    return FrobeniusForm(n, tuple(blocks), tuple(block_of), tuple(frozenset(s) for s in dag))


# ---------------------------------------------------------------------------
# Perron roots


def _power_iterate(B: np.ndarray, side: str, rtol: float, max_iter: int):
    n = B.shape[0]
    S = B + np.eye(n)  # primitive whenever B is irreducible
    if side == "right":
        S = S.T
    x = np.ones(n) / n
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = x @ S
        s = y.sum()
        y = y / s
        # Collatz-Wielandt bracket on the shifted matrix
        z = y @ S
        q = z / y
        lo, hi = q.min(), q.max()
        lam = 0.5 * (lo + hi)
        x = y
        if hi - lo <= rtol * lam:
            return lam - 1.0, x, it, hi - lo
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps "
                           f"(residual {hi - lo:.3e})")


def spectral_radius(block, rtol: float = 1e-13, max_iter: int = 200_000) -> float:
    """Perron root of an irreducible (or 1x1) non-negative matrix.

    Power iteration on ``block + I``; the Collatz-Wielandt bracket gives the
    stopping rule.
    """
    B = np.asarray(block, dtype=float)
    if B.shape == (1, 1):
        return float(B[0, 0])
    if not B.any():
        return 0.0
    rho, _, _, _ = _power_iterate(B, "left", rtol, max_iter)
    return float(rho)


def perron_vector(block, side: str = "right", rtol: float = 1e-14, max_iter: int = 200_000):
    """Perron root and positive eigenvector (normalised to sum 1) of an irreducible matrix."""
    B = np.asarray(block, dtype=float)
    if B.shape == (1, 1):
        return float(B[0, 0]), np.ones(1)
    rho, x, _, _ = _power_iterate(B, side, rtol, max_iter)
    return float(rho), x


# ---------------------------------------------------------------------------
# reachability, chains, growth


def reachability(X, i: int, form: FrobeniusForm | None = None):
    """Indices and blocks reachable from index ``i`` (0-based), ``i`` itself included."""
    form = form or condensation(X)
    blocks = form.reachable_blocks(form.block_of[i])
    X = _as_matrix(X)
    seen = {i}
    todo = [i]
    while todo:
        a = todo.pop()
        for b, x in enumerate(X[a]):
            if x > 0 and b not in seen:
                seen.add(b)
                todo.append(b)
    return frozenset(seen), blocks


def _max_rho(form: FrobeniusForm, blocks) -> float:
    return max(form.blocks[k].rho for k in blocks)


def kappa_chain(X, i: int, form: FrobeniusForm | None = None) -> int:
    """Largest number of maximal-radius blocks on one condensation chain from the block of ``i``."""
    form = form or condensation(X)
    start = form.block_of[i]
    reach = form.reachable_blocks(start)
    lam = _max_rho(form, reach)
    best: dict[int, int] = {}
    for k in sorted(reach, reverse=True):  # reverse topological order
        own = 1 if rho_equal(form.blocks[k].rho, lam) else 0
        tail = max((best[s] for s in form.dag[k] if s in reach), default=0)
        best[k] = own + tail
    return best[start]


@dataclass
class GrowthDescriptor:
    """``||u X^n||_1 ~ constant * n**poly_exponent * rate**n``."""

    rate: float
    poly_exponent: int
    constant: float
    stop: str = "converged"
    steps: int = 0
    last_step: float = 0.0
    divergent: bool = False
    history: list = field(default_factory=list, repr=False)


def _log_norm(v) -> float:
    s = sum(v)
    return math.log(s) if s > 0 else -math.inf


def growth_descriptor(
    X,
    u: Sequence[int],
    form: FrobeniusForm | None = None,
    *,
    rtol: float = 1e-9,
    n_max: int = 400,
    keep_history: bool = False,
) -> GrowthDescriptor:
    """Rate, polynomial order and limit constant of ``||u X^n||_1``.

    Rate and polynomial order come from the condensation; the constant is the
    numeric limit of the normalised norms computed with exact integer powers.
    At the iteration cap a Richardson step corrects the ``O(1/n)`` bias left by
    a polynomial factor.
    """
    X = _as_matrix(X)
    form = form or condensation(X)
    support = [a for a, x in enumerate(u) if x > 0]
    if not support or any(x < 0 for x in u):
        raise ValueError("u must be non-negative and non-zero")
    rates = {a: _max_rho(form, form.reachable_blocks(form.block_of[a])) for a in support}
    rate = max(rates.values())
    attaining = [a for a in support if rho_equal(rates[a], rate)]
    poly = max(kappa_chain(X, a, form) for a in attaining) - 1
    if rate <= 0:
        return GrowthDescriptor(rate, poly, 0.0, "nilpotent", 0, 0.0, False)

    log_rate = math.log(rate)
    # periodic blocks can leave the normalised sequence flat for a few steps,
    # so convergence needs a run of small steps longer than any period
    window = 10 + max(b.period or 1 for b in form.blocks)
    v = tuple(u)
    prev = None
    ratios = []
    stop = "cap"
    step = math.inf
    calm = 0
    n = 0
    for n in range(1, n_max + 1):
        v = vec_mat(v, X)
        r = math.exp(_log_norm(v) - poly * math.log(n) - n * log_rate)
        ratios.append(r)
        if prev is not None and r > 0:
            step = abs(r - prev) / r
            calm = calm + 1 if step < rtol else 0
            if calm >= window:
                stop = "converged"
                break
        prev = r
    constant = ratios[-1]
    divergent = False
    if stop == "cap":
        if len(ratios) >= 3 and poly > 0:
            # r_n = c (1 + a/n + ...): eliminate the 1/n term
            constant = n * ratios[-1] - (n - 1) * ratios[-2]
        divergent = not (step < 1e-3)
    return GrowthDescriptor(
        rate=rate,
        poly_exponent=poly,
        constant=constant,
        stop=stop,
        steps=n,
        last_step=step,
        divergent=divergent,
        history=ratios if keep_history else [],
    )


def pair_growth(form: FrobeniusForm, sources, targets):
    """Exact (rate, poly exponent) of ``sum_{a in sources, c in targets} [X^n]_{ac}``.

    DP over the condensation DAG: for each block, the best (max radius, count
    of blocks at that radius) over chains that still reach a target block.
    Returns ``(0.0, 0)`` when no chain through a cyclic block connects them
    (the sum is then eventually zero).
    """
    target_blocks = {form.block_of[c] for c in targets}
    reaches_target: dict[int, bool] = {}
    for k in range(form.h - 1, -1, -1):
        reaches_target[k] = k in target_blocks or any(reaches_target[s] for s in form.dag[k])
    best: dict[int, tuple[float, int]] = {}
    for k in range(form.h - 1, -1, -1):
        if not reaches_target[k]:
            continue
        r = form.blocks[k].rho
        cands = [best[s] for s in form.dag[k] if s in best]
        if k in target_blocks:
            cands.append((-1.0, 0))
        out = None
        for tr, tc in cands:
            if tr < 0 or (r > tr and not rho_equal(r, tr)):
                cand = (r, 1)
            elif rho_equal(r, tr):
                cand = (tr, tc + 1)
            else:
                cand = (tr, tc)
            if out is None or _better(cand, out):
                out = cand
        best[k] = out
    results = [best[form.block_of[a]] for a in sources if form.block_of[a] in best]
    results = [res for res in results if res[0] > 0]
    if not results:
        return 0.0, 0
    top = max(res[0] for res in results)
    count = max(c for r, c in results if rho_equal(r, top))
    return top, count - 1


def _better(a, b) -> bool:
    if rho_equal(a[0], b[0]):
        return a[1] > b[1]
    return a[0] > b[0]


