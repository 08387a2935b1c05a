"""Distance growth rates, the local primitive stability check, distance layers,
Hausdorff dimensions and the coarse fractal spectrum.

Colours are 1-based in the public API; the trim index sets and matrices are
0-based internally.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import IgsSpec
from .spectral import (
    RHO_RTOL,
    BudgetExceeded,
    ChoiceFamily,
    choice_family,
    condensation,
    mass_matrix,
    perron_vector,
    reachability,
    rho_equal,
    submatrix,
)

__all__ = [
    "BellmanState",
    "StabilityReport",
    "DistanceLayer",
    "DistanceAnalysis",
    "trim_set",
    "bellman_iterates",
    "bellman_lambda",
    "brute_force_min_product",
    "check_primitive_stability",
    "bellman_residual",
    "distance_layer",
    "hausdorff_dimension",
    "fractal_spectrum",
    "analyze_distance",
    "DegenerateScaling",
]

CHOICE_BUDGET = 100_000
SPECTRUM_TOL = 1e-9


class DegenerateScaling(ValueError):
    """The distance rate is not above one, so no metric rescaling exists."""


def trim_set(cf: ChoiceFamily, j: int) -> tuple[int, ...]:
    """``R_j``: colours (0-based) reachable from ``j`` using rows of any choice matrix."""
    K = len(cf.rows)
    succ = [sorted({b for d in cf.rows[a] for b in range(K) if d[b] > 0}) for a in range(K)]
    seen = {j - 1}
    todo = [j - 1]
    while todo:
        a = todo.pop()
        for b in succ[a]:
            if b not in seen:
                seen.add(b)
                todo.append(b)
    return tuple(sorted(seen))


def _bellman_step(cf: ChoiceFamily, R, y: dict[int, int]) -> dict[int, int]:
    return {a: min(sum(d[b] * y[b] for b in R if d[b]) for d in cf.rows[a]) for a in R}


def bellman_iterates(cf: ChoiceFamily, j: int, n: int) -> list[int]:
    """``[y_0[j], ..., y_n[j]]`` with exact integers."""
    R = trim_set(cf, j)
    y = {a: 1 for a in R}
    out = [1]
    for _ in range(n):
        y = _bellman_step(cf, R, y)
        out.append(y[j - 1])
    return out


@dataclass
class BellmanState:
    colour: int
    trim: tuple[int, ...]  # 1-based colours
    rate: float  # Lambda_D(j)
    ratio_estimate: float
    root_estimate: float
    stop: str
    steps: int
    unstable: bool
    exact: bool  # rate taken from the exhaustive min-max over choices
    limit_constant: float | None = None
    ratio_history: list = field(default_factory=list, repr=False)


def _iterate_ratio(cf, j, rtol=1e-9, window=10, n_max=500):
    R = trim_set(cf, j)
    y = {a: 1 for a in R}
    values = [1]
    ratios: list[float] = []
    calm = 0
    stop = "cap"
    n = 0
    for n in range(1, n_max + 1):
        y = _bellman_step(cf, R, y)
        values.append(y[j - 1])
        ratios.append(values[-1] / values[-2])
        if len(ratios) >= 2 and abs(ratios[-1] - ratios[-2]) <= rtol * ratios[-1]:
            calm += 1
            if calm >= window:
                stop = "converged"
                break
        else:
            calm = 0
    est = ratios[-1]
    if stop == "cap" and len(ratios) >= 2:
        # ratio ~ L (1 + p/n): remove the first-order term
        est = n * ratios[-1] - (n - 1) * ratios[-2]
    root = math.exp(math.log(values[-1]) / n)
    return est, root, stop, n, values, ratios


def _choice_space(cf: ChoiceFamily, R):
    return [range(len(cf.rows[a])) for a in R]


def _assemble(cf: ChoiceFamily, R, pick) -> tuple:
    """Trimmed matrix ``[D]_{R x R}`` for the row choice ``pick`` (aligned with ``R``)."""
    return tuple(tuple(cf.rows[a][k][b] for b in R) for a, k in zip(R, pick))


def _enumerate_trims(cf: ChoiceFamily, R, budget):
    size = math.prod(len(cf.rows[a]) for a in R)
    if size > budget:
        raise BudgetExceeded(f"{size} row-choice combinations on the trim (budget {budget})")
    for pick in itertools.product(*_choice_space(cf, R)):
        yield pick, _assemble(cf, R, pick)


def _reachable_max_rho(A, start: int) -> float:
    form = condensation(A)
    _, blocks = reachability(A, start, form)
    return max(form.blocks[k].rho for k in blocks)


def _exact_lambda(cf: ChoiceFamily, j: int, budget: int) -> float:
    R = trim_set(cf, j)
    start = R.index(j - 1)
    best = math.inf
    for _, A in _enumerate_trims(cf, R, budget):
        best = min(best, _reachable_max_rho(A, start))
    return best


def bellman_lambda(spec: IgsSpec, j: int, cf: ChoiceFamily | None = None, *,
                   budget: int = CHOICE_BUDGET, stable: bool | None = None):
    """``Lambda_D(j)`` and the Bellman iteration diagnostics.

    The rate is the exact min-max over row choices on the trim whenever the
    choice space fits ``budget``; the exact-integer Bellman ratio is computed
    alongside as a cross-check and is the fallback otherwise.
    """
    cf = cf or choice_family(spec)
    R = trim_set(cf, j)
    est, root, stop, n, values, ratios = _iterate_ratio(cf, j)
    try:
        rate = _exact_lambda(cf, j, budget)
        exact = True
    except BudgetExceeded:
        rate, exact = est, False
    unstable = stop != "converged"
    limit = _limit_constant(cf, j, rate, n) if stable else None
    state = BellmanState(
        colour=j,
        trim=tuple(a + 1 for a in R),
        rate=rate,
        ratio_estimate=est,
        root_estimate=root,
        stop=stop,
        steps=n,
        unstable=unstable,
        exact=exact,
        limit_constant=limit,
        ratio_history=ratios,
    )
    return rate, state


def _limit_constant(cf, j, rate, n):
    """``y_n[j] / rate**n`` at the last Bellman step."""
    if rate <= 0:
        return None
    y = bellman_iterates(cf, j, n)[-1]
    return math.exp(math.log(y) - n * math.log(rate))


def brute_force_min_product(spec: IgsSpec, j: int, n: int, cf: ChoiceFamily | None = None,
                            budget: int = 200_000) -> int:
    """``min ||xi_j D_1 ... D_n||_1`` over all choice sequences, by explicit set expansion.

    Vectors dominated entrywise by another member are dropped: they can never
    lead to a smaller norm, so the minimum is unchanged.
    """
    cf = cf or choice_family(spec)
    K = len(cf.rows)
    current = {tuple(1 if b == j - 1 else 0 for b in range(K))}
    for _ in range(n):
        nxt: set[tuple[int, ...]] = set()
        for v in current:
            partial = {tuple([0] * K)}
            for a in range(K):
                if not v[a]:
                    continue
                partial = {
                    tuple(p[b] + v[a] * d[b] for b in range(K))
                    for p in partial
                    for d in cf.rows[a]
                }
                if len(partial) > budget:
                    raise BudgetExceeded("brute-force product set too large")
            nxt |= partial
        current = _prune(nxt)
        if len(current) > budget:
            raise BudgetExceeded("brute-force product set too large")
    return min(sum(v) for v in current)


def _prune(vectors: set) -> set:
    vs = sorted(vectors, key=sum)
    kept: list[tuple[int, ...]] = []
    for v in vs:
        if not any(all(k[b] <= v[b] for b in range(len(v))) for k in kept):
            kept.append(v)
    return set(kept)


# ---------------------------------------------------------------------------
# local primitive stability


@dataclass
class StabilityReport:
    colour: int
    stable: bool
    reason: str
    minimizers: int
    primitive_minimizers: int
    certificate: dict | None = None  # row choice (1-based colour -> row vector)
    fixed_point_residual: float | None = None


def _is_primitive(A) -> bool:
    form = condensation(A)
    return form.h == 1 and form.blocks[0].primitive


def _bellman_operator(cf: ChoiceFamily, R, v: np.ndarray) -> np.ndarray:
    out = np.empty(len(R))
    for i, a in enumerate(R):
        out[i] = min(sum(d[b] * v[k] for k, b in enumerate(R)) for d in cf.rows[a])
    return out


def bellman_residual(cf: ChoiceFamily, j: int, A, rate: float) -> float:
    """``||F(v*) - rate v*||_inf / ||v*||_inf`` for the right Perron vector of ``A``."""
    R = trim_set(cf, j)
    _, v = perron_vector(A, side="right")
    Fv = _bellman_operator(cf, R, v)
    return float(np.max(np.abs(Fv - rate * v)) / np.max(np.abs(v)))


def check_primitive_stability(spec: IgsSpec, j: int, rate: float | None = None,
                              cf: ChoiceFamily | None = None, *,
                              budget: int = CHOICE_BUDGET) -> StabilityReport:
    cf = cf or choice_family(spec)
    if rate is None:
        rate, _ = bellman_lambda(spec, j, cf, budget=budget)
    R = trim_set(cf, j)
    Rset = set(R)
    start = R.index(j - 1)
    minimizers = []
    for pick, A in _enumerate_trims(cf, R, budget):
        for a, k in zip(R, pick):
            support = {b for b, x in enumerate(cf.rows[a][k]) if x > 0}
            assert support <= Rset, "trim is not forward invariant"
        form = condensation(A)
        _, blocks = reachability(A, start, form)
        rho = max(form.blocks[k].rho for k in blocks)
        if rho_equal(rho, rate):
            minimizers.append((pick, A, form))
    if not minimizers:
        raise ArithmeticError(f"colour {j}: no trimmed matrix attains rate {rate}")
    primitive = [(p, A) for p, A, f in minimizers if f.h == 1 and f.blocks[0].primitive]
    report = StabilityReport(j, False, "", len(minimizers), len(primitive))
    if not primitive:
        report.reason = "no minimizing trimmed matrix is primitive"
        return report
    for pick, A in primitive:  # lexicographic order of row choices
        if _replacements_primitive(cf, R, pick):
            report.stable = True
            report.reason = "primitive minimizer stable under single-row replacement"
            report.certificate = {
                str(a + 1): list(cf.rows[a][k]) for a, k in zip(R, pick)
            }
            report.fixed_point_residual = bellman_residual(cf, j, A, rate)
            return report
    report.reason = "every primitive minimizer loses primitivity after a single-row replacement"
    return report


def _replacements_primitive(cf, R, pick) -> bool:
    for pos, a in enumerate(R):
        for alt in range(len(cf.rows[a])):
            if alt == pick[pos]:
                continue
            trial = list(pick)
            trial[pos] = alt
            if not _is_primitive(_assemble(cf, R, trial)):
                return False
    return True


# ---------------------------------------------------------------------------
# layers and dimensions


@dataclass
class DistanceLayer:
    colour: int
    lambda_D: float
    I_dist: tuple[int, ...]  # 1-based
    M_dist: tuple
    lambda_M_surv: float
    M_dist_primitive_frobenius: bool
    M_dist_blocks: list


def distance_layer(spec: IgsSpec, j: int, rates: dict[int, float]) -> DistanceLayer:
    M = mass_matrix(spec)
    reach, _ = reachability(M, j - 1)
    I = tuple(sorted(a for a in reach if rho_equal(rates[a + 1], rates[j])))
    Md = submatrix(M, I)
    form = condensation(Md)
    _, blocks = reachability(Md, I.index(j - 1), form)
    surv = max(form.blocks[k].rho for k in blocks)
    block_list = [
        {"members": [I[i] + 1 for i in b.members], "rho": b.rho, "primitive": b.primitive}
        for b in form.blocks
    ]
    return DistanceLayer(j, rates[j], tuple(a + 1 for a in I), Md, surv,
                         form.primitive_frobenius, block_list)


def hausdorff_dimension(layer: DistanceLayer, tol: float = RHO_RTOL) -> float:
    if layer.lambda_D <= 1 + tol:
        raise DegenerateScaling(f"colour {layer.colour}: distance rate {layer.lambda_D} <= 1")
    return math.log(layer.lambda_M_surv) / math.log(layer.lambda_D)


def dedupe(values, tol: float = SPECTRUM_TOL) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol * max(1.0, abs(v)):
            out.append(v)
    return out


def fractal_spectrum(dims: dict[int, float], layers: dict[int, DistanceLayer], iota: int):
    """Spectrum over the distance layer of ``iota`` with the multifractal and BDDM flags."""
    I = layers[iota].I_dist
    spectrum = dedupe(dims[j] for j in I)
    surv = dedupe(layers[j].lambda_M_surv for j in I)
    multifractal = 1 < len(spectrum)
    bddm = 1 < len(surv)
    if multifractal != bddm:
        raise AssertionError("multifractal flag disagrees with the BDDM condition")
    return spectrum, multifractal, bddm


@dataclass
class DistanceAnalysis:
    rates: dict
    states: dict
    stability: dict
    layers: dict
    dims: dict
    spectrum: list
    multifractal: bool
    bddm: bool


def analyze_distance(spec: IgsSpec, cf: ChoiceFamily | None = None, *,
                     budget: int = CHOICE_BUDGET) -> DistanceAnalysis:
    cf = cf or choice_family(spec)
    M = mass_matrix(spec)
    iota = spec.initial_colour
    reach, _ = reachability(M, iota - 1)
    colours = sorted(a + 1 for a in reach)
    rates, states, stability = {}, {}, {}
    for j in colours:
        rate, state = bellman_lambda(spec, j, cf, budget=budget)
        stab = check_primitive_stability(spec, j, rate, cf, budget=budget)
        if stab.stable:
            state.limit_constant = _limit_constant(cf, j, rate, state.steps)
        rates[j], states[j], stability[j] = rate, state, stab
    layers = {j: distance_layer(spec, j, rates) for j in colours}
    dims = {j: hausdorff_dimension(layers[j]) for j in colours}
    spectrum, multi, bddm = fractal_spectrum(dims, layers, iota)
    return DistanceAnalysis(rates, states, stability, layers, dims, spectrum, multi, bddm)
