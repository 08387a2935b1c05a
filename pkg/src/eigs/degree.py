"""Degree scaling limit structure: birth types, dominance, birth counts,
limit constants, degree classes, degree dimension and spectrum, and exact
degree histograms computed without building the graph.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .model import IgsSpec, kappa
from .spectral import (
    GrowthDescriptor,
    condensation,
    degree_matrix,
    growth_descriptor,
    initial_row,
    mass_matrix,
    pair_growth,
    rho_equal,
    vec_mat,
)

__all__ = [
    "BirthType",
    "DegreeClass",
    "DegreeAnalysis",
    "NotApplicable",
    "AmbiguousClassification",
    "birth_types",
    "birth_count",
    "analyze_degree",
    "combinatorial_histogram",
    "histogram_with_provenance",
    "degree_of",
]

CLASS_TOL = 1e-6
CLASS_DEAD_ZONE = 1e-3
SPECTRUM_TOL = 1e-9


class NotApplicable(ValueError):
    """Degree analysis needs a dominant degree growth rate above one."""


class AmbiguousClassification(ArithmeticError):
    """An integrality defect fell between the accept and reject thresholds."""


@dataclass
class BirthType:
    u: tuple[int, ...]
    b: tuple[int, ...]
    initial_count: int
    mu: int | None = None
    lam: float = 0.0
    tau: int = 0
    growth: GrowthDescriptor | None = None
    dominant: bool = False
    surviving: bool = False
    alpha: float | None = None
    lambda_M_deg: float = 0.0
    q: int = 0

    @property
    def c_deg(self) -> float:
        return self.growth.constant if self.growth else 0.0


@dataclass
class DegreeClass:
    members: list  # list of BirthType
    shifts: list  # integer s with alpha(u) = alpha_K * Lambda_U**s
    alpha: float
    eff_rate: float
    q: int


@dataclass
class DegreeAnalysis:
    types: list
    lambda_U: float
    tau_deg: int
    C_deg: float
    classes: list
    spectrum: list
    bedm: bool
    multiscale_free: bool
    scale_free: bool
    dimension: float | None
    dimension_reason: str = ""
    diagnostics: dict = field(default_factory=dict)


def _reachable_colours(M, support) -> set[int]:
    seen = set(support)
    todo = list(support)
    while todo:
        a = todo.pop()
        for b, x in enumerate(M[a]):
            if x > 0 and b not in seen:
                seen.add(b)
                todo.append(b)
    return seen


def birth_types(spec: IgsSpec) -> list[BirthType]:
    """Types of the initial vertices and of interior vertices of reachable rules.

    Order: initial graph vertices first, then rule interiors by colour; the
    zero vector is dropped.
    """
    K = spec.K
    M = mass_matrix(spec)
    x0 = initial_row(spec)
    reach = _reachable_colours(M, [a for a in range(K) if x0[a] > 0])
    order: list[tuple[int, ...]] = []
    b: dict[tuple, list[int]] = defaultdict(lambda: [0] * K)
    init: dict[tuple, int] = defaultdict(int)
    g0 = spec.start_graph()
    for v in g0.vertices:
        u = kappa(g0, v, K)
        if any(u):
            if u not in init and u not in b:
                order.append(u)
            init[u] += 1
    for r in spec.rules:
        for v in r.interior:
            u = kappa(r.graph, v, K)
            if not any(u):
                continue
            if r.colour - 1 in reach and u not in init and u not in b:
                order.append(u)
            b[u][r.colour - 1] += 1
    return [BirthType(u, tuple(b[u]) if u in b else (0,) * K, init.get(u, 0)) for u in order]


def birth_count(spec_or_rows, b, m: int, initial_count: int = 0) -> int:
    """``B_u(m) = x0 M^(m-1) b^T`` for ``m >= 1``; the initial count at ``m = 0``."""
    if m == 0:
        return initial_count
    x0, M = spec_or_rows if isinstance(spec_or_rows, tuple) else (initial_row(spec_or_rows), mass_matrix(spec_or_rows))
    v = x0
    for _ in range(m - 1):
        v = vec_mat(v, M)
    return sum(x * y for x, y in zip(v, b))


def degree_of(u, N, steps: int) -> int:
    v = tuple(u)
    for _ in range(steps):
        v = vec_mat(v, N)
    return sum(v)


def _first_generation(t: BirthType, x0, M, K) -> int | None:
    if t.initial_count:
        return 0
    v = x0
    for m in range(1, K + 1):
        if sum(x * y for x, y in zip(v, t.b)) > 0:
            return m
        v = vec_mat(v, M)
    return None


def _survives(t: BirthType, formM, support) -> bool:
    """Some host colour of ``t`` is reachable through a cyclic block of ``M``."""
    hosts = {formM.block_of[a] for a, x in enumerate(t.b) if x > 0}
    if not hosts:
        return False
    start = {formM.block_of[a] for a in support}
    reach_from_start = set().union(*(formM.reachable_blocks(k) for k in start))
    for k in reach_from_start:
        if formM.blocks[k].rho > 0 and formM.reachable_blocks(k) & hosts:
            return True
    return False


def _dedupe(values, tol=SPECTRUM_TOL):
    out: list[float] = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol * max(1.0, abs(v)):
            out.append(v)
    return out


def _classify(surviving: list[BirthType], lam_U: float) -> list[DegreeClass]:
    log_L = math.log(lam_U)
    reps: list[tuple[BirthType, list, list]] = []
    for t in sorted(surviving, key=lambda t: t.u):
        placed = False
        for rep, members, shifts in reps:
            x = math.log(t.alpha / rep.alpha) / log_L
            defect = abs(x - round(x))
            if defect < CLASS_TOL:
                members.append(t)
                shifts.append(int(round(x)))
                placed = True
                break
            if defect <= CLASS_DEAD_ZONE:
                raise AmbiguousClassification(
                    f"types {rep.u} and {t.u}: integrality defect {defect:.3e} "
                    f"in [{CLASS_TOL}, {CLASS_DEAD_ZONE}]; review the tolerance")
        if not placed:
            reps.append((t, [t], [0]))
    classes = []
    for rep, members, shifts in reps:
        eff = max(t.lambda_M_deg for t in members)
        q = max(t.q for t in members if rho_equal(t.lambda_M_deg, eff))
        classes.append(DegreeClass(members, shifts, rep.alpha, eff, q))
    classes.sort(key=lambda c: (c.eff_rate, c.alpha))
    return classes


def analyze_degree(spec: IgsSpec, *, rtol: float = 1e-9, n_max: int = 400) -> DegreeAnalysis:
    K = spec.K
    M = mass_matrix(spec)
    N = degree_matrix(spec)
    x0 = initial_row(spec)
    formM = condensation(M)
    formN = condensation(N)
    support = [a for a in range(K) if x0[a] > 0]
    types = birth_types(spec)
    for t in types:
        t.growth = growth_descriptor(N, t.u, formN, rtol=rtol, n_max=n_max)
        t.lam = t.growth.rate
        t.tau = t.growth.poly_exponent + 1
        t.mu = _first_generation(t, x0, M, K)
    lam_U = max(t.lam for t in types)
    tau_deg = max(t.tau for t in types if rho_equal(t.lam, lam_U))
    if lam_U <= 1 + 1e-9:
        raise NotApplicable(f"dominant degree growth rate is {lam_U:g} (needs > 1)")
    for t in types:
        t.dominant = rho_equal(t.lam, lam_U) and t.tau == tau_deg
    dominant = [t for t in types if t.dominant and t.mu is not None]
    C_deg = max(t.c_deg * lam_U ** (-t.mu) for t in dominant)
    for t in dominant:
        t.alpha = t.c_deg / C_deg
        t.surviving = _survives(t, formM, support)
        if t.surviving:
            hosts = [a for a, x in enumerate(t.b) if x > 0]
            rate, poly = pair_growth(formM, support, hosts)
            t.lambda_M_deg, t.q = rate, poly + 1
    surviving = [t for t in dominant if t.surviving]
    if not surviving:
        raise NotApplicable("no dominant birth type survives")
    classes = _classify(surviving, lam_U)
    spectrum = _dedupe(math.log(c.eff_rate) / math.log(lam_U) for c in classes if c.eff_rate > 0)
    bedm = len(_dedupe(c.eff_rate for c in classes)) > 1
    multi = 1 < len(spectrum)
    if bedm != multi:
        raise AssertionError("BEDM flag disagrees with multiscale-freeness")
    top = max(c.eff_rate for c in classes)
    scale_free = (not bedm) and top > 1 + 1e-9
    if scale_free:
        dim, why = math.log(top) / math.log(lam_U), ""
    elif bedm:
        dim, why = None, "BEDM holds: several effective mass growth rates"
    else:
        dim, why = None, "effective mass growth rate is not above one"
    diag = {
        "divergent_constants": [list(t.u) for t in types if t.growth.divergent],
    }
    return DegreeAnalysis(types, lam_U, tau_deg, C_deg, classes, spectrum, bedm, multi,
                          scale_free, dim, why, diag)


# ---------------------------------------------------------------------------
# exact histograms


def _type_list(spec: IgsSpec):
    """(u, b, initial_count) over every non-zero type, reachable or not (zero counts are harmless)."""
    return [(t.u, t.b, t.initial_count) for t in birth_types(spec)]


def histogram_with_provenance(spec: IgsSpec, n: int):
    """``{degree: {(u, m): count}}`` for ``Xi^n``, from birth counts and ``N`` powers."""
    if n < 0:
        raise ValueError("n must be non-negative")
    K = spec.K
    M = mass_matrix(spec)
    N = degree_matrix(spec)
    x0 = initial_row(spec)
    out: dict[int, dict] = defaultdict(lambda: defaultdict(int))
    g0 = spec.start_graph()
    for v in g0.vertices:  # isolated initial vertices included
        u = kappa(g0, v, K)
        out[degree_of(u, N, n)][(u, 0)] += 1
    types = _type_list(spec)
    row = x0
    for m in range(1, n + 1):
        for u, b, _ in types:
            c = sum(x * y for x, y in zip(row, b))
            if c:
                out[degree_of(u, N, n - m)][(u, m)] += c
        row = vec_mat(row, M)
    return {d: dict(v) for d, v in sorted(out.items())}


def combinatorial_histogram(spec: IgsSpec, n: int) -> dict[int, int]:
    prov = histogram_with_provenance(spec, n)
    return {d: sum(v.values()) for d, v in prov.items()}
