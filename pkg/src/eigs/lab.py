"""Empirical side: scaled degree levels, per-branch log-log regressions,
distance growth fits, random systems for property tests, and exporters.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .degree import DegreeAnalysis, histogram_with_provenance
from .model import ColouredGraph, IgsSpec, RuleGraph, validate

__all__ = [
    "Level",
    "RegressionResult",
    "RandomSpecParams",
    "UNCLASSIFIED",
    "scaled_levels",
    "class_labels",
    "branch_regression",
    "ols",
    "distance_growth_fit",
    "random_spec",
    "write_levels_csv",
    "write_regressions_csv",
    "write_plot",
]

UNCLASSIFIED = "unclassified"


@dataclass
class Level:
    """One distinct degree value of ``Xi^n``: ``l = degree / max_degree``."""

    degree: int
    max_degree: int
    count: int
    sources: dict = field(default_factory=dict)  # (u, m) -> count

    @property
    def ell(self) -> Fraction:
        return Fraction(self.degree, self.max_degree)

    @property
    def neg_log_l(self) -> float:
        return math.log(self.max_degree) - math.log(self.degree)


@dataclass
class RegressionResult:
    branch: str
    slope: float | None
    intercept: float | None
    r2: float | None
    points: int
    sparse: bool = False


def scaled_levels(spec: IgsSpec, n: int) -> list[Level]:
    """Distinct degree levels of ``Xi^n`` sorted by decreasing ``l``; zero degrees are skipped."""
    prov = histogram_with_provenance(spec, n)
    delta = max(prov)
    out = []
    for d in sorted(prov, reverse=True):
        if d == 0:
            continue
        out.append(Level(d, delta, sum(prov[d].values()), prov[d]))
    return out


def class_labels(analysis: DegreeAnalysis, tol: float = 1e-6) -> dict[tuple, str]:
    """Birth type -> branch label (``class1``, ``class2`` ... in class order).

    Class members get their class; any other dominant type (for example an
    initial vertex, which never recurs) joins the class whose level lattice
    ``alpha_K * Lambda_U**Z`` contains its ``alpha``.
    """
    labels = {}
    log_L = math.log(analysis.lambda_U)
    for k, cls in enumerate(analysis.classes, start=1):
        for t in cls.members:
            labels[t.u] = f"class{k}"
    for t in analysis.types:
        if t.u in labels or not t.dominant or t.alpha is None:
            continue
        for k, cls in enumerate(analysis.classes, start=1):
            x = math.log(t.alpha / cls.alpha) / log_L
            if abs(x - round(x)) < tol:
                labels[t.u] = f"class{k}"
                break
    return labels


def _assign_provenance(level: Level, labels, order) -> str:
    votes: dict[str, int] = {}
    for (u, _m), c in level.sources.items():
        lab = labels.get(u, UNCLASSIFIED)
        votes[lab] = votes.get(lab, 0) + c
    top = max(votes.values())
    # a tie between a class and unlabelled vertices goes to the class
    for lab in order:
        if votes.get(lab) == top:
            return lab
    return UNCLASSIFIED


def _assign_lattice(level: Level, analysis: DegreeAnalysis, tol_frac: float) -> str:
    log_L = math.log(analysis.lambda_U)
    log_l = -level.neg_log_l
    best, best_dist = UNCLASSIFIED, math.inf
    for k, cls in enumerate(analysis.classes, start=1):
        x = (math.log(cls.alpha) - log_l) / log_L
        dist = abs(x - round(x)) * log_L
        if dist < best_dist:
            best, best_dist = f"class{k}", dist
    return best if best_dist <= tol_frac * log_L else UNCLASSIFIED


def ols(x, y):
    """Least squares line; returns (slope, intercept, r^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def branch_regression(levels: list[Level], analysis: DegreeAnalysis, *,
                      method: str = "provenance", head_cutoff: int = 0,
                      min_points: int = 4, lattice_tol: float = 0.10):
    """Assign levels to degree-class branches and fit log P against -log l per branch.

    ``method="provenance"`` gives a level to whichever label (a class, or
    ``unclassified`` for types outside every class lattice) supplies the
    most of its vertices; ``method="lattice"`` uses the nearest point of
    ``alpha_K * Lambda_U**-m``.  The ``head_cutoff`` largest levels of each
    branch are dropped before fitting.
    """
    labels = class_labels(analysis)
    order = [f"class{k}" for k in range(1, len(analysis.classes) + 1)]
    branches: dict[str, list[Level]] = {lab: [] for lab in order + [UNCLASSIFIED]}
    for lev in levels:
        if method == "provenance":
            lab = _assign_provenance(lev, labels, order)
        elif method == "lattice":
            lab = _assign_lattice(lev, analysis, lattice_tol)
        else:
            raise ValueError(f"unknown assignment method {method!r}")
        branches[lab].append(lev)
    results = []
    for lab in order + [UNCLASSIFIED]:
        pts = sorted(branches[lab], key=lambda lv: lv.ell, reverse=True)[head_cutoff:]
        if len(pts) < min_points:
            results.append(RegressionResult(lab, None, None, None, len(pts), sparse=True))
            continue
        x = [lv.neg_log_l for lv in pts]
        y = [math.log(lv.count) for lv in pts]
        slope, icpt, r2 = ols(x, y)
        results.append(RegressionResult(lab, slope, icpt, r2, len(pts)))
    return results, branches


def regression_on_points(points, branch="synthetic") -> RegressionResult:
    """OLS on explicit ``(l, count)`` pairs."""
    x = [-math.log(l) for l, _ in points]
    y = [math.log(c) for _, c in points]
    slope, icpt, r2 = ols(x, y)
    return RegressionResult(branch, slope, icpt, r2, len(points))


def distance_growth_fit(spec: IgsSpec, n_max: int, budget: int | None = None):
    """Fit ``log d(Xi^n) = n log(rate) + c`` on the planted distances for ``n = 1..n_max``."""
    from . import engine  # local: scipy import only when needed

    kwargs = {} if budget is None else {"budget": budget}
    ns, logs = [], []
    for n in range(1, n_max + 1):
        g = engine.iterate(spec, n, **kwargs)
        ns.append(n)
        logs.append(math.log(engine.planted_distance(g)))
    slope, _, r2 = ols(ns, logs)
    return math.exp(slope), r2


# ---------------------------------------------------------------------------
# random systems


@dataclass
class RandomSpecParams:
    seed: int
    colours: tuple[int, int] = (1, 3)  # inclusive range for K
    max_path: int = 3
    max_pendants: int = 2
    max_extra_edges: int = 2
    bias: float = 0.5  # probability that an edge of rule i uses a colour >= i


def _pick_colour(rng, i, K, bias):
    if rng.random() < bias:
        return int(rng.integers(i, K + 1))
    return int(rng.integers(1, K + 1))


def random_spec(params: RandomSpecParams, K: int | None = None) -> IgsSpec:
    """A valid random system; deterministic in ``params.seed``.

    Each rule starts as a planting path of length at least two, then gets
    pendant vertices and extra chords (never loops, never a direct planting edge).
    """
    rng = np.random.default_rng(params.seed)
    if K is None:
        lo, hi = params.colours
        K = int(rng.integers(lo, hi + 1))
    rules = []
    for i in range(1, K + 1):
        length = int(rng.integers(2, params.max_path + 1))
        names = ["p"] + [f"v{k}" for k in range(1, length)] + ["m"]
        edges = []
        for a, b in zip(names, names[1:]):
            if rng.random() < 0.5:
                a, b = b, a
            edges.append((a, b, _pick_colour(rng, i, K, params.bias)))
        for k in range(int(rng.integers(0, params.max_pendants + 1))):
            new = f"w{k}"
            anchor = names[int(rng.integers(0, len(names)))]
            pair = (anchor, new) if rng.random() < 0.5 else (new, anchor)
            names.append(new)
            edges.append((*pair, _pick_colour(rng, i, K, params.bias)))
        for _ in range(int(rng.integers(0, params.max_extra_edges + 1))):
            a, b = (names[int(x)] for x in rng.choice(len(names), size=2, replace=False))
            if {a, b} == {"p", "m"}:
                continue
            edges.append((a, b, _pick_colour(rng, i, K, params.bias)))
        rules.append(RuleGraph(i, ColouredGraph(tuple(names), tuple(edges)), "p", "m"))
    spec = IgsSpec(K, tuple(rules), 1, None, name=f"random seed {params.seed}")
    problems = validate(spec)
    assert not problems, problems
    return spec


# ---------------------------------------------------------------------------
# export


def write_levels_csv(levels: list[Level], branches: dict, path) -> None:
    label_of = {id(lv): lab for lab, lvs in branches.items() for lv in lvs}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["branch", "neg_log_l", "log_count", "degree", "max_degree", "count"])
        for lv in levels:
            w.writerow([label_of.get(id(lv), UNCLASSIFIED), f"{lv.neg_log_l:.12g}",
                        f"{math.log(lv.count):.12g}", lv.degree, lv.max_degree, lv.count])


def write_regressions_csv(results: list[RegressionResult], path) -> None:
    def fmt(x):
        return "" if x is None else f"{x:.12g}"

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["branch", "slope", "intercept", "r2", "points", "status"])
        for r in results:
            w.writerow([r.branch, fmt(r.slope), fmt(r.intercept), fmt(r.r2), r.points,
                        "sparse" if r.sparse else "fit"])


def write_plot(branches: dict, results: list[RegressionResult], path, title: str = "") -> None:
    """Scatter of log P against -log l per branch with fitted lines, as a standalone SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "eigs"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    data = {}
    fits = {r.branch: r for r in results}
    for k, (lab, lvs) in enumerate(branches.items()):
        if not lvs:
            continue
        x = [lv.neg_log_l for lv in lvs]
        y = [math.log(lv.count) for lv in lvs]
        data[lab] = [[round(a, 12), round(b, 12)] for a, b in zip(x, y)]
        colour = f"C{k}"
        fit = fits.get(lab)
        suffix = ""
        if fit is not None and fit.slope is not None:
            xs = np.array([min(x), max(x)])
            ax.plot(xs, fit.slope * xs + fit.intercept, color=colour, lw=1)
            suffix = f" (slope {fit.slope:.3f})"
        elif fit is not None and fit.sparse:
            suffix = " (suppressed: too few levels)"
        ax.scatter(x, y, s=12, color=colour, label=lab + suffix)
    ax.set_xlabel("-log l  (l = degree / max degree)")
    ax.set_ylabel("log P(l)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    svg = buf.getvalue()
    comment = "<!-- data: " + json.dumps(data, sort_keys=True).replace("--", "- -") + " -->\n"
    head, sep, rest = svg.partition("?>\n")
    svg = head + sep + comment + rest if sep else comment + svg
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
