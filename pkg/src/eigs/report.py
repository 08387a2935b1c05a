"""Assembly and serialisation of the analysis report."""

from __future__ import annotations

import hashlib
import json
import math

from . import __version__
from .degree import AmbiguousClassification, NotApplicable, analyze_degree
from .distance import DegenerateScaling, analyze_distance
from .model import IgsSpec, validate
from .spectral import (
    BudgetExceeded,
    ConvergenceError,
    choice_family,
    condensation,
    degree_matrix,
    mass_matrix,
)

SCHEMA = "eigs-report/1"
SIG_DIGITS = 12

HARD_ERRORS = (BudgetExceeded, ConvergenceError, AmbiguousClassification, AssertionError,
               ArithmeticError, DegenerateScaling)


def _round(x):
    if isinstance(x, float):
        if not math.isfinite(x):
            return str(x)
        if x == 0:
            return 0.0
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def dumps(report: dict) -> str:
    return json.dumps(_round(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _error(exc) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def _matrix(X):
    return [list(r) for r in X]


def matrices_section(spec: IgsSpec, cf) -> dict:
    M, N = mass_matrix(spec), degree_matrix(spec)
    return {
        "M": _matrix(M),
        "N": _matrix(N),
        "choice_family": {str(c): [list(v) for v in cf.options(c)] for c in range(1, spec.K + 1)},
        "choice_product_size": cf.product_size,
        "frobenius_M": condensation(M).to_dict(),
        "frobenius_N": condensation(N).to_dict(),
    }


def distance_section(spec: IgsSpec, cf) -> dict:
    d = analyze_distance(spec, cf)
    colours = {}
    for j in sorted(d.rates):
        st, stab, layer = d.states[j], d.stability[j], d.layers[j]
        colours[str(j)] = {
            "lambda_D": d.rates[j],
            "bellman": {
                "trim": list(st.trim),
                "rate_exact": st.exact,
                "ratio_estimate": st.ratio_estimate,
                "root_estimate": st.root_estimate,
                "stop": st.stop,
                "steps": st.steps,
                "unstable": st.unstable,
                "limit_constant": st.limit_constant,
            },
            "stable": stab.stable,
            "stability_reason": stab.reason,
            "stability_certificate": stab.certificate,
            "fixed_point_residual": stab.fixed_point_residual,
            "I_dist": list(layer.I_dist),
            "M_dist": _matrix(layer.M_dist),
            "M_dist_blocks": layer.M_dist_blocks,
            "M_dist_primitive_frobenius": layer.M_dist_primitive_frobenius,
            "lambda_M_surv": layer.lambda_M_surv,
            "dim_H": d.dims[j],
        }
    return {
        "colours": colours,
        "spectrum": d.spectrum,
        "multifractal": d.multifractal,
        "bddm": d.bddm,
    }


def degree_section(spec: IgsSpec) -> dict:
    try:
        a = analyze_degree(spec)
    except NotApplicable as exc:
        return {"not_applicable": str(exc)}
    types = []
    for t in a.types:
        types.append({
            "u": list(t.u),
            "b": list(t.b),
            "initial_count": t.initial_count,
            "mu": t.mu,
            "lambda": t.lam,
            "tau": t.tau,
            "c_deg": t.c_deg,
            "c_deg_stop": t.growth.stop,
            "c_deg_divergent": t.growth.divergent,
            "dominant": t.dominant,
            "surviving": t.surviving,
            "alpha": t.alpha,
            "lambda_M_deg": t.lambda_M_deg if t.surviving else None,
            "q": t.q if t.surviving else None,
        })
    classes = [
        {
            "members": [list(t.u) for t in c.members],
            "shifts": c.shifts,
            "alpha": c.alpha,
            "eff_rate": c.eff_rate,
            "q": c.q,
        }
        for c in a.classes
    ]
    return {
        "lambda_U": a.lambda_U,
        "tau_deg": a.tau_deg,
        "C_deg": a.C_deg,
        "types": types,
        "classes": classes,
        "dimension": a.dimension,
        "dimension_reason": a.dimension_reason or None,
        "scale_free": a.scale_free,
        "spectrum": a.spectrum,
        "bedm": a.bedm,
        "multiscale_free": a.multiscale_free,
    }


def _flags(report: dict) -> dict:
    flags: dict = {}
    mats = report.get("matrices", {})
    if "frobenius_M" in mats:
        flags["M_primitive_frobenius"] = mats["frobenius_M"]["primitive_frobenius"]
        flags["N_primitive_frobenius"] = mats["frobenius_N"]["primitive_frobenius"]
    dist = report.get("distance", {})
    if "colours" in dist:
        cols = dist["colours"]
        flags["local_primitive_stability_violated"] = [int(j) for j, c in cols.items() if not c["stable"]]
        flags["M_dist_not_primitive_frobenius"] = [
            int(j) for j, c in cols.items() if not c["M_dist_primitive_frobenius"]]
        flags["bellman_unstable"] = [int(j) for j, c in cols.items() if c["bellman"]["unstable"]]
    deg = report.get("degree", {})
    flags["degree_not_applicable"] = "not_applicable" in deg
    if "types" in deg:
        flags["divergent_c_deg"] = [t["u"] for t in deg["types"] if t["c_deg_divergent"]]
    return flags


def spec_digest(source: str) -> str:
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


def build_report(spec: IgsSpec, source: str | None = None) -> tuple[dict, bool]:
    """Full analysis report and whether any section hit a hard failure."""
    from .model import dump_spec

    text = source if source is not None else dump_spec(spec)
    report: dict = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "spec_sha256": spec_digest(text),
        "name": spec.name,
        "colours": spec.K,
        "initial_colour": spec.initial_colour,
    }
    violations = validate(spec)
    report["validation"] = {"valid": not violations, "violations": violations}
    hard = False
    try:
        cf = choice_family(spec)
        report["matrices"] = matrices_section(spec, cf)
    except HARD_ERRORS as exc:
        report["matrices"] = _error(exc)
        report["assumption_flags"] = _flags(report)
        return report, True
    for key, fn in (("distance", lambda: distance_section(spec, cf)),
                    ("degree", lambda: degree_section(spec))):
        try:
            report[key] = fn()
        except HARD_ERRORS as exc:
            report[key] = _error(exc)
            hard = True
    report["assumption_flags"] = _flags(report)
    return report, hard
