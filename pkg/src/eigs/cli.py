"""Command line interface.

Exit codes: 0 ok, 1 domain failure, 2 parse error, 3 analysis hard failure,
4 budget exceeded, 5 not applicable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import EXAMPLES, __version__, example_text, spectral
from .model import SpecError, dump_spec, parse_spec, validate

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_PARSE = 2
EXIT_HARD = 3
EXIT_BUDGET = 4
EXIT_NOT_APPLICABLE = 5


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _read_source(args) -> str:
    ref = args.spec
    if ref == "random":
        if args.seed is None:
            raise _Fail(EXIT_PARSE, "SPEC 'random' needs --seed")
        from .lab import RandomSpecParams, random_spec

        params = RandomSpecParams(seed=args.seed)
        return dump_spec(random_spec(params, K=args.random_colours))
    if ref.startswith("example:"):
        name = ref.split(":", 1)[1]
        if name not in EXAMPLES:
            raise _Fail(EXIT_PARSE, f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
        return example_text(name)
    try:
        return Path(ref).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_PARSE, f"cannot read {ref}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise _Fail(EXIT_PARSE, f"{ref} is not UTF-8") from None


def _load(args, *, require_valid=True):
    source = _read_source(args)
    try:
        spec = parse_spec(source, check=False)
    except SpecError as exc:
        raise _Fail(EXIT_PARSE, f"parse error: {exc}") from None
    if require_valid:
        problems = validate(spec)
        if problems:
            raise _Fail(EXIT_DOMAIN, "invalid system:\n" + "\n".join(problems))
    return spec, source


def cmd_validate(args) -> int:
    spec, _ = _load(args, require_valid=False)
    problems = validate(spec)
    for p in problems:
        print(p)
    if not problems:
        print("valid")
    return EXIT_DOMAIN if problems else EXIT_OK


def cmd_analyze(args) -> int:
    from .report import build_report, dumps

    spec, source = _load(args)
    report, hard = build_report(spec, source)
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if hard:
        print("analysis failed in at least one section", file=sys.stderr)
    return EXIT_HARD if hard else EXIT_OK


def cmd_generate(args) -> int:
    from . import engine

    spec, _ = _load(args)
    g = engine.iterate(spec, args.n, budget=args.budget_edges)
    out = Path(args.out)
    engine.write_edge_list(g, out)
    sidecar = out.with_name(out.name + ".provenance")
    engine.write_provenance(g, sidecar)
    print(f"wrote {g.n_edges} edges to {out} and {g.n_vertices} vertex records to {sidecar}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .degree import NotApplicable, analyze_degree
    from .lab import branch_regression, scaled_levels, write_levels_csv, write_plot, write_regressions_csv

    spec, _ = _load(args)
    try:
        analysis = analyze_degree(spec)
    except NotApplicable as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    levels = scaled_levels(spec, args.n)
    results, branches = branch_regression(levels, analysis, method=args.method,
                                          head_cutoff=args.head_cutoff)
    outdir = Path(args.plots)
    outdir.mkdir(parents=True, exist_ok=True)
    write_levels_csv(levels, branches, outdir / "levels.csv")
    write_regressions_csv(results, outdir / "regressions.csv")
    title = f"{spec.name or 'system'}, n = {args.n}"
    write_plot(branches, results, outdir / "degree_distribution.svg", title)
    for r in results:
        if r.slope is None:
            status = "sparse" if r.points else "empty"
            print(f"{r.branch}: {status} ({r.points} levels)")
        else:
            print(f"{r.branch}: slope {r.slope:.4f}, r2 {r.r2:.4f}, {r.points} levels")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_oracles

    spec, _ = _load(args, require_valid=False)
    results = run_oracles(spec, args.n_max, budget=args.budget_edges)
    failed = None
    for r in results:
        tag = "PASS" if r.passed else "FAIL"
        extra = f" ({r.detail})" if r.detail else ""
        print(f"{tag} {r.name}{extra}")
        if not r.passed and failed is None:
            failed = r
    if failed is not None:
        print("counterexample: " + json.dumps({"check": failed.name, **(failed.counterexample or {})},
                                             sort_keys=True))
        return EXIT_DOMAIN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .engine import DEFAULT_EDGE_BUDGET

    parser = argparse.ArgumentParser(
        prog="eigs",
        description="Fractal and degree spectra of edge iterated graph systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("spec", help="rule file, 'example:NAME' for a bundled system, or 'random'")
        p.add_argument("--seed", type=int, default=None, help="seed when SPEC is 'random'")
        p.add_argument("--random-colours", type=int, default=None, metavar="K",
                       help="colour count when SPEC is 'random'")
        p.add_argument("--tolerance", type=float, default=None,
                       help="relative tolerance for spectral radius equality (default 1e-9)")
        p.add_argument("--budget-edges", type=int, default=DEFAULT_EDGE_BUDGET,
                       help="largest edge count a generated graph may have")

    p = sub.add_parser("validate", help="check structural requirements")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="full analysis report (JSON)")
    common(p)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="materialise Xi^n as an edge list")
    common(p)
    p.add_argument("n", type=int)
    p.add_argument("--out", required=True, help="edge list path; provenance goes to OUT.provenance")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="degree levels, branch regressions and plot")
    common(p)
    p.add_argument("n", type=int)
    p.add_argument("--plots", required=True, help="output directory")
    p.add_argument("--method", choices=["provenance", "lattice"], default="provenance")
    p.add_argument("--head-cutoff", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the cross-oracle suite")
    common(p)
    p.add_argument("--n-max", type=int, default=5)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tolerance is not None:
        spectral.RHO_RTOL = args.tolerance
    try:
        return args.func(args)
    except _Fail as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except spectral.BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
