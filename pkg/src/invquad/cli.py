"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .chebyshev import chebyshev_points
from .design import (
    D_CONVENTIONS,
    DEFAULT_D_CONVENTION,
    Criterion,
    DesignSpace,
    apportion,
    criterion_value,
    design_to_json,
    efficiency,
    load_design,
    save_design,
)
from .errors import InputError, NumericalError, ValidationError
from .model import ModelSpec, peak_value, validate
from .optimize import SolverConfig, optimal_design
from .presets import efficiency_matrix, get_preset, optimal_designs, table51_rows, table52
from .simulate import SimConfig, run_simulation
from .verify import check_optimality

CRITERIA = ("D", "E", "D1", "ce", "C")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _space(text: str) -> DesignSpace:
    try:
        a, b = text.split(":")
        t = math.inf if b.strip().lower() in ("inf", "+inf", "infinity") else float(b)
        return DesignSpace(float(a), t)
    except ValueError as exc:
        raise ValidationError(f"bad --space {text!r}: {exc}") from None


def _problem(args) -> tuple[ModelSpec, DesignSpace, float | None]:
    """Model, space and default x_e from --preset, overridden by explicit flags."""
    model = space = xe = None
    if getattr(args, "preset", None):
        p = get_preset(args.preset)
        model, space, xe = p.model, p.space, p.extrapolation_point
    if getattr(args, "model", None) or getattr(args, "theta", None):
        if not (args.model and args.theta):
            raise ValidationError("--model and --theta must be given together")
        theta = _floats(args.theta)
        if len(theta) != 3:
            raise ValidationError("--theta needs three values")
        model = ModelSpec(args.model, theta)
    if getattr(args, "space", None):
        space = _space(args.space)
    if model is None:
        raise ValidationError("give --preset or --model/--theta")
    validate(model)
    return model, space or DesignSpace(), xe


def _criterion(args, default_xe) -> Criterion:
    kind = args.criterion
    if kind == "ce":
        xe = args.xe if args.xe is not None else default_xe
        if xe is None:
            raise ValidationError("criterion ce needs --xe")
        return Criterion.extrapolation(xe)
    if kind == "C":
        if not args.c:
            raise ValidationError("criterion C needs --c a,b,c")
        return Criterion.C(_floats(args.c))
    return Criterion(kind)


def _config(args) -> SolverConfig:
    return SolverConfig(equivalence_tolerance=getattr(args, "tol", None) or 1e-7)


def _fmt(x: float, nd: int) -> str:
    return f"{x:.{nd}f}"


# -- commands -------------------------------------------------------------


def cmd_design(args) -> int:
    model, space, xe = _problem(args)
    crit = _criterion(args, xe)
    design, report = optimal_design(model, crit, space, _config(args))
    if args.out:
        save_design(args.out, model, space, design, crit)
    if args.json:
        print(json.dumps({**design_to_json(model, space, design, crit), "report": report.to_dict()}, indent=2))
        return 0
    print(f"model      {model.kind} theta={list(model.theta)}")
    print(f"space      {space}")
    print(f"criterion  {crit.label()}")
    print("points     " + "  ".join(_fmt(x, 4) for x in design.points))
    print("weights    " + "  ".join(_fmt(x, 4) for x in design.weights))
    print(f"value      {criterion_value(design, crit, model):.10g}")
    print(f"violation  {report.violation:.3e} ({'passed' if report.passed else 'FAILED'})")
    return 0


def cmd_table(args) -> int:
    preset = get_preset(args.preset)
    designs = optimal_designs(preset, _config(args))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "table51.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "u0", "u1", "u2", "w0", "w1", "w2"])
        for row in table51_rows(preset, designs):
            w.writerow([row[0], *(_fmt(x, 4) for x in row[1:])])
    names, mat = table52(preset, designs, args.d_convention)
    with open(outdir / "table52.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["design", *preset.criteria()])
        for name, row in zip(names, mat):
            w.writerow([name, *(_fmt(x, 2) for x in row)])
    if not args.quiet:
        print((outdir / "table51.csv").read_text(), end="")
        print()
        print((outdir / "table52.csv").read_text(), end="")
    return 0


def cmd_check(args) -> int:
    df = load_design(args.design)
    crit = df.criterion
    if args.criterion:
        crit = _criterion(args, df.criterion.x_e if df.criterion else None)
    if crit is None:
        raise ValidationError("design file has no criterion; pass --criterion")
    crit.check_space(df.space)
    report = check_optimality(df.design, crit, df.model, df.space, tol=args.tol or 1e-7)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_efficiency(args) -> int:
    if args.design:
        preset = get_preset(args.preset) if args.preset else None
        files = [load_design(p) for p in args.design]
        model, space = files[0].model, files[0].space
        xe = args.xe if args.xe is not None else (preset.extrapolation_point if preset else None)
        crits = {"D": Criterion.D(), "E": Criterion.E(), "D1": Criterion.D1()}
        if xe is not None:
            crits["ce"] = Criterion.extrapolation(xe)
        refs = {k: optimal_design(model, c, space, _config(args))[0] for k, c in crits.items()}
        names = [str(p) for p in args.design]
        mat = np.array([[efficiency(f.design, c, refs[k], model, args.d_convention)
                         for k, c in crits.items()] for f in files])
        header = list(crits)
    else:
        preset = get_preset(args.preset or "landete")
        names, mat = efficiency_matrix(preset, d_convention=args.d_convention)
        header = list(preset.criteria())
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["design", *header])
    for name, row in zip(names, mat):
        w.writerow([name, *(_fmt(x, 2) for x in row)])
    return 0


def _design_for(args, model, space, xe):
    if getattr(args, "design", None):
        return load_design(args.design).design
    crit = _criterion(args, xe)
    return optimal_design(model, crit, space, _config(args))[0]


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise ValidationError("simulate requires --seed")
    if args.design:
        df = load_design(args.design)
        model, design = df.model, df.design
    else:
        model, space, xe = _problem(args)
        design = _design_for(args, model, space, xe)
    if (args.sigma is None) == (args.sigma_rel is None):
        raise ValidationError("give exactly one of --sigma and --sigma-rel")
    sigma = args.sigma if args.sigma is not None else args.sigma_rel * peak_value(model)
    cfg = SimConfig(sigma=sigma, n_runs=args.n, replicates=args.replicates, seed=args.seed)
    report = run_simulation(design, model, cfg)
    if args.csv:
        report.write_estimates_csv(args.csv)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_round(args) -> int:
    if args.design:
        design = load_design(args.design).design
    else:
        model, space, xe = _problem(args)
        design = _design_for(args, model, space, xe)
    counts = apportion(design, args.n)
    print(json.dumps({"points": design.points.tolist(), "weights": design.weights.tolist(),
                      "n": args.n, "counts": counts.tolist()}, indent=2))
    return 0


def cmd_chebpoints(args) -> int:
    model, space, _ = _problem(args)
    sol = chebyshev_points(model, space)
    print(json.dumps(sol.to_dict(), indent=2))
    return 0


# -- parser ---------------------------------------------------------------


def _add_problem(p, criterion=True):
    p.add_argument("--preset", help="named configuration (landete)")
    p.add_argument("--model", choices=("P1", "P2"))
    p.add_argument("--theta", help="theta0,theta1,theta2")
    p.add_argument("--space", help="s:t, with t=inf for [s, inf)")
    if criterion:
        p.add_argument("--criterion", choices=CRITERIA, default="D")
        p.add_argument("--xe", type=float, help="extrapolation point for criterion ce")
        p.add_argument("--c", help="c-vector for criterion C, as a,b,c")
        p.add_argument("--tol", type=float, help="equivalence tolerance (default 1e-7)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invquad", description="Locally optimal designs for inverse quadratic regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="compute an optimal design")
    _add_problem(p)
    p.add_argument("--out", help="write the design JSON here")
    p.add_argument("--json", action="store_true", help="print JSON instead of a summary")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("table", help="optimal-design and efficiency tables for a preset")
    p.add_argument("--preset", default="landete")
    p.add_argument("--outdir", default=".")
    p.add_argument("--d-convention", choices=sorted(D_CONVENTIONS), default=DEFAULT_D_CONVENTION)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("check", help="certify a design file")
    p.add_argument("design")
    p.add_argument("--criterion", choices=CRITERIA)
    p.add_argument("--xe", type=float)
    p.add_argument("--c")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("efficiency", help="efficiency matrix (designs x criteria)")
    p.add_argument("--preset")
    p.add_argument("--design", nargs="*", help="design files to compare")
    p.add_argument("--xe", type=float)
    p.add_argument("--d-convention", choices=sorted(D_CONVENTIONS), default=DEFAULT_D_CONVENTION)
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("simulate", help="Monte Carlo covariance check")
    _add_problem(p)
    p.add_argument("--design", help="design file (otherwise the optimal design)")
    p.add_argument("--sigma", type=float)
    p.add_argument("--sigma-rel", type=float, help="sigma as a fraction of the peak response")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--csv", help="write per-replicate estimates here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("round", help="apportion a design to integer run counts")
    _add_problem(p)
    p.add_argument("--design", help="design file (otherwise the optimal design)")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("chebpoints", help="Chebyshev points of the gradient system")
    _add_problem(p, criterion=False)
    p.set_defaults(func=cmd_chebpoints)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
