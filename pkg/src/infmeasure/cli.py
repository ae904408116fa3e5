"""Command-line experiment runner.

Every subcommand writes one CSV (header row, numbers at 17 significant
digits) and a JSON run manifest next to it. Exit status: 0 on success, 2 on
invalid input, 3 when a computation fails to converge within its budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import functions
from .delta import (
    DEFAULT_EPS_SCHEDULE,
    DEFAULT_N_SCHEDULE,
    family_inner_limit,
    scaling_ratio,
)
from .equidist import KINDS, VAN_DER_CORPUT, CoordSequence, equidist_ratio, product_family
from .errors import BudgetExceededError, DomainError, InfMeasureError, NoConvergenceError
from .linmap import BlockLinearMap, change_of_variables
from .products import (
    DEFAULT_MAX_TERMS,
    DEFAULT_TOL,
    ORDINARY,
    STANDARD,
    FactorSeq,
    GroupingAlpha,
    grouped_product,
)
from .rect import (
    DeltaBox,
    ElementaryRect,
    counterexample_box,
    rect_from_spec,
    rect_measure,
    unit_cube,
)
from .riemann import box_average

OUTDIR_ENV = "INFMEASURE_OUTDIR"

SUBCOMMANDS = (
    "products",
    "measure",
    "equidist",
    "integrate",
    "delta-eval",
    "sift",
    "scaling",
    "changevar-check",
)


def _alt_harmonic(k):
    return np.where(k % 2 == 0, 1.0, -1.0) / k


PRODUCT_PRESETS = {
    "alternating_harmonic": lambda: FactorSeq(log_factor=_alt_harmonic, vectorized=True),
    "X_counterexample": lambda: FactorSeq(log_factor=_alt_harmonic, vectorized=True),
    "ones": lambda: FactorSeq(factor=lambda k: np.ones(len(k)), vectorized=True),
    "two_half": lambda: FactorSeq.periodic([2.0, 0.5]),
    "geometric": lambda: FactorSeq(log_factor=lambda k: -np.ldexp(1.0, -k), vectorized=True),
    "harmonic_decay": lambda: FactorSeq(log_factor=lambda k: -1.0 / k, vectorized=True),
}


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma list of numbers: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}") from exc


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rect", default=None, help="preset name or path to a rectangle JSON file")
    common.add_argument("--func", default="cos_1", help="registry function name")
    common.add_argument("--eps", type=_floats, default=None, help="comma list of epsilons")
    common.add_argument("--epsilon", type=float, default=None, help="single epsilon for delta_box")
    common.add_argument("--n", type=_ints, default=None, help="comma list of family sizes")
    common.add_argument("--alpha", default="1", help="grouping, e.g. 2,1 = (2,1,1,...)")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--depth", type=_ints, default=None, help="truncation depth(s)")
    common.add_argument("--out", default=None, help="CSV output path")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="infmeasure", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("products", parents=[common], help="infinite products of presets")
    p.add_argument("--preset", choices=sorted(PRODUCT_PRESETS), default="alternating_harmonic")
    p.add_argument("--mode", choices=[ORDINARY, STANDARD, "both"], default=ORDINARY)
    p.add_argument("--max-terms", type=int, default=DEFAULT_MAX_TERMS)

    p = sub.add_parser("measure", parents=[common], help="alpha-Lebesgue value of a rectangle")
    p.add_argument("--mode", choices=[ORDINARY, STANDARD, "both"], default=ORDINARY)

    p = sub.add_parser("equidist", parents=[common], help="counting ratios of Y_n on a box U")
    p.add_argument("--kind", choices=KINDS, default=VAN_DER_CORPUT)
    p.add_argument(
        "--override",
        action="append",
        default=None,
        help="k:c:d, the interval [c, d) in coordinate k (repeatable)",
    )
    p.add_argument("--budget", type=int, default=10**6)

    sub.add_parser("integrate", parents=[common], help="Riemann integral by Darboux refinement")

    p = sub.add_parser("delta-eval", parents=[common], help="delta functional per epsilon")
    p.add_argument("--method", choices=["integral", "families", "both"], default="integral")

    p = sub.add_parser("sift", parents=[common], help="sifting property at a shift T")
    p.add_argument("--shift", type=_floats, required=True, help="comma list T_1,T_2,...")

    p = sub.add_parser("scaling", parents=[common], help="truncated scaling ratios")
    p.add_argument("--scalar", type=_floats, default=[2.0, 1.0, 0.5])

    p = sub.add_parser("changevar-check", parents=[common], help="change-of-variables check")
    p.add_argument("--blocks", required=True, help="JSON array of row-major matrices, or a path")
    return parser


def _resolve_rect(args, default="unit"):
    name = args.rect or default
    eps = args.epsilon if args.epsilon is not None else (args.eps[0] if args.eps else None)
    if name == "unit":
        return unit_cube(), None
    if name == "delta_box":
        if eps is None:
            raise UsageError("--rect delta_box needs --epsilon")
        return DeltaBox(eps).as_rect(), eps
    if name == "X_counterexample":
        return counterexample_box(), None
    path = Path(name)
    if not path.is_file():
        raise UsageError(f"unknown rectangle {name!r} (not a preset or a file)")
    spec = json.loads(path.read_text())
    return rect_from_spec(spec), spec.get("epsilon")


def _eps_list(args):
    eps = args.eps if args.eps else list(DEFAULT_EPS_SCHEDULE)
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise UsageError("--eps must be positive and strictly decreasing")
    return eps


def _modes(mode):
    return [ORDINARY, STANDARD] if mode == "both" else [mode]


def run_products(args, extra):
    tol = args.tol or DEFAULT_TOL
    alpha = GroupingAlpha.parse(args.alpha)
    rows = []
    for mode in _modes(args.mode):
        res = grouped_product(PRODUCT_PRESETS[args.preset](), alpha, mode, tol, args.max_terms)
        rows.append(
            {
                "preset": args.preset,
                "mode": mode,
                "alpha": args.alpha,
                "status": res.status,
                "value": res.value,
                "log_value": res.log_value,
                "partials_inspected": res.partials_inspected,
            }
        )
        print(f"{mode}: status={res.status} value={_fmt(res.value)}")
    return rows


def run_measure(args, extra):
    rect, _ = _resolve_rect(args, "delta_box" if args.epsilon is not None else "unit")
    alpha = GroupingAlpha.parse(args.alpha)
    rows = []
    for mode in _modes(args.mode):
        mv = rect_measure(rect, alpha, mode)
        rows.append(
            {
                "rect": args.rect or "unit",
                "mode": mode,
                "alpha": args.alpha,
                "status": mv.status,
                "log_value": mv.log_value,
                "value": mv.value,
            }
        )
        print(f"{mode}: log_value = {_fmt(mv.log_value)}")
    return rows


def _parse_override(text):
    try:
        k, c, d = text.split(":")
        return int(k), (float(c), float(d))
    except ValueError as exc:
        raise UsageError(f"bad --override {text!r}; expected k:c:d") from exc


def run_equidist(args, extra):
    rect, _ = _resolve_rect(args)
    overrides = dict(_parse_override(t) for t in (args.override or ["1:0:0.5"]))
    u = ElementaryRect(rect, overrides)
    target = math.exp(
        math.fsum(math.log(d - c) - math.log(rect.interval(k)[1] - rect.interval(k)[0]) for k, (c, d) in u.overrides)
    )
    seq = CoordSequence(args.kind, seed=args.seed)
    rows = []
    for n in args.n or [2, 3, 4, 5, 6, 7]:
        fam = product_family(rect, seq, n, budget=args.budget)
        ratio = equidist_ratio(fam, u)
        rows.append({"n": n, "ratio": ratio, "target": target, "error": abs(ratio - target)})
    return rows


def run_integrate(args, extra):
    rect, _ = _resolve_rect(args)
    f = functions.get(args.func)
    tol = args.tol or 1e-4
    mv = rect_measure(rect)
    if not mv.log_value > -math.inf:
        raise UsageError("rectangle has measure zero")
    scale = mv.value
    rows = []

    def record(est):
        rows.append(
            {
                "func": args.func,
                "cuts": est.cuts[0] if len(set(est.cuts)) == 1 else "x".join(map(str, est.cuts)),
                "lower": est.lower * scale,
                "upper": est.upper * scale,
                "estimate": est.value * scale,
                "width": est.width * scale,
            }
        )

    est = box_average(f, rect, tol, on_round=record)
    extra["integral"] = est.value * scale
    print(f"integral = {_fmt(est.value * scale)}")
    return rows


def run_delta(args, extra):
    f = functions.get(args.func)
    target = functions.value_at_origin(f)
    eps = _eps_list(args)
    methods = ["integral", "families"] if args.method == "both" else [args.method]
    ns = args.n or list(DEFAULT_N_SCHEDULE)
    rows = []
    for method in methods:
        history = []
        for e in eps:
            if method == "integral":
                tol = args.tol or 1e-6
                est = box_average(f, DeltaBox(e).as_rect(), tol / 2, strict=False).value
            else:
                tol = args.tol or 5e-2
                est = family_inner_limit(f, e, ns, tol / 2)
            history.append(est)
            rows.append({"epsilon": e, "estimate": est, "error": abs(est - target), "method": method})
        gap = abs(history[-1] - history[-2]) if len(history) > 1 else math.nan
        extra[f"cauchy_gap_{method}"] = gap
    extra["target"] = target
    return rows


def run_sift(args, extra):
    f = functions.get(args.func)
    target = f.at(args.shift)
    tol = args.tol or 1e-6
    rows = []
    for e in _eps_list(args):
        rect = DeltaBox(e).as_rect().shifted(args.shift)
        est = box_average(f, rect, tol / 2, strict=False).value
        rows.append({"epsilon": e, "estimate": est, "error": abs(est - target)})
    extra["target"] = target
    return rows


def run_scaling(args, extra):
    eps = args.epsilon if args.epsilon is not None else (args.eps[0] if args.eps else 0.1)
    rows = []
    for s in args.scalar:
        for d in args.depth or [5, 10, 20]:
            res = scaling_ratio(s, d, eps)
            rows.append(
                {
                    "scalar": s,
                    "depth": d,
                    "epsilon": eps,
                    "log_ratio": res.log_ratio,
                    "expected": -d * math.log(abs(s)),
                    "status": res.status,
                }
            )
    return rows


def run_changevar(args, extra):
    text = args.blocks
    path = Path(text)
    if not text.lstrip().startswith("[") and path.is_file():
        text = path.read_text()
    try:
        blocks = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--blocks is not valid JSON: {exc}") from exc
    m = BlockLinearMap(tuple(np.asarray(b, dtype=float) for b in blocks))
    rect, _ = _resolve_rect(args)
    alpha = None if args.alpha == "1" else GroupingAlpha.parse(args.alpha)
    cov = change_of_variables(m, rect, alpha)
    row = {
        "blocks": len(m.blocks),
        "determinants": ";".join(_fmt(d) for d in cov.jacobian.determinants),
        "log_jacobian": cov.jacobian.log_product,
        "predicted_log_measure": cov.predicted.log_value,
        "direct_log_measure": None if cov.direct is None else cov.direct.log_value,
        "gap": cov.gap,
    }
    print(f"predicted log measure = {_fmt(cov.predicted.log_value)}")
    return [row]


RUNNERS = {
    "products": run_products,
    "measure": run_measure,
    "equidist": run_equidist,
    "integrate": run_integrate,
    "delta-eval": run_delta,
    "sift": run_sift,
    "scaling": run_scaling,
    "changevar-check": run_changevar,
}


def write_csv(path: Path, rows: list[dict]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0]) if rows else []
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[h]) for h in header])
    path.write_text(buf.getvalue())


def _output_path(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUTDIR_ENV, ".")) / f"{args.command}.csv"


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    extra: dict = {}
    code = 0
    rows: list[dict] = []
    error = None
    try:
        rows = RUNNERS[args.command](args, extra)
    except (UsageError, DomainError, ValueError) as exc:
        code, error = 2, str(exc)
    except (NoConvergenceError, BudgetExceededError, InfMeasureError) as exc:
        code, error = 3, str(exc)
    if error is not None:
        print(f"{parser.prog} {args.command}: error: {error}", file=sys.stderr)
    out = _output_path(args)
    if code == 0:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_csv(out, rows)
    manifest = {
        "subcommand": args.command,
        "config": {k: _jsonable(v) for k, v in vars(args).items()},
        "library_version": __version__,
        "started_utc": started.isoformat(),
        "wall_clock_seconds": time.perf_counter() - t0,
        "exit_code": code,
        "error": error,
        "csv": str(out) if code == 0 else None,
        "results": {k: _jsonable(v) for k, v in extra.items()},
    }
    manifest_path = out.with_name(out.name + ".manifest.json")
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
