"""Command-line interface.

Subcommands: ``simulate`` (synthetic benchmark), ``fit`` (boosting path on
a CSV panel), ``select`` (stopping-step/filter selection on a split),
``bounds`` (convergence-bound report), ``ingest`` (transform and clean a
CSV). Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as io_
from .boosting import BoostConfig, boost_ls_cross_section, run_path, run_path_on_design
from .bounds import check_bounds, normalize_groups
from .design import build_lagged_design, regroup_by_variable
from .exceptions import DataError, NumericalError
from .selection import aicc, select_by_validation, select_p_variant
from .simulation import DgpConfig, benchmark


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_fit_flags(parser, include_variant=True):
    if include_variant:
        parser.add_argument("--variant", choices=["group", "lag", "cross"],
                            default="group", help="base learner granularity")
    parser.add_argument("--p", type=int, default=2, help="lag order")
    parser.add_argument("--nu", type=float, default=0.1, help="learning rate")
    parser.add_argument("--steps", type=int, default=500, help="boosting step budget")
    parser.add_argument("--no-inference", action="store_true",
                        help="skip standard errors and p-values")
    parser.add_argument("--no-demean", action="store_true",
                        help="do not center columns before fitting")
    parser.add_argument("--transforms", action="store_true",
                        help="apply a transform-code row when present")


def build_parser() -> _Parser:
    parser = _Parser(prog="boostvar",
                     description="Least-squares boosting for VARs with per-step p-values")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sim = sub.add_parser("simulate", help="benchmark on a synthetic sparse VAR(2)")
    sim.add_argument("--t", type=int, required=True, help="training length")
    sim.add_argument("--d", type=int, required=True, help="number of variables")
    sim.add_argument("--s", type=int, required=True, help="nonzero columns per lag matrix")
    sim.add_argument("--snr", type=float, default=1.0)
    sim.add_argument("--rho", type=float, default=0.5)
    sim.add_argument("--reps", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--nu", type=float, default=0.1)
    sim.add_argument("--steps", type=int, default=500)
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--out", default=".", help="output directory")

    fit = sub.add_parser("fit", help="run a boosting path on a CSV panel")
    fit.add_argument("--input", required=True)
    fit.add_argument("--out", default=".", help="output directory")
    fit.add_argument("--response", default=None,
                     help="response column for --variant cross (name or 1-based "
                          "index; default last column)")
    _add_fit_flags(fit)

    sel = sub.add_parser("select", help="fit on a split and choose a stopping step")
    sel.add_argument("--input", required=True)
    sel.add_argument("--out", default=".", help="output directory")
    sel.add_argument("--criterion", choices=["aicc", "validation", "pfilter"],
                     default="aicc")
    sel.add_argument("--alpha", type=float, default=0.05, help="p-value cutoff")
    sel.add_argument("--split", default="0.5,0.25,0.25",
                     help="train,validation,test fractions")
    _add_fit_flags(sel)

    bnd = sub.add_parser("bounds", help="convergence-bound report for a fitted path")
    bnd.add_argument("--input", required=True)
    bnd.add_argument("--out", default=".", help="output directory")
    _add_fit_flags(bnd, include_variant=False)

    ing = sub.add_parser("ingest", help="transform and clean a CSV panel")
    ing.add_argument("--input", required=True)
    ing.add_argument("--output", required=True)
    ing.add_argument("--no-transforms", action="store_true",
                     help="ignore a transform-code row")
    return parser


def _config(args, variant=None) -> BoostConfig:
    return BoostConfig(variant=variant or getattr(args, "variant", "group"),
                       nu=args.nu, k_stop=args.steps,
                       compute_inference=not args.no_inference)


def _cmd_simulate(args) -> int:
    cfg = DgpConfig(t=args.t, d=args.d, s=args.s, rho=args.rho, snr=args.snr,
                    seed=args.seed)
    summaries = benchmark(cfg, args.reps, nu=args.nu, k_stop=args.steps,
                          alpha=args.alpha)
    payload = {
        "config": {"t": args.t, "d": args.d, "s": args.s, "rho": args.rho,
                   "snr": args.snr, "reps": args.reps, "seed": args.seed,
                   "nu": args.nu, "steps": args.steps, "alpha": args.alpha},
        "methods": {
            name: {
                "mean": summary.mean.as_dict(),
                "std": summary.std.as_dict(),
                "per_replication": [m.as_dict() for m in summary.per_replication],
            }
            for name, summary in summaries.items()
        },
    }
    target = io_.write_metrics(args.out, payload)
    for name, summary in summaries.items():
        m = summary.mean
        print(f"{name}: mspe={m.mspe:.4g} fpr={m.fpr:.3f} fnr={m.fnr:.3f} "
              f"f_score={m.f_score:.3f} size={m.model_size:.1f}")
    print(f"wrote {target}")
    return 0


def _cross_split(tsm, response_arg):
    names = list(tsm.names or [])
    if response_arg is None:
        idx = tsm.n_vars - 1
    else:
        if response_arg in names:
            idx = names.index(response_arg)
        else:
            try:
                idx = int(response_arg) - 1
            except ValueError:
                raise DataError(f"unknown response column {response_arg!r}") from None
            if not 0 <= idx < tsm.n_vars:
                raise DataError(f"response index {response_arg} out of range")
    keep = [c for c in range(tsm.n_vars) if c != idx]
    regressor_names = tuple(names[c] for c in keep) if names else None
    response_name = (names[idx],) if names else None
    return tsm.values[:, keep], tsm.values[:, [idx]], regressor_names, response_name


def _fit_path(args, tsm):
    if args.variant == "cross":
        design, response, names, response_name = _cross_split(
            tsm, getattr(args, "response", None))
        if not args.no_demean:
            design = design - design.mean(axis=0)
            response = response - response.mean(axis=0)
        path = boost_ls_cross_section(design, response, _config(args, "cross"))
        path.names = names
        path.response_names = response_name
        return path
    return run_path(tsm, args.p, _config(args), demean=not args.no_demean)


def _cmd_fit(args) -> int:
    tsm, _ = io_.ingest(args.input, apply_transforms=args.transforms)
    path = _fit_path(args, tsm)
    written = io_.emit_reports(args.out, path)
    for target in written.values():
        print(f"wrote {target}")
    return 0


def _cmd_select(args) -> int:
    tsm, _ = io_.ingest(args.input, apply_transforms=args.transforms)
    fractions = tuple(float(f) for f in args.split.split(","))
    if args.variant == "cross":
        raise DataError("select operates on time-series variants; "
                        "use fit for cross-section data")
    train, val, _test = io_.split(tsm, fractions, p=args.p)
    needs_inference = args.criterion in ("aicc", "pfilter")
    if needs_inference and args.no_inference:
        raise DataError(f"criterion {args.criterion!r} needs inference; "
                        "drop --no-inference")
    path = run_path(train, args.p, _config(args), demean=not args.no_demean)
    if args.criterion == "aicc":
        result = aicc(path)
    elif args.criterion == "validation":
        result = select_by_validation(path, val.values)
    else:
        result = select_p_variant(path, val.values, args.alpha)
    written = io_.emit_reports(args.out, path, selection=result)
    unfiltered = path.coefficients_at(result.chosen_k)
    payload = {
        "criterion": args.criterion,
        "alpha": args.alpha if args.criterion == "pfilter" else None,
        "chosen_step": result.chosen_k,
        "model_size": result.model_size,
        "unfiltered_model_size": int(np.count_nonzero(unfiltered)),
        "split": list(fractions),
        "rows": {"train": train.n_obs, "validation": val.n_obs, "test": _test.n_obs},
    }
    target = Path(args.out) / "selection.json"
    io_.write_json(target, payload)
    print(f"chosen step {result.chosen_k}, model size {result.model_size}")
    for t in {**written, "selection": target}.values():
        print(f"wrote {t}")
    return 0


def _cmd_bounds(args) -> int:
    tsm, _ = io_.ingest(args.input, apply_transforms=args.transforms)
    lagged = build_lagged_design(tsm, args.p, demean=not args.no_demean)
    grouped = regroup_by_variable(lagged)
    normalized, transforms = normalize_groups(grouped)
    if any(t is None for t in transforms):
        raise NumericalError("singular group: cannot normalize the design")
    config = BoostConfig(variant="group", nu=args.nu, k_stop=args.steps,
                         compute_inference=False)
    path = run_path_on_design(lagged.response, normalized.design,
                              lagged.p, lagged.d, config)
    report = check_bounds(path)
    payload = {
        "rate": report.rate,
        "lam_pmin": report.lam_pmin,
        "full_rank": report.full_rank,
        "prediction_violations": list(report.pred_violations),
        "coefficient_violations_stated": list(report.coef_violations_stated),
        "coefficient_violations_derived": list(report.coef_violations_derived),
        "steps": [
            {"step": int(k),
             "lhs_pred": report.lhs_pred[i], "rhs_pred": report.rhs_pred[i],
             "lhs_coef": report.lhs_coef[i],
             "rhs_coef_stated": report.rhs_coef_stated[i],
             "rhs_coef_derived": report.rhs_coef_derived[i]}
            for i, k in enumerate(report.steps)
        ],
    }
    target = Path(args.out)
    target.mkdir(parents=True, exist_ok=True)
    target = target / "bounds.json"
    io_.write_json(target, payload)
    status = "ok" if report.ok else f"{len(report.pred_violations)} violations"
    print(f"rate={report.rate:.6f} prediction bound: {status}")
    print(f"wrote {target}")
    return 0


def _cmd_ingest(args) -> int:
    tsm, dates = io_.ingest(args.input, apply_transforms=not args.no_transforms)
    target = io_.write_clean_csv(args.output, tsm, dates)
    print(f"wrote {target} ({tsm.n_obs} rows, {tsm.n_vars} columns)")
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "select": _cmd_select,
    "bounds": _cmd_bounds,
    "ingest": _cmd_ingest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
