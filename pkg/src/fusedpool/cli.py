"""Command-line pipeline: summarize, path, cv, evaluate, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.
Artifacts are deterministic given the input files, config and seed.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import (
    DataError,
    Schema,
    SchemaError,
    apply_missingness_mask,
    ingest,
    standardize,
    summarize,
)
from .evaluation import StarThresholds, method_comparison
from .exports import (
    write_cv_outputs,
    write_evaluation,
    write_path_outputs,
    write_summary,
)
from .fusion import fuse
from .selection import aic_select, cv_select
from .server import ServerError, build_state, make_server
from .solver import ConvergenceError, FitConfig, solve_path

logger = logging.getLogger("fusedpool")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CONVERGENCE = 3

# Placeholder star boundaries; supply calibrated industry values in practice.
DEFAULT_THRESHOLDS = "40,60,80"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 (argparse hook)
        raise UsageError(message)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV file")
    p.add_argument("--schema", required=True, help="schema config JSON")
    p.add_argument("--out", required=True, help="output directory")


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-size", type=int, default=100, help="log-linear grid points")
    p.add_argument(
        "--lambda-min-ratio", type=float, default=1e-4, help="smallest grid lambda / lambda_max"
    )


def _add_cv_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=5, help="number of CV folds")
    p.add_argument("--seed", type=int, default=0, help="fold assignment seed")


def _add_threshold_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--thresholds",
        type=StarThresholds.parse,
        default=StarThresholds.parse(DEFAULT_THRESHOLDS),
        help="star boundaries t3,t4,t5 (default is a non-normative placeholder)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fusedpool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="descriptive statistics and missingness exports")
    _add_data_flags(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("path", help="solve the regularization path and export it")
    _add_data_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("cv", help="AIC and K-fold CV selection along the path")
    _add_data_flags(p)
    _add_fit_flags(p)
    _add_cv_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("evaluate", help="held-out comparison of the four methods")
    _add_data_flags(p)
    _add_fit_flags(p)
    _add_cv_flags(p)
    _add_threshold_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="local JSON API (and optional UI) over the fit")
    _add_data_flags(p)
    _add_fit_flags(p)
    _add_cv_flags(p)
    _add_threshold_flag(p)
    p.add_argument("--port", type=int, default=8000, help="listen port")
    p.add_argument("--ui", default=None, help="static UI directory to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def _fit_config(args: argparse.Namespace) -> FitConfig:
    return FitConfig(grid_size=args.grid_size, lambda_min_ratio=args.lambda_min_ratio)


def _load(args: argparse.Namespace):
    schema = Schema.from_json(args.schema)
    raw = ingest(args.data, schema)
    masked = apply_missingness_mask(raw)
    dataset, _stats = standardize(masked)
    return dataset


def cmd_summarize(args: argparse.Namespace) -> int:
    schema = Schema.from_json(args.schema)
    dataset = ingest(args.data, schema)
    report = summarize(dataset)
    files = write_summary(Path(args.out), report)
    for f in files:
        logger.info("wrote %s", f)
    return EXIT_OK


def cmd_path(args: argparse.Namespace) -> int:
    dataset = _load(args)
    coupling = fuse(dataset)
    config = _fit_config(args)
    path = solve_path(dataset, coupling, config)
    logger.info("lambda_max = %.17g", path.lambda_max)
    for i in range(path.n_points):
        logger.debug(
            "lambda=%.6g iterations=%d primal=%.3g dual=%.3g",
            path.lambdas[i],
            path.iterations[i],
            path.primal_residuals[i],
            path.dual_residuals[i],
        )
    files = write_path_outputs(Path(args.out), dataset, coupling, path, config)
    for f in files:
        logger.info("wrote %s", f)
    return EXIT_OK


def cmd_cv(args: argparse.Namespace) -> int:
    dataset = _load(args)
    coupling = fuse(dataset)
    config = _fit_config(args)
    path = solve_path(dataset, coupling, config)
    cv = cv_select(dataset, coupling, config, k=args.k, seed=args.seed, path=path)
    aic = aic_select(path, dataset.n_total)
    logger.info(
        "selected lambda: cv=%.6g (index %d), aic=%.6g (index %d)",
        cv.selected_lambda,
        cv.selected_index,
        aic.selected_lambda,
        aic.selected_index,
    )
    files = write_cv_outputs(Path(args.out), dataset, cv, aic)
    for f in files:
        logger.info("wrote %s", f)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    dataset = _load(args)
    coupling = fuse(dataset)
    config = _fit_config(args)
    report, _cv = method_comparison(
        dataset, coupling, args.thresholds, config, k=args.k, seed=args.seed
    )
    files = write_evaluation(Path(args.out), report)
    for f in files:
        logger.info("wrote %s", f)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    dataset = _load(args)
    coupling = fuse(dataset)
    config = _fit_config(args)
    ui_dir = Path(args.ui) if args.ui else None
    if ui_dir is not None and not ui_dir.is_dir():
        raise DataError(f"UI directory not found: {ui_dir}")
    state = build_state(
        dataset,
        coupling,
        config,
        k=args.k,
        seed=args.seed,
        thresholds=args.thresholds,
        out_dir=Path(args.out),
        ui_dir=ui_dir,
    )
    server = make_server(state, port=args.port)
    host, port = server.server_address[:2]
    logger.info("serving on http://%s:%s/ (Ctrl-C to stop)", host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        logger.info("shutting down")
    finally:
        server.server_close()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (SchemaError, DataError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except ConvergenceError as exc:
        logger.error("%s", exc)
        return EXIT_CONVERGENCE
    except ServerError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
