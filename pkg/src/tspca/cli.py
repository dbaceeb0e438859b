"""Command-line entry points.

    tspca segment data.csv --out results/
    tspca simulate --design example5 --n 100,500,1500 --reps 200 --out sim/
    tspca forecast data.csv --holdout 24 --out fc/
    tspca volatility returns.csv --out vol/

Exit codes: 0 success, 2 input error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .exceptions import ContractError, NumericalError, ParseError, StageError, TSPCAError
from .forecast import reports_to_csv, reports_to_json, rolling_compare
from .segmentation import SCHEMA_VERSION, SegmentConfig, SegmentationResult, segment, segment_volatility
from .simulation import DESIGNS, monte_carlo
from .timeseries import TimeSeriesMatrix, load_csv, save_csv
from .wmatrix import ThresholdConfig

log = logging.getLogger("tspca")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


@dataclass
class RunConfig:
    k0: int = 5
    m: int | None = None
    method: str = "ratio"
    c0: float = 0.75
    beta: float = 0.01
    threshold: str = "none"
    max_ar: int = 5
    seed: int = 0
    seasonal_diff: int | None = None
    holdout: int = 24

    def segment_config(self) -> SegmentConfig:
        return SegmentConfig(
            k0=self.k0,
            m=self.m,
            method=self.method,
            c0=self.c0,
            beta=self.beta,
            threshold=ThresholdConfig.parse(self.threshold),
            prewhiten_max_order=self.max_ar,
        )


def _build_run_config(args, **defaults) -> RunConfig:
    cfg = RunConfig(**defaults)
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from exc
        names = {f.name for f in fields(RunConfig)}
        unknown = set(data) - names
        if unknown:
            raise ParseError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg


def _load(path: str, header: bool | None) -> TimeSeriesMatrix:
    return load_csv(path, has_header=header)


def _seasonal(Y: TimeSeriesMatrix, lag: int | None) -> TimeSeriesMatrix:
    if not lag:
        return Y
    if lag >= Y.n - 1:
        raise ContractError(f"seasonal lag {lag} too large for n={Y.n}")
    v = Y.values
    return Y.with_values(v[lag:] - v[:-lag])


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_corr_stats(path: Path, result: SegmentationResult) -> None:
    g = result.graph
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "h", "rho"])
        if g.rho is None:
            return
        m = g.m
        for i in range(result.p):
            for j in range(i + 1, result.p):
                for h in range(-m, m + 1):
                    w.writerow([i, j, h, repr(float(g.rho[h + m, i, j]))])


def cmd_segment(args) -> int:
    cfg = _build_run_config(args)
    Y = _seasonal(_load(args.input, args.header), cfg.seasonal_diff)
    result = segment(Y, cfg.segment_config())
    out = _outdir(args.out)
    (out / "segmentation.json").write_text(result.to_json(indent=2))
    save_csv(out / "xhat.csv", result.x_hat)
    _write_corr_stats(out / "corr_stats.csv", result)
    sizes = ", ".join(str(len(g)) for g in result.partition.groups)
    print(f"{result.partition.q} groups (sizes {sizes}); omega_y={result.omega_y:.6g} omega_x={result.omega_x:.6g}")
    return EXIT_OK


def cmd_volatility(args) -> int:
    # the ratio rule always links at least one pair, so a test with a
    # null distribution is the default here
    cfg = _build_run_config(args, method="fdr")
    Y = _seasonal(_load(args.input, args.header), cfg.seasonal_diff)
    result = segment_volatility(Y, cfg.segment_config())
    out = _outdir(args.out)
    (out / "segmentation.json").write_text(result.to_json(indent=2))
    print(f"{result.partition.q} groups: {[list(g) for g in result.partition.groups]}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _build_run_config(args)
    try:
        design = DESIGNS[args.design]
    except KeyError:
        raise ContractError(f"unknown design {args.design!r}; choose from {sorted(DESIGNS)}") from None
    try:
        ns = [int(v) for v in args.n.split(",")]
    except ValueError:
        raise ContractError(f"cannot parse sample sizes {args.n!r}") from None
    reports = [
        monte_carlo(design, n, args.reps, cfg.segment_config(), master_seed=cfg.seed, n_jobs=args.jobs)
        for n in ns
    ]
    out = _outdir(args.out)
    rows = [
        ("Correct segmentation", "correct"),
        ("Incomplete segmentation", "incomplete"),
        (f"Incomplete with q_hat={design.q - 1}", "incomplete_q_minus_1"),
        ("Other", "other"),
    ]
    with (out / "table.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n"] + [str(r.n) for r in reports])
        for label, key in rows:
            w.writerow([label] + [f"{r.proportions[key]:.3f}" for r in reports])
    detail = {"schema_version": SCHEMA_VERSION, "design": design.name, "reps": args.reps, "master_seed": cfg.seed,
              "config": cfg.segment_config().to_dict(),
              "runs": [r.to_dict() for r in reports]}
    (out / "detail.json").write_text(json.dumps(detail, indent=2))
    for r in reports:
        print(f"n={r.n}: correct={r.proportions['correct']:.3f} "
              f"incomplete={r.proportions['incomplete']:.3f}")
    return EXIT_OK


def cmd_forecast(args) -> int:
    cfg = _build_run_config(args)
    Y = _load(args.input, args.header)
    methods = tuple(args.methods.split(","))
    reports = rolling_compare(Y, cfg.holdout, methods=methods, seg_cfg=cfg.segment_config(),
                              max_order=cfg.max_ar, seasonal_lag=cfg.seasonal_diff)
    out = _outdir(args.out)
    (out / "report.csv").write_text(reports_to_csv(reports, Y.names))
    (out / "report.json").write_text(reports_to_json(reports))
    for r in reports:
        print(f"{r.method:>12}: 1-step {r.mean_mse[1]:.4g} ({r.sd_mse[1]:.3g})  "
              f"2-step {r.mean_mse[2]:.4g} ({r.sd_mse[2]:.3g})")
    return EXIT_OK


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--k0", type=int, help="lag horizon of the W matrix (default 5)")
    p.add_argument("--m", type=int, help="max lag for cross correlations (default 10*log10(n/p))")
    p.add_argument("--method", choices=["ratio", "fdr"])
    p.add_argument("--c0", type=float, help="ratio search fraction (default 0.75)")
    p.add_argument("--beta", type=float, help="FDR rate (default 0.01)")
    p.add_argument("--threshold", help="none | fixed:U | log:M | poly:M,E")
    p.add_argument("--max-ar", dest="max_ar", type=int, help="max AR order for prewhitening (default 5)")
    p.add_argument("--seed", type=int)
    p.add_argument("--seasonal-diff", dest="seasonal_diff", type=int, metavar="L")
    p.add_argument("--out", default=".", help="output directory")


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="CSV file, rows in time order")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--header", dest="header", action="store_true", default=None)
    g.add_argument("--no-header", dest="header", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tspca", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a multivariate series")
    _add_input(p)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("volatility", help="segment a volatility process")
    _add_input(p)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_volatility)

    p = sub.add_parser("simulate", help="Monte Carlo recovery study")
    p.add_argument("--design", default="example5", help="example5 | example6")
    p.add_argument("--n", default="1500", help="comma-separated sample sizes")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("forecast", help="rolling forecast comparison")
    _add_input(p)
    p.add_argument("--holdout", type=int, help="number of post-sample points (default 24)")
    p.add_argument("--methods", default="var,rvar,segmentation")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_forecast)
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, (NumericalError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    return EXIT_INPUT


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TSPCAError, OSError, np.linalg.LinAlgError) as exc:
        print(f"tspca {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT if isinstance(exc, OSError) else _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
