"""Command-line front end.

Exit codes: 0 ok, 2 EM did not converge, 3 input/config error,
4 degenerate estimator.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bench import BenchConfig, run_comparison, summarize
from .core import (
    ConfigError,
    DegenerateStateError,
    DistSpec,
    EstimationError,
    IdentifiabilityError,
    Sample,
    TruncatedSample,
    UndefinedEstimatorError,
    build_weight,
)
from .em import EmConfig, estimate_from_age_residual, fit_npmle
from .ple import fit_ple
from .simgen import gen_cross_sectional, gen_left_truncated, gen_multiplicative, solve_censor_constant

EXIT_OK, EXIT_NONCONVERGED, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3, 4

FORMATS = {
    "durations": ("value", "status"),
    "truncated": ("entry", "exit", "status"),
    "age-residual": ("age", "residual", "status"),
}


class DatasetError(ConfigError):
    pass


def parse_dataset(path, fmt: str):
    """Read a CSV dataset.

    Returns a :class:`Sample` for ``durations``, a :class:`TruncatedSample`
    for ``truncated`` and an ``(N, 3)`` array for ``age-residual``.  A header
    row is optional but must match the format's column names.
    """
    fmt = fmt.lower().replace("_", "-")
    if fmt not in FORMATS:
        raise DatasetError(f"unknown format {fmt!r}; choose from {sorted(FORMATS)}")
    columns = FORMATS[fmt]
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or not "".join(raw).strip():
                continue
            cells = [c.strip() for c in raw]
            if lineno == 1 and [c.lower() for c in cells] == list(columns):
                continue
            if len(cells) != len(columns):
                raise DatasetError(
                    f"{path}: row {lineno}: expected {len(columns)} columns "
                    f"({','.join(columns)}), got {len(cells)}"
                )
            values = []
            for col, cell in zip(columns, cells):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {lineno}, column {col!r}: not a number: {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(f"{path}: row {lineno}, column {col!r}: not finite")
                values.append(v)
            if values[-1] not in (0.0, 1.0):
                raise DatasetError(f"{path}: row {lineno}, column 'status': must be 0 or 1")
            if fmt == "truncated" and values[0] > values[1]:
                raise DatasetError(f"{path}: row {lineno}: entry exceeds exit")
            if fmt == "truncated" and values[0] < 0:
                raise DatasetError(f"{path}: row {lineno}, column 'entry': negative")
            if fmt == "durations" and values[0] <= 0:
                raise DatasetError(f"{path}: row {lineno}, column 'value': must be > 0")
            if fmt == "age-residual" and (values[0] <= 0 or values[1] < 0):
                raise DatasetError(f"{path}: row {lineno}: need age > 0 and residual >= 0")
            rows.append(values)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    status = arr[:, -1].astype(bool)
    if fmt == "durations":
        return Sample.from_durations(arr[:, 0], status)
    if fmt == "truncated":
        return TruncatedSample(arr[:, 0], arr[:, 1], status)
    return arr


def load_json(source: str, what: str):
    """Parse ``source`` as a JSON file path, or as inline JSON."""
    path = Path(source)
    try:
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return json.loads(source)
    except json.JSONDecodeError as exc:
        where = str(path) if path.exists() else "inline JSON"
        raise ConfigError(
            f"{what}: invalid JSON in {where} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _write_curve(path: Path, fit, start: float = 0.0) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "survival"])
        writer.writerow([repr(float(start)), repr(1.0)])
        for t, s in zip(fit.points, np.atleast_1d(fit.survival(fit.points))):
            writer.writerow([repr(float(t)), repr(float(s))])


def _em_config(args) -> EmConfig:
    kw = {"record_trace": bool(args.loglik_trace)}
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    if args.tol is not None:
        kw["mass_tol"] = args.tol
    if args.loglik_tol is not None:
        kw["loglik_tol"] = args.loglik_tol
    return EmConfig(**kw)


def cmd_estimate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    weight_cfg = load_json(args.weight, "weight")
    w = build_weight(weight_cfg)
    cfg = _em_config(args)
    data = parse_dataset(args.input, args.format)
    if args.format == "age-residual":
        fit = estimate_from_age_residual(data.tolist(), w, cfg)
    else:
        sample = data if isinstance(data, Sample) else data.to_sample()
        fit = fit_npmle(sample, w, cfg)
    resolved = {
        "command": "estimate", "input": str(args.input), "format": args.format,
        "weight": w.to_config(),
        "em": {"max_iter": cfg.max_iter, "mass_tol": cfg.mass_tol, "loglik_tol": cfg.loglik_tol,
               "init": "uniform"},
    }
    _write_json(out / "resolved_config.json", resolved)
    report = fit.to_dict(trace=args.loglik_trace)
    report["weight"] = w.to_config()
    if fit.conditional_on > 0:
        report["estimand"] = f"lifetime law conditional on exceeding {fit.conditional_on:g}"
    _write_json(out / "fit.json", report)
    _write_curve(out / "survival.csv", fit, fit.conditional_on)
    for ex in fit.support.excluded:
        print(f"censored value {ex.value:g} (x{ex.count}) absorbed by {ex.absorber:g} "
              f"[rule {ex.reason}]", file=sys.stderr)
    print(f"NPMLE on {fit.support.h} points, {fit.iterations} iterations, "
          f"loglik {fit.loglik:.10g}, mu* {fit.mu_star:.10g}")
    if not fit.converged:
        print("warning: EM hit max_iter before converging; output is partial", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_ple(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = parse_dataset(args.input, args.format)
    if isinstance(data, Sample):
        values = np.concatenate([data.exact, data.censored])
        status = np.r_[np.ones(data.m, bool), np.zeros(data.n, bool)]
        data = TruncatedSample(np.zeros(values.size), values, status)
    elif not isinstance(data, TruncatedSample):
        raise DatasetError("the PLE needs durations or truncated data")
    fit = fit_ple(data)
    _write_json(out / "resolved_config.json",
                {"command": "ple", "input": str(args.input), "format": args.format})
    _write_json(out / "ple.json", fit.to_dict())
    _write_curve(out / "survival.csv", fit)
    if not fit.defined:
        print("warning: the product-limit estimate is degenerate: survival reaches 0 "
              "before the last event time (empty risk group)", file=sys.stderr)
        return EXIT_DEGENERATE
    print(f"PLE on {fit.event_times.size} event times, tail mass {fit.tail_mass:.6g}")
    return EXIT_OK


def _simulate(cfg: dict, seed_override=None):
    cfg = dict(cfg)
    model = str(cfg.get("model", "")).lower().replace("-", "_")
    seed = int(seed_override if seed_override is not None else cfg.get("seed", 0))
    cfg["seed"] = seed
    algo = cfg.get("algorithm", "PCG64")
    stream = int(cfg.get("stream", 0))
    try:
        if model == "left_truncated":
            g = DistSpec.from_config(cfg["g"])
            w = DistSpec.from_config(cfg["w"])
            if "censor_target" in cfg:
                c = solve_censor_constant(g, w, float(cfg["censor_target"]))
                cfg["censor_c"] = c
            else:
                c = float(cfg.get("censor_c", math.inf))
            data, rep = gen_left_truncated(g, w, c, int(cfg["n"]), seed, stream, algo)
            rows = np.column_stack([data.entry, data.exit, data.event.astype(int)])
            return cfg, FORMATS["truncated"], rows, rep.to_dict()
        if model == "cross_sectional":
            g = DistSpec.from_config(cfg["g"])
            w = build_weight(cfg["weight"])
            f = cfg.get("followup")
            rows, rep = gen_cross_sectional(g, w, None if f is None else float(f),
                                            int(cfg["n"]), seed, stream, algo)
            return cfg, FORMATS["age-residual"], rows, rep.to_dict()
        if model == "multiplicative":
            g0 = DistSpec.from_config(cfg["g0"])
            w = build_weight(cfg["weight"])
            x, y = gen_multiplicative(g0, w, int(cfg["m"]), int(cfg["n"]), seed, stream, algo)
            rows = np.column_stack([np.r_[x, y], np.r_[np.ones(x.size), np.zeros(y.size)]])
            rep = {"model": "multiplicative", "records": int(rows.shape[0]), "seed": seed,
                   "stream": stream, "algorithm": algo, "exact": int(x.size), "reduced": int(y.size)}
            return cfg, FORMATS["durations"], rows, rep
    except KeyError as exc:
        raise ConfigError(f"simulation config is missing {exc}") from None
    raise ConfigError(f"unknown simulation model {cfg.get('model')!r}")


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg, header, rows, report = _simulate(load_json(args.config, "simulation config"), args.seed)
    with open(out / "data.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row[:-1]] + [int(row[-1])])
    _write_json(out / "report.json", report)
    _write_json(out / "resolved_config.json", cfg)
    print(f"wrote {len(rows)} records to {out / 'data.csv'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    raw = load_json(args.config, "bench config")
    if not isinstance(raw, dict):
        raise ConfigError("bench config must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = BenchConfig.from_dict(raw)
    _write_json(out / "resolved_config.json", cfg.to_dict())
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    report = run_comparison(cfg, workers=max(1, workers))
    report.write(out / "report.json", out / "report.csv")
    print(summarize(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biased-npmle",
        description="NPMLE of a lifetime law under known biased sampling and censoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="fit the NPMLE with a known weight")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="durations", choices=sorted(FORMATS))
    p.add_argument("--weight", required=True, help="weight JSON file or inline JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float, help="sup-norm mass change tolerance")
    p.add_argument("--loglik-tol", type=float, help="relative log-likelihood tolerance")
    p.add_argument("--loglik-trace", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("ple", help="product-limit estimator for truncated data")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="truncated", choices=["durations", "truncated"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ple)

    p = sub.add_parser("simulate", help="generate a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="NPMLE vs PLE Monte-Carlo comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: logical cores)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UndefinedEstimatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateStateError as exc:
        print(f"error: degenerate estimator: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except IdentifiabilityError as exc:
        print(f"error: not identifiable: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EstimationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
