"""Monte-Carlo comparison of the NPMLE and the PLE under left truncation.

Datasets are drawn from the truncation model with the *true* laws; the
NPMLE is fitted with an *assumed* truncation CDF as its weight, the PLE uses
the entry ages directly.  Accuracy is the MSE of the estimated CDF at the
nine deciles of the true lifetime law.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, DistSpec, EstimationError, TruncatedSample, Weight, build_weight
from .em import EmConfig, fit_npmle
from .ple import fit_ple
from .simgen import gen_left_truncated, solve_censor_constant

DECILES = np.arange(1, 10) / 10.0
LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class BenchConfig:
    true_g: DistSpec = DistSpec.exponential(1.0)
    true_w: DistSpec = DistSpec.exponential(1.0)
    assumed_w: Weight = None
    n_per_dataset: int = 50
    replicates: int = 400
    censor_targets: tuple = (0.10, 0.25, 0.50)
    #: consecutive base datasets merged into one analysed dataset
    combine_factor: int = 1
    seed: int = 20240
    algorithm: str = "PCG64"
    em: EmConfig = EmConfig(record_trace=False)

    def __post_init__(self):
        if self.assumed_w is None:
            from .core import DistributionCdf

            object.__setattr__(self, "assumed_w", DistributionCdf(self.true_w))
        if self.replicates < 1 or self.n_per_dataset < 1:
            raise ConfigError("replicates and n_per_dataset must be positive")
        if self.combine_factor < 1 or self.replicates % self.combine_factor:
            raise ConfigError("combine_factor must divide replicates")
        if not all(0 < c < 1 for c in self.censor_targets):
            raise ConfigError("censoring targets must lie in (0, 1)")
        object.__setattr__(self, "censor_targets", tuple(float(c) for c in self.censor_targets))

    @property
    def datasets(self) -> int:
        return self.replicates // self.combine_factor

    @classmethod
    def from_dict(cls, cfg: dict) -> "BenchConfig":
        cfg = dict(cfg)
        kw = {}
        for key in ("true_g", "true_w"):
            if key in cfg:
                kw[key] = DistSpec.from_config(cfg.pop(key))
        if "assumed_w" in cfg:
            kw["assumed_w"] = build_weight(cfg.pop("assumed_w"))
        if "em" in cfg:
            em = dict(cfg.pop("em"))
            em.setdefault("record_trace", False)
            kw["em"] = EmConfig(**em)
        if "censor_targets" in cfg:
            kw["censor_targets"] = tuple(cfg.pop("censor_targets"))
        for key in ("n_per_dataset", "replicates", "combine_factor", "seed"):
            if key in cfg:
                kw[key] = int(cfg.pop(key))
        if "algorithm" in cfg:
            kw["algorithm"] = str(cfg.pop("algorithm"))
        cfg.pop("name", None)
        cfg.pop("description", None)
        if cfg:
            raise ConfigError(f"unknown bench config keys: {sorted(cfg)}")
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "true_g": self.true_g.to_config(),
            "true_w": self.true_w.to_config(),
            "assumed_w": self.assumed_w.to_config(),
            "n_per_dataset": self.n_per_dataset,
            "replicates": self.replicates,
            "censor_targets": list(self.censor_targets),
            "combine_factor": self.combine_factor,
            "seed": self.seed,
            "algorithm": self.algorithm,
            "em": {
                "max_iter": self.em.max_iter,
                "mass_tol": self.em.mass_tol,
                "loglik_tol": self.em.loglik_tol,
            },
        }


@dataclass
class LevelResult:
    censor_target: float
    censor_c: float
    n: int
    datasets: int
    censored_fraction: float
    mse_npmle: Optional[np.ndarray]
    mse_ple: Optional[np.ndarray]
    npmle_included: int
    ple_included: int
    ple_undefined: int
    errors: list = field(default_factory=list)

    @property
    def ple_undefined_fraction(self) -> float:
        return self.ple_undefined / self.datasets

    @property
    def improvement(self) -> Optional[np.ndarray]:
        """Per-decile relative MSE reduction of the NPMLE over the PLE."""
        if self.mse_npmle is None or self.mse_ple is None:
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 - self.mse_npmle / self.mse_ple

    @property
    def mean_improvement(self) -> Optional[float]:
        imp = self.improvement
        return None if imp is None else float(np.mean(imp))

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(v) for v in a]

        return {
            "censor_target": self.censor_target,
            "censor_c": self.censor_c,
            "n": self.n,
            "datasets": self.datasets,
            "censored_fraction": self.censored_fraction,
            "mse_npmle": arr(self.mse_npmle),
            "mse_ple": arr(self.mse_ple),
            "log_mse_npmle": arr(log_mse(self.mse_npmle)),
            "log_mse_ple": arr(log_mse(self.mse_ple)),
            "improvement": arr(self.improvement),
            "mean_improvement": self.mean_improvement,
            "npmle_included": self.npmle_included,
            "ple_included": self.ple_included,
            "ple_undefined": self.ple_undefined,
            "ple_undefined_fraction": self.ple_undefined_fraction,
            "errors": self.errors,
        }


@dataclass
class BenchReport:
    config: BenchConfig
    levels: list
    runtime: float

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "deciles": DECILES.tolist(),
            "levels": [lv.to_dict() for lv in self.levels],
            "runtime_seconds": self.runtime,
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for lv in self.levels:
            for name, mse in (("npmle", lv.mse_npmle), ("ple", lv.mse_ple)):
                if mse is None:
                    continue
                for q, v, lg in zip(DECILES, mse, log_mse(mse)):
                    rows.append({
                        "censor_level": lv.censor_target, "decile": round(float(q), 1),
                        "estimator": name, "mse": float(v), "log_mse": float(lg), "n": lv.n,
                    })
        return rows

    def write(self, json_path, csv_path) -> None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
        rows = self.csv_rows()
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh, ["censor_level", "decile", "estimator", "mse", "log_mse", "n"]
            )
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def log_mse(mse):
    if mse is None:
        return None
    return np.log(np.maximum(np.asarray(mse, dtype=float), LOG_FLOOR))


def decile_points(true_g: DistSpec) -> np.ndarray:
    return np.asarray(true_g.ppf(DECILES), dtype=float)


def mse_at_deciles(fits: Sequence, true_g: DistSpec) -> np.ndarray:
    """Mean over ``fits`` of ``(F_hat(q_k) - k/10)^2`` at the true deciles."""
    fits = list(fits)
    if not fits:
        raise ConfigError("no fits to average")
    q = decile_points(true_g)
    est = np.array([np.asarray(f.cdf(q), dtype=float) for f in fits])
    return _mse_from_values(est)


def _mse_from_values(values: np.ndarray) -> np.ndarray:
    return np.mean((np.asarray(values) - DECILES) ** 2, axis=0)


def _dataset(cfg: BenchConfig, censor_c: float, index: int) -> TruncatedSample:
    parts = []
    for k in range(cfg.combine_factor):
        stream = index * cfg.combine_factor + k
        data, _ = gen_left_truncated(
            cfg.true_g, cfg.true_w, censor_c, cfg.n_per_dataset, cfg.seed, stream, cfg.algorithm
        )
        parts.append(data)
    return TruncatedSample(
        np.concatenate([p.entry for p in parts]),
        np.concatenate([p.exit for p in parts]),
        np.concatenate([p.event for p in parts]),
    )


def run_replicate(cfg: BenchConfig, censor_c: float, index: int) -> dict:
    """Fit both estimators on one dataset; returns CDF values at the deciles."""
    q = decile_points(cfg.true_g)
    data = _dataset(cfg, censor_c, index)
    out = {"index": index, "censored": float(1.0 - data.event.mean()),
           "npmle": None, "ple": None, "ple_defined": False, "error": None}
    try:
        fit = fit_npmle(data.to_sample(), cfg.assumed_w, cfg.em)
        out["npmle"] = np.asarray(fit.cdf(q), dtype=float)
    except EstimationError as exc:
        out["error"] = f"npmle: {exc}"
    try:
        ple = fit_ple(data)
        out["ple_defined"] = ple.defined
        if ple.defined:
            out["ple"] = np.asarray(ple.cdf(q), dtype=float)
    except EstimationError as exc:
        out["error"] = (out["error"] + "; " if out["error"] else "") + f"ple: {exc}"
    return out


def _run_level(cfg: BenchConfig, censor_target: float, censor_c: float, results) -> LevelResult:
    results = sorted(results, key=lambda r: r["index"])
    npmle = [r["npmle"] for r in results if r["npmle"] is not None]
    ple = [r["ple"] for r in results if r["ple"] is not None]
    undefined = sum(1 for r in results if r["ple"] is None)
    return LevelResult(
        censor_target=censor_target,
        censor_c=censor_c,
        n=cfg.n_per_dataset * cfg.combine_factor,
        datasets=len(results),
        censored_fraction=float(np.mean([r["censored"] for r in results])),
        mse_npmle=_mse_from_values(np.array(npmle)) if npmle else None,
        mse_ple=_mse_from_values(np.array(ple)) if ple else None,
        npmle_included=len(npmle),
        ple_included=len(ple),
        ple_undefined=undefined,
        errors=[f"dataset {r['index']}: {r['error']}" for r in results if r["error"]],
    )


def _replicate_star(args):
    return run_replicate(*args)


def run_comparison(cfg: BenchConfig, workers: int = 1) -> BenchReport:
    t0 = time.perf_counter()
    levels = []
    for target in cfg.censor_targets:
        censor_c = solve_censor_constant(cfg.true_g, cfg.true_w, target)
        jobs = [(cfg, censor_c, i) for i in range(cfg.datasets)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_replicate_star, jobs, chunksize=8))
        else:
            results = [_replicate_star(j) for j in jobs]
        levels.append(_run_level(cfg, target, censor_c, results))
    return BenchReport(cfg, levels, time.perf_counter() - t0)


def summarize(report: BenchReport) -> str:
    lines = []
    for lv in report.levels:
        imp = lv.mean_improvement
        lines.append(
            f"censoring {lv.censor_target:.2f} (C={lv.censor_c:.4f}, n={lv.n}, "
            f"observed {lv.censored_fraction:.3f}): PLE undefined "
            f"{lv.ple_undefined}/{lv.datasets}; mean improvement "
            + ("n/a" if imp is None or math.isnan(imp) else f"{100 * imp:.1f}%")
        )
        for name, mse in (("NPMLE", lv.mse_npmle), ("PLE", lv.mse_ple)):
            vals = "absent" if mse is None else " ".join(f"{v:.5f}" for v in mse)
            lines.append(f"  {name:5s} MSE: {vals}")
    return "\n".join(lines)
