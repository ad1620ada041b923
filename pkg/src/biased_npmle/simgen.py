"""Seedable generators for the three sampling designs, plus censoring calibration."""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize

from .core import ConfigError, DistSpec, TruncatedSample, Weight

BIT_GENERATORS = ("PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937")
GRID_POINTS = 2 ** 14
TAIL_QUANTILE = 1e-8
MAX_CONSECUTIVE_REJECTIONS = 10_000_000


def make_rng(seed: int, stream: int = 0, algorithm: str = "PCG64") -> np.random.Generator:
    """Independent, reproducible stream ``stream`` of the run seeded by ``seed``."""
    if algorithm not in BIT_GENERATORS:
        raise ConfigError(f"unknown bit generator {algorithm!r}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(getattr(np.random, algorithm)(ss))


@dataclass
class GenReport:
    model: str
    records: int
    seed: int
    stream: int = 0
    algorithm: str = "PCG64"
    rejections: int = 0
    censored_fraction: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def gen_left_truncated(
    g: DistSpec,
    w: DistSpec,
    censor_c: float,
    n: int,
    seed: int,
    stream: int = 0,
    algorithm: str = "PCG64",
) -> tuple[TruncatedSample, GenReport]:
    """Draw ``(A, T) ~ w x g`` conditioned on ``A <= T``, censor at ``A + C``.

    Rejection sampling; exactly ``n`` records are returned.
    """
    if n < 1:
        raise ConfigError("n must be positive")
    if not censor_c > 0:
        raise ConfigError("censoring constant must be positive")
    rng = make_rng(seed, stream, algorithm)
    got_a, got_t = [], []
    have = rejections = since_last = 0
    batch = max(64, 2 * n)
    while have < n:
        a = w.sample(rng, batch)
        t = g.sample(rng, batch)
        ok = a <= t
        k = int(ok.sum())
        if k == 0:
            since_last += batch
            rejections += batch
            if since_last >= MAX_CONSECUTIVE_REJECTIONS:
                raise ConfigError(
                    f"{since_last} consecutive rejections: P(A <= T) is too small"
                )
            batch = min(batch * 2, 1_000_000)
            continue
        take = min(k, n - have)
        idx = np.flatnonzero(ok)[:take]
        # everything drawn before the last kept pair counts as rejected
        rejections += int(idx[-1] + 1 - take)
        since_last = 0
        got_a.append(a[idx])
        got_t.append(t[idx])
        have += take
    a = np.concatenate(got_a)
    t = np.concatenate(got_t)
    limit = a + censor_c
    event = t <= limit
    data = TruncatedSample(a, np.minimum(t, limit), event)
    report = GenReport(
        "left_truncated", n, int(seed), int(stream), algorithm, rejections,
        float(1.0 - event.mean()), {"censor_c": float(censor_c)},
    )
    return data, report


def _support(d: DistSpec) -> tuple[float, float]:
    lo, hi = d.frozen.support()
    return float(lo), float(hi)


def censoring_probability(g: DistSpec, w: DistSpec, censor_c: float) -> float:
    """``P(T > A + C | A <= T)`` by numerical integration over ``A``."""
    lo, hi = _support(w)
    opts = dict(epsabs=1e-12, epsrel=1e-10, limit=200)
    den = integrate.quad(lambda a: w.pdf(a) * g.sf(a), lo, hi, **opts)[0]
    if not den > 0:
        raise ConfigError("P(A <= T) is zero for this pair of laws")
    if math.isinf(censor_c):
        return 0.0
    num = integrate.quad(lambda a: w.pdf(a) * g.sf(a + censor_c), lo, hi, **opts)[0]
    return num / den


@functools.lru_cache(maxsize=256)
def solve_censor_constant(g: DistSpec, w: DistSpec, target: float, tol: float = 1e-6) -> float:
    """Censoring constant ``C`` giving censoring probability ``target``."""
    if not 0 < target < 1:
        raise ConfigError("censoring target must lie in (0, 1)")
    p0 = censoring_probability(g, w, 0.0)
    if target >= p0:
        raise ConfigError(
            f"censoring target {target} is unattainable: at C = 0 it is only {p0:.6g}"
        )
    hi = max(1.0, g.mean())
    while censoring_probability(g, w, hi) > target:
        hi *= 2
        if hi > 1e12:
            raise ConfigError("could not bracket the censoring constant")
    return float(
        optimize.brentq(lambda c: censoring_probability(g, w, c) - target, 0.0, hi, xtol=tol)
    )


def _age_grid(g: DistSpec, w: Weight):
    upper = float(g.isf(TAIL_QUANTILE))
    grid = np.linspace(0.0, upper, GRID_POINTS)
    wv = np.asarray(w(grid), dtype=float)
    if wv[0] != 0:
        raise ConfigError("cross-sectional sampling needs W(0) = 0")
    sf = g.sf(grid)
    # Stieltjes sum of sf dW, trapezoid in sf
    inc = 0.5 * (sf[1:] + sf[:-1]) * np.diff(wv)
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    return grid, cum


def gen_cross_sectional(
    g: DistSpec,
    w: Weight,
    followup: float | None,
    n: int,
    seed: int,
    stream: int = 0,
    algorithm: str = "PCG64",
) -> tuple[np.ndarray, GenReport]:
    """Cross-sectional ``(age, residual, event)`` rows, one per sampled subject.

    Ages come from the density ``sf_G(a) dW(a) / mu*`` by numeric inverse-CDF
    on a fixed grid; residuals from ``G`` conditioned to exceed the age.
    A finite ``followup`` censors residuals at that horizon.
    """
    if n < 1:
        raise ConfigError("n must be positive")
    if followup is not None and not followup > 0:
        raise ConfigError("follow-up horizon must be positive")
    grid, cum = _age_grid(g, w)
    mu = float(cum[-1])
    if not (math.isfinite(mu) and mu > 0):
        raise ConfigError(f"mu* = {mu} on the age grid; W and G are incompatible")
    rng = make_rng(seed, stream, algorithm)
    u = rng.uniform(size=n)
    v = rng.uniform(size=n)
    ages = np.interp(u * mu, cum, grid)
    ages = np.maximum(ages, np.nextafter(0.0, 1.0))
    totals = np.asarray(g.isf(v * g.sf(ages)), dtype=float)
    resid = np.maximum(totals - ages, 0.0)
    if followup is None or math.isinf(followup):
        event = np.ones(n, dtype=bool)
    else:
        event = resid <= followup
        resid = np.minimum(resid, followup)
    rows = np.column_stack([ages, resid, event.astype(float)])
    report = GenReport(
        "cross_sectional", n, int(seed), int(stream), algorithm, 0,
        float(1.0 - event.mean()),
        {"grid_points": GRID_POINTS, "tail_quantile": TAIL_QUANTILE, "mu_star": mu},
    )
    return rows, report


def gen_multiplicative(
    g0: DistSpec,
    w: Weight,
    m: int,
    n: int,
    seed: int,
    stream: int = 0,
    algorithm: str = "PCG64",
) -> tuple[np.ndarray, np.ndarray]:
    """``m`` exact draws from ``g0`` and ``n`` values ``W(Z) U`` with ``Z ~ g0``."""
    if m < 0 or n < 0 or m + n < 1:
        raise ConfigError("need m, n >= 0 and m + n >= 1")
    rng = make_rng(seed, stream, algorithm)
    x = g0.sample(rng, m)
    z = g0.sample(rng, n)
    u = rng.uniform(size=n)
    y = np.asarray(w(z), dtype=float) * u
    return x, y
