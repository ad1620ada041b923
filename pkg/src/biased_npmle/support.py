"""Candidate mass points of the NPMLE and their multiplicities.

Two layouts are handled.  For the biased-sampling likelihood the support is
a subset of the observed values; censored values sitting on a plateau of
``W`` shared with a larger observation are absorbed by it.  For the
multiplicative-censoring likelihood the candidates are the exact values and
the generalized inverses ``W^-1(y)``.

``cens_mult[j]`` counts the censored observations whose likelihood factor is
``sum_{k >= j} p_k / W(t_k)``; it is what the EM redistributes.  Absorbed and
tied censored observations are therefore counted at the first support point
whose tail sum equals their factor, so ``cens_mult.sum() == n`` always.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    DEFAULT_REL_TOL,
    ConfigError,
    IdentifiabilityError,
    NoSolutionError,
    Sample,
    Weight,
    values_equal,
)

BIASED = "biased"
MULTIPLICATIVE = "multiplicative"


class Exclusion(NamedTuple):
    value: float
    count: int
    reason: str  # "i", "ii" or "zero-weight"
    absorber: float


@dataclass(frozen=True)
class SupportSet:
    points: np.ndarray
    exact_mult: np.ndarray
    cens_mult: np.ndarray
    excluded: tuple = ()
    mode: str = BIASED
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.points, dtype=float).ravel()
        xi = np.asarray(self.exact_mult, dtype=np.int64).ravel()
        zeta = np.asarray(self.cens_mult, dtype=np.int64).ravel()
        if not (t.size == xi.size == zeta.size) or t.size == 0:
            raise ConfigError("support arrays must be non-empty and aligned")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("support points must be strictly increasing")
        if np.any(xi < 0) or np.any(zeta < 0):
            raise ConfigError("multiplicities must be non-negative")
        for arr in (t, xi, zeta):
            arr.setflags(write=False)
        object.__setattr__(self, "points", t)
        object.__setattr__(self, "exact_mult", xi)
        object.__setattr__(self, "cens_mult", zeta)
        object.__setattr__(self, "excluded", tuple(self.excluded))

    @property
    def h(self) -> int:
        return int(self.points.size)

    @property
    def m(self) -> int:
        return int(self.exact_mult.sum())

    @property
    def n(self) -> int:
        return int(self.cens_mult.sum())

    def weight_values(self, w: Weight) -> np.ndarray:
        if self.weights is not None:
            return np.asarray(self.weights, dtype=float)
        return np.asarray(w(self.points), dtype=float)


def _distinct(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if values.size == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    u, c = np.unique(values, return_counts=True)
    return u, c.astype(np.int64)


def critical_points(sample: Sample, w: Weight, mode: str = BIASED) -> np.ndarray:
    """Sorted distinct points that may carry mass before any reduction."""
    if mode == BIASED:
        return np.unique(np.concatenate([sample.exact, sample.censored]))
    if mode == MULTIPLICATIVE:
        inv = np.array([w.geninv(y) for y in sample.censored], dtype=float)
        return np.unique(np.concatenate([sample.exact, inv]))
    raise ConfigError(f"unknown support mode {mode!r}")


def zero_region_end(w: Weight) -> float:
    """Right end of the initial interval on which ``W`` vanishes."""
    try:
        return float(w.geninv(1e-300))
    except NoSolutionError:
        return float("inf")


def _check_identifiable(w: Weight, xs: np.ndarray, wx: np.ndarray) -> None:
    bad = xs[wx <= 0]
    if bad.size:
        end = zero_region_end(w)
        raise IdentifiabilityError(
            f"exact observation {bad[0]:g} has W = 0; the lifetime law is not "
            f"identifiable where W vanishes (W = 0 on [0, {end:g}]); "
            f"only the law conditional on exceeding {end:g} can be estimated"
        )


def _start_indices(points, is_exact_point, values):
    """Index of the first support point whose tail sum is the censored factor.

    A censored value tied with an exact one is resolved after the failure,
    so its tail starts strictly above; with nothing above, the last point
    absorbs it.
    """
    idx = np.searchsorted(points, values, side="left")
    idx = np.minimum(idx, points.size - 1)
    tied_exact = (points[idx] == values) & is_exact_point[idx]
    idx = np.where(tied_exact, np.minimum(idx + 1, points.size - 1), idx)
    return idx


def reduce_support(
    sample: Sample, w: Weight, rel_tol: float = DEFAULT_REL_TOL
) -> SupportSet:
    """Support for the biased-sampling likelihood after plateau absorption."""
    xs, xc = _distinct(sample.exact)
    ys, yc = _distinct(sample.censored)
    wx = np.asarray(w(xs), dtype=float)
    wy = np.asarray(w(ys), dtype=float)
    _check_identifiable(w, xs, wx)

    exact_set = set(xs.tolist())
    keep_y = []
    pending = []  # (value, count, reason, absorber) awaiting retention check
    for k, (y, c, wyk) in enumerate(zip(ys, yc, wy)):
        if y in exact_set:
            continue  # tied with a failure; handled by the start-index rule
        above_x = xs[(xs > y) & values_equal(wx, wyk, rel_tol)]
        if above_x.size:
            pending.append(Exclusion(float(y), int(c), "i", float(above_x[0])))
            continue
        above_y = ys[k + 1:][values_equal(wy[k + 1:], wyk, rel_tol)]
        if above_y.size:
            pending.append(Exclusion(float(y), int(c), "ii", float(above_y[0])))
            continue
        if wyk <= 0:
            pending.append(Exclusion(float(y), int(c), "zero-weight", np.nan))
            continue
        keep_y.append(y)

    points = np.union1d(xs, np.asarray(keep_y, dtype=float))
    if points.size == 0:
        raise IdentifiabilityError(
            "every observation lies where W = 0; nothing can be estimated "
            f"(W = 0 on [0, {zero_region_end(w):g}])"
        )
    is_exact = np.isin(points, xs)
    excluded = []
    for ex in pending:
        if ex.reason == "zero-weight":
            nxt = points[points > ex.value]
            if nxt.size == 0:
                raise IdentifiabilityError(
                    f"censored value {ex.value:g} lies where W = 0 and no "
                    "observation with positive weight exceeds it"
                )
            ex = ex._replace(absorber=float(nxt[0]))
        excluded.append(ex)

    xi = np.zeros(points.size, dtype=np.int64)
    xi[np.searchsorted(points, xs)] = xc
    zeta = np.zeros(points.size, dtype=np.int64)
    if ys.size:
        np.add.at(zeta, _start_indices(points, is_exact, ys), yc)
    return SupportSet(points, xi, zeta, tuple(excluded), BIASED, np.asarray(w(points), dtype=float))


def full_support(sample: Sample, w: Weight) -> SupportSet:
    """Every distinct observation as a candidate point, no absorption.

    The EM run on this set reaches the same maximal likelihood as on
    :func:`reduce_support`; it simply wastes effort on zero-mass points.
    Zero-weight points cannot carry mass and are still dropped.
    """
    xs, xc = _distinct(sample.exact)
    ys, yc = _distinct(sample.censored)
    wx = np.asarray(w(xs), dtype=float)
    _check_identifiable(w, xs, wx)
    points = np.union1d(xs, ys)
    points = points[np.asarray(w(points), dtype=float) > 0]
    if points.size == 0:
        raise IdentifiabilityError("every observation lies where W = 0")
    is_exact = np.isin(points, xs)
    xi = np.zeros(points.size, dtype=np.int64)
    xi[np.searchsorted(points, xs)] = xc
    zeta = np.zeros(points.size, dtype=np.int64)
    if ys.size:
        if np.any(ys > points[-1]):
            raise IdentifiabilityError("censored value beyond all positive-weight points")
        np.add.at(zeta, _start_indices(points, is_exact, ys), yc)
    return SupportSet(points, xi, zeta, (), BIASED, np.asarray(w(points), dtype=float))


def reduce_support_multiplicative(
    x0, y0, w: Weight, rel_tol: float = DEFAULT_REL_TOL
) -> SupportSet:
    """Support for the multiplicative-censoring likelihood.

    Each censored ``y`` is placed at the smallest exact value sharing the
    weight level of ``W^-1(y)``, or at ``W^-1(y)`` itself when none does.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    y0 = np.asarray(y0, dtype=float).ravel()
    if x0.size + y0.size == 0:
        raise ConfigError("need at least one observation")
    if np.any(x0 <= 0) or np.any(y0 <= 0):
        raise ConfigError("observations must be strictly positive")
    xs, xc = _distinct(x0)
    wx = np.asarray(w(xs), dtype=float) if xs.size else np.empty(0)
    _check_identifiable(w, xs, wx)
    ys, yc = _distinct(y0)
    placed = np.empty(ys.size)
    for k, y in enumerate(ys):
        v = w.geninv(float(y))
        level = float(w(v))
        same = xs[(xs >= v) & values_equal(wx, level, rel_tol)] if xs.size else xs
        placed[k] = same[0] if same.size else v
    points = np.union1d(xs, placed)
    xi = np.zeros(points.size, dtype=np.int64)
    if xs.size:
        xi[np.searchsorted(points, xs)] = xc
    zeta = np.zeros(points.size, dtype=np.int64)
    if ys.size:
        np.add.at(zeta, np.searchsorted(points, placed), yc)
    wp = np.asarray(w(points), dtype=float)
    if np.any(wp <= 0):
        raise IdentifiabilityError("support point with W = 0 in multiplicative model")
    return SupportSet(points, xi, zeta, (), MULTIPLICATIVE, wp)
