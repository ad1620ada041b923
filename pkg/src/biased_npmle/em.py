"""NPMLE of a lifetime law from W-biased, right-censored data by EM.

The iteration works on the weighted law ``G^W`` (masses ``p``) and the
unbiased law is recovered at the end by ``pi_j ∝ p_j / W(t_j)``.  With
``W`` constant it is the self-consistency form of Kaplan-Meier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .core import (
    ConfigError,
    DegenerateStateError,
    DiscreteDistribution,
    IdentifiabilityError,
    Sample,
    Weight,
)
from .support import SupportSet, reduce_support, zero_region_end

ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class EmConfig:
    max_iter: int = 100_000
    mass_tol: float = 1e-8
    loglik_tol: float = 1e-10
    #: "uniform" or an explicit mass vector on the support
    init: Union[str, ArrayLike] = "uniform"
    record_trace: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if not (self.mass_tol > 0 and self.loglik_tol > 0):
            raise ConfigError("tolerances must be positive")
        if isinstance(self.init, str) and self.init != "uniform":
            raise ConfigError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class Fit:
    support: SupportSet
    p: DiscreteDistribution
    pi: DiscreteDistribution
    loglik: float
    iterations: int
    converged: bool
    mu_star: float
    stop_reason: str = ""
    #: estimates are of the law conditional on exceeding this value
    conditional_on: float = 0.0
    trace: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def points(self) -> np.ndarray:
        return self.pi.points

    @property
    def masses(self) -> np.ndarray:
        return self.pi.masses

    def cdf(self, t):
        return self.pi.cdf(t)

    def survival(self, t):
        return self.pi.survival(t)

    def to_dict(self, trace: bool = False) -> dict:
        out = {
            "estimator": "npmle",
            "support": self.points.tolist(),
            "p": self.p.masses.tolist(),
            "pi": self.pi.masses.tolist(),
            "mu_star": self.mu_star,
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "conditional_on": self.conditional_on,
            "exact_mult": self.support.exact_mult.tolist(),
            "cens_mult": self.support.cens_mult.tolist(),
            "excluded": [ex._asdict() for ex in self.support.excluded],
        }
        if trace and self.trace is not None:
            out["loglik_trace"] = self.trace.tolist()
        return out


def _masses(p) -> np.ndarray:
    if isinstance(p, DiscreteDistribution):
        return p.masses
    return np.asarray(p, dtype=float)


def _inverse_weights(support: SupportSet, w: Optional[Weight]) -> np.ndarray:
    wv = support.weight_values(w)
    if np.any(wv <= 0):
        bad = support.points[wv <= 0][0]
        raise IdentifiabilityError(f"support point {bad:g} has W = 0")
    return 1.0 / wv


def _tail_sums(q: np.ndarray) -> np.ndarray:
    return np.cumsum(q[::-1])[::-1]


def _loglik(p, xi, zeta, inv_w) -> float:
    with np.errstate(divide="ignore"):
        lx = np.log(p[xi > 0])
        lc = np.log(_tail_sums(p * inv_w)[zeta > 0])
    total = float(np.dot(xi[xi > 0], lx) + np.dot(zeta[zeta > 0], lc))
    return total if not math.isnan(total) else -math.inf


def loglik(support: SupportSet, p, w: Optional[Weight] = None) -> float:
    """Log of the discrete likelihood: ``sum xi log p + sum zeta log tail(p/W)``."""
    p = _masses(p)
    if p.size != support.h:
        raise ConfigError("mass vector does not match the support")
    return _loglik(p, support.exact_mult, support.cens_mult, _inverse_weights(support, w))


def _update(p, xi, zeta, inv_w, total):
    q = p * inv_w
    tail = _tail_sums(q)
    need = zeta > 0
    if np.any(tail[need] <= 0):
        raise DegenerateStateError(
            "no mass at or beyond a censored observation; cannot redistribute"
        )
    ratio = np.zeros_like(q)
    ratio[need] = zeta[need] / tail[need]
    new = (xi + q * np.cumsum(ratio)) / total
    return new / new.sum()


def em_step(support: SupportSet, w: Optional[Weight], p_old) -> DiscreteDistribution:
    """One EM update in weighted-law coordinates."""
    p = _masses(p_old)
    xi, zeta = support.exact_mult, support.cens_mult
    new = _update(p, xi, zeta, _inverse_weights(support, w), xi.sum() + zeta.sum())
    return DiscreteDistribution.normalized(support.points, new)


def em_step_direct(support: SupportSet, w: Optional[Weight], pi_old) -> DiscreteDistribution:
    """The same update driven by the unbiased masses ``pi``.

    Returns the new weighted-law masses; agrees with :func:`em_step` when
    ``pi`` is the image of ``p`` under :func:`invert_weighted`.
    """
    pi = _masses(pi_old)
    xi, zeta = support.exact_mult, support.cens_mult
    tail = _tail_sums(pi)
    need = zeta > 0
    if np.any(tail[need] <= 0):
        raise DegenerateStateError("no mass at or beyond a censored observation")
    ratio = np.zeros_like(pi)
    ratio[need] = zeta[need] / tail[need]
    new = (xi + pi * np.cumsum(ratio)) / (xi.sum() + zeta.sum())
    return DiscreteDistribution.normalized(support.points, new)


def invert_weighted(support: SupportSet, w: Optional[Weight], p) -> DiscreteDistribution:
    """Map weighted-law masses to the unbiased law, ``pi_j ∝ p_j / W(t_j)``."""
    p = _masses(p)
    wv = support.weight_values(w)
    if np.any((p > 0) & (wv <= 0)):
        bad = support.points[(p > 0) & (wv <= 0)][0]
        raise IdentifiabilityError(f"positive mass at {bad:g} where W = 0")
    q = np.zeros_like(p)
    pos = p > 0
    q[pos] = p[pos] / wv[pos]
    return DiscreteDistribution.normalized(support.points, q)


def reweight(support: SupportSet, w: Optional[Weight], pi) -> DiscreteDistribution:
    """Unbiased masses to weighted-law masses, ``p_j ∝ W(t_j) pi_j``."""
    return DiscreteDistribution.normalized(
        support.points, _masses(pi) * support.weight_values(w)
    )


def _initial(support: SupportSet, cfg: EmConfig) -> np.ndarray:
    if isinstance(cfg.init, str):
        return np.full(support.h, 1.0 / support.h)
    p0 = np.asarray(cfg.init, dtype=float)
    if p0.size != support.h:
        raise ConfigError(f"custom init has {p0.size} masses, support has {support.h}")
    return DiscreteDistribution(support.points, p0).masses.copy()


def run_em(support: SupportSet, w: Optional[Weight], cfg: EmConfig = EmConfig()) -> Fit:
    """Iterate the EM update on a fixed support until a tolerance triggers."""
    xi = support.exact_mult.astype(float)
    zeta = support.cens_mult.astype(float)
    # iterate on W rescaled to max 1: the relative likelihood test would
    # otherwise depend on the arbitrary scale of W through n log c
    inv_w = _inverse_weights(support, w)
    scale = float(inv_w.max())
    inv_w = inv_w / scale
    offset = float(zeta.sum()) * math.log(scale)
    total = xi.sum() + zeta.sum()

    if zeta.sum() == 0:
        # nothing to redistribute: the weighted law is the empirical one
        p = xi / total
        ll = _loglik(p, xi, zeta, inv_w) + offset
        return _finish(support, w, p, ll, 0, True, "closed-form", np.array([ll]) if cfg.record_trace else None)

    p = _initial(support, cfg)
    ll = _loglik(p, xi, zeta, inv_w)
    trace = [ll] if cfg.record_trace else None
    converged, reason, it = False, "max_iter", 0
    for it in range(1, cfg.max_iter + 1):
        new = _update(p, xi, zeta, inv_w, total)
        ll_new = _loglik(new, xi, zeta, inv_w)
        change = float(np.max(np.abs(new - p)))
        p = new
        if trace is not None:
            trace.append(ll_new)
        if change <= cfg.mass_tol:
            converged, reason = True, "mass_tol"
            ll = ll_new
            break
        # a flat likelihood alone is not enough: slow linear phases stall it
        # long before the masses settle
        if (
            change <= 5 * cfg.mass_tol
            and math.isfinite(ll)
            and abs(ll_new - ll) <= cfg.loglik_tol * abs(ll_new)
        ):
            converged, reason = True, "loglik_tol"
            ll = ll_new
            break
        ll = ll_new
    return _finish(
        support, w, p, ll + offset, it, converged, reason,
        np.asarray(trace) + offset if trace is not None else None,
    )


def _finish(support, w, p, ll, iterations, converged, reason, trace) -> Fit:
    pdist = DiscreteDistribution.normalized(support.points, p)
    pi = invert_weighted(support, w, pdist)
    wv = support.weight_values(w)
    mu_star = float(np.dot(wv, pi.masses))
    cond = zero_region_end(w) if w is not None else 0.0
    if not (cond > 1e-290) or not math.isfinite(cond):
        cond = 0.0
    return Fit(support, pdist, pi, float(ll), int(iterations), bool(converged),
               mu_star, reason, cond, trace)


def fit_npmle(sample: Sample, w: Weight, cfg: EmConfig = EmConfig()) -> Fit:
    """NPMLE of the lifetime law from a W-biased, right-censored sample."""
    return run_em(reduce_support(sample, w), w, cfg)


def estimate_from_age_residual(
    pairs: Iterable, w: Weight, cfg: EmConfig = EmConfig()
) -> Fit:
    """Fit from cross-sectional ``(age, residual, event)`` triples.

    Only the total ``age + residual`` enters the likelihood; censored
    records contribute their total observed duration.
    """
    pairs = [tuple(r) for r in pairs]
    if not pairs:
        raise ConfigError("no records")
    a = np.array([r[0] for r in pairs], dtype=float)
    r = np.array([r[1] for r in pairs], dtype=float)
    d = np.array([bool(r[2]) for r in pairs], dtype=bool)
    if np.any(a <= 0) or np.any(r < 0):
        raise ConfigError("ages must be positive and residuals non-negative")
    return fit_npmle(Sample.from_durations(a + r, d), w, cfg)


def survival_at(fit, t):
    """Right-continuous survival ``1 - sum_{t_j <= t} pi_j`` of a fitted law."""
    return fit.survival(t)
