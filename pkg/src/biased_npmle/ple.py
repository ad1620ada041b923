"""Product-limit estimator for left-truncated, right-censored data.

No knowledge of the truncation law is used.  A record with entry ``a`` and
exit ``e`` is at risk at ``t`` iff ``a <= t <= e``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution, TruncatedSample, UndefinedEstimatorError


@dataclass(frozen=True)
class PLEFit:
    event_times: np.ndarray
    hazards: np.ndarray
    at_risk: np.ndarray
    #: survival just after each event time
    surv: np.ndarray
    #: masses on the event times plus, if positive, the tail at the last exit
    dist: DiscreteDistribution
    tail_mass: float
    tail_point: float
    defined: bool

    @property
    def points(self):
        return self.dist.points

    @property
    def masses(self):
        return self.dist.masses

    def cdf(self, t):
        return self.dist.cdf(t)

    def survival(self, t):
        return self.dist.survival(t)

    def to_dict(self) -> dict:
        return {
            "estimator": "ple",
            "defined": self.defined,
            "support": self.points.tolist(),
            "pi": self.masses.tolist(),
            "event_times": self.event_times.tolist(),
            "hazards": self.hazards.tolist(),
            "at_risk": self.at_risk.tolist(),
            "survival": self.surv.tolist(),
            "tail_mass": self.tail_mass,
            "tail_point": self.tail_point,
            "tail_convention": "unassigned mass placed at the largest exit time",
        }


def _risk_counts(entry, exit_, times):
    entered = np.searchsorted(np.sort(entry), times, side="right")
    left = np.searchsorted(np.sort(exit_), times, side="left")
    return entered - left


def fit_ple(records) -> PLEFit:
    data = TruncatedSample.from_records(records)
    times = np.unique(data.exit[data.event])
    if times.size == 0:
        raise UndefinedEstimatorError("the product-limit estimator needs at least one event")
    deaths = np.bincount(
        np.searchsorted(times, data.exit[data.event]), minlength=times.size
    ).astype(float)
    at_risk = _risk_counts(data.entry, data.exit, times)
    # an event record is always in its own risk set, so at_risk >= deaths >= 1
    hazards = deaths / at_risk
    surv = np.cumprod(1.0 - hazards)
    masses = -np.diff(np.concatenate([[1.0], surv]))
    masses = np.clip(masses, 0.0, None)
    tail = float(surv[-1])
    points = times
    tail_point = float(np.max(data.exit))
    if tail > 0:
        if tail_point > times[-1]:
            points = np.append(times, tail_point)
            masses = np.append(masses, tail)
        else:
            masses = masses.copy()
            masses[-1] += tail
    dist = DiscreteDistribution.normalized(points, masses)
    defined = not (times.size > 1 and np.any(surv[:-1] <= 0))
    return PLEFit(times, hazards, at_risk, surv, dist, tail, tail_point, bool(defined))


def ple_defined(records) -> bool:
    """False when the estimate dies out before the latest event time."""
    return fit_ple(records).defined
