import math

import hypothesis
import numpy as np

from biased_npmle.core import (
    CdfTable,
    Constant,
    CumulativeRate,
    DistributionCdf,
    DistSpec,
    Linear,
    Sample,
    ShiftedLinear,
    Step,
    TruncatedInterval,
)


hypothesis.settings.register_profile("default", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")

#: (criterion, passed, detail) lines filled in by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")


def catalog_weight(rng: np.random.Generator):
    """A random weight from every variant of the catalog."""
    kind = rng.integers(9)
    if kind == 0:
        return Constant(float(rng.uniform(0.5, 3)))
    if kind == 1:
        return Linear()
    if kind == 2:
        return ShiftedLinear(float(rng.uniform(0, 2)))
    if kind == 3:
        return TruncatedInterval(0.0, float(rng.uniform(0.5, 3)))
    if kind == 4:
        k = int(rng.integers(1, 5))
        jumps = np.sort(rng.choice(np.arange(0, 5) * 0.5, size=k, replace=False))
        return Step.from_levels(jumps, rng.uniform(0.2, 2, size=k))
    if kind in (5, 6):
        t = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 4, size=4))])
        v = np.concatenate([[0.05], np.sort(rng.uniform(0.1, 2, size=4))])
        return CdfTable(tuple(t), tuple(v), "flat" if kind == 5 else "linear")
    if kind == 7:
        grid = np.linspace(-5, 1, 25)
        return CumulativeRate(grid=tuple(grid), rates=tuple(rng.uniform(0.1, 2, 25)),
                              window_end=float(rng.uniform(0, 1)))
    return DistributionCdf(DistSpec.exponential(float(rng.uniform(0.5, 2))))


def random_sample(rng: np.random.Generator, max_size: int, discrete: bool = False) -> Sample:
    size = int(rng.integers(1, max_size + 1))
    if discrete:
        values = rng.integers(1, 9, size=size) * 0.5
    else:
        values = np.round(rng.exponential(1.5, size=size) + 0.05, 6)
    event = rng.uniform(size=size) < rng.uniform(0.2, 0.9)
    return Sample.from_durations(values, event)


def kaplan_meier(values, event):
    """Textbook product-limit estimate, censoring after failure at ties.

    Returns (points, masses) with any mass left after the last event placed
    at the largest observation.
    """
    values = np.asarray(values, float)
    event = np.asarray(event, bool)
    times = sorted(set(values[event].tolist()))
    surv = 1.0
    pts, mass = [], []
    for t in times:
        at_risk = int(np.sum(values >= t))
        deaths = int(np.sum((values == t) & event))
        new = surv * (1 - deaths / at_risk)
        pts.append(t)
        mass.append(surv - new)
        surv = new
    last = float(values.max())
    if surv > 0:
        if pts and pts[-1] == last:
            mass[-1] += surv
        else:
            pts.append(last)
            mass.append(surv)
    return np.array(pts), np.array(mass)


def direct_loglik(points, xi, zeta, wvals, p):
    """Discrete biased-censored log-likelihood evaluated term by term."""
    total = 0.0
    h = len(points)
    for j in range(h):
        if xi[j]:
            if p[j] <= 0:
                return -math.inf
            total += xi[j] * math.log(p[j])
        if zeta[j]:
            tail = sum(p[k] / wvals[k] for k in range(j, h))
            if tail <= 0:
                return -math.inf
            total += zeta[j] * math.log(tail)
    return total


def simplex_grid_max(xi, zeta, wvals, step=1e-3, fine=1e-5, radius=2e-3):
    """Brute-force maximizer of the discrete likelihood on the simplex, h <= 3."""
    xi = np.asarray(xi, float)
    zeta = np.asarray(zeta, float)
    inv = 1.0 / np.asarray(wvals, float)
    h = xi.size

    def ll(P):  # P: (N, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            tails = np.cumsum((P * inv)[:, ::-1], axis=1)[:, ::-1]
            out = np.where(xi > 0, xi * np.log(P), 0.0).sum(1)
            out += np.where(zeta > 0, zeta * np.log(tails), 0.0).sum(1)
        return np.where(np.isnan(out), -np.inf, out)

    def candidates(center, delta, width):
        if h == 1:
            return np.ones((1, 1))
        axes = [np.arange(max(0.0, c - width), min(1.0, c + width) + delta / 2, delta)
                for c in center[:-1]]
        if h == 3:
            a, b = np.meshgrid(*axes, indexing="ij")
            pts = np.column_stack([a.ravel(), b.ravel()])
        else:
            pts = axes[0][:, None]
        last = 1.0 - pts.sum(1)
        keep = last >= -1e-12
        return np.column_stack([pts[keep], np.clip(last[keep], 0, None)])

    P = candidates(np.full(h, 0.5), step, 1.0)
    best = P[np.argmax(ll(P))]
    P = candidates(best, fine, radius)
    return P[np.argmax(ll(P))]
