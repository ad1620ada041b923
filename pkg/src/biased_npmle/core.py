"""Domain types: observations, monotone bias weights, discrete distributions.

All weight functions are non-negative, non-decreasing and right-continuous
on ``[0, inf)``.  They are callables accepting scalars or arrays and expose
the generalized inverse ``geninv(y) = min{v : W(v) >= y}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats


class EstimationError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(EstimationError, ValueError):
    """Invalid construction parameters or configuration."""


class WeightDomainError(EstimationError, ValueError):
    pass


class NoSolutionError(EstimationError, ValueError):
    pass


class IdentifiabilityError(EstimationError, ValueError):
    """Positive mass requested where the bias weight vanishes."""


class DegenerateStateError(EstimationError, ArithmeticError):
    pass


class UndefinedEstimatorError(EstimationError, ValueError):
    pass


DEFAULT_REL_TOL = 1e-9


def _as_output(t, values):
    if np.ndim(t) == 0:
        return float(values)
    return values


def _finite_positive(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what}: values must be finite")
    if np.any(arr <= 0):
        raise ConfigError(f"{what}: values must be strictly positive")
    return arr


# ---------------------------------------------------------------------------
# Observations


class Observation(NamedTuple):
    value: float
    censored: bool


class TruncatedRecord(NamedTuple):
    entry: float
    exit: float
    event: bool


@dataclass(frozen=True)
class Sample:
    """Exact values ``x`` and right-censored values ``y`` (both sorted)."""

    exact: np.ndarray
    censored: np.ndarray

    def __post_init__(self):
        x = np.sort(_finite_positive(self.exact, "exact"))
        y = np.sort(_finite_positive(self.censored, "censored"))
        if x.size + y.size == 0:
            raise ConfigError("sample must contain at least one observation")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "exact", x)
        object.__setattr__(self, "censored", y)

    @property
    def m(self) -> int:
        return int(self.exact.size)

    @property
    def n(self) -> int:
        return int(self.censored.size)

    @classmethod
    def from_durations(cls, values, event) -> "Sample":
        values = np.asarray(values, dtype=float)
        event = np.asarray(event, dtype=bool)
        return cls(values[event], values[~event])

    @classmethod
    def from_observations(cls, observations: Sequence[Observation]) -> "Sample":
        x = [o.value for o in observations if not o.censored]
        y = [o.value for o in observations if o.censored]
        return cls(np.array(x, dtype=float), np.array(y, dtype=float))


@dataclass(frozen=True)
class TruncatedSample:
    """Column-oriented left-truncated, right-censored data."""

    entry: np.ndarray
    exit: np.ndarray
    event: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entry, dtype=float).ravel()
        e = np.asarray(self.exit, dtype=float).ravel()
        d = np.asarray(self.event, dtype=bool).ravel()
        if not (a.size == e.size == d.size):
            raise ConfigError("entry, exit and event must have equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(e))):
            raise ConfigError("entry and exit must be finite")
        if np.any(a < 0):
            raise ConfigError("entry ages must be non-negative")
        if np.any(a > e):
            bad = int(np.argmax(a > e))
            raise ConfigError(f"record {bad}: entry {a[bad]} exceeds exit {e[bad]}")
        for arr in (a, e, d):
            arr.setflags(write=False)
        object.__setattr__(self, "entry", a)
        object.__setattr__(self, "exit", e)
        object.__setattr__(self, "event", d)

    def __len__(self):
        return int(self.exit.size)

    @classmethod
    def from_records(cls, records) -> "TruncatedSample":
        if isinstance(records, TruncatedSample):
            return records
        records = [TruncatedRecord(*r) for r in records]
        return cls(
            np.array([r.entry for r in records], dtype=float),
            np.array([r.exit for r in records], dtype=float),
            np.array([bool(r.event) for r in records], dtype=bool),
        )

    def records(self) -> list[TruncatedRecord]:
        return [
            TruncatedRecord(float(a), float(e), bool(d))
            for a, e, d in zip(self.entry, self.exit, self.event)
        ]

    def to_sample(self) -> Sample:
        """Drop the entry ages: events become exact, the rest censored."""
        return Sample(self.exit[self.event], self.exit[~self.event])


# ---------------------------------------------------------------------------
# Lifetime distributions used by the generators and benchmarks


@dataclass(frozen=True)
class DistSpec:
    """A parametric lifetime law: ``exponential``, ``gamma`` or ``uniform``.

    Rates, not scales, parameterize the exponential and gamma families.
    """

    family: str
    params: tuple

    def __post_init__(self):
        family = self.family.lower()
        params = tuple(float(p) for p in self.params)
        expected = {"exponential": 1, "gamma": 2, "uniform": 2}
        if family not in expected:
            raise ConfigError(f"unknown distribution family {self.family!r}")
        if len(params) != expected[family]:
            raise ConfigError(f"{family} takes {expected[family]} parameters")
        if family == "uniform":
            lo, hi = params
            if not (0 <= lo < hi):
                raise ConfigError("uniform requires 0 <= lo < hi")
        elif any(not (p > 0 and math.isfinite(p)) for p in params):
            raise ConfigError(f"{family} parameters must be positive")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", params)

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "DistSpec":
        return cls("exponential", (rate,))

    @classmethod
    def gamma(cls, shape: float, rate: float = 1.0) -> "DistSpec":
        return cls("gamma", (shape, rate))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "DistSpec":
        return cls("uniform", (lo, hi))

    @classmethod
    def from_config(cls, cfg) -> "DistSpec":
        if isinstance(cfg, DistSpec):
            return cfg
        cfg = dict(cfg)
        family = str(cfg.pop("family")).lower()
        if family == "exponential":
            return cls.exponential(cfg.get("rate", 1.0))
        if family == "gamma":
            return cls.gamma(cfg["shape"], cfg.get("rate", 1.0))
        if family == "uniform":
            return cls.uniform(cfg["lo"], cfg["hi"])
        raise ConfigError(f"unknown distribution family {family!r}")

    def to_config(self) -> dict:
        if self.family == "exponential":
            return {"family": "exponential", "rate": self.params[0]}
        if self.family == "gamma":
            return {"family": "gamma", "shape": self.params[0], "rate": self.params[1]}
        return {"family": "uniform", "lo": self.params[0], "hi": self.params[1]}

    @property
    def frozen(self):
        if self.family == "exponential":
            return stats.expon(scale=1.0 / self.params[0])
        if self.family == "gamma":
            return stats.gamma(self.params[0], scale=1.0 / self.params[1])
        lo, hi = self.params
        return stats.uniform(loc=lo, scale=hi - lo)

    def cdf(self, t):
        return self.frozen.cdf(t)

    def sf(self, t):
        return self.frozen.sf(t)

    def ppf(self, q):
        return self.frozen.ppf(q)

    def isf(self, q):
        return self.frozen.isf(q)

    def pdf(self, t):
        return self.frozen.pdf(t)

    def mean(self) -> float:
        return float(self.frozen.mean())

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.family == "exponential":
            return rng.exponential(1.0 / self.params[0], size)
        if self.family == "gamma":
            return rng.gamma(self.params[0], 1.0 / self.params[1], size)
        return rng.uniform(self.params[0], self.params[1], size)


# ---------------------------------------------------------------------------
# Weights


class Weight:
    """Known bias function ``W``; subclasses implement ``_eval``/``geninv``."""

    kind = "abstract"
    #: smallest argument at which W is defined
    domain_min = 0.0

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(np.isnan(arr)):
            raise WeightDomainError("weight evaluated at NaN")
        if np.any(arr < self.domain_min):
            raise WeightDomainError(
                f"{self.kind} weight is defined on [{self.domain_min}, inf)"
            )
        return _as_output(t, self._eval(arr))

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    def geninv(self, y: float) -> float:
        raise NotImplementedError

    def _no_solution(self, y):
        return NoSolutionError(f"{y} exceeds sup W = {self.sup} for {self.kind} weight")

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Weight):
    c: float = 1.0
    kind = "Constant"

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ConfigError("constant weight must be positive and finite")

    def _eval(self, t):
        return np.full(t.shape, float(self.c))

    @property
    def sup(self):
        return float(self.c)

    def geninv(self, y):
        if y > self.c:
            raise self._no_solution(y)
        return self.domain_min

    def to_config(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class Linear(Weight):
    """Size-biased sampling, ``W(x) = x``."""

    kind = "Linear"

    def _eval(self, t):
        return t.copy()

    @property
    def sup(self):
        return math.inf

    def geninv(self, y):
        return max(float(y), 0.0)

    def to_config(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class ShiftedLinear(Weight):
    """Window sampling, ``W(x) = x + C``."""

    shift: float = 0.0
    kind = "ShiftedLinear"

    def __post_init__(self):
        if not (self.shift >= 0 and math.isfinite(self.shift)):
            raise ConfigError("window width C must be non-negative")

    def _eval(self, t):
        return t + self.shift

    @property
    def sup(self):
        return math.inf

    def geninv(self, y):
        return max(float(y) - self.shift, 0.0)

    def to_config(self):
        return {"kind": self.kind, "C": self.shift}


@dataclass(frozen=True)
class TruncatedInterval(Weight):
    """``W(x) = [min(x, beta) - alpha]^+``; zero on ``[0, alpha]``."""

    alpha: float
    beta: float
    kind = "TruncatedInterval"

    def __post_init__(self):
        if not (0 <= self.alpha < self.beta < math.inf):
            raise ConfigError(f"need 0 <= alpha < beta, got ({self.alpha}, {self.beta})")

    def _eval(self, t):
        return np.maximum(np.minimum(t, self.beta) - self.alpha, 0.0)

    @property
    def sup(self):
        return float(self.beta - self.alpha)

    def geninv(self, y):
        if y > self.sup:
            raise self._no_solution(y)
        if y <= 0:
            return 0.0
        return float(self.alpha + y)

    def to_config(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class Step(Weight):
    """Discrete entrance epochs: ``W(x) = sum of rates[k] over -epochs[k] <= x``."""

    epochs: tuple
    rates: tuple
    kind = "Step"
    thresholds: np.ndarray = field(init=False, repr=False, compare=False)
    levels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        epochs = np.asarray(self.epochs, dtype=float).ravel()
        rates = np.asarray(self.rates, dtype=float).ravel()
        if epochs.size == 0 or epochs.size != rates.size:
            raise ConfigError("epochs and rates must be non-empty and of equal length")
        if np.any(epochs > 0) or not np.all(np.isfinite(epochs)):
            raise ConfigError("entrance epochs must be finite and <= 0")
        if np.any(rates < 0) or not np.all(np.isfinite(rates)) or rates.sum() <= 0:
            raise ConfigError("entrance rates must be non-negative and not all zero")
        order = np.argsort(-epochs, kind="stable")
        thresholds = -epochs[order]
        levels = np.cumsum(rates[order])
        thresholds.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "epochs", tuple(float(e) for e in epochs))
        object.__setattr__(self, "rates", tuple(float(r) for r in rates))
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_levels(cls, jumps: Sequence[float], heights: Sequence[float]) -> "Step":
        """Step weight jumping by ``heights[k]`` at ``jumps[k]``."""
        return cls(tuple(-float(j) for j in jumps), tuple(heights))

    def _eval(self, t):
        idx = np.searchsorted(self.thresholds, t, side="right")
        padded = np.concatenate([[0.0], self.levels])
        return padded[idx]

    @property
    def sup(self):
        return float(self.levels[-1])

    def geninv(self, y):
        if y > self.sup:
            raise self._no_solution(y)
        if y <= self._eval(np.array([0.0]))[0]:
            return 0.0
        idx = int(np.searchsorted(self.levels, y, side="left"))
        return float(self.thresholds[idx])

    def to_config(self):
        return {"kind": self.kind, "epochs": list(self.epochs), "rates": list(self.rates)}


@dataclass(frozen=True)
class CdfTable(Weight):
    """Monotone table of ``(t, W(t))`` knots.

    ``interpolation="flat"`` gives a right-continuous step through the knots,
    ``"linear"`` joins them linearly.  Beyond the last knot W stays constant;
    below the first knot W is undefined.
    """

    t: tuple
    values: tuple
    interpolation: str = "flat"
    kind = "CdfTable"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.size == 0 or t.size != v.size:
            raise ConfigError("table needs equally many knots and values (>= 1)")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ConfigError("table entries must be finite")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ConfigError("table knots must be non-negative and strictly increasing")
        if np.any(v < 0):
            raise ConfigError("table values must be non-negative")
        if np.any(np.diff(v) < 0):
            bad = int(np.argmax(np.diff(v) < 0)) + 1
            raise ConfigError(f"table is not monotone: value decreases at knot {bad}")
        if v[-1] <= 0:
            raise ConfigError("table weight is identically zero")
        if self.interpolation not in ("flat", "linear"):
            raise ConfigError("interpolation must be 'flat' or 'linear'")
        object.__setattr__(self, "t", tuple(t.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @property
    def domain_min(self):
        return self.t[0]

    def _eval(self, x):
        t = np.asarray(self.t)
        v = np.asarray(self.values)
        if self.interpolation == "linear":
            return np.interp(x, t, v)
        idx = np.searchsorted(t, x, side="right") - 1
        return v[idx]

    @property
    def sup(self):
        return self.values[-1]

    def geninv(self, y):
        if y > self.sup:
            raise self._no_solution(y)
        t = np.asarray(self.t)
        v = np.asarray(self.values)
        i = int(np.searchsorted(v, y, side="left"))
        if i == 0:
            return float(t[0])
        if self.interpolation == "flat":
            return float(t[i])
        frac = (y - v[i - 1]) / (v[i] - v[i - 1])
        return float(min(t[i - 1] + frac * (t[i] - t[i - 1]), t[i]))

    def to_config(self):
        return {
            "kind": self.kind,
            "t": list(self.t),
            "values": list(self.values),
            "interpolation": self.interpolation,
        }


@dataclass(frozen=True)
class CumulativeRate(CdfTable):
    """Poisson entrances with known relative rate on a calendar-time grid.

    ``W(x)`` is the trapezoid integral of the rate over ``(-x, window_end)``
    intersected with the grid span, interpolated linearly in ``x``.
    """

    t: tuple = ()
    values: tuple = ()
    interpolation: str = "linear"
    grid: tuple = ()
    rates: tuple = ()
    window_end: float = 0.0
    kind = "CumulativeRate"

    def __post_init__(self):
        u = np.asarray(self.grid, dtype=float).ravel()
        lam = np.asarray(self.rates, dtype=float).ravel()
        if u.size < 2 or u.size != lam.size:
            raise ConfigError("rate grid needs >= 2 points and one rate per point")
        if np.any(np.diff(u) <= 0) or np.any(lam < 0):
            raise ConfigError("grid must increase and rates must be non-negative")
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (lam[1:] + lam[:-1]) * np.diff(u))])
        end = min(float(self.window_end), u[-1])
        total = float(np.interp(end, u, cum)) if end > u[0] else 0.0
        start = max(0.0, -end)
        xs = np.unique(np.concatenate([[start], -u[-u > start]]))
        vals = total - np.interp(np.clip(-xs, u[0], max(end, u[0])), u, cum)
        vals = np.maximum(vals, 0.0)
        if start > 0:
            xs = np.concatenate([[0.0], xs])
            vals = np.concatenate([[0.0], vals])
        object.__setattr__(self, "grid", tuple(u.tolist()))
        object.__setattr__(self, "rates", tuple(lam.tolist()))
        object.__setattr__(self, "t", tuple(xs.tolist()))
        object.__setattr__(self, "values", tuple(np.maximum.accumulate(vals).tolist()))
        object.__setattr__(self, "interpolation", "linear")
        super().__post_init__()

    def to_config(self):
        return {
            "kind": self.kind,
            "grid": list(self.grid),
            "rates": list(self.rates),
            "window_end": self.window_end,
        }


@dataclass(frozen=True)
class DistributionCdf(Weight):
    """Truncation law known in parametric form: ``W`` is its CDF."""

    dist: DistSpec
    kind = "DistributionCdf"

    def _eval(self, t):
        return np.asarray(self.dist.cdf(t), dtype=float)

    @property
    def sup(self):
        return 1.0

    def geninv(self, y):
        if y > 1.0:
            raise self._no_solution(y)
        if y <= self.dist.cdf(0.0):
            return 0.0
        v = float(self.dist.ppf(y))
        if not math.isfinite(v):
            raise NoSolutionError(f"CDF never reaches {y}")
        return v

    def to_config(self):
        return {"kind": self.kind, "dist": self.dist.to_config()}


@dataclass(frozen=True)
class Scaled(Weight):
    """``c * W`` for a positive constant ``c``."""

    base: Weight
    factor: float
    kind = "Scaled"

    def __post_init__(self):
        if not (self.factor > 0 and math.isfinite(self.factor)):
            raise ConfigError("scale factor must be positive")

    @property
    def domain_min(self):
        return self.base.domain_min

    def _eval(self, t):
        return self.factor * self.base._eval(t)

    @property
    def sup(self):
        return self.factor * self.base.sup

    def geninv(self, y):
        return self.base.geninv(y / self.factor)

    def to_config(self):
        return {"kind": self.kind, "factor": self.factor, "base": self.base.to_config()}


def weight_eval(w: Weight, t):
    return w(t)


def weight_geninv(w: Weight, y: float) -> float:
    return w.geninv(y)


def weight_equal(w: Weight, a: float, b: float, rel_tol: float = DEFAULT_REL_TOL) -> bool:
    """True when ``W(a)`` and ``W(b)`` agree up to a relative tolerance."""
    wa, wb = float(w(a)), float(w(b))
    return values_equal(wa, wb, rel_tol)


def values_equal(wa, wb, rel_tol: float = DEFAULT_REL_TOL):
    return np.abs(wa - wb) <= rel_tol * np.maximum(np.maximum(np.abs(wa), np.abs(wb)), 1.0)


def _read_table_csv(path) -> tuple[list, list]:
    import csv

    t, v = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            try:
                a, b = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header
                raise ConfigError(f"{path}: bad table row {lineno}: {row!r}") from None
            t.append(a)
            v.append(b)
    return t, v


def build_weight(config) -> Weight:
    """Build a validated weight from a ``{"kind": ..., params}`` mapping."""
    if isinstance(config, Weight):
        return config
    try:
        cfg = dict(config)
        kind = str(cfg.pop("kind")).replace("_", "").lower()
    except (TypeError, ValueError, KeyError):
        raise ConfigError("weight config must be an object with a 'kind' field") from None
    try:
        if kind == "constant":
            return Constant(float(cfg.get("c", 1.0)))
        if kind in ("linear", "sizebiased"):
            return Linear()
        if kind == "shiftedlinear":
            return ShiftedLinear(float(cfg.get("C", cfg.get("shift", 0.0))))
        if kind == "truncatedinterval":
            return TruncatedInterval(float(cfg["alpha"]), float(cfg["beta"]))
        if kind == "step":
            return Step(tuple(cfg["epochs"]), tuple(cfg["rates"]))
        if kind in ("cdftable", "table"):
            if "csv" in cfg:
                t, v = _read_table_csv(cfg["csv"])
            else:
                t, v = cfg["t"], cfg["values"]
            interp = cfg.get("interpolation")
            if interp is None:
                raise ConfigError("CdfTable requires an explicit 'interpolation' mode")
            return CdfTable(tuple(t), tuple(v), interp)
        if kind == "cumulativerate":
            if "csv" in cfg:
                grid, rates = _read_table_csv(cfg["csv"])
            else:
                grid, rates = cfg["grid"], cfg["rates"]
            return CumulativeRate(
                grid=tuple(grid), rates=tuple(rates), window_end=float(cfg["window_end"])
            )
        if kind in ("distributioncdf", "cdf"):
            return DistributionCdf(DistSpec.from_config(cfg["dist"]))
        if kind == "scaled":
            return Scaled(build_weight(cfg["base"]), float(cfg["factor"]))
    except KeyError as exc:
        raise ConfigError(f"{kind} weight is missing parameter {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad {kind} weight parameters: {exc}") from None
    raise ConfigError(f"unknown weight kind {config.get('kind')!r}")


# ---------------------------------------------------------------------------
# Discrete distributions


@dataclass(frozen=True)
class DiscreteDistribution:
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.points, dtype=float).ravel().copy()
        p = np.asarray(self.masses, dtype=float).ravel().copy()
        if t.size != p.size or t.size == 0:
            raise ConfigError("points and masses must be non-empty and of equal length")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("points must be strictly increasing")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ConfigError("masses must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError(f"masses sum to {p.sum()!r}, not 1")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "points", t)
        object.__setattr__(self, "masses", p)

    @classmethod
    def normalized(cls, points, masses) -> "DiscreteDistribution":
        p = np.clip(np.asarray(masses, dtype=float), 0.0, None)
        total = p.sum()
        if not total > 0:
            raise ConfigError("cannot normalize a zero mass vector")
        p = p / total
        # one more pass pins the sum to 1 within a few ulps
        return cls(points, p / math.fsum(p))

    def cdf(self, t):
        idx = np.searchsorted(self.points, np.asarray(t, dtype=float), side="right")
        cum = np.concatenate([[0.0], np.cumsum(self.masses)])
        return _as_output(t, np.minimum(cum[idx], 1.0))

    def survival(self, t):
        return _as_output(t, 1.0 - np.asarray(self.cdf(t)))

    def mean(self) -> float:
        return float(np.dot(self.points, self.masses))

    def __len__(self):
        return int(self.points.size)
