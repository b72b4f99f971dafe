"""First- and second-order distributions and their summary functionals.

First-order distributions live on a sample space (a finite outcome set or
the real line) and play the role of tasks, predictors and barycenters.
Second-order ("task") distributions are distributions over tasks: either a
finite weighted support, used for all exact computations, or a parametric
sampler (Gaussian tasks whose variance follows an inverse gamma law), used
by the synthetic experiments.

All types are immutable values after construction and safe to share across
threads.  Sampling takes an explicit seed and owns a private generator per
call.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import ndtr

from .errors import EventMismatch, InvalidArgument, InvalidTaskDistribution

PROB_TOL = 1e-12          # normalization tolerance; out-of-tolerance input is rejected
SUP_ENUM_MAX_OUTCOMES = 12  # full 2^m event enumeration refused above this
DEFAULT_REIFY_COMPONENTS = 256
DEFAULT_THRESHOLDS = 401
DEFAULT_THRESHOLD_SPAN = 6.0  # threshold grid spans pooled mean +- span * pooled stddev

LOG_2PI = math.log(2.0 * math.pi)


def _freeze(obj, name: str, value: np.ndarray) -> None:
    arr = np.asarray(value, dtype=float)
    arr.flags.writeable = False
    object.__setattr__(obj, name, arr)


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteEvent:
    """A subset of outcome indices of a categorical space."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise InvalidArgument("event indices must be unique")
        if idx and idx[0] < 0:
            raise InvalidArgument("event indices must be nonnegative")
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class Interval:
    """An interval of the real line; endpoints may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise InvalidArgument(f"interval endpoints must be ordered, got ({self.lo}, {self.hi})")


EventSet = Union[DiscreteEvent, Interval]


# ---------------------------------------------------------------------------
# First-order distributions
# ---------------------------------------------------------------------------


class FirstOrderDistribution:
    """Common surface of categorical / Gaussian / Gaussian-mixture values."""

    kind: str

    @property
    def is_continuous(self) -> bool:
        return self.kind != "categorical"

    def event_probability(self, event: EventSet) -> float:
        raise NotImplementedError

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # Moments of the distribution as a whole (used for quadrature windows
    # and threshold grids on continuous spaces).
    def mean_std(self) -> tuple[float, float]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Categorical(FirstOrderDistribution):
    """Distribution over outcomes 0..m-1 given by a probability vector."""

    p: np.ndarray
    kind: str = field(default="categorical", init=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidArgument("probability vector must be 1-D and nonempty")
        if np.any(p < 0):
            raise InvalidArgument("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise InvalidArgument(f"probabilities must sum to 1 within {PROB_TOL}, got {p.sum()!r}")
        _freeze(self, "p", p)

    @property
    def n_outcomes(self) -> int:
        return self.p.size

    def event_probability(self, event: EventSet) -> float:
        if not isinstance(event, DiscreteEvent):
            raise EventMismatch("categorical distribution takes discrete events")
        if event.indices and event.indices[-1] >= self.n_outcomes:
            raise EventMismatch(
                f"event index {event.indices[-1]} out of range for {self.n_outcomes} outcomes"
            )
        return float(self.p[list(event.indices)].sum())

    def logpmf(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.p)[np.asarray(x, dtype=int)]

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.n_outcomes, size=count, p=self.p)

    def mean_std(self) -> tuple[float, float]:
        xs = np.arange(self.n_outcomes)
        m = float(self.p @ xs)
        v = float(self.p @ (xs - m) ** 2)
        return m, math.sqrt(v)

    def to_dict(self) -> dict:
        return {"kind": "categorical", "p": self.p.tolist()}


@dataclass(frozen=True, eq=False)
class Gaussian(FirstOrderDistribution):
    mean: float
    stddev: float
    kind: str = field(default="gaussian", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "stddev", float(self.stddev))
        if not self.stddev > 0:
            raise InvalidArgument(f"stddev must be strictly positive, got {self.stddev}")

    def event_probability(self, event: EventSet) -> float:
        if not isinstance(event, Interval):
            raise EventMismatch("gaussian distribution takes interval events")
        return float(self.cdf(event.hi) - self.cdf(event.lo))

    def cdf(self, x: float) -> float:
        if math.isinf(x):
            return 1.0 if x > 0 else 0.0
        return float(ndtr((x - self.mean) / self.stddev))

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.mean) / self.stddev
        return -0.5 * z**2 - math.log(self.stddev) - 0.5 * LOG_2PI

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mean, self.stddev, size=count)

    def mean_std(self) -> tuple[float, float]:
        return self.mean, self.stddev

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "mean": self.mean, "stddev": self.stddev}


@dataclass(frozen=True, eq=False)
class GaussianMixture(FirstOrderDistribution):
    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray
    kind: str = field(default="gaussian_mixture", init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        sd = np.asarray(self.stddevs, dtype=float)
        if not (w.shape == mu.shape == sd.shape) or w.ndim != 1 or w.size == 0:
            raise InvalidArgument("weights, means, stddevs must be equal-length 1-D arrays")
        if np.any(w < 0):
            raise InvalidArgument("mixture weights must be nonnegative")
        if abs(w.sum() - 1.0) > PROB_TOL:
            raise InvalidArgument(f"mixture weights must sum to 1 within {PROB_TOL}")
        if np.any(sd <= 0):
            raise InvalidArgument("mixture stddevs must be strictly positive")
        _freeze(self, "weights", w)
        _freeze(self, "means", mu)
        _freeze(self, "stddevs", sd)

    def event_probability(self, event: EventSet) -> float:
        if not isinstance(event, Interval):
            raise EventMismatch("gaussian mixture takes interval events")
        hi = ndtr((event.hi - self.means) / self.stddevs) if not math.isinf(event.hi) else (
            np.ones_like(self.means) if event.hi > 0 else np.zeros_like(self.means)
        )
        lo = ndtr((event.lo - self.means) / self.stddevs) if not math.isinf(event.lo) else (
            np.ones_like(self.means) if event.lo > 0 else np.zeros_like(self.means)
        )
        return float(self.weights @ (hi - lo))

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = (x[:, None] - self.means[None, :]) / self.stddevs[None, :]
        comp = -0.5 * z**2 - np.log(self.stddevs)[None, :] - 0.5 * LOG_2PI
        with np.errstate(divide="ignore"):
            comp = comp + np.log(self.weights)[None, :]
        mx = comp.max(axis=1, keepdims=True)
        return (mx[:, 0] + np.log(np.exp(comp - mx).sum(axis=1)))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.weights.size, size=count, p=self.weights)
        return rng.normal(self.means[comp], self.stddevs[comp])

    def mean_std(self) -> tuple[float, float]:
        m = float(self.weights @ self.means)
        second = float(self.weights @ (self.stddevs**2 + self.means**2))
        return m, math.sqrt(max(second - m * m, 0.0))

    def to_dict(self) -> dict:
        return {
            "kind": "gaussian_mixture",
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
        }


def same_space(a: FirstOrderDistribution, b: FirstOrderDistribution) -> bool:
    """True when the two distributions live on a common sample space."""
    if isinstance(a, Categorical) and isinstance(b, Categorical):
        return a.n_outcomes == b.n_outcomes
    return a.is_continuous and b.is_continuous


def require_same_space(a: FirstOrderDistribution, b: FirstOrderDistribution) -> None:
    if not same_space(a, b):
        raise EventMismatch(f"distributions on different spaces: {a.kind} vs {b.kind}")


def distributions_close(
    a: FirstOrderDistribution, b: FirstOrderDistribution, tol: float = PROB_TOL
) -> bool:
    """Parameter-level equality within ``tol`` (same kind required)."""
    if a.kind != b.kind:
        return False
    if isinstance(a, Categorical):
        return a.n_outcomes == b.n_outcomes and bool(np.all(np.abs(a.p - b.p) <= tol))
    if isinstance(a, Gaussian):
        return abs(a.mean - b.mean) <= tol and abs(a.stddev - b.stddev) <= tol
    assert isinstance(a, GaussianMixture) and isinstance(b, GaussianMixture)
    return (
        a.weights.size == b.weights.size
        and bool(np.all(np.abs(a.weights - b.weights) <= tol))
        and bool(np.all(np.abs(a.means - b.means) <= tol))
        and bool(np.all(np.abs(a.stddevs - b.stddevs) <= tol))
    )


# ---------------------------------------------------------------------------
# Task distributions (second order)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteTaskDistribution:
    """Finitely many tasks with weights; the exact-computation workhorse."""

    tasks: tuple[FirstOrderDistribution, ...]
    weights: np.ndarray
    kind: str = field(default="finite_tasks", init=False, repr=False)

    def __post_init__(self):
        tasks = tuple(self.tasks)
        if not tasks:
            raise InvalidTaskDistribution("task list must be nonempty")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(tasks),):
            raise InvalidTaskDistribution("one weight per task required")
        if np.any(w < 0):
            raise InvalidTaskDistribution("task weights must be nonnegative")
        if abs(w.sum() - 1.0) > PROB_TOL:
            raise InvalidTaskDistribution(f"task weights must sum to 1 within {PROB_TOL}")
        for t in tasks[1:]:
            if not same_space(tasks[0], t):
                raise InvalidTaskDistribution("all tasks must share one sample space")
        object.__setattr__(self, "tasks", tasks)
        _freeze(self, "weights", w)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def is_continuous(self) -> bool:
        return self.tasks[0].is_continuous

    def event_probabilities(self, event: EventSet) -> np.ndarray:
        """Q(event) for every support task."""
        return np.array([t.event_probability(event) for t in self.tasks])

    def sample_task(self, rng: np.random.Generator) -> FirstOrderDistribution:
        return self.tasks[int(rng.choice(self.n_tasks, p=self.weights))]

    def to_dict(self) -> dict:
        return {
            "kind": "finite_tasks",
            "tasks": [{"w": float(w), "dist": t.to_dict()} for w, t in zip(self.weights, self.tasks)],
        }


@dataclass(frozen=True)
class InverseGammaGaussianTasks:
    """Gaussian tasks with a fixed mean and variance drawn from IG(shape, rate).

    This is the parametric family used by the synthetic experiments: a task
    is N(mean, sqrt(v)) with v ~ InverseGamma(shape, rate).
    """

    mean: float
    shape: float
    rate: float
    kind: str = field(default="ig_gaussian_tasks", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "rate", float(self.rate))
        if self.shape <= 0 or self.rate <= 0:
            raise InvalidTaskDistribution("inverse gamma parameters must be positive")

    @property
    def is_continuous(self) -> bool:
        return True

    def sample_variances(self, count: int, rng: np.random.Generator) -> np.ndarray:
        # 1/Gamma(shape, scale=1/rate) is InverseGamma(shape, rate)
        return 1.0 / rng.gamma(self.shape, 1.0 / self.rate, size=count)

    def sample_task(self, rng: np.random.Generator) -> Gaussian:
        v = float(self.sample_variances(1, rng)[0])
        return Gaussian(self.mean, math.sqrt(v))

    def reify(self, components: int = DEFAULT_REIFY_COMPONENTS, seed: int = 0) -> FiniteTaskDistribution:
        """Equal-weight finite approximation by ``components`` sampled tasks."""
        if components < 1:
            raise InvalidArgument("component budget must be >= 1")
        rng = np.random.default_rng(seed)
        variances = self.sample_variances(components, rng)
        tasks = tuple(Gaussian(self.mean, math.sqrt(v)) for v in variances)
        return FiniteTaskDistribution(tasks, np.full(components, 1.0 / components))

    def to_dict(self) -> dict:
        return {"kind": "ig_gaussian_tasks", "mean": self.mean, "shape": self.shape, "rate": self.rate}


TaskDistribution = Union[FiniteTaskDistribution, InverseGammaGaussianTasks]


def as_finite(
    tasks: TaskDistribution,
    components: int = DEFAULT_REIFY_COMPONENTS,
    seed: int = 0,
) -> FiniteTaskDistribution:
    """Reify parametric task distributions; pass finite ones through."""
    if isinstance(tasks, FiniteTaskDistribution):
        return tasks
    return tasks.reify(components, seed)


# ---------------------------------------------------------------------------
# Summary functionals
# ---------------------------------------------------------------------------


def barycenter(
    tasks: TaskDistribution,
    components: int = DEFAULT_REIFY_COMPONENTS,
    seed: int = 0,
) -> FirstOrderDistribution:
    """Mixture distribution assigning each event E_{Q ~ tasks}[Q(event)].

    Exact for finite task distributions; parametric ones are first reified
    into a ``components``-task approximation.
    """
    fin = as_finite(tasks, components, seed)
    first = fin.tasks[0]
    if isinstance(first, Categorical):
        P = np.stack([t.p for t in fin.tasks])
        return Categorical(fin.weights @ P)
    weights, means, stds = [], [], []
    for w, t in zip(fin.weights, fin.tasks):
        if isinstance(t, Gaussian):
            weights.append(w)
            means.append(t.mean)
            stds.append(t.stddev)
        else:
            assert isinstance(t, GaussianMixture)
            weights.extend(w * t.weights)
            means.extend(t.means)
            stds.extend(t.stddevs)
    return GaussianMixture(np.asarray(weights), np.asarray(means), np.asarray(stds))


def variance_at(
    tasks: TaskDistribution,
    event: EventSet,
    components: int = DEFAULT_REIFY_COMPONENTS,
    seed: int = 0,
) -> float:
    """E_{Q ~ tasks}[(Q(event) - bary(event))^2]; always within [0, 1/4]."""
    fin = as_finite(tasks, components, seed)
    qa = fin.event_probabilities(event)
    ba = float(fin.weights @ qa)
    return float(fin.weights @ (qa - ba) ** 2)


def _event_masks(m: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=m)))


def categorical_event_family(m: int) -> list[DiscreteEvent]:
    """All 2^m events of an m-outcome space (refused for m > 12)."""
    if m > SUP_ENUM_MAX_OUTCOMES:
        raise InvalidArgument(
            f"exhaustive event enumeration refused for m={m} > {SUP_ENUM_MAX_OUTCOMES}; "
            "pass an explicit event family instead"
        )
    return [
        DiscreteEvent(tuple(i for i in range(m) if mask & (1 << i)))
        for mask in range(2**m)
    ]


def threshold_events(
    tasks: FiniteTaskDistribution,
    n_thresholds: int = DEFAULT_THRESHOLDS,
    span: float = DEFAULT_THRESHOLD_SPAN,
) -> list[Interval]:
    """Left-open half-line events (-inf, t_k] on a pooled-moment grid."""
    moments = np.array([t.mean_std() for t in tasks.tasks])
    pooled_mean = float(tasks.weights @ moments[:, 0])
    pooled_second = float(tasks.weights @ (moments[:, 1] ** 2 + moments[:, 0] ** 2))
    pooled_std = math.sqrt(max(pooled_second - pooled_mean**2, 1e-300))
    ts = np.linspace(pooled_mean - span * pooled_std, pooled_mean + span * pooled_std, n_thresholds)
    return [Interval(-math.inf, float(t)) for t in ts]


def sup_variance(
    tasks: TaskDistribution,
    events: Sequence[EventSet] | None = None,
    components: int = DEFAULT_REIFY_COMPONENTS,
    seed: int = 0,
) -> float:
    """Max of variance_at over an event family.

    Categorical spaces enumerate all 2^m events (m <= 12, else an explicit
    family is required); continuous spaces use a half-line threshold grid
    unless a family is declared.
    """
    fin = as_finite(tasks, components, seed)
    first = fin.tasks[0]
    if events is None:
        if isinstance(first, Categorical):
            m = first.n_outcomes
            if m > SUP_ENUM_MAX_OUTCOMES:
                raise InvalidArgument(
                    f"sup_variance refuses exhaustive enumeration for m={m} > "
                    f"{SUP_ENUM_MAX_OUTCOMES}; pass an explicit event family"
                )
            P = np.stack([t.p for t in fin.tasks])
            masks = _event_masks(m)  # (2^m, m)
            qa = P @ masks.T  # (k, 2^m)
            ba = fin.weights @ qa
            return float((fin.weights @ (qa - ba) ** 2).max())
        events = threshold_events(fin)
    return max(variance_at(fin, e) for e in events)


def diameter(
    tasks: TaskDistribution,
    tv=None,
    components: int = DEFAULT_REIFY_COMPONENTS,
    seed: int = 0,
) -> float:
    """Max pairwise TV distance over the support."""
    if tv is None:
        from .divergences import tv_exact as tv
    fin = as_finite(tasks, components, seed)
    if isinstance(fin.tasks[0], Categorical):
        P = np.stack([t.p for t in fin.tasks])
        return float(0.5 * np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2).max())
    best = 0.0
    for i in range(fin.n_tasks):
        for j in range(i + 1, fin.n_tasks):
            best = max(best, tv(fin.tasks[i], fin.tasks[j]))
    return best


@dataclass(frozen=True)
class BoundednessReport:
    first_order: bool
    second_order: bool


def max_first_order_b(tasks: FiniteTaskDistribution) -> float:
    """Largest b with every support weight in [b, 1-b] (<= 0 means unbounded)."""
    w = tasks.weights[tasks.weights > 0]
    return float(min(w.min(), 1.0 - w.max()))


def max_second_order_b(tasks: FiniteTaskDistribution) -> float:
    """Largest b with every task's nonempty proper events in [b, 1-b].

    For a categorical task this requires full support; the binding constraint
    is then the smallest outcome probability.  Continuous tasks admit events
    of arbitrarily small probability, hence are never second-order bounded.
    """
    if tasks.is_continuous:
        return 0.0
    best = 1.0
    for t in tasks.tasks:
        assert isinstance(t, Categorical)
        if np.any(t.p <= 0):
            return 0.0
        best = min(best, float(t.p.min()))
    return best


def check_boundedness(tasks: FiniteTaskDistribution, b: float) -> BoundednessReport:
    """First- and second-order b-boundedness of a finite task distribution."""
    if not 0 < b < 1:
        raise InvalidArgument(f"b must lie in (0,1), got {b}")
    return BoundednessReport(
        first_order=max_first_order_b(tasks) >= b,
        second_order=max_second_order_b(tasks) >= b,
    )


def task_distribution_tv(
    a: FiniteTaskDistribution, b: FiniteTaskDistribution, match_tol: float = PROB_TOL
) -> float:
    """TV distance between two finite task distributions over a merged support.

    Support tasks are matched by parameter equality within ``match_tol``;
    unmatched tasks contribute their full weight.
    """
    used = [False] * b.n_tasks
    total = 0.0
    for wa, ta in zip(a.weights, a.tasks):
        wb = 0.0
        for j, tb in enumerate(b.tasks):
            if not used[j] and distributions_close(ta, tb, match_tol):
                used[j] = True
                wb = float(b.weights[j])
                break
        total += abs(wa - wb)
    total += float(sum(w for w, u in zip(b.weights, used) if not u))
    return 0.5 * total


def task_distributions_equal(
    a: FiniteTaskDistribution, b: FiniteTaskDistribution, tol: float = PROB_TOL
) -> bool:
    return task_distribution_tv(a, b, tol) <= tol


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample(dist: FirstOrderDistribution, count: int, seed: int) -> np.ndarray:
    """Deterministic draw of ``count`` values; a private generator per call."""
    from .seeding import normalize_seed

    if count < 1:
        raise InvalidArgument("count must be >= 1")
    return dist.sample(count, np.random.default_rng(normalize_seed(seed)))


def sample_task(tasks: TaskDistribution, seed: int) -> FirstOrderDistribution:
    from .seeding import normalize_seed

    return tasks.sample_task(np.random.default_rng(normalize_seed(seed)))


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def distribution_from_dict(data: dict) -> FirstOrderDistribution:
    kind = data.get("kind")
    if kind == "categorical":
        return Categorical(np.asarray(data["p"], dtype=float))
    if kind == "gaussian":
        return Gaussian(float(data["mean"]), float(data["stddev"]))
    if kind == "gaussian_mixture":
        return GaussianMixture(
            np.asarray(data["weights"], dtype=float),
            np.asarray(data["means"], dtype=float),
            np.asarray(data["stddevs"], dtype=float),
        )
    raise InvalidArgument(f"unknown first-order distribution kind: {kind!r}")


def task_distribution_from_dict(data: dict) -> TaskDistribution:
    kind = data.get("kind")
    if kind == "finite_tasks":
        entries = data["tasks"]
        tasks = tuple(distribution_from_dict(e["dist"]) for e in entries)
        weights = np.asarray([e["w"] for e in entries], dtype=float)
        return FiniteTaskDistribution(tasks, weights)
    if kind == "ig_gaussian_tasks":
        return InverseGammaGaussianTasks(float(data["mean"]), float(data["shape"]), float(data["rate"]))
    raise InvalidArgument(f"unknown task distribution kind: {kind!r}")


def finite_tasks(pairs: Iterable[tuple[FirstOrderDistribution, float]]) -> FiniteTaskDistribution:
    """Convenience constructor from (task, weight) pairs."""
    items = list(pairs)
    if not items:
        raise InvalidTaskDistribution("task list must be nonempty")
    return FiniteTaskDistribution(
        tuple(t for t, _ in items), np.asarray([w for _, w in items], dtype=float)
    )
