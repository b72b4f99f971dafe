"""Decomposition terms and bound-statement evaluation.

The decomposition splits a margin of epistemic error into task variability
(alpha), approximation bias B, lack of convergence C and distribution shift
D (or its learner-perceived variant).  ``evaluate_bound`` turns one
statement plus one instance into a BoundReport holding every component, the
margin and the tail probability delta, all re-derivable from the stored
fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import (
    Categorical,
    FirstOrderDistribution,
    FiniteTaskDistribution,
    TaskDistribution,
    as_finite,
    barycenter,
    distribution_from_dict,
    distributions_close,
    max_first_order_b,
    max_second_order_b,
    sup_variance,
    task_distribution_tv,
    task_distributions_equal,
)
from .divergences import entropy, tv_exact
from .errors import InvalidArgument, InvalidModelClass, PreconditionViolated

STATEMENT_IDS = (
    "lemma1",
    "lemma2",
    "thm1",
    "thm2",
    "cor_bayesian",
    "cor_eps",
    "cor_eps_dist",
    "cor_bayes_eps",
    "cor_bayes_eps_dist",
    "cor_ce",
    "cor_l1",
    "cor_hellinger",
)

CSV_HEADER = "statement_id,alpha,B,C,D,D_learner,margin,delta,epsilon,b_S,b_T"


# ---------------------------------------------------------------------------
# Model class
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModelClass:
    """Finite family of candidate predictive distributions.

    Enumeration order is part of the definition: argmin ties break toward
    the lowest index, and the order round-trips through serialization.
    """

    members: tuple[FirstOrderDistribution, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InvalidModelClass("model class must be nonempty")
        from .distributions import same_space

        for m in members[1:]:
            if not same_space(members[0], m):
                raise InvalidModelClass("model class members must share one sample space")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def binary_grid(cls, probs: Sequence[float]) -> "ModelClass":
        """Members cat[p, 1-p] for p over ``probs`` in the given order."""
        return cls(tuple(Categorical(np.array([p, 1.0 - p])) for p in probs))

    @classmethod
    def gaussian_mean_grid(cls, lo: float, hi: float, step: float, stddev: float) -> "ModelClass":
        from .distributions import Gaussian

        if step <= 0 or hi < lo:
            raise InvalidModelClass("grid requires step > 0 and hi >= lo")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return cls(tuple(Gaussian(lo + i * step, stddev) for i in range(n)))

    def to_dict(self) -> dict:
        return {"members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelClass":
        return cls(tuple(distribution_from_dict(d) for d in data["members"]))


# ---------------------------------------------------------------------------
# Component operations
# ---------------------------------------------------------------------------


def best_approximation(
    model: ModelClass, target: FirstOrderDistribution
) -> tuple[FirstOrderDistribution, float]:
    """Member minimizing exact TV to ``target`` and the attained minimum.

    Ties break toward the lowest enumeration index.  The minimum is the
    approximation bias B when ``target`` is the source barycenter.
    """
    best_idx = 0
    best_val = tv_exact(model.members[0], target)
    for i, member in enumerate(model.members[1:], start=1):
        val = tv_exact(member, target)
        if val < best_val:
            best_idx, best_val = i, val
    return model.members[best_idx], best_val


def convergence_gap(predictor: FirstOrderDistribution, best: FirstOrderDistribution) -> float:
    """TV from the learner's predictor to the best class member (C)."""
    return tv_exact(predictor, best)


def distribution_shift(
    source: TaskDistribution,
    target: TaskDistribution,
    components: int = 256,
    seed: int = 0,
) -> float:
    """TV between the source and target barycenters (D)."""
    return tv_exact(barycenter(source, components, seed), barycenter(target, components, seed))


def distribution_shift_learner(
    best: FirstOrderDistribution, target_bary: FirstOrderDistribution, bias: float
) -> float:
    """tv(best, target barycenter) - B; may be negative."""
    return tv_exact(best, target_bary) - bias


def epistemic_error(
    predictor: FirstOrderDistribution, target_task: FirstOrderDistribution
) -> float:
    """TV from the predictor to the realized target task."""
    return tv_exact(predictor, target_task)


def chebyshev_delta(tasks: TaskDistribution, alpha: float) -> float:
    """sup-variance over alpha^2, unclipped (values > 1 signal vacuity)."""
    if alpha <= 0:
        raise InvalidArgument(f"alpha must be > 0, got {alpha}")
    return sup_variance(tasks) / alpha**2


# ---------------------------------------------------------------------------
# Bound reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    statement_id: str
    alpha: float
    B: float
    C: float
    D: float
    D_learner: float
    margin: float
    delta: float
    extras: dict = field(default_factory=dict)

    def rederive(self) -> tuple[float, float]:
        """Recompute (margin, delta) from stored components."""
        a, B, C, D = self.alpha, self.B, self.C, self.D
        x = self.extras
        sum_thm1 = a + B + C + D
        margins = {
            "lemma1": a,
            "lemma2": a + B + C,
            "thm1": sum_thm1,
            "thm2": a + B + C + self.D_learner,
            "cor_bayesian": a + B + x.get("param_tv", 0.0) + D,
            "cor_eps": sum_thm1,
            "cor_eps_dist": sum_thm1,
            "cor_bayes_eps": a + B + x.get("param_tv", 0.0) + D,
            "cor_bayes_eps_dist": a + B + x.get("param_tv", 0.0) + D,
            "cor_ce": (2.0 / x["b_pred"]) * sum_thm1**2 + x["entropy_E"] if "b_pred" in x else math.nan,
            "cor_l1": 2.0 * sum_thm1,
            "cor_hellinger": sum_thm1,
        }
        if self.statement_id in ("cor_eps", "cor_bayes_eps"):
            delta = (
                (1.0 - x["b_T"])
                / (x["b_S"] * a**2)
                * (x["sup_var_source"] + (x["diam_source"] + x["epsilon"]) ** 2)
            )
        elif self.statement_id in ("cor_eps_dist", "cor_bayes_eps_dist"):
            delta = (1.0 - x["b_T"]) / (x["b_S"] * a**2) * (x["sup_var_source"] + x["epsilon"] ** 2)
        else:
            delta = x["sup_var_target"] / a**2
        return margins[self.statement_id], delta

    def to_dict(self) -> dict:
        return {
            "statement_id": self.statement_id,
            "alpha": self.alpha,
            "B": self.B,
            "C": self.C,
            "D": self.D,
            "D_learner": self.D_learner,
            "margin": self.margin,
            "delta": self.delta,
            "extras": dict(self.extras),
        }

    def to_csv_row(self) -> str:
        x = self.extras

        def fmt(v) -> str:
            return "" if v is None else repr(float(v))

        return ",".join(
            [
                self.statement_id,
                fmt(self.alpha),
                fmt(self.B),
                fmt(self.C),
                fmt(self.D),
                fmt(self.D_learner),
                fmt(self.margin),
                fmt(self.delta),
                fmt(x.get("epsilon")),
                fmt(x.get("b_S")),
                fmt(x.get("b_T")),
            ]
        )


# ---------------------------------------------------------------------------
# Statement evaluation
# ---------------------------------------------------------------------------

def _param_tv(posterior, best) -> float:
    """TV (exact or the Pinsker proxy) between two parameter distributions."""
    if isinstance(posterior, Categorical) and isinstance(best, Categorical):
        return tv_exact(posterior, best)
    from .bayes import GaussianParamDist, param_tv_upper

    if isinstance(posterior, GaussianParamDist) and isinstance(best, GaussianParamDist):
        return param_tv_upper(posterior, best)
    raise InvalidArgument("parameter distributions must both be categorical or both Gaussian")


def _require(condition: bool, assumption: str, detail: str = "") -> None:
    if not condition:
        raise PreconditionViolated(assumption, detail)


def _check_assumption1(
    source: FiniteTaskDistribution, target: FiniteTaskDistribution, epsilon: float
) -> None:
    """Every target support task lies within TV epsilon of some source task."""
    for w, t in zip(target.weights, target.tasks):
        if w <= 0:
            continue
        if not any(tv_exact(t, s) <= epsilon + 1e-12 for s in source.tasks):
            raise PreconditionViolated(
                "eps_neighborhood", f"a target task exceeds TV {epsilon} from every source task"
            )


def evaluate_bound(
    statement_id: str,
    model: ModelClass,
    predictor: FirstOrderDistribution,
    source: TaskDistribution,
    target: TaskDistribution,
    alpha: float,
    epsilon: Optional[float] = None,
    b_source: Optional[float] = None,
    b_target: Optional[float] = None,
    param_posterior=None,
    param_best=None,
    b_pred: Optional[float] = None,
    components: int = 256,
    seed: int = 0,
) -> BoundReport:
    """Evaluate one bound statement into a BoundReport.

    Raises PreconditionViolated when the statement's hypotheses fail on the
    instance (perfect learning, no shift, boundedness, neighborhood
    membership), InvalidModelClass / EventMismatch on malformed inputs.
    """
    if statement_id not in STATEMENT_IDS:
        raise InvalidArgument(f"unknown statement id {statement_id!r}")
    if alpha <= 0:
        raise InvalidArgument(f"alpha must be > 0, got {alpha}")

    src = as_finite(source, components, seed)
    tgt = as_finite(target, components, seed if source is target else seed + 1)
    bary_s = barycenter(src)
    bary_t = barycenter(tgt)

    best, B = best_approximation(model, bary_s)
    C = convergence_gap(predictor, best)
    D = tv_exact(bary_s, bary_t)
    D_learner = distribution_shift_learner(best, bary_t, B)
    sup_var_target = sup_variance(tgt)
    extras: dict = {"sup_var_target": sup_var_target}
    if tgt.is_continuous:
        # suprema over continuous events use the declared half-line grid
        from .distributions import DEFAULT_THRESHOLD_SPAN, DEFAULT_THRESHOLDS

        extras["event_family"] = (
            f"half_lines({DEFAULT_THRESHOLDS} thresholds, +-{DEFAULT_THRESHOLD_SPAN} pooled sd)"
        )

    if statement_id in ("lemma1", "lemma2"):
        _require(task_distributions_equal(src, tgt), "no_shift", "source and target differ")
    if statement_id == "lemma1":
        _require(
            tv_exact(predictor, bary_s) <= 1e-12,
            "perfect_learning",
            "predictor is not the source barycenter",
        )

    if statement_id in ("cor_bayesian", "cor_bayes_eps", "cor_bayes_eps_dist"):
        if param_posterior is None or param_best is None:
            raise InvalidArgument(f"{statement_id} requires param_posterior and param_best")
        extras["param_tv"] = _param_tv(param_posterior, param_best)

    if statement_id in ("cor_eps", "cor_eps_dist", "cor_bayes_eps", "cor_bayes_eps_dist"):
        if epsilon is None:
            raise InvalidArgument(f"{statement_id} requires epsilon")
        _require(0.0 < epsilon < 1.0, "eps_domain", f"epsilon must lie in (0,1), got {epsilon}")
        b_S = max(min(max_first_order_b(src), max_second_order_b(src)), 0.0) if b_source is None else b_source
        b_T = max(max_first_order_b(tgt), 0.0) if b_target is None else b_target
        _require(
            0.0 < b_S < 1.0 and min(max_first_order_b(src), max_second_order_b(src)) >= b_S,
            "source_boundedness",
            "source must be first- and second-order b_S-bounded",
        )
        _require(
            0.0 < b_T < 1.0 and max_first_order_b(tgt) >= b_T,
            "target_boundedness",
            "target must be first-order b_T-bounded",
        )
        sup_var_source = sup_variance(src)
        extras.update({"epsilon": epsilon, "b_S": b_S, "b_T": b_T, "sup_var_source": sup_var_source})
        if statement_id in ("cor_eps", "cor_bayes_eps"):
            _check_assumption1(src, tgt, epsilon)
            from .distributions import diameter as diam_fn

            diam = diam_fn(src)
            extras["diam_source"] = diam
            delta = (1.0 - b_T) / (b_S * alpha**2) * (sup_var_source + (diam + epsilon) ** 2)
        else:
            _require(
                task_distribution_tv(src, tgt) <= epsilon + 1e-12,
                "eps_distribution_distance",
                "TV between task distributions exceeds epsilon",
            )
            delta = (1.0 - b_T) / (b_S * alpha**2) * (sup_var_source + epsilon**2)
    else:
        delta = sup_var_target / alpha**2

    if statement_id == "cor_ce":
        _require(
            isinstance(predictor, Categorical) and not tgt.is_continuous,
            "finite_sample_space",
            "cross-entropy bound requires a shared finite sample space",
        )
        assert isinstance(predictor, Categorical)
        if b_pred is None:
            support = predictor.p[predictor.p > 0]
            b_pred = float(support.min())
        _require(b_pred > 0, "predictor_boundedness", "predictor must be b-bounded with b > 0")
        for w, t in zip(tgt.weights, tgt.tasks):
            assert isinstance(t, Categorical)
            if w > 0:
                _require(
                    not np.any((t.p > 0) & (predictor.p <= 0)),
                    "predictor_boundedness",
                    "a target task puts mass outside the predictor's support",
                )
        entropy_e = float(tgt.weights @ np.array([entropy(t) for t in tgt.tasks]))
        extras.update({"b_pred": b_pred, "entropy_E": entropy_e})

    sum_thm1 = alpha + B + C + D
    margins = {
        "lemma1": alpha,
        "lemma2": alpha + B + C,
        "thm1": sum_thm1,
        "thm2": alpha + B + C + D_learner,
        "cor_bayesian": alpha + B + extras.get("param_tv", 0.0) + D,
        "cor_eps": sum_thm1,
        "cor_eps_dist": sum_thm1,
        "cor_bayes_eps": alpha + B + extras.get("param_tv", 0.0) + D,
        "cor_bayes_eps_dist": alpha + B + extras.get("param_tv", 0.0) + D,
        "cor_ce": (2.0 / b_pred) * sum_thm1**2 + extras["entropy_E"] if statement_id == "cor_ce" else None,
        "cor_l1": 2.0 * sum_thm1,
        "cor_hellinger": sum_thm1,
    }
    return BoundReport(
        statement_id=statement_id,
        alpha=alpha,
        B=B,
        C=C,
        D=D,
        D_learner=D_learner,
        margin=float(margins[statement_id]),
        delta=float(delta),
        extras=extras,
    )
