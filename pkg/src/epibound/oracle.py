"""Exact verification of every bound statement on random finite instances.

Instances are small categorical worlds (2..6 outcomes, 2..6 tasks per task
distribution) where every total variation distance, variance and exceedance
probability is a finite sum, so each statement's tail probability is
computed exactly by enumeration: zero sampling noise.  Constraint modes
force the hypotheses of the conditional statements (no shift, perfect
learning, the two total-variation-neighborhood assumptions) to hold by
construction.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import (
    Categorical,
    FiniteTaskDistribution,
    max_first_order_b,
    max_second_order_b,
)
from .bounds import ModelClass
from .errors import GenerationFailure, InvalidArgument
from .seeding import derive_seed, normalize_seed

DEFAULT_ALPHAS = tuple(round(0.05 * i, 2) for i in range(1, 11))
VIOLATION_TOL = 1e-12  # float guard on exact exceedance-vs-delta comparisons
SLACK_TOL = 1e-10      # deterministic lemma inequalities must have slack >= -SLACK_TOL

CONSTRAINT_MODES = ("none", "no_shift", "perfect_no_shift", "assumption1", "assumption2")

PROB_STATEMENTS = ("lemma1", "lemma2", "thm1", "thm2", "cor_eps", "cor_eps_dist",
                   "cor_ce", "cor_l1", "cor_hellinger", "cor_bayesian")
LEMMA_STATEMENTS = ("lemma_b2", "lemma_b6", "lemma_b7", "lemma_b8", "lemma_b9",
                    "lemma_b10", "prop1")
ALL_STATEMENTS = PROB_STATEMENTS + LEMMA_STATEMENTS


@dataclass(frozen=True)
class InstanceConfig:
    m_range: tuple[int, int] = (2, 6)
    tasks_range: tuple[int, int] = (2, 6)
    members_range: tuple[int, int] = (3, 20)
    constraint: str = "none"
    epsilon: Optional[float] = None  # drawn from U[0.02, 0.5] when None and constrained
    max_attempts: int = 1000

    def __post_init__(self):
        if self.constraint not in CONSTRAINT_MODES:
            raise InvalidArgument(f"unknown constraint mode {self.constraint!r}")
        if self.m_range[1] > 12:
            raise InvalidArgument("oracle instances need m <= 12 for exhaustive event families")


@dataclass(frozen=True, eq=False)
class OracleInstance:
    """One desk-scale world: source/target tasks, model class, predictor."""

    m: int
    source: FiniteTaskDistribution
    target: FiniteTaskDistribution
    model: ModelClass
    predictor: Categorical
    seed: int
    constraint: str
    epsilon: Optional[float]
    b_source_first: float
    b_source_second: float
    b_target_first: float

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "model": self.model.to_dict(),
            "predictor": self.predictor.to_dict(),
            "seed": self.seed,
            "constraint": self.constraint,
            "epsilon": self.epsilon,
        }


def _tv_vec(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(P - q[None, :]).sum(axis=1)


def _project_into_ball(t: np.ndarray, s: np.ndarray, eps: float, attempts: int) -> np.ndarray:
    """Clip t into an L-inf box around s, renormalize, shrink until TV <= eps."""
    eta = eps
    for _ in range(attempts):
        clipped = np.clip(t, np.maximum(s - eta, 0.0), np.minimum(s + eta, 1.0))
        total = clipped.sum()
        if total > 0:
            cand = clipped / total
            if 0.5 * np.abs(cand - s).sum() <= eps:
                return cand
        eta *= 0.5
    raise GenerationFailure(f"could not project a task into the TV {eps}-ball")


def generate_instance(seed: int, config: InstanceConfig = InstanceConfig()) -> OracleInstance:
    """Deterministic instance from ``seed``; flat-simplex weights and tasks."""
    rng = np.random.default_rng(normalize_seed(seed))
    m = int(rng.integers(config.m_range[0], config.m_range[1] + 1))
    k_s = int(rng.integers(config.tasks_range[0], config.tasks_range[1] + 1))
    k_t = int(rng.integers(config.tasks_range[0], config.tasks_range[1] + 1))

    S = rng.dirichlet(np.ones(m), size=k_s)
    w_s = rng.dirichlet(np.ones(k_s))
    source = FiniteTaskDistribution(tuple(Categorical(p) for p in S), w_s)
    bary_s = w_s @ S

    n_members = int(rng.integers(config.members_range[0], config.members_range[1] + 1))
    members = rng.dirichlet(np.ones(m), size=n_members)
    model = ModelClass(tuple(Categorical(p) for p in members))

    if config.constraint == "perfect_no_shift":
        predictor = Categorical(bary_s)
    elif rng.random() < 0.5:
        predictor = Categorical(members[int(rng.integers(n_members))])
    else:
        predictor = Categorical(rng.dirichlet(np.ones(m)))

    epsilon = config.epsilon
    if config.constraint in ("assumption1", "assumption2") and epsilon is None:
        epsilon = float(rng.uniform(0.02, 0.5))

    if config.constraint in ("no_shift", "perfect_no_shift"):
        target = source
    elif config.constraint == "assumption1":
        rows = []
        for _ in range(k_t):
            anchor = S[int(rng.integers(k_s))]
            raw = rng.dirichlet(np.ones(m))
            rows.append(_project_into_ball(raw, anchor, epsilon, config.max_attempts))
        target = FiniteTaskDistribution(
            tuple(Categorical(p) for p in rows), rng.dirichlet(np.ones(k_t))
        )
    elif config.constraint == "assumption2":
        raw = rng.dirichlet(np.ones(k_s))
        dist = 0.5 * np.abs(w_s - raw).sum()
        if dist > epsilon:
            raw = w_s + (epsilon / dist) * (1.0 - 1e-12) * (raw - w_s)
            raw = np.maximum(raw, 0.0)
            raw = raw / raw.sum()
        if 0.5 * np.abs(w_s - raw).sum() > epsilon:
            raise GenerationFailure("assumption-2 weight projection failed")
        target = FiniteTaskDistribution(source.tasks, raw)
    else:
        T = rng.dirichlet(np.ones(m), size=k_t)
        target = FiniteTaskDistribution(
            tuple(Categorical(p) for p in T), rng.dirichlet(np.ones(k_t))
        )

    return OracleInstance(
        m=m,
        source=source,
        target=target,
        model=model,
        predictor=predictor,
        seed=seed,
        constraint=config.constraint,
        epsilon=epsilon,
        b_source_first=max_first_order_b(source),
        b_source_second=max_second_order_b(source),
        b_target_first=max_first_order_b(target),
    )


# ---------------------------------------------------------------------------
# Exact per-instance components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Components:
    instance: OracleInstance
    B: float
    C: float
    D: float
    D_learner: float
    sup_var_target: float
    sup_var_source: float
    diam_source: float
    tv_pred_bary_s: float
    tv_pred_bary_t: float
    ers: np.ndarray           # tv(predictor, Q_t) per target support task
    hell_t: np.ndarray        # squared Hellinger(predictor, Q_t)
    t_weights: np.ndarray
    var_s_events: np.ndarray  # per-event source variances (2^m,)
    var_t_events: np.ndarray
    shared_support: bool      # identical task tuples (weights may differ)
    no_shift: bool            # identical task distributions
    min_tv_to_source: np.ndarray  # per target task: min TV to the source support
    dist_tv: float            # TV between the two task distributions
    kl_t_pred: np.ndarray     # KL(Q_t || predictor); inf where support leaks
    ent_t: np.ndarray         # entropy of each target task
    b_pred: float


def _event_masks(m: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=m)))


def compute_components(inst: OracleInstance) -> _Components:
    S = np.stack([t.p for t in inst.source.tasks])  # type: ignore[union-attr]
    T = np.stack([t.p for t in inst.target.tasks])  # type: ignore[union-attr]
    w_s, w_t = inst.source.weights, inst.target.weights
    bary_s, bary_t = w_s @ S, w_t @ T
    members = np.stack([mm.p for mm in inst.model.members])  # type: ignore[union-attr]
    pred = inst.predictor.p

    dists = _tv_vec(members, bary_s)
    best_idx = int(np.argmin(dists))  # np.argmin returns the first minimum
    best = members[best_idx]
    B = float(dists[best_idx])
    C = float(0.5 * np.abs(pred - best).sum())
    D = float(0.5 * np.abs(bary_s - bary_t).sum())
    D_learner = float(0.5 * np.abs(best - bary_t).sum()) - B

    masks = _event_masks(inst.m)
    var_s = w_s @ ((S @ masks.T) - bary_s @ masks.T) ** 2
    var_t = w_t @ ((T @ masks.T) - bary_t @ masks.T) ** 2
    diam = float(0.5 * np.abs(S[:, None, :] - S[None, :, :]).sum(axis=2).max())

    ers = _tv_vec(T, pred)
    hell_t = 0.5 * ((np.sqrt(T) - np.sqrt(pred)[None, :]) ** 2).sum(axis=1)

    cross = 0.5 * np.abs(T[:, None, :] - S[None, :, :]).sum(axis=2)  # (k_t, k_s)
    min_tv = cross.min(axis=1)
    shared = len(inst.target.tasks) == len(inst.source.tasks) and all(
        a is b for a, b in zip(inst.target.tasks, inst.source.tasks)
    )
    if shared:
        dist_tv = float(0.5 * np.abs(w_s - w_t).sum())
    else:
        from .distributions import task_distribution_tv

        dist_tv = task_distribution_tv(inst.source, inst.target)
    no_shift = shared and dist_tv <= 1e-12

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(T > 0, T / np.where(pred > 0, pred, np.nan), 1.0)
        kl_rows = np.where(T > 0, T * np.log(ratio), 0.0)
    kl_t_pred = np.where(np.isnan(kl_rows).any(axis=1), np.inf, np.nansum(kl_rows, axis=1))
    ent_rows = np.where(T > 0, -T * np.log(np.where(T > 0, T, 1.0)), 0.0)
    ent_t = ent_rows.sum(axis=1)
    b_pred = float(pred[pred > 0].min())

    return _Components(
        instance=inst,
        B=B,
        C=C,
        D=D,
        D_learner=D_learner,
        sup_var_target=float(var_t.max()),
        sup_var_source=float(var_s.max()),
        diam_source=diam,
        tv_pred_bary_s=float(0.5 * np.abs(pred - bary_s).sum()),
        tv_pred_bary_t=float(0.5 * np.abs(pred - bary_t).sum()),
        ers=ers,
        hell_t=hell_t,
        t_weights=w_t,
        var_s_events=var_s,
        var_t_events=var_t,
        shared_support=shared,
        no_shift=no_shift,
        min_tv_to_source=min_tv,
        dist_tv=dist_tv,
        kl_t_pred=kl_t_pred,
        ent_t=ent_t,
        b_pred=b_pred,
    )


# ---------------------------------------------------------------------------
# Statement verification
# ---------------------------------------------------------------------------


@dataclass
class AlphaOutcome:
    alpha: float
    exceedance: float
    delta: float
    slack: float
    violated: bool


@dataclass
class StatementReport:
    statement_id: str
    trials: int = 0
    violations: int = 0
    skips: int = 0
    skip_reason: Optional[str] = None
    min_slack: float = np.inf
    max_slack: float = -np.inf
    keep_outcomes: bool = False
    outcomes: list = field(default_factory=list)

    def record(self, outcome: AlphaOutcome) -> None:
        self.trials += 1
        self.violations += int(outcome.violated)
        self.min_slack = min(self.min_slack, outcome.slack)
        self.max_slack = max(self.max_slack, outcome.slack)
        if self.keep_outcomes:
            self.outcomes.append(outcome)

    def record_slack(self, slack: float) -> None:
        self.trials += 1
        violated = slack < -SLACK_TOL
        self.violations += int(violated)
        self.min_slack = min(self.min_slack, slack)
        self.max_slack = max(self.max_slack, slack)


def _exceedance(comp: _Components, values: np.ndarray, margin: float) -> float:
    return float(comp.t_weights[values >= margin].sum())


def _skip(report: StatementReport, reason: str) -> None:
    report.skips += 1
    report.skip_reason = reason


def _verify_probability_statement(
    comp: _Components,
    statement_id: str,
    alphas: Sequence[float],
    report: StatementReport,
) -> None:
    inst = comp.instance
    eps = inst.epsilon

    if statement_id == "lemma1":
        if not comp.no_shift:
            _skip(report, "requires no shift")
            return
        if comp.tv_pred_bary_s > 1e-12:
            _skip(report, "requires perfect learning")
            return
    if statement_id == "lemma2" and not comp.no_shift:
        _skip(report, "requires no shift")
        return
    if statement_id in ("cor_eps", "cor_eps_dist"):
        b_S = min(inst.b_source_first, inst.b_source_second)
        b_T = inst.b_target_first
        if eps is None or not (0 < eps < 1):
            _skip(report, "requires an epsilon in (0,1)")
            return
        if b_S <= 0 or b_T <= 0:
            _skip(report, "boundedness precondition fails")
            return
        if statement_id == "cor_eps" and comp.min_tv_to_source.max() > eps + 1e-12:
            _skip(report, "a target task exceeds the per-task TV neighborhood")
            return
        if statement_id == "cor_eps_dist" and comp.dist_tv > eps + 1e-12:
            _skip(report, "task-distribution TV exceeds epsilon")
            return
    if statement_id == "cor_ce" and not np.all(np.isfinite(comp.kl_t_pred)):
        _skip(report, "a target task leaks outside the predictor's support")
        return

    margin_base = {
        "lemma1": lambda a: a,
        "lemma2": lambda a: a + comp.B + comp.C,
        "thm2": lambda a: a + comp.B + comp.C + comp.D_learner,
    }.get(statement_id, lambda a: a + comp.B + comp.C + comp.D)

    for a in alphas:
        margin = margin_base(a)
        if statement_id == "cor_eps":
            delta = (1.0 - inst.b_target_first) / (
                min(inst.b_source_first, inst.b_source_second) * a**2
            ) * (comp.sup_var_source + (comp.diam_source + eps) ** 2)
            exc = _exceedance(comp, comp.ers, margin)
        elif statement_id == "cor_eps_dist":
            delta = (1.0 - inst.b_target_first) / (
                min(inst.b_source_first, inst.b_source_second) * a**2
            ) * (comp.sup_var_source + eps**2)
            exc = _exceedance(comp, comp.ers, margin)
        else:
            delta = comp.sup_var_target / a**2
            if statement_id == "cor_l1":
                exc = _exceedance(comp, 2.0 * comp.ers, 2.0 * margin)
            elif statement_id == "cor_hellinger":
                exc = _exceedance(comp, comp.hell_t, margin)
            elif statement_id == "cor_ce":
                ce = comp.kl_t_pred + comp.ent_t
                ce_margin = (2.0 / comp.b_pred) * margin**2 + comp.ent_t
                exc = float(comp.t_weights[ce >= ce_margin].sum())
            else:
                exc = _exceedance(comp, comp.ers, margin)
        slack = delta - exc
        report.record(AlphaOutcome(a, exc, delta, slack, exc > delta + VIOLATION_TOL))


def _verify_lemma(comp: _Components, statement_id: str, report: StatementReport) -> None:
    inst = comp.instance
    if statement_id == "lemma_b2":
        report.record_slack(comp.B + comp.C - comp.tv_pred_bary_s)
    elif statement_id == "lemma_b7":
        report.record_slack(comp.B + comp.C + comp.D_learner - comp.tv_pred_bary_t)
    elif statement_id == "prop1":
        report.record_slack(comp.D - comp.D_learner)
    elif statement_id == "lemma_b9":
        if inst.epsilon is None or comp.min_tv_to_source.max() > inst.epsilon + 1e-12:
            _skip(report, "requires a per-task TV neighborhood")
            return
        report.record_slack(comp.diam_source + inst.epsilon - comp.D)
    elif statement_id == "lemma_b10":
        if inst.epsilon is None or comp.dist_tv > inst.epsilon + 1e-12:
            _skip(report, "requires the distribution-level TV neighborhood")
            return
        report.record_slack(inst.epsilon - comp.D)
    elif statement_id == "lemma_b8":
        if not comp.shared_support:
            _skip(report, "requires target support inside the source support")
            return
        b_S, b_T = inst.b_source_first, inst.b_target_first
        if b_S <= 0 or b_T <= 0:
            _skip(report, "first-order boundedness fails")
            return
        bound = (1.0 - b_T) / b_S * (comp.var_s_events + comp.D**2)
        report.record_slack(float((bound - comp.var_t_events).min()))
    else:
        raise InvalidArgument(f"unknown lemma id {statement_id!r}")


def verify_statement(
    instance: OracleInstance,
    statement_id: str,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    n_target_draws: Optional[int] = None,
) -> StatementReport:
    """Exactly verify one statement on one instance over an alpha grid.

    Exceedance probabilities are exact weighted sums over the enumerated
    target support, so ``n_target_draws`` is accepted for interface
    compatibility and ignored: enumeration supersedes sampling.
    """
    del n_target_draws
    report = StatementReport(statement_id, keep_outcomes=True)
    comp = compute_components(instance)
    if statement_id in PROB_STATEMENTS:
        if statement_id == "cor_bayesian":
            raise InvalidArgument("cor_bayesian is verified on finite-theta instances")
        _verify_probability_statement(comp, statement_id, alphas, report)
    elif statement_id in LEMMA_STATEMENTS:
        _verify_lemma(comp, statement_id, report)
    else:
        raise InvalidArgument(f"unknown statement id {statement_id!r}")
    return report


def looseness(instance: OracleInstance) -> float:
    """Mean over exact target weights of tv(pred, Q_t), minus (C + D)."""
    comp = compute_components(instance)
    return float(comp.t_weights @ comp.ers) - (comp.C + comp.D)


# ---------------------------------------------------------------------------
# Finite-theta instances (Bayesian bound and mixture contraction)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ThetaInstance:
    """Categorical parameter space with exact predictive mixtures."""

    theta_pmfs: np.ndarray      # (j, m) component likelihoods p(x | theta)
    source_weights: np.ndarray  # (j,) true mixing weights, source tasks = components
    candidates: np.ndarray      # (r, j) parameter distributions the learner may select
    p1: np.ndarray              # (j,) the learner's posterior over theta
    target: FiniteTaskDistribution
    seed: int


def generate_theta_instance(seed: int, m_range=(2, 6), theta_range=(2, 8)) -> ThetaInstance:
    rng = np.random.default_rng(seed)
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    j = int(rng.integers(theta_range[0], theta_range[1] + 1))
    r = int(rng.integers(2, 9))
    k_t = int(rng.integers(2, 7))
    theta_pmfs = rng.dirichlet(np.ones(m), size=j)
    source_weights = rng.dirichlet(np.ones(j))
    candidates = rng.dirichlet(np.ones(j), size=r)
    p1 = rng.dirichlet(np.ones(j))
    T = rng.dirichlet(np.ones(m), size=k_t)
    target = FiniteTaskDistribution(
        tuple(Categorical(p) for p in T), rng.dirichlet(np.ones(k_t))
    )
    return ThetaInstance(theta_pmfs, source_weights, candidates, p1, target, seed)


def verify_theta_instance(
    inst: ThetaInstance, alphas: Sequence[float], b6_report: StatementReport,
    bayes_report: StatementReport,
) -> None:
    """Check mixture contraction (C <= parameter TV) and the Bayesian bound."""
    bary_s = inst.source_weights @ inst.theta_pmfs
    predictives = inst.candidates @ inst.theta_pmfs  # (r, m)
    dists = _tv_vec(predictives, bary_s)
    star = int(np.argmin(dists))
    B = float(dists[star])
    predictor = inst.p1 @ inst.theta_pmfs
    C = float(0.5 * np.abs(predictor - predictives[star]).sum())
    param_tv = float(0.5 * np.abs(inst.p1 - inst.candidates[star]).sum())
    b6_report.record_slack(param_tv - C)

    T = np.stack([t.p for t in inst.target.tasks])  # type: ignore[union-attr]
    w_t = inst.target.weights
    bary_t = w_t @ T
    D = float(0.5 * np.abs(bary_s - bary_t).sum())
    masks = _event_masks(T.shape[1])
    sup_var_t = float((w_t @ ((T @ masks.T) - bary_t @ masks.T) ** 2).max())
    ers = _tv_vec(T, predictor)
    for a in alphas:
        margin = a + B + param_tv + D
        delta = sup_var_t / a**2
        exc = float(w_t[ers >= margin].sum())
        slack = delta - exc
        bayes_report.record(AlphaOutcome(a, exc, delta, slack, exc > delta + VIOLATION_TOL))


# ---------------------------------------------------------------------------
# Suite runner
# ---------------------------------------------------------------------------

_MODE_STATEMENTS = {
    "none": ["thm1", "thm2", "cor_l1", "cor_hellinger", "cor_ce",
             "lemma_b2", "lemma_b7", "prop1"],
    "no_shift": ["lemma2", "thm1", "thm2", "cor_l1", "cor_hellinger", "cor_ce",
                 "lemma_b2", "lemma_b7", "prop1"],
    "perfect_no_shift": ["lemma1", "lemma2", "thm1", "thm2", "cor_l1", "cor_hellinger",
                         "cor_ce", "lemma_b2", "lemma_b7", "prop1"],
    "assumption1": ["thm1", "thm2", "cor_eps", "cor_l1", "cor_hellinger", "cor_ce",
                    "lemma_b2", "lemma_b7", "lemma_b9", "prop1"],
    "assumption2": ["thm1", "thm2", "cor_eps", "cor_eps_dist", "cor_l1", "cor_hellinger",
                    "cor_ce", "lemma_b2", "lemma_b7", "lemma_b8", "lemma_b9", "lemma_b10",
                    "prop1"],
}


@dataclass
class OracleReport:
    n_instances: int
    seed: int
    alphas: tuple
    max_outcomes: int
    statements: dict  # statement_id -> StatementReport
    looseness_stats: dict
    violation_details: list

    @property
    def total_violations(self) -> int:
        return sum(r.violations for r in self.statements.values())

    def to_dict(self) -> dict:
        out = {
            "n_instances": self.n_instances,
            "seed": self.seed,
            "alphas": list(self.alphas),
            "max_outcomes": self.max_outcomes,
            "total_violations": self.total_violations,
            "statements": {},
            "looseness": self.looseness_stats,
            "violation_details": self.violation_details[:50],
        }
        for sid, rep in sorted(self.statements.items()):
            out["statements"][sid] = {
                "trials": rep.trials,
                "violations": rep.violations,
                "skips": rep.skips,
                "min_slack": None if rep.trials == 0 else rep.min_slack,
                "max_slack": None if rep.trials == 0 else rep.max_slack,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        lines = [f"{'statement':<16} {'trials':>8} {'violations':>10} {'skips':>7} {'min_slack':>12}"]
        for sid, rep in sorted(self.statements.items()):
            ms = "-" if rep.trials == 0 else f"{rep.min_slack:.3e}"
            lines.append(f"{sid:<16} {rep.trials:>8} {rep.violations:>10} {rep.skips:>7} {ms:>12}")
        lines.append(f"total violations: {self.total_violations}")
        return lines


def _run_range(args) -> dict:
    seed, start, stop, alphas, max_outcomes = args
    statements = {sid: StatementReport(sid) for sid in ALL_STATEMENTS}
    loos: list[float] = []
    details: list[dict] = []
    modes = CONSTRAINT_MODES
    for i in range(start, stop):
        mode = modes[i % len(modes)]
        inst = generate_instance(
            derive_seed(seed, i),
            InstanceConfig(m_range=(2, max_outcomes), constraint=mode),
        )
        comp = compute_components(inst)
        for sid in _MODE_STATEMENTS[mode]:
            rep = statements[sid]
            before = rep.violations
            if sid in PROB_STATEMENTS:
                _verify_probability_statement(comp, sid, alphas, rep)
            else:
                _verify_lemma(comp, sid, rep)
            if rep.violations > before and len(details) < 50:
                details.append({"statement": sid, "instance_seed": inst.seed, "mode": mode})
        loos.append(float(comp.t_weights @ comp.ers) - (comp.C + comp.D))
        theta = generate_theta_instance(derive_seed(seed, i, 777))
        verify_theta_instance(theta, alphas, statements["lemma_b6"], statements["cor_bayesian"])
    return {"statements": statements, "looseness": loos, "details": details}


def _merge_reports(into: StatementReport, other: StatementReport) -> None:
    into.trials += other.trials
    into.violations += other.violations
    into.skips += other.skips
    into.skip_reason = into.skip_reason or other.skip_reason
    into.min_slack = min(into.min_slack, other.min_slack)
    into.max_slack = max(into.max_slack, other.max_slack)


def run_suite(
    n_instances: int,
    seed: int = 0,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    max_outcomes: int = 6,
    threads: int = 1,
) -> OracleReport:
    """Verify every statement over ``n_instances`` seeded random instances.

    Constraint modes cycle deterministically by instance index, so every
    conditional statement sees instances satisfying its hypotheses.  Results
    are identical for any ``threads`` value: the index range is partitioned
    and partial aggregates merge in order.
    """
    alphas = tuple(float(a) for a in alphas)
    if threads <= 1 or n_instances < 2 * threads:
        chunks = [_run_range((seed, 0, n_instances, alphas, max_outcomes))]
    else:
        bounds = np.linspace(0, n_instances, threads + 1).astype(int)
        payloads = [
            (seed, int(bounds[i]), int(bounds[i + 1]), alphas, max_outcomes)
            for i in range(threads)
        ]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(_run_range, payloads))

    statements = {sid: StatementReport(sid) for sid in ALL_STATEMENTS}
    loos: list[float] = []
    details: list[dict] = []
    for chunk in chunks:
        for sid, rep in chunk["statements"].items():
            _merge_reports(statements[sid], rep)
        loos.extend(chunk["looseness"])
        details.extend(chunk["details"])
    arr = np.asarray(loos)
    loose_stats = {
        "mean": float(arr.mean()),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }
    return OracleReport(
        n_instances=n_instances,
        seed=seed,
        alphas=alphas,
        max_outcomes=max_outcomes,
        statements=statements,
        looseness_stats=loose_stats,
        violation_details=details[:50],
    )


# ---------------------------------------------------------------------------
# Negative-transfer geometry scans
# ---------------------------------------------------------------------------


def _max_feasible_extension(base: np.ndarray, direction: np.ndarray) -> float:
    """Largest mu >= 0 keeping base + mu*direction inside the simplex."""
    neg = direction < 0
    if not np.any(neg):
        return np.inf
    return float((base[neg] / -direction[neg]).min())


def negative_transfer_scan(
    seed: int = 0,
    n_instances: int = 100,
    n_points: int = 101,
    min_separation: float = 0.05,
) -> dict:
    """Monotonicity of epistemic error along predictor interpolation paths.

    For each instance the predictor moves linearly from a start point toward
    the source barycenter.  In the positive-transfer geometry (target beyond
    the barycenter) error must strictly decrease at every step; in the
    negative-transfer geometry (target behind the start point) it must
    strictly increase.
    """
    rng_master = np.random.default_rng(normalize_seed(seed))
    lambdas = np.linspace(0.0, 1.0, n_points)
    violations = {"positive": 0, "negative": 0}
    for _ in range(n_instances):
        for _attempt in range(1000):
            m = int(rng_master.integers(2, 7))
            k = int(rng_master.integers(2, 7))
            S = rng_master.dirichlet(np.ones(m), size=k)
            bary = rng_master.dirichlet(np.ones(k)) @ S
            p0 = rng_master.dirichlet(np.ones(m))
            if 0.5 * np.abs(p0 - bary).sum() >= min_separation:
                break
        else:
            raise GenerationFailure("could not separate the start predictor from the barycenter")
        path = (1.0 - lambdas)[:, None] * p0[None, :] + lambdas[:, None] * bary[None, :]

        # positive transfer: target on the far side of the barycenter
        d_pos = bary - p0
        mu = _max_feasible_extension(bary, d_pos)
        q_pos = bary + (0.0 if not np.isfinite(mu) else 0.5 * mu) * d_pos
        errs = 0.5 * np.abs(path - q_pos[None, :]).sum(axis=1)
        if not np.all(np.diff(errs) < 0.0):
            violations["positive"] += 1

        # negative transfer: target behind the start predictor
        d_neg = p0 - bary
        mu = _max_feasible_extension(p0, d_neg)
        q_neg = p0 + (0.0 if not np.isfinite(mu) else 0.5 * mu) * d_neg
        errs = 0.5 * np.abs(path - q_neg[None, :]).sum(axis=1)
        if not np.all(np.diff(errs) > 0.0):
            violations["negative"] += 1
    return {
        "instances": n_instances,
        "points": n_points,
        "violations": violations,
        "total_violations": violations["positive"] + violations["negative"],
    }
