"""Synthetic Bayesian-transfer-learning experiments and Monte Carlo checks.

Two experiment families over a two-covariate Bayesian linear regression:

* neighborhood: target tasks constructed a uniformly drawn TV distance away
  from one of the observed source tasks; epistemic error recorded against
  the neighborhood size and the posterior mass near the true coefficients.
* negative transfer: fixed source/target coefficient scenarios; epistemic
  error, lack of convergence C, distribution shift D and the bound
  looseness er - (C + D) recorded against the number of source tasks.

All TV-distance proxies use the Pinsker upper bound on a seeded Monte Carlo
KL estimate, selected explicitly to mirror the reference methodology.  Rows
derive their random streams from (master seed, experiment id, grid index,
sim index), so serial and parallel schedules write identical CSV bytes.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from . import __version__ as _pkg_version
from .bayes import (
    GaussianParamDist,
    NIGModel,
    SourceDataset,
    posterior_mass_near,
    posterior_predictive,
    posterior_update,
)
from .bounds import ModelClass, evaluate_bound
from .distributions import (
    FiniteTaskDistribution,
    Gaussian,
    GaussianMixture,
    InverseGammaGaussianTasks,
    TaskDistribution,
    distribution_from_dict,
    task_distribution_from_dict,
)
from .divergences import tv_exact, tv_upper_pinsker
from .errors import InvalidArgument, SupportViolation
from .seeding import derive_seed, normalize_seed

log = logging.getLogger(__name__)

CSV_HEADER = "sim,seed,n,epsilon,epistemic_error,C,D,looseness,posterior_mass,runtime_ms"
TARGET_COVARIATES = np.array([1.0, 1.0])

SCENARIO_BETAS = {
    "negative_transfer_pos": (np.array([0.0, 1.0]), np.array([1.0, 1.0])),
    "negative_transfer_neg": (np.array([-1.0, 0.0]), np.array([1.0, 0.0])),
    "negative_transfer_posneg": (np.array([0.0, 2.0]), np.array([0.0, 1.0])),
}

_EXP_NEIGHBORHOOD = 1
_EXP_NEGATIVE_TRANSFER = 2
_EXP_BARYCENTER = 3


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    scenario: str = "custom"
    beta_source: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    beta_target: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0]))
    ig_source: tuple[float, float] = (20.0, 10.0)  # (concentration, rate)
    ig_target: tuple[float, float] = (20.0, 10.0)
    epsilon_grid: tuple[float, ...] = ()
    n_grid: tuple[int, ...] = ()
    sims: int = 500
    kl_samples: int = 400
    barycenter_components: int = 256
    master_seed: int = 0
    n_source_tasks: int = 10  # neighborhood experiment
    posterior_mass_radius: float = 0.25
    prior: NIGModel = field(default_factory=NIGModel)

    def __post_init__(self):
        for name in ("beta_source", "beta_target"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(2)
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.sims < 1:
            raise InvalidArgument("sims must be >= 1")
        if any(v <= 0 for v in (*self.ig_source, *self.ig_target)):
            raise InvalidArgument("inverse gamma parameters must be positive")

    @classmethod
    def neighborhood(
        cls, epsilons: Sequence[float], sims: int = 500, master_seed: int = 0, **kw
    ) -> "ExperimentConfig":
        if not epsilons:
            raise InvalidArgument("epsilon grid must be nonempty")
        return cls(scenario="neighborhood", epsilon_grid=tuple(epsilons), sims=sims,
                   master_seed=master_seed, **kw)

    @classmethod
    def negative_transfer(
        cls, scenario: str, n_grid: Sequence[int], sims: int = 500, master_seed: int = 0, **kw
    ) -> "ExperimentConfig":
        key = f"negative_transfer_{scenario}" if not scenario.startswith("negative") else scenario
        if key not in SCENARIO_BETAS:
            raise InvalidArgument(f"unknown negative-transfer scenario {scenario!r}")
        if not n_grid:
            raise InvalidArgument("n grid must be nonempty")
        beta_s, beta_t = SCENARIO_BETAS[key]
        return cls(scenario=key, beta_source=beta_s, beta_target=beta_t,
                   n_grid=tuple(n_grid), sims=sims, master_seed=master_seed, **kw)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "beta_source": self.beta_source.tolist(),
            "beta_target": self.beta_target.tolist(),
            "ig_source": list(self.ig_source),
            "ig_target": list(self.ig_target),
            "epsilon_grid": list(self.epsilon_grid),
            "n_grid": list(self.n_grid),
            "sims": self.sims,
            "kl_samples": self.kl_samples,
            "barycenter_components": self.barycenter_components,
            "master_seed": self.master_seed,
            "n_source_tasks": self.n_source_tasks,
            "posterior_mass_radius": self.posterior_mass_radius,
            "prior": self.prior.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kw = dict(data)
        if "prior" in kw:
            kw["prior"] = NIGModel.from_dict(kw["prior"])
        for key in ("beta_source", "beta_target"):
            if key in kw:
                kw[key] = np.asarray(kw[key], dtype=float)
        for key in ("ig_source", "ig_target"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass(frozen=True)
class ExperimentRecord:
    sim: int
    seed: int
    n: int
    epsilon: Optional[float]
    epistemic_error: float
    C: Optional[float]
    D: Optional[float]
    looseness: Optional[float]
    posterior_mass: Optional[float]
    runtime_ms: Optional[float] = None

    def to_csv_row(self) -> str:
        def fmt(v) -> str:
            return "" if v is None else repr(float(v))

        return ",".join([
            str(self.sim), str(self.seed), str(self.n), fmt(self.epsilon),
            fmt(self.epistemic_error), fmt(self.C), fmt(self.D),
            fmt(self.looseness), fmt(self.posterior_mass), fmt(self.runtime_ms),
        ])


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    return "\n".join([CSV_HEADER, *(r.to_csv_row() for r in records)]) + "\n"


# ---------------------------------------------------------------------------
# Data generation
# ---------------------------------------------------------------------------


def sample_source_data(config: ExperimentConfig, n: int, seed: int) -> SourceDataset:
    """n source tasks, one observation each: xi ~ U(0,1)^2, x ~ N(beta.xi, sd_i).

    Task noise variances draw i.i.d. from IG(ig_source); they ride along in
    ``task_variances`` for target construction but are not learner-visible.
    """
    rng = np.random.default_rng(normalize_seed(seed))
    if n == 0:
        from .bayes import empty_dataset

        return empty_dataset()
    a, d = config.ig_source
    variances = 1.0 / rng.gamma(a, 1.0 / d, size=n)
    xi = rng.uniform(0.0, 1.0, size=(n, 2))
    x = rng.normal(xi @ config.beta_source, np.sqrt(variances))
    return SourceDataset(xi, x, np.arange(1, n + 1), task_variances=variances)


def target_task(config: ExperimentConfig, seed: int) -> Gaussian:
    """One realized target task at the fixed covariates xi = (1, 1)."""
    rng = np.random.default_rng(normalize_seed(seed))
    a, d = config.ig_target
    variance = float(1.0 / rng.gamma(a, 1.0 / d))
    return Gaussian(float(config.beta_target @ TARGET_COVARIATES), math.sqrt(variance))


def neighborhood_target(
    source_task: Gaussian, eps_tilde: float, direction: float = 1.0
) -> Gaussian:
    """Gaussian at exact TV distance ``eps_tilde`` from ``source_task``.

    Same scale; the mean shifts by the closed-form inverse of the
    equal-variance Gaussian TV formula 2*Phi(dmu / (2 sigma)) - 1.
    """
    if not 0.0 <= eps_tilde < 1.0:
        raise InvalidArgument(f"eps_tilde must lie in [0, 1), got {eps_tilde}")
    if eps_tilde == 0.0:
        return source_task
    dmu = 2.0 * source_task.stddev * float(ndtri((1.0 + eps_tilde) / 2.0))
    sign = 1.0 if direction >= 0 else -1.0
    return Gaussian(source_task.mean + sign * dmu, source_task.stddev)


def _task_distribution_at_target(
    config: ExperimentConfig, which: str
) -> InverseGammaGaussianTasks:
    """Source/target task distribution evaluated at the target covariates."""
    if which == "source":
        mean = float(config.beta_source @ TARGET_COVARIATES)
        a, d = config.ig_source
    else:
        mean = float(config.beta_target @ TARGET_COVARIATES)
        a, d = config.ig_target
    return InverseGammaGaussianTasks(mean, a, d)


def _barycenter_mixture(config: ExperimentConfig, which: str, stream: int) -> GaussianMixture:
    fam = _task_distribution_at_target(config, which)
    fin = fam.reify(
        config.barycenter_components,
        derive_seed(config.master_seed, _EXP_BARYCENTER, stream),
    )
    from .distributions import barycenter

    mix = barycenter(fin)
    assert isinstance(mix, GaussianMixture)
    return mix


def _fit_predictor(
    config: ExperimentConfig, data: SourceDataset
) -> tuple[GaussianParamDist, Gaussian]:
    post = posterior_update(config.prior, data)
    noise = config.prior.prior_noise_variance
    return post, posterior_predictive(post, TARGET_COVARIATES, noise)


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------


def _neighborhood_row(config: ExperimentConfig, g: int, s: int) -> Optional[ExperimentRecord]:
    eps = config.epsilon_grid[g]
    row_seed = derive_seed(config.master_seed, _EXP_NEIGHBORHOOD, g, s)
    data = sample_source_data(config, config.n_source_tasks, derive_seed(row_seed, 0))
    post, predictor = _fit_predictor(config, data)

    rng = np.random.default_rng(normalize_seed(derive_seed(row_seed, 1)))
    i = int(rng.integers(config.n_source_tasks))
    eps_tilde = float(rng.uniform(0.0, eps))
    source_task_i = Gaussian(
        float(config.beta_source @ TARGET_COVARIATES),
        math.sqrt(float(data.task_variances[i])),
    )
    target = neighborhood_target(source_task_i, eps_tilde)

    try:
        er = tv_upper_pinsker(
            predictor, target, n_samples=config.kl_samples,
            seed=derive_seed(row_seed, 2), force_mc=True,
        ).value
    except SupportViolation as exc:
        log.warning("neighborhood row (eps=%s, sim=%d) dropped: %s", eps, s, exc)
        return None
    mass = posterior_mass_near(post, config.beta_source, config.posterior_mass_radius)
    return ExperimentRecord(
        sim=s, seed=row_seed, n=config.n_source_tasks, epsilon=eps,
        epistemic_error=er, C=None, D=None, looseness=None, posterior_mass=mass,
    )


def _negative_transfer_row(
    config: ExperimentConfig,
    g: int,
    s: int,
    bary_s: GaussianMixture,
    bary_t: GaussianMixture,
) -> Optional[ExperimentRecord]:
    n = config.n_grid[g]
    row_seed = derive_seed(config.master_seed, _EXP_NEGATIVE_TRANSFER, g, s)
    data = sample_source_data(config, n, derive_seed(row_seed, 0))
    _, predictor = _fit_predictor(config, data)
    target = target_task(config, derive_seed(row_seed, 1))

    try:
        er = tv_upper_pinsker(predictor, target, n_samples=config.kl_samples,
                              seed=derive_seed(row_seed, 2), force_mc=True).value
        c = tv_upper_pinsker(predictor, bary_s, n_samples=config.kl_samples,
                             seed=derive_seed(row_seed, 3), force_mc=True).value
        d = tv_upper_pinsker(bary_s, bary_t, n_samples=config.kl_samples,
                             seed=derive_seed(row_seed, 4), force_mc=True).value
    except SupportViolation as exc:
        log.warning("negative-transfer row (n=%d, sim=%d) dropped: %s", n, s, exc)
        return None
    return ExperimentRecord(
        sim=s, seed=row_seed, n=n, epsilon=None, epistemic_error=er,
        C=c, D=d, looseness=er - (c + d), posterior_mass=None,
    )


def _run_neighborhood_grid_point(payload) -> list:
    config_dict, g = payload
    config = ExperimentConfig.from_dict(config_dict)
    rows = []
    for s in range(config.sims):
        rec = _neighborhood_row(config, g, s)
        if rec is not None:
            rows.append(rec)
    return rows


def _run_negative_transfer_grid_point(payload) -> list:
    config_dict, g = payload
    config = ExperimentConfig.from_dict(config_dict)
    bary_s = _barycenter_mixture(config, "source", 0)
    bary_t = _barycenter_mixture(config, "target", 1)
    rows = []
    for s in range(config.sims):
        rec = _negative_transfer_row(config, g, s, bary_s, bary_t)
        if rec is not None:
            rows.append(rec)
    return rows


def _run_grid(worker, config: ExperimentConfig, n_points: int, threads: int) -> list:
    payloads = [(config.to_dict(), g) for g in range(n_points)]
    if threads <= 1 or n_points == 1:
        chunks = [worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=min(threads, n_points)) as ex:
            chunks = list(ex.map(worker, payloads))
    return [rec for chunk in chunks for rec in chunk]


def run_neighborhood_experiment(config: ExperimentConfig, threads: int = 1) -> list:
    """Sweep over neighborhood sizes; one record per simulation."""
    if not config.epsilon_grid:
        raise InvalidArgument("neighborhood experiment needs an epsilon grid")
    return _run_grid(_run_neighborhood_grid_point, config, len(config.epsilon_grid), threads)


def run_negative_transfer_experiment(config: ExperimentConfig, threads: int = 1) -> list:
    """Sweep over source-task counts; one record per simulation."""
    if not config.n_grid:
        raise InvalidArgument("negative-transfer experiment needs an n grid")
    return _run_grid(_run_negative_transfer_grid_point, config, len(config.n_grid), threads)


# ---------------------------------------------------------------------------
# Monte Carlo bound verification (continuous settings included)
# ---------------------------------------------------------------------------


def monte_carlo_verify(setup: dict, trials: int, seed: int) -> dict:
    """Empirical exceedance check of one bound statement.

    ``setup`` carries predictor, source/target task distributions, a
    statement id, alpha, and optionally a model class and the statement's
    extra inputs.  Passes when the exceedance frequency stays within two
    binomial standard errors of delta (vacuously when delta >= 1).
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    predictor = setup["predictor"]
    source: TaskDistribution = setup["source"]
    target: TaskDistribution = setup["target"]
    model = setup.get("model") or ModelClass((predictor,))
    report = evaluate_bound(
        setup["statement_id"],
        model=model,
        predictor=predictor,
        source=source,
        target=target,
        alpha=float(setup["alpha"]),
        epsilon=setup.get("epsilon"),
        b_source=setup.get("b_source"),
        b_target=setup.get("b_target"),
        param_posterior=setup.get("param_posterior"),
        param_best=setup.get("param_best"),
        b_pred=setup.get("b_pred"),
    )
    rng = np.random.default_rng(normalize_seed(seed))
    if isinstance(target, FiniteTaskDistribution):
        ers = np.array([tv_exact(predictor, t) for t in target.tasks])
        idx = rng.choice(target.n_tasks, size=trials, p=target.weights)
        exceed = ers[idx] >= report.margin
    else:
        exceed = np.empty(trials, dtype=bool)
        for t in range(trials):
            task = target.sample_task(rng)
            exceed[t] = tv_exact(predictor, task) >= report.margin
    freq = float(exceed.mean())
    stderr = math.sqrt(freq * (1.0 - freq) / trials)
    passed = report.delta >= 1.0 or freq <= report.delta + 2.0 * stderr
    return {
        "empirical_freq": freq,
        "delta": report.delta,
        "margin": report.margin,
        "trials": trials,
        "seed": int(seed),
        "stderr": stderr,
        "pass": bool(passed),
    }


def setup_from_dict(data: dict) -> dict:
    """Deserialize a monte_carlo_verify setup from its JSON form."""
    out = dict(data)
    out["predictor"] = distribution_from_dict(data["predictor"])
    out["source"] = task_distribution_from_dict(data["source"])
    out["target"] = task_distribution_from_dict(data["target"])
    if data.get("model") is not None:
        out["model"] = ModelClass.from_dict(data["model"])
    for key in ("param_posterior", "param_best"):
        if data.get(key) is not None:
            raw = data[key]
            if raw.get("kind") == "gaussian_param":
                out[key] = GaussianParamDist.from_dict(raw)
            else:
                out[key] = distribution_from_dict(raw)
    return out


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------


def build_manifest(config: ExperimentConfig, outputs: Sequence[str]) -> dict:
    import numpy
    import scipy

    return {
        "config": config.to_dict(),
        "master_seed": config.master_seed,
        "artifact_version": _pkg_version,
        "numpy_version": numpy.__version__,
        "scipy_version": scipy.__version__,
        "tv_method": f"pinsker_upper(mc_samples={config.kl_samples})",
        "outputs": list(outputs),
    }


def write_experiment_output(records: Sequence[ExperimentRecord], config: ExperimentConfig,
                            out_dir, name: str) -> list:
    """Write <name>.csv plus a reproduction manifest; returns written paths."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    csv_path.write_text(records_to_csv(records))
    manifest_path = out / f"{name}_manifest.json"
    manifest = build_manifest(config, [csv_path.name])
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return [csv_path, manifest_path]
