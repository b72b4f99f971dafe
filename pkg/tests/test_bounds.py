"""Decomposition components and bound-statement evaluation."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

from epibound import (
    Categorical,
    FiniteTaskDistribution,
    Gaussian,
    GaussianParamDist,
    InvalidArgument,
    InvalidModelClass,
    ModelClass,
    PreconditionViolated,
    best_approximation,
    chebyshev_delta,
    convergence_gap,
    distribution_shift,
    distribution_shift_learner,
    epistemic_error,
    evaluate_bound,
    finite_tasks,
)
from epibound.bounds import CSV_HEADER, STATEMENT_IDS


class TestBestApproximation:
    def test_grid_argmin(self, binary_model):
        best, bias = best_approximation(binary_model, Categorical([0.4, 0.6]))
        np.testing.assert_allclose(best.p, [0.5, 0.5])
        assert bias == pytest.approx(0.1, abs=1e-12)

    def test_target_in_class(self, binary_model):
        target = Categorical([0.25, 0.75])
        best, bias = best_approximation(binary_model, target)
        assert bias == 0.0
        np.testing.assert_allclose(best.p, target.p)

    def test_forced_singleton(self):
        model = ModelClass((Categorical([0.0, 1.0]),))
        best, bias = best_approximation(model, Categorical([1.0, 0.0]))
        assert bias == pytest.approx(1.0)

    def test_tie_breaks_to_lowest_index(self):
        # two members exactly equidistant from the target (dyadic values)
        model = ModelClass((Categorical([0.25, 0.75]), Categorical([0.75, 0.25])))
        best, bias = best_approximation(model, Categorical([0.5, 0.5]))
        assert bias == pytest.approx(0.25)
        np.testing.assert_allclose(best.p, [0.25, 0.75])

    def test_empty_class(self):
        with pytest.raises(InvalidModelClass):
            ModelClass(())

    def test_serialization_preserves_order(self, binary_model):
        back = ModelClass.from_dict(binary_model.to_dict())
        assert [m.to_dict() for m in back.members] == [m.to_dict() for m in binary_model.members]


class TestComponents:
    def test_convergence_gap_zero(self):
        p = Categorical([0.5, 0.5])
        assert convergence_gap(p, p) == 0.0

    def test_convergence_gap_categorical(self):
        assert convergence_gap(Categorical([0.25, 0.75]), Categorical([0.5, 0.5])) == pytest.approx(0.25)

    def test_convergence_gap_gaussian(self):
        v = convergence_gap(Gaussian(0, 1), Gaussian(0.5, 1))
        assert v == pytest.approx(2 * ndtr(0.25) - 1, abs=1e-12)
        assert v == pytest.approx(0.1974, abs=1e-4)

    def test_distribution_shift(self, binary_source, binary_target):
        assert distribution_shift(binary_source, binary_source) == 0.0
        assert distribution_shift(binary_source, binary_target) == pytest.approx(0.2, abs=1e-12)
        a = finite_tasks([(Categorical([1.0, 0.0]), 1.0)])
        b = finite_tasks([(Categorical([0.0, 1.0]), 1.0)])
        assert distribution_shift(a, b) == pytest.approx(1.0)

    def test_learner_shift(self):
        v = distribution_shift_learner(Categorical([0.5, 0.5]), Categorical([0.6, 0.4]), bias=0.1)
        assert v == pytest.approx(0.0, abs=1e-12)
        assert distribution_shift_learner(Categorical([0.5, 0.5]), Categorical([0.5, 0.5]), 0.0) == 0.0
        # best much closer to the target barycenter than the bias
        v = distribution_shift_learner(Categorical([0.55, 0.45]), Categorical([0.6, 0.4]), bias=0.1)
        assert v == pytest.approx(-0.05, abs=1e-12)

    def test_epistemic_error(self, binary_predictor):
        assert epistemic_error(binary_predictor, binary_predictor) == 0.0
        er = epistemic_error(Categorical([0.25, 0.75]), Categorical([0.6, 0.4]))
        assert er == pytest.approx(0.35, abs=1e-12)
        assert er <= 0.15 + 0.1 + 0.25 + 0.2  # bound sanity on the worked instance

    def test_chebyshev_delta(self, binary_source):
        assert chebyshev_delta(binary_source, 0.15) == pytest.approx(0.01 / 0.0225, abs=1e-10)
        point = finite_tasks([(Categorical([0.2, 0.8]), 1.0)])
        assert chebyshev_delta(point, 0.3) == 0.0
        assert chebyshev_delta(binary_source, 0.05) == pytest.approx(4.0, abs=1e-10)  # vacuous
        with pytest.raises(InvalidArgument):
            chebyshev_delta(binary_source, 0.0)


class TestEvaluateBound:
    def test_thm1_worked_instance(self, binary_model, binary_predictor, binary_source, binary_target):
        rep = evaluate_bound("thm1", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=binary_target, alpha=0.15)
        assert rep.margin == pytest.approx(0.70, abs=1e-12)
        assert rep.delta == 0.0  # point-mass target
        assert (rep.B, rep.C, rep.D) == (pytest.approx(0.1), pytest.approx(0.25), pytest.approx(0.2))

    def test_lemma1_worked_instance(self, binary_model, binary_source):
        bary = Categorical([0.4, 0.6])
        rep = evaluate_bound("lemma1", model=binary_model, predictor=bary,
                             source=binary_source, target=binary_source, alpha=0.15)
        assert rep.margin == pytest.approx(0.15)
        assert rep.delta == pytest.approx(0.4444, abs=1e-4)

    def test_cor_l1_doubles(self, binary_model, binary_predictor, binary_source, binary_target):
        rep = evaluate_bound("cor_l1", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=binary_target, alpha=0.15)
        assert rep.margin == pytest.approx(1.40, abs=1e-12)

    def test_lemma1_requires_perfect_learning(self, binary_model, binary_predictor, binary_source):
        with pytest.raises(PreconditionViolated) as exc:
            evaluate_bound("lemma1", model=binary_model, predictor=binary_predictor,
                           source=binary_source, target=binary_source, alpha=0.15)
        assert exc.value.assumption == "perfect_learning"

    def test_lemma2_requires_no_shift(self, binary_model, binary_predictor, binary_source, binary_target):
        with pytest.raises(PreconditionViolated) as exc:
            evaluate_bound("lemma2", model=binary_model, predictor=binary_predictor,
                           source=binary_source, target=binary_target, alpha=0.15)
        assert exc.value.assumption == "no_shift"

    def test_cor_eps_delta(self, binary_model, binary_predictor, binary_source):
        # target tasks inside the source's TV 0.1-neighborhood, bounded weights
        target = finite_tasks([
            (Categorical([0.35, 0.65]), 0.5),
            (Categorical([0.45, 0.55]), 0.5),
        ])
        rep = evaluate_bound("cor_eps", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=target, alpha=0.2, epsilon=0.1)
        b_S = min(0.5, 0.3)  # first-order 0.5, second-order 0.3
        expected = (1 - 0.5) / (b_S * 0.04) * (0.01 + (0.2 + 0.1) ** 2)
        assert rep.delta == pytest.approx(expected, abs=1e-10)
        assert rep.extras["diam_source"] == pytest.approx(0.2)

    def test_cor_eps_neighborhood_violation(self, binary_model, binary_predictor, binary_source):
        far = finite_tasks([(Categorical([0.9, 0.1]), 0.5), (Categorical([0.8, 0.2]), 0.5)])
        with pytest.raises(PreconditionViolated) as exc:
            evaluate_bound("cor_eps", model=binary_model, predictor=binary_predictor,
                           source=binary_source, target=far, alpha=0.2, epsilon=0.1)
        assert exc.value.assumption == "eps_neighborhood"

    def test_cor_eps_dist_delta(self, binary_model, binary_predictor, binary_source):
        target = FiniteTaskDistribution(binary_source.tasks, np.array([0.6, 0.4]))
        rep = evaluate_bound("cor_eps_dist", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=target, alpha=0.2, epsilon=0.15)
        expected = (1 - 0.4) / (0.3 * 0.04) * (0.01 + 0.15**2)
        assert rep.delta == pytest.approx(expected, abs=1e-10)

    def test_cor_eps_dist_assumption_violated(self, binary_model, binary_predictor, binary_source):
        target = FiniteTaskDistribution(binary_source.tasks, np.array([0.9, 0.1]))
        with pytest.raises(PreconditionViolated) as exc:
            evaluate_bound("cor_eps_dist", model=binary_model, predictor=binary_predictor,
                           source=binary_source, target=target, alpha=0.2, epsilon=0.1)
        assert exc.value.assumption == "eps_distribution_distance"

    def test_cor_ce_default_b_pred(self, binary_model, binary_predictor, binary_source, binary_target):
        rep = evaluate_bound("cor_ce", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=binary_target, alpha=0.15)
        assert rep.extras["b_pred"] == pytest.approx(0.25)
        ent = -(0.6 * math.log(0.6) + 0.4 * math.log(0.4))
        assert rep.extras["entropy_E"] == pytest.approx(ent, abs=1e-12)
        assert rep.margin == pytest.approx((2 / 0.25) * 0.70**2 + ent, abs=1e-10)

    def test_cor_bayesian_with_gaussian_params(self, binary_model, binary_predictor,
                                               binary_source, binary_target):
        p1 = GaussianParamDist(np.array([0.0, 0.0]), np.eye(2))
        pstar = GaussianParamDist(np.array([1.0, 0.0]), np.eye(2))
        rep = evaluate_bound("cor_bayesian", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=binary_target, alpha=0.15,
                             param_posterior=p1, param_best=pstar)
        assert rep.extras["param_tv"] == pytest.approx(0.5, abs=1e-12)
        assert rep.margin == pytest.approx(0.15 + 0.1 + 0.5 + 0.2, abs=1e-12)

    def test_cor_bayes_eps_variant(self, binary_model, binary_predictor, binary_source):
        target = finite_tasks([
            (Categorical([0.35, 0.65]), 0.5),
            (Categorical([0.45, 0.55]), 0.5),
        ])
        p1 = Categorical([0.6, 0.4])
        pstar = Categorical([0.5, 0.5])
        rep = evaluate_bound("cor_bayes_eps", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=target, alpha=0.2, epsilon=0.1,
                             param_posterior=p1, param_best=pstar)
        assert rep.extras["param_tv"] == pytest.approx(0.1, abs=1e-12)
        m, d = rep.rederive()
        assert rep.margin == pytest.approx(m, abs=1e-12)
        assert rep.delta == pytest.approx(d, abs=1e-12)

    def test_unknown_statement(self, binary_model, binary_predictor, binary_source, binary_target):
        with pytest.raises(InvalidArgument):
            evaluate_bound("thm3", model=binary_model, predictor=binary_predictor,
                           source=binary_source, target=binary_target, alpha=0.1)

    def test_csv_row_shape(self, binary_model, binary_predictor, binary_source, binary_target):
        rep = evaluate_bound("thm1", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=binary_target, alpha=0.15)
        row = rep.to_csv_row()
        assert row.startswith("thm1,0.15,")
        assert len(row.split(",")) == len(CSV_HEADER.split(","))

    def test_to_dict_roundtrip_fields(self, binary_model, binary_predictor, binary_source, binary_target):
        rep = evaluate_bound("thm2", model=binary_model, predictor=binary_predictor,
                             source=binary_source, target=binary_target, alpha=0.15)
        d = rep.to_dict()
        assert d["statement_id"] == "thm2"
        assert d["margin"] == rep.margin


class TestInvariants:
    @staticmethod
    def _random_instance(rng):
        m = int(rng.integers(2, 6))
        k = int(rng.integers(2, 6))
        source = finite_tasks([
            (Categorical(rng.dirichlet(np.ones(m))), w) for w in rng.dirichlet(np.ones(k))
        ])
        target = finite_tasks([
            (Categorical(rng.dirichlet(np.ones(m))), w) for w in rng.dirichlet(np.ones(k))
        ])
        model = ModelClass(tuple(
            Categorical(rng.dirichlet(np.ones(m))) for _ in range(int(rng.integers(3, 10)))
        ))
        predictor = Categorical(rng.dirichlet(np.ones(m)))
        return model, predictor, source, target

    def test_rederivability(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            model, predictor, source, target = self._random_instance(rng)
            for sid in ("thm1", "thm2", "cor_l1", "cor_hellinger", "cor_ce"):
                rep = evaluate_bound(sid, model=model, predictor=predictor,
                                     source=source, target=target, alpha=0.2)
                m, d = rep.rederive()
                assert rep.margin == pytest.approx(m, abs=1e-12)
                assert rep.delta == pytest.approx(d, abs=1e-12)

    def test_rederivability_no_shift_statements(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            model, predictor, source, _ = self._random_instance(rng)
            bary = Categorical(source.weights @ np.stack([t.p for t in source.tasks]))
            for sid, pred in (("lemma1", bary), ("lemma2", predictor)):
                rep = evaluate_bound(sid, model=model, predictor=pred,
                                     source=source, target=source, alpha=0.3)
                m, d = rep.rederive()
                assert rep.margin == pytest.approx(m, abs=1e-12)
                assert rep.delta == pytest.approx(d, abs=1e-12)
                assert rep.D == 0.0

    def test_delta_monotone_in_alpha(self, binary_model, binary_predictor, binary_source):
        target = finite_tasks([
            (Categorical([0.35, 0.65]), 0.5),
            (Categorical([0.45, 0.55]), 0.5),
        ])
        deltas = [
            evaluate_bound("thm1", model=binary_model, predictor=binary_predictor,
                           source=binary_source, target=target, alpha=a).delta
            for a in (0.05, 0.1, 0.2, 0.4)
        ]
        assert all(d1 > d2 for d1, d2 in zip(deltas, deltas[1:]))

    def test_cor_eps_delta_nondecreasing_in_epsilon(self, binary_model, binary_predictor, binary_source):
        target = finite_tasks([
            (Categorical([0.35, 0.65]), 0.5),
            (Categorical([0.45, 0.55]), 0.5),
        ])
        deltas = [
            evaluate_bound("cor_eps", model=binary_model, predictor=binary_predictor,
                           source=binary_source, target=target, alpha=0.2, epsilon=e).delta
            for e in (0.1, 0.2, 0.4)
        ]
        assert all(d1 <= d2 for d1, d2 in zip(deltas, deltas[1:]))

    def test_learner_shift_never_exceeds_d(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            model, predictor, source, target = self._random_instance(rng)
            rep = evaluate_bound("thm2", model=model, predictor=predictor,
                                 source=source, target=target, alpha=0.2)
            assert rep.D >= rep.D_learner - 1e-10
            thm1 = evaluate_bound("thm1", model=model, predictor=predictor,
                                  source=source, target=target, alpha=0.2)
            assert rep.margin <= thm1.margin + 1e-10

    def test_all_statement_ids_known(self):
        assert len(STATEMENT_IDS) == 12
