import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg
from scipy import stats
from sklearn.base import clone

from cdfdr.basis import legendre_matrix
from cdfdr.null_model import NullModel
from cdfdr.skewbeta import (UNIFORM, BetaParams, CDModel, SkewBetaDensity, beta_loglik,
                            cd_eval, cd_eval_clipped, cd_mass, deviance, fit_beta_mle,
                            lp_coefficients, null_adjusted_density, select_coefficients,
                            smooth_pvalues, uniformity_diagnostic)
from cdfdr.specfun import DomainError
from cdfdr.validation import EstimationError

# scipy evaluation of Beta(0.81, 0.82) * (1 + 0.057 Leg_6(F_B)) at u = Phi(0.001 / 1.092)
PROSTATE_D_AT_ZERO = 0.8236757017167851


def shifted_leg(j, x):
    return math.sqrt(2 * j + 1) * npleg.legval(2 * np.asarray(x) - 1, [0] * j + [1])


def random_model(rng):
    a, b = rng.uniform(0.2, 3.0, size=2)
    k = int(rng.integers(0, 5))
    degrees = sorted(rng.choice(np.arange(1, 11), size=k, replace=False))
    coefs = tuple((int(j), float(rng.uniform(-0.3, 0.3))) for j in degrees)
    return CDModel(BetaParams(a, b), coefs)


class TestBetaMLE:
    def test_uniform_draws(self):
        u = np.random.default_rng(5).uniform(size=100_000)
        bp = fit_beta_mle(u)
        assert bp.alpha == pytest.approx(1.0, abs=0.02)
        assert bp.beta == pytest.approx(1.0, abs=0.02)

    def test_against_scipy(self, rng):
        u = rng.beta(0.4, 1.7, size=3000)
        bp = fit_beta_mle(u)
        a, b, _, _ = stats.beta.fit(u, floc=0, fscale=1)
        assert bp.alpha == pytest.approx(a, rel=1e-4)
        assert bp.beta == pytest.approx(b, rel=1e-4)

    @given(st.integers(0, 2**20), st.floats(0.2, 4), st.floats(0.2, 4))
    def test_reflection(self, seed, a, b):
        u = np.random.default_rng(seed).beta(a, b, size=400)
        u = np.clip(u, 1e-9, 1 - 1e-9)
        fwd = fit_beta_mle(u)
        back = fit_beta_mle(1 - u)
        assert back.alpha == pytest.approx(fwd.beta, abs=1e-6)
        assert back.beta == pytest.approx(fwd.alpha, abs=1e-6)

    @given(st.integers(0, 2**20))
    def test_loglik_beats_start_points(self, seed):
        rng = np.random.default_rng(seed)
        u = rng.beta(rng.uniform(0.2, 3), rng.uniform(0.2, 3), size=300).clip(1e-9, 1 - 1e-9)
        bp = fit_beta_mle(u)
        m, v = u.mean(), u.var()
        common = m * (1 - m) / v - 1
        assert bp.loglik >= beta_loglik(u, 1.0, 1.0) - 1e-9
        if common > 0:
            assert bp.loglik >= beta_loglik(u, m * common, (1 - m) * common) - 1e-9

    def test_degenerate(self):
        with pytest.raises(EstimationError):
            fit_beta_mle(np.full(20, 0.3))

    def test_rejects_boundary(self):
        with pytest.raises(ValueError):
            fit_beta_mle(np.r_[0.0, np.linspace(0.1, 0.9, 20)])

    def test_non_convergence_carries_last(self):
        u = np.random.default_rng(2).beta(0.5, 2, size=200)
        with pytest.raises(EstimationError) as info:
            fit_beta_mle(u, tol=0.0, max_iter=1)
        assert info.value.last is not None


class TestSmoothAndCoefficients:
    def test_smooth_examples(self):
        bp = BetaParams(2.0, 2.0)
        assert smooth_pvalues(0.5, bp) == pytest.approx(0.5, abs=1e-15)
        assert smooth_pvalues(0.25, bp) == pytest.approx(0.15625, abs=1e-14)

    def test_lp_examples(self):
        assert lp_coefficients([0.5], 1)[0] == 0.0
        assert lp_coefficients([0.25, 0.75], 1)[0] == pytest.approx(0.0, abs=1e-15)
        v = [0.1, 0.2, 0.9]
        expected = math.sqrt(5) / 3 * sum(6 * x * x - 6 * x + 1 for x in v)
        assert lp_coefficients(v, 2)[1] == pytest.approx(expected, abs=1e-14)

    def test_lp_empty(self):
        with pytest.raises(ValueError):
            lp_coefficients([], 3)

    def test_lp_is_empirical_integral(self, rng):
        v = rng.uniform(size=257)
        atoms, weights = np.unique(v, return_counts=True)
        integral = (legendre_matrix(atoms, 10) * (weights / v.size)[:, None]).sum(axis=0)
        np.testing.assert_allclose(lp_coefficients(v, 10), integral, atol=1e-12)


class TestSelection:
    def test_example(self):
        assert select_coefficients([0.5, 0.01], 100) == [(1, 0.5)]

    def test_all_small(self):
        assert select_coefficients([0.001, 0.002], 10**6) == []

    def test_accepts_mapping(self):
        assert select_coefficients({3: -0.4, 1: 0.02}, 50) == [(3, -0.4)]

    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=10), st.integers(10, 10**6),
           st.randoms(use_true_random=False))
    def test_order_invariant(self, coefs, n, rnd):
        items = list(enumerate(coefs, start=1))
        shuffled = items[:]
        rnd.shuffle(shuffled)
        assert select_coefficients(dict(items), n) == select_coefficients(dict(shuffled), n)

    def test_tied_squares_enter_together(self):
        penalty = math.log(1000) / 1000
        c = math.sqrt(1.5 * penalty)
        assert select_coefficients({4: c, 2: -c, 7: 0.0}, 1000) == [(2, -c), (4, c)]
        c = math.sqrt(0.5 * penalty)
        assert select_coefficients({4: c, 2: -c}, 1000) == []

    def test_deviance(self):
        assert deviance([]) == 0.0
        assert deviance([(2, 0.3)]) == pytest.approx(0.09)
        assert deviance({3: -0.16}) == pytest.approx(0.0256, abs=1e-15)


class TestCDModel:
    def test_uniform_model_is_flat(self):
        u = np.linspace(0.01, 0.99, 99)
        np.testing.assert_array_equal(cd_eval(CDModel(), u), np.ones_like(u))

    def test_matches_independent_evaluator(self, rng):
        model = CDModel(BetaParams(0.6, 1.4), ((2, 0.1), (5, -0.2)))
        u = rng.uniform(size=50)
        bp = stats.beta(0.6, 1.4)
        v = bp.cdf(u)
        expected = bp.pdf(u) * (1 + 0.1 * shifted_leg(2, v) - 0.2 * shifted_leg(5, v))
        np.testing.assert_allclose(cd_eval(model, u), expected, rtol=1e-12)

    def test_rounded_prefactor_form(self):
        # 1/B(0.81, 0.82) = 0.681, which rounds to the .68 prefactor
        model = CDModel(BetaParams(0.81, 0.82), ((6, 0.057),))
        u = np.array([0.01, 0.2, 0.5, 0.93])
        v = stats.beta.cdf(u, 0.81, 0.82)
        rounded = 0.68 * (1 + 0.057 * shifted_leg(6, v)) * u**-0.19 * (1 - u) ** -0.18
        np.testing.assert_allclose(cd_eval(model, u), rounded, rtol=0.005)
        assert math.exp(-math.lgamma(0.81) - math.lgamma(0.82) + math.lgamma(1.63)) == \
            pytest.approx(0.68, abs=0.005)

    def test_open_interval(self):
        with pytest.raises(DomainError):
            cd_eval(CDModel(), 0.0)
        with pytest.raises(DomainError):
            cd_eval(CDModel(), np.array([0.5, 1.0]))

    def test_clipped(self):
        model = CDModel(UNIFORM, ((1, -1.01 / math.sqrt(3)),))
        assert cd_eval(model, 0.9999999) < 0
        assert cd_eval_clipped(model, 0.9999999) == 1e-3
        assert cd_eval_clipped(CDModel(), 0.5) == 1.0
        assert cd_eval_clipped(CDModel(), 0.5, floor=0.5) == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            CDModel(UNIFORM, ((11, 0.1),))
        with pytest.raises(ValueError):
            CDModel(UNIFORM, ((2, 0.1), (2, 0.2)))
        with pytest.raises(ValueError):
            CDModel(pi0=1.5)

    def test_unit_mass_random_models(self, rng):
        for _ in range(100):
            assert cd_mass(random_model(rng)) == pytest.approx(1.0, abs=1e-8)

    def test_json_round_trip(self, rng):
        model = random_model(rng)
        model = CDModel(model.beta_params, model.coefficients, null=NullModel(0.1, 1.3),
                        pi0=0.93, n=123, sided="right")
        again = CDModel.from_json(model.to_json())
        assert again == model
        u = np.linspace(0.001, 0.999, 1000)
        np.testing.assert_array_equal(cd_eval(again, u), cd_eval(model, u))

    def test_schema_version_checked(self):
        data = CDModel().to_dict()
        data["schema_version"] = 99
        with pytest.raises(ValueError):
            CDModel.from_dict(data)


class TestNullAdjusted:
    def test_identity_model(self):
        model = CDModel(null=NullModel(0.0, 1.0), n=100)
        np.testing.assert_allclose(null_adjusted_density(model, np.array([-2.0, 0.0, 3.0])), 1.0)

    def test_median_maps_to_half(self):
        model = CDModel(BetaParams(0.7, 1.3), ((3, 0.1),), null=NullModel(0.4, 1.5), sided="left")
        assert null_adjusted_density(model, 0.4) == pytest.approx(cd_eval(model, 0.5), abs=1e-15)

    def test_reference_model_at_zero(self):
        model = CDModel(BetaParams(0.81, 0.82), ((6, 0.057),), null=NullModel(-0.001, 1.092),
                        sided="left", n=6033)
        assert null_adjusted_density(model, 0.0) == pytest.approx(PROSTATE_D_AT_ZERO, rel=1e-12)

    def test_needs_null(self):
        with pytest.raises(ValueError):
            null_adjusted_density(CDModel(), 0.0)


class TestDiagnostic:
    def test_uniform_grid(self):
        u = (np.arange(1, 2001) - 0.5) / 2000
        stat, p = uniformity_diagnostic(u)
        assert stat < 1e-3 and p > 0.999

    def test_power(self):
        u = np.random.default_rng(3).beta(0.5, 1.0, size=10_000)
        assert uniformity_diagnostic(u)[1] < 1e-6

    @given(st.integers(0, 2**20))
    def test_reflection_invariant(self, seed):
        u = np.random.default_rng(seed).beta(0.8, 1.3, size=500).clip(1e-9, 1 - 1e-9)
        assert uniformity_diagnostic(u)[0] == pytest.approx(uniformity_diagnostic(1 - u)[0],
                                                            rel=1e-7, abs=1e-9)


class TestEstimator:
    def test_get_params_and_clone(self):
        est = SkewBetaDensity(max_degree=6, selection="none")
        assert clone(est).get_params() == est.get_params()

    def test_fit_uniform(self):
        est = SkewBetaDensity().fit(np.random.default_rng(9).uniform(size=5000))
        assert est.model_.coefficients == ()
        assert est.transform([0.3]).shape == (1,)
        assert np.all(np.abs(est.score_samples([0.2, 0.8]) - 1) < 0.1)

    def test_unknown_selection(self):
        with pytest.raises(ValueError):
            SkewBetaDensity(selection="aic").fit(np.linspace(0.01, 0.99, 50))
