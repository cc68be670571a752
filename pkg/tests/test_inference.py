import io
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdfdr.inference import (bh_set_form, bh_step_up, cd_bh, ecdf_at, efron_density_reject,
                             hc_argmax, hc_statistics, hc_threshold, local_fdr, local_fdr_reject)
from cdfdr.null_model import NullModel
from cdfdr.skewbeta import UNIFORM, BetaParams, CDModel

# scipy brentq root of Beta(0.25, 1) density = 10
EFRON_CROSSING = 0.007310044345536005


def brute_force_bh(p, alpha, pi0):
    """Largest threshold t among the p-values with t <= #{p <= t} alpha / (N pi0),
    in exact rational arithmetic."""
    n = len(p)
    alpha, pi0 = Fraction(alpha), Fraction(pi0)
    cut = None
    for t in p:
        count = sum(1 for q in p if q <= t)
        if Fraction(float(t)) <= count * alpha / (n * pi0) and (cut is None or t > cut):
            cut = t
    return set() if cut is None else {i for i, q in enumerate(p) if q <= cut}


def random_instance(rng):
    n = int(rng.integers(5, 51))
    p = rng.uniform(size=n) ** rng.uniform(1, 6)
    if rng.uniform() < 0.3:
        p = np.round(p, 2).clip(0.005, 1)
    return p, float(rng.choice([0.01, 0.05, 0.1])), float(rng.choice([0.5, 1.0]))


class TestBH:
    def test_example(self):
        res = cd_bh([0.001, 0.2, 0.9], 0.05, 1.0)
        assert res.rejected == (0,)

    def test_nothing_significant(self):
        assert cd_bh(np.full(10, 0.99), 0.9).n_rejected == 0

    def test_set_form_equals_step_up_and_brute_force(self, rng):
        for _ in range(1000):
            p, alpha, pi0 = random_instance(rng)
            step, _ = bh_step_up(p, alpha, pi0)
            via_set, _ = bh_set_form(p, alpha, pi0)
            assert set(step.tolist()) == set(via_set.tolist()) == brute_force_bh(p, alpha, pi0)

    def test_no_disagreement_warning(self, rng):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            for _ in range(50):
                cd_bh(*random_instance(rng))

    def test_ecdf_ties_take_max_rank(self):
        np.testing.assert_allclose(ecdf_at(np.array([0.2, 0.1, 0.2, 0.5])), [0.75, 0.25, 0.75, 1])

    @given(st.integers(0, 2**20))
    def test_monotone_in_alpha_and_pi0(self, seed):
        p, _, _ = random_instance(np.random.default_rng(seed))
        counts = [cd_bh(p, a, 1.0).n_rejected for a in (0.01, 0.05, 0.1, 0.2)]
        assert counts == sorted(counts)
        counts = [cd_bh(p, 0.05, pi0).n_rejected for pi0 in (0.3, 0.5, 0.8, 1.0)]
        assert counts == sorted(counts, reverse=True)

    def test_bad_level(self):
        with pytest.raises(ValueError):
            cd_bh([0.1, 0.2], 0.0)
        with pytest.raises(ValueError):
            cd_bh([0.1, 0.2], 0.05, pi0=0.0)


class TestHC:
    def test_example(self):
        res = hc_threshold([0.01, 0.5, 0.9], alpha0=0.4)
        expected = (1 / 3 - 0.01) / math.sqrt(0.01 * 0.99)
        assert res.k == 1 and res.rejected == (0,)
        assert res.scores[0] == pytest.approx(expected, rel=1e-14)
        assert res.scores[0] == pytest.approx(3.2496222693381189, rel=1e-14)

    def test_null_sample_small(self):
        u = np.random.default_rng(4).uniform(size=1000)
        res = hc_threshold(u, 0.1)
        assert 1 <= res.k <= 100
        assert res.scores.max() * math.sqrt(1000) < 3 * math.sqrt(1000)
        assert np.max(res.scores[res.mask]) < 3

    def test_sqrt_n_scaling(self, rng):
        u = rng.uniform(size=200)
        a = hc_threshold(u, 0.1)
        b = hc_threshold(u, 0.1, scale_sqrt_n=True)
        assert a.k == b.k
        np.testing.assert_allclose(b.scores, a.scores * math.sqrt(200))

    @given(st.integers(0, 2**20), st.sampled_from(["exp", "cube", "affine", "atan"]))
    def test_argmax_invariant_to_monotone_maps(self, seed, name):
        rng = np.random.default_rng(seed)
        srt = np.sort(rng.uniform(size=int(rng.integers(10, 300))) ** 2)
        hc = hc_statistics(srt)
        fn = {"exp": np.exp, "cube": lambda x: x**3, "affine": lambda x: 3 * x - 7,
              "atan": np.arctan}[name]
        assert hc_argmax(fn(hc), srt, 0.2) == hc_argmax(hc, srt, 0.2)

    def test_floor_fallback(self):
        assert hc_threshold([1e-5, 0.5, 0.6, 0.9], alpha0=0.3).k == 1


class TestLocalFdr:
    def test_uniform_model(self):
        model = CDModel(null=NullModel(0.0, 1.0), pi0=0.97, n=100)
        fdr = local_fdr(np.linspace(-3, 3, 13), model)
        np.testing.assert_allclose(fdr, 0.97)
        assert local_fdr_reject(np.linspace(-3, 3, 13), model, 0.2).n_rejected == 0

    def test_direct_division(self):
        # Beta(2, 1) density is 2u, equal to 2 at u = 1 - tiny
        model = CDModel(BetaParams(2.0, 1.0), pi0=1.0, n=10)
        assert local_fdr([0.5], model, scale="p")[0] == pytest.approx(1.0)
        assert local_fdr([0.75], model, scale="p")[0] == pytest.approx(1 / 1.5)
        assert local_fdr([0.9], model, pi0=1.0, scale="p")[0] == pytest.approx(1 / 1.8)

    def test_capped_and_floored(self, rng):
        model = CDModel(UNIFORM, ((1, -0.6),), pi0=0.9, n=1000)
        u = rng.uniform(0.001, 0.999, size=200)
        fdr = local_fdr(u, model, scale="p")
        assert np.all(fdr <= 1) and np.all(fdr >= 0.9 / 2.1)

    def test_equals_pi0_where_density_is_one(self):
        model = CDModel(UNIFORM, ((1, 0.4),), pi0=0.8, n=100)
        assert local_fdr([0.5], model, scale="p")[0] == pytest.approx(0.8, abs=1e-15)

    def test_needs_pi0(self):
        with pytest.raises(ValueError):
            local_fdr([0.5], CDModel(), scale="p")


class TestEfron:
    def test_flat_model(self):
        res = efron_density_reject(np.linspace(0.01, 0.99, 50), CDModel(), 0.05, 1.0)
        assert res.n_rejected == 0

    def test_steep_tail(self, rng):
        model = CDModel(BetaParams(0.25, 1.0), pi0=1.0, n=10_000)
        u = np.sort(np.r_[rng.uniform(1e-4, 0.03, size=300), [0.0005, 0.9]])
        assert model.beta_params.pdf(0.001) > 40
        res = efron_density_reject(u, model, 0.05)
        assert set(res.rejected) == set(np.nonzero(u < EFRON_CROSSING)[0].tolist())


def test_result_outputs():
    res = cd_bh([0.001, 0.2, 0.9, 0.04], 0.05)
    buf = io.StringIO()
    res.write_csv(buf, "p")
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index,p,score,rejected" and len(lines) == 5
    assert res.summary()["alpha"] == 0.05
    assert list(res.mask) == [True, False, False, False]
