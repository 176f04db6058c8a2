import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from rmd.diffusion import (
    GaussianPrior,
    GaussianScoreModel,
    LinearScoreModel,
    NoiseSchedule,
    SDEditRefiner,
    SdeditConfig,
    gaussian_prior_score,
    load_score_model,
    noise_guide,
    reverse_step,
    sdedit,
    sigma,
)
from rmd.errors import InvalidArgumentError, ScoreModelError

SCHED = NoiseSchedule()
PRIOR = GaussianScoreModel(GaussianPrior(0.0, 1.0))


class TestSigma:
    def test_endpoints(self):
        assert sigma(0.0) == pytest.approx(0.01, rel=1e-15)
        assert sigma(1.0) == pytest.approx(10.0, rel=1e-15)

    def test_midpoint(self):
        assert sigma(0.5) == pytest.approx(math.sqrt(0.01 * 10), rel=1e-14)
        assert round(sigma(0.5), 7) == 0.3162278

    def test_monotone(self):
        assert sigma(0.3) < sigma(0.7)

    def test_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            sigma(1.01)
        with pytest.raises(InvalidArgumentError):
            sigma(-0.1)

    def test_schedule_validation(self):
        with pytest.raises(InvalidArgumentError):
            NoiseSchedule(1.0, 0.5)


class TestNoiseGuide:
    def test_t0_zero_is_identity(self):
        x = np.random.default_rng(0).standard_normal((4, 3))
        assert np.array_equal(noise_guide(x, 0.0), x)

    def test_seeded(self):
        x = np.zeros((5, 2))
        assert np.array_equal(noise_guide(x, 0.5, seed=3), noise_guide(x, 0.5, seed=3))

    def test_variance(self):
        x = np.ones((1, 4))
        t0 = 0.4
        d = np.array([noise_guide(x, t0, seed=s)[0] - x[0] for s in range(10_000)])
        np.testing.assert_allclose(d.var(axis=0) / sigma(t0) ** 2, 1.0, atol=0.05)


class TestReverseStep:
    def test_zero_score_deterministic(self):
        x = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(reverse_step(x, 0.5, 0.1, np.zeros_like(x)), x)

    def test_eps_oracle(self):
        # sigma(0.98) = 0.01 * 1000**0.98 = 10**0.94
        s98 = 10 ** 0.94
        assert sigma(0.98) == pytest.approx(s98, rel=1e-13)
        assert round(s98, 5) == 8.70964
        eps = math.sqrt(100 - s98 ** 2)
        assert eps == pytest.approx(4.91347, abs=1e-5)
        x = np.zeros((1, 1))
        out = reverse_step(x, 1.0, 0.02, np.ones((1, 1)), "deterministic")
        assert out[0, 0] == pytest.approx(0.5 * eps ** 2, rel=1e-12)

    def test_stochastic_pinned_zero_noise(self):
        x = np.array([[1.0, -2.0]])
        s = np.array([[0.3, 0.1]])
        eps2 = sigma(0.6) ** 2 - sigma(0.5) ** 2
        out = reverse_step(x, 0.6, 0.1, s, "stochastic_sde", noise=np.zeros_like(x))
        np.testing.assert_allclose(out, x + eps2 * s, rtol=1e-14)

    def test_stochastic_noise_scale(self):
        x = np.zeros((1, 1))
        out = reverse_step(x, 0.6, 0.1, np.zeros((1, 1)), "stochastic_sde", noise=np.ones((1, 1)))
        assert out[0, 0] == pytest.approx(math.sqrt(sigma(0.6) ** 2 - sigma(0.5) ** 2))

    def test_bad_dt(self):
        with pytest.raises(InvalidArgumentError):
            reverse_step(np.zeros(1), 0.5, 0.0, np.zeros(1))
        with pytest.raises(InvalidArgumentError):
            reverse_step(np.zeros(1), 0.5, 0.6, np.zeros(1))


class TestPriorScore:
    def test_zero_at_mean(self):
        p = GaussianPrior(np.array([1.0, -2.0]), np.array([0.5, 2.0]))
        assert np.all(gaussian_prior_score(p, np.array([[1.0, -2.0]]), 0.3) == 0)

    def test_worked_value(self):
        t = 2 / 3  # sigma = 0.01 * 1000**(2/3) = 1
        assert sigma(t) == pytest.approx(1.0, rel=1e-12)
        assert gaussian_prior_score(GaussianPrior(0, 1), np.array([2.0]), t)[0] == pytest.approx(-1.0, rel=1e-12)

    @given(st.floats(-3, 3), st.floats(0.1, 4), st.floats(-5, 5), st.floats(0, 1))
    def test_finite_difference(self, mu, var, x, t):
        p = GaussianPrior(mu, var)
        total = var + sigma(t) ** 2

        def logp(v):
            return -0.5 * (v - mu) ** 2 / total - 0.5 * math.log(2 * math.pi * total)

        h = 1e-4
        fd = (logp(x + h) - logp(x - h)) / (2 * h)
        assert gaussian_prior_score(p, np.array([x]), t)[0] == pytest.approx(fd, abs=1e-5)

    def test_variance_positive(self):
        with pytest.raises(InvalidArgumentError):
            GaussianPrior(0.0, 0.0)


class TestSdedit:
    def test_t0_zero_identity(self):
        x = np.random.default_rng(1).standard_normal((7, 5))
        out = sdedit(x, SdeditConfig(t0=0.0), SCHED, PRIOR)
        assert np.array_equal(out, x)

    def test_bit_identical(self):
        x = np.random.default_rng(1).standard_normal((7, 5))
        for mode in ("deterministic", "stochastic_sde"):
            cfg = SdeditConfig(0.7, 20, mode, seed=9)
            assert np.array_equal(sdedit(x, cfg, SCHED, PRIOR), sdedit(x, cfg, SCHED, PRIOR))

    def test_guide_influence_ordering(self):
        guide = np.full((1, 6), 3.0)

        def mean_dist(t0):
            return np.mean([np.linalg.norm(sdedit(guide, SdeditConfig(t0, 50, seed=s), SCHED, PRIOR) - guide)
                            for s in range(200)])

        assert mean_dist(0.5) < mean_dist(1.0)

    def test_shape_checked(self):
        class Bad:
            def score(self, x, t, condition=""):
                return np.zeros(3)

        with pytest.raises(ScoreModelError, match="step 5"):
            sdedit(np.zeros((2, 2)), SdeditConfig(0.5, 5), SCHED, Bad())

    def test_model_failure_carries_step(self):
        class Boom:
            def score(self, x, t, condition=""):
                raise RuntimeError("oops")

        with pytest.raises(ScoreModelError, match="oops") as info:
            sdedit(np.zeros((2, 2)), SdeditConfig(0.5, 5), SCHED, Boom())
        assert info.value.step == 5

    def test_condition_passed(self):
        seen = []

        class Spy:
            def score(self, x, t, condition=""):
                seen.append((t, condition))
                return np.zeros_like(x)

        sdedit(np.zeros((1, 1)), SdeditConfig(0.5, 4), SCHED, Spy(), "walk")
        assert [round(t, 12) for t, _ in seen] == [0.5, 0.375, 0.25, 0.125]
        assert {c for _, c in seen} == {"walk"}

    def test_config_validation(self):
        with pytest.raises(InvalidArgumentError):
            SdeditConfig(t0=1.5)
        with pytest.raises(InvalidArgumentError):
            SdeditConfig(steps=0)
        with pytest.raises(InvalidArgumentError):
            SdeditConfig(mode="ddpm")


class TestModels:
    def test_load_gaussian(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"kind": "gaussian", "mean": [0, 1], "var": [1, 4]}))
        m = load_score_model(p)
        np.testing.assert_allclose(m.score(np.array([[0.0, 1.0]]), 0.5), 0.0)

    def test_load_linear(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"kind": "linear", "weight": -2.0, "bias": 1.0}))
        m = load_score_model(p)
        assert isinstance(m, LinearScoreModel)
        assert m.score(np.array([1.0]), 0.1)[0] == -1.0

    def test_unknown_kind(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"kind": "unet"}))
        with pytest.raises(InvalidArgumentError):
            load_score_model(p)


class TestRefiner:
    def test_params_and_clone(self):
        r = SDEditRefiner(PRIOR, t0=0.3, steps=10)
        assert r.get_params()["t0"] == 0.3
        assert clone(r).get_params()["steps"] == 10

    def test_transform_matches_sdedit(self):
        x = np.random.default_rng(2).standard_normal((6, 4))
        r = SDEditRefiner(PRIOR, t0=0.4, steps=10, seed=5).fit(x)
        assert np.array_equal(r.transform(x), sdedit(x, SdeditConfig(0.4, 10, seed=5), SCHED, PRIOR))

    def test_zero_t0(self):
        x = np.ones((3, 2))
        assert np.array_equal(SDEditRefiner(PRIOR, t0=0.0).fit_transform(x), x)

    def test_width_checked(self):
        r = SDEditRefiner(PRIOR).fit(np.zeros((3, 2)))
        with pytest.raises(InvalidArgumentError):
            r.transform(np.zeros((3, 3)))
