import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcminimax.density import construct_normalized, laplace_on_knots, normal_on_knots
from lcminimax.envelopes import (
    EnvelopeSpec,
    check_env2_bound,
    env2_extremal,
    envelope_value,
    estimate_envelope_constants,
    mean_zero_corpus,
    random_log_concave_1d,
    standardize_1d,
    standardized_ball,
    standardized_generators_1d,
)
from lcminimax.errors import ParameterError


class TestEnvelopeValue:
    def test_standardized_origin(self):
        assert envelope_value(EnvelopeSpec(1, 1.0, 0.0), 0.0) == 1.0

    def test_tilde_reduces_to_standardized(self):
        a = EnvelopeSpec(2, 1.3, 0.4)
        b = EnvelopeSpec(2, 1.3, 0.4, xi=0.0, eta=1e-15, variant="tilde-class")
        x = np.array([[0.5, -1.0], [2.0, 0.1]])
        np.testing.assert_allclose(envelope_value(b, x), envelope_value(a, x), rtol=1e-12)

    def test_tilde_example(self):
        spec = EnvelopeSpec(2, 1.0, 1.0, xi=1.0, eta=0.5, variant="tilde-class")
        s = math.sqrt(1.5)
        expected = 2 * math.exp(-3 / s + 1 / s + 1)
        assert abs(envelope_value(spec, np.array([3.0, 0.0])) - expected) < 1e-12

    def test_invalid_specs(self):
        with pytest.raises(ParameterError):
            EnvelopeSpec(1, 0.0, 0.0)
        with pytest.raises(ParameterError):
            EnvelopeSpec(1, 1.0, 0.0, xi=-1)
        with pytest.raises(ParameterError):
            EnvelopeSpec(1, 1.0, 0.0, eta=1.0, variant="tilde-class")


class TestExtremal:
    @pytest.mark.parametrize("x0", [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    def test_attains_and_mean_zero(self, x0):
        f = env2_extremal(x0)
        assert abs(float(f.pdf(x0)) - 1 / abs(x0)) < 1e-9
        assert abs(f.mean()) < 1e-9
        assert abs(f.integral() - 1) < 1e-12

    def test_mirrored_support(self):
        f = env2_extremal(-2.0)
        assert f.support[0] == pytest.approx(-2.0)
        assert f.support[1] > 40

    def test_variance_matches_exponential(self):
        var = env2_extremal(0.5).moments()[1][0, 0]
        assert abs(var - 0.25) < 1e-6

    def test_zero_rejected(self):
        with pytest.raises(ParameterError):
            env2_extremal(0.0)

    def test_truncation_recorded(self):
        e = env2_extremal(1.0, full=True)
        assert e.lost_mass == 1e-12
        assert e.truncation == pytest.approx(1 + math.log(1e-12))

    def test_grid_search_competitors(self):
        # three-parameter family: knots (-1, 0, b), slopes u >= v, recentred to mean zero
        best = 0.0
        for b in (0.25, 0.5, 1.0, 2.0, 4.0):
            for u in np.linspace(-6, 6, 13):
                for v in np.linspace(-6, 6, 13):
                    if v > u:
                        continue
                    f = construct_normalized([-1, 0, b], [0, u, u + v * b])
                    f = f.affine(1.0, -f.mean())
                    best = max(best, float(f.pdf(1.0)))
        assert best <= float(env2_extremal(1.0).pdf(1.0)) + 1e-6


class TestCheckBound:
    def test_extremal_tight(self):
        ok, rep = check_env2_bound(env2_extremal(1.5), 1.5)
        assert ok and abs(rep["slack"]) < 1e-6

    def test_normal(self):
        ok, rep = check_env2_bound(normal_on_knots(), 0.1)
        assert ok and rep["value"] == pytest.approx(0.397, abs=1e-3)

    def test_uniform(self):
        ok, rep = check_env2_bound(construct_normalized([-1, 1], [0, 0]), 0.9)
        assert ok and rep["value"] == pytest.approx(0.5)

    def test_recentres(self):
        f = construct_normalized([0, 2], [0, 0])
        ok, rep = check_env2_bound(f, 0.9)
        assert rep["shift"] == pytest.approx(1.0)
        assert ok

    def test_violation_reported(self):
        # a negative tolerance turns attainment into a reported violation
        f = env2_extremal(1.0)
        ok, rep = check_env2_bound(f, 1.0, tol=-1e-3)
        assert not ok and rep["value"] == pytest.approx(1.0)

    def test_corpus(self):
        corpus = mean_zero_corpus(50, np.random.default_rng(2))
        for f in corpus:
            for x0 in np.linspace(*f.support, 17):
                if x0 != 0:
                    assert check_env2_bound(f, float(x0))[0]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-5, 5).filter(lambda t: abs(t) > 1e-3))
    def test_property(self, seed, x0):
        f = random_log_concave_1d(np.random.default_rng(seed))
        assert check_env2_bound(f, x0)[0]


class TestEnvelopeFit:
    def test_laplace_slope(self):
        gens = standardized_generators_1d()
        A, B = estimate_envelope_constants(1, generator=[gens["laplace"]])
        assert A <= math.sqrt(2) + 0.01

    def test_uniform_feasibility(self):
        gens = standardized_generators_1d()
        A, B = estimate_envelope_constants(1, generator=list(gens.values()))
        assert B >= math.log(1 / (2 * math.sqrt(3)))
        for f in gens.values():
            x = np.linspace(*f.support, 1000)
            assert np.all(f.pdf(x) <= np.exp(-A * np.abs(x) + B) * (1 + 1e-9))

    def test_empty_generator(self):
        with pytest.raises(ParameterError):
            estimate_envelope_constants(1, generator=[])

    def test_ball_generator(self):
        A, B = estimate_envelope_constants(2, rng=np.random.default_rng(0))
        ball = standardized_ball(2)
        assert math.exp(B) >= ball.height * (1 - 1e-12)
        assert A > 0

    def test_callable_generator_dominates_members(self):
        members = []

        def gen(rng):
            members.append(standardize_1d(random_log_concave_1d(rng)))
            return members[-1]

        A, B = estimate_envelope_constants(1, trials=40, rng=np.random.default_rng(4),
                                           generator=gen)
        spec = EnvelopeSpec(1, A, B)
        for f in members:
            x = f.knots
            assert np.all(f.pdf(x) <= envelope_value(spec, x) * (1 + 1e-9))

    def test_callable_needs_trials(self):
        with pytest.raises(ParameterError):
            estimate_envelope_constants(1, generator=lambda rng: None)

    def test_positivity_near_origin(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            f = standardize_1d(random_log_concave_1d(rng))
            assert np.all(f.pdf(np.array([-0.24, 0.0, 0.24])) > 0)


def test_laplace_generator_is_standardized():
    f = laplace_on_knots(scale=1 / math.sqrt(2), half_width=40.0)
    mean, cov = f.moments()
    assert abs(mean[0]) < 1e-12 and abs(cov[0, 0] - 1) < 1e-9
