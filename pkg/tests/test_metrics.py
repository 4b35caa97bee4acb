import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcminimax.density import ConvexBodyUniform, construct_normalized, uniform_interval
from lcminimax.envelopes import random_log_concave_1d
from lcminimax.errors import ParameterError
from lcminimax.families import C0, build_assouad_1d, build_assouad_ballcap
from lcminimax.geometry import cap_integral
from lcminimax.metrics import hellinger_sq, l1, l2_sq
from lcminimax.mle import mle_2d_tent


def _flip_pair(fam, k=0):
    alpha = (0,) * fam.K
    beta = tuple(1 if i == k else 0 for i in range(fam.K))
    return fam.member(alpha), fam.member(beta)


class TestHellinger:
    def test_identity(self):
        f = construct_normalized([0, 1, 2], [0, 1, 0])
        assert hellinger_sq(f, f).value < 1e-12

    def test_nested_uniforms_closed_form(self):
        res = hellinger_sq(uniform_interval(0, 1), uniform_interval(0, 2))
        assert abs(res.value - (2 - math.sqrt(2))) < 1e-9
        assert res.method == "exact-segment"

    def test_quadrature_agrees_with_exact_segments(self):
        f = construct_normalized([-1, 0, 1.5], [0, 0.7, -0.4])
        g = construct_normalized([-0.5, 0.3, 2], [-1, 0.2, 0])
        exact = hellinger_sq(f, g)
        quad = hellinger_sq(f, g, method="adaptive-quadrature", tol=1e-13)
        assert quad.method == "adaptive-quadrature"
        assert abs(exact.value - quad.value) < 1e-10

    def test_ballcap_one_flip_closed_form(self):
        fam = build_assouad_ballcap(2, eps=0.3)
        f, g = _flip_pair(fam)
        # h^2 = (1/c) * pi^{1/2}/Gamma(3/2) * cap_integral(2, eps)
        closed = math.sqrt(math.pi) / math.gamma(1.5) * cap_integral(2, 0.3) / fam.params["c_KE"]
        exact = hellinger_sq(f, g)
        assert exact.method == "exact-segment"
        assert abs(exact.value - closed) < 1e-12
        mc = hellinger_sq(f, g, method="monte-carlo", n=10**6, seed=1)
        assert abs(mc.value - closed) < 3 * mc.abs_error_estimate

    def test_monte_carlo_requires_seed(self):
        f = ConvexBodyUniform(2)
        with pytest.raises(ParameterError):
            hellinger_sq(f, f, method="monte-carlo")

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            hellinger_sq(uniform_interval(), ConvexBodyUniform(2))

    def test_tent_exact_matches_monte_carlo(self):
        truth = ConvexBodyUniform(2)
        x = truth.sample(200, np.random.default_rng(1))
        fhat = mle_2d_tent(x).density
        exact = hellinger_sq(fhat, truth)
        mc = hellinger_sq(fhat, truth, method="monte-carlo", n=400_000, seed=2)
        assert exact.method == "exact-segment"
        assert abs(exact.value - mc.value) < 3 * mc.abs_error_estimate

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_symmetry_and_triangle(self, seed):
        rng = np.random.default_rng(seed)
        f, g, h = (random_log_concave_1d(rng) for _ in range(3))
        fg = hellinger_sq(f, g).value
        assert abs(fg - hellinger_sq(g, f).value) < 1e-12
        assert 0 <= fg <= 2 + 1e-12
        d = lambda a, b: math.sqrt(hellinger_sq(a, b).value)
        assert d(f, h) <= d(f, g) + d(g, h) + 1e-8

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-5, 5))
    def test_affine_invariance(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        f, g = random_log_concave_1d(rng), random_log_concave_1d(rng)
        a = hellinger_sq(f, g).value
        b = hellinger_sq(f.affine(scale, shift), g.affine(scale, shift)).value
        assert abs(a - b) < 1e-8


class TestL2AndL1:
    def test_l2_identity(self):
        f = uniform_interval(0, 1)
        assert l2_sq(f, f).value == 0.0

    def test_l1_disjoint(self):
        assert abs(l1(uniform_interval(0, 1), uniform_interval(1, 2)).value - 2) < 1e-12

    def test_l2_one_flip_sandwich(self):
        fam = build_assouad_1d(eps=0.1)
        r, eps = fam.r, fam.eps
        v = l2_sq(*_flip_pair(fam), tol=1e-15).value
        assert 2 * (31 / 420) * r**3 * eps**5 * 2 <= v <= 2 * r**3 * eps**5

    def test_hellinger_below_l2_over_density_floor(self, rng):
        fam = build_assouad_1d(eps=0.12)
        for _ in range(10):
            a = fam.random_alpha(rng)
            b = fam.random_alpha(rng)
            f, g = fam.member(a), fam.member(b)
            h2 = hellinger_sq(f, g, tol=1e-15).value
            assert h2 <= l2_sq(f, g, tol=1e-15).value / (4 * C0) + 1e-15

    def test_ballcap_l1_exact(self):
        fam = build_assouad_ballcap(2, eps=0.3)
        f, g = _flip_pair(fam)
        mc = l1(f, g, method="monte-carlo", n=10**6, seed=4)
        assert abs(l1(f, g).value - mc.value) < 3 * mc.abs_error_estimate
