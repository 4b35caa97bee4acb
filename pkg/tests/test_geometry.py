import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcminimax.errors import ParameterError
from lcminimax.geometry import (
    HalfspacePolytope,
    SpherePacking,
    cap_integral,
    cap_volume,
    erode_polytope,
    greedy_sphere_packing,
    packing_bounds,
    sample_uniform_ball,
    unit_ball_volume,
)


class TestSpherePacking:
    def test_eps_out_of_range_rejected(self):
        with pytest.raises(ParameterError):
            greedy_sphere_packing(2, 1.0)
        with pytest.raises(ParameterError):
            greedy_sphere_packing(2, 0.0)
        with pytest.raises(ParameterError):
            greedy_sphere_packing(1, 0.3)

    def test_circle_at_half_has_five_points(self):
        p = greedy_sphere_packing(2, 0.5)
        assert len(p) == 5
        p.check()
        # six equally spaced points sit at distance exactly 1 = 2 eps: not strictly separated
        assert 2 * math.sin(math.pi / 6) <= 1.0 + 1e-15

    def test_sphere_quarter_lower_bound(self):
        p = greedy_sphere_packing(3, 0.25, seed=4)
        oracle = math.ceil(math.sqrt(2 * math.pi) * math.sqrt(2) / (math.sqrt(3) * 4) * 16)
        assert oracle == 9
        assert len(p) >= oracle
        assert packing_bounds(3, 0.25)[0] == oracle

    def test_maximal_against_proposals(self):
        p = greedy_sphere_packing(3, 0.3, seed=1, proposals=20_000)
        probes = np.random.default_rng(1).standard_normal((20_000, 3))
        probes /= np.linalg.norm(probes, axis=1, keepdims=True)
        # fresh probes are not part of the proposal set, but a maximal 2eps set must cover
        # the sphere at radius 4 eps (any uncovered point would extend the packing)
        dist = np.linalg.norm(probes[:, None, :] - p.points[None], axis=2).min(axis=1)
        assert dist.max() <= 4 * 0.3

    def test_seed_determinism_and_json_round_trip(self):
        a = greedy_sphere_packing(3, 0.2, seed=9)
        b = greedy_sphere_packing(3, 0.2, seed=9)
        np.testing.assert_array_equal(a.points, b.points)
        c = SpherePacking.from_json(a.to_json())
        np.testing.assert_array_equal(a.points, c.points)
        assert c.eps == a.eps and c.dim == a.dim

    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("eps", [0.05, 0.1, 0.2, 0.3, 0.5])
    def test_size_within_bounds(self, d, eps):
        p = greedy_sphere_packing(d, eps, seed=2)
        lo, hi = packing_bounds(d, eps)
        assert lo <= len(p) <= hi
        assert np.allclose(np.linalg.norm(p.points, axis=1), 1.0, atol=1e-12)
        assert p.min_distance() > 2 * eps


def _midpoint(f, a, b, panels):
    h = (b - a) / panels
    t = a + h * (np.arange(panels) + 0.5)
    return float(f(t).sum() * h)


class TestCapIntegral:
    def test_small_eps_vanishes(self):
        assert cap_integral(2, 1e-9) < 1e-20

    def test_matches_midpoint_oracle(self):
        eps = 0.3
        upper = eps**2 - eps**4 / 4
        oracle = _midpoint(lambda t: t**0.5 * (1 - t) ** -0.5, 0.0, upper, 10**6)
        assert abs(cap_integral(2, eps) - oracle) < 1e-9

    def test_cap_volume_matches_monte_carlo(self):
        d, eps = 3, 0.2
        rng = np.random.default_rng(0)
        n = 10**7
        hits = 0
        for _ in range(10):
            x = sample_uniform_ball(3, 1.0, rng, size=n // 10)
            hits += int((x[:, 0] > 1 - eps**2 / 2).sum())
        p = hits / n
        vol = unit_ball_volume(3) * p
        se = unit_ball_volume(3) * math.sqrt(p * (1 - p) / n)
        # the cap of height eps^2/2 has volume pi^{(d-1)/2}/Gamma((d+1)/2) * I / 2
        implied = math.pi / math.gamma(2) * cap_integral(d, eps) / 2
        assert abs(implied - vol) < 3 * se
        assert math.isclose(implied, cap_volume(3, 1 - eps**2 / 2), rel_tol=1e-9)

    def test_monotone_in_eps(self):
        for d in (2, 3, 5):
            vals = [cap_integral(d, e) for e in np.linspace(0.01, 0.5, 25)]
            assert np.all(np.diff(vals) > 0)

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            cap_integral(1, 0.2)
        with pytest.raises(ParameterError):
            cap_integral(2, 0.6)


def _unit_square():
    return HalfspacePolytope.from_constraints(
        [((1, 0), 0.5), ((-1, 0), 0.5), ((0, 1), 0.5), ((0, -1), 0.5)]
    )


class TestPolytope:
    def test_zero_erosion_is_identity(self):
        P = _unit_square()
        Q = erode_polytope(P, 0.0)
        np.testing.assert_array_equal(P.offsets, Q.offsets)
        np.testing.assert_array_equal(P.normals, Q.normals)

    def test_square_membership_flip(self):
        P = _unit_square()
        Q = erode_polytope(P, 0.25)
        assert P.contains([0.3, 0.0])
        assert not Q.contains([0.3, 0.0])
        np.testing.assert_allclose(Q.offsets, 0.25)

    def test_triangle_erosion_distance_grid(self):
        s = 1 / math.sqrt(2)
        P = HalfspacePolytope.from_constraints([((-1, 0), 0.0), ((0, -1), 0.0), ((s, s), s)])
        Q = erode_polytope(P, 0.05)
        g = np.linspace(-0.1, 1.1, 200)
        xx, yy = np.meshgrid(g, g)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        inside = pts[Q.contains(pts)]
        assert len(inside) > 0
        # distance to the complement of a convex polytope is the smallest constraint slack
        dist = np.min(
            np.column_stack([inside[:, 0], inside[:, 1], (1 - inside.sum(axis=1)) * s]), axis=1
        )
        assert dist.min() >= 0.05 - 1e-12

    def test_negative_eta_rejected(self):
        with pytest.raises(ParameterError):
            erode_polytope(_unit_square(), -0.1)

    def test_non_unit_normals_rejected(self):
        with pytest.raises(ParameterError):
            HalfspacePolytope.from_constraints([((2, 0), 1.0)])

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_erosion_composes(self, a, b):
        P = _unit_square()
        lhs = erode_polytope(erode_polytope(P, a), b).offsets
        rhs = erode_polytope(P, a + b).offsets
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-15)


class TestBallSampling:
    def test_d1_symmetric(self, rng):
        x = sample_uniform_ball(1, 1.0, rng, size=10**5)
        assert abs(x.mean()) < 0.01
        assert np.all(np.abs(x) <= 1.0)

    def test_d2_area_ratio(self, rng):
        n = 10**5
        x = sample_uniform_ball(2, 1.0, rng, size=n)
        frac = np.mean(np.linalg.norm(x, axis=1) <= 0.5)
        assert abs(frac - 0.25) < 3 * math.sqrt(0.25 * 0.75 / n)

    def test_d3_second_moment(self, rng):
        n = 10**5
        x = sample_uniform_ball(3, 2.0, rng, size=n)
        r2 = (x**2).sum(axis=1)
        assert np.all(r2 <= 4.0 + 1e-12)
        assert abs(r2.mean() - 2.4) < 3 * r2.std() / math.sqrt(n)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 6), st.floats(0.1, 10.0))
    def test_inside_radius(self, d, radius):
        x = sample_uniform_ball(d, radius, np.random.default_rng(d), size=500)
        assert np.all(np.linalg.norm(x, axis=1) <= radius * (1 + 1e-12))

    def test_invalid_parameters(self, rng):
        with pytest.raises(ParameterError):
            sample_uniform_ball(0, 1.0, rng)
        with pytest.raises(ParameterError):
            sample_uniform_ball(2, -1.0, rng)
