"""Squared Hellinger, squared L2 and L1 distances between densities.

1-D pairs are integrated cell by cell over the union of both densities'
breakpoints (exactly when both are piecewise log-linear, by adaptive Simpson
otherwise).  Pairs of uniform convex bodies use mixture importance sampling,
or the exact cap formula when both are balls minus disjoint caps; a 2-D tent
density inside a uniform body is integrated exactly triangle by triangle.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .density import ConvexBodyUniform, PiecewiseLogLinear1D, segment_integrals
from .errors import ParameterError
from .geometry import adaptive_simpson, cap_volume, unit_ball_volume
from .mle import TentDensity2D

METHODS = ("exact-segment", "adaptive-quadrature", "monte-carlo")


@dataclass(frozen=True)
class DistanceResult:
    value: float
    method: str
    abs_error_estimate: float
    seed: int | None = None

    def to_json(self):
        return asdict(self)


def _check_dims(f, g):
    if f.dim != g.dim:
        raise ParameterError(f"dimension mismatch: {f.dim} vs {g.dim}")


def _union_grid(f, g):
    lo = min(f.support[0], g.support[0])
    hi = max(f.support[1], g.support[1])
    pts = np.concatenate([f.breakpoints, g.breakpoints, [lo, hi]])
    return np.unique(pts)


def _integrands(kind):
    if kind == "hellinger":

        def h(fx, gx):
            # (sqrt f - sqrt g)^2 written without the cancellation of the naive form
            s = np.sqrt(fx) + np.sqrt(gx)
            with np.errstate(invalid="ignore", divide="ignore"):
                v = (fx - gx) ** 2 / (s * s)
            return np.where(s > 0, v, 0.0)

        return h
    if kind == "l2":
        return lambda fx, gx: (fx - gx) ** 2
    if kind == "l1":
        return lambda fx, gx: np.abs(fx - gx)
    raise ValueError(kind)


def _quadrature_1d(f, g, kind, tol, edges=None):
    integrand = _integrands(kind)
    grid = _union_grid(f, g) if edges is None else edges
    val, err = adaptive_simpson(lambda x: integrand(f.pdf(x), g.pdf(x)), grid, tol=tol)
    return DistanceResult(max(val, 0.0), "adaptive-quadrature", err)


def _exact_segments(f, g, kind):
    """Closed-form cell integrals for two piecewise log-linear densities."""
    grid = _union_grid(f, g)
    a, b = grid[:-1], grid[1:]
    mid = 0.5 * (a + b)

    def logs(h, x, side_mid):
        # interpolate on the cell, -inf where the cell lies outside the support
        lo, hi = h.support
        inside = (side_mid >= lo) & (side_mid <= hi)
        return np.where(inside, np.interp(x, h.knots, h.logvals), -np.inf)

    fa, fb = logs(f, a, mid), logs(f, b, mid)
    ga, gb = logs(g, a, mid), logs(g, b, mid)
    fin_f = np.isfinite(fa)
    fin_g = np.isfinite(ga)

    def seg(pa, pb, mask):
        out = np.zeros_like(a)
        if np.any(mask):
            out[mask] = segment_integrals(a[mask], b[mask], pa[mask], pb[mask])[0]
        return out

    if kind == "hellinger":
        If = seg(fa, fb, fin_f)
        Ig = seg(ga, gb, fin_g)
        both = fin_f & fin_g
        cross = seg(0.5 * (fa + ga), 0.5 * (fb + gb), both)
        cells = If + Ig - 2.0 * cross
    elif kind == "l2":
        If = seg(2 * fa, 2 * fb, fin_f)
        Ig = seg(2 * ga, 2 * gb, fin_g)
        both = fin_f & fin_g
        cross = seg(fa + ga, fb + gb, both)
        cells = If + Ig - 2.0 * cross
    else:
        raise ValueError(kind)
    val = float(np.sum(cells))
    scale = float(np.sum(np.abs(If) + np.abs(Ig)))
    return DistanceResult(max(val, 0.0), "exact-segment", 64 * np.finfo(float).eps * scale)


def _ball_caps(f):
    return f.caps_disjoint and isinstance(f, ConvexBodyUniform)


def _exact_convex(f, g, kind):
    """Both uniform on the same ball minus disjoint caps: intersections are caps again."""
    if not (_ball_caps(f) and _ball_caps(g)) or not math.isclose(f.radius, g.radius):
        return None
    caps = {}
    for body, tag in ((f, 1), (g, 2)):
        for b, beta in zip(body.normals, body.offsets):
            key = tuple(np.round(np.append(b, beta), 12))
            caps[key] = caps.get(key, 0) | tag
    keys = list(caps)
    normals = np.array([k[:-1] for k in keys])
    offsets = np.array([k[-1] for k in keys])
    union = ConvexBodyUniform(f.dim, f.radius, normals, offsets)
    if not union.caps_disjoint:
        return None
    ball = unit_ball_volume(f.dim) * f.radius**f.dim
    removed = sum(cap_volume(f.dim, beta, f.radius) for beta in offsets)
    both = ball - removed
    hf, hg = f.height, g.height
    only_f = f.volume - both
    only_g = g.volume - both
    if kind == "hellinger":
        val = both * (math.sqrt(hf) - math.sqrt(hg)) ** 2 + only_f * hf + only_g * hg
    elif kind == "l2":
        val = both * (hf - hg) ** 2 + only_f * hf**2 + only_g * hg**2
    else:
        val = both * abs(hf - hg) + only_f * hf + only_g * hg
    return DistanceResult(max(val, 0.0), "exact-segment", 1e-12)


def _exact_tent_uniform(f, g, kind):
    """Tent density against a uniform body that contains the tent's support: closed form per triangle."""
    if isinstance(g, TentDensity2D) and not isinstance(f, TentDensity2D):
        f, g = g, f
    if not (isinstance(f, TentDensity2D) and isinstance(g, ConvexBodyUniform)):
        return None
    if kind == "l1" or not np.all(g.contains(f.support_vertices)):
        return None
    h = g.height
    if kind == "hellinger":
        val = 2.0 - 2.0 * math.sqrt(h) * f.sqrt_integral()
    else:
        val = f.square_integral() - 2.0 * h + h * h * g.volume
    err = 1e-12 if g.caps_disjoint else 4.0 * g.volume_se * h
    return DistanceResult(max(val, 0.0), "exact-segment", err)


def _monte_carlo(f, g, kind, n, seed):
    """Importance sampling from the mixture ``m = (f + g)/2`` with the exact mixture density."""
    if seed is None:
        raise ParameterError("Monte Carlo distances require an explicit seed")
    rng = np.random.default_rng(seed)
    nf = rng.binomial(n, 0.5)
    pts = np.concatenate([f.sample(nf, rng) if nf else np.empty((0, f.dim)),
                          g.sample(n - nf, rng) if n - nf else np.empty((0, f.dim))])
    fx = np.asarray(f.pdf(pts), dtype=float)
    gx = np.asarray(g.pdf(pts), dtype=float)
    w = _integrands(kind)(fx, gx) / (0.5 * (fx + gx))
    return DistanceResult(float(w.mean()), "monte-carlo", float(w.std(ddof=1) / math.sqrt(n)), seed)


def _distance(f, g, kind, method=None, tol=1e-10, n=1_000_000, seed=None):
    _check_dims(f, g)
    if f.dim == 1:
        if method in (None, "exact-segment") and kind != "l1" and isinstance(
            f, PiecewiseLogLinear1D
        ) and isinstance(g, PiecewiseLogLinear1D):
            return _exact_segments(f, g, kind)
        if method == "exact-segment":
            raise ParameterError("exact-segment needs two piecewise log-linear densities")
        return _quadrature_1d(f, g, kind, tol)
    if method in (None, "exact-segment"):
        res = _exact_tent_uniform(f, g, kind) or _exact_convex(f, g, kind)
        if res is not None:
            return res
        if method == "exact-segment":
            raise ParameterError("exact-segment needs balls minus disjoint caps or a tent in a body")
    if method == "adaptive-quadrature":
        raise ParameterError("quadrature is only available in one dimension")
    return _monte_carlo(f, g, kind, n, seed)


def hellinger_sq(f, g, method=None, tol=1e-10, n=1_000_000, seed=None):
    """Squared Hellinger distance ``int (sqrt f - sqrt g)^2``."""
    return _distance(f, g, "hellinger", method, tol, n, seed)


def l2_sq(f, g, method=None, tol=1e-10, n=1_000_000, seed=None):
    return _distance(f, g, "l2", method, tol, n, seed)


def l1(f, g, method=None, tol=1e-10, n=1_000_000, seed=None):
    return _distance(f, g, "l1", method, tol, n, seed)
