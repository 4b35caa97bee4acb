"""Convex-geometry primitives: sphere packings, halfspace polytopes, caps, ball sampling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError

PROPOSALS_PER_DIM = 100_000


def adaptive_simpson(f, edges, tol=1e-12, max_depth=60, max_active=1 << 20):
    """Integrate ``f`` over consecutive cells ``[edges[i], edges[i+1]]``.

    All cells are refined together, one bisection level per pass, so ``f`` is
    called on whole arrays.  Each cell receives a share of ``tol``
    proportional to its width, and each subdivision halves the share (the
    classical Lyness criterion ``|S2 - S1| <= 15 tol``).

    Returns ``(total, error_estimate)``.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2:
        return 0.0, 0.0
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0.0, 0.0
    width = b - a
    tols = tol * width / width.sum()
    m = 0.5 * (a + b)
    fa, fm, fb = (np.asarray(f(v), dtype=float) for v in (a, m, b))
    whole = width / 6.0 * (fa + 4.0 * fm + fb)

    total = 0.0
    err = 0.0
    depth = 0
    while a.size:
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = np.asarray(f(lm), dtype=float)
        frm = np.asarray(f(rm), dtype=float)
        h = (b - a) / 12.0
        left = h * (fa + 4.0 * flm + fm)
        right = h * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        done = np.abs(delta) <= 15.0 * tols
        if depth >= max_depth or 2 * np.count_nonzero(~done) > max_active:
            # rounding noise can stall the criterion; accept rather than blow up
            done[:] = True
        total += float(np.sum(left[done] + right[done] + delta[done] / 15.0))
        err += float(np.sum(np.abs(delta[done]) / 15.0))
        go = ~done
        if not go.any():
            break
        # children: left halves then right halves
        a = np.concatenate([a[go], m[go]])
        b_new = np.concatenate([m[go], b[go]])
        fa = np.concatenate([fa[go], fm[go]])
        fb_new = np.concatenate([fm[go], fb[go]])
        fm = np.concatenate([flm[go], frm[go]])
        whole = np.concatenate([left[go], right[go]])
        tols = np.concatenate([tols[go], tols[go]]) / 2.0
        b, fb = b_new, fb_new
        m = 0.5 * (a + b)
        depth += 1
    return total, err


def unit_ball_volume(d):
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(1 + d / 2))


def _check_d_eps(d, eps):
    if int(d) != d or d < 2:
        raise ParameterError(f"dimension must be an integer >= 2, got {d}")
    if not (0 < eps <= 0.5):
        raise ParameterError(f"eps must lie in (0, 1/2], got {eps}")


def _beta_integrand(d):
    p = (d + 1) / 2 - 1

    def g(t):
        return np.power(t, p) / np.sqrt(1.0 - t)

    return g


def cap_integral(d, eps, tol=1e-12):
    """Incomplete beta integral ``int_0^{eps^2 - eps^4/4} t^{(d+1)/2-1}(1-t)^{-1/2} dt``.

    The upper limit is ``1 - (1 - eps^2/2)^2``: the cap cut from the unit ball
    by the hyperplane at distance ``1 - eps^2/2`` from the centre.
    """
    _check_d_eps(d, eps)
    upper = eps**2 - eps**4 / 4
    value, _ = adaptive_simpson(_beta_integrand(d), [0.0, upper], tol=tol)
    return value


def cap_volume(d, offset, radius=1.0, tol=1e-12):
    """Lebesgue volume of ``{x in B(0, radius): b^T x > offset}`` for a unit ``b``.

    Uses the slice representation, so it is valid for any ``d >= 1`` and any
    ``-radius <= offset <= radius``.
    """
    if offset >= radius:
        return 0.0
    if offset <= -radius:
        return unit_ball_volume(d) * radius**d
    if d == 1:
        return radius - offset
    s = offset / radius
    if s >= 0:
        upper = 1.0 - s * s
        coef = 0.5 * math.pi ** ((d - 1) / 2) / math.exp(gammaln((d + 1) / 2))
        val, _ = adaptive_simpson(_beta_integrand(d), [0.0, upper], tol=tol)
        return coef * val * radius**d
    return unit_ball_volume(d) * radius**d - cap_volume(d, -offset, radius, tol)


def cap_moments(d, offset, radius=1.0, tol=1e-14):
    """Volume and moments of the cap ``{x in B(0, r): b^T x > offset}``.

    Returns ``(vol, m1, m2_par, m2_perp)`` with ``m1 = int b^T x``,
    ``m2_par = int (b^T x)^2`` and ``m2_perp = int (u^T x)^2`` for any unit
    ``u`` orthogonal to ``b``.  Computed by integrating over slices
    ``b^T x = s``, each a (d-1)-ball of radius ``sqrt(r^2 - s^2)``.
    """
    if offset >= radius:
        return 0.0, 0.0, 0.0, 0.0
    vd1 = unit_ball_volume(d - 1) if d > 1 else 1.0

    def area(s):
        return vd1 * np.power(np.maximum(radius * radius - s * s, 0.0), (d - 1) / 2)

    edges = [offset, radius]
    vol, _ = adaptive_simpson(area, edges, tol=tol)
    m1, _ = adaptive_simpson(lambda s: s * area(s), edges, tol=tol)
    m2p, _ = adaptive_simpson(lambda s: s * s * area(s), edges, tol=tol)
    if d > 1:
        m2q, _ = adaptive_simpson(
            lambda s: area(s) * (radius * radius - s * s) / (d + 1), edges, tol=tol
        )
    else:
        m2q = 0.0
    return vol, m1, m2p, m2q


def packing_bounds(d, eps):
    """Integer sandwich for the ``2 eps``-packing number of the unit sphere."""
    lower = (
        math.sqrt(2 * math.pi) * math.sqrt(d - 1) / math.sqrt(3) / 2 ** (d - 1)
        * eps ** (-(d - 1))
    )
    upper = 4 ** (d - 1) * math.pi * math.sqrt(d - 1) / 15 ** ((d - 1) / 2) * eps ** (-(d - 1))
    return math.ceil(lower), math.floor(upper)


@dataclass(frozen=True)
class SpherePacking:
    dim: int
    eps: float
    points: np.ndarray
    maximal: bool
    proposals: int = 0
    seed: int | None = None

    def __len__(self):
        return len(self.points)

    def min_distance(self):
        pts = self.points
        if len(pts) < 2:
            return math.inf
        best = math.inf
        for i in range(len(pts) - 1):
            dist = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1).min()
            best = min(best, float(dist))
        return best

    def check(self):
        norms = np.linalg.norm(self.points, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise AssertionError("packing point off the unit sphere")
        if self.min_distance() <= 2 * self.eps:
            raise AssertionError("packing is not 2*eps separated")
        return True

    def to_json(self):
        return {
            "dim": self.dim,
            "eps": self.eps,
            "points": self.points.tolist(),
            "maximal": self.maximal,
            "proposals": self.proposals,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            dim=int(obj["dim"]),
            eps=float(obj["eps"]),
            points=np.asarray(obj["points"], dtype=float),
            maximal=bool(obj["maximal"]),
            proposals=int(obj.get("proposals", 0)),
            seed=obj.get("seed"),
        )


def random_unit_vectors(d, m, rng):
    x = rng.standard_normal((m, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _circle_packing(eps, rng):
    # largest m with 2 sin(pi/m) > 2 eps; equally spaced points attain the packing number
    m = 2
    while 2 * math.sin(math.pi / (m + 1)) > 2 * eps * (1 + 1e-12):
        m += 1
    phase = rng.uniform(0, 2 * math.pi)
    ang = phase + 2 * math.pi * np.arange(m) / m
    return np.column_stack([np.cos(ang), np.sin(ang)])


def greedy_sphere_packing(d, eps, seed=0, proposals=None):
    """Maximal ``2 eps``-separated set on the unit sphere ``S^{d-1}``.

    For ``d >= 3`` this is farthest-point insertion over ``proposals`` seeded
    uniform directions (default ``10^5 d``): repeatedly add the proposal that
    is farthest from the current set until none is more than ``2 eps`` away.
    On the circle the equally spaced configuration is used, which is optimal.
    """
    _check_d_eps(d, eps)
    rng = np.random.default_rng(seed)
    if d == 2:
        pts = _circle_packing(eps, rng)
        return SpherePacking(d, eps, pts, True, proposals=0, seed=seed)

    m = PROPOSALS_PER_DIM * d if proposals is None else int(proposals)
    cand = random_unit_vectors(d, m, rng)
    chosen = [0]
    # unit vectors: |x - y|^2 = 2 - 2 x.y, so track the largest inner product
    maxdot = cand @ cand[0]
    while True:
        j = int(np.argmin(maxdot))
        if np.linalg.norm(cand[j] - cand[chosen], axis=1).min() <= 2 * eps:
            break
        chosen.append(j)
        np.maximum(maxdot, cand @ cand[j], out=maxdot)
    return SpherePacking(d, eps, cand[chosen].copy(), True, proposals=m, seed=seed)


@dataclass(frozen=True)
class HalfspacePolytope:
    """Intersection of halfspaces ``b_j^T x <= beta_j`` with unit normals ``b_j``."""

    normals: np.ndarray
    offsets: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if normals.shape[0] == 0:
            raise ParameterError("polytope needs at least one constraint")
        if normals.shape[0] != offsets.shape[0]:
            raise ParameterError("normals and offsets differ in length")
        if np.any(np.abs(np.linalg.norm(normals, axis=1) - 1.0) > 1e-12):
            raise ParameterError("constraint normals must have unit length")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "dim", normals.shape[1])

    @classmethod
    def from_constraints(cls, constraints):
        normals, offsets = zip(*constraints)
        return cls(np.asarray(normals, dtype=float), np.asarray(offsets, dtype=float))

    @property
    def constraints(self):
        return list(zip(map(tuple, self.normals), self.offsets))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        vals = x @ self.normals.T
        return np.all(vals <= self.offsets, axis=-1)

    def slack(self, x):
        """Smallest ``beta_j - b_j^T x``: the distance to the boundary for interior points."""
        return np.min(self.offsets - np.asarray(x, dtype=float) @ self.normals.T, axis=-1)


def erode_polytope(poly, eta):
    """Points of ``poly`` whose closed ``eta``-ball stays inside: shift every offset by ``-eta``."""
    if eta < 0:
        raise ParameterError(f"eta must be non-negative, got {eta}")
    return HalfspacePolytope(poly.normals.copy(), poly.offsets - eta)


def sample_uniform_ball(d, radius, rng, size=None):
    """Uniform draw(s) from the closed ball ``B(0, radius)`` in ``R^d``."""
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d}")
    if radius <= 0:
        raise ParameterError(f"radius must be positive, got {radius}")
    m = 1 if size is None else int(size)
    dirs = random_unit_vectors(d, m, rng)
    rad = radius * rng.uniform(size=m) ** (1.0 / d)
    out = dirs * rad[:, None]
    return out[0] if size is None else out
