"""Density representations used by the estimator and by the lower-bound families.

Three concrete types share a small protocol (``dim``, ``pdf``, ``sample``,
``moments``, ``to_json``):

* :class:`PiecewiseLogLinear1D` -- ``exp`` of a concave piecewise-linear
  function on knots; the 1-D MLE output and the harness truths.
* :class:`SemicirclePerturbation1D` -- a semicircle (raised or lowered by a
  constant) with selected arcs replaced by chords.
* :class:`ConvexBodyUniform` -- uniform on a ball intersected with halfspaces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ParameterError
from .geometry import (
    adaptive_simpson,
    cap_moments,
    cap_volume,
    sample_uniform_ball,
    unit_ball_volume,
)

CONCAVITY_TOL = 1e-12
NORMALIZATION_TOL_1D = 1e-9
MC_VOLUME_SAMPLES = 10_000_000


# ---------------------------------------------------------------------------
# exact integrals of exp(linear) on a segment


def _exp_moment_factors(c):
    """``M_j(c) = int_0^1 t^j e^{-c t} dt`` for ``j = 0, 1, 2`` and ``c >= 0``."""
    c = np.asarray(c, dtype=float)
    small = c < 1e-2
    cs = np.where(small, 1.0, c)
    e = np.exp(-cs)
    m0 = -np.expm1(-cs) / cs
    m1 = (1.0 - e * (1.0 + cs)) / cs**2
    m2 = (2.0 - e * (cs * cs + 2.0 * cs + 2.0)) / cs**3
    if np.any(small):
        # power series: sum_k (-c)^k / (k! (k + j + 1))
        z = np.where(small, c, 0.0)
        s0 = np.zeros_like(z)
        s1 = np.zeros_like(z)
        s2 = np.zeros_like(z)
        term = np.ones_like(z)
        for k in range(12):
            s0 += term / (k + 1)
            s1 += term / (k + 2)
            s2 += term / (k + 3)
            term = term * (-z) / (k + 1)
        m0 = np.where(small, s0, m0)
        m1 = np.where(small, s1, m1)
        m2 = np.where(small, s2, m2)
    return m0, m1, m2


def segment_integrals(x0, x1, p0, p1, center=0.0):
    """Exact ``int (x - center)^j exp(phi)`` (j = 0, 1, 2) over segments.

    ``phi`` is linear from ``p0`` at ``x0`` to ``p1`` at ``x1``.  The integral
    is anchored at the endpoint with the larger ``phi`` so no exponential ever
    overflows and small slopes use a series instead of ``expm1`` ratios.
    """
    x0 = np.asarray(x0, dtype=float) - center
    x1 = np.asarray(x1, dtype=float) - center
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    swap = p1 > p0
    xa = np.where(swap, x1, x0)
    xb = np.where(swap, x0, x1)
    pa = np.where(swap, p1, p0)
    pb = np.where(swap, p0, p1)
    delta = xb - xa
    width = np.abs(delta)
    finite = np.isfinite(pa)
    c = np.where(finite, pa - pb, 0.0)
    c = np.where(np.isfinite(c), c, np.inf)
    m0, m1, m2 = _exp_moment_factors(np.where(np.isfinite(c), c, 1e300))
    scale = np.where(finite, width * np.exp(np.where(finite, pa, 0.0)), 0.0)
    i0 = scale * m0
    i1 = scale * (xa * m0 + delta * m1)
    i2 = scale * (xa * xa * m0 + 2.0 * xa * delta * m1 + delta * delta * m2)
    return i0, i1, i2


def _inverse_segment(p, u):
    """Solve ``(e^{u tau} - 1)/(e^u - 1) = p`` for ``tau`` in [0, 1]."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-10
    us = np.where(small, 1.0, u)
    big = us > 700
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        tau_reg = np.log1p(p * np.expm1(np.minimum(us, 700))) / us
        tau_big = 1.0 + np.log(p + (1.0 - p) * np.exp(-np.abs(us))) / us
    tau = np.where(big, tau_big, tau_reg)
    tau = np.where(small, p, tau)
    return np.clip(tau, 0.0, 1.0)


# ---------------------------------------------------------------------------
# 1-D log-concave densities on knots


@dataclass(frozen=True, eq=False)
class PiecewiseLogLinear1D:
    """Density ``exp(phi)`` with ``phi`` linear between consecutive knots and zero mass outside.

    Construction checks concavity of ``phi`` and that the density integrates
    to one; use :func:`construct_normalized` to normalize raw log-values.
    """

    knots: np.ndarray
    logvals: np.ndarray
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).copy()
        logvals = np.asarray(self.logvals, dtype=float).copy()
        _validate_knots(knots, logvals)
        knots.setflags(write=False)
        logvals.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "logvals", logvals)
        total = self.segment_masses().sum()
        if abs(total - 1.0) > NORMALIZATION_TOL_1D:
            raise ParameterError(f"density integrates to {total!r}, not 1")

    # -- basic evaluation ------------------------------------------------
    @property
    def support(self):
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def breakpoints(self):
        return self.knots

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.knots, self.logvals)
        lo, hi = self.support
        return np.where((x >= lo) & (x <= hi), out, -np.inf)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def __call__(self, x):
        return self.pdf(x)

    def slopes(self):
        return np.diff(self.logvals) / np.diff(self.knots)

    def second_differences(self):
        return np.diff(self.slopes())

    # -- integrals ------------------------------------------------------
    def segment_masses(self):
        i0, _, _ = segment_integrals(
            self.knots[:-1], self.knots[1:], self.logvals[:-1], self.logvals[1:]
        )
        return i0

    def integral(self):
        return float(self.segment_masses().sum())

    def mean(self):
        _, i1, _ = segment_integrals(
            self.knots[:-1], self.knots[1:], self.logvals[:-1], self.logvals[1:]
        )
        return float(i1.sum())

    def moments(self):
        """Mean and variance from exact segment integrals (variance computed about the mean)."""
        mu = self.mean()
        _, i1, i2 = segment_integrals(
            self.knots[:-1], self.knots[1:], self.logvals[:-1], self.logvals[1:], center=mu
        )
        mu += float(i1.sum())
        var = float(i2.sum()) - float(i1.sum()) ** 2
        return np.array([mu]), np.array([[var]])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        masses = self.segment_masses()
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        xc = np.clip(x, self.knots[0], self.knots[-1])
        j = np.clip(np.searchsorted(self.knots, xc, side="right") - 1, 0, len(masses) - 1)
        part, _, _ = segment_integrals(
            self.knots[j], xc, self.logvals[j], np.interp(xc, self.knots, self.logvals)
        )
        return cum[j] + part

    # -- sampling -------------------------------------------------------
    def sample(self, n, rng):
        """Exact inverse-CDF draws: pick a segment by mass, then invert the exponential CDF on it."""
        if n < 1:
            raise ParameterError("n must be positive")
        masses = self.segment_masses()
        cum = np.cumsum(masses)
        cum /= cum[-1]
        u = rng.uniform(size=n)
        j = np.minimum(np.searchsorted(cum, u, side="right"), len(masses) - 1)
        lo = np.concatenate([[0.0], cum[:-1]])[j]
        p = np.clip((u - lo) / (cum[j] - lo), 0.0, 1.0)
        a = self.knots[j]
        width = self.knots[j + 1] - a
        slope_total = self.logvals[j + 1] - self.logvals[j]
        return a + width * _inverse_segment(p, slope_total)

    # -- transforms -----------------------------------------------------
    def affine(self, scale, shift):
        """Density of ``scale * X + shift``."""
        if scale == 0:
            raise ParameterError("scale must be non-zero")
        knots = scale * self.knots + shift
        logvals = self.logvals - math.log(abs(scale))
        if scale < 0:
            knots, logvals = knots[::-1], logvals[::-1]
        return PiecewiseLogLinear1D(knots, logvals)

    def to_json(self):
        return {
            "type": "PiecewiseLogLinear1D",
            "knots": self.knots.tolist(),
            "logvals": self.logvals.tolist(),
        }


def _validate_knots(knots, logvals):
    if knots.ndim != 1 or knots.shape != logvals.shape:
        raise ParameterError("knots and logvals must be 1-D arrays of equal length")
    if knots.size < 2:
        raise ParameterError("need at least two knots")
    if np.any(np.diff(knots) <= 0):
        raise ParameterError("knots must be strictly increasing")
    if not np.all(np.isfinite(logvals)) or not np.all(np.isfinite(knots)):
        raise ParameterError("knots and logvals must be finite")
    if knots.size > 2:
        sd = np.diff(np.diff(logvals) / np.diff(knots))
        worst = float(sd.max())
        if worst > CONCAVITY_TOL * max(1.0, float(np.abs(logvals).max())):
            i = int(sd.argmax()) + 1
            raise ParameterError(
                f"log-values are not concave: slope increases by {worst:.3e} at knot {i}"
            )


def construct_normalized(knots, logvals):
    """Shift ``logvals`` by a constant so the piecewise log-linear density integrates to one."""
    knots = np.asarray(knots, dtype=float)
    logvals = np.asarray(logvals, dtype=float)
    _validate_knots(knots, logvals)
    top = float(logvals.max())
    i0, _, _ = segment_integrals(knots[:-1], knots[1:], logvals[:-1] - top, logvals[1:] - top)
    shift = top + math.log(float(i0.sum()))
    out = logvals - shift
    # one Newton-free refinement pass cancels the rounding in the first shift
    i0, _, _ = segment_integrals(knots[:-1], knots[1:], out[:-1], out[1:])
    out = out - math.log(float(i0.sum()))
    return PiecewiseLogLinear1D(knots, out)


def normal_on_knots(m=512, lo=-8.0, hi=8.0, mean=0.0, sd=1.0):
    """Gaussian log-density interpolated on ``m`` equally spaced knots over ``[lo, hi]``."""
    x = np.linspace(lo, hi, m)
    return construct_normalized(mean + sd * x, -0.5 * x * x)


def laplace_on_knots(scale=1.0, half_width=20.0):
    x = np.array([-half_width, 0.0, half_width]) * scale
    return construct_normalized(x, -np.abs(x) / scale)


def uniform_interval(lo=0.0, hi=1.0):
    return construct_normalized([lo, hi], [0.0, 0.0])


# ---------------------------------------------------------------------------
# semicircle perturbations


@dataclass(frozen=True, eq=False)
class SemicirclePerturbation1D:
    """Semicircle of radius ``r`` shifted by ``baseline``, with half of each arc pair cut by a chord.

    The arcs are indexed by angle from the vertical axis: pair ``k`` covers
    angles ``[(2k-2) step, 2k step]`` on both sides.  For ``alpha[k] = 1`` the
    arc on the left (``x < 0``) is replaced by its chord; for ``alpha[k] = 0``
    the right arc is.  ``raised=True`` is the Assouad variant (positive
    baseline, support ``[-r, r]``); ``raised=False`` is the entropy variant
    (baseline ``-r cos(2K step)``, support ``|x| <= r sin(2K step)``).
    """

    r: float
    K: int
    step: float
    baseline: float
    alpha: tuple
    raised: bool
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        alpha = tuple(int(a) for a in self.alpha)
        if len(alpha) != self.K or any(a not in (0, 1) for a in alpha):
            raise ParameterError("alpha must be a 0/1 vector of length K")
        if 2 * self.K * self.step > math.pi / 2 + 1e-12:
            raise ParameterError("arc pairs exceed the upper quarter circle")
        object.__setattr__(self, "alpha", alpha)

    # geometry of the construction -------------------------------------
    @property
    def half_width(self):
        if self.raised:
            return self.r
        return self.r * math.sin(2 * self.K * self.step)

    @property
    def support(self):
        return -self.half_width, self.half_width

    @property
    def chord_factor(self):
        return math.cos(self.step)

    def region_edges(self):
        """Right-hand regions ``R_{k,0}`` as an array of ``(lo, hi)`` rows."""
        k = np.arange(1, self.K + 1)
        return np.column_stack(
            [self.r * np.sin((2 * k - 2) * self.step), self.r * np.sin(2 * k * self.step)]
        )

    @property
    def breakpoints(self):
        edges = np.unique(self.region_edges().ravel())
        lo, hi = self.support
        pts = np.concatenate([-edges[::-1], edges, [lo, hi]])
        return np.unique(pts[(pts >= lo) & (pts <= hi)])

    def chord(self, k, x):
        """Chord over right-hand region ``k`` (1-based) evaluated at ``x``; mirrored for ``x < 0``."""
        th = (2 * k - 1) * self.step
        return (self.r * self.chord_factor - np.abs(x) * math.sin(th)) / math.cos(th)

    def arc_minus_chord(self, k, x):
        """``arc(x) - chord(k, x)`` without cancellation.

        With ``x = r sin(phi)`` and chord midpoint angle ``th``, the gap is
        ``r (cos(phi - th) - cos(step)) / cos(th)``, rewritten as a product
        of sines so that small gaps keep full relative precision.
        """
        th = (2 * k - 1) * self.step
        delta = np.arcsin(np.clip(np.abs(x) / self.r, -1.0, 1.0)) - th
        return (
            2 * self.r * np.sin((self.step - delta) / 2) * np.sin((self.step + delta) / 2)
            / math.cos(th)
        )

    def arc(self, x):
        return np.sqrt(np.maximum(self.r * self.r - np.asarray(x) ** 2, 0.0))

    def upper(self, x):
        """The unnormalized curve (arc or chord) without baseline, as a function of ``x``."""
        x = np.asarray(x, dtype=float)
        out = self.arc(x)
        edges = self.region_edges()
        ax = np.abs(x)
        # region index for |x| (1-based), 0 if outside all regions
        idx = np.searchsorted(edges[:, 1], ax, side="left") + 1
        inside = (idx <= self.K) & (ax > edges[np.minimum(idx, self.K) - 1, 0])
        if np.any(inside):
            kk = idx[inside]
            bits = np.asarray(self.alpha)[kk - 1]
            xs = x[inside]
            # alpha=1: chord on the left region; alpha=0: chord on the right
            use_chord = ((bits == 1) & (xs < 0)) | ((bits == 0) & (xs > 0))
            th = (2 * kk - 1) * self.step
            ch = (self.r * self.chord_factor - np.abs(xs) * np.sin(th)) / np.cos(th)
            vals = out[inside]
            vals = np.where(use_chord, ch, vals)
            out = out.copy()
            out[inside] = vals
        return out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        val = self.baseline + self.upper(x)
        return np.where(inside, np.maximum(val, 0.0), 0.0)

    def __call__(self, x):
        return self.pdf(x)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    # integrals -----------------------------------------------------------
    def _quad(self, g, tol=1e-12):
        val, _ = adaptive_simpson(g, self.breakpoints, tol=tol)
        return val

    def integral(self, tol=1e-12):
        return self._quad(self.pdf, tol)

    def moments(self, tol=1e-12):
        mu = self._quad(lambda x: x * self.pdf(x), tol)
        var = self._quad(lambda x: (x - mu) ** 2 * self.pdf(x), tol)
        return np.array([mu]), np.array([[var]])

    def max_value(self):
        return self.baseline + self.r

    def sample(self, n, rng):
        """Rejection from the bounding box ``support x [0, max density]``."""
        if n < 1:
            raise ParameterError("n must be positive")
        lo, hi = self.support
        top = self.max_value()
        out = np.empty(0)
        tries = 0
        while out.size < n:
            m = max(2 * (n - out.size), 1024)
            x = rng.uniform(lo, hi, size=m)
            y = rng.uniform(0.0, top, size=m)
            out = np.concatenate([out, x[y <= self.pdf(x)]])
            tries += m
            if tries > 1_000_000 * n:
                raise NumericError("rejection sampler failed to accept")
        return out[:n]

    def complement(self):
        return SemicirclePerturbation1D(
            self.r, self.K, self.step, self.baseline, tuple(1 - a for a in self.alpha), self.raised
        )

    def with_alpha(self, alpha):
        return SemicirclePerturbation1D(
            self.r, self.K, self.step, self.baseline, tuple(alpha), self.raised
        )

    def to_json(self):
        return {
            "type": "SemicirclePerturbation1D",
            "r": self.r,
            "K": self.K,
            "step": self.step,
            "baseline": self.baseline,
            "alpha": list(self.alpha),
            "raised": self.raised,
        }


# ---------------------------------------------------------------------------
# uniform densities on convex bodies


def _caps_disjoint(normals, offsets, radius, chunk=2048):
    """True if the caps ``{b_j^T x > beta_j}`` of the ball are pairwise disjoint.

    Valid when every ``beta_j >= 0``; two such solid caps meet only if their
    spherical caps do, i.e. when the angle between normals is below the sum
    of the cap angular radii.
    """
    if np.any(offsets < 0):
        return False
    m = len(offsets)
    if m < 2:
        return True
    ang = np.arccos(np.clip(offsets / radius, -1.0, 1.0))
    for s in range(0, m, chunk):
        dots = np.clip(normals[s : s + chunk] @ normals.T, -1.0, 1.0)
        between = np.arccos(dots)
        need = ang[s : s + chunk, None] + ang[None, :]
        rows = np.arange(s, min(s + chunk, m))
        between[np.arange(len(rows)), rows] = np.inf
        if np.any(between < need):
            return False
    return True


@dataclass(frozen=True, eq=False)
class ConvexBodyUniform:
    """Uniform density on ``B(0, radius) ∩ {x : b_j^T x <= beta_j for all j}``.

    When the removed caps are pairwise disjoint (always the case for the
    lower-bound families) the volume and moments are computed exactly from
    cap formulas; otherwise Monte Carlo with a recorded seed and standard
    error is used.
    """

    dim: int
    radius: float = 1.0
    normals: np.ndarray = None
    offsets: np.ndarray = None
    mc_seed: int = 0
    caps_disjoint: bool = field(default=None)
    volume: float = field(default=None, init=False)
    volume_se: float = field(default=0.0, init=False)

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise ParameterError("dimension must be positive")
        if self.radius <= 0:
            raise ParameterError("radius must be positive")
        normals = np.zeros((0, d)) if self.normals is None else np.atleast_2d(
            np.asarray(self.normals, dtype=float)
        )
        offsets = np.zeros(0) if self.offsets is None else np.atleast_1d(
            np.asarray(self.offsets, dtype=float)
        )
        if normals.shape != (len(offsets), d) and len(offsets):
            raise ParameterError("normals must be an (m, dim) array matching offsets")
        if len(offsets) and np.any(np.abs(np.linalg.norm(normals, axis=1) - 1) > 1e-12):
            raise ParameterError("halfspace normals must have unit length")
        normals = normals.reshape(len(offsets), d)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        disjoint = self.caps_disjoint
        if disjoint is None:
            disjoint = _caps_disjoint(normals, offsets, self.radius)
        object.__setattr__(self, "caps_disjoint", bool(disjoint))
        if disjoint:
            vol = unit_ball_volume(d) * self.radius**d - sum(
                cap_volume(d, beta, self.radius) for beta in self._cap_offsets()
            )
            se = 0.0
        else:
            vol, se = self.mc_volume(MC_VOLUME_SAMPLES, self.mc_seed)
        if vol <= 0:
            raise NumericError("convex body has zero volume")
        object.__setattr__(self, "volume", float(vol))
        object.__setattr__(self, "volume_se", float(se))

    def _cap_offsets(self):
        # caps sharing an offset have the same volume; compute each distinct value once
        uniq, counts = np.unique(self.offsets, return_counts=True)
        for beta, c in zip(uniq, counts):
            for _ in range(c):
                yield float(beta)

    @property
    def height(self):
        return 1.0 / self.volume

    @property
    def support_radius(self):
        return self.radius

    def contains(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        nrm = np.linalg.norm(x, axis=1)
        ok = nrm <= self.radius
        if len(self.offsets):
            # a point no farther out than the smallest offset satisfies every constraint
            suspect = ok & (nrm > self.offsets.min())
            if np.any(suspect):
                idx = np.flatnonzero(suspect)
                for s in range(0, len(idx), 4096):
                    part = idx[s : s + 4096]
                    vals = x[part] @ self.normals.T
                    ok[part] = np.all(vals <= self.offsets, axis=1)
        return ok

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ParameterError(f"expected points of dimension {self.dim}")
        single = x.ndim == 1
        val = np.where(self.contains(x), self.height, 0.0)
        return float(val[0]) if single else val

    def __call__(self, x):
        return self.pdf(x)

    def mc_volume(self, n, seed):
        """Monte Carlo volume from uniform ball draws; returns ``(volume, standard error)``."""
        rng = np.random.default_rng(seed)
        ball = unit_ball_volume(self.dim) * self.radius**self.dim
        hits = 0
        done = 0
        while done < n:
            m = min(1_000_000, n - done)
            pts = sample_uniform_ball(self.dim, self.radius, rng, size=m)
            hits += int(self.contains(pts).sum())
            done += m
        p = hits / n
        return ball * p, ball * math.sqrt(p * (1 - p) / n)

    def sample(self, n, rng):
        """Rejection from the enclosing ball."""
        if n < 1:
            raise ParameterError("n must be positive")
        out = []
        have = 0
        tries = 0
        while have < n:
            m = max(2 * (n - have), 1024)
            pts = sample_uniform_ball(self.dim, self.radius, rng, size=m)
            acc = pts[self.contains(pts)]
            out.append(acc)
            have += len(acc)
            tries += m
            if tries > 1_000_000 * n:
                raise NumericError("rejection sampler failed: degenerate convex body")
        return np.concatenate(out)[:n]

    def moments(self, n_mc=MC_VOLUME_SAMPLES, seed=None):
        """Mean and covariance; exact via cap slices when caps are disjoint, else Monte Carlo.

        The Monte Carlo path also returns standard errors as a third element.
        """
        d = self.dim
        if self.caps_disjoint:
            ball = unit_ball_volume(d) * self.radius**d
            first = np.zeros(d)
            second = np.eye(d) * ball * self.radius**2 / (d + 2)
            cache = {}
            for b, beta in zip(self.normals, self.offsets):
                key = float(beta)
                if key not in cache:
                    cache[key] = cap_moments(d, key, self.radius)
                _, m1, m2p, m2q = cache[key]
                first -= m1 * b
                second -= m2q * np.eye(d) + (m2p - m2q) * np.outer(b, b)
            mean = first / self.volume
            cov = second / self.volume - np.outer(mean, mean)
            return mean, cov
        rng = np.random.default_rng(self.mc_seed if seed is None else seed)
        pts = self.sample(n_mc, rng)
        mean = pts.mean(axis=0)
        cov = np.cov(pts, rowvar=False, bias=True).reshape(d, d)
        se = np.sqrt(np.diag(cov) / n_mc)
        return mean, cov, se

    def scaled(self, r):
        """Density of ``r X``: radius and offsets scale by ``r``."""
        return ConvexBodyUniform(
            self.dim, self.radius * r, self.normals, self.offsets * r, self.mc_seed,
            caps_disjoint=self.caps_disjoint,
        )

    def to_json(self):
        return {
            "type": "ConvexBodyUniform",
            "dim": self.dim,
            "radius": self.radius,
            "normals": self.normals.tolist(),
            "offsets": self.offsets.tolist(),
            "volume": self.volume,
            "volume_se": self.volume_se,
        }


# ---------------------------------------------------------------------------
# module-level operations


def evaluate(f, x):
    x = np.asarray(x, dtype=float)
    if f.dim == 1:
        if x.ndim > 1 and x.shape[-1] != 1:
            raise ParameterError("expected scalar points for a 1-D density")
        return f.pdf(x.reshape(x.shape[:-1]) if x.ndim > 1 else x)
    if x.shape[-1] != f.dim:
        raise ParameterError(f"expected points of dimension {f.dim}, got {x.shape[-1]}")
    return f.pdf(x)


def sample(f, n, rng):
    return f.sample(n, rng)


def moments(f):
    return f.moments()


def integral(f):
    if f.dim == 1:
        return f.integral()
    return f.height * f.volume


def from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    if kind == "PiecewiseLogLinear1D":
        return PiecewiseLogLinear1D(obj["knots"], obj["logvals"])
    if kind == "SemicirclePerturbation1D":
        return SemicirclePerturbation1D(
            float(obj["r"]), int(obj["K"]), float(obj["step"]), float(obj["baseline"]),
            tuple(obj["alpha"]), bool(obj["raised"]),
        )
    if kind == "ConvexBodyUniform":
        return ConvexBodyUniform(
            int(obj["dim"]), float(obj["radius"]),
            np.asarray(obj["normals"], dtype=float).reshape(-1, int(obj["dim"])),
            np.asarray(obj["offsets"], dtype=float),
        )
    if kind == "TentDensity2D":
        from .mle import TentDensity2D  # the tent type lives with its estimator

        return TentDensity2D(np.asarray(obj["points"], dtype=float),
                             np.asarray(obj["heights"], dtype=float),
                             np.asarray(obj["triangles"], dtype=int))
    raise ParameterError(f"unknown density type {kind!r}")
