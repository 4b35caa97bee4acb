"""Envelope functions for standardized log-concave classes and the mean-zero pointwise bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .density import (
    ConvexBodyUniform,
    PiecewiseLogLinear1D,
    construct_normalized,
    laplace_on_knots,
    normal_on_knots,
)
from .errors import ParameterError

TAIL_MASS = 1e-12
BOUND_TOL = 1e-6


@dataclass(frozen=True)
class EnvelopeSpec:
    d: int
    A: float
    B: float
    xi: float = 0.0
    eta: float | None = None
    variant: str = "standardized"

    def __post_init__(self):
        if self.A <= 0:
            raise ParameterError("decay rate A must be positive")
        if self.xi < 0:
            raise ParameterError("mean bound xi must be non-negative")
        if self.variant not in ("standardized", "tilde-class"):
            raise ParameterError(f"unknown envelope variant {self.variant!r}")
        if self.variant == "tilde-class" and not (self.eta is not None and 0 < self.eta < 1):
            raise ParameterError("tilde-class envelopes need eta in (0, 1)")


def envelope_value(spec, x):
    """Envelope at ``x``; ``x`` may be a point or an array of points (last axis = coordinates)."""
    x = np.asarray(x, dtype=float)
    norm = np.abs(x) if spec.d == 1 and (x.ndim == 0 or x.shape[-1] != 1) else np.linalg.norm(
        x, axis=-1
    )
    if spec.variant == "standardized":
        return np.exp(-spec.A * norm + spec.B)
    s = math.sqrt(1 + spec.eta)
    return (1 - spec.eta) ** (-spec.d / 2) * np.exp(
        -spec.A * norm / s + spec.A * spec.xi / s + spec.B
    )


@dataclass(frozen=True)
class Env2Extremal:
    density: PiecewiseLogLinear1D
    x0: float
    truncation: float
    lost_mass: float


def env2_extremal(x0, tail_mass=TAIL_MASS, full=False):
    """Mean-zero log-concave density attaining ``f(x0) = 1/|x0|``.

    For ``x0 > 0`` this is ``(1/x0) exp(-(x0 - x)/x0)`` on ``x <= x0`` (mirrored
    for ``x0 < 0``).  The log-density is linear, so two knots represent it
    exactly once the tail is cut where its mass drops to ``tail_mass``.
    """
    if x0 == 0:
        raise ParameterError("x0 = 0: the supremum is infinite")
    s = abs(x0)
    cut = s * (1 + math.log(tail_mass))  # mass below the cut equals tail_mass
    knots = np.array([cut, s])
    logvals = -math.log(s) - (s - knots) / s
    logvals = logvals - math.log1p(-tail_mass)
    f = PiecewiseLogLinear1D(knots, logvals)
    if x0 < 0:
        f = f.affine(-1.0, 0.0)
    if full:
        return Env2Extremal(f, x0, -cut if x0 < 0 else cut, tail_mass)
    return f


def _recentered(f, tol=1e-6):
    mu = float(f.moments()[0][0])
    if abs(mu) > tol:
        return f.affine(1.0, -mu), mu
    return f, mu


def check_env2_bound(f, x0, tol=BOUND_TOL):
    """Check ``f(x0) <= 1/|x0|`` for a mean-zero 1-D log-concave density (re-centred if needed)."""
    f, mu = _recentered(f)
    bound = math.inf if x0 == 0 else 1.0 / abs(x0)
    value = float(f.pdf(np.asarray(x0, dtype=float)))
    slack = bound - value
    return slack >= -tol, {"x0": x0, "value": value, "bound": bound, "slack": slack, "shift": mu}


# ---------------------------------------------------------------------------
# corpora of standardized densities


def standardize_1d(f):
    """Affine image of ``f`` with mean zero and variance one."""
    mean, cov = f.moments()
    return f.affine(1.0 / math.sqrt(cov[0, 0]), -mean[0] / math.sqrt(cov[0, 0]))


def random_log_concave_1d(rng, max_knots=8):
    """Random concave piecewise-linear log-density, normalized, on random knots."""
    m = int(rng.integers(2, max_knots + 1))
    knots = np.sort(rng.uniform(-5, 5, m))
    while np.any(np.diff(knots) < 1e-3):
        knots = np.sort(rng.uniform(-5, 5, m))
    if m == 2:
        return construct_normalized(knots, np.array([0.0, rng.normal(0, 3)]))
    slopes = np.sort(rng.normal(0, 3, m - 1))[::-1]
    logvals = np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
    return construct_normalized(knots, logvals)


def mean_zero_corpus(size, rng):
    """``size`` random mean-zero log-concave densities of varying scale."""
    out = []
    for _ in range(size):
        f = random_log_concave_1d(rng)
        scale = float(np.exp(rng.uniform(-1.5, 1.5)))
        out.append(f.affine(scale, -scale * f.mean()))
    return out


def standardized_generators_1d():
    """Named standardized (mean 0, variance 1) 1-D densities."""
    r3 = math.sqrt(3)
    return {
        "laplace": laplace_on_knots(scale=1 / math.sqrt(2), half_width=40.0),
        "normal": normal_on_knots(1024, -10.0, 10.0),
        "uniform": construct_normalized([-r3, r3], [0.0, 0.0]),
    }


def standardized_ball(d):
    # uniform on B(0, R) has covariance R^2/(d+2) I
    return ConvexBodyUniform(d, math.sqrt(d + 2))


def _tail_rate_1d(f):
    """Smallest decay rate of ``log f`` over the outer segments."""
    slopes = f.slopes()
    rates = [r for r in (-slopes[-1], slopes[0]) if r > 0]
    return min(rates) if rates else math.inf


def _member_radius(f):
    if isinstance(f, PiecewiseLogLinear1D):
        return max(abs(f.support[0]), abs(f.support[1]))
    return float(f.radius)


def _probe_points(d, radius, count, rng):
    if d == 1:
        return np.linspace(-radius, radius, count)
    dirs = rng.normal(size=(count, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * (radius * np.linspace(0.0, 1.0, count))[:, None]


def _log_at(f, pts):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(f.pdf(pts), dtype=float))


def estimate_envelope_constants(d, trials=None, rng=None, generator=None, probes=1000):
    """Fit empirical ``(A_hat, B_hat)`` with ``exp(-A |x| + B)`` above all sampled members.

    ``generator`` is a list of standardized densities or a callable
    ``rng -> density`` called ``trials`` times.  For each ``A`` the offset
    ``B(A)`` is the smallest one dominating every member at every probe
    point; ``A_hat`` minimizes the envelope mass ``exp(B(A)) / A^d`` with
    ``A`` capped by the members' tail decay rates.  The constants are
    empirical and carry no certificate.
    """
    if d not in (1, 2, 3):
        raise ParameterError("d must be 1, 2 or 3")
    rng = np.random.default_rng(0) if rng is None else rng
    if generator is None:
        generator = (list(standardized_generators_1d().values()) if d == 1
                     else [standardized_ball(d)])
    if callable(generator):
        if not trials:
            raise ParameterError("a callable generator needs trials >= 1")
        members = [generator(rng) for _ in range(trials)]
    else:
        members = list(generator)
    if not members:
        raise ParameterError("empty generator")
    if any(f.dim != d for f in members):
        raise ParameterError("generator produced a density of the wrong dimension")

    radius = max(_member_radius(f) for f in members)
    pts = _probe_points(d, radius, probes, rng)
    if d == 1:
        # log f + A|x| is piecewise linear with kinks at the knots and 0, so those points are exact
        extra = [f.breakpoints for f in members if isinstance(f, PiecewiseLogLinear1D)]
        pts = np.unique(np.concatenate([pts, [0.0], *extra]))
    norms = np.abs(pts) if d == 1 else np.linalg.norm(pts, axis=1)
    logs, rs = [], []
    for f in members:
        lg = _log_at(f, pts)
        keep = np.isfinite(lg)
        logs.append(lg[keep])
        rs.append(norms[keep])
    logs = np.concatenate(logs)
    rs = np.concatenate(rs)

    cap = min(_tail_rate_1d(f) for f in members) if d == 1 else math.inf
    hi = cap if math.isfinite(cap) else 1e3

    def B_of(A):
        return float(np.max(logs + A * rs))

    def mass(A):
        return B_of(A) - d * math.log(A)

    res = minimize_scalar(mass, bounds=(1e-6, hi), method="bounded", options={"xatol": 1e-12})
    A = float(res.x)
    if math.isfinite(cap) and mass(cap) <= res.fun + 1e-12:
        A = cap
    return A, B_of(A)
