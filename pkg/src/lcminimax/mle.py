"""Log-concave maximum likelihood estimation.

The objective is ``L(phi) = sum_i w_i phi(X_i) - int exp(phi) + 1`` whose
maximizer over concave ``phi`` is automatically a density.  In one dimension
an active-set method works on the values of ``phi`` at a subset of the
sample points (the kinks), solving each subproblem exactly by Newton's
method with closed-form segment integrals.  In two dimensions the estimate is
a tent function over the sample points, fitted by a barrier Newton method on
the heights with closed-form integrals of ``exp`` over triangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solveh_banded
from scipy.optimize import minimize
from scipy.sparse import coo_matrix, diags
from scipy.sparse.linalg import spsolve
from scipy.spatial import ConvexHull, Delaunay, QhullError

from .density import PiecewiseLogLinear1D, _exp_moment_factors
from .errors import DegenerateSampleError, NumericError, ParameterError

MAX_ITER = 500


# ---------------------------------------------------------------------------
# 1-D active set


@dataclass(frozen=True)
class MleResult1D:
    density: PiecewiseLogLinear1D
    loglik: float
    iterations: int
    converged: bool
    tolerance: float
    max_directional_derivative: float

    def to_json(self):
        return {
            "density": self.density.to_json(),
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "tolerance": self.tolerance,
            "max_directional_derivative": self.max_directional_derivative,
        }


def _segment_terms(a, b, width):
    """``int exp`` over segments with end values ``a, b``, plus gradient and Hessian entries."""
    swap = b > a
    p = np.maximum(a, b)
    m0, m1, m2 = _exp_moment_factors(np.abs(a - b))
    s = width * np.exp(p)
    g_hi, g_lo = s * (m0 - m1), s * m1
    h_hi, h_mid, h_lo = s * (m0 - 2 * m1 + m2), s * (m1 - m2), s * m2
    ga = np.where(swap, g_lo, g_hi)
    gb = np.where(swap, g_hi, g_lo)
    haa = np.where(swap, h_lo, h_hi)
    hbb = np.where(swap, h_hi, h_lo)
    return s * m0, ga, gb, haa, h_mid, hbb


def _data_coefficients(x, w, knots_idx):
    """Weights ``c`` with ``sum_i w_i phi(x_i) = c . theta`` for ``phi`` linear between knots."""
    xk = x[knots_idx]
    seg = np.clip(np.searchsorted(knots_idx, np.arange(len(x)), side="right") - 1,
                  0, len(knots_idx) - 2)
    lam = (x - xk[seg]) / (xk[seg + 1] - xk[seg])
    c = np.bincount(seg, w * (1 - lam), minlength=len(xk))
    c += np.bincount(seg + 1, w * lam, minlength=len(xk))
    return c


class _Subproblem:
    """Unconstrained maximization of ``L`` over functions linear between fixed knots."""

    def __init__(self, x, w, knots_idx):
        self.idx = knots_idx
        self.xk = x[knots_idx]
        self.width = np.diff(self.xk)
        self.c = _data_coefficients(x, w, knots_idx)

    def value(self, theta):
        i0 = _segment_terms(theta[:-1], theta[1:], self.width)[0]
        return float(self.c @ theta - i0.sum() + 1.0)

    def derivatives(self, theta):
        i0, ga, gb, haa, hab, hbb = _segment_terms(theta[:-1], theta[1:], self.width)
        grad = self.c.copy()
        grad[:-1] -= ga
        grad[1:] -= gb
        diag = np.zeros_like(theta)
        diag[:-1] += haa
        diag[1:] += hbb
        return float(self.c @ theta - i0.sum() + 1.0), grad, diag, hab

    def maximize(self, theta, max_iter=200):
        value, grad, diag, off = self.derivatives(theta)
        for _ in range(max_iter):
            banded = np.vstack([np.concatenate([[0.0], off]), diag])
            try:
                step = solveh_banded(banded, grad)
            except np.linalg.LinAlgError as exc:
                raise NumericError(f"singular Newton system: {exc}") from exc
            decrement = float(grad @ step)
            if not math.isfinite(decrement):
                raise NumericError("non-finite Newton decrement")
            if decrement < 1e-20:
                theta = theta + step
                break
            if decrement < 1e-10:
                # quadratic regime: the gain is below the rounding of the objective, so
                # an Armijo test cannot see it; full Newton steps are safe here
                theta = theta + step
                value, grad, diag, off = self.derivatives(theta)
                continue
            t = 1.0
            while True:
                cand = theta + t * step
                cand_value = self.value(cand)
                if cand_value >= value + 1e-4 * t * decrement:
                    break
                t *= 0.5
                if t < 1e-14:
                    cand = theta
                    break
            if cand is theta:
                break
            theta = cand
            value, grad, diag, off = self.derivatives(theta)
        # the constant shift that normalizes exp(phi) is the exact maximizer along that direction
        return theta - math.log(_segment_terms(theta[:-1], theta[1:], self.width)[0].sum())

    def kinks(self, theta):
        return np.diff(np.diff(theta) / self.width)


def _directional_derivatives(x, w, xk, theta):
    """Gain rate of adding a concave kink at each sample point.

    ``D_j = int (x - x_j)_+ e^phi - sum_i w_i (x_i - x_j)_+``; the estimate is
    optimal when no ``D_j`` is positive.
    """
    phi = np.interp(x, xk, theta)
    i0, ga, gb, _, _, _ = _segment_terms(phi[:-1], phi[1:], np.diff(x))
    # ga/gb are int (1-t) e^phi and int t e^phi on each cell; int (x - x_c) e^phi = width * gb
    cell_i1 = np.diff(x) * gb
    tail0 = np.concatenate([np.cumsum(i0[::-1])[::-1], [0.0]])
    tail1 = np.concatenate([np.cumsum((cell_i1 + x[:-1] * i0)[::-1])[::-1], [0.0]])
    model = tail1 - x * tail0
    wx = w * x
    s0 = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    s1 = np.concatenate([np.cumsum(wx[::-1])[::-1][1:], [0.0]])
    data = s1 - x * s0
    return model - data


def _unique_weights(samples):
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ParameterError("samples must be finite")
    if x.size < 2:
        raise DegenerateSampleError("need at least two samples")
    xs, counts = np.unique(x, return_counts=True)
    if xs.size < 2:
        raise DegenerateSampleError("all sample points are equal")
    return xs, counts / x.size


def mle_1d(samples, tol=1e-10, max_iter=MAX_ITER):
    """Exact log-concave MLE for 1-D data.

    Knots are added one at a time where the directional derivative is
    largest (ties go to the smallest index) and dropped when a Newton step
    would break concavity.  Iteration stops once no directional derivative
    exceeds ``tol`` times the data range (the loglik improvement available
    from any single new kink is then far below ``tol``).
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    x, w = _unique_weights(samples)
    span = x[-1] - x[0]
    dd_tol = tol * span

    idx = np.array([0, len(x) - 1])
    sub = _Subproblem(x, w, idx)
    theta = sub.maximize(np.full(2, -math.log(span)))
    value = sub.value(theta)
    iterations = 0
    converged = False
    max_dd = math.inf
    while iterations < max_iter:
        dd = _directional_derivatives(x, w, sub.xk, theta)
        dd[idx] = -np.inf
        dd[0] = dd[-1] = -np.inf
        j = int(np.argmax(dd))
        max_dd = float(max(dd[j], 0.0)) if np.isfinite(dd[j]) else 0.0
        if not np.isfinite(dd[j]) or dd[j] <= dd_tol:
            converged = True
            break
        iterations += 1
        new_idx = np.sort(np.append(idx, j))
        start = np.interp(x[new_idx], sub.xk, theta)
        while True:
            sub_new = _Subproblem(x, w, new_idx)
            cand = sub_new.maximize(start)
            k_new = sub_new.kinks(cand)
            scale = max(1.0, float(np.max(np.abs(np.diff(cand) / sub_new.width))))
            kink_tol = 1e-12 * scale
            if np.all(k_new <= kink_tol):
                break
            k_old = sub_new.kinks(start)
            bad = k_new > kink_tol
            t = np.full(k_new.shape, np.inf)
            t[bad] = np.clip(-k_old[bad], 0.0, None) / (k_new[bad] - k_old[bad])
            t_star = float(np.min(t))
            start = start + t_star * (cand - start)
            kinks_now = sub_new.kinks(start)
            drop = np.zeros(len(new_idx), dtype=bool)
            drop[1 + int(np.argmin(t))] = True
            drop[1:-1] |= kinks_now >= -kink_tol
            new_idx = new_idx[~drop]
            start = start[~drop]
        idx, sub, theta = new_idx, sub_new, cand
        value = sub.value(theta)
    else:
        converged = False

    density = PiecewiseLogLinear1D(sub.xk, theta)
    return MleResult1D(density, value, iterations, converged, tol, max_dd)


def loglik_1d(density, samples):
    """``L(phi) = mean log f(X_i) - int f + 1`` for a 1-D density (``-inf`` off the support)."""
    x = np.asarray(samples, dtype=float).ravel()
    return float(np.mean(density.logpdf(x)) - density.integral() + 1.0)


def knot_perturbation_margin(result, samples, delta=1e-4):
    """Largest increase of ``L`` when one knot value moves by ``+-delta`` and is renormalized."""
    f = result.density
    base = loglik_1d(f, samples)
    x = np.asarray(samples, dtype=float).ravel()
    worst = -math.inf
    for k in range(len(f.knots)):
        for sign in (1.0, -1.0):
            lv = f.logvals.copy()
            lv[k] += sign * delta
            i0 = _segment_terms(lv[:-1], lv[1:], np.diff(f.knots))[0].sum()
            lv -= math.log(i0)
            val = float(np.mean(np.interp(x, f.knots, lv)))  # int exp = 1 after renormalizing
            worst = max(worst, val - base)
    return worst


# ---------------------------------------------------------------------------
# standardization and class membership


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    sqrt_cov: np.ndarray
    transformed: np.ndarray

    @property
    def dim(self):
        return self.mean.shape[0]

    def inverse(self, z):
        z = np.asarray(z, dtype=float)
        if self.dim == 1 and z.ndim <= 1:
            return self.sqrt_cov[0, 0] * z + self.mean[0]
        return z @ self.sqrt_cov.T + self.mean

    def map_back(self, density):
        """Density of ``X`` given a 1-D density of the whitened variable ``Z``."""
        if self.dim != 1:
            raise ParameterError("map_back is implemented for 1-D densities")
        return density.affine(float(self.sqrt_cov[0, 0]), float(self.mean[0]))


def standardize(samples):
    """Whiten with the sample mean and the divisor-``n`` sample covariance."""
    x = np.asarray(samples, dtype=float)
    one_d = x.ndim == 1
    if one_d:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise ParameterError("samples must be an (n, d) array with n >= 2")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] <= 1e-14 * max(1.0, vals[-1]):
        raise DegenerateSampleError("sample covariance is singular")
    sqrt_cov = (vecs * np.sqrt(vals)) @ vecs.T
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.T
    z = centered @ inv_sqrt.T
    return Standardization(mean, sqrt_cov, z[:, 0] if one_d else z)


def check_class_membership(f, xi, eta, tol=1e-9):
    """Whether ``|mu_f| <= xi`` and every covariance eigenvalue lies in ``[1-eta, 1+eta]``."""
    mom = f.moments()
    mean, cov = np.atleast_1d(mom[0]), np.atleast_2d(mom[1])
    mean_norm = float(np.linalg.norm(mean))
    eig = np.linalg.eigvalsh(cov)
    ok = mean_norm <= xi + tol and eig[0] >= 1 - eta - tol and eig[-1] <= 1 + eta + tol
    return bool(ok), {
        "mean_norm": mean_norm,
        "eigenvalues": eig.tolist(),
        "xi": xi,
        "eta": eta,
    }


# ---------------------------------------------------------------------------
# 2-D tent functions


_SERIES_DEGREE = 8
_CLOSE = 0.1


@njit(cache=True, nogil=True)
def _dd_rows(z, close, degree):  # pragma: no cover - compiled
    n, k1 = z.shape
    out = np.empty(n)
    level = np.empty(k1)
    p = np.empty(degree + 1)
    h = np.empty(degree + 1)
    for r in range(n):
        for i in range(k1):
            level[i] = math.exp(z[r, i])
        for lev in range(1, k1):
            for start in range(k1 - lev):
                gap = z[r, start + lev] - z[r, start]
                if gap >= close:
                    level[start] = (level[start + 1] - level[start]) / gap
                    continue
                m = 0.0
                for i in range(start, start + lev + 1):
                    m += z[r, i]
                m /= lev + 1
                for j in range(1, degree + 1):
                    p[j] = 0.0
                for i in range(start, start + lev + 1):
                    u = z[r, i] - m
                    pw = u
                    for j in range(1, degree + 1):
                        p[j] += pw
                        pw *= u
                h[0] = 1.0
                ser = 1.0
                fact = 1.0
                for i in range(2, lev + 1):
                    fact *= i
                ser = 1.0 / fact
                for j in range(1, degree + 1):
                    acc = 0.0
                    for i in range(1, j + 1):
                        acc += p[i] * h[j - i]
                    h[j] = acc / j
                    fact *= lev + j
                    ser += h[j] / fact
                level[start] = ser * math.exp(m)
        out[r] = level[0]
    return out


def _exp_divided_difference(nodes, close=_CLOSE, degree=_SERIES_DEGREE):
    """``e[z_0, ..., z_k]`` for exp, row-wise, stable for coincident and spread nodes.

    Sorted windows wider than ``close`` use the two-term recursion (loss of
    accuracy about ``eps / close`` per level); narrow windows use the series
    ``e^m sum_j h_j(z - m) / (k + j)!`` in the complete homogeneous
    polynomials of the centred nodes.
    """
    nodes = np.asarray(nodes, dtype=float)
    z = np.sort(nodes.reshape(-1, nodes.shape[-1]), axis=-1)
    shift = z[:, -1].copy()
    out = _dd_rows(np.ascontiguousarray(z - shift[:, None]), close, degree) * np.exp(shift)
    return out.reshape(nodes.shape[:-1])


def _triangle_areas(pts, tri):
    a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    return 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                        - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _upper_triangles(pts, y):
    # a tiny concave lift makes flat regions triangulate deterministically (Delaunay-like)
    c = pts - pts.mean(axis=0)
    r2 = np.sum(c * c, axis=1)
    lift = 1e-10 * (1.0 + np.max(np.abs(y))) * r2 / max(float(r2.max()), 1e-300)
    try:
        hull = ConvexHull(np.column_stack([pts, y - lift]))
    except QhullError as exc:
        raise NumericError(f"upper hull failed: {exc}") from exc
    up = hull.equations[:, 2] > 1e-12
    tri = hull.simplices[up]
    area = _triangle_areas(pts, tri)
    keep = area > 0
    return tri[keep], area[keep]


def _tent_integral(y, tri, area, grad=True):
    """``int exp(tent)`` over the triangles and, optionally, its gradient in the heights."""
    z = y[tri]
    total = float(np.sum(2 * area * _exp_divided_difference(z)))
    if not grad:
        return total
    g = np.zeros_like(y)
    for v in range(3):
        # the derivative in one node repeats that node
        dd = _exp_divided_difference(np.column_stack([z, z[:, v]]))
        g += np.bincount(tri[:, v], 2 * area * dd, minlength=len(y))
    return total, g


@dataclass(frozen=True, eq=False)
class TentDensity2D:
    """``exp`` of the least concave majorant of heights ``y`` at points ``pts``, zero outside the hull."""

    points: np.ndarray
    heights: np.ndarray
    triangles: np.ndarray
    dim: int = 2

    def __post_init__(self):
        pts = self.points
        a, b, c = pts[self.triangles[:, 0]], pts[self.triangles[:, 1]], pts[self.triangles[:, 2]]
        za, zb, zc = (self.heights[self.triangles[:, i]] for i in range(3))
        m = np.stack([b - a, c - a], axis=1)  # (T, 2, 2): rows are edge vectors
        coef = np.linalg.solve(m, np.stack([zb - za, zc - za], axis=1)[..., None])[..., 0]
        planes = np.column_stack([coef, za - np.einsum("ij,ij->i", coef, a)])
        object.__setattr__(self, "_planes", planes)
        hull = ConvexHull(pts)
        object.__setattr__(self, "_hull_eq", hull.equations)
        object.__setattr__(self, "_areas", _triangle_areas(pts, self.triangles))

    @property
    def support_vertices(self):
        return self.points[np.unique(self.triangles)]

    def inside(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all(x @ self._hull_eq[:, :2].T + self._hull_eq[:, 2] <= 1e-12, axis=1)

    def logpdf(self, x, chunk=4096):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.full(len(x), -np.inf)
        inside = self.inside(x)
        pts = x[inside]
        vals = np.empty(len(pts))
        for s in range(0, len(pts), chunk):
            p = pts[s:s + chunk]
            vals[s:s + chunk] = np.min(p @ self._planes[:, :2].T + self._planes[:, 2], axis=1)
        out[inside] = vals
        return out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def __call__(self, x):
        return self.pdf(x)

    def integral(self):
        return _tent_integral(self.heights, self.triangles, self._areas, grad=False)

    def sqrt_integral(self):
        """``int sqrt(f)``, exact over the triangles."""
        return _tent_integral(0.5 * self.heights, self.triangles, self._areas, grad=False)

    def square_integral(self):
        """``int f^2``, exact over the triangles."""
        return _tent_integral(2.0 * self.heights, self.triangles, self._areas, grad=False)

    def triangle_masses(self):
        z = self.heights[self.triangles]
        return 2 * self._areas * _exp_divided_difference(z)

    def moments(self, n=200_000, seed=0):
        x = self.sample(n, np.random.default_rng(seed))
        return x.mean(axis=0), np.cov(x.T, bias=True)

    def sample(self, n, rng):
        masses = self.triangle_masses()
        pick = rng.choice(len(masses), size=n, p=masses / masses.sum())
        out = np.empty((n, 2))
        todo = np.arange(n)
        tri_max = self.heights[self.triangles].max(axis=1)
        while todo.size:
            t = self.triangles[pick[todo]]
            u, v = rng.uniform(size=(2, todo.size))
            flip = u + v > 1
            u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
            a, b, c = self.points[t[:, 0]], self.points[t[:, 1]], self.points[t[:, 2]]
            p = a + u[:, None] * (b - a) + v[:, None] * (c - a)
            h = (self.heights[t[:, 0]] * (1 - u - v) + self.heights[t[:, 1]] * u
                 + self.heights[t[:, 2]] * v)
            acc = rng.uniform(size=todo.size) < np.exp(h - tri_max[pick[todo]])
            out[todo[acc]] = p[acc]
            todo = todo[~acc]
        return out

    def to_json(self):
        return {
            "type": "TentDensity2D",
            "points": self.points.tolist(),
            "heights": self.heights.tolist(),
            "triangles": self.triangles.tolist(),
        }


@dataclass(frozen=True)
class MleResultTent:
    density: TentDensity2D
    loglik: float
    iterations: int
    converged: bool
    raw_integral: float

    def to_json(self):
        return {
            "density": self.density.to_json(),
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "raw_integral": self.raw_integral,
        }


def _delaunay_concavity(pts):
    """Delaunay triangles and the linear rows ``G`` with ``G y <= 0`` iff the interpolant is concave.

    For each interior edge the far vertex of one neighbour must lie on or
    below the plane of the other triangle.
    """
    dt = Delaunay(pts)
    tri = dt.simplices
    rows, cols, vals = [], [], []
    m = 0
    for t in range(len(tri)):
        for k in range(3):
            nb = dt.neighbors[t, k]
            if nb <= t:
                continue
            a = tri[t, k]
            edge = [tri[t, (k + 1) % 3], tri[t, (k + 2) % 3]]
            b = int(np.setdiff1d(tri[nb], edge)[0])
            u, v = edge
            mat = np.array([[pts[u, 0], pts[v, 0], pts[a, 0]],
                            [pts[u, 1], pts[v, 1], pts[a, 1]],
                            [1.0, 1.0, 1.0]])
            beta = np.linalg.solve(mat, np.array([pts[b, 0], pts[b, 1], 1.0]))
            rows += [m] * 4
            cols += [b, u, v, a]
            vals += [1.0, -beta[0], -beta[1], -beta[2]]
            m += 1
    G = coo_matrix((vals, (rows, cols)), shape=(m, len(pts))).tocsr()
    return tri, G


def _triangle_hessian(y, tri, area):
    """Sparse Hessian of ``int exp`` of the interpolant over fixed triangles."""
    z = y[tri]
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(i, 3):
            nodes = np.column_stack([z, z[:, i], z[:, j]])
            # a node repeated twice contributes a factor 2 to its own derivative
            h = 2 * area * _exp_divided_difference(nodes) * (2.0 if i == j else 1.0)
            rows.append(tri[:, i])
            cols.append(tri[:, j])
            vals.append(h)
            if i != j:
                rows.append(tri[:, j])
                cols.append(tri[:, i])
                vals.append(h)
    n = len(y)
    return coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()


def _barrier_solve(pts, w, tri, area, G, y, mu0=1e-3, gap=1e-10, max_newton=400):
    """Minimize ``-w.y + int exp`` subject to ``G y <= 0`` by a log-barrier Newton method."""
    m = G.shape[0]

    def f_parts(yv):
        total, g = _tent_integral(yv, tri, area)
        return float(-w @ yv + total), g - w

    mu = mu0
    steps = 0
    while True:
        for _ in range(max_newton):
            slack = -(G @ y)
            fval, grad = f_parts(y)
            fval -= mu * np.sum(np.log(slack))
            grad = grad + mu * (G.T @ (1.0 / slack))
            H = _triangle_hessian(y, tri, area) + mu * (G.T @ diags(1.0 / slack**2) @ G)
            try:
                step = -spsolve(H.tocsc(), grad)
            except RuntimeError as exc:
                raise NumericError(f"tent Newton system failed: {exc}") from exc
            if not np.all(np.isfinite(step)):
                raise NumericError("tent Newton step is not finite")
            dec = float(-grad @ step)
            steps += 1
            if dec < 1e-14:
                break
            gs = G @ step
            grow = gs > 0
            t = 1.0
            if np.any(grow):
                t = min(1.0, 0.99 * float(np.min(slack[grow] / gs[grow])))
            while True:
                cand = y + t * step
                cs = -(G @ cand)
                if np.all(cs > 0):
                    cv = f_parts(cand)[0] - mu * np.sum(np.log(cs))
                    if cv <= fval - 1e-4 * t * dec:
                        break
                t *= 0.5
                if t < 1e-14:
                    cand = None
                    break
            if cand is None:
                break
            y = cand
        if mu * m < gap:
            return y, steps
        mu *= 0.05


def _tent_objective(pts, w, y):
    tri, area = _upper_triangles(pts, y)
    total, g = _tent_integral(y, tri, area)
    return float(-w @ y + total), g - w


def mle_2d_tent(samples, weights=None, polish_iter=0):
    """Tent-function log-concave MLE in two dimensions.

    The heights are first fitted over functions linear on the Delaunay
    triangles of the sample with linear concavity constraints across every
    interior edge (a smooth convex program, solved by a barrier Newton
    method with exact triangle integrals).  Optionally ``polish_iter``
    quasi-Newton steps then descend the exact tent objective
    ``-sum w_i y_i + int exp(hbar_y)`` whose folds may leave the Delaunay
    edges; a polished point is kept only if it lowers that objective.  The
    heights are finally shifted so the density integrates to one.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[1] != 2:
        raise ParameterError("samples must be an (n, 2) array")
    if not np.all(np.isfinite(x)):
        raise ParameterError("samples must be finite")
    pts, inverse = np.unique(x, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    raw_w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=float)
    if raw_w.shape != (len(x),) or np.any(raw_w < 0) or raw_w.sum() <= 0:
        raise ParameterError("weights must be non-negative with positive sum")
    w = np.bincount(inverse, raw_w, minlength=len(pts)) / raw_w.sum()
    if len(pts) < 3:
        raise DegenerateSampleError("need at least three distinct points")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-12 * max(1.0, sv[0]):
        raise DegenerateSampleError("samples are collinear")

    tri, G = _delaunay_concavity(pts)
    area = _triangle_areas(pts, tri)
    # an isotropic concave paraboloid is strictly concave across every Delaunay edge
    s2 = float(np.mean(np.sum(centered**2, axis=1))) / 2
    y0 = -0.5 * np.sum(centered**2, axis=1) / s2 - math.log(2 * math.pi * s2)
    if G.shape[0] and np.any(G @ y0 >= 0):
        raise DegenerateSampleError("cocircular configuration without a strictly feasible start")
    y, steps = _barrier_solve(pts, w, tri, area, G, y0)
    if not np.all(np.isfinite(y)):
        raise NumericError("tent solver diverged")

    converged = True
    if polish_iter:
        start_val = _tent_objective(pts, w, y)[0]
        res = minimize(lambda v: _tent_objective(pts, w, v), y, jac=True, method="L-BFGS-B",
                       options={"maxiter": polish_iter, "ftol": 1e-15, "gtol": 1e-10})
        if np.all(np.isfinite(res.x)) and res.fun < start_val:
            y = res.x
        converged = bool(res.success)
        steps += int(res.nit)

    tri, area = _upper_triangles(pts, y)
    raw = _tent_integral(y, tri, area, grad=False)
    y = y - math.log(raw)
    density = TentDensity2D(pts, y, tri)
    loglik = float(w @ density.logpdf(pts))
    return MleResultTent(density, loglik, steps, converged, raw)
