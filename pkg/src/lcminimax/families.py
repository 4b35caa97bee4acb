"""Adversarial density families for the minimax and bracketing-entropy lower bounds.

Four variants share :class:`PerturbationFamily`:

``assouad-1d``
    raised semicircle on ``[-r, r]`` with ``K`` pairs of arcs, one of each
    pair replaced by its chord according to a bit.
``assouad-ballcap``
    uniform densities on the unit ball with one cap of each of ``K`` cap
    pairs removed; caps are centred at a ``2 eps`` packing of the sphere.
``entropy-1d``
    a lowered semicircle whose radius makes the variance close to one.
``entropy-rescaled-d``
    the ball-cap family dilated by ``sqrt(d + 2)``.

Because members differ only on disjoint regions, every squared Hellinger
distance within a family is a sum of per-bit contributions; those are
exposed by :meth:`PerturbationFamily.bit_hellinger`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .density import ConvexBodyUniform, SemicirclePerturbation1D
from .errors import NumericError, ParameterError
from .geometry import adaptive_simpson, cap_integral, greedy_sphere_packing, unit_ball_volume

R_ASSOUAD_1D = 2.0 / 3.0
C0 = 0.75 * (1.0 - 2.0 * math.pi / 9.0)
ZETA_BRACKET = (0.148, 0.149)
DEFAULT_ETA = {1: 0.99, 2: 0.9, 3: 0.9}
GV_MAX_EXPLICIT_K = 24

VARIANTS = ("assouad-1d", "assouad-ballcap", "entropy-1d", "entropy-rescaled-d")


# ---------------------------------------------------------------------------
# certificates and codes


@dataclass(frozen=True)
class AssouadCertificate:
    K: int
    gamma: float
    C: float
    bound: float

    def to_json(self):
        return {"K": self.K, "gamma": self.gamma, "C": self.C, "bound": self.bound}


def assouad_bound(K, gamma, C):
    """Minimax risk lower bound ``K/8 (1 - sqrt(C)) gamma`` from the hypercube lemma."""
    if K < 1 or int(K) != K:
        raise ParameterError("K must be a positive integer")
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    if not (0 < C < 1):
        raise ParameterError(f"C must lie in (0, 1) for a non-vacuous bound, got {C}")
    return AssouadCertificate(int(K), float(gamma), float(C), K / 8 * (1 - math.sqrt(C)) * gamma)


@dataclass(frozen=True, eq=False)
class BinaryCode:
    K: int
    words: np.ndarray  # uint64 codewords, bit i of a word is coordinate i
    min_distance: int

    def __len__(self):
        return len(self.words)

    def bits(self, i):
        w = int(self.words[i])
        return tuple((w >> j) & 1 for j in range(self.K))

    def pairwise_min_distance(self, chunk=1024):
        """Exhaustive minimum Hamming distance over all pairs of codewords."""
        words = self.words.astype(np.uint64)
        n = len(words)
        if n < 2:
            return self.K + 1
        best = self.K + 1
        for s in range(0, n, chunk):
            block = words[s : s + chunk]
            x = block[:, None] ^ words[None, :]
            dist = _popcount(x)
            rows = np.arange(s, min(s + chunk, n))
            dist[np.arange(len(rows)), rows] = self.K + 1
            best = min(best, int(dist.min()))
        return best

    def check(self):
        if self.pairwise_min_distance() < self.min_distance:
            raise AssertionError("code violates its minimum distance")
        return True


def _popcount(x):
    x = np.ascontiguousarray(x, dtype=np.uint64)
    return np.unpackbits(x.view(np.uint8).reshape(*x.shape, 8), axis=-1).sum(
        axis=-1, dtype=np.int64
    )


def gv_size_bound(K):
    return math.ceil(math.exp(K / 8))


def gilbert_varshamov_subset(K, max_words=None):
    """Greedy lexicographic code of length ``K`` with minimum distance ``ceil(K/4)``.

    Words are visited in increasing integer order; a word is kept when it is
    at distance at least ``ceil(K/4)`` from all kept words.  Kept words block
    their Hamming ball of radius ``ceil(K/4) - 1``, so the scan is one pass
    over ``2^K`` flags.  Failing to reach ``ceil(e^{K/8})`` words is an error.
    """
    if int(K) != K or K < 8:
        raise ParameterError("K must be an integer >= 8")
    if K > 30:
        raise ParameterError("explicit codes are limited to K <= 30 (2^K flags)")
    K = int(K)
    dmin = math.ceil(K / 4)
    patterns = [0]
    for rad in range(1, dmin):
        for comb in itertools.combinations(range(K), rad):
            patterns.append(sum(1 << c for c in comb))
    patterns = np.array(patterns, dtype=np.int64)
    total = 1 << K
    blocked = np.zeros(total, dtype=bool)
    words = []
    pos = 0
    chunk = 1 << 14
    while pos < total:
        seg = blocked[pos : pos + chunk]
        free = np.flatnonzero(~seg)
        if free.size == 0:
            pos += chunk
            continue
        w = pos + int(free[0])
        words.append(w)
        blocked[np.bitwise_xor(patterns, w)] = True
        pos = w + 1
        if max_words is not None and len(words) >= max_words:
            break
    code = BinaryCode(K, np.array(words, dtype=np.uint64), dmin)
    if max_words is None and len(code) < gv_size_bound(K):
        raise NumericError(f"greedy code has {len(code)} words, below e^(K/8)")
    return code


# ---------------------------------------------------------------------------
# the root defining the entropy-family radius


def _zeta_equation(z):
    a = 2 * z - 0.5 * math.sin(4 * z)
    return (a - (2.0 / 3.0) * math.sin(2 * z) ** 3 * math.cos(2 * z)) / (4 * a * a) - 1.0


def zeta_residual(z):
    return _zeta_equation(z)


def zeta_star(tol=1e-12):
    """Bisection root of the variance-balancing equation on ``[0.148, 0.149]``."""
    lo, hi = ZETA_BRACKET
    flo = _zeta_equation(lo)
    if flo * _zeta_equation(hi) > 0:
        raise NumericError("bracket does not contain a sign change")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _zeta_equation(mid)
        if fm == 0 or hi - lo < 1e-17:
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if abs(_zeta_equation(root)) >= tol:
        raise NumericError("bisection did not reach the residual tolerance")
    return root


# ---------------------------------------------------------------------------
# families


def _half_beta_ratio(d):
    """``pi^{(d-1)/2} / Gamma((d+1)/2)``."""
    return math.exp(0.5 * (d - 1) * math.log(math.pi) - gammaln((d + 1) / 2))


@dataclass(eq=False)
class PerturbationFamily:
    variant: str
    dim: int
    K: int
    eps: float
    r: float
    n: int | None = None
    params: dict = field(default_factory=dict)
    packing: object = None
    code: BinaryCode | None = None
    checks: dict = field(default_factory=dict)
    _bits: np.ndarray | None = field(default=None, repr=False)

    # members --------------------------------------------------------------
    def member(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.K:
            raise ParameterError(f"alpha must have length K={self.K}")
        if self.variant in ("assouad-1d", "entropy-1d"):
            return SemicirclePerturbation1D(
                self.r, self.K, self.params["step"], self.params["baseline"], alpha,
                raised=self.variant == "assouad-1d",
            )
        normals, offsets = self._removed_caps(alpha)
        body = ConvexBodyUniform(self.dim, 1.0, normals, offsets, caps_disjoint=True)
        if self.variant == "entropy-rescaled-d":
            body = body.scaled(self.r)
        return body

    def _removed_caps(self, alpha):
        pts = self.packing.points
        K = self.K
        a = np.asarray(alpha)
        # bit 1 keeps the cap at x_{k,0} and removes the one at x_{k,1}
        idx = np.arange(K) + np.where(a == 1, K, 0)
        normals = pts[idx]
        offsets = np.full(K, 1.0 - self.eps**2 / 2)
        return normals, offsets

    def random_alpha(self, rng):
        return tuple(int(b) for b in rng.integers(0, 2, self.K))

    # per-bit Hellinger contributions ----------------------------------------
    def bit_hellinger(self):
        """Squared Hellinger distance between members differing only in bit ``k``, for each ``k``."""
        if self._bits is None:
            if self.dim == 1:
                self._bits = self._bit_hellinger_1d()
            else:
                one = self.params["c_cap_ratio"]
                self._bits = np.full(self.K, one)
        return self._bits

    def _bit_hellinger_1d(self):
        f = self.member((0,) * self.K)
        edges = f.region_edges()
        base = self.params["baseline"]
        out = np.empty(self.K)
        for k in range(1, self.K + 1):
            lo, hi = edges[k - 1]

            def integrand(x, k=k):
                a = base + f.arc(x)
                gap = f.arc_minus_chord(k, x)
                c = a - gap
                s = np.sqrt(np.maximum(a, 0)) + np.sqrt(np.maximum(c, 0))
                with np.errstate(invalid="ignore", divide="ignore"):
                    v = gap**2 / (s * s)
                return np.where(s > 0, v, 0.0)

            grid = np.linspace(lo, hi, 65)
            rough, _ = adaptive_simpson(integrand, grid, tol=np.inf)
            val, _ = adaptive_simpson(integrand, grid, tol=max(abs(rough) * 1e-10, 1e-300))
            out[k - 1] = 2.0 * val  # R_{k,0} and its mirror image contribute equally
        return out

    def hellinger_between(self, alpha, beta):
        """``h^2(f_alpha, f_beta)`` as the sum of per-bit contributions."""
        diff = np.asarray(alpha) != np.asarray(beta)
        return float(self.bit_hellinger()[diff].sum())

    def manifest(self):
        out = {
            "variant": self.variant,
            "dim": self.dim,
            "K": self.K,
            "eps": self.eps,
            "r": self.r,
            "n": self.n,
        }
        out.update({k: v for k, v in self.params.items() if np.isscalar(v)})
        out["checks"] = self.checks
        if self.packing is not None:
            out["packing_size"] = len(self.packing)
            out["packing_seed"] = self.packing.seed
        if self.code is not None:
            out["code_size"] = len(self.code)
            out["code_min_distance"] = self.code.min_distance
        return out


def assouad_1d_eps(n):
    return n ** (-1 / 5) / 2


def build_assouad_1d(n=None, eps=None):
    """Semicircle family on ``[-2/3, 2/3]`` with ``eps = n^{-1/5}/2`` (or ``eps`` given directly)."""
    if eps is None:
        if n is None or n < 2:
            raise ParameterError("need n >= 2 so that eps <= 1/2")
        eps = assouad_1d_eps(n)
    if not (0 < eps <= 0.5):
        raise ParameterError("eps must lie in (0, 1/2]")
    r = R_ASSOUAD_1D
    theta1 = math.asin(eps)
    K = int(math.floor(math.pi / (6 * theta1)))
    if K < 1:
        raise ParameterError("n too small: no arc pairs fit")
    c = (1 - 0.5 * math.pi * r * r + K * r * r * (theta1 - eps * math.sqrt(1 - eps * eps))) / (
        2 * r
    )
    if c < C0 - 1e-12:
        raise NumericError(f"raising constant {c} fell below c0 = {C0}")
    gamma_paper = 31 / 420 * r**3 * eps**5
    params = {
        "step": theta1,
        "baseline": c,
        "c_rKe": c,
        "c0": C0,
        "gamma_paper": gamma_paper,
        "one_flip_upper": r**3 * eps**5 / (2 * C0),
    }
    if n is not None:
        params["C_paper"] = n * r**3 * eps**5 / (2 * C0)
    fam = PerturbationFamily("assouad-1d", 1, K, eps, r, n=n, params=params)
    fam.checks["c_rKe>=c0"] = bool(c >= C0)
    return fam


def ballcap_eps(d, n):
    return (math.sqrt(math.pi) * math.sqrt(d - 1) / math.sqrt(6)) ** (1 / (d - 1)) * 0.5 * n ** (
        -1 / (d + 1)
    )


def c_K_eps(d, K, eps):
    """Volume of the unit ball with ``K`` disjoint caps of height ``eps^2/2`` removed."""
    return unit_ball_volume(d) - K / 2 * _half_beta_ratio(d) * cap_integral(d, eps)


def c_K_eps_sandwich(d, K, eps):
    vd = unit_ball_volume(d)
    mid = vd * (1 - K * eps ** (d + 1) / (math.sqrt(math.pi) * math.sqrt(d + 1)))
    return vd / 2, mid, vd


def build_assouad_ballcap(d, n=None, eps=None, seed=0):
    """Ball-minus-caps family; the packing comes from :func:`greedy_sphere_packing`."""
    if int(d) != d or d < 2:
        raise ParameterError("ball-cap families need d >= 2")
    if eps is None:
        if n is None or n < d + 1:
            raise ParameterError("need n >= d + 1")
        eps = ballcap_eps(d, n)
    if not (0 < eps <= 0.5):
        raise ParameterError("eps must lie in (0, 1/2]")
    packing = greedy_sphere_packing(d, eps, seed=seed)
    N = len(packing)
    if N < 2:
        raise ParameterError("packing has fewer than two points: n out of range")
    K = N // 2
    I = cap_integral(d, eps)
    c = unit_ball_volume(d) - K / 2 * _half_beta_ratio(d) * I
    one_flip = _half_beta_ratio(d) * I / c
    lo, mid, hi = c_K_eps_sandwich(d, K, eps)
    gamma_paper = (
        4 * 15 ** ((d + 1) / 2) / (math.sqrt(3) * 16 ** ((d + 1) / 2) * math.pi * math.sqrt(d + 1))
        * eps ** (d + 1)
    )
    params = {
        "c_KE": c,
        "cap_integral": I,
        "c_cap_ratio": one_flip,
        "offset": 1 - eps**2 / 2,
        "gamma_paper": gamma_paper,
        "one_flip_upper": 2 / math.sqrt(d + 1) * eps ** (d + 1),
        "c_sandwich_lo": lo,
        "c_sandwich_mid": mid,
        "c_sandwich_hi": hi,
    }
    if n is not None:
        params["C_paper"] = 2 / math.sqrt(d + 1) * n * eps ** (d + 1)
    fam = PerturbationFamily("assouad-ballcap", d, K, eps, 1.0, n=n, params=params, packing=packing)
    fam.checks["c_KE_in_sandwich"] = bool(lo <= mid <= c <= hi)
    return fam


def entropy_eps_max_1d(eta):
    return min(1e-6, eta**2 / 400)


def build_entropy_family_1d(eps, eta=None, attach_code=None):
    """Lowered semicircle family with variance within ``eta`` of one."""
    eta = DEFAULT_ETA[1] if eta is None else eta
    if not (0 < eps <= entropy_eps_max_1d(eta) * (1 + 1e-12)):
        raise ParameterError(f"eps must lie in (0, {entropy_eps_max_1d(eta)}]")
    zeta = zeta_star()
    w1 = math.asin(math.sqrt(eps))
    K = int(math.floor(zeta / w1))
    wK = K * w1
    denom = wK - 0.5 * math.sin(4 * wK) + K * math.sqrt(eps) * math.sqrt(1 - eps)
    r = denom ** -0.5
    baseline = -r * math.cos(2 * wK)
    params = {
        "step": w1,
        "baseline": baseline,
        "zeta_star": zeta,
        "eta": eta,
        "w_K": wK,
        "gamma_paper": 31 / 420 * r**2 * eps**2.5,
        "separation_target": eps**2 / 16,
    }
    code = None
    if attach_code or (attach_code is None and 8 <= K <= GV_MAX_EXPLICIT_K):
        code = gilbert_varshamov_subset(K)
    fam = PerturbationFamily("entropy-1d", 1, K, eps, r, params=params, code=code)
    m = fam.member((0,) * K)
    mu, cov = m.moments()
    fam.checks.update(
        {
            "eta": eta,
            "mean": float(mu[0]),
            "variance": float(cov[0, 0]),
            "mean_ok": bool(abs(mu[0]) <= math.sqrt(eta) / math.sqrt(2)),
            "variance_ok": bool(1 - eta / 2 <= cov[0, 0] <= 1 + eta),
            "w_K_window": bool(zeta - 2 * math.sqrt(eps) <= wK <= zeta),
        }
    )
    return fam


def entropy_eps_max_d(d, eta):
    return min(1e-4, math.sqrt(eta) / (4 * math.sqrt(d + 2)))


def build_entropy_family_d(d, eps, eta=None, seed=0):
    """Ball-cap family at scale ``eps`` dilated by ``sqrt(d + 2)``; moments checked exactly."""
    if int(d) != d or d < 2:
        raise ParameterError("need d >= 2")
    eta = DEFAULT_ETA.get(d, 0.9) if eta is None else eta
    if not (0 < eps <= entropy_eps_max_d(d, eta) * (1 + 1e-12)):
        raise ParameterError(f"eps must lie in (0, {entropy_eps_max_d(d, eta)}]")
    base = build_assouad_ballcap(d, eps=eps, seed=seed)
    r = math.sqrt(d + 2)
    params = dict(base.params)
    params.pop("C_paper", None)
    params.update(
        {
            "eta": eta,
            "mean_bound": math.sqrt(d + 2) / 2 ** (d - 2) * eps**2,
            "separation_target": 15 ** ((d + 1) / 2)
            / (10 * 2 ** (d + 1) * 16 ** ((d + 1) / 2))
            * eps**2,
        }
    )
    fam = PerturbationFamily(
        "entropy-rescaled-d", d, base.K, eps, r, params=params, packing=base.packing
    )
    fam.checks["c_KE_in_sandwich"] = base.checks["c_KE_in_sandwich"]
    if 8 <= fam.K <= GV_MAX_EXPLICIT_K:
        fam.code = gilbert_varshamov_subset(fam.K)
    return fam


def moment_report(fam, alpha):
    """Mean norm and covariance eigenvalue window of one member against the family's targets."""
    f = fam.member(alpha)
    res = f.moments()
    mean, cov = res[0], res[1]
    eig = np.linalg.eigvalsh(np.atleast_2d(cov))
    eta = fam.params.get("eta", DEFAULT_ETA.get(fam.dim, 0.9))
    out = {
        "eta": eta,
        "mean_norm": float(np.linalg.norm(mean)),
        "eig_min": float(eig.min()),
        "eig_max": float(eig.max()),
        "eigen_ok": bool(1 - eta <= eig.min() and eig.max() <= 1 + eta),
    }
    if "mean_bound" in fam.params:
        out["mean_bound"] = fam.params["mean_bound"]
        out["mean_ok"] = bool(out["mean_norm"] <= fam.params["mean_bound"])
    return out


def sample_separated_pairs(K, m, rng, min_distance=None):
    """``m`` random bit-vector pairs at Hamming distance at least ``ceil(K/4)``.

    Used when ``K`` is too large to materialize a greedy code: only the
    distance constraint enters the separation argument.
    """
    dmin = math.ceil(K / 4) if min_distance is None else min_distance
    pairs = []
    for _ in range(m):
        a = rng.integers(0, 2, K)
        dist = int(rng.integers(dmin, K + 1))
        flip = rng.choice(K, size=dist, replace=False)
        b = a.copy()
        b[flip] ^= 1
        pairs.append((tuple(int(x) for x in a), tuple(int(x) for x in b)))
    return pairs


def code_pairs(code, m, rng):
    """``m`` distinct pairs of codewords as bit tuples."""
    n = len(code)
    out = []
    for _ in range(m):
        i, j = rng.choice(n, size=2, replace=False)
        out.append((code.bits(int(i)), code.bits(int(j))))
    return out
