"""Seeded risk experiments, rate fits, lower-bound reports and report files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import density as dens
from .errors import LcMinimaxError, NumericError, ParameterError
from .families import assouad_bound, build_assouad_1d, build_assouad_ballcap
from .metrics import hellinger_sq
from .mle import mle_1d, mle_2d_tent

SCHEMA_VERSION = "1.0"
ESTIMATORS = ("mle-1d", "mle-2d-tent")
METRICS = ("hellinger-sq",)
TARGET_SLOPES = {1: -0.8, 2: -2 / 3, 3: -0.5}
MAX_FAILURE_FRACTION = 0.05
_MASK = (1 << 64) - 1


# ---------------------------------------------------------------------------
# seeds


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def stable_seed(base_seed, n, rep):
    """64-bit seed for one replication, independent of scheduling."""
    h = _splitmix64(int(base_seed) & _MASK)
    h = _splitmix64(h ^ (int(n) & _MASK))
    return _splitmix64(h ^ (int(rep) & _MASK))


# ---------------------------------------------------------------------------
# truths


def make_truth(name, dim=1, **params):
    """Named truth densities; ``density-file`` loads any serialized density (e.g. a family member)."""
    if name == "normal":
        if dim != 1:
            raise ParameterError("the normal truth is one-dimensional")
        return dens.normal_on_knots(int(params.get("knots", 2048)), -10.0, 10.0,
                                    float(params.get("mean", 0.0)), float(params.get("sd", 1.0)))
    if name == "laplace":
        if dim != 1:
            raise ParameterError("the Laplace truth is one-dimensional")
        return dens.laplace_on_knots(float(params.get("scale", 1.0)),
                                     float(params.get("half_width", 40.0)))
    if name == "uniform":
        if dim != 1:
            raise ParameterError("the uniform truth is one-dimensional")
        return dens.uniform_interval(float(params.get("lo", 0.0)), float(params.get("hi", 1.0)))
    if name == "uniform-ball":
        return dens.ConvexBodyUniform(dim, float(params.get("radius", 1.0)))
    if name == "density-file":
        with open(params["path"]) as fh:
            f = dens.from_json(json.load(fh))
        if f.dim != dim:
            raise ParameterError("density file has the wrong dimension")
        return f
    raise ParameterError(f"unknown truth {name!r}")


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class RiskExperimentConfig:
    truth: str
    dim: int
    sample_sizes: tuple
    replications: int
    base_seed: int = 0
    estimator: str = "mle-1d"
    metric: str = "hellinger-sq"
    truth_params: dict = field(default_factory=dict)

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        object.__setattr__(self, "sample_sizes", sizes)
        if not sizes:
            raise ParameterError("sample_sizes is empty")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ParameterError("sample_sizes must be strictly increasing")
        if sizes[0] < self.dim + 1:
            raise ParameterError("every sample size must be at least d + 1")
        if self.replications < 2:
            raise ParameterError("need at least two replications")
        if self.estimator not in ESTIMATORS:
            raise ParameterError(f"unknown estimator {self.estimator!r}")
        if self.metric not in METRICS:
            raise ParameterError(f"unknown metric {self.metric!r}")
        if (self.estimator == "mle-1d") != (self.dim == 1) or self.dim > 2:
            raise ParameterError("mle-1d needs d = 1 and mle-2d-tent needs d = 2")

    def to_json(self):
        out = asdict(self)
        out["sample_sizes"] = list(self.sample_sizes)
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(**{**obj, "sample_sizes": tuple(obj["sample_sizes"])})


@dataclass(frozen=True)
class PerNResult:
    n: int
    mean: float
    se: float
    reps: tuple
    seeds: tuple
    losses: tuple
    failures: int
    errors: tuple = ()


@dataclass(frozen=True)
class RiskResult:
    config: RiskExperimentConfig
    per_n: tuple
    slope: float
    intercept: float
    r_squared: float
    slope_band: tuple
    schema_version: str = SCHEMA_VERSION

    def to_json(self):
        return {
            "schema_version": self.schema_version,
            "config": self.config.to_json(),
            "per_n": [
                {**asdict(p), "reps": list(p.reps), "seeds": list(p.seeds),
                 "losses": list(p.losses), "errors": list(p.errors)}
                for p in self.per_n
            ],
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "slope_band": list(self.slope_band),
        }

    @classmethod
    def from_json(cls, obj):
        per_n = tuple(
            PerNResult(p["n"], p["mean"], p["se"], tuple(p["reps"]), tuple(p["seeds"]),
                       tuple(p["losses"]), p["failures"], tuple(p.get("errors", ())))
            for p in obj["per_n"]
        )
        return cls(RiskExperimentConfig.from_json(obj["config"]), per_n, obj["slope"],
                   obj["intercept"], obj["r_squared"], tuple(obj["slope_band"]),
                   obj.get("schema_version", SCHEMA_VERSION))


def _fit(cfg, x):
    if cfg.estimator == "mle-1d":
        return mle_1d(x).density
    return mle_2d_tent(x).density


def _replication(cfg, truth, n, rep):
    seed = stable_seed(cfg.base_seed, n, rep)
    rng = np.random.default_rng(seed)
    try:
        x = truth.sample(n, rng)
        fhat = _fit(cfg, x)
        loss = hellinger_sq(fhat, truth, seed=seed).value
        if not (0.0 <= loss <= 2.0 + 1e-12):
            raise NumericError(f"loss {loss} outside [0, 2]")
        return n, rep, seed, float(min(loss, 2.0)), None
    except (LcMinimaxError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return n, rep, seed, None, f"{type(exc).__name__}: {exc}"


def run_risk_experiment(cfg, threads=1, truth=None):
    """Monte Carlo risk of the estimator at each sample size; deterministic for any ``threads``."""
    truth = make_truth(cfg.truth, cfg.dim, **cfg.truth_params) if truth is None else truth
    tasks = [(n, rep) for n in cfg.sample_sizes for rep in range(cfg.replications)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda t: _replication(cfg, truth, *t), tasks))
    else:
        rows = [_replication(cfg, truth, *t) for t in tasks]
    rows.sort(key=lambda r: (r[0], r[1]))
    failures = sum(r[3] is None for r in rows)
    if failures > MAX_FAILURE_FRACTION * len(rows):
        first = next(r[4] for r in rows if r[3] is None)
        raise NumericError(f"{failures} of {len(rows)} replications failed; first: {first}")

    per_n = []
    for n in cfg.sample_sizes:
        mine = [r for r in rows if r[0] == n]
        ok = [r for r in mine if r[3] is not None]
        if len(ok) < 2:
            raise NumericError(f"fewer than two successful replications at n={n}")
        losses = np.array([r[3] for r in ok])
        per_n.append(PerNResult(
            n=n,
            mean=float(losses.mean()),
            se=float(losses.std(ddof=1) / math.sqrt(len(losses))),
            reps=tuple(r[1] for r in ok),
            seeds=tuple(r[2] for r in ok),
            losses=tuple(float(v) for v in losses),
            failures=len(mine) - len(ok),
            errors=tuple(r[4] for r in mine if r[3] is None),
        ))
    points = [(p.n, p.mean) for p in per_n]
    if len(points) >= 3:
        slope, intercept, r2, band = fit_rate_band(points)
    else:
        slope = intercept = r2 = math.nan
        band = (math.nan, math.nan)
    return RiskResult(cfg, tuple(per_n), slope, intercept, r2, band)


def supremum_risk(results):
    """Largest mean loss over a finite set of truths at each ``n`` (a surrogate for the sup over the class)."""
    table = {}
    for res in results:
        for p in res.per_n:
            cur = table.get(p.n)
            if cur is None or p.mean > cur[0]:
                table[p.n] = (p.mean, res.config.truth)
    return {
        "label": "maximum over the configured truths (finite-set surrogate for the supremum risk)",
        "rows": [{"n": n, "risk": v, "argmax_truth": t} for n, (v, t) in sorted(table.items())],
    }


# ---------------------------------------------------------------------------
# rate fits


def _rate_arrays(points):
    pts = list(points)
    if len(pts) < 3:
        raise ParameterError("need at least three points to fit a rate")
    n = np.array([p[0] for p in pts], dtype=float)
    loss = np.array([p[1] for p in pts], dtype=float)
    if np.any(n <= 0) or np.any(loss <= 0) or not np.all(np.isfinite(loss)):
        raise ParameterError("sample sizes and losses must be positive")
    return np.log(n), np.log(loss)


def fit_rate(points):
    """OLS of ``log loss`` on ``log n``: ``(slope, intercept, r_squared)``."""
    return fit_rate_band(points)[:3]


def fit_rate_band(points, level=0.95):
    x, y = _rate_arrays(points)
    res = stats.linregress(x, y)
    dof = len(x) - 2
    if dof > 0:
        q = stats.t.ppf(0.5 + level / 2, dof)
        band = (res.slope - q * res.stderr, res.slope + q * res.stderr)
    else:
        band = (res.slope, res.slope)
    return float(res.slope), float(res.intercept), float(res.rvalue**2), tuple(map(float, band))


# ---------------------------------------------------------------------------
# lower bounds


def paper_rate_constant(d):
    """Closed-form constant and exponent of the minimax lower bound."""
    if d == 1:
        return 1 / 28000, -0.8
    return (1 / (500 * 2**d)) * (15 / 16) ** ((d + 1) / 2), -2 / (d + 1)


def lower_bound_report(d, n_values, eps=None, seed=0):
    """Assouad certificates with numerically computed ``gamma`` and ``C`` for each ``n``.

    ``gamma`` is the smallest one-flip squared Hellinger distance and ``C``
    is ``n`` times the largest.  Rows with ``C >= 1`` are out of regime.
    """
    if d < 1 or int(d) != d:
        raise ParameterError("d must be a positive integer")
    const, rate = paper_rate_constant(d)
    rows = []
    for n in n_values:
        n = int(n)
        fam = build_assouad_1d(n, eps) if d == 1 else build_assouad_ballcap(d, n, eps, seed=seed)
        bits = fam.bit_hellinger()
        gamma = float(bits.min())
        C = n * float(bits.max())
        target = const * n**rate
        row = {
            "d": d,
            "n": n,
            "eps": fam.eps,
            "K": fam.K,
            "gamma": gamma,
            "C": C,
            "gamma_paper": fam.params["gamma_paper"],
            "C_paper": n * fam.params["one_flip_upper"],
            "target": target,
            "gamma_above_paper": gamma >= fam.params["gamma_paper"],
        }
        if C >= 1:
            row.update(status="out-of-regime", bound=None, meets_target=None)
        else:
            cert = assouad_bound(fam.K, gamma, C)
            row.update(bound=cert.bound, meets_target=cert.bound >= target,
                       status="ok" if cert.bound >= target else "below-target")
        cp = row["C_paper"]
        row["bound_paper"] = (assouad_bound(fam.K, fam.params["gamma_paper"], cp).bound
                              if cp < 1 else None)
        rows.append(row)
    return {"schema_version": SCHEMA_VERSION, "d": d, "constant": const, "rate": rate,
            "rows": rows}


# ---------------------------------------------------------------------------
# report files


def result_csv(result):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "rep", "seed", "loss"])
    for p in result.per_n:
        for rep, seed, loss in zip(p.reps, p.seeds, p.losses):
            writer.writerow([p.n, rep, seed, repr(loss)])
    return buf.getvalue()


def _svg_plot(result, target_slope, width=640, height=420, pad=60):
    ns = np.array([p.n for p in result.per_n], dtype=float)
    ms = np.array([p.mean for p in result.per_n], dtype=float)
    lx, ly = np.log10(ns), np.log10(ms)
    fit_y = (result.intercept + result.slope * np.log(ns)) / math.log(10)
    guide_y = ly.mean() + target_slope * (lx - lx.mean())
    ymin = min(ly.min(), fit_y.min(), guide_y.min())
    ymax = max(ly.max(), fit_y.max(), guide_y.max())
    xmin, xmax = lx.min(), lx.max()
    xspan = max(xmax - xmin, 1e-9)
    yspan = max(ymax - ymin, 1e-9)

    def px(v):
        return pad + (v - xmin) / xspan * (width - 2 * pad)

    def py(v):
        return height - pad - (v - ymin) / yspan * (height - 2 * pad)

    def pts(xs, ys):
        return " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="black"/>',
        f'<polyline class="fit" points="{pts(lx, fit_y)}" fill="none" stroke="steelblue" '
        'stroke-width="2"/>',
        f'<polyline class="guide" points="{pts(lx, guide_y)}" fill="none" stroke="gray" '
        'stroke-dasharray="6,4"/>',
    ]
    for a, b in zip(lx, ly):
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="4" fill="black"/>')
    out.append(f'<text x="{width / 2:.0f}" y="{height - 15}" text-anchor="middle">log10 n</text>')
    out.append(f'<text x="15" y="{height / 2:.0f}" transform="rotate(-90 15 {height / 2:.0f})" '
               'text-anchor="middle">log10 mean squared Hellinger loss</text>')
    out.append(f'<text x="{pad}" y="{pad - 10}">fitted slope {result.slope:.3f}, '
               f'guide slope {target_slope:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _png_plot(result, target_slope, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = np.array([p.n for p in result.per_n], dtype=float)
    ms = np.array([p.mean for p in result.per_n])
    se = np.array([p.se for p in result.per_n])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ns, ms, yerr=2 * se, fmt="o", color="black", label="mean loss (2 s.e.)")
    ax.plot(ns, np.exp(result.intercept) * ns**result.slope, color="steelblue",
            label=f"fit, slope {result.slope:.3f}")
    gm = math.exp(np.mean(np.log(ms)))
    ax.plot(ns, gm * (ns / math.exp(np.mean(np.log(ns)))) ** target_slope, "--", color="gray",
            label=f"guide, slope {target_slope:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("squared Hellinger risk")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit_report(result, out_dir, formats=("csv", "json", "svg", "png"), target_slope=None,
                stem="risk"):
    """Write the requested report files and return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    if target_slope is None:
        target_slope = TARGET_SLOPES.get(result.config.dim, -0.8)
    paths = {}
    for fmt in formats:
        path = os.path.join(out_dir, f"{stem}.{fmt}")
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                fh.write(result_csv(result))
        elif fmt == "json":
            with open(path, "w") as fh:
                json.dump(result.to_json(), fh, indent=2)
                fh.write("\n")
        elif fmt in ("svg", "png"):
            if len(result.per_n) < 2 or not math.isfinite(result.slope):
                raise ParameterError("plots need a fitted rate (at least three sample sizes)")
            if fmt == "svg":
                with open(path, "w") as fh:
                    fh.write(_svg_plot(result, target_slope))
            else:
                _png_plot(result, target_slope, path)
        else:
            raise ParameterError(f"unknown report format {fmt!r}")
        paths[fmt] = path
    return paths


def load_result(path):
    with open(path) as fh:
        return RiskResult.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# key = value configuration files


def parse_config_text(text):
    """Parse ``key = value`` lines (``#`` comments, ``[section]`` headers prefix keys).

    Values are read as JSON when possible (numbers, lists, quoted strings,
    ``true``/``false``) and kept as bare strings otherwise.
    """
    out = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip() + "."
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParameterError(f"config line {lineno}: empty key")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value.strip("'")
        out[section + key] = parsed
    return out


def load_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read())


def config_from_mapping(mapping):
    """Build a :class:`RiskExperimentConfig` from parsed config keys."""
    known = {"truth", "dim", "sample_sizes", "replications", "base_seed", "estimator", "metric"}
    params = {k.split(".", 1)[1]: v for k, v in mapping.items() if k.startswith("truth_params.")}
    unknown = set(mapping) - known - {k for k in mapping if k.startswith("truth_params.")}
    unknown -= {"threads", "seed", "out"}
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    if "truth" not in mapping or "sample_sizes" not in mapping:
        raise ParameterError("config needs truth and sample_sizes")
    dim = int(mapping.get("dim", 1))
    return RiskExperimentConfig(
        truth=str(mapping["truth"]),
        dim=dim,
        sample_sizes=tuple(mapping["sample_sizes"]),
        replications=int(mapping.get("replications", 10)),
        base_seed=int(mapping.get("base_seed", mapping.get("seed", 0))),
        estimator=str(mapping.get("estimator", "mle-1d" if dim == 1 else "mle-2d-tent")),
        metric=str(mapping.get("metric", "hellinger-sq")),
        truth_params=params,
    )
