"""Command-line interface: ``lcminimax <subcommand> ...``.

Exit status is 0 on success, 2 on invalid input and 3 on numeric failure.
Every JSON file written carries a ``schema_version`` field.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .density import from_json as density_from_json
from .envelopes import (
    EnvelopeSpec,
    check_env2_bound,
    envelope_value,
    estimate_envelope_constants,
    mean_zero_corpus,
)
from .errors import LcMinimaxError, NumericError, ParameterError
from .families import (
    VARIANTS,
    build_assouad_1d,
    build_assouad_ballcap,
    build_entropy_family_1d,
    build_entropy_family_d,
)
from .geometry import greedy_sphere_packing, packing_bounds
from .harness import (
    SCHEMA_VERSION,
    config_from_mapping,
    emit_report,
    load_config,
    load_result,
    lower_bound_report,
    run_risk_experiment,
    supremum_risk,
)
from .metrics import hellinger_sq, l1, l2_sq
from .mle import check_class_membership, mle_1d, mle_2d_tent

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _write_json(obj, out):
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    text = json.dumps(obj, indent=2, default=_json_default) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON ({exc})") from exc


def _load_density(path):
    obj = _read_json(path)
    return density_from_json(obj.get("density", obj))


def _read_samples(path, dim):
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParameterError(f"{path}: cannot parse samples ({exc})") from exc
    if data.shape[1] != dim:
        raise ParameterError(f"{path}: expected {dim} column(s), found {data.shape[1]}")
    return data[:, 0] if dim == 1 else data


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParameterError(f"expected comma-separated numbers, got {text!r}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_estimate(args):
    x = _read_samples(args.input, args.dim)
    if args.dim == 1:
        res = mle_1d(x, tol=args.tol)
    elif args.dim == 2:
        res = mle_2d_tent(x)
    else:
        raise ParameterError("estimation is implemented for d = 1 and d = 2")
    _write_json(res.to_json(), args.out)


def cmd_metrics(args):
    f, g = _load_density(args.f), _load_density(args.g)
    fn = {"hellinger-sq": hellinger_sq, "l2-sq": l2_sq, "l1": l1}[args.metric]
    res = fn(f, g, method=args.method, tol=args.tol, n=args.mc_samples, seed=args.seed)
    _write_json({"metric": args.metric, **res.to_json()}, args.out)


def _build_family(args):
    if args.variant == "assouad-1d":
        return build_assouad_1d(args.n, args.eps)
    if args.variant == "assouad-ballcap":
        return build_assouad_ballcap(args.d, args.n, args.eps, seed=args.seed)
    if args.eps is None:
        raise ParameterError("entropy families need --eps")
    if args.variant == "entropy-1d":
        return build_entropy_family_1d(args.eps, args.eta)
    return build_entropy_family_d(args.d, args.eps, args.eta, seed=args.seed)


def cmd_family_gen(args):
    fam = _build_family(args)
    if args.alpha is not None:
        alpha = tuple(int(c) for c in args.alpha.strip())
        if any(a not in (0, 1) for a in alpha):
            raise ParameterError("--alpha must be a string of 0/1 digits")
    else:
        alpha = fam.random_alpha(np.random.default_rng(args.seed))
    member = fam.member(alpha)
    out = {"family": fam.manifest(), "alpha": "".join(map(str, alpha)),
           "density": member.to_json()}
    if args.bits and (fam.dim == 1 or fam.variant == "assouad-ballcap"):
        out["bit_hellinger"] = fam.bit_hellinger().tolist()
    _write_json(out, args.out)


def cmd_packing(args):
    pk = greedy_sphere_packing(args.d, args.eps, seed=args.seed, proposals=args.proposals)
    lo, hi = packing_bounds(args.d, args.eps)
    pk.check()
    _write_json({"packing": pk.to_json(), "size": len(pk), "bounds": [lo, hi],
                 "within_bounds": lo <= len(pk) <= hi, "min_distance": pk.min_distance()},
                args.out)


def cmd_envelope(args):
    rng = np.random.default_rng(args.seed)
    out = {}
    A, B = estimate_envelope_constants(args.d, rng=rng)
    out["fitted"] = {"A_hat": A, "B_hat": B, "certified": False}
    if args.check:
        if args.d != 1:
            raise ParameterError("the mean-zero pointwise bound is one-dimensional")
        obj = _read_json(args.check)
        items = obj.get("densities", obj) if isinstance(obj, dict) else obj
        corpus = [density_from_json(o) for o in items]
        x0s = _floats(args.x0) if args.x0 else [v for v in np.linspace(-3, 3, 25) if v != 0]
        rows, violations = [], 0
        for i, f in enumerate(corpus):
            worst = None
            for x0 in x0s:
                ok, rep = check_env2_bound(f, x0)
                violations += not ok
                if worst is None or rep["slack"] < worst["slack"]:
                    worst = rep
            rows.append({"index": i, "min_slack": worst["slack"], "at_x0": worst["x0"],
                         "value": worst["value"]})
        out["env2_check"] = {"densities": len(corpus), "x0": x0s, "violations": violations,
                             "rows": rows}
        spec = EnvelopeSpec(1, A, B, args.xi, args.eta, "tilde-class")
        certified, env_viol = 0, 0
        for f in corpus:
            if not check_class_membership(f, args.xi, args.eta)[0]:
                continue
            certified += 1
            probes = np.linspace(*f.support, 1000)
            env_viol += int(np.sum(f.pdf(probes) > envelope_value(spec, probes)))
        out["envelope_report"] = {
            "class": {"xi": args.xi, "eta": args.eta},
            "members_in_class": certified,
            "violations_at_probes": env_viol,
            "note": "fitted constants are empirical; violations are reported, not asserted",
        }
    if args.make_corpus:
        corpus = mean_zero_corpus(args.make_corpus, rng)
        out["densities"] = [f.to_json() for f in corpus]
    _write_json(out, args.out)


def cmd_risk_sweep(args):
    mapping = load_config(args.config) if args.config else {}
    for key in ("truth", "dim", "replications", "estimator"):
        val = getattr(args, key)
        if val is not None:
            mapping[key] = val
    if args.sizes:
        mapping["sample_sizes"] = [int(v) for v in _floats(args.sizes)]
    mapping.setdefault("base_seed", args.seed)
    # an explicit --threads wins over the config file
    config_threads = int(mapping.pop("threads", 1))
    threads = args.threads if args.threads != 1 else config_threads
    out_dir = mapping.pop("out", None) or args.out or "risk-report"
    truths = mapping["truth"] if isinstance(mapping.get("truth"), list) else [mapping.get("truth")]
    results = []
    for truth in truths:
        cfg = config_from_mapping({**mapping, "truth": truth})
        res = run_risk_experiment(cfg, threads=threads)
        stem = "risk" if len(truths) == 1 else f"risk-{truth}"
        emit_report(res, out_dir, stem=stem)
        results.append(res)
    summary = {"results": [{"truth": r.config.truth, "slope": r.slope,
                            "slope_band": list(r.slope_band), "r_squared": r.r_squared}
                           for r in results],
               "supremum": supremum_risk(results)}
    _write_json(summary, f"{out_dir}/summary.json")
    _write_json(summary, None)


def cmd_lower_bound(args):
    ns = [int(v) for v in _floats(args.n)]
    rep = lower_bound_report(args.d, ns, eps=args.eps, seed=args.seed)
    rep.pop("schema_version")
    _write_json(rep, args.out)
    if any(r["status"] == "below-target" for r in rep["rows"]):
        raise NumericError("a certified bound fell below the closed-form target")


def cmd_report(args):
    res = load_result(args.input)
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    paths = emit_report(res, args.out or ".", formats=formats, target_slope=args.target_slope)
    _write_json({"files": paths}, None)


# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--out", default=None, help="output file or directory")

    p = _Parser(prog="lcminimax", description="Log-concave MLE and minimax lower bounds.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("estimate", parents=[common], help="fit the log-concave MLE")
    s.add_argument("--in", dest="input", required=True, help="CSV, one point per line")
    s.add_argument("--dim", type=int, default=1, choices=(1, 2))
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("metrics", parents=[common], help="distance between two density files")
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--metric", default="hellinger-sq", choices=("hellinger-sq", "l2-sq", "l1"))
    s.add_argument("--method", default=None,
                   choices=("exact-segment", "adaptive-quadrature", "monte-carlo"))
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--mc-samples", type=int, default=1_000_000)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("family-gen", parents=[common], help="build a lower-bound family member")
    s.add_argument("--variant", required=True, choices=VARIANTS)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--eta", type=float, default=None)
    s.add_argument("--alpha", default=None, help="bit string; random from --seed if omitted")
    s.add_argument("--bits", action="store_true", help="include per-bit Hellinger values")
    s.set_defaults(func=cmd_family_gen)

    s = sub.add_parser("packing", parents=[common], help="greedy 2*eps-separated sphere packing")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--proposals", type=int, default=None)
    s.set_defaults(func=cmd_packing)

    s = sub.add_parser("envelope", parents=[common], help="envelope constants and slack reports")
    s.add_argument("--d", type=int, default=1, choices=(1, 2, 3))
    s.add_argument("--check", default=None, help="JSON corpus of mean-zero 1-D densities")
    s.add_argument("--x0", default=None, help="comma-separated evaluation points")
    s.add_argument("--make-corpus", type=int, default=0, help="emit a random mean-zero corpus")
    s.add_argument("--xi", type=float, default=0.5, help="mean bound of the envelope class")
    s.add_argument("--eta", type=float, default=0.5, help="covariance window of the envelope class")
    s.set_defaults(func=cmd_envelope)

    s = sub.add_parser("risk-sweep", parents=[common], help="Monte Carlo risk versus n")
    s.add_argument("--config", default=None, help="key = value config file")
    s.add_argument("--truth", default=None)
    s.add_argument("--dim", type=int, default=None)
    s.add_argument("--sizes", default=None, help="comma-separated sample sizes")
    s.add_argument("--replications", type=int, default=None)
    s.add_argument("--estimator", default=None)
    s.set_defaults(func=cmd_risk_sweep)

    s = sub.add_parser("lower-bound", parents=[common], help="Assouad lower-bound report")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--n", required=True, help="comma-separated sample sizes")
    s.add_argument("--eps", type=float, default=None, help="fix eps instead of the n-rule")
    s.set_defaults(func=cmd_lower_bound)

    s = sub.add_parser("report", parents=[common], help="re-render report files from JSON")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--formats", default="csv,json,svg,png")
    s.add_argument("--target-slope", type=float, default=None)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LcMinimaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
