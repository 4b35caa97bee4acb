import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lcminimax import harness
from lcminimax.errors import DegenerateSampleError, NumericError, ParameterError
from lcminimax.families import C0
from lcminimax.harness import (
    SCHEMA_VERSION,
    RiskExperimentConfig,
    RiskResult,
    config_from_mapping,
    emit_report,
    fit_rate,
    fit_rate_band,
    load_result,
    lower_bound_report,
    make_truth,
    parse_config_text,
    run_risk_experiment,
    stable_seed,
    supremum_risk,
)


@pytest.fixture(scope="module")
def small_result():
    cfg = RiskExperimentConfig("normal", 1, (50, 100, 200, 400, 800), 3, base_seed=4)
    return run_risk_experiment(cfg)


class TestSeeds:
    def test_deterministic_and_distinct(self):
        assert stable_seed(1, 100, 0) == stable_seed(1, 100, 0)
        seeds = {stable_seed(1, n, r) for n in (10, 100, 1000) for r in range(50)}
        assert len(seeds) == 150
        assert stable_seed(1, 100, 0) != stable_seed(2, 100, 0)

    @given(st.integers(0, 2**63), st.integers(1, 10**9), st.integers(0, 10**6))
    def test_range(self, base, n, rep):
        assert 0 <= stable_seed(base, n, rep) < 2**64


class TestConfig:
    def test_validation(self):
        with pytest.raises(ParameterError):
            RiskExperimentConfig("normal", 1, (100, 50), 2)
        with pytest.raises(ParameterError):
            RiskExperimentConfig("normal", 1, (100,), 1)
        with pytest.raises(ParameterError):
            RiskExperimentConfig("uniform-ball", 2, (2, 10), 2, estimator="mle-2d-tent")
        with pytest.raises(ParameterError):
            RiskExperimentConfig("normal", 1, (100,), 2, estimator="mle-2d-tent")
        with pytest.raises(ParameterError):
            RiskExperimentConfig("normal", 1, (100,), 2, metric="l1")

    def test_parse_text(self):
        text = """
        # sweep
        truth = "normal"
        sample_sizes = [100, 200, 400]
        replications = 4   # per n
        [truth_params]
        sd = 2.0
        """
        mapping = parse_config_text(text)
        assert mapping["truth_params.sd"] == 2.0
        cfg = config_from_mapping(mapping)
        assert cfg.sample_sizes == (100, 200, 400)
        assert cfg.truth_params == {"sd": 2.0}
        assert cfg.estimator == "mle-1d"

    def test_bare_strings_and_errors(self):
        assert parse_config_text("truth = laplace")["truth"] == "laplace"
        with pytest.raises(ParameterError):
            parse_config_text("no equals sign")
        with pytest.raises(ParameterError):
            config_from_mapping({"truth": "normal", "sample_sizes": [10], "colour": 1})
        with pytest.raises(ParameterError):
            config_from_mapping({"truth": "normal"})

    def test_truths(self, tmp_path):
        assert make_truth("uniform").support == (0.0, 1.0)
        assert make_truth("uniform-ball", 2).dim == 2
        f = make_truth("laplace", scale=2.0)
        assert abs(f.integral() - 1) < 1e-9
        path = tmp_path / "f.json"
        path.write_text(json.dumps(f.to_json()))
        assert make_truth("density-file", 1, path=str(path)).knots.size == f.knots.size
        with pytest.raises(ParameterError):
            make_truth("cauchy")
        with pytest.raises(ParameterError):
            make_truth("normal", 2)


class TestRiskExperiment:
    def test_bit_identical_reruns(self):
        cfg = RiskExperimentConfig("uniform", 1, (100,), 2, base_seed=7)
        a, b = run_risk_experiment(cfg), run_risk_experiment(cfg)
        assert a.to_json() == b.to_json()

    def test_threads_match_serial(self):
        cfg = RiskExperimentConfig("laplace", 1, (40, 80, 160), 4, base_seed=3)
        a = run_risk_experiment(cfg, threads=1)
        b = run_risk_experiment(cfg, threads=3)
        assert json.dumps(a.to_json()) == json.dumps(b.to_json())

    def test_loss_decreases(self):
        cfg = RiskExperimentConfig("normal", 1, (10, 1000), 10, base_seed=2)
        res = run_risk_experiment(cfg)
        assert res.per_n[0].mean > res.per_n[1].mean
        assert all(0 <= v <= 2 for p in res.per_n for v in p.losses)
        assert math.isnan(res.slope)

    def test_seeds_recorded(self, small_result):
        for p in small_result.per_n:
            assert p.seeds == tuple(stable_seed(4, p.n, r) for r in p.reps)
            assert p.failures == 0

    def test_failures_excluded_then_abort(self, monkeypatch):
        real = harness._fit
        calls = {"n": 0}

        def flaky(cfg, x):
            calls["n"] += 1
            if calls["n"] % 40 == 1:
                raise DegenerateSampleError("forced")
            return real(cfg, x)

        monkeypatch.setattr(harness, "_fit", flaky)
        cfg = RiskExperimentConfig("uniform", 1, (20, 40), 20, base_seed=1)
        res = run_risk_experiment(cfg)
        assert sum(p.failures for p in res.per_n) == 1
        assert "forced" in res.per_n[0].errors[0]

        def broken(cfg, x):
            raise DegenerateSampleError("always")

        monkeypatch.setattr(harness, "_fit", broken)
        with pytest.raises(NumericError):
            run_risk_experiment(cfg)

    def test_tent_estimator_runs(self):
        cfg = RiskExperimentConfig("uniform-ball", 2, (30, 60), 2, estimator="mle-2d-tent")
        res = run_risk_experiment(cfg)
        assert all(0 < p.mean < 1 for p in res.per_n)

    def test_supremum(self, small_result):
        cfg = RiskExperimentConfig("uniform", 1, small_result.config.sample_sizes, 3, base_seed=4)
        other = run_risk_experiment(cfg)
        sup = supremum_risk([small_result, other])
        for row, a, b in zip(sup["rows"], small_result.per_n, other.per_n):
            assert row["risk"] == max(a.mean, b.mean)
        assert "surrogate" in sup["label"]


class TestRateFit:
    def test_exact_power_laws(self):
        ns = [100, 200, 400, 800]
        slope, _, r2 = fit_rate([(n, n ** -0.8) for n in ns])
        assert abs(slope + 0.8) < 1e-12 and r2 == pytest.approx(1.0)
        slope, intercept, _ = fit_rate([(n, 3.0 * n ** (-2 / 3)) for n in ns])
        assert abs(slope + 2 / 3) < 1e-12
        assert intercept == pytest.approx(math.log(3.0))

    def test_preconditions(self):
        with pytest.raises(ParameterError):
            fit_rate([(10, 0.1), (20, 0.05)])
        with pytest.raises(ParameterError):
            fit_rate([(10, 0.1), (20, 0.0), (40, 0.01)])

    def test_band_covers_slope(self):
        rng = np.random.default_rng(0)
        pts = [(n, n ** -0.8 * math.exp(rng.normal(0, 0.05))) for n in (100, 200, 400, 800, 1600)]
        slope, _, _, (lo, hi) = fit_rate_band(pts)
        assert lo < slope < hi


class TestLowerBound:
    def test_d1_target(self):
        row = lower_bound_report(1, [10**5])["rows"][0]
        assert row["status"] == "ok"
        assert row["bound"] >= (10**5) ** (-0.8) / 28000
        assert row["gamma"] >= row["gamma_paper"]

    def test_d2_target(self):
        row = lower_bound_report(2, [10**4])["rows"][0]
        assert row["bound"] >= (15 / 16) ** 1.5 / 2000 * (10**4) ** (-2 / 3)
        assert row["gamma_above_paper"]

    def test_small_n_stays_in_regime(self):
        # with eps = n^{-1/5}/2 the closeness constant n r^3 eps^5/(2 c0) does not depend on n
        rep = lower_bound_report(1, [2, 100])
        for row in rep["rows"]:
            assert row["C_paper"] == pytest.approx((2 / 3) ** 3 / (64 * C0))
            assert row["C"] < 1 and row["status"] == "ok"

    def test_out_of_regime_with_fixed_eps(self):
        row = lower_bound_report(1, [10**6], eps=0.4)["rows"][0]
        assert row["C"] >= 1
        assert row["status"] == "out-of-regime" and row["bound"] is None

    def test_schema(self):
        rep = lower_bound_report(1, [1000])
        assert rep["schema_version"] == SCHEMA_VERSION


class TestReports:
    def test_csv(self, small_result, tmp_path):
        paths = emit_report(small_result, tmp_path, formats=("csv",))
        raw = open(paths["csv"], "rb").read()
        assert raw.startswith(b"n,rep,seed,loss\n")
        assert b"\r" not in raw
        assert raw.count(b"\n") == 1 + sum(len(p.losses) for p in small_result.per_n)

    def test_json_round_trip(self, small_result, tmp_path):
        paths = emit_report(small_result, tmp_path, formats=("json",))
        back = load_result(paths["json"])
        assert back == small_result
        assert json.load(open(paths["json"]))["schema_version"] == SCHEMA_VERSION
        assert RiskResult.from_json(small_result.to_json()) == small_result

    def test_svg_polylines(self, small_result, tmp_path):
        paths = emit_report(small_result, tmp_path, formats=("svg",))
        svg = open(paths["svg"]).read()
        assert svg.count("<polyline") == 2
        assert svg.count('class="fit"') == 1 and svg.count('class="guide"') == 1

    def test_png(self, small_result, tmp_path):
        paths = emit_report(small_result, tmp_path, formats=("png",), target_slope=-0.8)
        assert open(paths["png"], "rb").read(8) == b"\x89PNG\r\n\x1a\n"

    def test_unknown_format(self, small_result, tmp_path):
        with pytest.raises(ParameterError):
            emit_report(small_result, tmp_path, formats=("pdf",))
