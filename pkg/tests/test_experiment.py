import json
import os

import numpy as np
import pytest

from csremote import DomainError, ExperimentConfig, load_config, run_monte_carlo, run_single
from csremote.experiment import (COEF_HEADER, TIMESERIES_HEADER, ExperimentContext, config_from_dict,
                                 emit_outputs, format_number, read_timeseries, run_trials, summarize)

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "paper.json")

SMALL = dict(A=((0.0, 1.0), (-0.5, -1.5)), b=(0.0, 1.0), c=(-0.5, 1.0), x0=(0.0, 0.0),
             T=2 * np.pi, M=10, reference=(("sin", 2, 1.0), ("cos", 5, 1.0)), K=9,
             mu1=1e-4, mu2=1e-4, trials=4, seed=7, max_iters=3000, output_points=50,
             batch_size=3)


def small(**changes):
    return ExperimentConfig(**{**SMALL, **changes})


class TestConfig:
    def test_paper_sections(self):
        sin = load_config(CONFIG, "sinusoid")
        assert sin.T == pytest.approx(2 * np.pi) and sin.M == 100 and sin.K == 67
        assert sin.space().N == 201 and sin.trials == 1000 and not sin.random_x0
        step = load_config(CONFIG, "step")
        assert step.random_x0 and step.sample_count == 201
        assert step.A == sin.A

    def test_effective_weights(self):
        cfg = small()
        h = cfg.space().h
        assert cfg.effective_weights() == pytest.approx((4e-4 / h, 1e-4))
        assert small(weight_convention="direct").effective_weights() == (1e-4, 1e-4)

    def test_validation(self):
        with pytest.raises(DomainError):
            small(K=30)
        with pytest.raises(DomainError):
            small(reference=(("sin", 11, 1.0),))
        with pytest.raises(DomainError):
            small(A=((0.0, 1.0), (1.0, 0.0)))
        with pytest.raises(DomainError):
            small(weight_convention="other")
        with pytest.raises(DomainError):
            config_from_dict({"A": [[-1.0]], "b": [1.0], "c": [1.0], "x0": "gaussian"})

    def test_missing_section(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"a": {}}))
        with pytest.raises(DomainError):
            load_config(path, "b")


class TestTrials:
    def test_trivial_zero_reference(self):
        cfg = small(reference=(), K=None, trials=1)
        rec = run_single(cfg, 0)
        assert not rec.failed
        assert not np.any(rec.theta_l2) and not np.any(rec.theta_l1l2)
        for d in ("l2", "l1l2", "trunc"):
            assert not np.any(rec.err[d])

    def test_record_contents(self):
        cfg = small()
        rec = run_single(cfg, 3)
        assert rec.plan_indices.size == 9 and rec.card_l2 == cfg.space().N
        assert 0 < rec.card_l1l2 < cfg.space().N
        assert set(rec.err) == {"l2", "l1l2", "trunc"} and rec.err["l2"].shape == (50,)

    def test_seed_is_trial_id(self):
        cfg = small()
        recs = run_trials(cfg)
        assert [r.trial_id for r in recs] == [7, 8, 9, 10]
        again = run_single(cfg, 9)
        # same trial, different batch shape: equal up to BLAS rounding
        np.testing.assert_allclose(again.theta_l1l2, recs[2].theta_l1l2, atol=1e-9)

    def test_random_x0(self):
        cfg = small(x0="random-x0", K=None, reference=(("const", 0, 1.0),))
        ctx = ExperimentContext(cfg)
        np.testing.assert_array_equal(ctx.x0_for(5), np.random.default_rng([5, 1]).standard_normal(2))
        recs = run_trials(cfg, ctx)
        assert not np.array_equal(recs[0].x0, recs[1].x0)

    def test_paper_single_trial(self):
        cfg = load_config(CONFIG, "sinusoid").replace(trials=1)
        rec = run_single(cfg, 0)
        assert rec.card_l2 == 201 and rec.card_l1l2 < 201
        mags = np.sort(np.abs(rec.theta_l2))[::-1]
        assert mags[3] > 5 * mags[4]

    def test_failed_trials_excluded(self):
        cfg = small()
        ctx = ExperimentContext(cfg)
        recs = run_trials(cfg, ctx)
        recs[1].failed, recs[1].reason = True, "injected"
        s = summarize(cfg, recs, ctx)
        ok = [r for i, r in enumerate(recs) if i != 1]
        assert s.stats["failed"] == 1 and s.stats["failures"][0]["reason"] == "injected"
        np.testing.assert_allclose(s.mean_err["l1l2"], np.mean([r.err["l1l2"] for r in ok], axis=0))


class TestSummary:
    def test_single_trial_summary(self):
        cfg = small(trials=1)
        s = run_monte_carlo(cfg)
        rec = s.records[0]
        assert s.stats["card_l1l2_mean"] == rec.card_l1l2
        assert s.stats["residual_l1l2_mean"] == rec.residual_l1l2
        np.testing.assert_array_equal(s.mean_err["trunc"], rec.err["trunc"])

    def test_zero_trials(self, tmp_path):
        with pytest.raises(DomainError):
            run_monte_carlo(small(trials=0))
        with pytest.raises(DomainError):
            emit_outputs(None, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_workers_do_not_change_results(self):
        cfg = small(trials=5, batch_size=2)
        serial = run_monte_carlo(cfg, workers=1)
        pooled = run_monte_carlo(cfg, workers=2)
        assert serial.stats == pooled.stats
        for d in ("l2", "l1l2", "trunc"):
            np.testing.assert_array_equal(serial.mean_err[d], pooled.mean_err[d])


@pytest.fixture(scope="module")
def summary():
    return run_monte_carlo(small())


class TestEmit:
    def test_files_and_headers(self, summary, tmp_path):
        paths = emit_outputs(summary, tmp_path)
        ts = paths["timeseries.csv"].read_text().splitlines()
        assert ts[0] == ",".join(TIMESERIES_HEADER)
        assert ts[0] == "t,r,y_l2,y_l1l2,y_trunc,err_l2,err_l1l2,err_trunc"
        assert len(ts) == 51
        coef = paths["coefficients.csv"].read_text().splitlines()
        assert coef[0] == ",".join(COEF_HEADER) == "m,abs_theta_l2,abs_theta_l1l2"
        assert len(coef) == 22 and coef[1].startswith("-10,")
        doc = json.loads(paths["summary.json"].read_text())
        assert doc["seed"] == 7 and doc["config"]["K"] == 9
        assert doc["statistics"]["trials"] == 4
        assert "e" not in "".join(ts[1:]).lower()

    def test_round_trip(self, summary, tmp_path):
        emit_outputs(summary, tmp_path)
        back = read_timeseries(tmp_path / "timeseries.csv")
        np.testing.assert_allclose(back["t"], summary.t, rtol=1e-11, atol=1e-300)
        for d in ("l2", "l1l2", "trunc"):
            np.testing.assert_allclose(back[f"err_{d}"], summary.mean_err[d], rtol=1e-11, atol=1e-300)
            np.testing.assert_allclose(back[f"y_{d}"], summary.mean_y[d], rtol=1e-11, atol=1e-300)
        for v in summary.mean_err["l1l2"]:
            assert float(format_number(v)) == float(format_number(float(format_number(v))))

    def test_byte_identical_reruns(self, tmp_path):
        a = emit_outputs(run_monte_carlo(small()), tmp_path / "a")
        b = emit_outputs(run_monte_carlo(small()), tmp_path / "b")
        for name in a:
            assert a[name].read_bytes() == b[name].read_bytes()

    def test_unwritable_target(self, summary, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            emit_outputs(summary, blocker / "sub")
        assert blocker.read_text() == "x"


def test_format_number():
    assert format_number(0.1) == "0.1"
    assert format_number(-0.0) == "0"
    assert format_number(1.23456789012345e-7) == "0.000000123456789012"
    assert format_number(2.0 / 3.0) == "0.666666666667"
    assert format_number(123456789.123456) == "123456789.123"
