import io
import json

import numpy as np
import pytest

from ctswitch.experiments import (
    ExperimentConfig,
    bench_sequence,
    linear_fit_r2,
    run_bench,
    run_experiment_a,
    run_experiment_b,
    run_oracle_check,
    run_trials,
    trace,
)
from ctswitch.simgen import generate, load_spec
from ctswitch.switcher import SwitchConfig, make_switcher


def csv_text(fn, cfg):
    buf = io.StringIO()
    fn(cfg, stream=buf)
    return buf.getvalue()


@pytest.mark.parametrize("kwargs", [{"trials": 0}, {"alphas": ()}, {"alphas": (1.5,)}, {"threads": 0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**kwargs)


def test_experiment_a_rows_and_determinism():
    cfg = ExperimentConfig(trials=3, seed=5)
    text = csv_text(run_experiment_a, cfg)
    lines = text.splitlines()
    assert lines[0] == "t,alpha,avg_redundancy_bits"
    assert len(lines) == 1 + 900
    assert text == csv_text(run_experiment_a, cfg)


def test_experiment_b_single_trial_is_integer_trace():
    cfg = ExperimentConfig(alphas=(0.01,), trials=1, seed=2)
    rows = run_experiment_b(cfg)
    spec = load_spec()
    _, tau = trace(cfg.switch_config(spec, 0.01), generate(spec, 2))
    assert [r[2] for r in rows] == tau.tolist()
    assert rows[0][2] == 1.0


def test_threads_do_not_change_output():
    one = ExperimentConfig(trials=6, seed=1)
    two = ExperimentConfig(trials=6, seed=1, threads=2)
    assert csv_text(run_experiment_a, one) == csv_text(run_experiment_a, two)
    assert csv_text(run_experiment_b, one) == csv_text(run_experiment_b, two)


def test_redundancy_is_code_length_minus_entropy():
    cfg = ExperimentConfig(alphas=(0.1,), trials=2, seed=9)
    avg = run_trials(cfg)
    spec = load_spec()
    bits = [trace(cfg.switch_config(spec, 0.1), generate(spec, 9 + i))[0] for i in range(2)]
    np.testing.assert_allclose(avg.redundancy(0.1), (bits[0] + bits[1]) / 2 - avg.entropy, rtol=1e-12)


def test_stationary_source_redundancy_decays(tmp_path):
    doc = load_spec().to_dict()
    doc["segments"] = [dict(doc["segments"][1], length=400)]
    path = tmp_path / "one.json"
    path.write_text(json.dumps(doc))
    avg = run_trials(ExperimentConfig(spec_path=str(path), alphas=(0.01,), trials=60, seed=0))
    r = avg.redundancy(0.01)
    early, late = r[10:50].mean(), r[350:].mean()
    assert late < early
    assert late < 0.1


def test_csv_written_to_file(tmp_path):
    out = tmp_path / "b.csv"
    run_experiment_b(ExperimentConfig(alphas=(0.1,), trials=1, out=str(out)))
    assert out.read_text().splitlines()[0] == "t,alpha,avg_tau_hat"


def test_oracle_check_default_passes():
    report = run_oracle_check()
    assert report.passed
    assert report.instances == 50 and report.n == 10
    assert report.summary().startswith("PASS")


def test_oracle_check_zero_alpha_passes():
    assert run_oracle_check(8, 20, seed=3, alpha=0.0).passed


def test_oracle_check_catches_perturbation():
    report = run_oracle_check(8, 10, seed=1, perturb=1e-6)
    assert not report.passed
    assert report.summary().startswith("FAIL")


def test_oracle_check_bounds():
    with pytest.raises(ValueError):
        run_oracle_check(n_max=13)


def test_bench_small_and_pruned_label():
    rows = run_bench([100], SwitchConfig(2, 2, 0.01))
    assert rows[0][0] == 100 and rows[0][2] == "exact"
    assert rows[0][1] < 1.0
    pruned = run_bench([200], SwitchConfig(2, 2, 0.1, prune_epsilon=1e-6))
    assert "non-exact" in pruned[0][2]


def test_pruning_is_subquadratic():
    # per-step work is proportional to the live candidates, which stay bounded
    cfg = SwitchConfig(2, 2, 0.1, prune_epsilon=1e-6)
    sw = make_switcher(cfg)
    live = []
    for x in bench_sequence(4000, 2, 0):
        sw.advance(x)
        live.append(sw.v.size)
    assert sum(live[2000:]) / 2000 <= 1.5 * sum(live[1000:2000]) / 1000
    assert max(live) < 500


def test_linear_fit_r2():
    x = np.arange(10.0)
    a, b, r2 = linear_fit_r2(x, 3 + 2 * x)
    assert (a, b, r2) == pytest.approx((3, 2, 1))
