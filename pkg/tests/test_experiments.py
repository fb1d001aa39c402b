import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bernlab.experiments import (
    ConfigError,
    ExperimentConfig,
    PRESETS,
    log_decay_profile,
    mean_sup_error,
    phi_consistency,
    run,
    sign_recovery,
)
from bernlab.profiles import Profile, profile_to_json


def _cfg(**kw):
    return ExperimentConfig(**kw)


def test_custom_explicit_half_brackets_oracle():
    cfg = _cfg(
        preset="custom",
        profile=profile_to_json(Profile.explicit([0.5])),
        n_grid=[2],
        reps=20000,
        seed=11,
    )
    row = run(cfg).rows[0]
    assert row.low - 3 * row.std_err <= 0.25 <= row.high + 3 * row.std_err


def test_identical_config_identical_bytes():
    cfg = _cfg(
        preset="custom",
        profile=profile_to_json(Profile.step(0.2, 20)),
        n_grid=[10, 20],
        reps=500,
        seed=3,
    )
    assert run(cfg).to_csv_bytes() == run(cfg).to_csv_bytes()


def test_worker_count_does_not_change_bytes():
    base = dict(
        preset="appendix_a1",
        q_values=[0.1, 0.05],
        n_grid=[50, 100],
        rep_counts=[64],
        seed=7,
    )
    a = run(_cfg(**base, workers=1)).to_csv_bytes()
    b = run(_cfg(**base, workers=8)).to_csv_bytes()
    assert a == b


def test_a1_row_count_and_theory():
    t = run(
        _cfg(
            preset="appendix_a1",
            q_values=[0.1, 0.2],
            n_grid=[50, 100],
            rep_counts=[50, 100],
            seed=5,
        )
    )
    assert len(t.rows) == 2 * 2 * 2
    r = t.rows[0]
    assert r.theory == pytest.approx(min(1.0, math.sqrt(0.1 * math.log(100) / 50)))
    assert any("appendix_a1" in n for n in t.notes)


def test_a1_default_grid_shape():
    cfg = _cfg(preset="appendix_a1", rep_counts=[8], n_grid=[25], reps=8)
    t = run(cfg)
    assert len(t.rows) == 6  # six q values
    header = t.to_csv_bytes().decode().splitlines()
    assert header[-7].startswith("experiment,profile")


def test_a2_rows_and_average_beats_eme_for_large_k():
    t = run(
        _cfg(
            preset="appendix_a2",
            distributions=["beta22"],
            k_values=[100],
            n_grid=[64],
            reps=300,
            seed=6,
        )
    )
    by_est = {r.estimator: r for r in t.rows}
    assert set(by_est) == {"eme", "average"}
    assert by_est["average"].low < by_est["eme"].low


def test_a2_one_over_n_sequence_is_deterministic():
    t1 = run(_cfg(preset="appendix_a2", distributions=["one_over_n"], k_values=[10],
                  n_grid=[8], reps=100, seed=6))
    t2 = run(_cfg(preset="appendix_a2", distributions=["one_over_n"], k_values=[10],
                  n_grid=[8], reps=100, seed=6))
    assert t1.to_csv_bytes() == t2.to_csv_bytes()


def test_sign_recovery_rows():
    prof = log_decay_profile(500)
    rows = sign_recovery(prof, 4, [100, 500], 500, seed=13)
    assert [r.estimator for r in rows] == ["majority_vote(J=100)", "majority_vote(J=500)"]
    for r in rows:
        assert r.low >= r.theory - 3 * r.std_err
    # empirical failure frequency grows with the horizon
    assert rows[1].low >= rows[0].low - 3 * (rows[0].std_err + rows[1].std_err)


def test_sign_recovery_zero_profile():
    rows = sign_recovery(Profile.explicit([0.0] * 50), 4, [50], 300, seed=2)
    assert rows[0].low == 0.0  # all-ones column impossible


def test_phi_consistency_series_columns():
    rows = phi_consistency([Profile.constant(0.3)], [4], 200, 50, seed=9)
    by_est = {r.estimator: r for r in rows}
    assert by_est["series_halfn"].low == pytest.approx(200 * 0.3**2)
    assert by_est["series_n"].low == pytest.approx(200 * 0.3**4)
    assert 0.0 <= by_est["phi_flag"].low <= 1.0


def test_phi_flag_frequency_decays_for_power_law():
    # floor(n/2) = 5 > learnability index 2: convergent series, rare flags
    rows = phi_consistency([Profile.power_law(2.0)], [10], 2000, 60, seed=4)
    flag = [r for r in rows if r.estimator == "phi_flag"][0]
    assert flag.low <= 0.2


def test_mean_sup_error_matches_known_scale():
    r = mean_sup_error(Profile.constant(0.3), "eme", 128, 16, 400, seed=3)
    # max over 16 columns of |Bin(128,0.3)/128 - 0.3|: around 2.3 sigma
    sigma = math.sqrt(0.3 * 0.7 / 128)
    assert 1.5 * sigma <= r["mean"] <= 3.5 * sigma


def test_a1_slope_in_sqrt_regime():
    # the three largest levels sit in the sqrt(1/n) regime at desk scale;
    # the tiny levels (0.01 and below) are still Poisson-dominated there
    t = run(
        _cfg(
            preset="appendix_a1",
            q_values=[0.2, 0.1, 0.05],
            n_grid=[100, 400, 1600, 6400],
            rep_counts=[2000],
            seed=21,
        )
    )
    for q in (0.2, 0.1, 0.05):
        rows = sorted(
            (r for r in t.rows if f"level={q}" in r.profile), key=lambda r: r.n
        )
        slope = np.polyfit(
            np.log([r.n for r in rows]), np.log([(r.low + r.high) / 2 for r in rows]), 1
        )[0]
        assert -0.6 <= slope <= -0.4, (q, slope)


def test_minimax_sweep_rows():
    t = run(_cfg(preset="minimax_sweep", t_values=[2.0], ratio_values=[math.exp(2)],
                 n_grid=[256, 1024], seed=1))
    assert len(t.rows) == 2
    assert all(r.estimator == "minimax_lower_bound" for r in t.rows)
    assert t.rows[0].low >= t.rows[1].low  # bound shrinks with more samples


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(preset="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(preset="custom", n_grid=[10, 10])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({"preset": "custom", "bogus": 1})
    with pytest.raises(ConfigError):
        run(ExperimentConfig(preset="custom"))  # profile required


def test_manifest_and_write(tmp_path):
    out = tmp_path / "r.csv"
    cfg = _cfg(
        preset="custom",
        profile=profile_to_json(Profile.explicit([0.5])),
        n_grid=[2],
        reps=50,
        seed=1,
        out=str(out),
    )
    table = run(cfg)
    man = json.loads((tmp_path / "r.csv.manifest.json").read_text())
    assert man["config_hash"] == cfg.config_hash()
    assert man["rows"] == len(table.rows)
    assert "numpy" in man["versions"]
    text = out.read_text()
    assert f"config_hash={cfg.config_hash()}" in text


def test_hash_ignores_out_and_workers():
    a = _cfg(preset="minimax_sweep", seed=1, workers=1)
    b = _cfg(preset="minimax_sweep", seed=1, workers=8, out="x.csv")
    assert a.config_hash() == b.config_hash()


# -- CLI --------------------------------------------------------------------


def _cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "bernlab.cli", *args], capture_output=True, text=True
    )


def test_cli_functionals():
    r = _cli("functionals", "--profile", '{"family":"step","params":{"level":0.1,"size":100}}')
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["S"]["value"] == pytest.approx(0.1 * math.log(100))
    assert out["T"]["value"] == pytest.approx(2.0)


def test_cli_oracle_and_simulate_agree():
    prof = '{"family":"explicit","params":{"values":[0.5]}}'
    r1 = _cli("oracle", "--profile", prof, "--n", "2")
    assert r1.returncode == 0
    v = json.loads(r1.stdout)["value"]
    r2 = _cli("simulate", "--profile", prof, "--n", "2", "--reps", "20000", "--seed", "4")
    d = json.loads(r2.stdout)
    assert d["low"] - 3 * d["std_err"] <= v <= d["high"] + 3 * d["std_err"]


def test_cli_bounds():
    r = _cli("bounds", "--profile", '{"family":"explicit","params":{"values":[1e-9]}}', "--n", "10")
    assert r.returncode == 0
    assert json.loads(r.stdout)["regime"] == "dormant"


def test_cli_minimax():
    r = _cli("minimax", "--t", "2", "--ratio", str(math.exp(math.e)), "--n", "1024")
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["J_plus_1"] == 230


def test_cli_experiment_writes_csv(tmp_path):
    out = tmp_path / "mm.csv"
    r = _cli("experiment", "minimax_sweep", "--out", str(out))
    assert r.returncode == 0
    assert out.exists()
    assert (tmp_path / "mm.csv.manifest.json").exists()


def test_cli_experiment_with_config_file(tmp_path):
    cfg = {
        "profile": profile_to_json(Profile.explicit([0.5])),
        "n_grid": [2],
        "reps": 200,
        "seed": 6,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out.csv"
    r = _cli("experiment", "custom", "--config", str(path), "--out", str(out))
    assert r.returncode == 0
    body = out.read_text().splitlines()
    assert body[-1].startswith("custom,")


def test_cli_exit_code_config_error():
    r = _cli("functionals", "--profile", "{not json")
    assert r.returncode == 2


def test_cli_exit_code_certification_failure():
    r = _cli("simulate", "--profile", '{"family":"const","params":{"value":0.3}}', "--n", "4")
    assert r.returncode == 3


def test_cli_unknown_preset_usage_error():
    r = _cli("experiment", "nonsense")
    assert r.returncode == 2


def test_all_presets_listed():
    assert set(PRESETS) == {
        "appendix_a1",
        "appendix_a2",
        "sign_recovery",
        "phi_consistency",
        "minimax_sweep",
        "custom",
    }
