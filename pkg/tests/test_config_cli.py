import json
import math

import numpy as np
import pytest

from bellcat import cli, files
from bellcat.config import (PRESETS, ConfigError, Detectors, ExperimentConfig, load_config,
                            with_overrides)

SMALL_GRID = {"grid": {"alpha_max": 2.5, "step": 0.25}, "truncation": {"n_sim": 25, "n_mle": 8}}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_GRID))
    return str(path)


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name):
    cfg = load_config(name)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_preset_contents():
    assert load_config("paper_quoted_pc").noise_model().eff_p_c == 0.06
    ideal = load_config("ideal").noise_model()
    assert not any([ideal.cavity_loss_enabled, ideal.readout_enabled, ideal.feedback_enabled])
    assert load_config() == load_config("paper")


@pytest.mark.parametrize("payload", [
    {"bogus": 1},
    {"detectors": {"p_gg": 0.9, "extra": 2}},
    {"detectors": {"p_gg": "high"}},
    {"channels": {"readout": 1}},
    {"shots_per_setting": 2.5},
    {"shots_per_setting": 0},
    {"truncation": {"n_sim": 1}},
    {"coherence": []},
])
def test_invalid_configs_are_rejected(payload):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(payload)


def test_missing_keys_take_defaults():
    cfg = ExperimentConfig.from_dict({"detectors": {"p_c": 0.05}})
    assert cfg.detectors == Detectors(p_c=0.05)
    assert cfg.coherence == ExperimentConfig().coherence


def test_overrides():
    cfg = with_overrides(ExperimentConfig(), seed=9, shots=100)
    assert (cfg.master_seed, cfg.shots_per_setting) == (9, 100)
    assert with_overrides(cfg) == cfg


def test_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(p))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.json"))


def test_blob_hash_matches_git():
    # git hash-object of "hello\n"
    assert files.blob_sha1(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_table_round_trip_and_tamper_detection(tmp_path):
    path = tmp_path / "t.csv"
    rows = np.array([[0.1, 1 / 3], [2.0, -math.pi]])
    files.write_table(path, "demo", ["a", "b"], rows, {"k": 1})
    kind, cols, meta, back = files.read_table(path)
    assert (kind, cols, meta) == ("demo", ["a", "b"], {"k": 1})
    np.testing.assert_array_equal(back, rows)
    path.write_text(path.read_text().replace("0.10000000000000001", "0.2"))
    with pytest.raises(files.DataFileError):
        files.read_table(path)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_width_mismatch_is_rejected(tmp_path):
    with pytest.raises(files.DataFileError):
        files.write_table(tmp_path / "t.csv", "demo", ["a"], [[1, 2]], {})


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert all(json.loads(out).values())


@pytest.mark.parametrize("argv", [
    ["wigner"],
    ["nonsense", "--out", "x"],
    ["bell", "--test", "3", "--out", "x"],
    ["bell", "--betas", "a,b", "--out", "x"],
    ["wigner", "--config", "no-such-preset", "--out", "x"],
    ["reconstruct", "--out", "x"],
    ["wigner", "--state", "fock-entangled", "--out", "x"],
])
def test_usage_errors_exit_1(capsys, tmp_path, argv):
    argv = [str(tmp_path / a) if a == "x" else a for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert json.loads(err)["kind"] == "usage"


def test_truncation_failure_exits_2(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"truncation": {"n_sim": 8}}))
    code, _, err = run(capsys, "wigner", "--config", cfg, "--beta", 3, "--exact",
                       "--out", tmp_path / "w.csv")
    assert code == 2
    assert json.loads(err)["kind"] == "truncation"
    assert not (tmp_path / "w.csv").exists()


def test_sampled_wigner_is_reproducible(capsys, tmp_path, small_config):
    outs = []
    for name in ("a.csv", "b.csv"):
        code, _, _ = run(capsys, "wigner", "--config", small_config, "--seed", 5,
                         "--shots", 40, "--beta", 1.0, "--out", tmp_path / name)
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    kind, cols, meta, rows = files.read_table(tmp_path / "a.csv")
    assert cols == cli.GRID_COLUMNS and meta["config"]["master_seed"] == 5
    assert rows.shape == (21 * 21, 7)


def test_wigner_then_reconstruct(capsys, tmp_path, small_config):
    grid = tmp_path / "g.csv"
    code, _, _ = run(capsys, "wigner", "--config", small_config, "--exact", "--ideal-state",
                     "--ideal-detection", "--beta", 1.0, "--out", grid)
    assert code == 0
    code, out, _ = run(capsys, "reconstruct", "--config", small_config, "--input", grid,
                       "--out", tmp_path / "rho.csv")
    assert code == 0
    assert json.loads(out)["fidelity"] > 0.99
    report = json.loads((tmp_path / "rho.csv.json").read_text())
    data = json.dumps(report["data"], sort_keys=True).encode()
    assert report["content_sha1"] == files.blob_sha1(data)


def test_reconstruct_rejects_foreign_file(capsys, tmp_path):
    path = tmp_path / "e.csv"
    run(capsys, "entropy", "--out", path)
    code, _, _ = run(capsys, "reconstruct", "--input", path, "--out", tmp_path / "r.csv")
    assert code == 1


def test_bell_exact_and_sampled(capsys, tmp_path):
    code, _, _ = run(capsys, "bell", "--exact", "--betas", "1.0", "--out", tmp_path / "e.csv")
    assert code == 0
    rows = files.read_table(tmp_path / "e.csv")[3]
    assert rows[0, 7] == pytest.approx(2.30, abs=0.01)
    code, _, _ = run(capsys, "bell", "--test", 2, "--betas", "0,1.0", "--shots", 500,
                     "--out", tmp_path / "s.csv")
    assert code == 0
    rows = files.read_table(tmp_path / "s.csv")[3]
    # pooled row plus four permutations per cell
    assert rows.shape == (10, len(cli.BELL_COLUMNS))
    assert list(rows[:5, 2]) == [0, 1, 2, 3, 4]


def test_models_and_entropy_tables(capsys, tmp_path):
    assert run(capsys, "models", "--out", tmp_path / "m.csv")[0] == 0
    _, cols, meta, rows = files.read_table(tmp_path / "m.csv")
    k = cols.index("t1_O_pred")
    assert rows[np.argmin(abs(rows[:, 0] - 1.0)), k] == pytest.approx(2.35, abs=0.05)
    assert meta["gamma"] == pytest.approx(1.24 / 55)
    assert run(capsys, "entropy", "--points", 5, "--out", tmp_path / "s.csv")[0] == 0
    rows = files.read_table(tmp_path / "s.csv")[3]
    assert rows[0, 1] == 0 and np.all(np.diff(rows[:, 1]) > 0)


def test_backaction_files(capsys, tmp_path, small_config):
    code, out, _ = run(capsys, "backaction", "--config", small_config, "--beta", 1.0,
                       "--out", tmp_path / "b")
    assert code == 0
    res = json.loads(out)
    assert res["plus"]["probability"] + res["minus"]["probability"] == pytest.approx(1)
    assert files.read_table(tmp_path / "b.plus")[2]["outcome"] == 1
