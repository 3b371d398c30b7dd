"""Command-line interface: exit codes, CSV layout, manifests, artifact roundtrips."""

import copy
import csv
import json
import re
import subprocess
import sys

import pytest

from rlqite.cli import DEFAULTS, config_sha, main, parse_beta_grid

MANIFEST_RE = re.compile(
    r"^# manifest schema=[a-z-]+/v1 config_sha=[0-9a-f]{12} "
    r"seed=\d+ deterministic=(true|false)( [a-zA-Z_]+=\S+)*$"
)


def write_config(tmp_path, name="config.json", **overrides):
    cfg = {}
    for key, value in overrides.items():
        cfg[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    assert MANIFEST_RE.match(lines[0]), lines[0]
    rows = list(csv.reader(lines[1:]))
    return lines[0], rows[0], rows[1:]


def tiny_tfim(tmp_path, **extra):
    base = dict(
        num_qubits=2,
        num_trotter_steps=1,
        beta=0.3,
        episode_length=2,
        train={
            "iterations": 2,
            "num_evaluators": 2,
            "update_steps": 2,
            "hidden": [8],
        },
    )
    base.update(extra)
    return write_config(tmp_path, **base)


def test_replay_list(capsys):
    assert main(["replay-list"]) == 0
    out = capsys.readouterr().out
    assert "table2: model=tfim" in out
    assert "table3: model=sk" in out and "15 couplings" in out
    assert "table4: model=sk" in out and "6 steps x 15 terms" in out


def test_missing_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_run_writes_trace_and_summary(tmp_path):
    cfg = write_config(tmp_path, num_qubits=2, num_trotter_steps=2, beta=0.5)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0

    manifest, header, rows = read_csv(out / "run_summary.csv")
    assert "schema=run-summary/v1" in manifest
    assert "e_gs=-2.23606797749979" in manifest
    assert header == ["beta", "scheme", "E", "fidelity", "P_gs", "eps_alg_final"]
    assert len(rows) == 1
    beta, scheme, energy, fid, pgs, eps = rows[0]
    assert beta == "0.5" and scheme == "standard"
    assert -2.3 < float(energy) < 0.0
    assert 0.0 < float(fid) <= 1.0 and 0.0 <= float(pgs) <= 1.0
    assert float(eps) >= 0.0

    manifest, header, rows = read_csv(out / "trace_standard_b0.5.csv")
    assert "schema=qite-trace/v1" in manifest
    assert header == ["k", "term_label", "energy", "alg_error", "fidelity"]
    assert [r[0] for r in rows] == [str(k) for k in range(1, 7)]
    assert {r[1] for r in rows} == {"X1", "X2", "Z1Z2"}


def test_run_beta_grid(tmp_path):
    cfg = write_config(tmp_path, num_qubits=2, num_trotter_steps=2)
    out = tmp_path / "out"
    code = main(
        ["run", "--config", cfg, "--out", str(out), "--beta-grid", "0.2:0.4:0.1"]
    )
    assert code == 0
    _, _, rows = read_csv(out / "run_summary.csv")
    assert [r[0] for r in rows] == ["0.2", "0.3", "0.4"]
    for beta in ("0.2", "0.3", "0.4"):
        assert (out / f"trace_standard_b{beta}.csv").exists()


def test_run_replay_matches_frozen_error(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--scheme", "replay", "--out", str(out)]) == 0
    _, _, rows = read_csv(out / "run_summary.csv")
    assert rows[0][1] == "replay"
    assert float(rows[0][5]) == pytest.approx(0.0066696840862419116, abs=1e-9)


def test_run_rejects_bad_configs(tmp_path, capsys):
    bad_key = write_config(tmp_path, name="a.json", bogus=1)
    assert main(["run", "--config", bad_key, "--out", str(tmp_path / "o1")]) == 2
    assert "bogus" in capsys.readouterr().err

    bad_json = tmp_path / "b.json"
    bad_json.write_text("{broken")
    assert main(["run", "--config", str(bad_json)]) == 2

    mismatch = write_config(tmp_path, name="c.json", num_trotter_steps=3)
    code = main(["run", "--config", mismatch, "--scheme", "replay"])
    assert code == 2
    assert "replay schedule has 4 steps" in capsys.readouterr().err

    assert main(["run", "--beta-grid", "nope"]) == 2
    assert main(["run", "--seed", "-1"]) == 2
    assert main(["run", "--scheme", "trained"]) == 2
    unknown_train = write_config(tmp_path, name="d.json", train={"warmup": 1})
    assert main(["run", "--config", unknown_train]) == 2


def test_run_numeric_failure_exit_code(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        model="sk",
        num_qubits=6,
        beta=5.0,
        num_trotter_steps=6,
        negative_norm_policy="error",
    )
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 3
    err = capsys.readouterr().err
    assert "numeric failure" in err
    assert "beta=5" in err and "op " in err


def test_train_artifacts_and_deterministic_rerun(tmp_path):
    cfg = tiny_tfim(tmp_path)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["train", "--config", cfg, "--deterministic", "--out", str(out1)]) == 0
    assert main(["train", "--config", cfg, "--deterministic", "--out", str(out2)]) == 0

    manifest, header, rows = read_csv(out1 / "learning_curve.csv")
    assert "schema=learning-curve/v1" in manifest
    assert "deterministic=true" in manifest
    assert header == ["iteration", "mean_reward", "best_E", "wall_time_s"]
    assert [r[0] for r in rows] == ["0", "1"]
    assert all(r[3] == "0.0" for r in rows)

    best = json.loads((out1 / "best_schedule.json").read_text())
    assert best["model"] == "tfim" and best["num_qubits"] == 2
    labels = {lab for row in best["rows"] for lab in row}
    assert labels <= {"X1", "X2", "Z1Z2"}
    assert best["best_energy"] <= best["e_std"] + 1e-12

    stored = json.loads((out1 / "manifest.json").read_text())
    assert f"config_sha={stored['config_sha']}" in manifest

    # identical config and seed reproduce the artifacts byte for byte
    for name in ("learning_curve.csv", "checkpoint.bin", "best_schedule.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_trained_scheme_and_best_schedule_replay(tmp_path):
    cfg = tiny_tfim(tmp_path)
    train_out = tmp_path / "train"
    assert main(["train", "--config", cfg, "--deterministic", "--out", str(train_out)]) == 0

    run_out = tmp_path / "run"
    code = main(
        [
            "run", "--config", cfg, "--out", str(run_out),
            "--scheme", "trained", "--checkpoint", str(train_out / "checkpoint.bin"),
        ]
    )
    assert code == 0
    _, _, rows = read_csv(run_out / "run_summary.csv")
    assert rows[0][1] == "trained"

    # the stored best schedule replays to the energy recorded at train time
    best = json.loads((train_out / "best_schedule.json").read_text())
    replay_out = tmp_path / "replay"
    code = main(
        [
            "run", "--config", cfg, "--out", str(replay_out),
            "--scheme", "replay", "--replay", str(train_out / "best_schedule.json"),
        ]
    )
    assert code == 0
    _, _, rows = read_csv(replay_out / "run_summary.csv")
    assert float(rows[0][2]) == pytest.approx(best["best_energy"], abs=1e-9)


def test_scaling_csv_shape(tmp_path):
    cfg = tiny_tfim(tmp_path, num_trotter_steps=2)
    out = tmp_path / "out"
    code = main(
        ["scaling", "--config", cfg, "--deterministic", "--out", str(out),
         "--n-grid", "2,3"]
    )
    assert code == 0
    manifest, header, rows = read_csv(out / "scaling.csv")
    assert "schema=scaling/v1" in manifest
    assert header == ["N", "beta", "E_std", "E_RL", "ratio", "F_std", "F_RL"]
    assert [r[0] for r in rows] == ["2", "3"]
    for row in rows:
        assert float(row[1]) > 0.0
        assert float(row[3]) <= float(row[2]) + 1e-12  # best replay never worse
        assert 0.0 < float(row[5]) <= 1.0 and 0.0 < float(row[6]) <= 1.0


def test_hamming_matrix(tmp_path):
    cfg = tiny_tfim(tmp_path)
    ckpts = []
    for seed in ("0", "1"):
        out = tmp_path / f"t{seed}"
        code = main(
            ["train", "--config", cfg, "--seed", seed, "--deterministic",
             "--out", str(out)]
        )
        assert code == 0
        ckpts.append(str(out / "checkpoint.bin"))

    out = tmp_path / "ham"
    assert main(["hamming", "--config", cfg, "--out", str(out), *ckpts]) == 0
    manifest, header, rows = read_csv(out / "hamming.csv")
    assert "schema=hamming-matrix/v1" in manifest
    assert header == ["protocol", "p0", "p1"]
    assert rows[0][0] == "p0" and rows[1][0] == "p1"
    assert rows[0][1] == "0" and rows[1][2] == "0"
    assert rows[0][2] == rows[1][1]  # symmetric

    assert main(["hamming", "--config", cfg, str(ckpts[0])]) == 2  # needs two

    other = tiny_tfim(tmp_path, num_qubits=3)
    assert main(["hamming", "--config", other, "--out", str(out), *ckpts]) == 2


def test_config_sha_ignores_output_directory():
    a = copy.deepcopy(DEFAULTS)
    b = copy.deepcopy(DEFAULTS)
    b["out"] = "somewhere/else"
    assert config_sha(a) == config_sha(b)
    b["seed"] = 1
    assert config_sha(a) != config_sha(b)


def test_parse_beta_grid_values():
    assert parse_beta_grid("0.2:0.4:0.1") == [0.2, 0.3, 0.4]
    grid = parse_beta_grid("0.1:1.5:0.1")
    assert len(grid) == 15
    assert grid[0] == 0.1 and grid[-1] == 1.5
    from rlqite.errors import ParseError

    with pytest.raises(ParseError):
        parse_beta_grid("0.1:1.5")
    with pytest.raises(ParseError):
        parse_beta_grid("a:b:c")
    with pytest.raises(ParseError):
        parse_beta_grid("1.0:0.5:0.1")


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rlqite.cli", "replay-list"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "table2" in proc.stdout
