import json
import subprocess
import sys

import numpy as np
import pytest

from merw.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = text.strip().splitlines()
    return lines[0].split(","), np.array([[float(x) if x else np.nan for x in ln.split(",")] for ln in lines[1:]])


def test_simulate_example(capsys):
    code, out, _ = run(capsys, "simulate", "--dim", "2", "--p", "0.5", "--steps", "1000", "--seed", "7",
                       "--engine", "reduced", "--record", "positions")
    assert code == 0
    head, data = rows(out)
    assert head == ["step", "s1", "s2"]
    assert data.shape == (1000, 3)
    assert np.all(np.abs(np.diff(data[:, 1:], axis=0)).sum(axis=1) == 1)
    # reduced is the default engine
    code, default, _ = run(capsys, "simulate", "--dim", "2", "--p", "0.5", "--steps", "1000", "--seed", "7")
    assert default == out


def test_simulate_full_memory(capsys):
    code, out, _ = run(capsys, "simulate", "--dim", "1", "--p", "1", "--steps", "10", "--seed", "1")
    _, data = rows(out)
    assert np.array_equal(np.abs(data[:, 1]), data[:, 0])


def test_simulate_out_dir_and_manifest_replay(tmp_path, capsys):
    out = tmp_path / "a"
    code, _, _ = run(capsys, "simulate", "--dim", "3", "--p", "0.8", "--steps", "50", "--runs", "3",
                     "--seed", "5", "--q", "0.5", "--out", str(out))
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"] == [f"trajectory_{i}.csv" for i in range(3)]
    assert man["config"]["q"] == "0.5" and man["engine"] == "reduced"
    replay = tmp_path / "b"
    code, _, _ = run(capsys, "simulate", "--config", str(out / "manifest.json"), "--out", str(replay))
    assert code == 0
    for name in man["outputs"]:
        assert (out / name).read_bytes() == (replay / name).read_bytes()
    streams = {(out / name).read_text() for name in man["outputs"]}
    assert len(streams) == 3


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "walk.cfg"
    cfg.write_text("# walk\ndim = 2\np = 0.3\nsteps = 40\nseed = 9\n")
    _, from_file, _ = run(capsys, "simulate", "--config", str(cfg))
    _, direct, _ = run(capsys, "simulate", "--dim", "2", "--p", "0.3", "--steps", "40", "--seed", "9")
    assert from_file == direct
    _, over, _ = run(capsys, "simulate", "--config", str(cfg), "--seed", "10")
    _, direct10, _ = run(capsys, "simulate", "--dim", "2", "--p", "0.3", "--steps", "40", "--seed", "10")
    assert over == direct10 != direct
    cfg.write_text("dim = 2\ncolour = red\n")
    assert run(capsys, "simulate", "--config", str(cfg))[0] == 2


def test_csv_json_parity(tmp_path, capsys):
    base = ["simulate", "--dim", "2", "--p", "0.9", "--steps", "30", "--seed", "3"]
    _, csv_out, _ = run(capsys, *base)
    _, json_out, _ = run(capsys, *base, "--format", "json")
    data = json.loads(json_out)
    _, arr = rows(csv_out)
    assert np.array_equal(arr[:, 0], data["step"])
    assert np.array_equal(arr[:, 1:], data["position"])
    _, mcsv, _ = run(capsys, "moments", "--dim", "2", "--p", "0.7", "--n", "20")
    _, mjson, _ = run(capsys, "moments", "--dim", "2", "--p", "0.7", "--n", "20", "--format", "json")
    head, m = rows(mcsv)
    mj = json.loads(mjson)
    assert np.array_equal(m[:, head.index("cov1_1")], np.array(mj["second"])[:, 0, 0])
    assert np.array_equal(m[:, head.index("closed_cov1_1")], mj["closed_cov1_1"])


def test_moments_examples(capsys):
    code, out, _ = run(capsys, "moments", "--dim", "1", "--p", "0.75", "--n", "1")
    head, data = rows(out)
    assert code == 0 and data[0, head.index("cov1_1")] == 1
    code, out, _ = run(capsys, "moments", "--dim", "2", "--p", "0.7", "--n", "10", "--exact-enum")
    assert code == 0
    head, data = rows(out)
    rec = data[:, head.index("cov1_1")]
    assert np.allclose(data[:, head.index("closed_cov1_1")], rec, rtol=1e-10)
    assert np.allclose(data[:, head.index("enum_cov1_1")], rec, rtol=1e-14, atol=0)
    code, out, _ = run(capsys, "moments", "--dim", "2", "--p", "0.625", "--n", "100")
    assert code == 0 and "closed" not in out.splitlines()[0]


def test_moments_budget_exit_code(capsys):
    code, _, err = run(capsys, "moments", "--dim", "2", "--p", "0.5", "--n", "60", "--exact-enum")
    assert code == 3 and "budget" in err


def test_limits_examples(capsys):
    _, out, _ = run(capsys, "limits", "--dim", "1", "--p", "0.5")
    assert json.loads(out)["covariance_scale"] == 1
    _, out, _ = run(capsys, "limits", "--dim", "2", "--p", "0.9")
    data = json.loads(out)
    assert data["regime"] == "superdiffusive"
    assert data["E_norm_L_sq"] > 0 and data["vn_limit_bound"] <= 1e-10
    _, out, _ = run(capsys, "limits", "--dim", "2", "--p", "0.625")
    data = json.loads(out)
    assert data["covariance_scale"] == 0.5 and data["vn_constant"] == pytest.approx(np.pi / 4, rel=1e-15)
    _, out, _ = run(capsys, "limits", "--dim", "2", "--p", "0.625", "--format", "csv")
    assert out.splitlines()[0] == "key,value"


@pytest.mark.parametrize("argv", [
    ["simulate", "--p", "0.5", "--steps", "10"],
    ["simulate", "--dim", "2", "--p", "1.5", "--steps", "10"],
    ["simulate", "--dim", "2", "--p", "0.5", "--steps", "10", "--runs", "2"],
    ["simulate", "--dim", "2", "--p", "0.5", "--steps", "10", "--record", "checkpoints:0"],
    ["simulate", "--dim", "2", "--p", "0.5", "--steps", "10", "--engine", "fast"],
    ["limits", "--dim", "2", "--p", "abc"],
    ["frobnicate"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_verify_subset_and_report(tmp_path, capsys):
    report = tmp_path / "r.json"
    code, out, err = run(capsys, "verify", "--only", "1", "3", "10", "--seed", "42", "--out", str(report))
    assert code == 0
    assert "overall: PASS" in out and "criterion  3" in err
    data = json.loads(report.read_text())
    assert [c["id"] for c in data["criteria"]] == [1, 3, 10]
    assert data["pass"] is True


def test_verify_fault_injection(capsys):
    code, out, _ = run(capsys, "verify", "--only", "1", "--inject-fault", "oracle")
    assert code == 1 and "FAIL" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "merw", "limits", "--dim", "1", "--p", "0.5"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["regime"] == "diffusive"
