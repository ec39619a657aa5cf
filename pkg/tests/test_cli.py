import json
import subprocess
import sys

import pytest

from ginvnet.cli import main
from ginvnet.data import load_dataset


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_group_listing(capsys):
    code, out, _ = run(capsys, "group", "Z4")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "group Z4: degree 4, order 4"
    assert len(lines) == 5 and "(1 2 3 4)" in lines[2]
    code, out, _ = run(capsys, "group", "S3xS2")
    assert "order 12" in out.splitlines()[0]


def test_invariants_listing(capsys):
    code, out, _ = run(capsys, "invariants", "--group", "S2", "--vars", "2", "--max-degree", "2")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("3 invariant candidates")
    assert sorted(lines[1:]) == sorted(["x1 + x2", "x1^2 + x2^2", "x1*x2"])


def test_bad_group_exit_2(capsys):
    code, _, err = run(capsys, "group", "Q9")
    assert code == 2 and err.count("\n") == 1 and err.startswith("error: ")


def test_candidate_explosion_exit_1(capsys):
    code, _, err = run(capsys, "invariants", "--group", "Z5", "--cap", "3")
    assert code == 1 and err.startswith("error: more than 3")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["reproduce", "table9"])
    assert e.value.code == 2
    assert capsys.readouterr().err.startswith("error: ")


def test_gen_data_poly_and_rerun_identical(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-data", "--task", "poly", "--poly", "PZ5", "--out", str(tmp_path), "--csv")
    assert code == 0
    path = tmp_path / "PZ5_seed444.ginvds"
    assert load_dataset(path).counts == (16, 480, 4800)
    first = path.read_bytes()
    run(capsys, "gen-data", "--task", "poly", "--poly", "PZ5", "--out", str(tmp_path))
    assert path.read_bytes() == first
    assert (tmp_path / "PZ5_seed444_test.csv").read_text().count("\n") == 4801


def test_gen_data_area_counts(tmp_path, capsys):
    code, _, _ = run(capsys, "gen-data", "--task", "area", "--seed", "444", "--mc-samples", "500",
                     "--out", str(tmp_path))
    assert code == 0
    assert load_dataset(tmp_path / "area_seed444.ginvds").counts == (256, 256, 1024)


def test_train_missing_dataset(tmp_path, capsys):
    missing = tmp_path / "none.ginvds"
    code, _, err = run(capsys, "train", "--dataset", str(missing))
    assert code == 2 and err.strip() == f"error: dataset not found: {missing}"


def test_train_config_errors_list_lines(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[model]\nwidth=3\n")
    code, _, err = run(capsys, "train", str(cfg))
    assert code == 2 and "line 2" in err


def test_train_from_config_deterministic(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "[experiment]\nname=conv\n[model]\narch=Conv1D_Ginv\ngroup=Z4\nn=4\nn_in=2\nn_mid=2\n"
        "[train]\nepochs=2\n[data]\ntask=area\ncounts=16,8,8\nmc_samples=500\n"
    )
    outs = []
    for k in range(2):
        out_dir = tmp_path / f"out{k}"
        code, out, _ = run(capsys, "train", str(cfg), "--precision", "f64", "--seeds", "1", "--out", str(out_dir))
        assert code == 0
        summary = json.loads((out_dir / "conv.json").read_text())
        assert set(summary["mean"]) >= {"test_mae"} and set(summary["std"]) >= {"test_mae"}
        assert summary["param_count"] == 1673
        assert (out_dir / "conv_seed0.ginvckpt").exists()
        outs.append(summary["mean"])
    outs[0].pop("latency_ms"), outs[1].pop("latency_ms")
    assert outs[0] == outs[1]


def test_dump_config_defaults(capsys):
    code, out, _ = run(capsys, "train", "--task", "area", "--arch", "FC_Ginv", "--dump-config")
    assert code == 0 and "n=4" in out and "group=Z4" in out and "epochs=300" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ginvnet", "group", "D8"], capture_output=True, text=True)
    assert proc.returncode == 0 and "order 8" in proc.stdout
