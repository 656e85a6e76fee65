import csv
import json
from pathlib import Path

import pytest

from wpmec.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_fig3(capsys, tmp_path):
    out = tmp_path / "r.json"
    fp, sls = tmp_path / "fp.csv", tmp_path / "sls.csv"
    code, stdout, _ = run(capsys, "solve", "--config", CONFIGS / "fig3.yaml", "--seed", 7, "-o", out,
                          "--fp-trace", fp, "--sls-trace", sls)
    assert code == 0
    assert "111100" in stdout
    result = json.loads(out.read_text())
    assert result["best"]["modes"] == "111100" and result["seed"] == 7
    assert result["wall_time"] is None
    assert fp.read_text().startswith("invocation,outer_iter,objective\n")
    assert sls.read_text().startswith("iter,accepted_objective,best_objective,beta,evals_this_iter\n")


def test_solve_is_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "solve", "--seed", 7, "-o", a)[0] == 0
    assert run(capsys, "solve", "--seed", 7, "-o", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_without_seed_reports_it(capsys):
    code, stdout, _ = run(capsys, "solve", "--config", CONFIGS / "single.yaml")
    assert code == 0 and "seed" in stdout


def test_missing_config_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--config", tmp_path / "absent.yaml")
    assert code == 2 and "absent.yaml" in err


def test_unknown_key_is_usage_error(capsys, tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("distances: [3]\nbogus_key: 1\n")
    code, _, err = run(capsys, "solve", "--config", p)
    assert code == 2 and "bogus_key" in err


def test_bad_option_value(capsys):
    assert run(capsys, "solve", "--conv-tol", "0")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--seed", "-3"])
    assert exc.value.code == 2


def test_oracle_single_device(capsys, tmp_path):
    out = tmp_path / "o.json"
    code, stdout, _ = run(capsys, "oracle", "--config", CONFIGS / "single.yaml", "--seed", 1, "-o", out)
    assert code == 0
    assert json.loads(out.read_text())["ratio"] == 1.0
    assert "ratio    : 1.000000" in stdout


def test_oracle_refuses_large_instance(capsys):
    code, _, err = run(capsys, "oracle", "--config", CONFIGS / "n20.yaml", "--seed", 1)
    assert code == 2 and "n_limit=14" in err


def test_sweep_size_row_count(capsys, tmp_path):
    out = tmp_path / "size.csv"
    code, stdout, _ = run(capsys, "sweep", "--sweep", "size", "--n-list", "5,10", "--placements", 2,
                          "--seed", 3, "--oracle-n-limit", 0, "-o", out, "--jobs", 1)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2 * 3
    assert (tmp_path / "size.csv.meta.json").exists()
    assert "SizeSweep" in stdout


def test_sweep_iters(capsys, tmp_path):
    out = tmp_path / "it.csv"
    code, _, _ = run(capsys, "sweep", "--sweep", "iters", "--n-list", "4", "--placements", 3,
                     "--seed", 5, "-o", out, "--jobs", 1)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 and all(int(r["sls_iters"]) >= 1 for r in rows)


def test_sweep_needs_output(capsys):
    assert run(capsys, "sweep", "--sweep", "fig3")[0] == 2


def test_sweep_bad_lambda_range(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--sweep", "lambda", "--lambda-from", 3, "--lambda-to", 2,
                       "-o", tmp_path / "l.csv")
    assert code == 2 and "lambda" in err


def test_module_entry_point():
    import subprocess, sys
    proc = subprocess.run([sys.executable, "-m", "wpmec", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "wpmec" in proc.stdout
