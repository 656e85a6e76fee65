import csv
import json

import numpy as np
import pytest

from wpmec.experiments import (
    BASE_COLUMNS,
    SweepKind,
    SweepSpec,
    generate_placements,
    header_for,
    metadata_path,
    mode1_count,
    placement_seed,
    run_sweep,
    summarize,
)
from wpmec.mode_search import SlsOptions


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_placements_degenerate_range():
    assert generate_placements(5, 4, (5.0, 5.0)) == [5.0] * 4


def test_placements_bounds_and_mean():
    d = np.array(generate_placements(123, 100_000))
    assert d.min() >= 2.5 and d.max() < 10
    assert abs(d.mean() - 6.25) <= 0.01 * 6.25


def test_placements_deterministic_and_point_independent():
    assert generate_placements(9, 5) == generate_placements(9, 5)
    assert placement_seed(1, 0, 0) != placement_seed(1, 0, 1) != placement_seed(1, 1, 0)


def test_placements_reject_empty():
    with pytest.raises(ValueError):
        generate_placements(0, 0)


def test_header():
    assert header_for(SweepSpec(SweepKind.SIZE_SWEEP)) == BASE_COLUMNS
    fig3 = header_for(SweepSpec(SweepKind.FIG3_STUDY))
    assert fig3[:10] == BASE_COLUMNS and fig3[-4:] == ["mode_6", "power_6", "pmax_6", "rate_6"]


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(SweepKind.SIZE_SWEEP, placements_per_point=0)
    with pytest.raises(ValueError):
        SweepSpec(SweepKind.SIZE_SWEEP, distance_range=(5, 2))


def test_size_sweep_rows_and_determinism(tmp_path, params):
    spec = SweepSpec(SweepKind.SIZE_SWEEP, n_values=(3, 9), placements_per_point=2, seed=4, oracle_n_limit=8)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_sweep(spec, params, out_path=a, timing=False)
    run_sweep(spec, params, out_path=b, timing=False)
    assert a.read_text() == b.read_text()
    rows = read_csv(a)
    assert len(rows) == 2 * 4 + 2 * 3
    assert list(rows[0]) == BASE_COLUMNS
    for r in rows:
        if r["scheme"] == "proposed" and r["n_devices"] == "3":
            opt = next(o for o in rows if o["scheme"] == "optimal" and o["placement"] == r["placement"]
                       and o["sweep_var"] == "3")
            assert float(r["objective_bps"]) <= float(opt["objective_bps"]) * (1 + 1e-12)
    meta = json.loads(metadata_path(a).read_text())
    assert meta["seed"] == 4 and meta["errors"] == []


def test_resume_skips_finished_tasks(tmp_path, params, monkeypatch):
    spec = SweepSpec(SweepKind.ITERATION_PROFILE, n_values=(3, 4), placements_per_point=2, seed=8)
    out = tmp_path / "iters.csv"
    full = run_sweep(spec, params, out_path=out, timing=False)
    reference = out.read_text()
    lines = reference.splitlines()
    out.write_text("\n".join(lines[:3]) + "\n")  # header + two finished rows

    import wpmec.experiments as ex
    calls = []
    real = ex._run_task
    monkeypatch.setattr(ex, "_run_task", lambda t, *a: calls.append(t) or real(t, *a))
    resumed = run_sweep(spec, params, out_path=out, timing=False)
    assert len(calls) == 2
    assert out.read_text() == reference
    assert resumed == full


def test_resume_refuses_foreign_header(tmp_path, params):
    out = tmp_path / "x.csv"
    out.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        run_sweep(SweepSpec(SweepKind.ITERATION_PROFILE, n_values=(2,), placements_per_point=1), params,
                  out_path=out)


def test_parallel_matches_serial(tmp_path, params):
    spec = SweepSpec(SweepKind.ITERATION_PROFILE, n_values=(3,), placements_per_point=3, seed=2)
    run_sweep(spec, params, out_path=tmp_path / "s.csv", timing=False, jobs=1)
    run_sweep(spec, params, out_path=tmp_path / "p.csv", timing=False, jobs=2)
    assert (tmp_path / "s.csv").read_text() == (tmp_path / "p.csv").read_text()


def test_lambda_sweep_offloading_shrinks(params):
    rows = run_sweep(SweepSpec(SweepKind.LAMBDA_SWEEP, seed=1), params, timing=False)
    counts = [mode1_count(r) for r in rows if r["scheme"] == "optimal"]
    assert counts == sorted(counts, reverse=True)
    assert counts[0] > counts[-1]


def test_summarize():
    rows = [
        {"sweep_var": "5", "scheme": "proposed", "objective_bps": "2.0", "sls_iters": "3", "candidate_evals": "18"},
        {"sweep_var": "5", "scheme": "proposed", "objective_bps": "4.0", "sls_iters": "5", "candidate_evals": "30"},
        {"sweep_var": "5", "scheme": "optimal", "objective_bps": "5.0", "sls_iters": "0", "candidate_evals": "32"},
    ]
    s = summarize(rows)
    assert list(s) == [(5.0, "proposed"), (5.0, "optimal")]
    assert s[(5.0, "proposed")] == {"objective": 3.0, "sls_iters": 4.0, "candidate_evals": 24.0, "count": 2}


def test_failed_solve_becomes_nan_row(tmp_path, params, monkeypatch):
    import wpmec.experiments as ex

    def boom(*a, **k):
        raise RuntimeError("synthetic")

    monkeypatch.setattr(ex, "exhaustive_optimal", boom)
    out = tmp_path / "f.csv"
    rows = run_sweep(SweepSpec(SweepKind.FIG3_STUDY), params, out_path=out, timing=False)
    bad = [r for r in rows if r["scheme"] == "optimal"]
    assert bad[0]["objective_bps"] == "nan"
    assert "synthetic" in json.loads(metadata_path(out).read_text())["errors"][0]
    assert sum(r["objective_bps"] != "nan" for r in rows) == 3
