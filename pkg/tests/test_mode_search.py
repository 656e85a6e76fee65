import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wpmec.model import ALPHA_MAX, ModeVector, build_instance, fig3_distances
from wpmec.mode_search import (
    BenchmarkKind,
    OracleLimitError,
    SlsOptions,
    benchmark_scheme,
    candidate_set,
    exhaustive_optimal,
    selection_probabilities,
    stochastic_local_search,
)
from wpmec.time_alloc import evaluate_modes


def test_candidate_set_examples():
    assert candidate_set(ModeVector((0, 0))) == [ModeVector((0, 0)), ModeVector((1, 0)), ModeVector((0, 1))]
    x = ModeVector((1, 0, 1))
    cands = candidate_set(x)
    assert len(cands) == 4 and cands[0] == x
    assert all(sum(a != b for a, b in zip(c.bits, x.bits)) <= 1 for c in cands)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=12))
def test_candidate_set_shape(bits):
    x = ModeVector(tuple(bits))
    cands = candidate_set(x)
    assert len(cands) == len(bits) + 1 and x in cands
    assert len(set(cands)) == len(cands)


def test_selection_probabilities_examples():
    np.testing.assert_allclose(selection_probabilities([1.0, 5.0, 2.0], 0.0), [1 / 3] * 3, rtol=1e-15)
    np.testing.assert_allclose(selection_probabilities([7.0] * 4, 3.0), [0.25] * 4, rtol=1e-15)
    # exp(-2 ln 2 / 1) = 1/4, exp(-2 ln 2 / 2) = 1/2
    np.testing.assert_allclose(selection_probabilities([1.0, 2.0], 2 * np.log(2)), [1 / 3, 2 / 3], rtol=1e-12)


def test_selection_probabilities_rejects_bad_input():
    with pytest.raises(ValueError):
        selection_probabilities([1.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        selection_probabilities([1.0, 2.0], -1.0)


values_st = st.lists(st.floats(1e3, 1e7), min_size=1, max_size=21)


@given(values=values_st, beta=st.floats(0, 1e9), seed=st.integers(0, 2 ** 32 - 1))
def test_selection_probabilities_properties(values, beta, seed):
    p = selection_probabilities(values, beta)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) <= 1e-12
    order = np.argsort(values, kind="stable")
    assert np.all(np.diff(p[order]) >= -1e-15)
    perm = np.random.default_rng(seed).permutation(len(values))
    np.testing.assert_allclose(selection_probabilities(np.array(values)[perm], beta), p[perm], rtol=1e-12, atol=1e-300)


def test_sls_single_strong_device(params):
    devs = build_instance(params, [2.0])
    report = stochastic_local_search(params, devs, SlsOptions(seed=3))
    f = {b: evaluate_modes(ModeVector((b,)), params, devs).objective for b in (0, 1)}
    assert str(report.best.modes) == "1"
    assert report.best.objective == max(f.values())


def test_sls_fig3_mode_vector(params, fig3_devices):
    report = stochastic_local_search(params, fig3_devices, SlsOptions(seed=2024))
    assert str(report.best.modes) == "111100"


def test_sls_is_deterministic(params, fig3_devices):
    a = stochastic_local_search(params, fig3_devices, SlsOptions(seed=99))
    b = stochastic_local_search(params, fig3_devices, SlsOptions(seed=99))
    assert a.to_dict(timing=False) == b.to_dict(timing=False)
    assert all(np.array_equal(x, y) for x, y in zip(a.fp_traces, b.fp_traces))


def test_sls_cache_is_transparent(params):
    devs = build_instance(params, [2.7, 9.1, 4.4, 6.0, 8.2, 3.3, 5.5])
    for seed in (1, 2, 3):
        on = stochastic_local_search(params, devs, SlsOptions(seed=seed, beta0_scale=1.0))
        off = stochastic_local_search(params, devs, SlsOptions(seed=seed, beta0_scale=1.0, cache_enabled=False))
        assert [s.modes for s in on.sls_trace] == [s.modes for s in off.sls_trace]
        assert on.best == off.best
        assert on.unique_evals <= off.unique_evals


def test_sls_report_invariants(params):
    devs = build_instance(params, [2.7, 9.1, 4.4, 6.0, 8.2])
    r = stochastic_local_search(params, devs, SlsOptions(seed=5, beta0_scale=1.0))
    assert r.candidate_evals >= len(r.sls_trace) >= 1
    assert r.candidate_evals == len(r.sls_trace) * 6
    assert all(np.all(np.diff(t) >= -1e-9) for t in r.fp_traces)
    bests = [s.best_objective for s in r.sls_trace]
    assert bests == sorted(bests) and bests[-1] == r.best.objective
    assert r.sls_trace[0].beta == pytest.approx(r.sls_trace[1].beta / np.log(2))


def test_sls_stops_on_max_iters(params):
    devs = build_instance(params, [3.0, 9.0, 5.0])
    r = stochastic_local_search(params, devs, SlsOptions(seed=0, max_iters=1, beta0=0.0))
    assert len(r.sls_trace) == 1


def test_sls_options_validation():
    with pytest.raises(ValueError):
        SlsOptions(beta0=-1.0)
    with pytest.raises(ValueError):
        SlsOptions(conv_tol=0.0)
    with pytest.raises(ValueError):
        SlsOptions(seed=2 ** 64)


def test_exhaustive_two_case(params):
    devs = build_instance(params, [6.5])
    r = exhaustive_optimal(params, devs)
    f = [evaluate_modes(ModeVector((b,)), params, devs).objective for b in (0, 1)]
    assert r.best.objective == max(f) and r.candidate_evals == 2


def test_exhaustive_symmetric_pair(params):
    devs = build_instance(params, [4.0, 4.0])
    r = exhaustive_optimal(params, devs)
    swapped = ModeVector(tuple(reversed(r.best.modes.bits)))
    assert evaluate_modes(swapped, params, devs).objective == pytest.approx(r.best.objective, rel=1e-12)


def test_exhaustive_refuses_large_n(params):
    devs = build_instance(params, np.linspace(3, 9, 15))
    with pytest.raises(OracleLimitError, match="n_limit=14"):
        exhaustive_optimal(params, devs)


def test_exhaustive_fig3_agrees_with_sls(params, fig3_devices):
    ex = exhaustive_optimal(params, fig3_devices)
    sls = stochastic_local_search(params, fig3_devices, SlsOptions(seed=7))
    assert ex.candidate_evals == 64
    assert ex.best.modes == sls.best.modes
    assert sls.best.objective == pytest.approx(ex.best.objective, rel=1e-12)


def test_benchmarks(params, fig3_devices):
    local = benchmark_scheme(BenchmarkKind.LOCAL_ONLY, params, fig3_devices)
    offload = benchmark_scheme("OffloadOnly", params, fig3_devices)
    assert local.best.alpha == pytest.approx(ALPHA_MAX)
    assert str(local.best.modes) == "000000" and str(offload.best.modes) == "111111"
    ex = exhaustive_optimal(params, fig3_devices)
    assert local.best.objective <= ex.best.objective
    assert offload.best.objective <= ex.best.objective


def test_offload_only_near_optimal_for_strong_channels(params):
    p = params.replace(path_loss_exp=2.6)
    devs = build_instance(p, fig3_distances())
    offload = benchmark_scheme(BenchmarkKind.OFFLOAD_ONLY, p, devs).best.objective
    assert offload >= 0.95 * exhaustive_optimal(p, devs).best.objective


def test_oracle_dominates_small_random_instances(params):
    rng = np.random.default_rng(21)
    for k in range(4):
        devs = build_instance(params, rng.uniform(2.5, 10, 4 + k % 3))
        ex = exhaustive_optimal(params, devs).best.objective
        sls = stochastic_local_search(params, devs, SlsOptions(seed=k)).best.objective
        assert ex >= sls - 1e-9
        for kind in BenchmarkKind:
            assert ex >= benchmark_scheme(kind, params, devs).best.objective - 1e-9
