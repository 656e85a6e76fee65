"""Offloading-mode optimization.

The stochastic local search walks over binary mode vectors. At every step
it scores the current vector and its N one-bit neighbours and samples the
next vector with probability proportional to ``exp(-beta / F)``; ``beta``
grows as ``beta <- beta * ln(1 + l)`` so the walk turns from exploration to
exploitation. The exhaustive oracle and the all-offload / all-local
benchmarks share the same per-mode evaluator.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fp_power import FpOptions
from .model import DeviceArrays, ModeVector, SlsStep, SolveReport, SystemParams
from .time_alloc import DEFAULT_GS_TOL, ModeEvaluation, evaluate_modes

DEFAULT_N_LIMIT = 14


class OracleLimitError(ValueError):
    pass


class BenchmarkKind(str, enum.Enum):
    OFFLOAD_ONLY = "OffloadOnly"
    LOCAL_ONLY = "LocalOnly"


@dataclass(frozen=True)
class SlsOptions:
    """Stochastic local search settings.

    ``beta0=None`` starts the temperature at ``beta0_scale`` times the mean
    objective of the first candidate set, which makes the selection
    independent of the rate magnitudes. With a scale near 1 the first draws
    are almost uniform, so the walk often samples "stay" and stops before it
    has climbed; 100 makes a 1% objective gap worth about a factor e.
    """

    beta0: float | None = None
    beta0_scale: float = 100.0
    max_iters: int = 500
    conv_tol: float = 1e-4
    seed: int = 0
    cache_enabled: bool = True

    def __post_init__(self):
        if self.beta0 is not None and self.beta0 < 0:
            raise ValueError("beta0 must be >= 0")
        if not self.beta0_scale > 0:
            raise ValueError("beta0_scale must be > 0")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


class ModeEvaluator:
    """Callable F(x) with optional memoization keyed by mode vector."""

    def __init__(self, params: SystemParams, devices, fp_opts: FpOptions = FpOptions(),
                 gs_tol: float = DEFAULT_GS_TOL, cache: bool = True):
        self.params = params
        self.arrays = devices if isinstance(devices, DeviceArrays) else DeviceArrays.of(devices)
        self.fp_opts = fp_opts
        self.gs_tol = gs_tol
        self.cache: dict[ModeVector, ModeEvaluation] | None = {} if cache else None
        self.requests = 0
        self.solves = 0
        self.fp_traces: list[np.ndarray] = []

    def __call__(self, modes: ModeVector) -> ModeEvaluation:
        self.requests += 1
        if self.cache is not None and modes in self.cache:
            return self.cache[modes]
        result = evaluate_modes(modes, self.params, self.arrays, self.fp_opts, self.gs_tol)
        self.solves += 1
        self.fp_traces.extend(result.fp_traces)
        if self.cache is not None:
            self.cache[modes] = result
        return result


def candidate_set(x: ModeVector) -> list[ModeVector]:
    """``x`` followed by its N one-bit flips in bit order."""
    return [x] + [x.flip(i) for i in range(len(x))]


def selection_probabilities(values: Sequence[float], beta: float) -> np.ndarray:
    """Normalized ``exp(-beta / F_i)`` over a candidate set."""
    values = np.asarray(values, dtype=float)
    if np.any(~(values > 0)):
        raise ValueError("candidate objectives must be positive")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    z = -beta / values
    z -= z.max()
    p = np.exp(z)
    return p / p.sum()


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    k = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(k, len(probs) - 1)


def stochastic_local_search(params: SystemParams, devices, sls_opts: SlsOptions = SlsOptions(),
                            fp_opts: FpOptions = FpOptions(),
                            gs_tol: float = DEFAULT_GS_TOL) -> SolveReport:
    """Search the offloading modes; report the best allocation ever evaluated.

    The walk stops once two consecutive accepted objectives differ by less
    than ``conv_tol`` or after ``max_iters`` iterations. The generator is
    numpy's PCG64 seeded with ``sls_opts.seed``; each iteration consumes
    exactly one uniform draw.
    """
    start = time.perf_counter()
    evaluator = ModeEvaluator(params, devices, fp_opts, gs_tol, sls_opts.cache_enabled)
    n = len(evaluator.arrays)
    if n < 1:
        raise ValueError("at least one device is required")
    rng = np.random.Generator(np.random.PCG64(sls_opts.seed))
    x = ModeVector(tuple(int(b) for b in rng.integers(0, 2, size=n)))
    beta = sls_opts.beta0
    best = None
    trace: list[SlsStep] = []
    converged = False
    for it in range(1, sls_opts.max_iters + 1):
        solves_before = evaluator.solves
        candidates = candidate_set(x)
        evaluations = [evaluator(c) for c in candidates]
        values = np.array([e.objective for e in evaluations])
        for e in evaluations:
            if best is None or e.objective > best.objective:
                best = e.allocation
        if beta is None:
            beta = sls_opts.beta0_scale * float(values.mean())
        k = _sample(selection_probabilities(values, beta), rng)
        trace.append(SlsStep(it, float(values[k]), best.objective, beta,
                             evaluator.solves - solves_before, candidates[k]))
        x = candidates[k]
        beta *= math.log1p(it)
        if abs(values[k] - values[0]) < sls_opts.conv_tol:
            converged = True
            break
    return SolveReport(
        best=best,
        fp_traces=evaluator.fp_traces,
        sls_trace=trace,
        candidate_evals=evaluator.requests,
        unique_evals=evaluator.solves,
        wall_time=time.perf_counter() - start,
        seed=sls_opts.seed,
        final_modes=x,
        converged=converged,
    )


def exhaustive_optimal(params: SystemParams, devices, fp_opts: FpOptions = FpOptions(),
                       gs_tol: float = DEFAULT_GS_TOL,
                       n_limit: int = DEFAULT_N_LIMIT) -> SolveReport:
    """Evaluate all 2^N mode vectors and keep the best."""
    start = time.perf_counter()
    evaluator = ModeEvaluator(params, devices, fp_opts, gs_tol, cache=False)
    n = len(evaluator.arrays)
    if n > n_limit:
        raise OracleLimitError(f"exhaustive search over 2^{n} modes refused: N={n} exceeds n_limit={n_limit}")
    best = None
    for bits in itertools.product((0, 1), repeat=n):
        allocation = evaluator(ModeVector(bits)).allocation
        if best is None or allocation.objective > best.objective:
            best = allocation
    return SolveReport(best=best, fp_traces=evaluator.fp_traces, candidate_evals=evaluator.requests,
                       unique_evals=evaluator.solves, wall_time=time.perf_counter() - start,
                       final_modes=best.modes)


def benchmark_scheme(kind: BenchmarkKind | str, params: SystemParams, devices,
                     fp_opts: FpOptions = FpOptions(),
                     gs_tol: float = DEFAULT_GS_TOL) -> SolveReport:
    """All-offload or all-local baseline with optimized alpha (and powers)."""
    start = time.perf_counter()
    kind = BenchmarkKind(kind)
    evaluator = ModeEvaluator(params, devices, fp_opts, gs_tol, cache=False)
    n = len(evaluator.arrays)
    modes = ModeVector.ones(n) if kind is BenchmarkKind.OFFLOAD_ONLY else ModeVector.zeros(n)
    allocation = evaluator(modes).allocation
    return SolveReport(best=allocation, fp_traces=evaluator.fp_traces, candidate_evals=1,
                       unique_evals=1, wall_time=time.perf_counter() - start, final_modes=modes)
