"""One-dimensional search over the WPT time fraction alpha."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fp_power import FpOptions, fp_power_control
from .model import ALPHA_MAX, ALPHA_MIN, Allocation, Device, DeviceArrays, ModeVector, SystemParams
from .rates import local_rates, offload_rates

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...

DEFAULT_GS_TOL = 1e-4
PRESCAN_POINTS = 11


@dataclass(frozen=True)
class GoldenResult:
    x: float
    value: float
    evals: int
    converged: bool


def golden_section_evals_bound(lo: float, hi: float, tol: float) -> int:
    """Upper bound on the evaluations used by :func:`golden_section_maximize`."""
    return math.ceil(math.log((hi - lo) / tol) / math.log(1.0 / INV_PHI)) + 2


def golden_section_maximize(f: Callable[[float], float], lo: float, hi: float,
                            tol: float = 1e-6, max_evals: int = 200) -> GoldenResult:
    """Golden-section search for the maximum of a unimodal ``f`` on ``[lo, hi]``.

    Returns the midpoint of the final bracket and ``f`` there. ``converged``
    is False when ``max_evals`` ran out before the bracket shrank to ``tol``.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if hi - lo <= tol:
        x = 0.5 * (lo + hi)
        return GoldenResult(x, f(x), 1, True)
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while True:
        # the maximizer lies in [a, d] or [c, b]; that is the next bracket
        left = fc >= fd
        na, nb = (a, d) if left else (c, b)
        if nb - na <= tol or evals >= max_evals - 1:
            break
        if left:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    x = 0.5 * (na + nb)
    return GoldenResult(x, f(x), evals + 1, nb - na <= tol)


@dataclass
class ModeEvaluation:
    """Best allocation found for one mode vector, plus the FP traces behind it."""

    allocation: Allocation
    fp_traces: list[np.ndarray] = field(default_factory=list)
    alpha_evals: int = 0

    @property
    def objective(self) -> float:
        return self.allocation.objective


class _AlphaObjective:
    """F(x, alpha) for a fixed mode vector, remembering every evaluated alpha."""

    def __init__(self, modes, params, arrays, fp_opts):
        self.modes = modes
        self.params = params
        self.arrays = arrays
        self.fp_opts = fp_opts
        self.mask = modes.as_array()
        self.evaluated: dict[float, tuple[float, np.ndarray, np.ndarray]] = {}
        self.traces: list[np.ndarray] = []

    def __call__(self, alpha: float) -> float:
        alpha = min(max(float(alpha), ALPHA_MIN), ALPHA_MAX)
        if alpha in self.evaluated:
            return self.evaluated[alpha][0]
        rates = local_rates(self.arrays, alpha, self.params)
        rates[self.mask] = 0.0
        powers = np.zeros(len(self.mask))
        if self.mask.any():
            res = fp_power_control(self.modes, alpha, self.params, self.arrays, self.fp_opts)
            self.traces.append(res.trace)
            powers[self.mask] = res.powers
            rates[self.mask] = offload_rates(res.powers, self.arrays.gain[self.mask], alpha, self.params)
        value = float(np.dot(self.arrays.weight, rates))
        self.evaluated[alpha] = (value, powers, rates)
        return value

    def best(self) -> tuple[float, float, np.ndarray, np.ndarray]:
        alpha = max(self.evaluated, key=lambda a: (self.evaluated[a][0], -a))
        value, powers, rates = self.evaluated[alpha]
        return alpha, value, powers, rates


def evaluate_modes(modes: ModeVector, params: SystemParams,
                   devices: Sequence[Device] | DeviceArrays,
                   fp_opts: FpOptions = FpOptions(), gs_tol: float = DEFAULT_GS_TOL,
                   prescan: bool = True) -> ModeEvaluation:
    """Compute F(x) = max over alpha of F(x, alpha) for one mode vector.

    An 11-point scan over the clamped alpha interval picks the bracket for the
    golden-section refinement, so a non-unimodal F(x, alpha) cannot trap the
    search in a poor basin. The best alpha seen anywhere is reported.
    """
    arrays = devices if isinstance(devices, DeviceArrays) else DeviceArrays.of(devices)
    if len(modes) != len(arrays):
        raise ValueError(f"mode vector has {len(modes)} entries for {len(arrays)} devices")
    objective = _AlphaObjective(modes, params, arrays, fp_opts)
    lo, hi = ALPHA_MIN, ALPHA_MAX
    if prescan:
        grid = np.linspace(ALPHA_MIN, ALPHA_MAX, PRESCAN_POINTS)
        values = [objective(a) for a in grid]
        k = int(np.argmax(values))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, PRESCAN_POINTS - 1)]
    golden_section_maximize(objective, lo, hi, gs_tol)
    alpha, value, powers, rates = objective.best()
    allocation = Allocation(modes, alpha, tuple(powers.tolist()), tuple(rates.tolist()), value)
    return ModeEvaluation(allocation, objective.traces, len(objective.evaluated))
