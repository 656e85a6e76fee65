"""Weighted sum-rate power control for a fixed offloading set and WPT time.

Multi-user interference makes the sum-rate non-convex in the transmit
powers. Each SINR term is replaced by its quadratic transform

    1 + 2 y_i sqrt(G P_i h_i) - y_i^2 (sum_{n != i} P_n h_n + N_0 B),

which is concave in P for fixed auxiliaries y and tight at the closed-form
optimum of y. Alternating the y update with a box-constrained concave
maximization over P gives a monotone ascent on the true weighted sum-rate.

The numeric kernels run in normalized coordinates ``u = P / P_max`` so that
the box is always ``[0, 1]^M`` and step sizes are scale free; they return
objectives in nats (weighted sum of ``ln(1 + SINR)``), which the wrappers
convert to bits/s.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .model import POWER_SLACK, Device, DeviceArrays, ModeVector, SystemParams
from .rates import DomainError, check_alpha, max_powers, offload_rate_scale

ARMIJO_SIGMA = 1e-4
STEP_INIT = 1.0
STEP_SHRINK = 0.5
MAX_BACKTRACKS = 60


class InitRule(str, enum.Enum):
    FULL_POWER = "FullPower"
    HALF_POWER = "HalfPower"


@dataclass(frozen=True)
class FpOptions:
    max_iters: int = 200
    rel_tol: float = 1e-6
    inner_max_iters: int = 500
    inner_grad_tol: float = 1e-8
    init_rule: InitRule = InitRule.FULL_POWER

    def __post_init__(self):
        object.__setattr__(self, "init_rule", InitRule(self.init_rule))
        if not (self.max_iters > 0 and self.rel_tol > 0
                and self.inner_max_iters > 0 and self.inner_grad_tol > 0):
            raise ValueError("FpOptions fields must all be positive")


@dataclass(frozen=True)
class InnerResult:
    powers: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FpResult:
    powers: np.ndarray  # one entry per mode-1 user
    objective: float  # weighted offloading sum-rate R(P), bits/s
    trace: np.ndarray  # R(P) at the initial point and after every outer iteration
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# numba kernels (u-space, nats)

@numba.njit(cache=True)
def _true_phi(u, a, w, gain, noise):
    total_rx = 0.0
    for i in range(u.size):
        total_rx += a[i] * u[i]
    phi = 0.0
    for i in range(u.size):
        rx = a[i] * u[i]
        phi += w[i] * math.log1p(gain * rx / (total_rx - rx + noise))
    return phi


@numba.njit(cache=True)
def _optimal_y(u, a, gain, noise, y):
    total_rx = 0.0
    for i in range(u.size):
        total_rx += a[i] * u[i]
    for i in range(u.size):
        rx = a[i] * u[i]
        y[i] = math.sqrt(gain * rx) / (total_rx - rx + noise)


@numba.njit(cache=True)
def _phi_y(u, a, w, s, c, noise):
    # s_i = 2 y_i sqrt(G a_i), c_i = y_i^2; -inf flags a non-positive bracket
    total_rx = 0.0
    for i in range(u.size):
        total_rx += a[i] * u[i]
    phi = 0.0
    for i in range(u.size):
        br = 1.0 + s[i] * math.sqrt(u[i]) - c[i] * (total_rx - a[i] * u[i] + noise)
        if br <= 0.0:
            return -math.inf
        phi += w[i] * math.log(br)
    return phi


@numba.njit(cache=True)
def _grad_y(u, a, w, s, c, noise, g):
    m = u.size
    total_rx = 0.0
    for i in range(m):
        total_rx += a[i] * u[i]
    acc = 0.0
    for i in range(m):
        br = 1.0 + s[i] * math.sqrt(u[i]) - c[i] * (total_rx - a[i] * u[i] + noise)
        g[i] = w[i] / br  # scratch
        acc += g[i] * c[i]
    for j in range(m):
        wb = g[j]
        if s[j] > 0.0:
            own = wb * s[j] / (2.0 * math.sqrt(u[j])) if u[j] > 0.0 else 1e300
        else:
            own = 0.0
        g[j] = own - a[j] * (acc - wb * c[j])


@numba.njit(cache=True)
def _inner(u0, a, w, s, c, noise, max_iters, grad_tol):
    m = u0.size
    u = u0.copy()
    g = np.empty(m)
    trial = np.empty(m)
    phi = _phi_y(u, a, w, s, c, noise)
    converged = False
    it = 0
    while it < max_iters:
        _grad_y(u, a, w, s, c, noise, g)
        pg = 0.0
        for j in range(m):
            v = min(max(u[j] + g[j], 0.0), 1.0) - u[j]
            pg = max(pg, abs(v))
        if pg <= grad_tol:
            converged = True
            break
        t = STEP_INIT
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            ascent = 0.0
            for j in range(m):
                trial[j] = min(max(u[j] + t * g[j], 0.0), 1.0)
                ascent += g[j] * (trial[j] - u[j])
            phi_trial = _phi_y(trial, a, w, s, c, noise)
            if phi_trial >= phi + ARMIJO_SIGMA * ascent:
                accepted = True
                break
            t *= STEP_SHRINK
        it += 1
        if not accepted:
            # no representable ascent left along the projected arc
            converged = True
            break
        u[:] = trial
        phi = phi_trial
    return u, it, converged


@numba.njit(cache=True)
def _fp(a, w, gain, noise, u0, max_iters, rel_tol, inner_max_iters, inner_grad_tol):
    m = u0.size
    u = u0.copy()
    y = np.empty(m)
    s = np.empty(m)
    c = np.empty(m)
    trace = np.empty(max_iters + 1)
    trace[0] = _true_phi(u, a, w, gain, noise)
    n = 1
    converged = False
    for _ in range(max_iters):
        _optimal_y(u, a, gain, noise, y)
        for i in range(m):
            s[i] = 2.0 * y[i] * math.sqrt(gain * a[i])
            c[i] = y[i] * y[i]
        u, _, _ = _inner(u, a, w, s, c, noise, inner_max_iters, inner_grad_tol)
        phi = _true_phi(u, a, w, gain, noise)
        trace[n] = phi
        n += 1
        if abs(phi - trace[n - 2]) <= rel_tol * abs(phi):
            converged = True
            break
    return u, trace[:n], converged


# ---------------------------------------------------------------------------
# public API (watts, bits/s)

def _offloader_arrays(modes: ModeVector, devices: Sequence[Device] | DeviceArrays):
    arrays = devices if isinstance(devices, DeviceArrays) else DeviceArrays.of(devices)
    idx = modes.offloaders
    return arrays, arrays.gain[idx], arrays.weight[idx]


def optimal_y(powers, modes: ModeVector, alpha: float, params: SystemParams,
              devices: Sequence[Device] | DeviceArrays) -> np.ndarray:
    """Closed-form auxiliary vector maximizing the transform for fixed powers."""
    _, h, _ = _offloader_arrays(modes, devices)
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0):
        raise DomainError("powers must be non-negative")
    y = np.empty(len(h))
    _optimal_y(powers, h, float(params.spreading_gain), params.noise_power, y)
    return y


def transformed_objective(powers, y, modes: ModeVector, alpha: float, params: SystemParams,
                          devices: Sequence[Device] | DeviceArrays) -> float:
    """Quadratic-transform surrogate of the weighted offloading sum-rate, bits/s."""
    alpha = check_alpha(alpha)
    _, h, w = _offloader_arrays(modes, devices)
    powers = np.asarray(powers, dtype=float)
    y = np.asarray(y, dtype=float)
    rx = powers * h
    interference = rx.sum() - rx + params.noise_power
    bracket = 1.0 + 2.0 * y * np.sqrt(params.spreading_gain * rx) - y ** 2 * interference
    if np.any(bracket <= 0):
        bad = [modes.offloaders[k] + 1 for k in np.flatnonzero(bracket <= 0)]
        raise DomainError(f"non-positive transform bracket for devices {bad}")
    return float(offload_rate_scale(alpha, params) * np.dot(w, np.log(bracket)))


def sum_rate(powers, modes: ModeVector, alpha: float, params: SystemParams,
             devices: Sequence[Device] | DeviceArrays) -> float:
    """Weighted offloading sum-rate R(P) of the mode-1 users, bits/s."""
    alpha = check_alpha(alpha)
    _, h, w = _offloader_arrays(modes, devices)
    phi = _true_phi(np.asarray(powers, dtype=float), h, w,
                    float(params.spreading_gain), params.noise_power)
    return offload_rate_scale(alpha, params) * phi


def solve_inner_convex(y, modes: ModeVector, alpha: float, p_max, params: SystemParams,
                       devices: Sequence[Device] | DeviceArrays, opts: FpOptions = FpOptions(),
                       warm_start=None) -> InnerResult:
    """Maximize the transform over the box ``[0, p_max]`` for fixed ``y``.

    Projected gradient ascent with Armijo backtracking, started from
    ``warm_start`` (full power when omitted). The returned point never has a
    lower transformed objective than the warm start.
    """
    check_alpha(alpha)
    _, h, w = _offloader_arrays(modes, devices)
    y = np.asarray(y, dtype=float)
    p_max = np.asarray(p_max, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("auxiliary vector must be finite")
    if np.any(p_max <= 0):
        raise DomainError("p_max must be positive")
    u0 = np.ones(len(h)) if warm_start is None else np.clip(np.asarray(warm_start, float) / p_max, 0, 1)
    a = h * p_max
    s = 2.0 * y * np.sqrt(params.spreading_gain * a)
    c = y * y
    u, iters, converged = _inner(u0, a, w, s, c, params.noise_power,
                                 opts.inner_max_iters, opts.inner_grad_tol)
    return InnerResult(np.minimum(u * p_max, p_max), iters, converged)


def fp_power_control(modes: ModeVector, alpha: float, params: SystemParams,
                     devices: Sequence[Device] | DeviceArrays, opts: FpOptions = FpOptions(),
                     p_max=None) -> FpResult:
    """Alternate the closed-form y update and the inner concave solve."""
    alpha = check_alpha(alpha)
    arrays, h, w = _offloader_arrays(modes, devices)
    if len(h) == 0:
        raise ValueError("power control needs at least one offloading user")
    if p_max is None:
        p_max = max_powers(arrays, alpha, params)[modes.offloaders]
    p_max = np.asarray(p_max, dtype=float)
    u0 = np.full(len(h), 1.0 if opts.init_rule is InitRule.FULL_POWER else 0.5)
    u, trace, converged = _fp(h * p_max, w, float(params.spreading_gain), params.noise_power, u0,
                              opts.max_iters, opts.rel_tol, opts.inner_max_iters, opts.inner_grad_tol)
    scale = offload_rate_scale(alpha, params)
    powers = np.minimum(u * p_max, p_max)
    assert np.all(powers <= p_max + POWER_SLACK)
    return FpResult(powers, float(scale * trace[-1]), scale * trace, len(trace) - 1, bool(converged))


def transformed_gradient(powers, y, gains, weights, params: SystemParams) -> np.ndarray:
    """Gradient of the transform (in nats) with respect to the powers in watts."""
    powers = np.asarray(powers, dtype=float)
    y = np.asarray(y, dtype=float)
    gains = np.asarray(gains, dtype=float)
    s = 2.0 * y * np.sqrt(params.spreading_gain * gains)
    g = np.empty(len(powers))
    _grad_y(powers, gains, np.asarray(weights, float), s, y * y, params.noise_power, g)
    return g


def write_fp_trace(trace: Sequence[float], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outer_iter", "objective"])
        for k, v in enumerate(trace):
            writer.writerow([k, repr(float(v))])
