"""Harvested energy, transmit-power caps and computation rates.

``powers`` arguments are "power vectors": one entry per mode-1 user, ordered
by device position over ``modes.offloaders``. Device positions are 0-based.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .model import (
    ALPHA_MAX,
    ALPHA_MIN,
    POWER_SLACK,
    Device,
    DeviceArrays,
    ModelError,
    ModeVector,
    PowerCapRule,
    SystemParams,
)

LN2 = math.log(2.0)


class DomainError(ModelError):
    pass


class FeasibilityError(ModelError):
    pass


def check_alpha(alpha: float) -> float:
    # tiny tolerance so clamped values survive float round-trips
    if not (ALPHA_MIN * (1 - 1e-9) <= alpha <= ALPHA_MAX + 1e-15):
        raise DomainError(f"alpha={alpha!r} outside [{ALPHA_MIN}, {ALPHA_MAX}]")
    return float(alpha)


def clamp_alpha(alpha: float) -> float:
    return min(max(float(alpha), ALPHA_MIN), ALPHA_MAX)


def harvested_energy(device: Device, alpha: float, params: SystemParams) -> float:
    alpha = check_alpha(alpha)
    return params.nu * device.channel_gain * params.p0 * alpha * params.t_frame


def _cap(energy_limit, params: SystemParams):
    if params.power_cap_rule is PowerCapRule.PAPER_LITERAL_MAX:
        return np.maximum(energy_limit, params.q_max)
    return np.minimum(energy_limit, params.q_max)


def max_power(device: Device, alpha: float, params: SystemParams) -> float:
    """Largest admissible transmit power of an offloading device.

    The energy limit spends the harvested plus residual energy over the
    offloading phase ``(1 - alpha) T``; it is then combined with ``q_max``
    according to ``params.power_cap_rule``.
    """
    energy = harvested_energy(device, alpha, params) + device.residual_energy
    limit = energy / ((1.0 - alpha) * params.t_frame)
    return float(_cap(limit, params))


def max_powers(arrays: DeviceArrays, alpha: float, params: SystemParams) -> np.ndarray:
    alpha = check_alpha(alpha)
    energy = params.nu * arrays.gain * params.p0 * alpha * params.t_frame + arrays.residual_energy
    return _cap(energy / ((1.0 - alpha) * params.t_frame), params)


def offload_rate_scale(alpha: float, params: SystemParams) -> float:
    """Bits/s per nat of ``ln(1 + SINR)``: ``B (1 - alpha) / (G ln 2)``.

    The offloaded bits ``B (1 - alpha) T / G * log2(.)`` are divided by T.
    """
    return params.bandwidth * (1.0 - alpha) / (params.spreading_gain * LN2)


def sinr(powers: np.ndarray, gains: np.ndarray, params: SystemParams) -> np.ndarray:
    """Post-despreading SINR ``G P_i h_i / (sum_{n != i} P_n h_n + N_0 B)``."""
    rx = np.asarray(powers, dtype=float) * gains
    interference = rx.sum() - rx + params.noise_power
    return params.spreading_gain * rx / interference


def offload_rates(powers: np.ndarray, gains: np.ndarray, alpha: float,
                  params: SystemParams) -> np.ndarray:
    """Per-user offloading rates (bits/s) of a set of simultaneous offloaders."""
    return offload_rate_scale(alpha, params) * np.log1p(sinr(powers, gains, params))


def offload_rate(i: int, powers: Sequence[float], modes: ModeVector, alpha: float,
                 params: SystemParams, devices: Sequence[Device]) -> float:
    """Offloading rate of the device at position ``i``, which must be in N_1."""
    alpha = check_alpha(alpha)
    offloaders = modes.offloaders
    if i not in offloaders:
        raise ValueError(f"device position {i} is not offloading under modes {modes}")
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (len(offloaders),):
        raise ValueError(f"expected {len(offloaders)} powers, got shape {powers.shape}")
    gains = np.array([devices[j].channel_gain for j in offloaders])
    return float(offload_rates(powers, gains, alpha, params)[offloaders.index(i)])


def local_rate(device: Device, alpha: float, params: SystemParams) -> float:
    alpha = check_alpha(alpha)
    return device.eta(params) * (device.channel_gain / device.k_eff) ** (1.0 / 3.0) * alpha ** (1.0 / 3.0)


def local_rates(arrays: DeviceArrays, alpha: float, params: SystemParams) -> np.ndarray:
    """Vectorized local computing rates ``f*_i / C_i`` for every device."""
    alpha = check_alpha(alpha)
    eta = (params.nu * params.p0) ** (1.0 / 3.0) / arrays.cycles_per_bit
    return eta * np.cbrt(arrays.gain / arrays.k_eff) * alpha ** (1.0 / 3.0)


def user_rates(modes: ModeVector, powers: Sequence[float], alpha: float,
               params: SystemParams, devices: Sequence[Device] | DeviceArrays) -> np.ndarray:
    """Per-user rate vector: local rate for mode-0, offloading rate for mode-1."""
    arrays = devices if isinstance(devices, DeviceArrays) else DeviceArrays.of(devices)
    alpha = check_alpha(alpha)
    mask = modes.as_array()
    rates = np.where(mask, 0.0, local_rates(arrays, alpha, params))
    if mask.any():
        rates[mask] = offload_rates(np.asarray(powers, dtype=float), arrays.gain[mask], alpha, params)
    return rates


def check_powers(modes: ModeVector, powers: Sequence[float], alpha: float,
                 params: SystemParams, devices: Sequence[Device] | DeviceArrays) -> np.ndarray:
    arrays = devices if isinstance(devices, DeviceArrays) else DeviceArrays.of(devices)
    powers = np.asarray(powers, dtype=float)
    offloaders = modes.offloaders
    if powers.shape != (len(offloaders),):
        raise ValueError(f"expected {len(offloaders)} powers, got shape {powers.shape}")
    caps = max_powers(arrays, alpha, params)[offloaders]
    for k, i in enumerate(offloaders):
        if not (-POWER_SLACK <= powers[k] <= caps[k] + POWER_SLACK):
            raise FeasibilityError(
                f"device {i + 1}: power {powers[k]:.6g} W outside [0, {caps[k]:.6g}] W")
    return powers


def weighted_objective(modes: ModeVector, powers: Sequence[float], alpha: float,
                       params: SystemParams, devices: Sequence[Device] | DeviceArrays) -> float:
    """Weighted sum computation rate F(x, P, alpha) in bits/s."""
    arrays = devices if isinstance(devices, DeviceArrays) else DeviceArrays.of(devices)
    powers = check_powers(modes, powers, alpha, params, arrays)
    return float(np.dot(arrays.weight, user_rates(modes, powers, alpha, params, arrays)))


def full_powers(modes: ModeVector, powers: Sequence[float]) -> np.ndarray:
    """Scatter a mode-1 power vector into a length-N vector with zeros for mode-0."""
    out = np.zeros(len(modes))
    out[modes.offloaders] = powers
    return out
