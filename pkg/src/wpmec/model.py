"""Domain types and instance construction for the wireless-powered MEC network.

All quantities are plain floats in SI units. Types are frozen dataclasses so
they can be shared freely between worker processes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ALPHA_MIN = 1e-6
ALPHA_MAX = 1.0 - 1e-6
POWER_SLACK = 1e-12  # W, absorbs solver round-off in feasibility checks


class ModelError(ValueError):
    """Base class for invalid parameters or instances."""


class ValidationError(ModelError):
    pass


class InstanceError(ModelError):
    pass


class PowerCapRule(str, enum.Enum):
    """How the energy limit and the hardware cap combine into P_max."""

    PHYSICAL_MIN = "PhysicalMin"
    PAPER_LITERAL_MAX = "PaperLiteralMax"


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Global RF and computing constants.

    The defaults reproduce the reference simulation setup: a 3 W energy
    transmitter, 51% harvesting efficiency, -140 dBm noise, 1 mW transmit
    cap, 10 MHz bandwidth and a spreading gain of 128.
    """

    p0: float = 3.0
    nu: float = 0.51
    t_frame: float = 1.0
    bandwidth: float = 10e6
    spreading_gain: float = 128.0
    noise_n0: float = dbm_to_watts(-140.0)
    q_max: float = 1e-3
    carrier_freq: float = 915e6
    antenna_gain: float = 4.11
    path_loss_exp: float = 2.8
    power_cap_rule: PowerCapRule = PowerCapRule.PHYSICAL_MIN

    def __post_init__(self):
        object.__setattr__(self, "power_cap_rule", PowerCapRule(self.power_cap_rule))
        for name in ("p0", "t_frame", "bandwidth", "noise_n0", "q_max",
                     "carrier_freq", "antenna_gain"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
        if not self.spreading_gain >= 1:
            raise ValidationError(f"spreading_gain must be >= 1, got {self.spreading_gain!r}")
        if not 0 < self.nu < 1:
            raise ValidationError(f"nu must lie in (0, 1), got {self.nu!r}")
        if not (math.isfinite(self.path_loss_exp) and self.path_loss_exp >= 0):
            raise ValidationError(f"path_loss_exp must be >= 0, got {self.path_loss_exp!r}")

    @property
    def noise_power(self) -> float:
        """Receiver noise term N_0 * B as it enters the SINR denominator."""
        return self.noise_n0 * self.bandwidth

    def replace(self, **changes) -> "SystemParams":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return SystemParams(**values)


@dataclass(frozen=True)
class Device:
    index: int  # 1-based label, follows input order
    distance: float
    channel_gain: float
    weight: float = 1.0
    k_eff: float = 1e-26
    cycles_per_bit: float = 100.0
    residual_energy: float = 0.0

    def __post_init__(self):
        if not self.channel_gain > 0:
            raise ValidationError(f"device {self.index}: channel_gain must be > 0")
        if not self.weight > 0:
            raise ValidationError(f"device {self.index}: weight must be > 0")
        if not self.k_eff > 0:
            raise ValidationError(f"device {self.index}: k_eff must be > 0")
        if not self.cycles_per_bit > 0:
            raise ValidationError(f"device {self.index}: cycles_per_bit must be > 0")
        if not self.residual_energy >= 0:
            raise ValidationError(f"device {self.index}: residual_energy must be >= 0")

    def eta(self, params: SystemParams) -> float:
        """Local-computing constant (nu * P_0)^(1/3) / C_i."""
        return (params.nu * params.p0) ** (1.0 / 3.0) / self.cycles_per_bit


@dataclass(frozen=True)
class ModeVector:
    """Binary offloading decision, 1 = offload (mode 1), 0 = local (mode 0)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValidationError(f"mode bits must be 0 or 1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str) -> "ModeVector":
        return cls(tuple(int(c) for c in s.strip()))

    @classmethod
    def zeros(cls, n: int) -> "ModeVector":
        return cls((0,) * n)

    @classmethod
    def ones(cls, n: int) -> "ModeVector":
        return cls((1,) * n)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    @property
    def offloaders(self) -> list[int]:
        """0-based positions of mode-1 users (N_1), ascending."""
        return [i for i, b in enumerate(self.bits) if b]

    @property
    def local_users(self) -> list[int]:
        return [i for i, b in enumerate(self.bits) if not b]

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)

    def flip(self, i: int) -> "ModeVector":
        bits = list(self.bits)
        bits[i] = 1 - bits[i]
        return ModeVector(tuple(bits))


@dataclass(frozen=True)
class Allocation:
    """A complete candidate solution with its per-user rates."""

    modes: ModeVector
    alpha: float
    powers: tuple[float, ...]  # per user, 0 for mode-0 users
    rates: tuple[float, ...]  # bits/s, offload rate or local rate per user
    objective: float

    @property
    def n_offloading(self) -> int:
        return sum(self.modes.bits)

    def to_dict(self) -> dict:
        return {
            "modes": str(self.modes),
            "alpha": self.alpha,
            "powers": list(self.powers),
            "rates": list(self.rates),
            "objective": self.objective,
        }


@dataclass(frozen=True)
class SlsStep:
    iteration: int
    accepted_objective: float
    best_objective: float
    beta: float
    evals: int  # fresh F(x) solves during this iteration
    modes: ModeVector


@dataclass
class SolveReport:
    best: Allocation
    fp_traces: list[np.ndarray] = field(default_factory=list)
    sls_trace: list[SlsStep] = field(default_factory=list)
    candidate_evals: int = 0
    unique_evals: int = 0
    wall_time: float = 0.0
    seed: int | None = None
    final_modes: ModeVector | None = None
    converged: bool = True

    @property
    def iterations(self) -> int:
        return len(self.sls_trace)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "best": self.best.to_dict(),
            "final_modes": None if self.final_modes is None else str(self.final_modes),
            "sls_trace": [
                {"iter": s.iteration, "accepted_objective": s.accepted_objective,
                 "best_objective": s.best_objective, "beta": s.beta,
                 "evals": s.evals, "modes": str(s.modes)}
                for s in self.sls_trace
            ],
            "candidate_evals": self.candidate_evals,
            "unique_evals": self.unique_evals,
            "fp_invocations": len(self.fp_traces),
            "converged": self.converged,
            "seed": self.seed,
            "wall_time": self.wall_time if timing else None,
        }


def build_instance(
    params: SystemParams,
    distances: Sequence[float],
    weights: Sequence[float] | float = 1.0,
    k_effs: Sequence[float] | float = 1e-26,
    cycles_per_bit: Sequence[float] | float = 100.0,
    residual_energies: Sequence[float] | float = 0.0,
) -> list[Device]:
    """Create devices with channel gains from the free-space path-loss model.

    Per-device arguments may be scalars, which are broadcast to every device,
    or sequences whose length must match ``distances``.
    """
    from .channel import path_loss_gain

    n = len(distances)
    if n < 1:
        raise InstanceError("at least one device is required")

    def expand(name, value):
        if np.isscalar(value):
            return [float(value)] * n
        value = [float(v) for v in value]
        if len(value) != n:
            raise InstanceError(f"{name} has {len(value)} entries, expected {n}")
        return value

    weights = expand("weights", weights)
    k_effs = expand("k_effs", k_effs)
    cycles_per_bit = expand("cycles_per_bit", cycles_per_bit)
    residual_energies = expand("residual_energies", residual_energies)

    devices = []
    for i, d in enumerate(distances):
        d = float(d)
        if not d > 0:
            raise ValidationError(f"device {i + 1}: distance must be > 0, got {d!r}")
        devices.append(Device(
            index=i + 1,
            distance=d,
            channel_gain=path_loss_gain(d, params),
            weight=weights[i],
            k_eff=k_effs[i],
            cycles_per_bit=cycles_per_bit[i],
            residual_energy=residual_energies[i],
        ))
    return devices


def fig3_distances(n: int = 6) -> list[float]:
    """Fixed line geometry D_i = 3 + (i - 1) meters."""
    return [3.0 + i for i in range(n)]


@dataclass(frozen=True)
class DeviceArrays:
    """Column view of a device list for vectorized rate evaluation."""

    gain: np.ndarray
    weight: np.ndarray
    k_eff: np.ndarray
    cycles_per_bit: np.ndarray
    residual_energy: np.ndarray

    @classmethod
    def of(cls, devices: Sequence[Device]) -> "DeviceArrays":
        def col(attr):
            a = np.array([getattr(d, attr) for d in devices], dtype=float)
            a.flags.writeable = False
            return a
        return cls(col("channel_gain"), col("weight"), col("k_eff"),
                   col("cycles_per_bit"), col("residual_energy"))

    def __len__(self) -> int:
        return len(self.gain)
