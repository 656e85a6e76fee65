"""Free-space path-loss channel gains.

The same gain serves the downlink power transfer and the uplink offloading
link (reciprocal channel, no fading).
"""

from __future__ import annotations

import math

from .model import SystemParams, ValidationError

SPEED_OF_LIGHT = 3e8  # m/s, rounded as in the reference setup


def path_loss_gain(distance: float, params: SystemParams) -> float:
    """Channel power gain ``G_A * (c / (4 pi D f_c)) ** lambda``."""
    if not distance > 0:
        raise ValidationError(f"distance must be > 0, got {distance!r}")
    ratio = SPEED_OF_LIGHT / (4.0 * math.pi * distance * params.carrier_freq)
    return params.antenna_gain * ratio ** params.path_loss_exp
