"""Finite-level uniform quantizer and the zoom-in-and-hold scaling parameter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THETA_FLOOR = 1e-300


class NumericalExhaustion(ArithmeticError):
    """The scaling parameter fell below the representable floor."""


@dataclass(frozen=True)
class UniformQuantizer:
    levels_r: int

    def __post_init__(self):
        if int(self.levels_r) != self.levels_r or self.levels_r < 1:
            raise ValueError(f"levels_r must be a positive integer, got {self.levels_r}")
        object.__setattr__(self, "levels_r", int(self.levels_r))

    @property
    def range_limit(self) -> float:
        """Largest unsaturated magnitude, (2R+1)/2."""
        return self.levels_r + 0.5


def quantize(q: UniformQuantizer, b: float) -> tuple[int, bool]:
    b = float(b)
    if not math.isfinite(b):
        raise ValueError("cannot quantize a non-finite value")
    # cells [(2z-1)/2, (2z+1)/2) for b >= 0; negative side by odd symmetry
    mag = abs(b)
    z = math.floor(mag)
    if mag - z >= 0.5:  # exact; floor(mag + 0.5) misrounds just below 1/2
        z += 1
    saturated = mag >= q.range_limit
    z = min(z, q.levels_r)
    return (-z if b < 0 else z), saturated


def quantize_vec(q: UniformQuantizer, y) -> tuple[np.ndarray, bool]:
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("cannot quantize non-finite values")
    mag = np.abs(y)
    sym = symbol_values(y, mag, q.levels_r)
    return sym.astype(np.int64), bool(np.any(mag >= q.range_limit))


def symbol_values(y: np.ndarray, mag: np.ndarray, levels) -> np.ndarray:
    """Symbols as floats, given ``mag = |y|``; ``levels`` may vary per entry.

    Skips input validation so the simulation kernel can call it every step.
    """
    fl = np.floor(mag)
    return np.copysign(np.minimum(fl + (mag - fl >= 0.5), levels), y)


@dataclass(frozen=True)
class ScalingState:
    """Shared scaling parameter; ``theta = theta0 * gamma_in ** zooms``.

    Recomputing from the zoom count keeps theta free of multiplicative drift
    over long horizons.
    """

    theta0: float
    gamma_in: float
    gamma_hold: float = 1.0
    zooms: int = 0

    def __post_init__(self):
        if not 0 < self.gamma_in < 1:
            raise ValueError("zoom-in factor must lie in (0, 1)")
        if self.gamma_hold != 1.0:
            raise ValueError("holding factor is fixed at 1")
        if not self.theta0 > 0:
            raise ValueError("theta0 must be positive")

    @property
    def theta(self) -> float:
        return self.theta0 * self.gamma_in ** self.zooms


def scale_step(s: ScalingState, dos_active: bool) -> ScalingState:
    if dos_active:
        return s
    nxt = ScalingState(s.theta0, s.gamma_in, s.gamma_hold, s.zooms + 1)
    if nxt.theta < THETA_FLOOR:
        raise NumericalExhaustion(
            f"theta underflow after {nxt.zooms} zoom-ins: {nxt.theta:.3e} < {THETA_FLOOR:.0e}")
    return nxt
