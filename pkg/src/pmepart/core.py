"""Particle states, finite differences on index vectors, and density reconstruction.

A configuration of ``N + 1`` strictly ordered particles partitions the line
into ``N`` intervals carrying mass ``1/N`` each, so that the interval
``(x[i-1], x[i])`` represents a constant density ``1 / (N * (x[i] - x[i-1]))``.
The difference operators in this module act on length-``N`` index vectors and
read out-of-range entries as zero, which is the boundary convention used by
the particle dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParticleState:
    """Ordered particle positions ``x_0 < x_1 < ... < x_N`` at one instant.

    Parameters
    ----------
    positions : array of N+1 floats, strictly increasing
    m : diffusion exponent, must exceed 1
    t : time stamp, nonnegative
    """

    positions: np.ndarray
    m: float
    t: float = 0.0

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 1 or positions.size < 2:
            raise ValueError("a particle state needs at least two positions")
        if not np.all(np.isfinite(positions)):
            raise ValueError("particle positions must be finite")
        if np.any(np.diff(positions) <= 0.0):
            raise ValueError("particle positions must be strictly increasing")
        if not self.m > 1.0:
            raise ValueError(f"diffusion exponent must exceed 1, got m={self.m}")
        if not self.t >= 0.0:
            raise ValueError(f"time must be nonnegative, got t={self.t}")
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    @property
    def n(self) -> int:
        """Number of mass-carrying intervals."""
        return self.positions.size - 1

    def translated(self, offset: float) -> "ParticleState":
        return ParticleState(self.positions + offset, self.m, self.t)


@dataclass(frozen=True)
class PiecewiseDensity:
    """Piecewise-constant unit-mass density: ``heights[i]`` on ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        breakpoints = np.array(self.breakpoints, dtype=float)
        heights = np.array(self.heights, dtype=float)
        if breakpoints.size != heights.size + 1:
            raise ValueError("need one more breakpoint than heights")
        if np.any(np.diff(breakpoints) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(heights < 0.0):
            raise ValueError("heights must be nonnegative")
        mass = float(np.sum(heights * np.diff(breakpoints)))
        if abs(mass - 1.0) > 1e-8:
            raise ValueError(f"total mass must be 1, got {mass!r}")
        breakpoints.setflags(write=False)
        heights.setflags(write=False)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "heights", heights)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def mass(self) -> float:
        return float(np.sum(self.heights * np.diff(self.breakpoints)))

    def __call__(self, x):
        """Evaluate the density at ``x`` (right-open cells, zero outside)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.heights.size)
        out = np.zeros_like(x, dtype=float)
        out[inside] = self.heights[idx[inside]]
        return out if out.ndim else float(out)


def gaps(state: ParticleState) -> np.ndarray:
    """Interval lengths ``d_i = x_i - x_{i-1}`` for ``i = 1..N``."""
    return np.diff(state.positions)


def densities(state: ParticleState) -> np.ndarray:
    """Interval densities ``R_i = 1 / (N d_i)`` for ``i = 1..N``."""
    d = np.diff(state.positions)
    return 1.0 / (d.size * d)


def forward_diff(values: np.ndarray) -> np.ndarray:
    """Forward difference quotient ``N (F_{k+1} - F_k)`` for ``k = 0..N``.

    ``values`` holds ``F_1..F_N``; entries outside ``1..N`` read as zero, so
    the result has ``N + 1`` entries starting with ``N F_1`` and ending with
    ``-N F_N``.
    """
    f = np.asarray(values, dtype=float)
    n = f.size
    padded = np.concatenate(([0.0], f, [0.0]))
    return n * np.diff(padded)


def discrete_laplacian(values: np.ndarray) -> np.ndarray:
    """Second difference ``N^2 (F_{k+1} + F_{k-1} - 2 F_k)`` for ``k = 0..N+1``.

    Zero padding outside ``1..N`` makes the first entry ``N^2 F_1`` and the
    last ``N^2 F_N``; the full sum over ``k`` telescopes to zero.
    """
    f = np.asarray(values, dtype=float)
    n = f.size
    padded = np.concatenate(([0.0, 0.0], f, [0.0, 0.0]))
    return n * n * (padded[2:] + padded[:-2] - 2.0 * padded[1:-1])


def reconstruct(state: ParticleState) -> PiecewiseDensity:
    """Piecewise-constant density with height ``R_i`` on ``[x_{i-1}, x_i)``."""
    return PiecewiseDensity(state.positions, densities(state))
