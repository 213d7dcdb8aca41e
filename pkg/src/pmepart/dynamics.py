"""Right-hand side assembly and adaptive time integration of the particle system.

Every particle moves with the difference of the m-th powers of its two
neighboring cell densities (outer cells read zero), which makes the system a
nearest-neighbor ODE on the open cone of strictly ordered configurations.
Integration uses the Dormand-Prince 5(4) embedded pair with standard step
control, plus a gap guard that rejects any step shrinking some interval below
a fraction of the initial minimum gap: the exact flow never contracts the
minimum gap, so such a step can only be a numerical artifact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ParticleState, densities, discrete_laplacian, forward_diff

# Dormand-Prince 5(4) tableau; the propagated solution is 5th order and the
# last stage is the FSAL evaluation at the step endpoint.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_ERR = (
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)

_SAFETY = 0.9
_GROW_CLAMP = 5.0
_SHRINK_CLAMP = 0.2


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control and output settings for :func:`integrate`.

    ``gap_guard`` is the fraction of the initial minimum gap below which a
    trial step is rejected outright.  Output states are recorded exactly at
    ``output_times`` (the step size is clipped to land on them); ``t = 0`` is
    always recorded.
    """

    output_times: Sequence[float]
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = math.inf
    gap_guard: float = 0.5
    store_steps: bool = False

    def __post_init__(self):
        times = np.unique(np.asarray(self.output_times, dtype=float))
        if times.size == 0:
            raise ValueError("output_times must not be empty")
        if not np.all(np.isfinite(times)) or times[0] < 0.0:
            raise ValueError("output times must be finite and nonnegative")
        times.setflags(write=False)
        object.__setattr__(self, "output_times", times)
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.gap_guard < 1.0:
            raise ValueError("gap_guard must lie in (0, 1)")
        if not self.max_step > 0.0:
            raise ValueError("max_step must be positive")


@dataclass
class IntegratorStats:
    accepted: int = 0
    rejected: int = 0
    min_step: float = math.inf


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered particle states recorded along one integration."""

    states: list[ParticleState]
    stats: IntegratorStats

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def m(self) -> float:
        return self.states[0].m

    @property
    def n(self) -> int:
        return self.states[0].n

    def state_at(self, t: float) -> ParticleState:
        for s in self.states:
            if s.t == t:
                return s
        raise KeyError(f"no state stored at t={t!r}")


def _velocity(x: np.ndarray, m: float) -> np.ndarray:
    d = np.diff(x)
    n = d.size
    rm = (1.0 / (n * d)) ** m
    padded = np.concatenate(([0.0], rm, [0.0]))
    return -n * np.diff(padded)


def rhs(state: ParticleState) -> np.ndarray:
    """Particle velocities: ``-D+_i[R^m]`` with the zero-padding convention."""
    return _velocity(state.positions, state.m)


def rhs_density_form(state: ParticleState) -> np.ndarray:
    """Density time derivatives ``R_i^2 * Lap_i[R^m]`` for ``i = 1..N``."""
    r = densities(state)
    lap = discrete_laplacian(r**state.m)
    return r * r * lap[1:-1]


def initial_step_size(state: ParticleState, rtol: float) -> float:
    """Dimensional estimate of the step matching the RHS Lipschitz scale."""
    r_max = float(np.max(densities(state)))
    m = state.m
    scale = state.n**2 * r_max ** (m + 1.0) * 2.0 * (m + 1.0)
    return rtol**0.2 / scale


def integrate(initial: ParticleState, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the particle system, recording states at the requested times.

    Raises ``RuntimeError`` if the step size falls below ``1e-14`` times the
    current support length, which signals either a tolerance misconfiguration
    or an ordering violation.
    """
    m = initial.m
    x = initial.positions.copy()
    t = 0.0
    out_times = cfg.output_times
    t_end = float(out_times[-1])

    states = [ParticleState(x, m, 0.0)]
    stats = IntegratorStats()
    # skip a leading 0.0 output: the initial state is always recorded
    next_out = 1 if out_times[0] == 0.0 else 0
    if next_out >= out_times.size:
        return Trajectory(states, stats)

    guard = cfg.gap_guard * float(np.min(np.diff(x)))
    h = min(initial_step_size(initial, cfg.rtol), cfg.max_step, t_end)
    k = [np.empty(0)] * 7
    k[0] = _velocity(x, m)

    while t < t_end:
        if h < 1e-14 * (x[-1] - x[0]):
            raise RuntimeError(
                f"step size underflow at t={t!r} (h={h!r}): check tolerances "
                "and the ordering of the configuration"
            )
        target = float(out_times[next_out])
        landing = t + h >= target
        if landing:
            h = target - t

        with np.errstate(all="ignore"):
            for i in range(1, 7):
                yi = x + h * sum(a * k[j] for j, a in enumerate(_DP_A[i]) if a != 0.0)
                k[i] = _velocity(yi, m)
            x_new = yi  # stage 7 argument already is the 5th-order solution
            err = h * sum(e * k[j] for j, e in enumerate(_DP_ERR) if e != 0.0)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x), np.abs(x_new))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))

        gap_ok = np.all(np.diff(x_new) > guard)
        if math.isfinite(err_norm) and err_norm <= 1.0 and gap_ok:
            t = target if landing else t + h
            x = x_new
            k[0] = k[6]  # FSAL
            stats.accepted += 1
            stats.min_step = min(stats.min_step, h)
            recorded = False
            if landing:
                states.append(ParticleState(x, m, t))
                recorded = True
                next_out += 1
                if next_out >= out_times.size:
                    break
            if cfg.store_steps and not recorded:
                states.append(ParticleState(x, m, t))
            factor = _SAFETY * err_norm**-0.2 if err_norm > 0.0 else _GROW_CLAMP
            h = min(h * min(max(factor, _SHRINK_CLAMP), _GROW_CLAMP), cfg.max_step)
        else:
            stats.rejected += 1
            if not math.isfinite(err_norm):
                h *= _SHRINK_CLAMP
            elif err_norm <= 1.0:  # rejected by the gap guard alone
                h *= 0.5
            else:
                h *= min(max(_SAFETY * err_norm**-0.2, _SHRINK_CLAMP), 1.0)

    return Trajectory(states, stats)
