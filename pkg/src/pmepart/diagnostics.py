"""Bound checks along particle trajectories.

Each theorem-grade estimate of the particle system is exposed twice: as a
formula (the bound's right-hand side) and as a check that walks a stored
trajectory and reports the per-time margin.  A margin is the signed slack
before tolerance, so a check passes when every margin stays above minus its
allowed slack.  The central quantity is the per-cell convexity indicator
``Z_k = R_k * Lap_k[R^m]``, whose running minimum can only relax towards zero
at a universal rate: that single fact drives the support growth, sup-norm
decay, and total-variation bounds checked here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import ParticleState, densities, discrete_laplacian, gaps
from .dynamics import Trajectory
from .sampling import barrier_profile_integral

DIAGNOSTICS_SCHEMA = "pmepart.diagnostics.v1"
DIAGNOSTICS_COLUMNS = (
    "t",
    "z_min",
    "ab_bound",
    "ab_margin",
    "support",
    "support_bound_init",
    "support_bound_univ",
    "max_density",
    "linf_bound",
    "tv_halfpower",
)


def z_vector(state: ParticleState) -> np.ndarray:
    """Convexity indicator ``Z_k = R_k * Lap_k[R^m]`` for ``k = 1..N``."""
    r = densities(state)
    lap = discrete_laplacian(r**state.m)
    return r * lap[1:-1]


def ab_lower_bound(zbar: float, m: float, t: float) -> float:
    """Lower bound ``-1 / (|zbar|^{-1} + (m+1) t)`` on the minimum of ``Z``.

    ``zbar`` is the (always negative) initial minimum of the Z vector; the
    bound equals ``zbar`` at ``t = 0`` and relaxes monotonically to zero.
    """
    if not zbar < 0.0:
        raise ValueError(f"initial Z minimum must be negative, got {zbar}")
    if not t >= 0.0:
        raise ValueError("time must be nonnegative")
    return -1.0 / (1.0 / abs(zbar) + (m + 1.0) * t)


def support_length(state: ParticleState) -> float:
    """Total length ``x_N - x_0`` of the configuration."""
    return float(state.positions[-1] - state.positions[0])


def support_bound_ab(l0: float, zbar: float, m: float, t: float) -> float:
    """Support bound ``L(0) (1 + |zbar| (m+1) t)^{1/(m+1)}`` driven by the initial Z minimum."""
    if not zbar < 0.0:
        raise ValueError(f"initial Z minimum must be negative, got {zbar}")
    return float(l0 * (1.0 + abs(zbar) * (m + 1.0) * t) ** (1.0 / (m + 1.0)))


def support_growth_constant(m: float) -> float:
    """Universal constant ``B`` in the data-independent support bound ``L(0) + B t^{1/(m+1)}``.

    ``B = 4^{-(1/m - 1/2)/(m+1)} (m+1)^{1/(m+1)} ell`` with ``ell`` the
    integral of the barrier weight; for ``m = 2`` this is ``3^{1/3} pi``.
    """
    if not m > 1.0:
        raise ValueError("requires m > 1")
    ell = barrier_profile_integral(m)
    return float(
        4.0 ** (-(1.0 / m - 0.5) / (m + 1.0)) * (m + 1.0) ** (1.0 / (m + 1.0)) * ell
    )


def linf_bound(m: float, t: float) -> float:
    """Universal density ceiling ``((m+1) / (16 m t))^{1/(m+1)}`` at time ``t > 0``."""
    if not t > 0.0:
        raise ValueError("the sup-norm bound holds for t > 0")
    return float(((m + 1.0) / (16.0 * m * t)) ** (1.0 / (m + 1.0)))


def tv_bound(m: float, t: float) -> float:
    """Ceiling ``((m+1) / (4 m t))^{1/2}`` on the half-power total variation."""
    if not t > 0.0:
        raise ValueError("the total-variation bound holds for t > 0")
    return float(((m + 1.0) / (4.0 * m * t)) ** 0.5)


def tv_halfpower(state: ParticleState) -> float:
    """Total variation of the cell densities raised to the power ``(m+1)/2``.

    Boundary cells compare against zero, so a single uniform block of height
    ``h`` contributes ``2 h^{(m+1)/2}``.
    """
    r = densities(state) ** (0.5 * (state.m + 1.0))
    padded = np.concatenate(([0.0], r, [0.0]))
    return float(np.sum(np.abs(np.diff(padded))))


def max_density(state: ParticleState) -> float:
    return float(np.max(densities(state)))


# -- trajectory distances -----------------------------------------------------


def metric_dh(a: ParticleState, b: ParticleState, h) -> float:
    """Distance ``((1/N) sum_{i=0}^{N-1} (x_i - y_i)^{2h})^{1/(2h)}``; ``h = inf`` gives the max.

    Both conventions follow the piecewise-constant interpolation of particle
    positions over ``(0, 1)``, which drops the last index; see
    :func:`metric_dinf_full` for the max over all indices.
    """
    if a.n != b.n:
        raise ValueError(f"states have different sizes: {a.n} vs {b.n}")
    diff = a.positions[:-1] - b.positions[:-1]
    if h == math.inf:
        return float(np.max(np.abs(diff)))
    h = int(h)
    if h < 1:
        raise ValueError("order h must be a positive integer or inf")
    return float(np.mean(diff ** (2 * h)) ** (1.0 / (2 * h)))


def metric_dh_full(a: ParticleState, b: ParticleState, h) -> float:
    """Like :func:`metric_dh` but averaging over all indices ``0..N``.

    Including the last particle closes the summation by parts in the
    monotonicity argument: with both zero-padded boundary cells present, every
    term of the time derivative has a sign, so this variant is non-increasing
    along pairs of trajectories.  The truncated variant leaves an unsigned
    boundary term and can transiently grow.
    """
    if a.n != b.n:
        raise ValueError(f"states have different sizes: {a.n} vs {b.n}")
    diff = a.positions - b.positions
    if h == math.inf:
        return float(np.max(np.abs(diff)))
    h = int(h)
    if h < 1:
        raise ValueError("order h must be a positive integer or inf")
    return float(np.mean(diff ** (2 * h)) ** (1.0 / (2 * h)))


def metric_dinf_full(a: ParticleState, b: ParticleState) -> float:
    """Max position deviation over all indices ``0..N`` (both endpoints included)."""
    return metric_dh_full(a, b, math.inf)


def w1_upper(a: ParticleState, b: ParticleState) -> float:
    """Upper bound ``(1/N) sum_{i=0}^{N} |x_i - y_i|`` on the 1-Wasserstein distance
    of the two reconstructions."""
    if a.n != b.n:
        raise ValueError(f"states have different sizes: {a.n} vs {b.n}")
    return float(np.sum(np.abs(a.positions - b.positions)) / a.n)


# -- bound reports ------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """Margins of one bound along a trajectory; negative dips within ``slack`` pass."""

    name: str
    times: np.ndarray
    margins: np.ndarray
    slack: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margins >= -self.slack))

    @property
    def worst_index(self) -> int:
        return int(np.argmin(self.margins + self.slack))

    @property
    def worst_time(self) -> float:
        return float(self.times[self.worst_index])

    @property
    def worst_margin(self) -> float:
        return float(self.margins[self.worst_index])

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: worst margin {self.worst_margin:.3e} "
            f"(allowed {-self.slack[self.worst_index]:.3e}) at t={self.worst_time:g}"
        )


def initial_z_min(traj: Trajectory) -> float:
    return float(np.min(z_vector(traj.states[0])))


def check_ab(traj: Trajectory, tol_factor: float = 1e-6) -> BoundReport:
    """Minimum of Z against its universal relaxation bound, at every stored time."""
    zbar = initial_z_min(traj)
    m = traj.m
    times = traj.times
    margins = np.array(
        [np.min(z_vector(s)) - ab_lower_bound(zbar, m, s.t) for s in traj.states]
    )
    slack = np.full(times.size, tol_factor * abs(zbar))
    return BoundReport("aronson-benilan", times, margins, slack)


def check_minimum_principle(traj: Trajectory, tol_factor: float = 1e-6) -> BoundReport:
    """Minimum gap never falls below its initial value."""
    d0 = float(np.min(gaps(traj.states[0])))
    margins = np.array([np.min(gaps(s)) - d0 for s in traj.states])
    slack = np.full(margins.size, tol_factor * d0)
    return BoundReport("minimum-principle", traj.times, margins, slack)


def check_support_ab(traj: Trajectory, tol_factor: float = 1e-6) -> BoundReport:
    """Support length against the bound driven by the initial Z minimum."""
    zbar = initial_z_min(traj)
    l0 = support_length(traj.states[0])
    bounds = np.array([support_bound_ab(l0, zbar, traj.m, s.t) for s in traj.states])
    values = np.array([support_length(s) for s in traj.states])
    return BoundReport("support-ab", traj.times, bounds - values, tol_factor * bounds)


def check_support_universal(traj: Trajectory, tol: float = 1e-6) -> BoundReport:
    """Support length against the data-independent bound ``L(0) + B t^{1/(m+1)}``."""
    b = support_growth_constant(traj.m)
    l0 = support_length(traj.states[0])
    exponent = 1.0 / (traj.m + 1.0)
    bounds = np.array([l0 + b * s.t**exponent for s in traj.states])
    values = np.array([support_length(s) for s in traj.states])
    return BoundReport(
        "support-universal", traj.times, bounds - values, np.full(bounds.size, tol)
    )


def check_linf(
    traj: Trajectory, tol_factor: float = 1e-8, t_min: float = 0.01
) -> BoundReport:
    """Max cell density against the universal decay ceiling, for ``t >= t_min``."""
    kept = [s for s in traj.states if s.t >= t_min]
    times = np.array([s.t for s in kept])
    bounds = np.array([linf_bound(traj.m, s.t) for s in kept])
    values = np.array([max_density(s) for s in kept])
    return BoundReport("linf-decay", times, bounds - values, tol_factor * bounds)


def check_tv(
    traj: Trajectory, tol_factor: float = 1e-6, t_min: float = 0.01
) -> BoundReport:
    """Half-power total variation against its decay ceiling, for ``t >= t_min``."""
    kept = [s for s in traj.states if s.t >= t_min]
    times = np.array([s.t for s in kept])
    bounds = np.array([tv_bound(traj.m, s.t) for s in kept])
    values = np.array([tv_halfpower(s) for s in kept])
    return BoundReport("tv-halfpower", times, bounds - values, tol_factor * bounds)


def check_density_lower(traj: Trajectory, tol_factor: float = 1e-6) -> BoundReport:
    """Each cell density stays above its initial value shrunk at the universal rate."""
    zbar = initial_z_min(traj)
    r0 = densities(traj.states[0])
    m = traj.m
    margins = np.empty(len(traj.states))
    for i, s in enumerate(traj.states):
        floor = r0 * (1.0 + abs(zbar) * (m + 1.0) * s.t) ** (-1.0 / (m + 1.0))
        margins[i] = float(np.min(densities(s) - floor))
    slack = np.full(margins.size, tol_factor * float(np.min(r0)))
    return BoundReport("density-lower", traj.times, margins, slack)


def verify_trajectory(traj: Trajectory, t_min: float = 0.01) -> list[BoundReport]:
    """Run the full bound suite on one trajectory."""
    return [
        check_ab(traj),
        check_minimum_principle(traj),
        check_support_ab(traj),
        check_support_universal(traj),
        check_linf(traj, t_min=t_min),
        check_tv(traj, t_min=t_min),
    ]


def check_contraction(
    traj_a: Trajectory,
    traj_b: Trajectory,
    orders: Sequence = (1, 2, 4, math.inf),
    slack: float = 1e-9,
) -> list[BoundReport]:
    """Pairwise trajectory distances must be non-increasing across stored times.

    Uses the all-indices distances (see :func:`metric_dh_full`), the variant
    for which monotonicity actually holds.
    """
    if not np.array_equal(traj_a.times, traj_b.times):
        raise ValueError("trajectories must share their output grid")
    reports = []
    for h in orders:
        d = np.array(
            [metric_dh_full(a, b, h) for a, b in zip(traj_a.states, traj_b.states)]
        )
        margins = d[:-1] - d[1:]
        label = "inf" if h == math.inf else str(h)
        reports.append(
            BoundReport(
                f"contraction-d{label}",
                traj_a.times[1:],
                margins,
                np.full(margins.size, slack),
            )
        )
    return reports


# -- weak-form consistency ----------------------------------------------------


class ConsistencyTriple(NamedTuple):
    """Time-integrated weak-form terms ``(I, J, K)`` for one test function."""

    i: float
    j: float
    k: float

    @property
    def residual(self) -> float:
        return abs(self.i + self.j + self.k)


class SmoothBump:
    """Smooth compactly supported test function ``psi((t-tc)/tw) psi((x-xc)/xw)``.

    ``psi(u) = exp(1 - 1/(1 - u^2))`` for ``|u| < 1`` and zero outside, so all
    derivatives vanish at the support boundary.
    """

    def __init__(self, t_center=0.0, t_width=1.0, x_center=0.0, x_width=1.0):
        if t_width <= 0.0 or x_width <= 0.0:
            raise ValueError("bump widths must be positive")
        self.t_center = float(t_center)
        self.t_width = float(t_width)
        self.x_center = float(x_center)
        self.x_width = float(x_width)

    @property
    def time_support(self) -> float:
        """Upper end of the time support."""
        return self.t_center + self.t_width

    @staticmethod
    def _psi(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        v = u[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - v * v))
        return out

    @staticmethod
    def _dpsi(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        v = u[inside]
        w = 1.0 - v * v
        out[inside] = np.exp(1.0 - 1.0 / w) * (-2.0 * v / (w * w))
        return out

    def value(self, t, x):
        return self._psi((t - self.t_center) / self.t_width) * self._psi(
            (x - self.x_center) / self.x_width
        )

    def dt(self, t, x):
        return (
            self._dpsi((t - self.t_center) / self.t_width)
            / self.t_width
            * self._psi((x - self.x_center) / self.x_width)
        )

    def dx(self, t, x):
        return (
            self._psi((t - self.t_center) / self.t_width)
            * self._dpsi((x - self.x_center) / self.x_width)
            / self.x_width
        )


def consistency_triple(traj: Trajectory, phi) -> ConsistencyTriple:
    """Weak-form terms of one test function along a stored trajectory.

    ``I`` integrates the particle average of the time derivative of ``phi``,
    ``J`` the density-weighted increments of its space derivative, and ``K``
    is the particle average of ``phi`` at time zero.  For a smooth test
    function supported strictly inside the time window, ``I + J + K``
    vanishes up to the (second-order) trapezoid error of the stored grid.

    Objects declaring a ``time_support`` attribute are validated against the
    trajectory's final time; undeclared functions are integrated as given.
    """
    times = traj.times
    if times.size < 2:
        raise ValueError("consistency needs a trajectory with at least two times")
    t_end = float(times[-1])
    declared = getattr(phi, "time_support", None)
    if declared is not None and declared >= t_end:
        raise ValueError(
            f"test function time support {declared!r} is not compactly contained "
            f"in [0, {t_end!r})"
        )

    n = traj.n
    i_values = np.empty(times.size)
    j_values = np.empty(times.size)
    for idx, s in enumerate(traj.states):
        x = s.positions
        i_values[idx] = float(np.sum(phi.dt(s.t, x))) / n
        dphi = np.diff(phi.dx(s.t, x))
        j_values[idx] = float(np.sum(dphi * densities(s) ** s.m))
    i_term = float(np.trapezoid(i_values, times))
    j_term = float(np.trapezoid(j_values, times))
    x0 = traj.states[0].positions
    k_term = float(np.sum(phi.value(0.0, x0))) / n
    return ConsistencyTriple(i_term, j_term, k_term)


def subsampled(traj: Trajectory, stride: int) -> Trajectory:
    """View of a trajectory on every ``stride``-th stored time (endpoints kept)."""
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    count = len(traj.states)
    picks = list(range(0, count - 1, stride)) + [count - 1]
    return Trajectory([traj.states[i] for i in picks], traj.stats)


# -- per-time records and CSV serialization -----------------------------------


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Every bound-relevant quantity of one stored state."""

    t: float
    z: np.ndarray
    z_min: float
    ab_bound: float
    support: float
    support_bound_init: float
    support_bound_univ: float
    max_density: float
    linf_bound: float
    tv_halfpower: float


def diagnostics_series(traj: Trajectory) -> list[DiagnosticsRecord]:
    zbar = initial_z_min(traj)
    l0 = support_length(traj.states[0])
    m = traj.m
    b = support_growth_constant(m)
    records = []
    for s in traj.states:
        z = z_vector(s)
        records.append(
            DiagnosticsRecord(
                t=s.t,
                z=z,
                z_min=float(np.min(z)),
                ab_bound=ab_lower_bound(zbar, m, s.t),
                support=support_length(s),
                support_bound_init=support_bound_ab(l0, zbar, m, s.t),
                support_bound_univ=l0 + b * s.t ** (1.0 / (m + 1.0)),
                max_density=max_density(s),
                linf_bound=linf_bound(m, s.t) if s.t > 0.0 else math.inf,
                tv_halfpower=tv_halfpower(s),
            )
        )
    return records


def format_diagnostics_csv(records: Iterable[DiagnosticsRecord]) -> str:
    lines = [f"# schema: {DIAGNOSTICS_SCHEMA}", ",".join(DIAGNOSTICS_COLUMNS)]
    for r in records:
        row = (
            r.t,
            r.z_min,
            r.ab_bound,
            r.z_min - r.ab_bound,
            r.support,
            r.support_bound_init,
            r.support_bound_univ,
            r.max_density,
            r.linf_bound,
            r.tv_halfpower,
        )
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_diagnostics_csv(path, traj: Trajectory) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_diagnostics_csv(diagnostics_series(traj)))
