"""Initial particle configurations from probability densities.

Sampling goes through the cumulative distribution function: the
support-preserving map pins the first and last particle to the edges of the
support and places each interior particle where the mass accrued since its
predecessor first reaches ``1/N``.  The same machinery provides the
right-continuous pseudo-inverse (quantile function) and the 1-Wasserstein
distance, which for piecewise-constant densities reduces to an exact
piecewise-linear integral of quantile differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .core import ParticleState, PiecewiseDensity
from .reference import BarenblattProfile

# resolution of the cached cumulative-mass table; local quadrature refines
# inside a single segment, so the table only needs to bracket quantiles
_TABLE_SEGMENTS = 1024
_QUANTILE_XTOL = 1e-10


class DensitySpec:
    """A compactly supported probability density given by a pointwise evaluator.

    Parameters
    ----------
    pdf : callable
        Evaluates the density at a scalar ``x``; must be nonnegative.
    support : pair of floats
        Interval ``[a, b]`` outside of which the density vanishes.
    quad_points : iterable of floats, optional
        Interior kinks or discontinuities of the density, used to split the
        quadrature grid.
    name : str, optional
        Label used in error messages and CLI output.

    The numeric mass over ``[a, b]`` must come out within ``1e-8`` of one;
    this is checked when the cumulative table is first built.
    """

    def __init__(self, pdf, support, quad_points=(), name="density"):
        a, b = float(support[0]), float(support[1])
        if not a < b:
            raise ValueError("support interval must have positive length")
        self.pdf = pdf
        self.support = (a, b)
        self.quad_points = tuple(sorted(p for p in quad_points if a < p < b))
        self.name = name
        self._grid = None
        self._cum = None

    def _table(self):
        """Cumulative mass on a fixed grid, built lazily and cached."""
        if self._grid is None:
            a, b = self.support
            grid = np.union1d(
                np.linspace(a, b, _TABLE_SEGMENTS + 1), np.asarray(self.quad_points)
            )
            masses = np.empty(grid.size - 1)
            for j in range(grid.size - 1):
                masses[j], _ = quad(
                    self.pdf, grid[j], grid[j + 1], epsabs=1e-15, epsrel=1e-12, limit=100
                )
            if np.any(masses < -1e-12):
                raise ValueError(f"{self.name}: density evaluates negative")
            cum = np.concatenate(([0.0], np.cumsum(np.maximum(masses, 0.0))))
            if abs(cum[-1] - 1.0) > 1e-8:
                raise ValueError(
                    f"{self.name}: mass over the support hint is {cum[-1]!r}, not 1"
                )
            self._grid, self._cum = grid, cum
        return self._grid, self._cum

    def cdf(self, x: float) -> float:
        """Cumulative mass to the left of ``x``."""
        grid, cum = self._table()
        if x <= grid[0]:
            return 0.0
        if x >= grid[-1]:
            return float(cum[-1])
        j = int(np.searchsorted(grid, x, side="right")) - 1
        local, _ = quad(self.pdf, grid[j], x, epsabs=1e-15, epsrel=1e-12, limit=100)
        return float(cum[j] + local)

    def has_interior_mass_gap(self) -> bool:
        """True if some interval of zero mass separates two massive regions."""
        grid, cum = self._table()
        masses = np.diff(cum)
        positive = np.nonzero(masses > 0.0)[0]
        if positive.size == 0:
            return False
        inner = masses[positive[0] : positive[-1] + 1]
        return bool(np.any(inner == 0.0))


def cdf_pseudo_inverse(density: DensitySpec, z: float) -> float:
    """Right-continuous pseudo-inverse ``inf{x : F(x) > z}`` for ``z in (0, 1)``.

    Bracketed on the cached cumulative table, then refined by a
    bisection/secant hybrid that keeps ``F(lo) <= z < F(hi)`` until the
    bracket is shorter than 1e-10.
    """
    if not 0.0 < z < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {z}")
    grid, cum = density._table()
    if z >= cum[-1]:
        raise ValueError(
            f"{density.name}: cannot bracket level {z} within the support hint "
            f"(numeric mass {cum[-1]!r})"
        )
    # searchsorted(..., 'right') skips flat stretches of the CDF, landing on
    # the segment whose right endpoint first exceeds z
    j = int(np.searchsorted(cum, z, side="right")) - 1
    lo, hi = float(grid[j]), float(grid[j + 1])
    f_lo, f_hi = float(cum[j]), float(cum[j + 1])
    anchor, f_anchor = lo, f_lo

    def cdf_local(x: float) -> float:
        val, _ = quad(density.pdf, anchor, x, epsabs=1e-15, epsrel=1e-12, limit=100)
        return f_anchor + val

    use_secant = True
    while hi - lo > _QUANTILE_XTOL:
        if use_secant and f_hi > f_lo:
            x = lo + (z - f_lo) / (f_hi - f_lo) * (hi - lo)
            # keep the candidate safely interior so the bracket always shrinks
            x = min(max(x, lo + 0.125 * (hi - lo)), hi - 0.125 * (hi - lo))
        else:
            x = 0.5 * (lo + hi)
        use_secant = not use_secant
        f_x = cdf_local(x)
        if f_x > z:
            hi, f_hi = x, f_x
        else:
            lo, f_lo = x, f_x
    return 0.5 * (lo + hi)


def sample_support_preserving(density: DensitySpec, n: int, m: float) -> ParticleState:
    """Particle configuration with ``x_0``, ``x_N`` at the support edges.

    Interior particles sit at the quantile levels ``i/N``, i.e. each is the
    smallest point accruing mass ``1/N`` beyond its predecessor.  Densities
    with interior zero-mass intervals are rejected: they would produce
    degenerate (non strictly ordered) configurations.
    """
    if n < 1:
        raise ValueError("need at least one interval")
    if density.has_interior_mass_gap():
        raise ValueError(
            f"{density.name}: interior interval of zero mass; support-preserving "
            "sampling needs a connected support"
        )
    a, b = density.support
    positions = np.empty(n + 1)
    positions[0] = a
    positions[n] = b
    for i in range(1, n):
        positions[i] = cdf_pseudo_inverse(density, i / n)
    if np.any(np.diff(positions) <= 0.0):
        raise ValueError(
            f"{density.name}: sampling produced non-strictly-increasing positions"
        )
    return ParticleState(positions, m=m, t=0.0)


# -- barrier configuration ---------------------------------------------------


def barrier_profile(z, m: float):
    """The convex weight ``f(z) = (z (1 - z))^{-1/m}`` on ``(0, 1)``."""
    z = np.asarray(z, dtype=float)
    out = (z * (1.0 - z)) ** (-1.0 / m)
    return out if out.ndim else float(out)


def barrier_profile_integral(m: float) -> float:
    """``integral_0^1 (z(1-z))^{-1/m} dz``, finite for ``m > 1``.

    Computed after the substitution ``z = sin^2(theta)``, which turns the
    endpoint singularities into the integrable power ``(sin cos)^{1 - 2/m}``.
    """
    if not m > 1.0:
        raise ValueError("the weight is integrable only for m > 1")

    def integrand(theta):
        return 2.0 * (math.sin(theta) * math.cos(theta)) ** (1.0 - 2.0 / m)

    val, _ = quad(integrand, 0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(val)


@dataclass(frozen=True)
class BarrierConfig:
    """Parameters of the short-support comparison configuration.

    ``beta`` scales the support (total length at most ``beta * ell``) and
    ``alpha`` anchors its left end.  ``ell`` is derived from ``m``.
    """

    n: int
    m: float
    beta: float
    alpha: float = 0.0
    ell: float = field(init=False)

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("barrier configuration requires N >= 4")
        if not self.m > 1.0:
            raise ValueError("barrier configuration requires m > 1")
        if not self.beta > 0.0:
            raise ValueError("scale beta must be positive")
        object.__setattr__(self, "ell", barrier_profile_integral(self.m))


def barrier_densities(cfg: BarrierConfig) -> np.ndarray:
    """Cell densities ``S_k = 1 / (beta f((k - 1/2) / N))`` for ``k = 1..N``."""
    k = np.arange(1, cfg.n + 1)
    return 1.0 / (cfg.beta * barrier_profile((k - 0.5) / cfg.n, cfg.m))


def barrier_configuration(cfg: BarrierConfig) -> ParticleState:
    """Particle positions realizing the barrier densities.

    ``y_j = alpha + (1/N) sum_{k<=j} 1/S_k``; the resulting support length is
    at most ``beta * ell`` because the midpoint rule underestimates the
    integral of the convex weight.
    """
    s = barrier_densities(cfg)
    positions = cfg.alpha + np.concatenate(([0.0], np.cumsum(1.0 / (cfg.n * s))))
    return ParticleState(positions, m=cfg.m, t=0.0)


# -- quantile functions and the 1-Wasserstein distance ------------------------


@dataclass(frozen=True)
class QuantileTable:
    """Knots of a piecewise-linear quantile function: level ``z[i]`` maps to ``x[i]``."""

    z: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        x = np.array(self.x, dtype=float)
        if z.size != x.size or z.size < 2:
            raise ValueError("quantile table needs matching z and x arrays")
        if np.any(np.diff(z) < 0.0) or np.any(np.diff(x) < 0.0):
            raise ValueError("quantile table must be non-decreasing")
        z.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)


def quantile_table(density: PiecewiseDensity) -> QuantileTable:
    """Exact quantile function of a piecewise-constant density."""
    masses = np.diff(density.breakpoints) * density.heights
    z = np.concatenate(([0.0], np.cumsum(masses)))
    return QuantileTable(z, density.breakpoints)


def _quantile_on_segment(table: QuantileTable, za: float, zb: float):
    """Values of the quantile function at both ends of ``(za, zb)``.

    The segment must not straddle a knot of ``table``; the caller guarantees
    this by merging knot sets first.
    """
    mid = 0.5 * (za + zb)
    i = int(np.searchsorted(table.z, mid, side="right")) - 1
    i = min(max(i, 0), table.z.size - 2)
    z0, z1 = table.z[i], table.z[i + 1]
    x0, x1 = table.x[i], table.x[i + 1]
    if z1 <= z0:  # zero-mass cell: vertical jump, only reachable at zero width
        return x0, x1
    slope = (x1 - x0) / (z1 - z0)
    return x0 + slope * (za - z0), x0 + slope * (zb - z0)


def wasserstein1(p: PiecewiseDensity, q: PiecewiseDensity) -> float:
    """1-Wasserstein distance between two piecewise-constant unit-mass densities.

    Equals the ``L^1(0,1)`` distance of the quantile functions, integrated
    exactly segment by segment on the merged knot grid (splitting segments at
    sign changes of the difference).
    """
    tp, tq = quantile_table(p), quantile_table(q)
    zs = np.union1d(tp.z, tq.z)
    zs = zs[(zs >= 0.0) & (zs <= 1.0)]
    total = 0.0
    for za, zb in zip(zs[:-1], zs[1:]):
        w = zb - za
        if w <= 0.0:
            continue
        pa, pb = _quantile_on_segment(tp, za, zb)
        qa, qb = _quantile_on_segment(tq, za, zb)
        da, db = pa - qa, pb - qb
        if da * db >= 0.0:
            total += 0.5 * w * (abs(da) + abs(db))
        else:
            # linear difference crosses zero inside the segment
            total += 0.5 * w * (da * da + db * db) / abs(da - db)
    return total


# -- named densities -----------------------------------------------------------


def uniform_density(a: float, b: float) -> DensitySpec:
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("uniform density needs a < b")
    h = 1.0 / (b - a)
    return DensitySpec(lambda x: h if a <= x <= b else 0.0, (a, b), name=f"uniform[{a},{b}]")


def barenblatt_density(m: float, t0: float = 1.0, mass: float = 1.0) -> DensitySpec:
    """The self-similar profile frozen at time ``t0``, as a sampling density."""
    if not t0 > 0.0:
        raise ValueError("profile time must be positive")
    profile = BarenblattProfile.with_mass(m, mass)
    a = profile.halfwidth(t0)
    return DensitySpec(
        lambda x: profile.density(t0, x),
        (-a, a),
        name=f"barenblatt[m={m},t0={t0}]",
    )


def truncated_gaussian_density(a: float, b: float, sigma: float) -> DensitySpec:
    """Gaussian centered at the midpoint of ``[a, b]``, truncated and renormalized."""
    a, b = float(a), float(b)
    if not (a < b and sigma > 0.0):
        raise ValueError("need a < b and sigma > 0")
    mu = 0.5 * (a + b)
    weight, _ = quad(
        lambda x: math.exp(-0.5 * ((x - mu) / sigma) ** 2), a, b, epsabs=1e-14
    )

    def pdf(x):
        if x < a or x > b:
            return 0.0
        return math.exp(-0.5 * ((x - mu) / sigma) ** 2) / weight

    return DensitySpec(pdf, (a, b), name=f"gaussian-truncated[{a},{b},{sigma}]")


def density_from_name(text: str) -> DensitySpec:
    """Parse a density description like ``"uniform 0 1"``.

    Known forms: ``uniform a b``, ``barenblatt m t0 mass``,
    ``gaussian-truncated a b sigma``.  The barrier configuration is not a
    density; see :func:`initial_state_from_name`.
    """
    fields = text.split()
    if not fields:
        raise ValueError("empty density description")
    kind, args = fields[0], fields[1:]
    try:
        values = [float(v) for v in args]
    except ValueError as exc:
        raise ValueError(f"non-numeric parameter in density {text!r}") from exc
    if kind == "uniform" and len(values) == 2:
        return uniform_density(*values)
    if kind == "barenblatt" and len(values) == 3:
        return barenblatt_density(*values)
    if kind == "gaussian-truncated" and len(values) == 3:
        return truncated_gaussian_density(*values)
    raise ValueError(f"unknown density description {text!r}")


def initial_state_from_name(text: str, n: int, m: float) -> ParticleState:
    """Initial particle state for a named density, or a barrier configuration.

    ``"barrier N m beta alpha"`` builds the configuration directly from its
    own parameters; every other name is sampled with the support-preserving
    map using ``n`` and ``m``.
    """
    fields = text.split()
    if fields and fields[0] == "barrier":
        if len(fields) != 5:
            raise ValueError("barrier takes exactly: barrier N m beta alpha")
        cfg = BarrierConfig(
            n=int(fields[1]), m=float(fields[2]), beta=float(fields[3]), alpha=float(fields[4])
        )
        return barrier_configuration(cfg)
    return sample_support_preserving(density_from_name(text), n, m)
