"""Exact solutions and error norms for convergence studies.

The Barenblatt family is the self-similar source-type solution of
``rho_t = (rho^m)_xx``; it saturates the Aronson-Benilan lower bound, the
support growth rate, and the sup-norm decay rate, which makes it the natural
reference profile for every bound checked by this package.  The two-particle
system also has a closed-form gap evolution, used as an exact oracle for the
time integrator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.integrate import quad
from scipy.special import beta as beta_function

from .core import PiecewiseDensity


@dataclass(frozen=True)
class BarenblattProfile:
    """Self-similar profile ``t^{-1/(m+1)} B(t^{-1/(m+1)} x)`` with mass parameter ``c_m``.

    ``B(xi) = (c_m^{m-1} - ((m-1)/(2m(m+1))) xi^2)_+^{1/(m-1)}``.
    """

    m: float
    c_m: float

    def __post_init__(self):
        if not self.m > 1.0:
            raise ValueError("Barenblatt profile requires m > 1")
        if not self.c_m > 0.0:
            raise ValueError("mass parameter must be positive")

    @classmethod
    def with_mass(cls, m: float, mass: float = 1.0) -> "BarenblattProfile":
        return cls(m, barenblatt_mass_parameter(m, mass))

    @property
    def mass(self) -> float:
        return _mass_closed_form(self.m, self.c_m)

    def halfwidth(self, t: float) -> float:
        """Support half-width at time ``t``: the profile vanishes for ``|x|`` beyond it."""
        m = self.m
        xi_edge = np.sqrt(2.0 * m * (m + 1.0) / (m - 1.0) * self.c_m ** (m - 1.0))
        return float(xi_edge * t ** (1.0 / (m + 1.0)))

    def density(self, t: float, x) -> np.ndarray:
        return barenblatt_eval(self, t, x)


def barenblatt_eval(profile: BarenblattProfile, t: float, x) -> np.ndarray:
    """Evaluate the self-similar solution at time ``t > 0`` and positions ``x``."""
    if not t > 0.0:
        raise ValueError("the self-similar solution is evaluated at t > 0")
    m = profile.m
    scale = t ** (-1.0 / (m + 1.0))
    xi = scale * np.asarray(x, dtype=float)
    core = profile.c_m ** (m - 1.0) - (m - 1.0) / (2.0 * m * (m + 1.0)) * xi**2
    out = scale * np.maximum(core, 0.0) ** (1.0 / (m - 1.0))
    return out if out.ndim else float(out)


def _mass_closed_form(m: float, c_m: float) -> float:
    # integral of B: substitute xi = a*u with a the edge of the parabola's
    # positive part, leaving a Beta-function integral of (1 - u^2)^{1/(m-1)}
    a = np.sqrt(2.0 * m * (m + 1.0) / (m - 1.0) * c_m ** (m - 1.0))
    return float(c_m * a * beta_function(0.5, 1.0 / (m - 1.0) + 1.0))


def barenblatt_mass_parameter(m: float, mass: float) -> float:
    """The unique ``c_m > 0`` giving the profile total mass ``mass`` at every time."""
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    if not m > 1.0:
        raise ValueError("requires m > 1")
    # mass = c_m^{(m+1)/2} * sqrt(2m(m+1)/(m-1)) * Beta(1/2, m/(m-1))
    factor = np.sqrt(2.0 * m * (m + 1.0) / (m - 1.0)) * beta_function(
        0.5, 1.0 / (m - 1.0) + 1.0
    )
    return float((mass / factor) ** (2.0 / (m + 1.0)))


def n1_gap_closed_form(d0: float, m: float, t: float) -> float:
    """Exact gap of the two-particle system: ``(d0^{m+1} + 2(m+1)t)^{1/(m+1)}``."""
    if not d0 > 0.0:
        raise ValueError("initial gap must be positive")
    return float((d0 ** (m + 1.0) + 2.0 * (m + 1.0) * t) ** (1.0 / (m + 1.0)))


def _cells(approx: PiecewiseDensity, support, extra_breakpoints) -> np.ndarray:
    lo = min(float(support[0]), float(approx.breakpoints[0]))
    hi = max(float(support[1]), float(approx.breakpoints[-1]))
    edges = np.concatenate(
        [approx.breakpoints, [lo, hi], np.asarray(list(extra_breakpoints), dtype=float)]
    )
    edges = np.unique(edges)
    return edges[(edges >= lo) & (edges <= hi)]


def _norm_error(
    approx: PiecewiseDensity,
    exact: Callable[[float], float],
    support,
    power: float,
    extra_breakpoints: Iterable[float],
) -> float:
    edges = _cells(approx, support, extra_breakpoints)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0.0:
            continue
        height = float(approx(0.5 * (lo + hi)))
        val, _ = quad(
            lambda x: abs(height - exact(x)) ** power,
            lo,
            hi,
            epsabs=1e-12,
            epsrel=1e-10,
            limit=200,
        )
        total += val
    return total


def l1_error(
    approx: PiecewiseDensity,
    exact: Callable[[float], float],
    support,
    extra_breakpoints: Iterable[float] = (),
) -> float:
    """``L^1`` distance between a piecewise-constant density and an exact profile.

    Integrates ``|approx - exact|`` by per-cell adaptive quadrature over the
    union of ``support`` and the approximation's own support.  Known kinks of
    ``exact`` (e.g. support edges) can be passed as ``extra_breakpoints`` to
    speed up and sharpen the quadrature.
    """
    return _norm_error(approx, exact, support, 1.0, extra_breakpoints)


def lm_error(
    approx: PiecewiseDensity,
    exact: Callable[[float], float],
    support,
    m: float,
    extra_breakpoints: Iterable[float] = (),
) -> float:
    """``L^m`` distance, computed like :func:`l1_error` with the integrand ``|.|^m``."""
    return _norm_error(approx, exact, support, float(m), extra_breakpoints) ** (1.0 / m)
