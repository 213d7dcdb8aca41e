"""Experiment harness: verification campaigns as reproducible subcommands.

Subcommands
-----------
simulate     one run; trajectory CSV + per-time diagnostics CSV
verify       run the bound suite (plus a seeded contraction suite); exit 0 iff all pass
convergence  N-sweep against the exact self-similar solution; error table
consistency  weak-form residuals |I+J+K| under output-grid refinement
barrier      emit the short-support comparison configuration

Settings resolve with precedence: command-line flags > config file > defaults.
The config file is flat ``key = value`` with ``#`` comments.  All CSV output
is UTF-8, comma-separated, '.' decimal, with a schema-versioned header.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, svgplot
from .core import ParticleState, reconstruct
from .dynamics import IntegratorConfig, Trajectory, integrate
from .reference import BarenblattProfile, l1_error, lm_error
from .sampling import (
    BarrierConfig,
    barrier_configuration,
    barrier_densities,
    barenblatt_density,
    initial_state_from_name,
    sample_support_preserving,
)

TRAJECTORY_SCHEMA = "pmepart.trajectory.v1"
VERIFY_SCHEMA = "pmepart.verify.v1"
CONVERGENCE_SCHEMA = "pmepart.convergence.v1"
CONSISTENCY_SCHEMA = "pmepart.consistency.v1"
BARRIER_SCHEMA = "pmepart.barrier.v1"

_DEFAULTS = {
    "density": None,
    "N": "32",
    "m": 2.0,
    "T": 1.0,
    "times": "11",
    "rtol": 1e-8,
    "atol": 1e-10,
    "out": ".",
    "plot": False,
    "seed": 0,
    "corrupt": 0.0,
    "beta": 1.0,
    "alpha": 0.0,
}


@dataclass
class ExperimentConfig:
    command: str
    density: str | None = None
    n_list: list[int] = field(default_factory=lambda: [32])
    m: float = 2.0
    horizon: float = 1.0
    times: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1.0, 11))
    rtol: float = 1e-8
    atol: float = 1e-10
    out: Path = Path(".")
    plot: bool = False
    seed: int = 0
    corrupt: float = 0.0
    beta: float = 1.0
    alpha: float = 0.0


def _parse_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _DEFAULTS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _coerce(key: str, value):
    if isinstance(value, str):
        kind = type(_DEFAULTS[key]) if _DEFAULTS[key] is not None else str
        if kind is bool:
            return value.lower() in ("1", "true", "yes", "on")
        if kind is float:
            return float(value)
        if kind is int:
            return int(value)
    return value


def _parse_times(text: str, horizon: float) -> np.ndarray:
    """An integer is a count of equispaced times on [0, T]; otherwise a comma list."""
    text = text.strip()
    if not text:
        raise ValueError("empty time grid")
    try:
        count = int(text)
    except ValueError:
        times = np.array([float(v) for v in text.split(",")])
    else:
        if count < 2:
            raise ValueError("time-grid count must be at least 2")
        times = np.linspace(0.0, horizon, count)
    if times.size == 0 or np.any(times < 0.0):
        raise ValueError("output times must be nonnegative")
    return np.unique(times)


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        settings.update(_parse_config_file(args.config))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    for key in settings:
        settings[key] = _coerce(key, settings[key])

    horizon = settings["T"]
    if not horizon > 0.0:
        raise ValueError("time horizon T must be positive")
    n_list = [int(v) for v in str(settings["N"]).split(",")]
    if not n_list or any(n < 1 for n in n_list):
        raise ValueError("N must be a comma list of positive integers")
    return ExperimentConfig(
        command=args.command,
        density=settings["density"],
        n_list=n_list,
        m=settings["m"],
        horizon=horizon,
        times=_parse_times(str(settings["times"]), horizon),
        rtol=settings["rtol"],
        atol=settings["atol"],
        out=Path(settings["out"]),
        plot=bool(settings["plot"]),
        seed=int(settings["seed"]),
        corrupt=float(settings["corrupt"]),
        beta=float(settings["beta"]),
        alpha=float(settings["alpha"]),
    )


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: Path, schema: str, header: str, rows) -> None:
    lines = [f"# schema: {schema}", header]
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run(cfg: ExperimentConfig, n: int) -> Trajectory:
    if cfg.density is None:
        raise ValueError("a density spec is required (--density or config file)")
    initial = initial_state_from_name(cfg.density, n, cfg.m)
    integrator = IntegratorConfig(output_times=cfg.times, rtol=cfg.rtol, atol=cfg.atol)
    return integrate(initial, integrator)


# -- simulate ------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig) -> int:
    if len(cfg.n_list) != 1:
        raise ValueError("simulate takes a single N")
    traj = _run(cfg, cfg.n_list[0])
    cfg.out.mkdir(parents=True, exist_ok=True)

    header = "t," + ",".join(f"x{i}" for i in range(traj.n + 1))
    rows = [
        ",".join([_fmt(s.t)] + [_fmt(x) for x in s.positions]) for s in traj.states
    ]
    _write_csv(cfg.out / "trajectory.csv", TRAJECTORY_SCHEMA, header, rows)
    diagnostics.write_diagnostics_csv(cfg.out / "diagnostics.csv", traj)

    if cfg.plot:
        records = diagnostics.diagnostics_series(traj)
        ts = [r.t for r in records]
        svgplot.line_plot(
            cfg.out / "diagnostics_support.svg",
            [
                (ts, [r.support for r in records], "support"),
                (ts, [r.support_bound_init for r in records], "bound (initial data)"),
                (ts, [r.support_bound_univ for r in records], "bound (universal)"),
            ],
            title="support growth",
            xlabel="t",
            ylabel="length",
        )
        svgplot.line_plot(
            cfg.out / "diagnostics_ab.svg",
            [
                (ts, [r.z_min for r in records], "min Z"),
                (ts, [r.ab_bound for r in records], "lower bound"),
            ],
            title="convexity indicator",
            xlabel="t",
            ylabel="Z",
        )
    print(f"simulate: wrote trajectory.csv and diagnostics.csv to {cfg.out}")
    print(
        f"  N={traj.n} m={traj.m:g} steps={traj.stats.accepted} "
        f"rejected={traj.stats.rejected}"
    )
    return 0


# -- verify ---------------------------------------------------------------------


def _corrupted(traj: Trajectory, fraction: float, seed: int) -> Trajectory:
    """Rescale gaps by seeded multiplicative noise: a deliberate negative control."""
    rng = np.random.default_rng(seed)
    states = [traj.states[0]]
    for s in traj.states[1:]:
        d = np.diff(s.positions) * (1.0 + fraction * rng.uniform(-1.0, 1.0, s.n))
        positions = s.positions[0] + np.concatenate(([0.0], np.cumsum(d)))
        states.append(ParticleState(positions, s.m, s.t))
    return Trajectory(states, traj.stats)


def cmd_verify(cfg: ExperimentConfig) -> int:
    if len(cfg.n_list) != 1:
        raise ValueError("verify takes a single N")
    traj = _run(cfg, cfg.n_list[0])
    if cfg.corrupt > 0.0:
        traj = _corrupted(traj, cfg.corrupt, cfg.seed)
    reports = diagnostics.verify_trajectory(traj)

    rng = np.random.default_rng(cfg.seed)
    pair_times = np.unique(np.concatenate(([0.0], cfg.times)))
    pair_cfg = IntegratorConfig(output_times=pair_times, rtol=1e-10, atol=1e-12)
    for _ in range(5):
        a = _random_state(rng, 32, cfg.m)
        b = _random_state(rng, 32, cfg.m)
        reports.extend(
            diagnostics.check_contraction(integrate(a, pair_cfg), integrate(b, pair_cfg))
        )

    cfg.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for rep in reports:
        print(rep.summary())
        rows.append(
            ",".join(
                [
                    rep.name,
                    "1" if rep.passed else "0",
                    _fmt(rep.worst_margin),
                    _fmt(-rep.slack[rep.worst_index]),
                    _fmt(rep.worst_time),
                ]
            )
        )
    _write_csv(
        cfg.out / "verify.csv",
        VERIFY_SCHEMA,
        "check,passed,worst_margin,allowed,worst_time",
        rows,
    )
    return 0 if all(rep.passed for rep in reports) else 1


def _random_state(rng: np.random.Generator, n: int, m: float) -> ParticleState:
    gaps = rng.uniform(0.5, 1.5, n) / n
    positions = np.concatenate(([0.0], np.cumsum(gaps))) + rng.uniform(-1.0, 1.0)
    return ParticleState(positions, m=m)


# -- convergence ----------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    l1_sup: float
    lm_sup: float
    order: float  # nan for the first row


def convergence_study(
    m: float,
    n_values,
    eval_times,
    t0: float = 1.0,
    mass: float = 1.0,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> list[ConvergenceRow]:
    """Sup-over-times L1 and Lm errors against the exact self-similar solution.

    The initial configuration samples the profile at time ``t0``, so scheme
    time ``t`` is compared against the exact profile at ``t0 + t``.
    """
    eval_times = np.asarray(sorted(eval_times), dtype=float)
    if np.any(eval_times <= 0.0):
        raise ValueError("evaluation times must be positive")
    profile = BarenblattProfile.with_mass(m, mass)
    density = barenblatt_density(m, t0, mass)
    rows: list[ConvergenceRow] = []
    for n in sorted(int(v) for v in n_values):
        initial = sample_support_preserving(density, n, m)
        traj = integrate(
            initial, IntegratorConfig(output_times=eval_times, rtol=rtol, atol=atol)
        )
        worst_l1 = 0.0
        worst_lm = 0.0
        for t in eval_times:
            state = traj.state_at(float(t))
            approx = reconstruct(state)
            t_exact = t0 + t
            edge = profile.halfwidth(t_exact)

            def exact(x, t_exact=t_exact):
                return profile.density(t_exact, x)

            worst_l1 = max(
                worst_l1, l1_error(approx, exact, (-edge, edge), (-edge, edge))
            )
            worst_lm = max(
                worst_lm, lm_error(approx, exact, (-edge, edge), m, (-edge, edge))
            )
        order = math.nan
        if rows:
            order = math.log(rows[-1].l1_sup / worst_l1) / math.log(n / rows[-1].n)
        rows.append(ConvergenceRow(n, worst_l1, worst_lm, order))
    return rows


def cmd_convergence(cfg: ExperimentConfig) -> int:
    if cfg.density is None:
        raise ValueError("a density spec is required (--density or config file)")
    fields = cfg.density.split()
    if fields[0] != "barenblatt":
        raise ValueError("the convergence study needs a 'barenblatt m t0 mass' density")
    m, t0, mass = (float(v) for v in fields[1:4])
    eval_times = cfg.times[cfg.times > 0.0]
    if eval_times.size == 0:
        raise ValueError("need at least one positive evaluation time")
    rows = convergence_study(
        m, cfg.n_list, eval_times, t0=t0, mass=mass, rtol=cfg.rtol, atol=cfg.atol
    )
    cfg.out.mkdir(parents=True, exist_ok=True)
    csv_rows = []
    for row in rows:
        order = "" if math.isnan(row.order) else _fmt(row.order)
        csv_rows.append(f"{row.n},{_fmt(row.l1_sup)},{_fmt(row.lm_sup)},{order}")
        print(
            f"N={row.n:6d}  L1={row.l1_sup:.6e}  Lm={row.lm_sup:.6e}"
            + (f"  order={row.order:.3f}" if not math.isnan(row.order) else "")
        )
    _write_csv(
        cfg.out / "convergence.csv", CONVERGENCE_SCHEMA, "N,l1_sup,lm_sup,order", csv_rows
    )
    if cfg.plot:
        svgplot.line_plot(
            cfg.out / "convergence.svg",
            [
                ([row.n for row in rows], [row.l1_sup for row in rows], "L1 error"),
                ([row.n for row in rows], [row.lm_sup for row in rows], "Lm error"),
            ],
            title="error vs number of intervals",
            xlabel="N",
            ylabel="error",
            loglog=True,
        )
    return 0


# -- consistency -----------------------------------------------------------------


def bump_family(horizon: float, center: float, halfspan: float) -> list:
    """Three smooth bumps compactly supported in [0, horizon) x R."""
    return [
        diagnostics.SmoothBump(0.0, 0.8 * horizon, center, 1.5 * halfspan),
        diagnostics.SmoothBump(0.3 * horizon, 0.5 * horizon, center - 0.4 * halfspan, halfspan),
        diagnostics.SmoothBump(0.1 * horizon, 0.6 * horizon, center + 0.3 * halfspan, 0.8 * halfspan),
    ]


class _ConstantFunction:
    """Not compactly supported; kept as a rejected CLI choice."""

    time_support = math.inf

    def __init__(self, value=1.0):
        self._value = float(value)

    def value(self, t, x):
        return np.full_like(np.asarray(x, dtype=float), self._value)

    def dt(self, t, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    dx = dt


class _ZeroFunction(_ConstantFunction):
    time_support = 0.0

    def __init__(self):
        super().__init__(0.0)


def consistency_study(traj: Trajectory, phis, strides=(4, 2, 1)):
    """Residuals |I+J+K| per test function on nested subsamples of one trajectory.

    Returns a list of (phi_index, stride, dt, residual, order) tuples where
    ``order`` compares against the previous (coarser) stride and is ``nan``
    for the first.
    """
    results = []
    for phi_index, phi in enumerate(phis):
        previous = None
        for stride in strides:
            sub = diagnostics.subsampled(traj, stride)
            dt = float(np.max(np.diff(sub.times)))
            residual = diagnostics.consistency_triple(sub, phi).residual
            order = math.nan
            if previous is not None and residual > 0.0:
                prev_dt, prev_res = previous
                order = math.log(prev_res / residual) / math.log(prev_dt / dt)
            results.append((phi_index, stride, dt, residual, order))
            previous = (dt, residual)
    return results


def cmd_consistency(cfg: ExperimentConfig, phi_choice: str = "all") -> int:
    if len(cfg.n_list) != 1:
        raise ValueError("consistency takes a single N")
    base = cfg.times
    if base.size < 3:
        raise ValueError("consistency needs a base grid of at least 3 times")
    # integrate once on the 4x-refined grid; subsampling recovers the coarser grids
    fine = np.unique(
        np.concatenate([np.linspace(base[i], base[i + 1], 5) for i in range(base.size - 1)])
    )
    run_cfg = ExperimentConfig(**{**cfg.__dict__, "times": fine})
    traj = _run(run_cfg, cfg.n_list[0])

    center = float(np.median(traj.states[0].positions))
    halfspan = 0.5 * diagnostics.support_length(traj.states[0])
    family = bump_family(cfg.horizon, center, halfspan)
    if phi_choice == "zero":
        phis = [_ZeroFunction()]
    elif phi_choice == "constant":
        phis = [_ConstantFunction()]
    elif phi_choice == "all":
        phis = family
    else:
        phis = [family[int(phi_choice[-1]) - 1]]

    results = consistency_study(traj, phis)
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for phi_index, stride, dt, residual, order in results:
        order_text = "" if math.isnan(order) else _fmt(order)
        rows.append(f"{phi_index},{stride},{_fmt(dt)},{_fmt(residual)},{order_text}")
        print(
            f"phi{phi_index} stride={stride} dt={dt:.5f} residual={residual:.6e}"
            + (f" order={order:.3f}" if not math.isnan(order) else "")
        )
    _write_csv(
        cfg.out / "consistency.csv",
        CONSISTENCY_SCHEMA,
        "phi,stride,dt,residual,order",
        rows,
    )
    return 0


# -- barrier ---------------------------------------------------------------------


def cmd_barrier(cfg: ExperimentConfig) -> int:
    if len(cfg.n_list) != 1:
        raise ValueError("barrier takes a single N")
    barrier = BarrierConfig(n=cfg.n_list[0], m=cfg.m, beta=cfg.beta, alpha=cfg.alpha)
    state = barrier_configuration(barrier)
    s = barrier_densities(barrier)
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows = [f"0,{_fmt(state.positions[0])},"]
    rows.extend(
        f"{k},{_fmt(state.positions[k])},{_fmt(s[k - 1])}" for k in range(1, barrier.n + 1)
    )
    _write_csv(cfg.out / "barrier.csv", BARRIER_SCHEMA, "k,position,density", rows)
    length = diagnostics.support_length(state)
    print(
        f"barrier: N={barrier.n} m={barrier.m:g} beta={barrier.beta:g} "
        f"support={length:.6g} <= beta*ell={barrier.beta * barrier.ell:.6g}"
    )
    return 0


# -- entry point -------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmepart",
        description="Particle solver and bound-verification harness for the 1D porous medium equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--density", help='e.g. "uniform 0 1", "barenblatt 2 1 1", "barrier 8 2 1 0"')
    common.add_argument("--N", help="comma list of interval counts")
    common.add_argument("--m", type=float, help="diffusion exponent (> 1)")
    common.add_argument("--T", type=float, help="time horizon")
    common.add_argument("--times", help="output times: an integer count or a comma list")
    common.add_argument("--rtol", type=float, help="relative step tolerance")
    common.add_argument("--atol", type=float, help="absolute step tolerance")
    common.add_argument("--out", help="output directory")
    common.add_argument("--plot", action="store_const", const=True, help="also write SVG plots")
    common.add_argument("--seed", type=int, help="seed for randomized suites")

    sub.add_parser("simulate", parents=[common], help="one run, trajectory + diagnostics CSV")
    verify = sub.add_parser("verify", parents=[common], help="run the bound suite")
    verify.add_argument(
        "--corrupt",
        type=float,
        help="perturb stored gaps by this relative amount (negative control)",
    )
    sub.add_parser("convergence", parents=[common], help="N-sweep error table")
    consistency = sub.add_parser(
        "consistency", parents=[common], help="weak-form residual refinement study"
    )
    consistency.add_argument(
        "--phi",
        default="all",
        choices=["all", "bump1", "bump2", "bump3", "zero", "constant"],
        help="test function family member",
    )
    barrier = sub.add_parser("barrier", parents=[common], help="emit the barrier configuration")
    barrier.add_argument("--beta", type=float, help="support scale")
    barrier.add_argument("--alpha", type=float, help="left anchor")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "convergence":
            return cmd_convergence(cfg)
        if args.command == "consistency":
            return cmd_consistency(cfg, args.phi)
        if args.command == "barrier":
            return cmd_barrier(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except (ValueError, OSError) as exc:
        parser.exit(2, f"pmepart {args.command}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
