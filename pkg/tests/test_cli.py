import numpy as np
import pytest

from pmepart import n1_gap_closed_form
from pmepart.cli import main


def run_cli(args):
    try:
        return main(args)
    except SystemExit as exc:
        return exc.code


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# schema: ")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return lines[0], header, rows


def test_simulate_writes_trajectory_and_diagnostics(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        [
            "simulate",
            "--density", "uniform 0 1",
            "--N", "8",
            "--m", "2",
            "--T", "1",
            "--times", "6",
            "--out", str(out),
        ]
    )
    assert code == 0
    schema, header, rows = read_csv(out / "trajectory.csv")
    assert schema == "# schema: pmepart.trajectory.v1"
    assert header == ["t"] + [f"x{i}" for i in range(9)]
    assert len(rows) == 6
    schema2, header2, rows2 = read_csv(out / "diagnostics.csv")
    assert schema2 == "# schema: pmepart.diagnostics.v1"
    assert header2[0] == "t" and "tv_halfpower" in header2
    assert len(rows2) == 6


def test_simulate_two_particle_gap_matches_closed_form(tmp_path):
    out = tmp_path / "n1"
    code = run_cli(
        [
            "simulate",
            "--density", "uniform 0 1",
            "--N", "1",
            "--m", "2",
            "--T", "1",
            "--times", "0,0.5,1",
            "--rtol", "1e-10",
            "--atol", "1e-12",
            "--out", str(out),
        ]
    )
    assert code == 0
    _, header, rows = read_csv(out / "trajectory.csv")
    assert header == ["t", "x0", "x1"]
    for row in rows:
        t, x0, x1 = (float(v) for v in row)
        assert x1 - x0 == pytest.approx(n1_gap_closed_form(1.0, 2.0, t), rel=1e-8)


def test_simulate_requires_density(tmp_path):
    code = run_cli(["simulate", "--N", "4", "--out", str(tmp_path)])
    assert code == 2


def test_simulate_rejects_multiple_n(tmp_path):
    code = run_cli(
        ["simulate", "--density", "uniform 0 1", "--N", "4,8", "--out", str(tmp_path)]
    )
    assert code == 2


def test_verify_passes_on_clean_run(tmp_path, capsys):
    code = run_cli(
        [
            "verify",
            "--density", "barenblatt 2 1 1",
            "--N", "24",
            "--m", "2",
            "--T", "0.5",
            "--times", "6",
            "--seed", "1",
            "--out", str(tmp_path),
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS aronson-benilan" in out
    assert "FAIL" not in out
    schema, header, rows = read_csv(tmp_path / "verify.csv")
    assert schema == "# schema: pmepart.verify.v1"
    assert header == ["check", "passed", "worst_margin", "allowed", "worst_time"]
    assert all(row[1] == "1" for row in rows)


def test_verify_corrupted_run_fails_with_named_bound(tmp_path, capsys):
    code = run_cli(
        [
            "verify",
            "--density", "barenblatt 2 1 1",
            "--N", "24",
            "--m", "2",
            "--T", "0.5",
            "--times", "6",
            "--seed", "1",
            "--corrupt", "0.1",
            "--out", str(tmp_path),
        ]
    )
    out = capsys.readouterr().out
    assert code == 1
    failing = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert failing
    assert any("minimum-principle" in line or "aronson-benilan" in line for line in failing)


def test_verify_rejects_empty_time_grid(tmp_path):
    code = run_cli(
        [
            "verify",
            "--density", "uniform 0 1",
            "--times", "",
            "--out", str(tmp_path),
        ]
    )
    assert code == 2


def test_convergence_errors_decrease(tmp_path):
    out = tmp_path / "conv"
    code = run_cli(
        [
            "convergence",
            "--density", "barenblatt 2 1 1",
            "--N", "8,16,32",
            "--times", "0.25,0.5",
            "--T", "0.5",
            "--out", str(out),
            "--plot",
        ]
    )
    assert code == 0
    schema, header, rows = read_csv(out / "convergence.csv")
    assert schema == "# schema: pmepart.convergence.v1"
    assert header == ["N", "l1_sup", "lm_sup", "order"]
    errors = [float(row[1]) for row in rows]
    assert errors == sorted(errors, reverse=True)
    assert rows[0][3] == ""  # no order for the first entry
    assert float(rows[1][3]) > 0.0
    assert (out / "convergence.svg").exists()


def test_convergence_single_n_leaves_order_empty(tmp_path):
    code = run_cli(
        [
            "convergence",
            "--density", "barenblatt 2 1 1",
            "--N", "12",
            "--times", "0.5",
            "--out", str(tmp_path),
        ]
    )
    assert code == 0
    _, _, rows = read_csv(tmp_path / "convergence.csv")
    assert len(rows) == 1 and rows[0][3] == ""


def test_convergence_requires_barenblatt_density(tmp_path):
    code = run_cli(
        [
            "convergence",
            "--density", "uniform 0 1",
            "--N", "8,16",
            "--out", str(tmp_path),
        ]
    )
    assert code == 2


def test_consistency_residuals_shrink_under_refinement(tmp_path):
    code = run_cli(
        [
            "consistency",
            "--density", "barenblatt 2 1 1",
            "--N", "16",
            "--m", "2",
            "--T", "1",
            "--times", "17",
            "--rtol", "1e-10",
            "--atol", "1e-12",
            "--out", str(tmp_path),
        ]
    )
    assert code == 0
    schema, header, rows = read_csv(tmp_path / "consistency.csv")
    assert schema == "# schema: pmepart.consistency.v1"
    assert header == ["phi", "stride", "dt", "residual", "order"]
    for phi in ("0", "1", "2"):
        residuals = [float(r[3]) for r in rows if r[0] == phi]
        assert len(residuals) == 3
        assert residuals[0] > residuals[1] > residuals[2]


def test_consistency_zero_function_gives_zero_residual(tmp_path):
    code = run_cli(
        [
            "consistency",
            "--density", "uniform 0 1",
            "--N", "8",
            "--T", "1",
            "--times", "9",
            "--phi", "zero",
            "--out", str(tmp_path),
        ]
    )
    assert code == 0
    _, _, rows = read_csv(tmp_path / "consistency.csv")
    assert all(float(r[3]) == 0.0 for r in rows)


def test_consistency_rejects_constant_function(tmp_path):
    code = run_cli(
        [
            "consistency",
            "--density", "uniform 0 1",
            "--N", "8",
            "--T", "1",
            "--times", "9",
            "--phi", "constant",
            "--out", str(tmp_path),
        ]
    )
    assert code == 2


def test_barrier_csv(tmp_path):
    code = run_cli(
        ["barrier", "--N", "8", "--m", "2", "--beta", "0.5", "--alpha", "-1", "--out", str(tmp_path)]
    )
    assert code == 0
    schema, header, rows = read_csv(tmp_path / "barrier.csv")
    assert schema == "# schema: pmepart.barrier.v1"
    assert header == ["k", "position", "density"]
    assert len(rows) == 9
    assert rows[0][2] == ""  # no cell left of the first particle
    positions = [float(r[1]) for r in rows]
    assert positions[0] == -1.0
    assert positions[-1] - positions[0] <= 0.5 * np.pi + 1e-12


def test_config_file_with_flag_override(tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text(
        "# experiment manifest\n"
        "density = uniform 0 1\n"
        "N = 4\n"
        "m = 2.0\n"
        "T = 1.0\n"
        "times = 3\n",
        encoding="utf-8",
    )
    out = tmp_path / "a"
    assert run_cli(["simulate", "--config", str(config), "--out", str(out)]) == 0
    _, header, _ = read_csv(out / "trajectory.csv")
    assert header == ["t"] + [f"x{i}" for i in range(5)]

    out2 = tmp_path / "b"
    assert (
        run_cli(["simulate", "--config", str(config), "--N", "6", "--out", str(out2)])
        == 0
    )
    _, header2, _ = read_csv(out2 / "trajectory.csv")
    assert header2 == ["t"] + [f"x{i}" for i in range(7)]


def test_config_file_rejects_unknown_key(tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("densty = uniform 0 1\n", encoding="utf-8")
    assert run_cli(["simulate", "--config", str(config)]) == 2


def test_runs_are_bit_reproducible(tmp_path):
    args = [
        "verify",
        "--density", "barenblatt 2 1 1",
        "--N", "12",
        "--T", "0.5",
        "--times", "4",
        "--seed", "9",
    ]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    assert (out1 / "verify.csv").read_bytes() == (out2 / "verify.csv").read_bytes()


def test_simulate_plot_outputs_svg(tmp_path):
    out = tmp_path / "plot"
    code = run_cli(
        [
            "simulate",
            "--density", "uniform 0 1",
            "--N", "6",
            "--T", "0.5",
            "--times", "5",
            "--plot",
            "--out", str(out),
        ]
    )
    assert code == 0
    for name in ("diagnostics_support.svg", "diagnostics_ab.svg"):
        text = (out / name).read_text(encoding="utf-8")
        assert text.startswith("<svg ") and text.rstrip().endswith("</svg>")
