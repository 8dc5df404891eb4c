"""Command-line entry points: runs, reports and file outputs."""

import numpy as np
import pytest

from qswarm import read_frame
from qswarm.cli import main


def write_cfg(tmp_path, text, name="scen.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


GAUSS_1D = """
lattice.dims = 32
initial.kind = gaussian
initial.width = 4
step.dt = 0.1
run.steps = {steps}
run.samples = 20000
output.every = {every}
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    report = {}
    for line in out.out.splitlines():
        key, _, value = line.partition(":")
        report[key.strip()] = value.strip()
    return code, report, out.err


def test_zero_steps_single_frame(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GAUSS_1D.format(steps=0, every=1))
    code, report, _ = run_cli(capsys, "run", cfg, "--out", str(tmp_path))
    assert code == 0
    assert report["STEPS"] == "0"
    assert report["FRAMES"] == "1"
    fr = read_frame(tmp_path / "density_000000.frame")
    x = np.arange(32.0) - 15.5
    expect = np.exp(-(x**2) / 32)
    expect /= expect.sum()
    assert np.allclose(fr.values, expect, atol=1e-12)
    assert fr.time == 0.0


def test_run_meanfield_emits_frames(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GAUSS_1D.format(steps=10, every=5))
    code, report, _ = run_cli(capsys, "run", cfg, "--out", str(tmp_path))
    assert code == 0
    assert report["MODE"] == "meanfield"
    assert report["FRAMES"] == "3"  # steps 0, 5, 10
    fr = read_frame(tmp_path / "density_000010.frame")
    assert fr.time == pytest.approx(1.0)
    assert fr.values.sum() == pytest.approx(1.0, abs=1e-9)
    assert float(report["FINAL_NORM"]) == pytest.approx(1.0, rel=1e-3)


def test_run_stochastic_deterministic_given_seed(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GAUSS_1D.format(steps=5, every=5) + "step.A = 500\n")
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        out.mkdir()
        code, _, _ = run_cli(capsys, "run", cfg, "--mode", "stochastic",
                             "--seed", "7", "--out", str(out))
        assert code == 0
        outs.append(read_frame(out / "density_000005.frame").values)
    assert np.array_equal(outs[0], outs[1])


def test_run_per_type_frames(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GAUSS_1D.format(steps=1, every=1) + "output.types = true\n")
    code, _, _ = run_cli(capsys, "run", cfg, "--out", str(tmp_path))
    assert code == 0
    for j in range(1, 5):
        assert (tmp_path / f"p0_type{j}_000001.frame").exists()


def test_run_pgm_export(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "lattice.dims = 8 8\ninitial.kind = gaussian\ninitial.width = 2\n"
        "step.dt = 0.1\nrun.steps = 0\noutput.pgm = true\n",
    )
    code, _, _ = run_cli(capsys, "run", cfg, "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "density_000000.pgm").read_text().splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "8 8"
    assert lines[2] == "255"
    pixels = np.array([int(v) for row in lines[3:] for v in row.split()])
    assert pixels.size == 64 and pixels.max() == 255 and pixels.min() >= 0


def test_born_test_report(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "lattice.dims = 2\ninitial.kind = file\ninitial.file = {f}\n"
        "step.dt = 0.1\nrun.samples = 10000\n".format(f=tmp_path / "init.frame"),
    )
    from qswarm import write_frame

    # uniform two-cell state: survives the 1/sqrt(N) quantum undistorted
    write_frame(tmp_path / "init.frame", np.array([1.0, 1.0]), 0.0)
    code, report, _ = run_cli(capsys, "born-test", cfg, "--draws", "2000",
                              "--seed", "4", "--out", str(tmp_path))
    assert code == 0
    assert report["DRAWS"] == "2000"
    assert report["LABELS"] == "2"
    assert float(report["P_VALUE"]) > 0.001
    log = (tmp_path / "meas.log").read_text().splitlines()
    assert len(log) == 2000
    first = log[0].split()
    assert first[0] == "MEAS" and first[2] in ("0", "1")
    freq0 = sum(l.split()[2] == "0" for l in log) / 2000
    assert abs(freq0 - 0.5) < 4 * np.sqrt(0.25 / 2000)


def test_born_test_needs_draws(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GAUSS_1D.format(steps=0, every=1))
    code, _, err = run_cli(capsys, "born-test", cfg, "--draws", "10",
                           "--out", str(tmp_path))
    assert code == 2
    assert "draws" in err


def test_green_test_small_lattice_truncated(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "lattice.dims = 9 9 9\nlattice.boundary = absorbing\n"
        "initial.kind = delta\nstep.dt = 0.01\n"
        "potential.kind = coulomb_relaxed\npotential.relax_steps = 2000\n",
    )
    code, report, _ = run_cli(capsys, "green-test", cfg, "--out", str(tmp_path))
    assert code == 0
    assert report["WARNING"] == "window truncated"
    assert report["CONVERGED"] == "True"
    assert (tmp_path / "green.frame").exists()
    # field decays away from the source
    assert float(report["PROFILE_R1"]) > float(report["PROFILE_R3"]) > 0


def test_green_test_zero_charge(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "lattice.dims = 9 9 9\nlattice.boundary = absorbing\n"
        "initial.kind = delta\nstep.dt = 0.01\n"
        "potential.kind = coulomb_relaxed\npotential.charge = 0\n"
        "potential.relax_steps = 100\n",
    )
    code, report, _ = run_cli(capsys, "green-test", cfg, "--out", str(tmp_path))
    assert code == 0
    assert report["MAX_REL_DEV"] == "0"


def test_green_test_rejects_1d(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GAUSS_1D.format(steps=0, every=1))
    code, _, err = run_cli(capsys, "green-test", cfg, "--out", str(tmp_path))
    assert code == 2
    assert "3D" in err


def test_bench_report(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        GAUSS_1D.format(steps=0, every=1).replace("run.samples = 20000",
                                                  "run.samples = 1000")
        + "step.A = 200\n",
    )
    code, report, _ = run_cli(capsys, "bench", cfg, "--particles", "1,2",
                              "--steps", "2", "--out", str(tmp_path))
    assert code == 0
    assert report["N_CELLS"] == "32"
    assert float(report["TIME_N1"]) > 0
    assert float(report["TIME_N2"]) > 0
    assert "LINEAR_R2" in report


def test_bench_empty_particle_list(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GAUSS_1D.format(steps=0, every=1))
    code, _, err = run_cli(capsys, "bench", cfg, "--particles", "",
                           "--out", str(tmp_path))
    assert code == 2
    assert "particle" in err


def test_compare_identical_and_different(tmp_path, capsys):
    from qswarm import write_frame

    a = tmp_path / "a.frame"
    b = tmp_path / "b.frame"
    write_frame(a, np.array([1.0, 2.0, 3.0]), 0.0)
    write_frame(b, np.array([3.0, 2.0, 1.0]), 0.0)
    code, report, _ = run_cli(capsys, "compare", str(a), str(a))
    assert code == 0 and float(report["DENSITY_ERROR"]) == 0.0
    code, report, _ = run_cli(capsys, "compare", str(a), str(b))
    assert code == 0 and float(report["DENSITY_ERROR"]) > 0.1


def test_malformed_config_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "lattice.dims = 8\nbroken line\n")
    code, _, err = run_cli(capsys, "run", cfg, "--out", str(tmp_path))
    assert code == 2
    assert "error:" in err and ":2:" in err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
