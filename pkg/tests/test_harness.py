import textwrap

import numpy as np
import pytest

from ftes.harness import ConfigError, batch, build_config, run_scenario
from ftes.harness.cli import main
from ftes.harness.run import read_metadata, sample_initial
from ftes.harness.scenarios import FIGURE_IDS, figure_configs

SCALAR = """
[scenario]
name = scalar
[cost]
family = scalar-quadratic
curvature = 1
z_opt = 1
[controller]
type = ftges
q1 = 3
q2 = 1.5
k = 2
kappa_pl = 1
a = 0.1
eps1 = 0.02
eps2 = 0.1
[sim]
dt = 2e-4
horizon = 0.2
stride = 50
u0 = 0
[acceptance]
nu = 0.5
"""

REDUCED_BATCH = """
[scenario]
name = reduced-batch
[cost]
family = quadratic-form
H = 4, 1; 1, 2
b = -4, -6
c = 11
[controller]
type = reduced-newton
target_tstar = 100
[sim]
dt = 0.5
horizon = 110
stride = 20
seed = 7
box = -10, 10; -10, 10
batch = 70
[acceptance]
nu = 0.05
margin = 1.1
"""


def _with(text, section, key, value):
    """Set or replace one key of an INI text."""
    out, in_sec, done = [], False, False
    for line in text.strip().splitlines():
        if line.startswith("["):
            if in_sec and not done:
                out.append(f"{key} = {value}")
                done = True
            in_sec = line.strip() == f"[{section}]"
        elif in_sec and line.split("=")[0].strip() == key:
            line = f"{key} = {value}"
            done = True
        out.append(line)
    if in_sec and not done:
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def test_alphas_echoed(tmp_path):
    res = run_scenario(SCALAR, out=tmp_path)
    meta = read_metadata(tmp_path / "metadata.txt")
    assert float(meta["controller.alpha1"]) == 0.5
    assert float(meta["controller.alpha2"]) == -1.0
    assert "bound.tstar" in meta and "result.convergence_time" in meta
    assert res.results[0].nonfinite is False


def test_target_tstar_sets_gain():
    cfg = build_config(_with(_with(_with(REDUCED_BATCH, "controller", "type", "ftnes"), "controller", "eps1", "0.1"), "controller", "eps2", "10"))
    assert cfg.shape.k == pytest.approx(0.030855, abs=1e-6)
    assert cfg.resolved["controller.k"] == cfg.shape.k


@pytest.mark.parametrize("section,key,value,field", [
    ("controller", "q1", "1.5", "q1"),
    ("controller", "q2", "2.5", "q2"),
    ("controller", "type", "fancy", "controller.type"),
    ("controller", "eps2", "-1", "controller"),
    ("controller", "bogus", "1", "controller.bogus"),
    ("sim", "dt", "0", "sim.dt"),
    ("sim", "u0", "0, 1", "sim.u0"),
    ("cost", "curvature", "-2", "cost"),
    ("controller", "freqs", "1, 2", "controller.freqs"),
])
def test_config_errors_name_the_field(section, key, value, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        build_config(_with(SCALAR, section, key, value))


def test_both_k_and_target_rejected():
    with pytest.raises(ConfigError, match="controller.k"):
        build_config(_with(SCALAR, "controller", "target_tstar", "1"))


def test_batch_writes_one_csv_per_trajectory(tmp_path):
    res = batch(REDUCED_BATCH, out=tmp_path)
    assert len(sorted(tmp_path.glob("traj_*.csv"))) == 70
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert len(lines) == 71
    starts = np.array([r.u0 for r in res.results])
    assert starts.min() >= -10 and starts.max() <= 10
    # reduced Newton flow from any start in the box settles before the bound
    assert res.passed and res.fraction_meeting == 1.0


def test_batch_summary_is_byte_identical(tmp_path):
    batch(REDUCED_BATCH, n=5, out=tmp_path / "a")
    batch(REDUCED_BATCH, n=5, out=tmp_path / "b")
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()
    assert (tmp_path / "a" / "traj_0003.csv").read_bytes() == (tmp_path / "b" / "traj_0003.csv").read_bytes()
    batch(REDUCED_BATCH, n=5, seed=8, out=tmp_path / "c")
    assert (tmp_path / "a" / "summary.csv").read_bytes() != (tmp_path / "c" / "summary.csv").read_bytes()


def test_starts_do_not_depend_on_batch_size():
    cfg = build_config(REDUCED_BATCH)
    a = batch(cfg, n=3).results
    b = batch(build_config(REDUCED_BATCH), n=6).results
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.u0, rb.u0)
    assert np.array_equal(a[2].u0, sample_initial(cfg, 2))


def test_parallel_batch_matches_serial(tmp_path):
    batch(REDUCED_BATCH, n=4, out=tmp_path / "s")
    batch(REDUCED_BATCH, n=4, out=tmp_path / "p", workers=2)
    assert (tmp_path / "s" / "summary.csv").read_bytes() == (tmp_path / "p" / "summary.csv").read_bytes()


def test_single_batch_equals_run_scenario(tmp_path):
    batch(REDUCED_BATCH, n=1, out=tmp_path / "b")
    run_scenario(REDUCED_BATCH, out=tmp_path / "r")
    assert (tmp_path / "b" / "trajectory.csv").read_bytes() == (tmp_path / "r" / "trajectory.csv").read_bytes()


def test_csv_schema(tmp_path):
    run_scenario(SCALAR, out=tmp_path)
    text = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert text[0] == "t,u_1,xi_1,z_1,y"
    row = text[2].split(",")
    assert len(row) == 5
    # 17 significant digits round-trip exactly
    assert all(repr(float(v)) == repr(float(f"{float(v):.17g}")) for v in row)


def test_figure_configs_parse():
    for fig in FIGURE_IDS:
        for text in figure_configs(fig):
            cfg = build_config(text)
            assert cfg.acceptance is not None


def test_cli_bounds(capsys):
    assert main(["bounds", "newton", "--tstar", "100"]) == 0
    out = capsys.readouterr().out
    assert "alpha1=0.5" in out and "k=0.0308" in out
    assert main(["bounds", "gradient", "--k", "1", "--kappa", "1"]) == 0
    assert "tstar=3.188" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["bounds", "gradient", "--k", "1"]) == 2
    assert main(["bounds", "newton", "--k", "1", "--q1", "1.5"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text(_with(SCALAR, "sim", "dt", "-1"))
    assert main(["simulate", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["simulate", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
    good = tmp_path / "good.ini"
    good.write_text(SCALAR)
    assert main(["simulate", str(good), "--out", str(tmp_path)]) == 0
    # an unattainable tolerance only changes the exit code under --strict
    strict = tmp_path / "strict.ini"
    strict.write_text(_with(SCALAR, "acceptance", "nu", "1e-9"))
    assert main(["simulate", str(strict), "--out", str(tmp_path)]) == 0
    assert main(["simulate", str(strict), "--out", str(tmp_path), "--strict"]) == 1
    # a huge gain with a coarse step blows up
    blow = tmp_path / "blow.ini"
    blow.write_text(_with(_with(SCALAR, "controller", "k", "1e6"), "sim", "dt", "5e-3"))
    with pytest.warns(UserWarning, match="does not resolve"):
        assert main(["simulate", str(blow), "--out", str(tmp_path)]) == 3
    capsys.readouterr()


def test_cli_out_env(tmp_path, monkeypatch):
    good = tmp_path / "good.ini"
    good.write_text(SCALAR)
    monkeypatch.setenv("FTES_OUT", str(tmp_path / "env"))
    assert main(["simulate", str(good)]) == 0
    assert (tmp_path / "env" / "scalar" / "metadata.txt").exists()
    assert main(["simulate", str(good), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "scalar" / "trajectory.csv").exists()


def test_cli_verify_averaging(capsys):
    assert main(["verify-averaging", "--n", "2"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["verify-averaging", "--freqs", "1, 2"]) == 1
