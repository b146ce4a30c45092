import json
import math

import numpy as np
import pytest

import thc

SMALL = """
[grid]
ny = 16
nz = 12

[noise]
seed = 3
burn_in = 1

[time]
t1 = 0.1
dt = 0.01
"""


def test_version_and_config_round_trip():
    assert thc.__version__
    text = thc.parse_config(SMALL)
    assert "ny = 16" in text
    assert thc.parse_config(text) == text


def test_invalid_config_raises_value_error():
    with pytest.raises(ValueError, match="unknown key"):
        thc.parse_config(SMALL + "\nbogus = 1\n")


def test_constants():
    c = thc.constants(SMALL)
    assert c["alpha_env"] > 0
    assert c["R1_sq"] == pytest.approx(2 * c["c5_env"] / c["alpha_env"])


def test_simulate_shapes_and_salinity():
    r = thc.simulate(SMALL)
    assert r["T"].shape == (12, 16)
    assert r["t"] == pytest.approx(0.1)
    assert len(r["series_t"]) == 11
    assert all(math.isfinite(e) for e in r["series_energy"])
    s_norm = math.sqrt(thc.inner(r["S"], r["S"]))
    assert max(abs(m) for m in r["series_salinity_mean"]) <= 1e-10 * max(s_norm, 1.0)
    again = thc.simulate(SMALL)
    assert np.array_equal(r["q"], again["q"])


def test_jacobian_is_skew():
    rng = np.random.default_rng(0)
    psi = rng.uniform(-1, 1, (12, 16))
    psi[0, :] = psi[-1, :] = psi[:, 0] = psi[:, -1] = 0
    f = rng.uniform(-1, 1, (12, 16))
    j = thc.jacobian(psi, f)
    assert abs(thc.inner(j, f)) < 1e-12 * np.abs(j).max()


def test_poisson_solve_inverts_the_laplacian_of_a_mode():
    ny, nz = 33, 17
    y = np.linspace(-1, 1, ny)
    z = np.linspace(0, 1, nz)
    Y, Z = np.meshgrid(y, z)
    psi = np.sin(np.pi * (Y + 1) / 2) * np.sin(np.pi * Z)
    q = -(np.pi**2 / 4 + np.pi**2) * psi
    err = np.abs(thc.poisson_solve(q) - psi).max()
    assert err < 5e-3


def test_cocycle_and_ou_sample():
    assert thc.cocycle_check(SMALL, 0.03, 0.05) == 0.0
    assert thc.cocycle_check(SMALL, 0.03, 0.05, 1) > 0.0
    a = thc.ou_sample(SMALL, 4)
    assert np.array_equal(a, thc.ou_sample(SMALL, 4))
    assert not np.array_equal(a, thc.ou_sample(SMALL, 5))


def test_cli_writes_a_run_directory(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL)
    out = tmp_path / "run"
    assert thc.cli(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    final = thc.read_snapshot(str(out / "snapshots" / "step_00000010.bin"), 16, 12)
    assert final["t"] == pytest.approx(0.1)
    assert thc.cli(["simulate", "--config", str(tmp_path / "missing.toml"), "--out", str(out)]) == 1
