import math
import os
import subprocess

import numpy as np
import pytest

import ergolab


def test_version():
    assert ergolab.__version__.count(".") == 2


def test_elliptic_L_matches_closed_form():
    # -5 (x1^2 + x2^2) + (x1^4 + x2^4) / 3 + x3^2 for b = -x
    assert ergolab.elliptic_L("heisenberg", x=[1.0, 1.0, 0.0]) == pytest.approx(-28.0 / 3.0, abs=1e-12)
    x = [2.0, -3.0, 1.5]
    expected = -5 * (4 + 9) + (16 + 81) / 3 + 2.25
    assert ergolab.elliptic_L("heisenberg", x=x) == pytest.approx(expected, abs=1e-10)


def test_find_min_r0_near_analytic_value():
    r0 = ergolab.find_min_r0(rmin=6.0, rmax=60.0, shells=541, samples=256)
    assert abs(r0 - math.sqrt(55.0)) <= 0.11


def test_hormander():
    h = ergolab.hormander_rank("heisenberg", [0, 0, 0], order=1)
    assert h["rank"] == 3 and h["spanning"]
    assert not ergolab.hormander_rank("grushin", [0, 0], order=0)["spanning"]


def test_simulate_is_deterministic_and_shaped():
    a, blew = ergolab.simulate("heisenberg", x0=[1, 1, 1], steps=100, stride=10, seed=3)
    b, _ = ergolab.simulate("heisenberg", x0=[1, 1, 1], steps=100, stride=10, seed=3)
    assert a.shape == (11, 3)
    assert not blew
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[0], [1, 1, 1])


def test_normals_are_standard():
    z = np.array([ergolab.normals(1, s, 0, 2) for s in range(20000)]).ravel()
    assert abs(z.mean()) < 0.03
    assert abs(z.var() - 1) < 0.03


def test_run_dict_and_errors():
    rep = ergolab.run({"subcommand": "hormander", "point": [0.5, 0.5, 0.5], "order": 1})
    assert rep["exit_code"] == 0
    assert rep["result"]["rank"] == 3
    with pytest.raises(ValueError):
        ergolab.run({"subcommand": "hormander", "nonsense": 1})


def test_run_cli_and_trajectory(tmp_path):
    out = tmp_path / "t.ergt"
    code, stdout, _ = ergolab.run_cli(["simulate", "--steps", "50", "--out", str(out)])
    assert code == 0 and "simulate" in stdout
    states, meta = ergolab.read_trajectory(str(out))
    assert states.shape == (51, 3)
    assert meta["seed"] == 42
    assert ergolab.run_cli(["nonexistent"])[0] == 1


def test_weak_error_ratio():
    r = ergolab.weak_error_probe([1.0, 1.0, 1.0], M=20000)
    assert 1.6 <= r["ratio"] <= 2.4


@pytest.mark.skipif("ERGO_BINARY" not in os.environ, reason="needs the ergo executable")
def test_binary_matches_module(tmp_path):
    j = tmp_path / "h.json"
    subprocess.run([os.environ["ERGO_BINARY"], "hormander", "--point", "1,2,3", "--json", str(j)], check=True)
    import json

    via_binary = json.loads(j.read_text())["result"]
    via_module = ergolab.run({"subcommand": "hormander", "point": [1, 2, 3]})["result"]
    assert via_binary == via_module
