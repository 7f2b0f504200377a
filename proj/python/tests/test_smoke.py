import math

import numpy as np
import pytest

import tiltcross as tc


def test_stokes_data():
    s = tc.stokes_data()
    assert abs(s["tau_r"] + 0.16611) < 1e-4
    assert abs(s["tau_c"] - 0.53772) < 1e-4


def test_select_n0():
    n0, k0, eta0 = tc.select_n0(0.5, 0.53769, 1 / 50, 0.25, 5.0)
    assert abs(n0 - 5.1359) < 1e-3
    assert math.isclose(k0 * k0, eta0 * eta0 + 2.0, rel_tol=1e-12)


def test_transmit_lambda_zero_cutoff():
    cfg = {"potential": {"type": "tanh", "lambda": 0.0}}
    out = tc.transmit(cfg, np.linspace(-3.0, 7.0, 101))
    inside = np.abs(out["k"]) <= math.sqrt(2.0)
    assert np.all(out["psi"][inside] == 0)
    assert np.all(out["flags"][inside] == 1)
    assert out["phi"] == 0.0


def test_formula_against_small_reference():
    cfg = {"eps": 0.05, "grid": {"n_points": 2048, "x_min": -20, "x_max": 20},
           "time": {"T": 2.0, "t_star": 2.0, "n_steps": 200}}
    ref = tc.run_reference(cfg)
    f = tc.run_formula(cfg)
    np.testing.assert_array_equal(ref["k"], f["k"])
    rep = tc.compare(ref["k"], f["psi"], ref["psi"])
    assert rep["l2_rel_error"] < 0.2
    assert rep["norm_sq_reference"] > 0


def test_fit_round_trip():
    cfg = {"grid": {"n_points": 4096, "x_min": -20, "x_max": 20}}
    out = tc.transmit({**cfg, "potential": {"type": "tanh", "lambda": 0.0}})
    k = out["k"]
    eps = tc.default_config()["eps"]
    psi = 0.7 * np.exp(-0.25 * (k - 5.0) ** 2 / eps)
    packet, residual = tc.fit_gaussians(cfg, psi, 1)
    assert residual < 1e-8
    assert abs(packet["terms"][0]["p0"] - 5.0) < 1e-8


def test_coupling_fourier_even_modulus():
    k = np.array([-0.2, 0.0, 0.2])
    v = tc.coupling_fourier({}, 3, k)
    assert v[1] == 0
    assert math.isclose(abs(v[0]), abs(v[2]), rel_tol=1e-14)
    q = np.linspace(-1, 1, 5)
    assert tc.kappa_asymptotic({}, 2, q).shape == (5,)


def test_errors_surface():
    with pytest.raises(tc.Error):
        tc.transmit({"eps": -1.0})
