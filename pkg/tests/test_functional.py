import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from tmcrit import (
    ExponentialRangeError,
    FeFunction,
    FunctionalParams,
    energy_Phi,
    first_eigenpair,
    grad_Phi,
    nonlinearity_f,
    primitive_F,
    psi,
    radial_project,
    tm_functional,
)
from tmcrit.functional import gradient_check, grad_power_integral, hess_Phi, log_primitive_F, scaled_primitive_F
from oracles import primitive_F_closed_N2


def _smooth(mesh, rng, scale=1.0):
    S = mesh.space
    c = S.stiffness_solve(S.mass * S.zero_boundary(rng.standard_normal(mesh.n_nodes)))
    return FeFunction(scale * c / np.abs(c).max(), mesh)


def test_f_values():
    assert nonlinearity_f(0.0, FunctionalParams(2)) == 0.0
    assert nonlinearity_f(1.0, FunctionalParams(2)) == pytest.approx(math.e, rel=1e-15)
    assert nonlinearity_f(-1.0, FunctionalParams(3)) == pytest.approx(-math.e, rel=1e-15)


def test_F_values():
    assert primitive_F(0.0, FunctionalParams(2)) == 0.0
    assert primitive_F(1.0, FunctionalParams(2)) == pytest.approx((math.e - 1) / 2, rel=1e-14)
    ref = quad(lambda s: s * s * math.exp(s**1.5), 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert primitive_F(1.0, FunctionalParams(3)) == pytest.approx(ref, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0, 20), N=st.integers(2, 5))
def test_F_against_quad(t, N):
    p = FunctionalParams(N)
    if t ** p.N_conj > 700:
        return
    ref = quad(lambda s: s ** (N - 1) * math.exp(s**p.N_conj), 0, t, epsabs=0, epsrel=1e-13, limit=200)[0]
    assert primitive_F(t, p) == pytest.approx(ref, rel=1e-11, abs=1e-300)
    assert primitive_F(-t, p) == primitive_F(t, p)


def test_F_derivative_is_f():
    for N in (2, 3, 4):
        p = FunctionalParams(N)
        t = np.linspace(0.1, 3.0, 50)
        e = 1e-3
        F = lambda x: primitive_F(x, p)
        fd = (8 * (F(t + e) - F(t - e)) - (F(t + 2 * e) - F(t - 2 * e))) / (12 * e)
        np.testing.assert_allclose(fd, nonlinearity_f(t, p), rtol=1e-8)
        np.testing.assert_array_equal(nonlinearity_f(-t, p), -nonlinearity_f(t, p))


def test_overflow_guard():
    p = FunctionalParams(2)
    with pytest.raises(ExponentialRangeError):
        primitive_F(27.0, p)
    with pytest.raises(ExponentialRangeError):
        nonlinearity_f(-27.0, p)
    # log and scaled forms stay finite past the guard
    assert math.isfinite(log_primitive_F(100.0, p))
    assert 0 < scaled_primitive_F(100.0, p) < 1


def test_F_closed_form_N2():
    t = np.linspace(0, 3, 1000)
    assert np.max(np.abs(primitive_F(t, FunctionalParams(2)) - primitive_F_closed_N2(t))) <= 1e-10


def test_energy_basics(square_coarse):
    rng = np.random.default_rng(1)
    u = _smooth(square_coarse, rng)
    z = FeFunction(np.zeros(square_coarse.n_nodes), square_coarse)
    p = FunctionalParams(2, 3.0)
    assert energy_Phi(z, p) == 0.0
    assert np.all(grad_Phi(z, p).coefficients == 0)
    assert energy_Phi(-u, p) == energy_Phi(u, p)
    p0 = p.with_lambda(0.0)
    assert energy_Phi(u, p0) == pytest.approx(grad_power_integral(u, 2) / 2, rel=1e-15)
    for N in (2, 3):
        q = FunctionalParams(N, 0.0)
        assert energy_Phi(2.5 * u, q) == pytest.approx(2.5**N * energy_Phi(u, q), rel=1e-12)


def test_energy_taylor(square_coarse):
    e = first_eigenpair(square_coarse, 2)
    u = e.eigenfunction
    lam = 5.0
    p = FunctionalParams(2, lam)
    b = float(np.dot(square_coarse.space.mass, u.coefficients**2))
    for t in (1e-2, 3e-2):
        taylor = t * t * (e.lambda_k - lam) * b / 2
        assert energy_Phi(t * u, p) == pytest.approx(taylor, rel=5 * t * t)


def test_grad_identity(square_coarse):
    """<grad Phi(u), u> = int |grad u|^N - lam int |u|^N e^{|u|^N'}."""
    u = _smooth(square_coarse, np.random.default_rng(2))
    for N in (2, 3):
        p = FunctionalParams(N, 2.0)
        c = u.coefficients
        lhs = float(np.dot(grad_Phi(u, p).coefficients, c))
        rhs = grad_power_integral(u, N) - p.lam * float(
            np.dot(square_coarse.space.mass, np.abs(c) ** N * np.exp(np.abs(c) ** p.N_conj))
        )
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_gradient_check_and_hessian(square_coarse, cube_8):
    for mesh, N in ((square_coarse, 2), (square_coarse, 3), (cube_8, 3)):
        res = gradient_check(mesh, FunctionalParams(N, 1.5), n_pairs=20, seed=3)
        assert res["max_rel_error"] <= 1e-6
    u = _smooth(square_coarse, np.random.default_rng(4)).coefficients
    w = square_coarse.space.zero_boundary(np.random.default_rng(5).standard_normal(square_coarse.n_nodes))
    p = FunctionalParams(3, 1.0)
    free = square_coarse.space.free
    e = 1e-6
    fd = (grad_Phi(u + e * w, p, square_coarse) - grad_Phi(u - e * w, p, square_coarse))[free] / (2 * e)
    Hw = hess_Phi(u, p, square_coarse) @ w[free]
    assert np.linalg.norm(Hw - fd) <= 1e-6 * np.linalg.norm(Hw)


def test_psi_and_projection(square_coarse):
    rng = np.random.default_rng(6)
    u = _smooth(square_coarse, rng)
    for N in (2, 3, 4):
        pu = radial_project(u, N)
        assert grad_power_integral(pu, N) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(radial_project(pu, N).coefficients, pu.coefficients, rtol=1e-14)
        np.testing.assert_allclose(radial_project(3.7 * u, N).coefficients, pu.coefficients, rtol=1e-13)
        np.testing.assert_allclose(radial_project(-u, N).coefficients, -pu.coefficients, rtol=1e-14)
        assert psi(-2.0 * u, N) == pytest.approx(psi(u, N) / 2.0**N, rel=1e-13)
    with pytest.raises(ZeroDivisionError):
        psi(0 * u, 2)
    with pytest.raises(ZeroDivisionError):
        radial_project(0 * u, 2)
    e = first_eigenpair(square_coarse, 2)
    assert psi(radial_project(e.eigenfunction, 2), 2) == pytest.approx(e.lambda_k, rel=1e-10)


def test_tm_functional(square_coarse):
    u = _smooth(square_coarse, np.random.default_rng(7))
    assert tm_functional(0 * u, 4 * math.pi, 2) == pytest.approx(1.0, rel=1e-14)
    assert tm_functional(u, 0.0, 2) == pytest.approx(1.0, rel=1e-14)


def test_json_roundtrip(square_coarse):
    u = _smooth(square_coarse, np.random.default_rng(8))
    v = FeFunction.from_json(u.to_json(), square_coarse)
    np.testing.assert_array_equal(u.coefficients, v.coefficients)
    with pytest.raises(ValueError):
        FeFunction(np.ones(square_coarse.n_nodes), square_coarse)
