import math

import pytest

from tmcrit import DomainSpec, eigen_sequence, first_eigenpair, gap_threshold, generate_mesh, psi
from tmcrit.eigen import observed_order, richardson
from tmcrit.functional import grad_power_integral
from oracles import brute_force_lambda1, disc_first_eig, square_laplacian_eigs


def test_first_pair_properties(square_05):
    for N in (2, 3, 4):
        e = first_eigenpair(square_05, N)
        assert e.converged and e.lambda_k > 0
        u = e.eigenfunction
        assert grad_power_integral(u, N) == pytest.approx(1.0, abs=1e-10)
        assert psi(u, N) == pytest.approx(e.lambda_k, rel=1e-10)
        assert u.coefficients[square_05.space.free].min() > 0


def test_square_sequence(eig_square_05):
    ref = square_laplacian_eigs()
    lams = [e.lambda_k for e in eig_square_05]
    assert lams == sorted(lams)
    assert lams[0] < lams[1]
    for got, want in zip(lams, ref):
        assert got == pytest.approx(want, rel=0.02)
    assert eig_square_05[2].degenerate_with_previous
    assert all(e.residual <= 1e-9 for e in eig_square_05)


def test_four_levels():
    est = eigen_sequence(generate_mesh(DomainSpec("unit-square"), 0.025), 2, 4)
    ref = [2 * math.pi**2, 5 * math.pi**2, 5 * math.pi**2, 8 * math.pi**2]
    for e, want in zip(est, ref):
        assert e.lambda_k == pytest.approx(want, rel=0.02)


def test_disc_bessel():
    e = first_eigenpair(generate_mesh(DomainSpec("disc", radius=1.0), 0.05), 2)
    assert e.lambda_k == pytest.approx(disc_first_eig(), rel=0.01)


def test_refinement_order():
    hs = [0.1, 0.05, 0.025]
    vals = [first_eigenpair(generate_mesh(DomainSpec("unit-square"), h), 2).lambda_k for h in hs]
    errs = [abs(v - 2 * math.pi**2) for v in vals]
    assert errs[0] > errs[1] > errs[2]
    assert observed_order(vals, hs) == pytest.approx(2.0, abs=0.2)
    assert richardson(vals, hs) == pytest.approx(2 * math.pi**2, rel=1e-4)


def test_cube_against_oracle(cube_8):
    e = first_eigenpair(cube_8, 3)
    best, _ = brute_force_lambda1(cube_8, 3, n_starts=10)
    assert e.lambda_k == pytest.approx(best, rel=0.02)


def test_gap_threshold():
    g = gap_threshold(2 * math.pi**2, 5 * math.pi**2, 2, 1.0)
    assert g == pytest.approx(5 * math.pi**2 - 4 * math.pi**1.5, rel=1e-14)
    assert g == pytest.approx(27.075, abs=1e-3)
    assert gap_threshold(1e-300, 7.0, 3, 2.0) == pytest.approx(7.0)
    for N in (2, 3, 4):
        assert gap_threshold(3.0, 9.0, N, 0.5) < 9.0


def test_rejects_bad_args(square_coarse):
    with pytest.raises(ValueError):
        eigen_sequence(square_coarse, 2, 0)
    with pytest.raises(ValueError):
        first_eigenpair(square_coarse, 2, tol=0)
