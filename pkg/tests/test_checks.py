import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmcrit import FunctionalParams, build_linking_sets, check_energy_bound_X, check_F_lower_bounds
from tmcrit import check_F_upper_bounds, check_lemma33, first_eigenpair, radial_project
from tmcrit.checks import PASS_TOL, check_all, default_t_grid, lemma33_root, ray_samples, t_max


@pytest.mark.parametrize("N", [2, 3, 4])
def test_default_grids_pass(N, square_coarse):
    for rep in check_all(N, square_coarse):
        assert rep.passed, rep.to_dict()
        assert rep.min_margin >= -PASS_TOL


def test_default_grid_layout():
    t = default_t_grid(3)
    assert t[0] == 0 and t[1] == pytest.approx(1e-6) and t[-1] == pytest.approx(t_max(3))
    assert t_max(2) ** 2 == pytest.approx(700)


def test_known_margins_N2():
    up = check_F_upper_bounds(2, [1.0])
    raw = {r["inequality"]: r["margin_raw"] for r in up.rows}
    assert raw["upper-1"] == pytest.approx(math.e / 2 - 0.25 - (math.e - 1) / 2, rel=1e-12)
    assert raw["upper-1"] == pytest.approx(0.25, rel=1e-12)
    lo = check_F_lower_bounds(2, [1.0, 3.0])
    by = {(r["inequality"], r["t"]): r["margin_raw"] for r in lo.rows}
    assert by[("lower-2", 1.0)] == pytest.approx((math.e - 1) / 2 - 0.5, rel=1e-12)
    # exponential growth dominates the polynomial lower bounds
    for key in ("lower-1", "lower-2", "lower-3"):
        assert by[(key, 3.0)] > 100 * by[(key, 1.0)]


def test_broken_inequality_is_caught():
    """A deliberately wrong bound (F <= |t|^N/N) must fail with its worst point reported."""
    from tmcrit.checks import _combine
    from tmcrit import primitive_F

    t = np.linspace(0.1, 2, 50)
    F = primitive_F(t, FunctionalParams(2))
    rep = _combine("wrong", t, {"wrong": t**2 / 2 - F}, {"wrong": F}, 0.0)
    assert not rep.passed and rep.worst_point["t"] == pytest.approx(2.0)


@settings(max_examples=20, deadline=None)
@given(t=st.lists(st.floats(0, 1), min_size=1, max_size=20), N=st.integers(2, 5))
def test_random_grids_pass(t, N):
    grid = np.asarray(t) * t_max(N)
    assert check_F_upper_bounds(N, grid).passed
    assert check_F_lower_bounds(N, grid).passed


def test_ray_bound_first_eigenfunction(square_05):
    p = FunctionalParams(2, 1.0)
    u = radial_project(first_eigenpair(square_05, 2).eigenfunction, 2)
    rep = check_lemma33([u], np.linspace(0, 10, 201), p)
    assert rep.passed
    assert len(rep.rows) == 201
    with pytest.raises(ValueError):
        check_lemma33([2.0 * u], None, p)
    # past the root of the bound the energy along the ray is negative
    from tmcrit import energy_Phi, psi
    t0 = lemma33_root(psi(u, 2), p, square_05.volume)
    assert energy_Phi(1.01 * t0 * u, p) < 0


def test_ray_bound_cube(cube_8):
    rep = check_lemma33(ray_samples(cube_8, 3, n_random=2), None, FunctionalParams(3, 2.0))
    assert rep.passed


def test_energy_bound_on_X(square_05, eig_square_05):
    l2 = eig_square_05[1].lambda_k
    lam = 0.99 * l2
    p = FunctionalParams(2, lam)
    sets = build_linking_sets(1, lam, square_05, p, eigen=eig_square_05, multiplicity=2)
    rep = check_energy_bound_X(1, lam, square_05, p, sets.X, eigen=eig_square_05)
    assert rep.passed
    assert rep.parts["bound-below-threshold"] > 0
