import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmcrit import DomainSpec, Mesh, MeshError, generate_mesh, graded_disc_mesh, mesh_volume


def test_unit_square_half():
    m = generate_mesh(DomainSpec("unit-square"), 0.5)
    assert (m.n_nodes, len(m.elements), m.n_interior) == (9, 8, 1)


@settings(max_examples=15, deadline=None)
@given(h=st.floats(0.03, 0.6))
def test_square_volume_exact(h):
    m = generate_mesh(DomainSpec("unit-square"), h)
    assert abs(m.volume - 1.0) <= 1e-12
    assert np.all(m.element_measures > 0)
    assert m.h <= math.sqrt(2) * h * (1 + 1e-12)  # h is the grid spacing


@pytest.mark.parametrize(
    "spec,vol",
    [(DomainSpec("unit-square"), 1.0), (DomainSpec("rectangle", width=2, height=3), 6.0), (DomainSpec("cube"), 1.0)],
)
def test_mesh_volume(spec, vol):
    m = generate_mesh(spec, 0.25)
    assert mesh_volume(m) == pytest.approx(vol, rel=1e-12)
    assert m.n_interior >= 1


def test_boundary_mask_polygonal():
    for spec in (DomainSpec("rectangle", width=2, height=3), DomainSpec("cube")):
        m = generate_mesh(spec, 0.2)
        half = np.array([spec.width / 2, spec.height / 2]) if spec.dim == 2 else np.full(3, 0.5)
        on = np.any(np.isclose(np.abs(m.nodes - spec.origin), half, rtol=0, atol=1e-14), axis=1)
        np.testing.assert_array_equal(on, m.boundary_mask)


def test_disc_volume_second_order():
    errs = [abs(generate_mesh(DomainSpec("disc", radius=1.0), h).volume - math.pi) for h in (0.2, 0.1, 0.05)]
    rates = [math.log2(a / b) for a, b in zip(errs[:-1], errs[1:])]
    assert min(rates) >= 1.8


def test_disc_boundary_on_circle():
    m = generate_mesh(DomainSpec("disc", radius=1.0), 0.1)
    r = np.linalg.norm(m.nodes[m.boundary_mask], axis=1)
    np.testing.assert_allclose(r, 1.0, atol=1e-14)
    assert np.all(np.linalg.norm(m.nodes[~m.boundary_mask], axis=1) < 1 - 1e-9)


def test_graded_disc_uses_every_node():
    m = graded_disc_mesh(1.0, 0.1, 1e-8, (1e-6, 1e-3))
    assert np.all(m.element_measures > 0)
    used = np.zeros(m.n_nodes, bool)
    used[m.elements.ravel()] = True
    assert used.all()


def test_rejections():
    with pytest.raises((MeshError, ValueError)):
        DomainSpec("disc", radius=-1.0)
    with pytest.raises(MeshError):
        generate_mesh(DomainSpec("unit-square"), 5.0)
    with pytest.raises(MeshError):
        DomainSpec.parse("torus")


def test_roundtrip(tmp_path, square_coarse):
    p = tmp_path / "m.json"
    square_coarse.save(p)
    m = Mesh.load(p)
    np.testing.assert_array_equal(m.nodes, square_coarse.nodes)
    np.testing.assert_array_equal(m.elements, square_coarse.elements)
