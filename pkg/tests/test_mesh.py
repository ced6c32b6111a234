import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelscatter.mesh import (
    Mesh,
    MeshError,
    boundary_trace,
    generate_disk_mesh,
    locate_point,
    read_mesh,
    write_mesh,
)


def polygon_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


@pytest.mark.parametrize("h", [0.3, 0.1, 0.05])
def test_mesh_invariants(h):
    m = generate_disk_mesh(1.0, h)
    assert np.all(np.linalg.norm(m.nodes, axis=1) <= 1.0 + 1e-12)
    assert np.all(m.signed_areas > 0)
    edges, counts = m.edge_counts
    assert set(counts.tolist()) == {1, 2}
    tr = boundary_trace(m)
    assert (counts == 1).sum() == tr.size
    assert np.max(np.abs(np.linalg.norm(m.nodes[tr.node_indices], axis=1) - 1.0)) <= 1e-12


def test_reference_element_count():
    m = generate_disk_mesh(1.0, 2.45e-2)
    assert abs(m.n_elements - 16512) <= 0.15 * 16512


def test_invalid_h():
    with pytest.raises(ValueError):
        generate_disk_mesh(1.0, 1.5)
    with pytest.raises(ValueError):
        generate_disk_mesh(1.0, 0.0)


def test_node_cap():
    with pytest.raises(MemoryError):
        generate_disk_mesh(1.0, 1e-3, max_nodes=10_000)


def test_area_matches_boundary_polygon(mesh_coarse):
    tr = boundary_trace(mesh_coarse)
    poly = polygon_area(mesh_coarse.nodes[tr.node_indices])
    assert mesh_coarse.areas.sum() == pytest.approx(poly, rel=1e-12)
    assert mesh_coarse.areas.sum() == pytest.approx(np.pi, rel=0.01)


def test_perimeter(mesh_coarse):
    tr = boundary_trace(mesh_coarse)
    p = mesh_coarse.nodes[tr.node_indices]
    perim = np.linalg.norm(p - np.roll(p, -1, axis=0), axis=1).sum()
    n = tr.size
    # regular inscribed polygon
    assert perim == pytest.approx(2 * n * np.sin(np.pi / n), rel=1e-10)
    assert perim == pytest.approx(2 * np.pi, rel=0.01)


def test_refinement_growth():
    a = generate_disk_mesh(1.0, 0.1).n_elements
    b = generate_disk_mesh(1.0, 0.05).n_elements
    assert b >= 3 * a


def test_fitted_radii_resolved():
    m = generate_disk_mesh(1.0, 0.1, fitted_radii=[0.5, 0.8])
    r = np.linalg.norm(m.nodes, axis=1)
    assert np.sum(np.isclose(r, 0.5, atol=1e-14)) >= 6
    assert np.sum(np.isclose(r, 0.8, atol=1e-14)) >= 6


def test_trace_angles_and_loop(mesh_coarse):
    tr = boundary_trace(mesh_coarse)
    assert np.all(np.diff(tr.angles) > 0)
    assert len(tr.edges) == tr.size
    assert tr.angles[0] == pytest.approx(0.0, abs=1e-14)
    assert tr.angles[-1] < 2 * np.pi


def test_trace_deterministic(mesh_coarse):
    a, b = boundary_trace(mesh_coarse), boundary_trace(mesh_coarse)
    np.testing.assert_array_equal(a.node_indices, b.node_indices)


@settings(max_examples=10, deadline=None)
@given(rot=st.floats(0.01, 6.2))
def test_trace_rotation_equivariance(mesh_coarse, rot):
    c, s = np.cos(rot), np.sin(rot)
    R = np.array([[c, -s], [s, c]])
    m2 = Mesh(mesh_coarse.nodes @ R.T, mesh_coarse.elements, 1.0)
    t1, t2 = boundary_trace(mesh_coarse), boundary_trace(m2)
    shift = int(np.flatnonzero(t1.node_indices == t2.node_indices[0])[0])
    np.testing.assert_array_equal(np.roll(t1.node_indices, -shift), t2.node_indices)
    diff = np.mod(t2.angles - np.roll(t1.angles, -shift), 2 * np.pi)
    np.testing.assert_allclose(np.angle(np.exp(1j * (diff - rot))), 0.0, atol=1e-10)


def test_no_boundary():
    # two copies of a closed surface are impossible in 2D; an empty mesh has no boundary
    with pytest.raises(MeshError):
        boundary_trace(Mesh(np.zeros((3, 2)), np.zeros((0, 3), dtype=int), 1.0))


def test_locate_centroid(mesh_coarse):
    for e in [0, 17, mesh_coarse.n_elements - 1]:
        got, lam = locate_point(mesh_coarse, mesh_coarse.centroids[e])
        assert got == e
        np.testing.assert_allclose(lam, 1 / 3, atol=1e-12)


def test_locate_vertex(mesh_coarse):
    node = 40
    e, lam = locate_point(mesh_coarse, mesh_coarse.nodes[node])
    assert node in mesh_coarse.elements[e]
    assert lam.max() == pytest.approx(1.0, abs=1e-12)


def test_locate_roundtrip(mesh_coarse, rng):
    r = 0.95 * np.sqrt(rng.uniform(size=50))
    t = rng.uniform(0, 2 * np.pi, size=50)
    for p in np.column_stack([r * np.cos(t), r * np.sin(t)]):
        e, lam = locate_point(mesh_coarse, p)
        assert np.all(lam >= -1e-12) and lam.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(lam @ mesh_coarse.nodes[mesh_coarse.elements[e]], p, atol=1e-12)


def test_locate_outside(mesh_coarse):
    with pytest.raises(MeshError):
        locate_point(mesh_coarse, (1.5, 0.0))


def test_mesh_file_roundtrip(mesh_coarse, tmp_path):
    path = tmp_path / "m.txt"
    write_mesh(mesh_coarse, path)
    assert path.read_text().splitlines()[0] == f"mesh v1 {mesh_coarse.n_nodes} {mesh_coarse.n_elements} 1.0"
    m2 = read_mesh(path)
    np.testing.assert_array_equal(m2.nodes, mesh_coarse.nodes)
    np.testing.assert_array_equal(m2.elements, mesh_coarse.elements)
