import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelscatter.forward import ScattererField
from levelscatter.levelset import (
    LevelSetSpec,
    LevelSetSpecError,
    apply_direct,
    apply_level_set,
    centroid_values,
    jaccard_index,
    read_scatterer,
    write_scatterer,
)
from levelscatter.scatterers import disk_region, rasterize

B = 3.0


def test_uniform_positive(mesh_coarse):
    q = apply_level_set(np.ones(mesh_coarse.n_nodes), LevelSetSpec.two_phase(B), mesh_coarse)
    assert np.all(q.values == B)


def test_half_disk(mesh_coarse):
    q = apply_level_set(mesh_coarse.nodes[:, 0], LevelSetSpec.two_phase(B), mesh_coarse)
    expected = np.where(mesh_coarse.centroids[:, 0] >= 0, B, 0.0)
    np.testing.assert_array_equal(q.values, expected)


def test_tie_goes_up(mesh_coarse):
    spec = LevelSetSpec((-1.0, 0.5), (0.0, 0.0, B))
    q = apply_level_set(np.full(mesh_coarse.n_nodes, 0.5), spec, mesh_coarse)
    assert np.all(q.values == B)
    q = apply_level_set(np.full(mesh_coarse.n_nodes, -1.0), spec, mesh_coarse)
    assert np.all(q.values == 0)


@pytest.mark.parametrize(
    "thresholds,values",
    [((0.0, 0.0), (0, 1, 0)), ((1.0, 0.0), (0, 1, 0)), ((0.0,), (1, 2)), ((0.0,), (1, 1)), ((0.0,), (0,))],
)
def test_invalid_spec(thresholds, values):
    with pytest.raises(LevelSetSpecError):
        LevelSetSpec(thresholds, values)


def test_wrong_length(mesh_coarse):
    with pytest.raises(ValueError):
        apply_level_set(np.ones(4), LevelSetSpec.two_phase(B), mesh_coarse)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 100.0), shift=st.floats(-10.0, 10.0))
def test_monotone_invariance(mesh_coarse, seed, scale, shift):
    phi = np.random.default_rng(seed).standard_normal(mesh_coarse.n_nodes)
    spec = LevelSetSpec((-0.3, 0.4), (0.0, B, 0.0))
    moved = LevelSetSpec(tuple(scale * c + shift for c in spec.thresholds), spec.values)
    a = apply_level_set(phi, spec, mesh_coarse)
    b = apply_level_set(scale * phi + shift, moved, mesh_coarse)
    np.testing.assert_array_equal(a.values, b.values)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(0.0, 0.999))
def test_stability_under_small_perturbation(mesh_coarse, seed, frac):
    gen = np.random.default_rng(seed)
    phi = gen.standard_normal(mesh_coarse.n_nodes)
    spec = LevelSetSpec.two_phase(B, 0.1)
    delta = np.abs(centroid_values(phi, mesh_coarse) - 0.1).min()
    pert = gen.uniform(-1, 1, mesh_coarse.n_nodes) * frac * delta
    a = apply_level_set(phi, spec, mesh_coarse)
    b = apply_level_set(phi + pert, spec, mesh_coarse)
    np.testing.assert_array_equal(a.values, b.values)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_output_values(mesh_coarse, seed):
    phi = np.random.default_rng(seed).standard_normal(mesh_coarse.n_nodes)
    q = apply_level_set(phi, LevelSetSpec.two_phase(B), mesh_coarse)
    assert set(np.unique(q.values)) <= {0.0, B}
    assert q.contrast == B


def test_admissibility_flags_boundary(mesh_coarse):
    q = apply_level_set(np.ones(mesh_coarse.n_nodes), LevelSetSpec.two_phase(B), mesh_coarse)
    assert not q.is_admissible(mesh_coarse)
    assert rasterize(mesh_coarse, disk_region, B).is_admissible(mesh_coarse)


def test_direct_mode_clip(mesh_coarse):
    phi = np.full(mesh_coarse.n_nodes, -5.0)
    phi[:3] = 2.0
    q = apply_direct(phi, mesh_coarse)
    assert q.values.min() == -0.99
    np.testing.assert_allclose(q.values, np.maximum(centroid_values(phi, mesh_coarse), -0.99))


def test_jaccard_examples(mesh_mid):
    a = rasterize(mesh_mid, disk_region, 1.0)
    assert jaccard_index(a, a, mesh_mid) == 1.0
    left = rasterize(mesh_mid, lambda x, y: x < -0.1, 1.0)
    right = rasterize(mesh_mid, lambda x, y: x > 0.1, 1.0)
    assert jaccard_index(left, right, mesh_mid) == 0.0
    empty = ScattererField.zeros(mesh_mid)
    assert jaccard_index(empty, empty, mesh_mid) == 1.0


def test_jaccard_nested_disks():
    from levelscatter.mesh import generate_disk_mesh

    mesh = generate_disk_mesh(1.0, 0.02)
    small = rasterize(mesh, lambda x, y: disk_region(x, y, 0.2), 1.0)
    big = rasterize(mesh, lambda x, y: disk_region(x, y, 0.2 * math.sqrt(2)), 1.0)
    assert jaccard_index(small, big, mesh) == pytest.approx(0.5, abs=0.03)


def test_jaccard_mismatch(mesh_coarse, mesh_mid):
    with pytest.raises(ValueError):
        jaccard_index(ScattererField.zeros(mesh_coarse), ScattererField.zeros(mesh_mid), mesh_mid)


def test_scatterer_file_roundtrip(mesh_coarse, tmp_path):
    q = rasterize(mesh_coarse, disk_region, 3.0)
    path = tmp_path / "q.txt"
    write_scatterer(q, path)
    assert path.read_text().splitlines()[0].split()[0] == "0"
    back = read_scatterer(path)
    np.testing.assert_array_equal(back.values, q.values)
    assert back.contrast == 3.0
