import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from levelscatter.bessel import hankel_log_derivative
from levelscatter.fem import (
    AssemblyError,
    FEMSpace,
    SolverError,
    assemble_dtn,
    assemble_stiffness,
    assemble_weighted_mass,
    boundary_fourier_matrix,
    default_n_trunc,
    solve_complex_system,
    write_triplets,
)
from levelscatter.mesh import Mesh, boundary_trace, generate_disk_mesh

UNIT = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]), 1.0)


def test_unit_triangle_stiffness():
    K = assemble_stiffness(UNIT).toarray()
    ref = np.array([[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]])
    np.testing.assert_allclose(K, ref, atol=1e-15)


def test_unit_triangle_mass():
    M = assemble_weighted_mass(UNIT, [1.0]).toarray()
    np.testing.assert_allclose(M, np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24, atol=1e-16)


def test_stiffness_kernel_and_symmetry(mesh_coarse):
    K = assemble_stiffness(mesh_coarse)
    assert np.abs(K @ np.ones(mesh_coarse.n_nodes)).max() <= 1e-12
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()


def test_stiffness_psd(mesh_coarse):
    ev = np.linalg.eigvalsh(assemble_stiffness(mesh_coarse).toarray())
    assert ev.min() >= -1e-12 * ev.max()


def test_linear_field_energy(mesh_coarse):
    x = mesh_coarse.nodes[:, 0]
    energy = x @ (assemble_stiffness(mesh_coarse) @ x)
    assert energy == pytest.approx(mesh_coarse.areas.sum(), abs=1e-10)


def test_degenerate_element_named():
    bad = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), np.array([[0, 1, 2]]), 1.0)
    with pytest.raises(AssemblyError, match="element 0"):
        assemble_stiffness(bad)


def test_mass_zero_weights(mesh_coarse):
    M = assemble_weighted_mass(mesh_coarse, np.zeros(mesh_coarse.n_elements))
    assert not M.toarray().any()


def test_mass_total_area(mesh_coarse):
    one = np.ones(mesh_coarse.n_nodes)
    total = one @ (assemble_weighted_mass(mesh_coarse, np.ones(mesh_coarse.n_elements)) @ one)
    assert total == pytest.approx(math.pi, rel=0.01)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_mass_consistency(mesh_coarse, seed):
    w = np.random.default_rng(seed).uniform(-1, 4, mesh_coarse.n_elements)
    one = np.ones(mesh_coarse.n_nodes)
    total = one @ (assemble_weighted_mass(mesh_coarse, w) @ one)
    assert total == pytest.approx(np.sum(w * mesh_coarse.areas), rel=1e-12)


def test_mass_length_mismatch(mesh_coarse):
    with pytest.raises(ValueError):
        assemble_weighted_mass(mesh_coarse, np.ones(3))


def test_fourier_rows_are_exact_for_hats(mesh_coarse):
    # the hat functions sum to 1, so the rows sum to the exact integrals of 1, cos, sin
    tr = boundary_trace(mesh_coarse)
    B = boundary_fourier_matrix(tr, 8)
    sums = B.sum(axis=1)
    assert sums[0] == pytest.approx(2 * math.pi, rel=1e-13)
    np.testing.assert_allclose(sums[1:], 0.0, atol=1e-12)


def test_dtn_constant_vector():
    mesh = generate_disk_mesh(1.0, 0.05)
    tr = boundary_trace(mesh)
    k = math.pi
    blk = assemble_dtn(tr, k)
    rho0 = hankel_log_derivative(0, k)
    expected = 2 * math.pi * k * rho0
    # the block carries +int (Tu) v; the system matrix subtracts it
    got = blk.quadratic_form(np.ones(tr.size))
    assert abs(got - expected) <= 0.01 * abs(expected)
    A = FEMSpace(mesh).system_matrix(k, np.zeros(mesh.n_elements))
    one = np.ones(mesh.n_nodes)
    lift = one @ (A @ one)
    assert abs(lift + expected) <= 0.01 * abs(expected)


@pytest.mark.parametrize("k", [0.5 * math.pi, 1.5 * math.pi, 2.5 * math.pi])
def test_dtn_symmetry_and_sign(mesh_coarse, k, rng):
    tr = boundary_trace(mesh_coarse)
    blk = assemble_dtn(tr, k)
    T = blk.matrix()
    assert np.abs(T - T.T).max() <= 1e-12 * np.abs(T).max()
    for _ in range(20):
        v = rng.standard_normal(tr.size)
        assert blk.quadratic_form(v).imag > 0
    assert np.all(blk.symbol.imag > 0)


def test_dtn_aliasing_guard(mesh_coarse):
    tr = boundary_trace(mesh_coarse)
    with pytest.raises(ValueError, match="alias"):
        assemble_dtn(tr, 1.0, n_trunc=tr.size)


def test_dtn_domain():
    tr = boundary_trace(generate_disk_mesh(1.0, 0.2))
    with pytest.raises(ValueError):
        assemble_dtn(tr, 0.0)


def test_default_truncation():
    assert default_n_trunc(math.pi, 1.0) == 20
    assert default_n_trunc(15.2, 1.0) == 26


def test_system_matrix_complex_symmetric(mesh_coarse):
    A = FEMSpace(mesh_coarse).system_matrix(2.0, np.ones(mesh_coarse.n_elements))
    assert A.shape == (mesh_coarse.n_nodes,) * 2
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()


def test_manufactured_solution(mesh_coarse, rng):
    A = FEMSpace(mesh_coarse).system_matrix(math.pi, 1.0 + rng.uniform(0, 1, mesh_coarse.n_elements))
    e = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
    x = solve_complex_system(A, A @ e)
    assert np.linalg.norm(x - e) <= 1e-9 * np.linalg.norm(e)


def test_identity_and_zero():
    I = sp.identity(7, dtype=complex, format="csc")
    b = np.arange(7) + 1j
    np.testing.assert_array_equal(solve_complex_system(I, b), b)
    np.testing.assert_array_equal(solve_complex_system(I, np.zeros(7)), np.zeros(7))


def test_singular_system():
    A = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex))
    with pytest.raises(SolverError):
        solve_complex_system(A, np.ones(2))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        solve_complex_system(sp.identity(3, format="csc"), np.ones(4))


def test_solve_deterministic(mesh_coarse):
    space = FEMSpace(mesh_coarse)
    rhs = np.exp(1j * mesh_coarse.nodes[:, 0])
    a = space.factorize(3.0, np.ones(mesh_coarse.n_elements)).solve(rhs)
    b = space.factorize(3.0, np.ones(mesh_coarse.n_elements)).solve(rhs)
    np.testing.assert_array_equal(a, b)


def test_triplet_dump(tmp_path):
    A = sp.csc_matrix(np.array([[1 + 2j, 0], [0, 3]]))
    path = tmp_path / "a.txt"
    write_triplets(A, path)
    rows = [line.split() for line in path.read_text().splitlines()]
    assert len(rows) == 2
    assert [float(v) for v in rows[0][2:]] == [1.0, 2.0]
