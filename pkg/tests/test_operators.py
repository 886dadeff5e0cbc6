from __future__ import annotations

import numpy as np
import pytest
from faker import Faker

from keller_segel.checks import REFERENCE_MASS, REFERENCE_STIFFNESS, reference_triangle
from keller_segel.exceptions import DimensionError, NonConvergenceError, SolverInputError
from keller_segel.geometry import make_domain
from keller_segel.mesh import triangulate
from keller_segel.operators import (
    ScalarField,
    SparseOperator,
    apply,
    assemble_mass,
    assemble_stiffness,
    hat_gradients,
    implicit_euler_step,
    solve_spd,
)
from tests.utils import two_triangle_mesh

faker = Faker()
rng = np.random.default_rng(2024)

l_shape = triangulate(make_domain("l_shape"), 0.125)
square = triangulate(make_domain("unit_square"), 0.125)


def test_reference_stiffness():
    mesh = reference_triangle()
    stiffness = assemble_stiffness(mesh, ScalarField.on(mesh, 1.0)).toarray()
    assert np.max(np.abs(stiffness - REFERENCE_STIFFNESS)) <= 1e-14


def test_reference_mass():
    mesh = reference_triangle()
    assert np.max(np.abs(assemble_mass(mesh).toarray() - REFERENCE_MASS)) <= 1e-14
    assert np.max(np.abs(assemble_mass(mesh, lumped=True).toarray() - np.eye(3) / 6)) <= 1e-14


def test_reference_column():
    mesh = reference_triangle()
    stiffness = assemble_stiffness(mesh, ScalarField.on(mesh, 1.0))
    assert np.allclose(apply(stiffness, np.array([0.0, 1.0, 0.0])), [-0.5, 0.5, 0.0], rtol=0, atol=1e-15)


def test_hat_gradients_sum_to_zero():
    gradients = hat_gradients(l_shape)
    assert np.allclose(gradients.sum(axis=1), 0.0, atol=1e-12)


def test_constant_coefficient_scales_stiffness():
    value = faker.pyfloat(min_value=0.1, max_value=10.0)
    unit = assemble_stiffness(l_shape, ScalarField.on(l_shape, 1.0)).toarray()
    scaled = assemble_stiffness(l_shape, ScalarField.on(l_shape, value)).toarray()
    assert np.allclose(scaled, value * unit, rtol=1e-13, atol=1e-13)


def test_zero_coefficient_gives_zero_operator():
    stiffness = assemble_stiffness(l_shape, ScalarField.on(l_shape, 0.0))
    assert abs(stiffness.matrix).max() == 0.0
    assert np.array_equal(apply(stiffness, rng.normal(size=l_shape.num_nodes)), np.zeros(l_shape.num_nodes))


@pytest.mark.parametrize("low,high", [(0.5, 2.0), (-3.0, 3.0), (-2.0, -0.1)])
def test_stiffness_symmetry_and_row_sums(low, high):
    mu = ScalarField.on(l_shape, rng.uniform(low, high, l_shape.num_nodes))
    matrix = assemble_stiffness(l_shape, mu).matrix
    scale = abs(matrix).max()
    assert abs(matrix - matrix.T).max() <= 1e-14 * scale
    row_sums = np.abs(np.asarray(matrix.sum(axis=1)).reshape(-1))
    row_max = np.asarray(abs(matrix).max(axis=1).todense()).reshape(-1)
    assert np.all(row_sums <= 1e-12 * row_max)
    assert np.allclose(apply(assemble_stiffness(l_shape, mu), np.ones(l_shape.num_nodes)), 0.0, atol=1e-12 * scale)


def test_stiffness_is_psd_for_positive_mu():
    mu = ScalarField.on(l_shape, rng.uniform(0.5, 2.0, l_shape.num_nodes))
    dense = assemble_stiffness(l_shape, mu).toarray()
    eigenvalues = np.linalg.eigvalsh(dense)
    assert eigenvalues.min() >= -1e-12 * eigenvalues.max()
    # the kernel on a connected mesh is exactly the constants
    assert np.count_nonzero(eigenvalues <= 1e-10 * eigenvalues.max()) == 1


def test_sign_indefinite_mu_gives_negative_quadratic_form():
    mu = ScalarField.on(square, np.where(square.nodes[:, 0] < 0.5, 1.0, -4.0))
    x = np.where(square.nodes[:, 0] > 0.5, 4.0 * (square.nodes[:, 0] - 0.5), 0.0)
    assert x @ apply(assemble_stiffness(square, mu), x) < 0


def test_mass_matrices():
    consistent = assemble_mass(l_shape)
    lumped = assemble_mass(l_shape, lumped=True)
    assert lumped.toarray().sum() == pytest.approx(0.75, rel=1e-12)
    assert np.allclose(np.asarray(consistent.matrix.sum(axis=1)).reshape(-1), lumped.matrix.diagonal(), atol=1e-15)
    assert np.linalg.eigvalsh(consistent.toarray()).min() > 0


def test_field_dimension_errors():
    other = two_triangle_mesh()
    with pytest.raises(DimensionError, match="Field belongs to mesh"):
        assemble_stiffness(l_shape, ScalarField.on(other, 1.0))
    with pytest.raises(DimensionError, match="has 4 nodes"):
        ScalarField(np.ones(3), other.mesh_id).check_mesh(other)
    with pytest.raises(DimensionError, match="cannot act on a vector of length 2"):
        apply(assemble_mass(other), np.ones(2))


def test_field_is_read_only():
    field = ScalarField.on(l_shape, 1.0)
    assert len(field) == l_shape.num_nodes
    with pytest.raises(ValueError):
        field.values[0] = 3.0
    assert not field.with_values(np.full(l_shape.num_nodes, np.nan)).is_finite


def test_operator_algebra():
    mass = assemble_mass(l_shape)
    stiffness = assemble_stiffness(l_shape, ScalarField.on(l_shape, 1.0))
    combined = mass + stiffness.scaled(0.5)
    assert isinstance(combined, SparseOperator)
    assert combined.dimension == l_shape.num_nodes
    assert np.allclose(combined.toarray(), mass.toarray() + 0.5 * stiffness.toarray())


def test_solve_lumped_is_diagonal_solve():
    mass = assemble_mass(l_shape, lumped=True)
    b = rng.normal(size=l_shape.num_nodes)
    x = solve_spd(mass, b, tol=1e-12)
    assert np.linalg.norm(apply(mass, x) - b) <= 1e-12 * np.linalg.norm(b)


def test_solve_zero_rhs():
    system = assemble_mass(l_shape) + assemble_stiffness(l_shape, ScalarField.on(l_shape, 1.0)).scaled(0.1)
    x = solve_spd(system, np.zeros(l_shape.num_nodes))
    assert np.array_equal(x, np.zeros(l_shape.num_nodes))


def test_solve_reproduces_constants():
    mass = assemble_mass(l_shape)
    system = mass + assemble_stiffness(l_shape, ScalarField.on(l_shape, 1.0)).scaled(0.1)
    x = solve_spd(system, apply(mass, np.ones(l_shape.num_nodes)), tol=1e-12)
    assert np.allclose(x, 1.0, rtol=0, atol=1e-9)


@pytest.mark.parametrize("tol", [1e-6, 1e-10, 1e-12])
def test_solve_meets_true_residual(tol):
    system = assemble_mass(l_shape) + assemble_stiffness(l_shape, ScalarField.on(l_shape, 1.0)).scaled(0.05)
    b = rng.normal(size=l_shape.num_nodes)
    x = solve_spd(system, b, tol=tol)
    assert np.linalg.norm(system.matrix @ x - b) <= tol * np.linalg.norm(b)


def test_solve_is_deterministic():
    system = assemble_mass(l_shape) + assemble_stiffness(l_shape, ScalarField.on(l_shape, 1.0)).scaled(0.05)
    b = rng.normal(size=l_shape.num_nodes)
    assert np.array_equal(solve_spd(system, b), solve_spd(system, b.copy()))


def test_solve_errors():
    system = assemble_mass(l_shape) + assemble_stiffness(l_shape, ScalarField.on(l_shape, 1.0))
    b = np.ones(l_shape.num_nodes)
    b[3] = np.inf
    with pytest.raises(SolverInputError, match="1 non-finite entries"):
        solve_spd(system, b)
    with pytest.raises(NonConvergenceError) as error:
        solve_spd(system, rng.normal(size=l_shape.num_nodes), tol=1e-14, max_iter=1)
    assert error.value.residual > 1e-14


def test_implicit_euler_step_positivity():
    mesh = triangulate(make_domain("unit_square"), 0.125, require_nonobtuse=True)
    for _ in range(1000):
        mu = ScalarField.on(mesh, rng.uniform(0.5, 2.0, mesh.num_nodes))
        x = rng.uniform(0.0, 1.0, mesh.num_nodes) * (rng.uniform(size=mesh.num_nodes) < 0.5)
        out = implicit_euler_step(mesh, mu, 0.01, x, tol=1e-13)
        assert out.min() >= -1e-12
        assert np.abs(out).max() <= np.abs(x).max() + 1e-12
