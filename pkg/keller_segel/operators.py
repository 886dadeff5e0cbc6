"""
Operators Module - P1 stiffness and mass assembly on a TriMesh and the SPD solves the time stepper relies on.

The stiffness matrix with nodal coefficient mu is the discrete counterpart of the weak operator -div(mu grad):
entry (i, j) is the integral of mu_h grad(phi_i) . grad(phi_j). mu_h is linear per element and the hat gradients
are constant, so the element average of mu integrates it exactly. No sign is assumed for mu.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from keller_segel.constants import (
    DEFAULT_SOLVER_TOL,
    FIELD_LENGTH_ERROR,
    FIELD_MESH_ERROR,
    NON_FINITE_RHS_ERROR,
    OPERATOR_DIMENSION_ERROR,
)
from keller_segel.exceptions import DimensionError, NonConvergenceError, SolverInputError

if TYPE_CHECKING:
    from typing import Union

    from keller_segel.mesh import TriMesh

    ArrayLike = Union[np.ndarray, float]

logger = logging.getLogger(__name__)

_CONSISTENT_BLOCK = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
_MAX_RESTARTS = 3


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Nodal P1 values of one unknown (u, v, p or w) or of a coefficient trace, tied to its mesh by ``mesh_id``.
    """

    values: np.ndarray
    mesh_id: str

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def on(cls, mesh: TriMesh, values: ArrayLike) -> ScalarField:
        """
        Build a field on ``mesh``; scalars are broadcast to every node.
        """
        array = np.broadcast_to(np.asarray(values, dtype=float), (mesh.num_nodes,)) if np.ndim(values) == 0 else values
        field = cls(values=np.asarray(array), mesh_id=mesh.mesh_id)
        field.check_mesh(mesh)
        return field

    def check_mesh(self, mesh: TriMesh) -> None:
        if self.mesh_id != mesh.mesh_id:
            raise DimensionError(FIELD_MESH_ERROR.format(received=self.mesh_id, expected=mesh.mesh_id))
        if len(self.values) != mesh.num_nodes:
            raise DimensionError(
                FIELD_LENGTH_ERROR.format(received=len(self.values), mesh_id=mesh.mesh_id, expected=mesh.num_nodes)
            )

    def with_values(self, values: np.ndarray) -> ScalarField:
        if len(values) != len(self.values):
            raise DimensionError(OPERATOR_DIMENSION_ERROR.format(dimension=len(self.values), length=len(values)))
        return ScalarField(values=values, mesh_id=self.mesh_id)

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """
    Immutable sparse real matrix in CSR form.
    """

    matrix: sparse.csr_matrix
    symmetric: bool = True

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    def __add__(self, other: SparseOperator) -> SparseOperator:
        return SparseOperator((self.matrix + other.matrix).tocsr(), self.symmetric and other.symmetric)

    def scaled(self, factor: float) -> SparseOperator:
        return SparseOperator((self.matrix * factor).tocsr(), self.symmetric)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def hat_gradients(mesh: TriMesh) -> np.ndarray:
    """
    Constant gradients of the three P1 hat functions on every element, shape (M, 3, 2).
    """
    a, b, c = (mesh.nodes[mesh.triangles[:, k]] for k in range(3))
    twice_area = (2.0 * mesh.signed_areas)[:, None]
    grad_a = np.column_stack([b[:, 1] - c[:, 1], c[:, 0] - b[:, 0]]) / twice_area
    grad_b = np.column_stack([c[:, 1] - a[:, 1], a[:, 0] - c[:, 0]]) / twice_area
    grad_c = np.column_stack([a[:, 1] - b[:, 1], b[:, 0] - a[:, 0]]) / twice_area
    return np.stack([grad_a, grad_b, grad_c], axis=1)


def _assemble(mesh: TriMesh, blocks: np.ndarray) -> SparseOperator:
    rows = np.repeat(mesh.triangles, 3, axis=1).reshape(-1)
    cols = np.tile(mesh.triangles, (1, 3)).reshape(-1)
    matrix = sparse.coo_matrix((blocks.reshape(-1), (rows, cols)), shape=(mesh.num_nodes, mesh.num_nodes)).tocsr()
    matrix.sum_duplicates()
    return SparseOperator(matrix)


def element_stiffness(mesh: TriMesh, element_mu: np.ndarray) -> np.ndarray:
    gradients = hat_gradients(mesh)
    products = np.einsum("eik,ejk->eij", gradients, gradients)
    return (element_mu * mesh.signed_areas)[:, None, None] * products


def assemble_stiffness(mesh: TriMesh, mu: ScalarField) -> SparseOperator:
    """
    Assemble K(mu); mu may take either sign, PSD only holds when min(mu) >= 0.
    """
    mu.check_mesh(mesh)
    element_mu = mu.values[mesh.triangles].mean(axis=1)
    return _assemble(mesh, element_stiffness(mesh, element_mu))


def assemble_mass(mesh: TriMesh, lumped: bool = False) -> SparseOperator:
    if lumped:
        return SparseOperator(sparse.diags(mesh.lumped_weights).tocsr())
    blocks = mesh.signed_areas[:, None, None] * _CONSISTENT_BLOCK[None, :, :]
    return _assemble(mesh, blocks)


def apply(operator: SparseOperator, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (operator.dimension,):
        raise DimensionError(OPERATOR_DIMENSION_ERROR.format(dimension=operator.dimension, length=len(x)))
    return operator.matrix @ x


def _relative_residual(operator: SparseOperator, x: np.ndarray, b: np.ndarray, b_norm: float) -> float:
    return float(np.linalg.norm(operator.matrix @ x - b) / b_norm)


def solve_spd(
    operator: SparseOperator, b: np.ndarray, tol: float = DEFAULT_SOLVER_TOL, max_iter: int | None = None
) -> np.ndarray:
    """
    Jacobi-preconditioned conjugate gradients for a symmetric positive definite operator.

    The returned x satisfies ||Ax - b|| <= tol * ||b|| measured on the true residual. Identical inputs give
    bit-identical outputs.

    :raises: SolverInputError for non-finite b, NonConvergenceError when max_iter is exhausted
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (operator.dimension,):
        raise DimensionError(OPERATOR_DIMENSION_ERROR.format(dimension=operator.dimension, length=len(b)))
    non_finite = int(np.count_nonzero(~np.isfinite(b)))
    if non_finite:
        raise SolverInputError(NON_FINITE_RHS_ERROR.format(count=non_finite))
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b)
    diagonal = operator.matrix.diagonal()
    if operator.matrix.nnz == np.count_nonzero(diagonal):
        x = b / diagonal
        residual = _relative_residual(operator, x, b, b_norm)
        if residual > tol:
            raise NonConvergenceError(residual, 0)
        return x
    preconditioner = sparse.diags(1.0 / diagonal)
    limit = max_iter if max_iter is not None else 10 * operator.dimension
    x = np.zeros_like(b)
    residual = 1.0
    for _ in range(_MAX_RESTARTS + 1):
        x, info = cg(operator.matrix, b, x0=x, rtol=tol, atol=0.0, maxiter=limit, M=preconditioner)
        residual = _relative_residual(operator, x, b, b_norm)
        if info < 0:
            break
        if residual <= tol:
            return x
        if info > 0:
            raise NonConvergenceError(residual, limit)
        logger.debug("Recursive CG residual drifted from the true residual (%.3e), restarting", residual)
    raise NonConvergenceError(residual, limit)


def implicit_euler_step(
    mesh: TriMesh, mu: ScalarField, tau: float, x: np.ndarray, lumped: bool = True, tol: float = DEFAULT_SOLVER_TOL
) -> np.ndarray:
    """
    One step of the discrete semigroup: x -> (M + tau K(mu))^-1 M x.
    """
    mass = assemble_mass(mesh, lumped=lumped)
    system = mass + assemble_stiffness(mesh, mu).scaled(tau)
    return solve_spd(system, apply(mass, x), tol=tol)
