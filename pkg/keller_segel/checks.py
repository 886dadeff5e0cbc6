"""
Checks Module - built-in property suites run by ``keller-segel check``.

Each check raises PropertyViolation when its property does not hold; run_suite collects the outcomes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from keller_segel.diagnostics import total_mass
from keller_segel.exceptions import KellerSegelError, PropertyViolation
from keller_segel.geometry import make_domain
from keller_segel.mesh import TriMesh, triangulate
from keller_segel.operators import (
    ScalarField,
    apply,
    assemble_mass,
    assemble_stiffness,
    implicit_euler_step,
    solve_spd,
)
from keller_segel.reactions import (
    CoefficientPair,
    Cutoff,
    KineticParams,
    ReactionNetwork,
    check_quasipositivity,
    eval_cutoff,
    eval_reactions,
)
from keller_segel.stepper import SimState, StepConfig, run

if TYPE_CHECKING:
    from typing import Callable

logger = logging.getLogger(__name__)

REFERENCE_STIFFNESS = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
REFERENCE_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 24.0


def reference_triangle() -> TriMesh:
    """
    The triangle (0,0), (1,0), (0,1) as a one-element mesh.
    """
    return TriMesh(
        nodes=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=np.array([[0, 1], [1, 2], [2, 0]]),
        corner_nodes=np.array([0, 1, 2]),
        name="reference",
    )


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise PropertyViolation(message)


def check_reference_matrices() -> None:
    mesh = reference_triangle()
    stiffness = assemble_stiffness(mesh, ScalarField.on(mesh, 1.0)).toarray()
    _expect(np.allclose(stiffness, REFERENCE_STIFFNESS, rtol=0, atol=1e-14), f"reference stiffness {stiffness}")
    consistent = assemble_mass(mesh).toarray()
    _expect(np.allclose(consistent, REFERENCE_MASS, rtol=0, atol=1e-14), f"reference mass {consistent}")
    lumped = assemble_mass(mesh, lumped=True).toarray()
    _expect(np.allclose(lumped, np.eye(3) / 6, rtol=0, atol=1e-14), f"reference lumped mass {lumped}")


def check_stiffness_structure() -> None:
    mesh = triangulate(make_domain("l_shape"), 0.125)
    rng = np.random.default_rng(7)
    matrix = assemble_stiffness(mesh, ScalarField.on(mesh, rng.uniform(0.5, 2.0, mesh.num_nodes))).matrix
    scale = abs(matrix).max()
    _expect(abs(matrix - matrix.T).max() <= 1e-14 * scale, "stiffness matrix is not symmetric")
    row_sums = np.abs(np.asarray(matrix.sum(axis=1)).reshape(-1))
    row_max = np.asarray(abs(matrix).max(axis=1).todense()).reshape(-1)
    _expect(bool(np.all(row_sums <= 1e-12 * row_max)), "stiffness row sums are not zero")
    x = rng.normal(size=mesh.num_nodes)
    _expect(float(x @ (matrix @ x)) >= -1e-12 * scale * float(x @ x), "stiffness with positive mu is not PSD")


def check_indefinite_coefficient() -> None:
    mesh = triangulate(make_domain("unit_square"), 0.25)
    mu = np.where(mesh.nodes[:, 0] < 0.5, 1.0, -4.0)
    stiffness = assemble_stiffness(mesh, ScalarField.on(mesh, mu))
    x = mesh.nodes[:, 0] - 0.5
    x = np.where(mesh.nodes[:, 0] > 0.5, 4.0 * x, 0.0)
    _expect(float(x @ apply(stiffness, x)) < 0, "sign-indefinite mu did not give a negative quadratic form")


def check_constant_reproduction() -> None:
    mesh = triangulate(make_domain("l_shape"), 0.125)
    mass = assemble_mass(mesh)
    system = mass + assemble_stiffness(mesh, ScalarField.on(mesh, 1.0)).scaled(0.1)
    x = solve_spd(system, apply(mass, np.ones(mesh.num_nodes)), tol=1e-12)
    _expect(np.allclose(x, 1.0, rtol=0, atol=1e-9), "implicit step does not reproduce constants")


def check_semigroup_positivity(samples: int = 1000) -> None:
    mesh = triangulate(make_domain("unit_square"), 0.125, require_nonobtuse=True)
    rng = np.random.default_rng(11)
    for _ in range(samples):
        mu = ScalarField.on(mesh, rng.uniform(0.5, 2.0, mesh.num_nodes))
        x = rng.uniform(0.0, 1.0, mesh.num_nodes) * (rng.uniform(size=mesh.num_nodes) < 0.3)
        out = implicit_euler_step(mesh, mu, 0.01, x, lumped=True, tol=1e-13)
        _expect(out.min() >= -1e-12, f"implicit Euler step produced {out.min()}")
        _expect(np.abs(out).max() <= np.abs(x).max() + 1e-12, "implicit Euler step is not an L-inf contraction")


def check_cutoff_shape() -> None:
    cutoff = Cutoff.from_level(5.0)
    inner = np.linspace(-5.0, 5.0, 101)
    _expect(bool(np.array_equal(eval_cutoff(cutoff, inner), inner)), "cut-off is not the identity on [-M, M]")
    _expect(eval_cutoff(cutoff, -100.0) == -6.0 and eval_cutoff(cutoff, 6.0) == 6.0, "cut-off does not saturate")
    values = eval_cutoff(cutoff, np.linspace(-10.0, 10.0, 2001))
    _expect(bool(np.all(np.diff(values) >= 0)), "cut-off is not monotone")
    _expect(float(np.abs(values).max()) <= 6.0, "cut-off exceeds M + 1")


def check_enzyme_balance() -> None:
    rng = np.random.default_rng(3)
    network = ReactionNetwork.full_keller_segel(KineticParams(*rng.uniform(0.1, 3.0, 3), 1.0, 0.0))
    v, p, w = rng.uniform(-5.0, 5.0, (3, 1000))
    _, _, enzyme, complex_ = eval_reactions(network, 0.0, v, p, w)
    _expect(bool(np.all(np.abs(enzyme + complex_) <= 1e-14 * (np.abs(enzyme) + 1))), "R3 + R4 does not vanish")


def check_printed_kinetics() -> None:
    network = ReactionNetwork.full_keller_segel(KineticParams(1.0, 2.0, 0.0, 0.0, 0.0))
    values = eval_reactions(network, 0.0, 1.0, 4.0, 3.0)
    _expect(values[1] == 2.0, f"R2(0, 1, 4, 3) = {values[1]}, expected 2")


def check_default_quasipositivity() -> None:
    network = ReactionNetwork.full_keller_segel(KineticParams(1.0, 1.0, 1.0, 1.0, 1.0))
    report = check_quasipositivity(network, ((0.0, 2.0),) * 4, samples=6)
    _expect(report.ok, f"full network is not quasipositive: {report.witness}")


def _conservation_run(network: ReactionNetwork, u0: float) -> tuple[TriMesh, SimState, SimState]:
    mesh = triangulate(make_domain("l_shape"), 0.125)
    bump = np.exp(-np.sum((mesh.nodes - 0.25) ** 2, axis=1) / 0.01)
    initial = SimState.from_arrays(mesh, 0.0, u0 + bump, bump, 0.5 + bump, 0.2 * bump)
    config = StepConfig(tau0=1e-3, t_end=0.02, solver_tol=1e-12, adapt="none")
    outcome = run(mesh, initial, config, CoefficientPair.classical(1.0), network)
    _expect(outcome.reason.value == "reached_t_end", f"conservation run ended with {outcome.reason.value}")
    return mesh, initial, outcome.final_state


def check_density_conservation() -> None:
    network = ReactionNetwork.full_keller_segel(KineticParams(1.0, 1.0, 1.0, 1.0, 0.5))
    mesh, initial, final = _conservation_run(network, 1.0)
    before, after = total_mass(initial.u, mesh), total_mass(final.u, mesh)
    _expect(abs(after - before) <= 1e-8 * abs(before), f"mass of u drifted from {before} to {after}")


def check_enzyme_conservation() -> None:
    network = ReactionNetwork.full_keller_segel(KineticParams(1.0, 1.0, 1.0, 0.0, 0.0))
    mesh, initial, final = _conservation_run(network, 0.0)
    before = total_mass(initial.p, mesh) + total_mass(initial.w, mesh)
    after = total_mass(final.p, mesh) + total_mass(final.w, mesh)
    _expect(abs(after - before) <= 1e-8 * abs(before), f"mass of p + w drifted from {before} to {after}")


SUITES: dict[str, list[Callable[[], None]]] = {
    "operators": [
        check_reference_matrices,
        check_stiffness_structure,
        check_indefinite_coefficient,
        check_constant_reproduction,
        check_semigroup_positivity,
    ],
    "reactions": [
        check_cutoff_shape,
        check_enzyme_balance,
        check_printed_kinetics,
        check_default_quasipositivity,
    ],
    "conservation": [
        check_density_conservation,
        check_enzyme_conservation,
    ],
}


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    message: str = ""


def run_suite(name: str) -> list[CheckResult]:
    """
    Run one suite, or every suite for ``all``.
    """
    names = list(SUITES) if name == "all" else [name]
    results = []
    for suite in names:
        for check in SUITES[suite]:
            label = check.__name__.removeprefix("check_")
            try:
                check()
            except (PropertyViolation, KellerSegelError) as e:
                logger.debug("Check %s.%s failed: %s", suite, label, e)
                results.append(CheckResult(suite, label, False, str(e)))
            else:
                results.append(CheckResult(suite, label, True))
    return results
