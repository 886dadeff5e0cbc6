"""
Stepper Module - first-order IMEX time marching of the coupled (u, v, p, w) system.

One outer step solves the (v, p, w) subsystem with u frozen, then the quasilinear u equation with coefficients
lagged at the old density. Diffusion is implicit, reactions and the crossdiffusion flux are explicit, so every
linear system is symmetric positive definite.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from keller_segel.constants import (
    DEFAULT_DELTA,
    DEFAULT_SOLVER_TOL,
    STATE_MESH_ERROR,
    STEP_CONFIG_ERROR,
    TAU_GROWTH_FACTOR,
    UNDERFLOW_ERROR,
)
from keller_segel.diagnostics import make_record
from keller_segel.exceptions import (
    CoefficientError,
    ConfigurationError,
    DimensionError,
    ReactionEvaluationError,
    SolverError,
    StepUnderflowError,
)
from keller_segel.operators import (
    ScalarField,
    SparseOperator,
    apply,
    assemble_mass,
    assemble_stiffness,
    solve_spd,
)
from keller_segel.reactions import CoefficientPair, Cutoff, eval_coefficients, eval_reactions
from keller_segel.utils import relative_change, sup_norm

if TYPE_CHECKING:
    from typing import Callable

    from keller_segel.diagnostics import DiagRecord
    from keller_segel.mesh import TriMesh
    from keller_segel.reactions import ReactionNetwork

logger = logging.getLogger(__name__)


class AdaptMode(str, Enum):
    NONE = "none"
    HALVING = "halving"


class TerminationReason(str, Enum):
    REACHED_T_END = "reached_t_end"
    BLOWUP_DETECTED = "blowup_detected"
    STEP_UNDERFLOW = "step_underflow"
    SOLVER_FAILURE = "solver_failure"


@dataclass(frozen=True)
class StepConfig:
    """
    Time-stepping and termination parameters.

    :param max_relative_change: in halving mode, reject steps whose relative sup-norm update of any field exceeds
        this value
    :param parallel_vpw: solve the three (v, p, w) systems on a thread pool
    """

    tau0: float = 1e-3
    tau_min: float = 1e-8
    t_end: float = 1.0
    picard_iters: int = 0
    picard_tol: float = 1e-8
    blowup_linf: float = 1e6
    k_v: float = 1.0
    k_p: float = 1.0
    k_w: float = 1.0
    solver_tol: float = DEFAULT_SOLVER_TOL
    adapt: AdaptMode = AdaptMode.HALVING
    lumped_mass: bool = True
    delta: float = DEFAULT_DELTA
    use_cutoff: bool = True
    max_relative_change: float | None = None
    parallel_vpw: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "adapt", AdaptMode(self.adapt))
        checks = [
            (0 < self.tau_min <= self.tau0, f"expected 0 < tau_min <= tau0, received {self.tau_min}, {self.tau0}"),
            (math.isfinite(self.t_end) and self.t_end >= 0, f"expected t_end >= 0, received {self.t_end}"),
            (self.picard_iters >= 0, f"expected picard_iters >= 0, received {self.picard_iters}"),
            (self.picard_tol > 0, f"expected picard_tol > 0, received {self.picard_tol}"),
            (self.blowup_linf > 0, f"expected blowup_linf > 0, received {self.blowup_linf}"),
            (min(self.diffusion) > 0, f"diffusion constants must be positive, received {self.diffusion}"),
            (0 < self.solver_tol < 1, f"expected solver_tol in (0, 1), received {self.solver_tol}"),
            (self.delta > 0, f"expected delta > 0, received {self.delta}"),
            (
                self.max_relative_change is None or self.max_relative_change > 0,
                f"expected max_relative_change > 0, received {self.max_relative_change}",
            ),
        ]
        for ok, reason in checks:
            if not ok:
                raise ConfigurationError(STEP_CONFIG_ERROR.format(reason=reason))

    @property
    def diffusion(self) -> tuple[float, float, float]:
        return self.k_v, self.k_p, self.k_w


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    u: ScalarField
    v: ScalarField
    p: ScalarField
    w: ScalarField

    def __post_init__(self) -> None:
        mesh_ids = {f.mesh_id for f in self.fields}
        if len(mesh_ids) != 1:
            raise DimensionError(STATE_MESH_ERROR.format(mesh_ids=", ".join(sorted(mesh_ids))))

    @classmethod
    def from_arrays(
        cls, mesh: TriMesh, t: float, u: np.ndarray, v: np.ndarray, p: np.ndarray, w: np.ndarray
    ) -> SimState:
        return cls(t, *(ScalarField.on(mesh, values) for values in (u, v, p, w)))

    @property
    def fields(self) -> tuple[ScalarField, ScalarField, ScalarField, ScalarField]:
        return self.u, self.v, self.p, self.w

    @property
    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(f.values for f in self.fields)

    @property
    def mesh_id(self) -> str:
        return self.u.mesh_id

    @property
    def is_finite(self) -> bool:
        return all(f.is_finite for f in self.fields)


@dataclass
class RunOutcome:
    reason: TerminationReason
    final_state: SimState
    series: list[DiagRecord] = field(default_factory=list)
    steps: int = 0
    halvings: int = 0
    picard_failures: int = 0
    message: str = ""


class Stepper:
    """
    Holds the operators that do not change between steps: the mass matrix, the unit-coefficient stiffness and
    the (v, p, w) system matrices per step size.
    """

    def __init__(
        self, mesh: TriMesh, config: StepConfig, coefficients: CoefficientPair, network: ReactionNetwork
    ) -> None:
        self.mesh = mesh
        self.config = config
        self.coefficients = coefficients
        self.network = network
        self.mass = assemble_mass(mesh, lumped=config.lumped_mass)
        self.unit_stiffness = assemble_stiffness(mesh, ScalarField.on(mesh, 1.0))
        self._systems: dict[tuple[float, float], SparseOperator] = {}

    def _diffusion_system(self, tau: float, k: float) -> SparseOperator:
        system = self._systems.get((tau, k))
        if system is None:
            if len(self._systems) > 32:
                self._systems.clear()
            system = self.mass + self.unit_stiffness.scaled(tau * k)
            self._systems[(tau, k)] = system
        return system

    def _solve_species(self, tau: float, k: float, old: np.ndarray, rate: np.ndarray) -> np.ndarray:
        return solve_spd(
            self._diffusion_system(tau, k), apply(self.mass, old + tau * rate), tol=self.config.solver_tol
        )

    def step_vpw(self, state: SimState, u_stage: ScalarField, tau: float) -> tuple[ScalarField, ...]:
        """
        (M + tau k K1) x_new = M (x_old + tau R(u_stage, v_old, p_old, w_old)) for x in v, p, w.
        """
        u_stage.check_mesh(self.mesh)
        _, *rates = eval_reactions(self.network, u_stage.values, *state.arrays[1:])
        jobs = list(zip(self.config.diffusion, state.arrays[1:], rates))
        if self.config.parallel_vpw:
            with ThreadPoolExecutor(max_workers=3) as executor:
                results = list(executor.map(lambda job: self._solve_species(tau, *job), jobs))
        else:
            results = [self._solve_species(tau, *job) for job in jobs]
        return tuple(state.v.with_values(values) for values in results)

    def step_u(
        self,
        state: SimState,
        v_stage: ScalarField,
        tau: float,
        p_stage: ScalarField | None = None,
        w_stage: ScalarField | None = None,
    ) -> ScalarField:
        """
        (M + tau K(kappa)) u_new = M (u_old + tau R1) - tau K(sigma) v_stage, coefficients at (u_old, v_stage).
        """
        p_stage = state.p if p_stage is None else p_stage
        w_stage = state.w if w_stage is None else w_stage
        u_old = state.u.values
        kappa, sigma = eval_coefficients(self.coefficients, u_old, v_stage.values)
        rate = eval_reactions(self.network, u_old, v_stage.values, p_stage.values, w_stage.values)[0]
        system = self.mass + assemble_stiffness(self.mesh, state.u.with_values(kappa)).scaled(tau)
        flux = apply(assemble_stiffness(self.mesh, state.u.with_values(sigma)), v_stage.values)
        rhs = apply(self.mass, u_old + tau * rate) - tau * flux
        return state.u.with_values(solve_spd(system, rhs, tol=self.config.solver_tol))

    def advance(self, state: SimState, tau: float) -> tuple[SimState, bool]:
        """
        One outer step plus up to picard_iters fixed-point sweeps; returns the new state and whether the sweeps
        converged (always True without sweeps).
        """
        v, p, w = self.step_vpw(state, state.u, tau)
        u = self.step_u(state, v, tau, p, w)
        converged = self.config.picard_iters == 0
        for sweep in range(self.config.picard_iters):
            v_next, p_next, w_next = self.step_vpw(state, u, tau)
            u_next = self.step_u(state, v_next, tau, p_next, w_next)
            change = relative_change(
                (f.values for f in (u, v, p, w)), (f.values for f in (u_next, v_next, p_next, w_next))
            )
            u, v, p, w = u_next, v_next, p_next, w_next
            if change <= self.config.picard_tol:
                converged = True
                break
            logger.debug("Picard sweep %d: relative update %.3e", sweep + 1, change)
        return SimState(state.t + tau, u, v, p, w), converged


def _attach_cutoff(network: ReactionNetwork, initial: SimState, config: StepConfig) -> tuple[ReactionNetwork, Cutoff]:
    if network.cutoff is not None:
        return network, network.cutoff
    cutoff = Cutoff.from_initial_data(*initial.arrays[1:], delta=config.delta)
    return (network.with_cutoff(cutoff) if config.use_cutoff else network), cutoff


def step_vpw(
    mesh: TriMesh,
    state: SimState,
    u_stage: ScalarField,
    tau: float,
    config: StepConfig,
    network: ReactionNetwork,
    coefficients: CoefficientPair | None = None,
) -> tuple[ScalarField, ...]:
    return Stepper(mesh, config, coefficients or CoefficientPair.pure_diffusion(), network).step_vpw(
        state, u_stage, tau
    )


def step_u(
    mesh: TriMesh,
    state: SimState,
    v_stage: ScalarField,
    tau: float,
    config: StepConfig,
    coefficients: CoefficientPair,
    network: ReactionNetwork,
) -> ScalarField:
    return Stepper(mesh, config, coefficients, network).step_u(state, v_stage, tau)


def advance(
    mesh: TriMesh,
    state: SimState,
    tau: float,
    config: StepConfig,
    coefficients: CoefficientPair,
    network: ReactionNetwork,
) -> SimState:
    return Stepper(mesh, config, coefficients, network).advance(state, tau)[0]


def adapt_timestep(step_ok: bool, tau: float, config: StepConfig) -> float:
    """
    Halve after a failed step, grow by 20% (capped at tau0) after a successful one.

    :raises: StepUnderflowError when halving would go below tau_min
    """
    if step_ok:
        return min(tau * TAU_GROWTH_FACTOR, config.tau0)
    halved = tau / 2
    if halved < config.tau_min:
        raise StepUnderflowError(UNDERFLOW_ERROR.format(tau=tau, tau_min=config.tau_min))
    return halved


def run(
    mesh: TriMesh,
    initial: SimState,
    config: StepConfig,
    coefficients: CoefficientPair,
    network: ReactionNetwork,
    on_record: Callable[[DiagRecord, SimState], None] | None = None,
    corner: tuple[float, float] | None = None,
    corner_radius: float = 0.1,
) -> RunOutcome:
    """
    March from ``initial`` to ``config.t_end`` or until a termination trigger fires.

    A diagnostics record is produced for the initial state and after every accepted step. Failures are encoded
    in the returned outcome, never raised.
    """
    for f in initial.fields:
        f.check_mesh(mesh)
    network, cutoff = _attach_cutoff(network, initial, config)
    stepper = Stepper(mesh, config, coefficients, network)
    if corner is None:
        corner = tuple(mesh.nodes[mesh.corner_nodes[0]]) if len(mesh.corner_nodes) else (0.0, 0.0)

    outcome = RunOutcome(TerminationReason.REACHED_T_END, initial)
    clamp_reported = False

    def emit(record: DiagRecord, state: SimState) -> None:
        nonlocal clamp_reported
        outcome.series.append(record)
        if record.clamp_active and not clamp_reported:
            clamp_reported = True
            logger.warning("Cut-off became active at t=%.6g (margin %.3e)", record.t, record.margin)
        if on_record is not None:
            on_record(record, state)

    state = initial
    tau = config.tau0
    emit(make_record(0, state, 0.0, mesh, cutoff, corner, corner_radius), state)
    while config.t_end - state.t > config.tau_min:
        step = min(tau, config.t_end - state.t)
        failure = ""
        try:
            candidate, converged = stepper.advance(state, step)
        except CoefficientError as e:
            outcome.reason, outcome.message = TerminationReason.SOLVER_FAILURE, str(e)
            break
        except (SolverError, ReactionEvaluationError) as e:
            failure = str(e)
        else:
            if not candidate.is_finite:
                failure = "non-finite field values"
            elif (
                config.adapt is AdaptMode.HALVING
                and config.max_relative_change is not None
                and relative_change(state.arrays, candidate.arrays) > config.max_relative_change
            ):
                failure = "relative change above max_relative_change"
        if failure:
            if config.adapt is AdaptMode.NONE:
                blowup = failure == "non-finite field values"
                outcome.reason = TerminationReason.BLOWUP_DETECTED if blowup else TerminationReason.SOLVER_FAILURE
                outcome.message = failure
                break
            outcome.halvings += 1
            try:
                tau = adapt_timestep(False, step, config)
            except StepUnderflowError as e:
                outcome.reason, outcome.message = TerminationReason.STEP_UNDERFLOW, str(e)
                break
            logger.info("Rejected step at t=%.6g (%s), retrying with tau=%.3e", state.t, failure, tau)
            continue

        state = candidate
        outcome.steps += 1
        if not converged:
            outcome.picard_failures += 1
        emit(make_record(outcome.steps, state, step, mesh, cutoff, corner, corner_radius, converged), state)
        if sup_norm(state.u.values) > config.blowup_linf:
            outcome.reason = TerminationReason.BLOWUP_DETECTED
            outcome.message = f"|u|_inf exceeded {config.blowup_linf}"
            break
        if config.adapt is AdaptMode.HALVING:
            tau = adapt_timestep(True, tau, config)

    outcome.final_state = state
    logger.info(
        "Run finished: %s at t=%.6g after %d steps (%d rejected)",
        outcome.reason.value,
        state.t,
        outcome.steps,
        outcome.halvings,
    )
    return outcome