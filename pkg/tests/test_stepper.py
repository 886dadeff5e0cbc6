from __future__ import annotations

import numpy as np
import pytest

from keller_segel.diagnostics import total_mass
from keller_segel.exceptions import ConfigurationError, DimensionError, StepUnderflowError
from keller_segel.geometry import make_domain
from keller_segel.mesh import triangulate
from keller_segel.operators import ScalarField
from keller_segel.reactions import CoefficientPair, KineticParams, ReactionNetwork
from keller_segel.stepper import (
    AdaptMode,
    SimState,
    StepConfig,
    Stepper,
    TerminationReason,
    adapt_timestep,
    advance,
    run,
    step_u,
    step_vpw,
)
from tests.utils import bump, make_state, two_triangle_mesh

square = triangulate(make_domain("unit_square"), 0.125)
full_network = ReactionNetwork.full_keller_segel(KineticParams(1.0, 0.5, 0.5))


def test_step_vpw_keeps_constants_without_reactions():
    state = make_state(square, u=1.0, v=2.0, p=0.5, w=0.25)
    v, p, w = step_vpw(square, state, state.u, 0.01, StepConfig(), ReactionNetwork.zero())
    assert np.allclose(v.values, 2.0, rtol=0, atol=1e-8)
    assert np.allclose(p.values, 0.5, rtol=0, atol=1e-8)
    assert np.allclose(w.values, 0.25, rtol=0, atol=1e-8)


def test_step_vpw_of_zero_state_is_zero():
    state = make_state(square)
    for field in step_vpw(square, state, state.u, 0.01, StepConfig(), full_network):
        assert not field.values.any()


def test_step_vpw_rejects_stage_from_other_mesh():
    state = make_state(square)
    other = two_triangle_mesh()
    with pytest.raises(DimensionError):
        step_vpw(square, state, ScalarField.on(other, 0.0), 0.01, StepConfig(), full_network)


def test_step_u_keeps_constant_density():
    state = make_state(square, u=3.0, v=1.5)
    u = step_u(square, state, state.v, 0.01, StepConfig(), CoefficientPair.classical(5.0), ReactionNetwork.zero())
    assert np.allclose(u.values, 3.0, rtol=0, atol=1e-8)


@pytest.mark.parametrize("lumped_mass", [True, False])
def test_step_u_conserves_mass(lumped_mass):
    config = StepConfig(lumped_mass=lumped_mass, solver_tol=1e-13)
    state = make_state(square, u=bump(square, (0.3, 0.4), 0.25), v=5.0 * bump(square))
    u = step_u(square, state, state.v, 0.01, config, CoefficientPair.classical(10.0), ReactionNetwork.zero())
    assert total_mass(u, square) == pytest.approx(total_mass(state.u, square), rel=1e-9)


def test_attraction_raises_density_at_attractant_peak():
    state = make_state(square, u=bump(square), v=bump(square, width=0.3))
    peak = int(np.argmin(np.linalg.norm(square.nodes - 0.5, axis=1)))
    config = StepConfig()
    attracted = step_u(square, state, state.v, 1e-3, config, CoefficientPair.classical(20.0), ReactionNetwork.zero())
    diffused = step_u(square, state, state.v, 1e-3, config, CoefficientPair.classical(0.0), ReactionNetwork.zero())
    assert attracted.values[peak] > diffused.values[peak]


def test_advance_sharpens_density_peak():
    # chi |lap v| at the peak is far above the diffusive decay of the bump
    state = make_state(square, u=bump(square), v=5.0 * bump(square, width=0.3))
    new = advance(square, state, 1e-4, StepConfig(), CoefficientPair.classical(20.0), ReactionNetwork.zero())
    assert new.u.values.max() > state.u.values.max()


def test_picard_gap_shrinks_with_timestep():
    state = make_state(square, u=bump(square), v=0.5, p=1.0, w=0.2)
    coefficients = CoefficientPair.classical(1.0)
    network = ReactionNetwork.full_keller_segel(KineticParams(1.0, 0.5, 0.5, f=1.0))
    gaps = []
    for tau in (2e-3, 1e-3, 5e-4):
        lagged, _ = Stepper(square, StepConfig(), coefficients, network).advance(state, tau)
        swept, _ = Stepper(square, StepConfig(picard_iters=3), coefficients, network).advance(state, tau)
        gaps.append(np.abs(swept.u.values - lagged.u.values).max())
    assert all(gap > 0 for gap in gaps)
    assert gaps[0] / gaps[1] >= 1.5
    assert gaps[1] / gaps[2] >= 1.5


def test_advance_zero_state():
    state = make_state(square, t=0.25)
    new = advance(square, state, 0.01, StepConfig(), CoefficientPair.classical(1.0), full_network)
    assert new.t == pytest.approx(0.26)
    assert all(not values.any() for values in new.arrays)


def test_picard_sweeps():
    state = make_state(square, u=bump(square), v=0.5, p=1.0, w=0.2)
    coefficients = CoefficientPair.classical(1.0)
    # attractant production couples v back to the density stage
    network = ReactionNetwork.full_keller_segel(KineticParams(1.0, 0.5, 0.5, f=1.0))
    plain, converged = Stepper(square, StepConfig(), coefficients, network).advance(state, 1e-3)
    assert converged
    swept, converged = Stepper(square, StepConfig(picard_iters=5), coefficients, network).advance(state, 1e-3)
    assert converged
    assert np.allclose(swept.u.values, plain.u.values, rtol=0, atol=1e-3)
    _, converged = Stepper(square, StepConfig(picard_iters=1, picard_tol=1e-15), coefficients, network).advance(
        state, 1e-3
    )
    assert not converged


def test_adapt_timestep():
    config = StepConfig(tau0=1e-3, tau_min=1e-6)
    assert adapt_timestep(True, 1e-3, config) == 1e-3
    assert adapt_timestep(True, 5e-4, config) == pytest.approx(6e-4)
    assert adapt_timestep(False, 1e-3, config) == 5e-4


def test_adapt_timestep_underflow():
    config = StepConfig(tau0=1e-3, tau_min=1e-6)
    tau = config.tau0
    for _ in range(9):
        tau = adapt_timestep(False, tau, config)
    assert tau == pytest.approx(1e-3 / 512)
    with pytest.raises(StepUnderflowError, match="would drop below tau_min"):
        adapt_timestep(False, tau, config)


@pytest.mark.parametrize(
    "kwargs,reason",
    [
        ({"tau0": 1e-3, "tau_min": 1e-2}, "tau_min <= tau0"),
        ({"t_end": -1.0}, "t_end >= 0"),
        ({"picard_iters": -1}, "picard_iters >= 0"),
        ({"k_p": 0.0}, "diffusion constants must be positive"),
        ({"solver_tol": 1.0}, r"solver_tol in \(0, 1\)"),
        ({"max_relative_change": 0.0}, "max_relative_change > 0"),
    ],
)
def test_step_config_validation(kwargs, reason):
    with pytest.raises(ConfigurationError, match=reason):
        StepConfig(**kwargs)


def test_step_config_adapt_from_string():
    assert StepConfig(adapt="none").adapt is AdaptMode.NONE


def test_state_fields_share_mesh():
    with pytest.raises(DimensionError, match="State fields live on different meshes"):
        SimState(0.0, ScalarField.on(square, 0.0), *(ScalarField.on(two_triangle_mesh(), 0.0) for _ in range(3)))


def test_run_with_zero_end_time():
    state = make_state(square, u=bump(square))
    outcome = run(square, state, StepConfig(t_end=0.0), CoefficientPair.classical(1.0), full_network)
    assert outcome.reason is TerminationReason.REACHED_T_END
    assert outcome.steps == 0
    assert len(outcome.series) == 1
    assert outcome.final_state is state


def test_heat_decay():
    config = StepConfig(t_end=0.05, tau0=0.005, solver_tol=1e-13)
    state = make_state(square, u=2.0 * bump(square))
    records = []
    outcome = run(
        square,
        state,
        config,
        CoefficientPair.pure_diffusion(),
        ReactionNetwork.zero(),
        on_record=lambda record, _: records.append(record),
    )
    assert outcome.reason is TerminationReason.REACHED_T_END
    assert outcome.final_state.t == pytest.approx(0.05, abs=1e-12)
    assert records == outcome.series
    assert [record.step for record in records] == list(range(outcome.steps + 1))
    maxima = [record.max_u for record in records]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(maxima, maxima[1:]))
    masses = [record.mass_u for record in records]
    assert max(masses) - min(masses) <= 1e-9 * masses[0]
    assert outcome.halvings == 0


def test_run_detects_blowup():
    mesh = triangulate(make_domain("unit_square"), 0.5)
    network = ReactionNetwork.custom([lambda u, v, p, w: u**2, 0.0, 0.0, 0.0])
    config = StepConfig(t_end=2.0, tau0=0.005, tau_min=1e-7, blowup_linf=50.0, max_relative_change=0.1)
    outcome = run(mesh, make_state(mesh, u=1.0), config, CoefficientPair.pure_diffusion(), network)
    assert outcome.reason is TerminationReason.BLOWUP_DETECTED
    # the exact solution 1 / (1 - t) blows up at t = 1
    assert 0.9 <= outcome.final_state.t <= 1.05
    assert outcome.halvings > 0
    assert outcome.series[-1].max_u > 50.0


def test_run_without_adaptation_stops_on_solver_failure():
    mesh = triangulate(make_domain("unit_square"), 0.5)
    network = ReactionNetwork.custom([lambda u, v, p, w: np.log(u), 0.0, 0.0, 0.0])
    config = StepConfig(t_end=0.1, tau0=0.01, adapt=AdaptMode.NONE)
    outcome = run(mesh, make_state(mesh, u=0.0), config, CoefficientPair.pure_diffusion(), network)
    assert outcome.reason is TerminationReason.SOLVER_FAILURE
    assert "non-finite" in outcome.message
    assert outcome.steps == 0


def test_run_underflow():
    mesh = triangulate(make_domain("unit_square"), 0.5)
    network = ReactionNetwork.custom([lambda u, v, p, w: np.log(u), 0.0, 0.0, 0.0])
    config = StepConfig(t_end=0.1, tau0=0.01, tau_min=1e-3)
    outcome = run(mesh, make_state(mesh, u=0.0), config, CoefficientPair.pure_diffusion(), network)
    assert outcome.reason is TerminationReason.STEP_UNDERFLOW
    # 0.01 -> 0.005 -> 0.0025 -> 0.00125, the next halving is below tau_min
    assert outcome.halvings == 4


def test_run_reports_coefficient_floor_as_solver_failure():
    mesh = triangulate(make_domain("unit_square"), 0.5)
    coefficients = CoefficientPair.custom(lambda u, v: 1.0 - u, 0.0, kappa_floor=0.1)
    outcome = run(mesh, make_state(mesh, u=2.0), StepConfig(t_end=0.1), coefficients, ReactionNetwork.zero())
    assert outcome.reason is TerminationReason.SOLVER_FAILURE
    assert "below the floor" in outcome.message


def test_parallel_vpw_matches_sequential():
    state = make_state(square, u=bump(square), v=bump(square, (0.2, 0.3)), p=1.0, w=0.1)
    results = [
        Stepper(square, StepConfig(parallel_vpw=parallel), CoefficientPair.classical(2.0), full_network).advance(
            state, 0.005
        )[0]
        for parallel in (False, True)
    ]
    for sequential, parallel in zip(*(result.arrays for result in results)):
        assert np.array_equal(sequential, parallel)


def test_run_is_deterministic():
    state = make_state(square, u=bump(square), v=0.2, p=1.0)
    config = StepConfig(t_end=0.02, tau0=0.005)
    first, second = (run(square, state, config, CoefficientPair.classical(3.0), full_network) for _ in range(2))
    assert first.series == second.series
    for a, b in zip(first.final_state.arrays, second.final_state.arrays):
        assert np.array_equal(a, b)
