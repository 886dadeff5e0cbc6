""" Keller-Segel Chemotaxis FEM """
from .config import RunConfig, dump_config, parse_config
from .diagnostics import DiagRecord, corner_mass_fraction, total_mass
from .geometry import PolygonalDomain, make_domain
from .mesh import Grading, TriMesh, load_mesh, save_mesh, triangulate
from .operators import ScalarField, assemble_mass, assemble_stiffness, solve_spd
from .reactions import CoefficientPair, Cutoff, KineticParams, ReactionNetwork, check_quasipositivity
from .stepper import RunOutcome, SimState, StepConfig, TerminationReason, run

__all__ = [
    "CoefficientPair",
    "Cutoff",
    "DiagRecord",
    "Grading",
    "KineticParams",
    "PolygonalDomain",
    "ReactionNetwork",
    "RunConfig",
    "RunOutcome",
    "ScalarField",
    "SimState",
    "StepConfig",
    "TerminationReason",
    "TriMesh",
    "assemble_mass",
    "assemble_stiffness",
    "check_quasipositivity",
    "corner_mass_fraction",
    "dump_config",
    "load_mesh",
    "make_domain",
    "parse_config",
    "run",
    "save_mesh",
    "solve_spd",
    "total_mass",
    "triangulate",
]
