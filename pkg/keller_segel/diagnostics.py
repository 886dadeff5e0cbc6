"""
Diagnostics Module - per-step observables: masses, extrema, corner concentration and the clamp margin.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from typing import TYPE_CHECKING

import numpy as np

from keller_segel.constants import TIMESERIES_COLUMNS
from keller_segel.utils import sup_norm

if TYPE_CHECKING:
    from keller_segel.geometry import PolygonalDomain
    from keller_segel.mesh import TriMesh
    from keller_segel.operators import ScalarField
    from keller_segel.reactions import Cutoff
    from keller_segel.stepper import SimState


@dataclass(frozen=True)
class DiagRecord:
    """
    One row of the time series, fields in column order.
    """

    step: int
    t: float
    tau: float
    mass_u: float
    mass_p_plus_w: float
    min_u: float
    max_u: float
    min_v: float
    max_v: float
    min_p: float
    max_p: float
    min_w: float
    max_w: float
    corner_fraction: float
    margin: float
    clamp_active: bool
    picard_converged: bool

    def as_row(self) -> tuple:
        return astuple(self)

    def as_dict(self) -> dict[str, float | int | bool]:
        return dict(zip(TIMESERIES_COLUMNS, self.as_row()))


def total_mass(f: ScalarField, mesh: TriMesh) -> float:
    """
    Exact integral of the P1 interpolant, 1^T M f; the row sums of the consistent mass are the lumped weights.
    """
    f.check_mesh(mesh)
    return float(mesh.lumped_weights @ f.values)


def field_extrema(f: ScalarField) -> tuple[float, float]:
    if len(f.values) == 0:
        return 0.0, 0.0
    return float(np.min(f.values)), float(np.max(f.values))


def corner_mass_fraction(f: ScalarField, mesh: TriMesh, corner: tuple[float, float], radius: float) -> float:
    """
    Share of the lumped integral of |f| carried by nodes within ``radius`` of ``corner``.
    """
    f.check_mesh(mesh)
    weights = mesh.lumped_weights * np.abs(f.values)
    total = float(weights.sum())
    if total == 0.0 or not math.isfinite(total):
        return 0.0
    inside = np.linalg.norm(mesh.nodes - np.asarray(corner, dtype=float), axis=1) <= radius
    return float(min(max(weights[inside].sum() / total, 0.0), 1.0))


def boundedness_margin(state: SimState, cutoff: Cutoff) -> float:
    """
    M - max(|v|_inf, |p|_inf, |w|_inf); negative means the clamp is active somewhere.
    """
    current = max(sup_norm(state.v.values), sup_norm(state.p.values), sup_norm(state.w.values))
    return cutoff.margin(current)


def critical_mass(domain: PolygonalDomain, chi: float) -> float:
    """
    Mass threshold 4 * theta_min / chi of the classical model at the sharpest corner.
    """
    return 4.0 * float(domain.interior_angles.min()) / chi


def select_corner(domain: PolygonalDomain, vertex: int | None = None) -> tuple[float, float]:
    if vertex is not None:
        return domain.vertices[vertex]
    reentrant = domain.reentrant_corners
    return domain.vertices[reentrant[0] if reentrant else domain.smallest_angle_vertex]


def make_record(
    step: int,
    state: SimState,
    tau: float,
    mesh: TriMesh,
    cutoff: Cutoff,
    corner: tuple[float, float],
    radius: float,
    picard_converged: bool = True,
) -> DiagRecord:
    extrema = [field_extrema(f) for f in state.fields]
    margin = boundedness_margin(state, cutoff)
    return DiagRecord(
        step,
        state.t,
        tau,
        total_mass(state.u, mesh),
        total_mass(state.p, mesh) + total_mass(state.w, mesh),
        *(value for pair in extrema for value in pair),
        corner_mass_fraction(state.u, mesh, corner, radius),
        margin,
        margin < 0,
        picard_converged,
    )
