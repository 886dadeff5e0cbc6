"""
Geometry Module - polygonal Lipschitz domains and their validation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from keller_segel.constants import (
    ANGLE_ERROR,
    ANGLE_TOLERANCE,
    DEGENERATE_POLYGON_ERROR,
    ORIENTATION_ERROR,
    SELF_INTERSECTION_ERROR,
    TOO_FEW_VERTICES_ERROR,
    UNKNOWN_PRESET_ERROR,
)
from keller_segel.exceptions import DomainValidationError

if TYPE_CHECKING:
    from typing import Sequence

    Point = tuple[float, float]

logger = logging.getLogger(__name__)

DOMAIN_PRESETS: dict[str, tuple[tuple[float, float], ...]] = {
    "unit_square": ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)),
    "l_shape": ((0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0)),
}


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def _orientation(a: Point, b: Point, c: Point) -> float:
    return _cross(b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1])


def _on_segment(a: Point, b: Point, c: Point, tol: float) -> bool:
    """c is collinear with ab; check it lies within the bounding box of ab."""
    return (
        min(a[0], b[0]) - tol <= c[0] <= max(a[0], b[0]) + tol
        and min(a[1], b[1]) - tol <= c[1] <= max(a[1], b[1]) + tol
    )


def segments_intersect(a: Point, b: Point, c: Point, d: Point, tol: float = 1e-12) -> bool:
    """
    Closed-segment intersection test, touching counts as intersecting.
    """
    d1 = _orientation(c, d, a)
    d2 = _orientation(c, d, b)
    d3 = _orientation(a, b, c)
    d4 = _orientation(a, b, d)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True
    return (
        (abs(d1) <= tol and _on_segment(c, d, a, tol))
        or (abs(d2) <= tol and _on_segment(c, d, b, tol))
        or (abs(d3) <= tol and _on_segment(a, b, c, tol))
        or (abs(d4) <= tol and _on_segment(a, b, d, tol))
    )


def signed_area(vertices: Sequence[Point]) -> float:
    n = len(vertices)
    return 0.5 * sum(
        vertices[i][0] * vertices[(i + 1) % n][1] - vertices[(i + 1) % n][0] * vertices[i][1] for i in range(n)
    )


@dataclass(frozen=True)
class PolygonalDomain:
    """
    A bounded, simple, counterclockwise polygon with interior angles strictly inside (0, 2*pi).

    Vertices are dimensionless 2D points; edge k runs from vertex k to vertex k+1 (cyclically), so the outer
    normal of every edge points to its right.
    """

    vertices: tuple[tuple[float, float], ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple((float(x), float(y)) for x, y in self.vertices))
        self._validate()

    def _validate(self) -> None:
        vertices = self.vertices
        n = len(vertices)
        if n < 3:
            raise DomainValidationError(TOO_FEW_VERTICES_ERROR.format(count=n))
        scale = max(max(abs(x), abs(y)) for x, y in vertices) or 1.0
        tol = 1e-12 * scale * scale
        for k in range(n):
            a, b = vertices[k], vertices[(k + 1) % n]
            if math.hypot(b[0] - a[0], b[1] - a[1]) <= 1e-14 * scale:
                raise DomainValidationError(
                    DEGENERATE_POLYGON_ERROR.format(first=k, second=(k + 1) % n, reason="meet at coincident vertices")
                )
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n], tol):
                    raise DomainValidationError(SELF_INTERSECTION_ERROR.format(first=i, second=j))
        area = signed_area(vertices)
        if area <= 0:
            raise DomainValidationError(ORIENTATION_ERROR.format(name=self.name, area=area))
        for index, angle in enumerate(self.interior_angles):
            if angle <= ANGLE_TOLERANCE or angle >= 2 * math.pi - ANGLE_TOLERANCE:
                raise DomainValidationError(ANGLE_ERROR.format(index=index, angle=angle))

    @cached_property
    def interior_angles(self) -> np.ndarray:
        """
        Interior angle at every vertex, in radians.
        """
        vertices = np.asarray(self.vertices)
        previous = np.roll(vertices, 1, axis=0) - vertices
        following = np.roll(vertices, -1, axis=0) - vertices
        cross = following[:, 0] * previous[:, 1] - following[:, 1] * previous[:, 0]
        dot = np.einsum("ij,ij->i", following, previous)
        return np.mod(np.arctan2(cross, dot), 2 * math.pi)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def edges(self) -> list[tuple[int, int]]:
        n = len(self.vertices)
        return [(k, (k + 1) % n) for k in range(n)]

    @property
    def reentrant_corners(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.interior_angles > math.pi + ANGLE_TOLERANCE)]

    @property
    def smallest_angle_vertex(self) -> int:
        return int(np.argmin(self.interior_angles))

    @property
    def is_rectilinear(self) -> bool:
        """
        True when every edge is parallel to a coordinate axis.
        """
        vertices = self.vertices
        return all(
            abs(vertices[a][0] - vertices[b][0]) <= 1e-14 or abs(vertices[a][1] - vertices[b][1]) <= 1e-14
            for a, b in self.edges
        )

    def contains(self, points: np.ndarray) -> np.ndarray:
        """
        Even-odd ray casting; points exactly on the boundary may fall on either side.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = points[:, 0], points[:, 1]
        inside = np.zeros(len(points), dtype=bool)
        for a, b in self.edges:
            (x0, y0), (x1, y1) = self.vertices[a], self.vertices[b]
            crosses = (y0 > y) != (y1 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_hit = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= crosses & (x < x_hit)
        return inside


def make_domain(preset: str = "unit_square", vertices: Sequence[Sequence[float]] | None = None) -> PolygonalDomain:
    """
    Build one of the preset domains, or validate a custom vertex list.

    Clockwise custom lists are reoriented counterclockwise before validation.
    """
    if preset == "custom":
        if vertices is None:
            raise DomainValidationError(TOO_FEW_VERTICES_ERROR.format(count=0))
        points = [(float(x), float(y)) for x, y in vertices]
        if len(points) >= 3 and signed_area(points) < 0:
            logger.debug("Reorienting clockwise custom polygon")
            points = points[::-1]
        return PolygonalDomain(tuple(points), name="custom")
    if preset not in DOMAIN_PRESETS:
        raise DomainValidationError(
            UNKNOWN_PRESET_ERROR.format(kind="domain", preset=preset, available=", ".join([*DOMAIN_PRESETS, "custom"]))
        )
    return PolygonalDomain(DOMAIN_PRESETS[preset], name=preset)

