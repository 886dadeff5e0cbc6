"""
Mesh Module - conforming triangulations of polygonal domains, refinement and the plain-text mesh format.
"""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import triangle

from keller_segel.constants import (
    BOUNDARY_MISMATCH_ERROR,
    EDGE_MULTIPLICITY_ERROR,
    GRADING_CORNER_ERROR,
    GRADING_RATIO_ERROR,
    H_TARGET_ERROR,
    MAX_REFINEMENT_PASSES,
    MESH_INDEX_ERROR,
    MESH_SECTION_ERROR,
    MESH_VALUE_ERROR,
    NEGATIVE_AREA_ERROR,
    NODE_INDEX_ERROR,
    NONOBTUSE_ERROR,
    REFINEMENT_ERROR,
)
from keller_segel.exceptions import MeshConformityError, MeshError, MeshFormatError

if TYPE_CHECKING:
    from typing import Callable, Iterator, Sequence

    from keller_segel.geometry import PolygonalDomain

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    Conforming P1 triangulation. Immutable after construction.

    :param nodes: (N, 2) node coordinates
    :param triangles: (M, 3) counterclockwise node-index triples
    :param boundary_edges: (B, 2) node-index pairs tracing the boundary, oriented like their triangle
    :param corner_nodes: indices of the nodes coinciding with the polygon vertices, in vertex order
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    corner_nodes: np.ndarray
    name: str = "mesh"

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", _frozen(np.array(self.nodes, dtype=float).reshape(-1, 2)))
        object.__setattr__(self, "triangles", _frozen(np.array(self.triangles, dtype=np.int64).reshape(-1, 3)))
        edges = np.array(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "boundary_edges", _frozen(edges))
        object.__setattr__(self, "corner_nodes", _frozen(np.array(self.corner_nodes, dtype=np.int64).reshape(-1)))

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def mesh_id(self) -> str:
        digest = hashlib.sha1(self.nodes.tobytes())
        digest.update(self.triangles.tobytes())
        return digest.hexdigest()[:16]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        a, b, c = (self.nodes[self.triangles[:, k]] for k in range(3))
        return _frozen(0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])))

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def lumped_weights(self) -> np.ndarray:
        """
        Row sums of the consistent mass matrix: one third of the area of every incident triangle.
        """
        weights = np.zeros(self.num_nodes)
        np.add.at(weights, self.triangles.reshape(-1), np.repeat(self.signed_areas / 3.0, 3))
        return _frozen(weights)

    @cached_property
    def edges(self) -> np.ndarray:
        """
        Unique undirected edges as sorted node pairs.
        """
        return _frozen(np.unique(_triangle_edges(self.triangles), axis=0))

    @cached_property
    def diameters(self) -> np.ndarray:
        a, b, c = (self.nodes[self.triangles[:, k]] for k in range(3))
        lengths = np.stack([np.linalg.norm(y - x, axis=1) for x, y in ((a, b), (b, c), (c, a))])
        return _frozen(lengths.max(axis=0))

    @property
    def max_diameter(self) -> float:
        return float(self.diameters.max()) if self.num_triangles else 0.0

    @cached_property
    def obtuse_count(self) -> int:
        count = 0
        for k in range(3):
            apex = self.nodes[self.triangles[:, k]]
            first = self.nodes[self.triangles[:, (k + 1) % 3]] - apex
            second = self.nodes[self.triangles[:, (k + 2) % 3]] - apex
            dots = np.einsum("ij,ij->i", first, second)
            norms = np.linalg.norm(first, axis=1) * np.linalg.norm(second, axis=1)
            count += int(np.count_nonzero(dots < -1e-9 * norms))
        return count

    @property
    def is_nonobtuse(self) -> bool:
        return self.obtuse_count == 0

    def validate(self) -> None:
        """
        Check node references, orientation and conformity; raises MeshConformityError.
        """
        count = self.num_nodes
        bad = np.argwhere((self.triangles < 0) | (self.triangles >= count))
        if len(bad):
            index, corner = bad[0]
            raise MeshConformityError(
                NODE_INDEX_ERROR.format(index=int(index), node=int(self.triangles[index, corner]), count=count)
            )
        non_positive = np.flatnonzero(self.signed_areas <= 0)
        if len(non_positive):
            index = int(non_positive[0])
            raise MeshConformityError(NEGATIVE_AREA_ERROR.format(index=index, area=float(self.signed_areas[index])))
        edges, multiplicity = np.unique(_triangle_edges(self.triangles), axis=0, return_counts=True)
        overused = np.flatnonzero(multiplicity > 2)
        if len(overused):
            edge = tuple(int(i) for i in edges[overused[0]])
            raise MeshConformityError(EDGE_MULTIPLICITY_ERROR.format(edge=edge, count=int(multiplicity[overused[0]])))
        single = {tuple(int(i) for i in edge) for edge in edges[multiplicity == 1]}
        listed = {tuple(sorted(int(i) for i in edge)) for edge in self.boundary_edges}
        if single != listed:
            raise MeshConformityError(
                BOUNDARY_MISMATCH_ERROR.format(missing=len(single - listed), extra=len(listed - single))
            )


@dataclass(frozen=True)
class Grading:
    """
    Local refinement toward polygon vertices: near a listed corner the element diameter is bounded by
    ``ratio * max(d, ratio * h)`` with ``d`` the distance to the corner.
    """

    corner_indices: tuple[int, ...]
    ratio: float

    def __post_init__(self) -> None:
        if not 0 < self.ratio <= 1:
            raise MeshError(GRADING_RATIO_ERROR.format(ratio=self.ratio))
        object.__setattr__(self, "corner_indices", tuple(int(i) for i in self.corner_indices))


def _triangle_edges(triangles: np.ndarray) -> np.ndarray:
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    return np.sort(edges, axis=1)


def _boundary_from_triangles(triangles: np.ndarray) -> np.ndarray:
    directed = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    _, inverse, counts = np.unique(np.sort(directed, axis=1), axis=0, return_inverse=True, return_counts=True)
    boundary = directed[counts[inverse.reshape(-1)] == 1]
    return boundary[np.lexsort((boundary[:, 1], boundary[:, 0]))]


def _corner_nodes(nodes: np.ndarray, domain: PolygonalDomain) -> np.ndarray:
    vertices = np.asarray(domain.vertices)
    distances = np.linalg.norm(nodes[None, :, :] - vertices[:, None, :], axis=2)
    return distances.argmin(axis=1)


def _size_function(h: float, grading: Grading | None) -> Callable[[float], float]:
    """
    Target element diameter as a function of the distance to the nearest graded corner.
    """
    uniform = math.sqrt(2.0) * h
    if grading is None:
        return lambda distance: uniform
    ratio = grading.ratio
    return lambda distance: min(uniform, ratio * max(distance, ratio * h))


def _interval_distance(lower: float, upper: float, centers: Sequence[float]) -> float:
    if not centers:
        return math.inf
    return min(0.0 if lower <= c <= upper else min(abs(lower - c), abs(upper - c)) for c in centers)


def _axis_points(knots: Sequence[float], h: float, grading: Grading | None, centers: Sequence[float]) -> np.ndarray:
    """
    Breakpoints along one axis: every polygon coordinate is a knot, knot intervals are split uniformly into cells
    of width <= h, or marched outward from the graded corner coordinates when grading is active.
    """
    size = _size_function(h, grading)
    points = [knots[0]]
    for lower, upper in zip(knots, knots[1:]):
        if grading is None or not centers:
            count = max(1, math.ceil((upper - lower) / h - 1e-9))
            points.extend(lower + (upper - lower) * k / count for k in range(1, count))
            points.append(upper)
            continue
        x = lower
        while True:
            # axis width is the diameter bound divided by sqrt(2): both legs of the right triangle are bounded
            step = min(h, size(_interval_distance(x, x, centers)) / math.sqrt(2.0))
            for _ in range(64):
                shrunk = min(h, size(_interval_distance(x, min(x + step, upper), centers)) / math.sqrt(2.0))
                if shrunk >= step:
                    break
                step = shrunk
            if x + step >= upper - 1e-6 * step:
                break
            x += step
            points.append(x)
        points.append(upper)
    return np.asarray(points)


def _unique_knots(values: Sequence[float]) -> list[float]:
    knots: list[float] = []
    for value in sorted(values):
        if not knots or value - knots[-1] > 1e-12:
            knots.append(value)
    return knots


def _tensor_mesh(domain: PolygonalDomain, h: float, grading: Grading | None) -> TriMesh:
    vertices = np.asarray(domain.vertices)
    corners = vertices[list(grading.corner_indices)] if grading else np.empty((0, 2))
    xs = _axis_points(_unique_knots(vertices[:, 0]), h, grading, [float(c) for c in corners[:, 0]])
    ys = _axis_points(_unique_knots(vertices[:, 1]), h, grading, [float(c) for c in corners[:, 1]])
    mid_x, mid_y = np.meshgrid((xs[:-1] + xs[1:]) / 2, (ys[:-1] + ys[1:]) / 2)
    centers = np.column_stack([mid_x.ravel(), mid_y.ravel()])
    inside = domain.contains(centers).reshape(len(ys) - 1, len(xs) - 1)
    used = np.zeros((len(ys), len(xs)), dtype=bool)
    for j, i in np.argwhere(inside):
        used[j : j + 2, i : i + 2] = True
    numbering = -np.ones(used.shape, dtype=np.int64)
    numbering[used] = np.arange(int(used.sum()))
    grid_x, grid_y = np.meshgrid(xs, ys)
    nodes = np.column_stack([grid_x[used], grid_y[used]])
    triangles = []
    for j, i in np.argwhere(inside):
        p00, p10 = numbering[j, i], numbering[j, i + 1]
        p01, p11 = numbering[j + 1, i], numbering[j + 1, i + 1]
        triangles.extend([(p00, p10, p11), (p00, p11, p01)])
    triangles_array = np.asarray(triangles, dtype=np.int64)
    return TriMesh(
        nodes=nodes,
        triangles=triangles_array,
        boundary_edges=_boundary_from_triangles(triangles_array),
        corner_nodes=_corner_nodes(nodes, domain),
        name=domain.name,
    )


def _edge_distances(point: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    length2 = np.einsum("ij,ij->i", ab, ab)
    s = np.clip(np.einsum("ij,ij->i", point - a, ab) / np.where(length2 > 0, length2, 1.0), 0.0, 1.0)
    return np.linalg.norm(point - a - s[:, None] * ab, axis=1)


def _corner_distances(nodes: np.ndarray, triangles: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """
    Distance from every triangle to the nearest graded corner. Corners are polygon vertices, so they never lie
    strictly inside a triangle and the nearest point is on an edge.
    """
    a, b, c = (nodes[triangles[:, k]] for k in range(3))
    distance = np.full(len(triangles), np.inf)
    for corner in corners:
        edges = [_edge_distances(corner, p, q) for p, q in ((a, b), (b, c), (c, a))]
        distance = np.minimum(distance, np.min(edges, axis=0))
    return distance


def _twice_signed_areas(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])


def _diameter_area(diameter: np.ndarray | float) -> np.ndarray | float:
    # area of the equilateral triangle with the given edge
    return math.sqrt(3.0) / 4.0 * np.square(diameter)


def _triangle_mesh(domain: PolygonalDomain, h: float, grading: Grading | None) -> TriMesh:
    vertices = np.asarray(domain.vertices, dtype=float)
    count = len(vertices)
    segments = np.column_stack([np.arange(count), (np.arange(count) + 1) % count])
    size = np.vectorize(_size_function(h, grading), otypes=[float])
    corners = vertices[list(grading.corner_indices)] if grading else np.empty((0, 2))
    # the area switch takes plain decimals only
    max_area = float(_diameter_area(size(math.inf)))
    data = triangle.triangulate({"vertices": vertices, "segments": segments}, f"pqQa{max_area:.15f}")
    for refinement in range(MAX_REFINEMENT_PASSES):
        nodes, triangles = np.asarray(data["vertices"], dtype=float), np.asarray(data["triangles"], dtype=np.int64)
        a, b, c = (nodes[triangles[:, k]] for k in range(3))
        diameters = np.max([np.linalg.norm(y - x, axis=1) for x, y in ((a, b), (b, c), (c, a))], axis=0)
        targets = size(_corner_distances(nodes, triangles, corners))
        too_large = diameters > targets * (1 + 1e-12)
        if not too_large.any():
            break
        logger.debug("Refinement pass %d: %d triangles above their size target", refinement + 1, too_large.sum())
        areas = 0.5 * np.abs(_twice_signed_areas(a, b, c))
        limits = np.where(too_large, np.minimum(areas / 2, _diameter_area(targets)), -1.0)
        data = triangle.triangulate({**data, "triangle_max_area": limits}, "prqQa")
    else:
        raise MeshError(REFINEMENT_ERROR.format(name=domain.name, passes=MAX_REFINEMENT_PASSES))
    flipped = _twice_signed_areas(a, b, c) < 0
    triangles[flipped] = triangles[flipped][:, [0, 2, 1]]
    return TriMesh(
        nodes=nodes,
        triangles=triangles,
        boundary_edges=_boundary_from_triangles(triangles),
        corner_nodes=np.arange(count),
        name=domain.name,
    )


def triangulate(
    domain: PolygonalDomain,
    h_target: float,
    grading: Grading | None = None,
    require_nonobtuse: bool = False,
) -> TriMesh:
    """
    Produce a conforming triangulation with max diameter <= sqrt(2) * h_target.

    Axis-aligned polygons get a (graded) tensor grid split into right triangles, which is always nonobtuse.
    Other polygons get a quality constrained Delaunay mesh from Triangle, refined with per-triangle area limits
    until every element meets the size target.

    :raises: MeshError when require_nonobtuse is set and the produced mesh has obtuse triangles
    """
    if not (math.isfinite(h_target) and h_target > 0):
        raise MeshError(H_TARGET_ERROR.format(h=h_target))
    if grading is not None:
        for index in grading.corner_indices:
            if not 0 <= index < len(domain.vertices):
                raise MeshError(GRADING_CORNER_ERROR.format(index=index, count=len(domain.vertices)))
    if domain.is_rectilinear:
        mesh = _tensor_mesh(domain, h_target, grading)
    else:
        mesh = _triangle_mesh(domain, h_target, grading)
    if require_nonobtuse and not mesh.is_nonobtuse:
        raise MeshError(NONOBTUSE_ERROR.format(name=domain.name, count=mesh.obtuse_count))
    logger.debug(
        "Triangulated %s: %d nodes, %d triangles, max diameter %.4g, nonobtuse=%s",
        domain.name,
        mesh.num_nodes,
        mesh.num_triangles,
        mesh.max_diameter,
        mesh.is_nonobtuse,
    )
    return mesh


def refine_uniform(mesh: TriMesh) -> TriMesh:
    """
    Split every triangle into four through its edge midpoints.
    """
    edges, inverse = np.unique(_triangle_edges(mesh.triangles), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    count = mesh.num_triangles
    midpoint_ids = mesh.num_nodes + inverse.reshape(3, count).T
    nodes = np.concatenate([mesh.nodes, 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])])
    a, b, c = mesh.triangles.T
    m_ab, m_bc, m_ca = midpoint_ids.T
    triangles = np.concatenate(
        [
            np.column_stack([a, m_ab, m_ca]),
            np.column_stack([m_ab, b, m_bc]),
            np.column_stack([m_ca, m_bc, c]),
            np.column_stack([m_ab, m_bc, m_ca]),
        ]
    )
    edge_index = {tuple(edge): mesh.num_nodes + k for k, edge in enumerate(edges.tolist())}
    boundary = []
    for start, end in mesh.boundary_edges.tolist():
        middle = edge_index[(min(start, end), max(start, end))]
        boundary.extend([(start, middle), (middle, end)])
    return TriMesh(
        nodes=nodes,
        triangles=triangles,
        boundary_edges=np.asarray(boundary, dtype=np.int64),
        corner_nodes=mesh.corner_nodes,
        name=mesh.name,
    )


def save_mesh(mesh: TriMesh, path: str | Path) -> None:
    lines = [f"# keller-segel mesh {mesh.name}", f"nodes {mesh.num_nodes}"]
    lines.extend(f"{x!r} {y!r}" for x, y in mesh.nodes.tolist())
    lines.append(f"triangles {mesh.num_triangles}")
    lines.extend(" ".join(str(i) for i in triangle) for triangle in mesh.triangles.tolist())
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    lines.extend(f"{i} {j}" for i, j in mesh.boundary_edges.tolist())
    lines.append(f"corners {len(mesh.corner_nodes)}")
    lines.extend(str(i) for i in mesh.corner_nodes.tolist())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            yield number, content


def _read_section(
    lines: list[tuple[int, str]], position: int, section: str, width: int, kind: type
) -> tuple[list, int]:
    if position >= len(lines):
        last = lines[-1][0] if lines else 0
        raise MeshFormatError(last, MESH_SECTION_ERROR.format(section=section, received="<eof>"))
    number, header = lines[position]
    parts = header.split()
    if len(parts) != 2 or parts[0] != section or not parts[1].isdigit():
        raise MeshFormatError(number, MESH_SECTION_ERROR.format(section=section, received=header))
    count = int(parts[1])
    rows = []
    for offset in range(1, count + 1):
        if position + offset >= len(lines):
            expected = f"{count} rows of {width}"
            raise MeshFormatError(number, MESH_VALUE_ERROR.format(expected=expected, received="<eof>"))
        row_number, content = lines[position + offset]
        values = content.split()
        if len(values) != width:
            raise MeshFormatError(row_number, MESH_VALUE_ERROR.format(expected=width, received=content))
        try:
            rows.append((row_number, [kind(value) for value in values]))
        except ValueError as e:
            raise MeshFormatError(row_number, MESH_VALUE_ERROR.format(expected=width, received=content)) from e
    return rows, position + count + 1


def load_mesh(path: str | Path) -> TriMesh:
    """
    Parse the plain-text mesh format and validate conformity.

    :raises: MeshFormatError with the offending line number, MeshConformityError for broken connectivity
    """
    lines = list(_content_lines(Path(path).read_text(encoding="utf-8")))
    node_rows, position = _read_section(lines, 0, "nodes", 2, float)
    triangle_rows, position = _read_section(lines, position, "triangles", 3, int)
    boundary_rows, position = _read_section(lines, position, "boundary", 2, int)
    corner_rows: list = []
    if position < len(lines):
        corner_rows, position = _read_section(lines, position, "corners", 1, int)
    count = len(node_rows)
    for row_number, values in [*triangle_rows, *boundary_rows, *corner_rows]:
        for index in values:
            if not 0 <= index < count:
                raise MeshFormatError(row_number, MESH_INDEX_ERROR.format(index=index, count=count))
    mesh = TriMesh(
        nodes=np.asarray([values for _, values in node_rows], dtype=float),
        triangles=np.asarray([values for _, values in triangle_rows], dtype=np.int64),
        boundary_edges=np.asarray([values for _, values in boundary_rows], dtype=np.int64),
        corner_nodes=np.asarray([values[0] for _, values in corner_rows], dtype=np.int64),
        name=Path(path).stem,
    )
    mesh.validate()
    return mesh
