from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from keller_segel.mesh import TriMesh
from keller_segel.stepper import SimState
from tests import example_two_triangle_boundary, example_two_triangle_nodes, example_two_triangles

if TYPE_CHECKING:
    from typing import Callable

TEST_ROOT = Path(__file__).resolve(strict=True).parent


def two_triangle_mesh() -> TriMesh:
    """the unit square split along its diagonal"""
    return TriMesh(
        nodes=np.array(example_two_triangle_nodes),
        triangles=np.array(example_two_triangles),
        boundary_edges=np.array(example_two_triangle_boundary),
        corner_nodes=np.arange(4),
        name="two_triangles",
    )


def bump(mesh: TriMesh, center: tuple[float, float] = (0.5, 0.5), width: float = 0.2) -> np.ndarray:
    return np.exp(-np.sum((mesh.nodes - np.asarray(center)) ** 2, axis=1) / width**2)


def make_state(mesh: TriMesh, u=0.0, v=0.0, p=0.0, w=0.0, t: float = 0.0) -> SimState:
    def expand(value) -> np.ndarray:
        return np.full(mesh.num_nodes, float(value)) if np.ndim(value) == 0 else np.asarray(value, dtype=float)

    return SimState.from_arrays(mesh, t, expand(u), expand(v), expand(p), expand(w))


def write_config(directory: Path, text: str, name: str = "run.cfg", **output: str) -> Path:
    """write a config, pointing its outputs into ``directory``"""
    lines = [text.rstrip(), "", "[output]", f"directory = {directory / 'out'}"]
    lines.extend(f"{key} = {value}" for key, value in output.items())
    path = directory / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def l2_error(mesh: TriMesh, values: np.ndarray, exact: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
    """lumped-quadrature L2 distance between nodal values and a closed-form solution"""
    difference = values - exact(mesh.nodes[:, 0], mesh.nodes[:, 1])
    return float(np.sqrt(mesh.lumped_weights @ difference**2))


def get_file_content(path: Path) -> bytes:
    with open(path, "rb") as file:
        return file.read()
