"""
Output Module - the time-series CSV and the per-snapshot nodal text files.
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from keller_segel.constants import TIMESERIES_COLUMNS

if TYPE_CHECKING:
    from types import TracebackType

    from keller_segel.diagnostics import DiagRecord
    from keller_segel.mesh import TriMesh
    from keller_segel.stepper import SimState

logger = logging.getLogger(__name__)


def _format(value: float | int | bool) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


class TimeSeriesWriter:
    """
    Streams one CSV row per diagnostics record and flushes after each, so interrupted runs leave usable files.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", encoding="utf-8", newline="")  # pylint: disable=consider-using-with
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(TIMESERIES_COLUMNS)
        self._file.flush()
        self.rows = 0

    def write(self, record: DiagRecord) -> None:
        self._writer.writerow([_format(value) for value in record.as_row()])
        self._file.flush()
        self.rows += 1

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> TimeSeriesWriter:
        return self

    def __exit__(
        self, exc_type: type[BaseException] | None, exc: BaseException | None, traceback: TracebackType | None
    ) -> None:
        self.close()


def read_timeseries(path: str | Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as file:
        return list(csv.DictReader(file))


def snapshot_path(directory: str | Path, prefix: str, index: int) -> Path:
    return Path(directory) / f"{prefix}_{index:05d}.txt"


def write_snapshot(path: str | Path, mesh: TriMesh, state: SimState) -> Path:
    """
    Header ``t=<time>`` followed by one ``x y u v p w`` line per node, all in full precision.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = np.column_stack([mesh.nodes, *state.arrays])
    lines = [f"t={state.t!r}"]
    lines.extend(" ".join(repr(value) for value in row) for row in columns.tolist())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("Wrote snapshot %s at t=%.6g", path, state.t)
    return path


def read_snapshot(path: str | Path) -> tuple[float, np.ndarray]:
    """
    Inverse of write_snapshot: returns the time and the (N, 6) table.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    t = float(lines[0].split("=", 1)[1])
    table = np.array([[float(value) for value in line.split()] for line in lines[1:] if line.strip()])
    return t, table.reshape(-1, 6)
