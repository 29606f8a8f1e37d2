"""Per-episode metrics rows and their CSV run files.

One CSV per run at <out>/<experiment_id>/<seed>.csv with the fixed header
`step,ret_ext,ret_int,switches,success,seed`. Rows are appended at episode
boundaries and flushed immediately; float fields use repr so files from
identical runs are byte-identical and values round-trip exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

HEADER = "step,ret_ext,ret_int,switches,success,seed"


class MetricsError(ValueError):
    """Raised when a metrics file violates the format contract."""


@dataclass
class MetricsRow:
    step: int                # global env steps consumed when the episode ended
    ret_ext: float           # episode extrinsic team return, undiscounted
    ret_int: float           # episode sum of gated intrinsic rewards f*q
    switches: int            # steps of the episode with the switch on (q=1)
    success: int             # per-task success flag, 0 or 1
    seed: int                # run seed, repeated per row

    def to_line(self) -> str:
        return (f"{self.step},{self.ret_ext!r},{self.ret_int!r},"
                f"{self.switches},{self.success},{self.seed}")


class MetricsWriter:
    """Appends rows to one run file, header first, flush per row."""

    def __init__(self, path: str):
        self.path = path
        try:
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            self._fh = open(path, "w", encoding="utf-8", newline="\n")
            self._fh.write(HEADER + "\n")
            self._fh.flush()
        except OSError as exc:
            raise MetricsError(f"cannot open metrics file '{path}': {exc}") from exc
        self._last_step = None

    def emit(self, row: MetricsRow) -> None:
        if self._last_step is not None and row.step < self._last_step:
            raise MetricsError(
                f"step must be nondecreasing: {row.step} after {self._last_step}")
        self._last_step = row.step
        try:
            self._fh.write(row.to_line() + "\n")
            self._fh.flush()
        except OSError as exc:
            raise MetricsError(f"cannot write metrics file '{self.path}': {exc}") from exc

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def emit_metrics(writer: MetricsWriter, row: MetricsRow) -> None:
    writer.emit(row)


def read_metrics(path: str) -> list[MetricsRow]:
    """Read and validate one run file; raises MetricsError naming the line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise MetricsError(f"cannot read metrics file '{path}': {exc}") from exc
    if not lines or lines[0] != HEADER:
        raise MetricsError(f"{path}: line 1: expected header '{HEADER}'")
    rows = []
    prev_step = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise MetricsError(f"{path}: line {lineno}: blank row")
        parts = line.split(",")
        if len(parts) != 6:
            raise MetricsError(f"{path}: line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            row = MetricsRow(step=int(parts[0]), ret_ext=float(parts[1]),
                             ret_int=float(parts[2]), switches=int(parts[3]),
                             success=int(parts[4]), seed=int(parts[5]))
        except ValueError as exc:
            raise MetricsError(f"{path}: line {lineno}: {exc}") from exc
        if row.switches < 0:
            raise MetricsError(f"{path}: line {lineno}: switches must be >= 0")
        if row.success not in (0, 1):
            raise MetricsError(f"{path}: line {lineno}: success must be 0 or 1")
        if prev_step is not None and row.step < prev_step:
            raise MetricsError(
                f"{path}: line {lineno}: step {row.step} decreases from {prev_step}")
        prev_step = row.step
        rows.append(row)
    return rows
