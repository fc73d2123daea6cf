"""Readers for the CSV artifacts a tumorfront run writes.

Two layouts exist: ordinary header-plus-rows tables (profile.csv,
spectrum.csv, sweep.csv, boundary.csv, overlay.csv, diagnostics.csv) and
field snapshots (u/v/w_NNNN.csv), whose first line is grid metadata
`nx,ny,dx,dy,time` followed by nx rows of ny values each.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch


@dataclass(frozen=True)
class Table:
    """One parsed CSV artifact: column names plus raw string rows."""

    path: Path
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def require(self, *names: str) -> None:
        missing = tuple(n for n in names if n not in self.columns)
        if missing:
            raise SchemaMismatch(
                f"{self.path.name}: missing columns: {', '.join(missing)}",
                missing=missing)

    def floats(self, name: str) -> np.ndarray:
        self.require(name)
        i = self.columns.index(name)
        try:
            return np.array([float(r[i]) for r in self.rows])
        except ValueError as exc:
            raise SchemaMismatch(
                f"{self.path.name}: column {name!r} is not numeric: {exc}")

    def strings(self, name: str) -> list[str]:
        self.require(name)
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def read_table(path: Path, *, require_rows: bool = True) -> Table:
    if not path.is_file():
        raise SchemaMismatch(f"{path.name} not found in {path.parent}",
                             missing=(path.name,))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path.name}: file is empty") from None
        rows = tuple(tuple(r) for r in reader if r)
    width = len(header)
    for r in rows:
        if len(r) != width:
            raise SchemaMismatch(
                f"{path.name}: row of width {len(r)} under a "
                f"{width}-column header")
    if require_rows and not rows:
        raise SchemaMismatch(f"{path.name}: no data rows")
    return Table(path=path, columns=tuple(header), rows=rows)


@dataclass(frozen=True)
class FieldSnapshot:
    """One 2D field on its grid; values indexed [x, y]."""

    path: Path
    values: np.ndarray
    dx: float
    dy: float
    time: float

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]


def read_field(path: Path) -> FieldSnapshot:
    if not path.is_file():
        raise SchemaMismatch(f"{path.name} not found in {path.parent}",
                             missing=(path.name,))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            meta = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path.name}: file is empty") from None
        if len(meta) != 5:
            raise SchemaMismatch(
                f"{path.name}: expected metadata line nx,ny,dx,dy,time, "
                f"got {len(meta)} fields")
        try:
            nx, ny = int(meta[0]), int(meta[1])
            dx, dy, time = float(meta[2]), float(meta[3]), float(meta[4])
        except ValueError as exc:
            raise SchemaMismatch(f"{path.name}: bad metadata line: {exc}")
        try:
            values = np.array([[float(x) for x in row]
                               for row in reader if row])
        except ValueError as exc:
            raise SchemaMismatch(f"{path.name}: non-numeric field value: {exc}")
    if values.shape != (nx, ny):
        raise SchemaMismatch(
            f"{path.name}: metadata promises {nx}x{ny} values, "
            f"file holds {values.shape[0]}x{values.shape[1]}")
    return FieldSnapshot(path=path, values=values, dx=dx, dy=dy, time=time)
