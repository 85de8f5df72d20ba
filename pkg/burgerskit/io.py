from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import typing as t

import numpy as np

from burgerskit.diagnostics import COLUMNS, COLUMN_NAMES, with_mean_residuals
from burgerskit.models import IntegratedState
from burgerskit.spectral import (
    SYMMETRY_TOLERANCE,
    GridSpec,
    SpectralField,
    VectorField,
    potential,
    symmetry_defect,
)
from burgerskit.utils import format_float

if t.TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from burgerskit.diagnostics import DiagnosticsRecord
    from burgerskit.models import ModelSpec, State
    from burgerskit.timestep import Trajectory
    from burgerskit.types import ColumnDoc, SnapshotMeta

logger = logging.getLogger("burgerskit")


@dataclasses.dataclass
class Snapshot:
    field: SpectralField
    meta: SnapshotMeta


def _jsonable(value: t.Any) -> t.Any:
    if isinstance(value, float):
        return value if np.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    return value


def write_json(path: str, payload: t.Any) -> None:
    """Sorted keys and no timestamps, so identical runs give identical bytes."""
    with open(path, "w", encoding="utf-8") as file:
        json.dump(_jsonable(payload), file, indent=2, sort_keys=True)
        file.write("\n")


def read_json(path: str) -> t.Any:
    with open(path, encoding="utf-8") as file:
        return json.load(file)


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Mapping[str, t.Any]]) -> None:
    """Floats are written with 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                format_float(row[c]) if isinstance(row[c], float) else row[c] for c in columns
            )


def read_csv(path: str) -> list[dict[str, float]]:
    with open(path, encoding="utf-8", newline="") as file:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(file)]


def write_schema(path: str, columns: Sequence[ColumnDoc] = COLUMNS, **tables: Sequence[ColumnDoc]) -> None:
    write_json(path, {"trajectory.csv": list(columns), **{name: list(cols) for name, cols in tables.items()}})


def snapshot_field(state: State, spec: ModelSpec) -> tuple[SpectralField, float, t.Literal["phi", "psi"]]:
    """The scalar field stored for a state: phi for primal and integrated forms, psi otherwise."""
    if isinstance(state, VectorField):
        return potential(state), 0.0, "phi"
    if isinstance(state, IntegratedState):
        return state.phi, state.mean, "phi"
    if spec.is_colehopf:
        return state, 0.0, "psi"
    raise TypeError(f"Cannot snapshot {type(state).__name__} for form {spec.form}")


def write_snapshot(
    path: str,
    field: SpectralField,
    *,
    time: float,
    form: str,
    mean: float = 0.0,
    name: t.Literal["phi", "psi"] = "phi",
) -> None:
    """Writes {"meta": {...}, "coeffs": [[k..., re, im], ...]} listing every nonzero coefficient in lexicographic k order."""
    grid = field.grid
    entries = []
    for index in zip(*np.nonzero(field.coeffs)):
        k = [int(i) if i < grid.N // 2 else int(i) - grid.N for i in index]
        value = field.coeffs[index]
        entries.append([*k, float(value.real), float(value.imag)])
    entries.sort(key=lambda entry: entry[: grid.d])
    meta: SnapshotMeta = {
        "d": grid.d,
        "N": grid.N,
        "L": grid.L,
        "time": time,
        "form": form,
        "zero_mean": field.zero_mean,
        "mean": mean,
        "field": name,
    }
    write_json(path, {"meta": meta, "coeffs": entries})


def read_snapshot(path: str) -> Snapshot:
    payload = read_json(path)
    meta = payload["meta"]
    grid = GridSpec(int(meta["d"]), int(meta["N"]), float(meta["L"]))
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    for entry in payload["coeffs"]:
        k = tuple(int(ki) for ki in entry[: grid.d])
        coeffs[grid.index(k)] = complex(entry[grid.d], entry[grid.d + 1])
    if symmetry_defect(coeffs) > SYMMETRY_TOLERANCE:
        raise ValueError(f"Snapshot {path} is not Hermitian symmetric")
    if meta["zero_mean"]:
        coeffs[(0,) * grid.d] = 0
    return Snapshot(SpectralField(grid, coeffs, bool(meta["zero_mean"])), meta)


class SnapshotSink:
    """Writes every stored state to directory/snap_{index:06d}.json."""

    def __init__(self, directory: str, spec: ModelSpec) -> None:
        self.directory = directory
        self.spec = spec
        self.count = 0
        os.makedirs(directory, exist_ok=True)

    def snapshot(self, t: float, state: State) -> None:
        field, mean, name = snapshot_field(state, self.spec)
        path = os.path.join(self.directory, f"snap_{self.count:06d}.json")
        write_snapshot(path, field, time=t, form=self.spec.form, mean=mean, name=name)
        self.count += 1

    def record(self, record: DiagnosticsRecord) -> None:
        pass


def write_trajectory_csv(path: str, trajectory: Trajectory) -> None:
    records = with_mean_residuals(trajectory)
    write_csv(path, COLUMN_NAMES, (r.to_row() for r in records))
