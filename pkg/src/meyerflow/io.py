"""File formats: coefficient containers, raw grid dumps, reports.

The coefficient container is self-describing: a magic tag, a little-endian
uint32 header length, a UTF-8 JSON header (grid geometry, component count,
time stamps, level table) and the payload as little-endian float64 arrays in
row-major k order, levels sorted by (j, eps), components outermost, times
outermost of all.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import ConfigError
from .meyer import CoeffField, GridConfig, SampledField, component_signs
from .trajectory import Trajectory

FORMAT_VERSION = 1
COEFF_MAGIC = b"MWC1"
GRID_MAGIC = b"MWG1"


def _level_table(grid):
    rows = []
    for j in grid.levels:
        for eps in component_signs(grid.dim):
            rows.append({"eps": list(eps), "j": j,
                         "shape": [grid.lattice_size(j)] * grid.dim})
    return rows


def _grid_header(grid):
    return {
        "n": grid.dim,
        "side": grid.side,
        "grid_points": grid.grid_points,
        "j_min": grid.j_min,
        "j_max": grid.j_max,
    }


def _grid_from_header(head):
    return GridConfig(
        dim=int(head["n"]),
        side=float(head["side"]),
        grid_points=int(head["grid_points"]),
        j_min=int(head["j_min"]),
        j_max=int(head["j_max"]),
    )


def _write_container(path, magic, header, arrays):
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_container(path, magic):
    with open(path, "rb") as fh:
        tag = fh.read(4)
        if tag != magic:
            raise ConfigError(f"{path}: bad magic {tag!r}, expected {magic!r}")
        (hlen,) = np.frombuffer(fh.read(4), dtype="<u4")
        header = json.loads(fh.read(int(hlen)).decode("utf-8"))
        payload = np.frombuffer(fh.read(), dtype="<f8")
    return header, payload


def _pack_fields(fields, grid):
    arrays = []
    for comp in fields:
        for j in grid.levels:
            for eps in component_signs(grid.dim):
                arrays.append(comp.levels[(eps, j)])
    return arrays


def _unpack_fields(grid, ncomp, payload, offset, time=None):
    fields = []
    pos = offset
    for _ in range(ncomp):
        cf = CoeffField(grid, time=time)
        for j in grid.levels:
            size = grid.lattice_size(j) ** grid.dim
            shape = (grid.lattice_size(j),) * grid.dim
            for eps in component_signs(grid.dim):
                cf.levels[(eps, j)] = payload[pos : pos + size].reshape(shape).copy()
                pos += size
        fields.append(cf)
    return tuple(fields), pos


def write_coeffs(path, fields, time=None):
    """Write a (vector of) coefficient field(s) to a container file."""
    if isinstance(fields, CoeffField):
        fields = (fields,)
    grid = fields[0].grid
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "coeffs",
        **_grid_header(grid),
        "components": len(fields),
        "time": time if time is not None else fields[0].time,
        "levels": _level_table(grid),
    }
    _write_container(path, COEFF_MAGIC, header, _pack_fields(fields, grid))


def read_coeffs(path):
    header, payload = _read_container(path, COEFF_MAGIC)
    if header.get("kind") != "coeffs":
        raise ConfigError(f"{path}: not a coefficient container")
    grid = _grid_from_header(header)
    fields, pos = _unpack_fields(grid, int(header["components"]), payload, 0,
                                 time=header.get("time"))
    if pos != payload.size:
        raise ConfigError(f"{path}: payload size mismatch")
    return fields, header


def write_trajectory(path, traj):
    grid = traj.grid
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "trajectory",
        **_grid_header(grid),
        "components": traj.ncomp,
        "times": [float(t) for t in traj.mesh],
        "levels": _level_table(grid),
    }
    arrays = []
    for state in traj.states:
        arrays.extend(_pack_fields(state, grid))
    _write_container(path, COEFF_MAGIC, header, arrays)


def read_trajectory(path):
    header, payload = _read_container(path, COEFF_MAGIC)
    if header.get("kind") != "trajectory":
        raise ConfigError(f"{path}: not a trajectory container")
    grid = _grid_from_header(header)
    ncomp = int(header["components"])
    times = header["times"]
    states = []
    pos = 0
    for t in times:
        state, pos = _unpack_fields(grid, ncomp, payload, pos, time=float(t))
        states.append(state)
    if pos != payload.size:
        raise ConfigError(f"{path}: payload size mismatch")
    return Trajectory(np.asarray(times), states), header


def write_grid_dump(path, fields):
    """Raw grid dump: header plus little-endian doubles."""
    if isinstance(fields, SampledField):
        fields = (fields,)
    grid = fields[0].grid
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "grid",
        **_grid_header(grid),
        "components": len(fields),
    }
    _write_container(path, GRID_MAGIC, header, [f.values for f in fields])


def read_grid_dump(path):
    header, payload = _read_container(path, GRID_MAGIC)
    if header.get("kind") != "grid":
        raise ConfigError(f"{path}: not a grid dump")
    grid = _grid_from_header(header)
    size = grid.grid_points**grid.dim
    shape = (grid.grid_points,) * grid.dim
    ncomp = int(header["components"])
    if payload.size != ncomp * size:
        raise ConfigError(f"{path}: payload size mismatch")
    fields = tuple(
        SampledField(grid, payload[i * size : (i + 1) * size].reshape(shape).copy())
        for i in range(ncomp)
    )
    return fields, header


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if obj == math.inf:
        return "inf"
    raise TypeError(f"cannot serialize {type(obj)}")


def write_json_report(path, payload):
    payload = dict(payload)
    payload.setdefault("format_version", FORMAT_VERSION)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def read_json_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv_report(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["format_version", FORMAT_VERSION] + [""] * (len(header) - 2))
        writer.writerow(header)
        writer.writerows(rows)
