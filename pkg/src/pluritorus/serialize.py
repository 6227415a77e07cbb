"""CSV node tables, JSON summaries and the TOML run configuration.

Node tables are one row per node in row-major order; pole values use the
literal token ``-inf``.  Floats are written with ``repr`` so files round
trip bit-for-bit, and JSON is emitted with sorted keys so identical runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Optional

import numpy as np

try:
    import tomllib as _toml  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as _toml

from .errors import InvalidArgumentError
from .forms import (BackgroundForm, ReferenceMetric, VolumeForm, general_form,
                    make_closed_form)
from .grid import GridTorus
from .measures import DiscreteMeasure
from .qpsh import QPshFunction


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return repr(float(x))


def _parse(tok: str) -> float:
    tok = tok.strip()
    if tok == "-inf":
        return -math.inf
    if tok == "inf":
        return math.inf
    return float(tok)


def save_field_csv(path, values: np.ndarray, header: str = "value") -> None:
    """Write one node field as a single-column CSV in row-major order."""
    flat = np.asarray(values, dtype=float).ravel()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([header])
        for x in flat:
            writer.writerow([_fmt(x)])


def load_field_csv(path, grid: GridTorus) -> np.ndarray:
    """Read a node field written by :func:`save_field_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidArgumentError(f"{path}: empty field file")
    body = rows[1:] if not _is_number(rows[0][0]) else rows
    vals = [_parse(r[0]) for r in body if r]
    if len(vals) != grid.node_count:
        raise InvalidArgumentError(
            f"{path}: {len(vals)} rows for a grid with {grid.node_count} nodes")
    return np.array(vals, dtype=float).reshape(grid.sizes)


def _is_number(tok: str) -> bool:
    try:
        _parse(tok)
        return True
    except ValueError:
        return False


def save_potential_csv(path, u: QPshFunction) -> None:
    save_field_csv(path, u.values)


def load_potential_csv(path, grid: GridTorus) -> QPshFunction:
    return QPshFunction(grid, load_field_csv(path, grid))


def save_form_csv(path, form: BackgroundForm) -> None:
    """Write the upper-triangle entries of G, one row per node."""
    d = form.grid.dim
    cols = [(i, j) for i in range(d) for j in range(i, d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"g_{i}_{j}" for i, j in cols])
        flatG = form.G.reshape(form.grid.node_count, d, d)
        for row in flatG:
            writer.writerow([_fmt(row[i, j]) for i, j in cols])


def load_form_csv(path, grid: GridTorus) -> BackgroundForm:
    """Read a matrix field as a general (non-closed) form."""
    d = grid.dim
    cols = [(i, j) for i in range(d) for j in range(i, d)]
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    if len(body) != grid.node_count:
        raise InvalidArgumentError(f"{path}: wrong number of rows")
    G = np.zeros((grid.node_count, d, d))
    for n, row in enumerate(body):
        for (i, j), tok in zip(cols, row):
            val = _parse(tok)
            G[n, i, j] = val
            G[n, j, i] = val
    return general_form(grid, G.reshape(grid.sizes + (d, d)))


def save_measure_csv(path, measure: DiscreteMeasure) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "weight"])
        for n, w in enumerate(measure.weights.ravel()):
            writer.writerow([n, _fmt(w)])


def measure_summary(measure: DiscreteMeasure) -> dict:
    return {
        "total_mass": measure.total_mass,
        "min_weight": float(np.min(measure.weights)),
        "support_size": measure.support_size,
    }


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# -- run configuration ------------------------------------------------------


class RunConfig:
    """Parsed TOML configuration with path resolution.

    Documented key schema::

        [grid]    dim, sizes
        [form]    kind = "closed"|"general", A, tau_file, g_file
        [metric]  file            (optional; identity by default)
        [volume]  file | mass     (optional; uniform mass 1 by default)
        [potential] file          (ma / npp)
        [obstacle]  file | value  (envelope)
        [density]   file | value  (solve)
        [rho]       file          (solve; default 0)
        [params]  eps_list, lambda, samples, seed, p, q, mode,
                  output_dir, bound, perturbations, C_bound
    """

    def __init__(self, data: dict, base_dir: str):
        self.data = data
        self.base_dir = base_dir

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "rb") as fh:
            data = _toml.load(fh)
        return cls(data, os.path.dirname(os.path.abspath(path)))

    def _path(self, name: str) -> str:
        return name if os.path.isabs(name) else os.path.join(self.base_dir, name)

    def section(self, name: str) -> dict:
        return self.data.get(name, {})

    def param(self, key: str, default=None):
        return self.section("params").get(key, default)

    def grid(self) -> GridTorus:
        sec = self.section("grid")
        if "sizes" not in sec:
            raise InvalidArgumentError("config: [grid] sizes is required")
        return GridTorus(sec["sizes"])

    def form(self, grid: GridTorus) -> BackgroundForm:
        sec = self.section("form")
        kind = sec.get("kind", "closed")
        if kind == "closed":
            if "A" not in sec:
                raise InvalidArgumentError("config: closed form needs [form] A")
            tau = None
            if "tau_file" in sec:
                tau = load_field_csv(self._path(sec["tau_file"]), grid)
            return make_closed_form(grid, np.asarray(sec["A"], dtype=float), tau)
        if kind == "general":
            if "g_file" not in sec:
                raise InvalidArgumentError("config: general form needs [form] g_file")
            return load_form_csv(self._path(sec["g_file"]), grid)
        raise InvalidArgumentError(f"config: unknown form kind {kind!r}")

    def metric(self, grid: GridTorus) -> Optional[ReferenceMetric]:
        sec = self.section("metric")
        if "file" not in sec:
            return None
        mf = load_form_csv(self._path(sec["file"]), grid)
        return ReferenceMetric(grid, mf.G)

    def volume(self, grid: GridTorus) -> VolumeForm:
        sec = self.section("volume")
        if "file" in sec:
            return VolumeForm(grid, load_field_csv(self._path(sec["file"]), grid))
        from .forms import uniform_volume
        return uniform_volume(grid, float(sec.get("mass", 1.0)))

    def field_or_value(self, section: str, grid: GridTorus, default=None) -> Optional[np.ndarray]:
        sec = self.section(section)
        if "file" in sec:
            return load_field_csv(self._path(sec["file"]), grid)
        if "value" in sec:
            return grid.field(float(sec["value"]))
        if default is None:
            return None
        return grid.field(float(default))

    def potential(self, grid: GridTorus) -> QPshFunction:
        vals = self.field_or_value("potential", grid)
        if vals is None:
            raise InvalidArgumentError("config: [potential] file is required")
        return QPshFunction(grid, vals)
