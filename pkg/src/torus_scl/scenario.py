"""Scenario documents: one JSON object describing a run.

Top-level keys::

    flux          builtin name or {"breakpoints": [...], "values": [...]}
    lattice       row-major list of n*n numbers ("p/q" strings allowed);
                  default the integer lattice of the flux dimension
    initial       {"offset", "modes": [{"mode", "amplitude", "phase"}], "clip"}
                  or {"csv": "cells.csv"} (path relative to the scenario)
    grid          cells per lattice direction, e.g. [200]
    T             final time
    sample_times  list of times, or {"count": k} for k equispaced times
    cfl, viscosity, seed
    nd2, decay, wave, microscope, suite
                  per-subcommand blocks

Overrides are ``dotted.key=value`` strings; ``value`` is parsed as JSON when
possible and kept as a string otherwise.  List entries are addressed by
index (``grid.0=400``).
"""

from dataclasses import dataclass
import copy
from fractions import Fraction
import hashlib
import json
import os

import numpy as np

from ._validation import ConfigError, as_number, check_positive
from .flux import flux_from_spec
from .lattice import LatticeSpec
from .solver import DEFAULT_CFL, MAX_DIMENSION, PeriodicField

MAX_CELLS = 1 << 21
MAX_1D_CELLS = 1 << 16
MEAN_SNAP_DENOMINATOR = 1000
MEAN_SNAP_TOL = 1e-12


def parse_json(text, source="scenario"):
    """Parse JSON, turning syntax errors into :class:`ConfigError` with line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", source) from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object", source)
    return doc


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc, overrides):
    """Return a copy of ``doc`` with each ``a.b.c=value`` override applied."""
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value", "--override")
        key, value = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"empty override key in {item!r}", "--override")
        node = doc
        for i, p in enumerate(parts[:-1]):
            nxt = parts[i + 1]
            if isinstance(node, list):
                node = node[_list_index(node, p, key)]
                continue
            if p not in node or not isinstance(node[p], (dict, list)):
                node[p] = [] if nxt.isdigit() else {}
            node = node[p]
        last = parts[-1]
        if isinstance(node, list):
            idx = int(last) if last.isdigit() else None
            if idx is None or idx > len(node):
                raise ConfigError(f"bad list index {last!r}", key)
            if idx == len(node):
                node.append(_parse_value(value))
            else:
                node[idx] = _parse_value(value)
        else:
            node[last] = _parse_value(value)
    return doc


def _list_index(node, p, key):
    if not p.isdigit() or int(p) >= len(node):
        raise ConfigError(f"bad list index {p!r}", key)
    return int(p)


def canonical_hash(doc):
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Scenario:
    """Validated scenario.  ``doc`` is the resolved document after overrides."""

    doc: dict
    base_dir: str = "."

    @classmethod
    def load(cls, path, overrides=(), seed=None):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc.strerror}", "--scenario") from None
        return cls.from_dict(parse_json(text, os.path.basename(path)), os.path.dirname(os.path.abspath(path)),
                             overrides, seed)

    @classmethod
    def from_dict(cls, doc, base_dir=".", overrides=(), seed=None):
        doc = apply_overrides(doc, overrides)
        if seed is not None:
            doc["seed"] = int(seed)
        sc = cls(doc, base_dir)
        sc.validate()
        return sc

    # -- fields ---------------------------------------------------------

    def get(self, key, default=None):
        return self.doc.get(key, default)

    def block(self, name):
        b = self.doc.get(name, {})
        if not isinstance(b, dict):
            raise ConfigError("must be an object", name)
        return b

    @property
    def seed(self):
        s = self.doc.get("seed", 0)
        if isinstance(s, bool) or not isinstance(s, int) or s < 0 or s >= 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        return s

    @property
    def flux(self):
        if "flux" not in self.doc:
            raise ConfigError("missing", "flux")
        return flux_from_spec(self.doc["flux"])

    @property
    def lattice(self):
        spec = self.doc.get("lattice")
        if spec is None:
            n = self.flux.dimension if "flux" in self.doc else len(self.dims)
            return LatticeSpec.integer(n)
        if not isinstance(spec, list) or not spec:
            raise ConfigError("expected a row-major list of n*n numbers", "lattice")
        return LatticeSpec.from_flat([as_number(v, f"lattice[{i}]") for i, v in enumerate(spec)])

    @property
    def dims(self):
        grid = self.doc.get("grid")
        if grid is None:
            if isinstance(self.doc.get("initial"), dict) and "csv" in self.doc["initial"]:
                return self._csv_values().shape
            raise ConfigError("missing", "grid")
        grid = [grid] if isinstance(grid, int) and not isinstance(grid, bool) else grid
        if not isinstance(grid, list) or not grid:
            raise ConfigError("expected a list of cell counts", "grid")
        dims = []
        for i, N in enumerate(grid):
            if isinstance(N, bool) or not isinstance(N, int) or N < 2:
                raise ConfigError("cell counts must be integers >= 2", f"grid[{i}]")
            dims.append(N)
        return tuple(dims)

    @property
    def T(self):
        if "T" not in self.doc:
            raise ConfigError("missing", "T")
        return float(check_positive(self.doc["T"], "T"))

    @property
    def cfl(self):
        c = float(as_number(self.doc.get("cfl", DEFAULT_CFL), "cfl"))
        if not 0 < c <= 0.5:
            raise ConfigError("must lie in (0, 0.5]", "cfl")
        return c

    @property
    def viscosity(self):
        v = self.doc.get("viscosity", "global")
        if v not in ("global", "local"):
            raise ConfigError("must be 'global' or 'local'", "viscosity")
        return v

    @property
    def sample_times(self):
        spec = self.doc.get("sample_times", {"count": 11})
        T = self.T
        if isinstance(spec, dict):
            count = spec.get("count", 11)
            if isinstance(count, bool) or not isinstance(count, int) or count < 2:
                raise ConfigError("count must be an integer >= 2", "sample_times.count")
            return list(np.linspace(0.0, T, count))
        if not isinstance(spec, list):
            raise ConfigError("expected a list or {count}", "sample_times")
        times = [float(as_number(t, f"sample_times[{i}]")) for i, t in enumerate(spec)]
        for i, t in enumerate(times):
            if t < 0 or t > T:
                raise ConfigError(f"{t} outside [0, T]", f"sample_times[{i}]")
        return times

    def _csv_values(self):
        path = self.doc["initial"]["csv"]
        full = path if os.path.isabs(path) else os.path.join(self.base_dir, path)
        if not os.path.exists(full):
            raise ConfigError(f"file not found: {path}", "initial.csv")
        try:
            vals = np.loadtxt(full, delimiter=",", ndmin=1)
        except ValueError as exc:
            raise ConfigError(f"unreadable CSV: {exc}", "initial.csv") from None
        shape = self.doc["initial"].get("shape")
        if shape is not None:
            vals = vals.reshape(shape)
        elif vals.ndim == 2 and 1 in vals.shape:
            vals = vals.ravel()
        return vals

    def initial_field(self, dims=None):
        """Initial data on ``dims`` (default the scenario grid)."""
        spec = self.doc.get("initial")
        if not isinstance(spec, dict):
            raise ConfigError("missing or not an object", "initial")
        lattice = self.lattice
        if "csv" in spec:
            vals = self._csv_values()
            if dims is not None and tuple(dims) != vals.shape:
                raise ConfigError(f"CSV data has shape {vals.shape}, requested {tuple(dims)}", "initial.csv")
            return PeriodicField(vals, lattice)
        dims = self.dims if dims is None else tuple(dims)
        modes = spec.get("modes", [])
        if not isinstance(modes, list):
            raise ConfigError("expected a list", "initial.modes")
        for i, m in enumerate(modes):
            if not isinstance(m, dict) or "mode" not in m:
                raise ConfigError("each mode needs a 'mode' vector", f"initial.modes[{i}]")
        clip = spec.get("clip")
        if clip is not None and (not isinstance(clip, list) or len(clip) != 2):
            raise ConfigError("expected [lo, hi]", "initial.clip")
        return PeriodicField.from_fourier(
            dims, modes, float(as_number(spec.get("offset", 0.0), "initial.offset")), lattice,
            None if clip is None else [float(c) for c in clip],
        )

    def initial_mean(self):
        """Mean of the initial data, exact where the data form allows it.

        Fourier data without clipping have mean ``offset`` exactly (every
        nonzero mode integrates to zero).  Otherwise the cell average is
        used, snapped to a rational with denominator at most
        ``MEAN_SNAP_DENOMINATOR`` when within ``MEAN_SNAP_TOL`` of one, so
        that rounding does not move the mean off a breakpoint.
        """
        spec = self.doc.get("initial")
        if isinstance(spec, dict) and "csv" not in spec and spec.get("clip") is None:
            modes = spec.get("modes", [])
            if all(any(int(c) != 0 for c in m["mode"]) for m in modes if isinstance(m, dict) and "mode" in m):
                return as_number(spec.get("offset", 0), "initial.offset")
        value = float(np.mean(self.initial_field().data))
        snapped = Fraction(value).limit_denominator(MEAN_SNAP_DENOMINATOR)
        return snapped if abs(float(snapped) - value) <= MEAN_SNAP_TOL else value

    # -- validation -----------------------------------------------------

    def validate(self):
        """Check the common fields eagerly so errors carry their field path."""
        self.seed
        if "flux" in self.doc:
            flux = self.flux
            lat = self.lattice
            if lat.dimension != flux.dimension:
                raise ConfigError(f"lattice is {lat.dimension}-d, flux is {flux.dimension}-d", "lattice")
            if lat.dimension > MAX_DIMENSION:
                raise ConfigError(f"dimension above {MAX_DIMENSION}", "lattice")
        if "T" in self.doc:
            self.T
            self.sample_times
        if "cfl" in self.doc:
            self.cfl
        self.viscosity
        if "grid" in self.doc:
            self.check_dims(self.dims)
        if "initial" in self.doc and isinstance(self.doc["initial"], dict) and "csv" in self.doc["initial"]:
            self._csv_values()
        for name in ("nd2", "decay", "wave", "microscope", "suite"):
            self.block(name)

    def check_dims(self, dims, path="grid", match_lattice=True):
        cells = int(np.prod(dims))
        if len(dims) == 1 and cells > MAX_1D_CELLS or cells > MAX_CELLS:
            raise ConfigError(f"{cells} cells exceed the cap", path)
        if len(dims) > MAX_DIMENSION:
            raise ConfigError(f"more than {MAX_DIMENSION} axes", path)
        if match_lattice and "flux" in self.doc and len(dims) != self.lattice.dimension:
            raise ConfigError(f"grid has {len(dims)} axes, lattice dimension {self.lattice.dimension}", path)
        return dims

    @property
    def config_hash(self):
        return canonical_hash(self.doc)
