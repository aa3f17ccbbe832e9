"""Monotone finite-volume solver for ``u_t + div phi(u) = 0`` on a torus.

The torus ``R^n / L`` is discretised in lattice coordinates ``y = B^{-1} x``
(the unit cube with periodic wrap), where the equation reads
``u_t + div_y (B^{-1} phi)(u) = 0``.  Each time step is a dimension-split
sequence of conservative updates with the local Lax-Friedrichs (Rusanov)
flux

    F(a, b) = (phi_d(a) + phi_d(b)) / 2 - alpha(a, b) (b - a) / 2,

where ``alpha`` bounds ``|phi_d'|``.  By default (``viscosity="global"``)
``alpha`` is the bound over the whole state range of the run, which keeps the
scheme monotone for every PL flux.  The two-cell bound
(``viscosity="local"``) is less diffusive, but the flux then jumps whenever
the bound does, and monotonicity can fail on coarse PL fluxes.  The split
order alternates between steps.
"""

from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np

from ._validation import ConfigError, as_number, check_field, check_positive
from .flux import FluxPL
from .lattice import LatticeSpec

DEFAULT_CFL = 0.45
MAX_DIMENSION = 3
CONSERVATION_TOL = 1e-12
MAXIMUM_PRINCIPLE_TOL = 1e-12


class CFLError(ConfigError):
    pass


@dataclass(frozen=True)
class PeriodicField:
    """Cell averages on the torus, indexed in lattice coordinates."""

    data: np.ndarray
    lattice: LatticeSpec

    def __post_init__(self):
        data = check_field(self.data, "field")
        if data.ndim != self.lattice.dimension:
            raise ConfigError(
                f"field has {data.ndim} axes but the lattice dimension is {self.lattice.dimension}", "grid"
            )
        object.__setattr__(self, "data", data)

    @property
    def dims(self):
        return self.data.shape

    @property
    def spacing(self):
        return tuple(1.0 / N for N in self.dims)

    @classmethod
    def from_function(cls, func, dims, lattice=None):
        """Sample ``func(*y)`` at cell midpoints of the unit lattice cell."""
        dims = tuple(int(N) for N in dims)
        lattice = lattice or LatticeSpec.integer(len(dims))
        return cls(func(*cell_centers(dims)), lattice)

    @classmethod
    def from_fourier(cls, dims, modes=(), offset=0.0, lattice=None, clip=None):
        """``offset + sum A sin(2 pi m.y + phase)`` sampled at cell midpoints.

        ``modes`` is a sequence of dicts with keys ``mode`` (integer vector in
        lattice coordinates), ``amplitude`` and optional ``phase``.
        """
        dims = tuple(int(N) for N in dims)
        ys = cell_centers(dims)
        u = np.full(dims, float(offset))
        for i, m in enumerate(modes):
            mode = [int(c) for c in np.atleast_1d(m["mode"])]
            if len(mode) != len(dims):
                raise ConfigError(f"mode has {len(mode)} entries, grid has {len(dims)}", f"initial.modes[{i}]")
            arg = sum(c * y for c, y in zip(mode, ys))
            u = u + float(m.get("amplitude", 1.0)) * np.sin(2 * np.pi * arg + float(m.get("phase", 0.0)))
        if clip is not None:
            u = np.clip(u, clip[0], clip[1])
        return cls(u, lattice or LatticeSpec.integer(len(dims)))


def cell_centers(dims):
    """Midpoint coordinate arrays (``indexing='ij'``) of a uniform unit-cube grid."""
    axes = [(np.arange(N) + 0.5) / N for N in dims]
    return np.meshgrid(*axes, indexing="ij") if len(dims) > 1 else axes


def mean(field):
    """Normalised torus integral of the piecewise-constant field."""
    data = field.data if isinstance(field, PeriodicField) else np.asarray(field, dtype=float)
    return float(np.mean(data))


class _RangeMax:
    """Sparse table answering max over index ranges, vectorised."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        levels = [values]
        k = 1
        while 2 * k <= len(values):
            prev = levels[-1]
            levels.append(np.maximum(prev[:-k], prev[k:]))
            k *= 2
        width = len(values)
        self._table = np.stack([np.pad(lv, (0, width - len(lv)), constant_values=-np.inf) for lv in levels])

    def __call__(self, lo, hi):
        span = hi - lo + 1
        k = np.floor(np.log2(span)).astype(int)
        return np.maximum(self._table[k, lo], self._table[k, hi - (1 << k) + 1])


class GridFlux:
    """Float view of the lattice-coordinate flux used by the scheme."""

    def __init__(self, flux, lattice, viscosity="global"):
        if viscosity not in ("local", "global"):
            raise ConfigError("viscosity must be 'local' or 'global'", "viscosity")
        if flux.dimension != lattice.dimension:
            raise ConfigError("flux and lattice dimensions differ", "flux")
        if lattice.dimension > MAX_DIMENSION:
            raise ConfigError(f"at most {MAX_DIMENSION} space dimensions", "lattice")
        self.physical = flux
        self.flux = flux.pushed_forward(lattice)
        self.viscosity = viscosity
        bp, vals, slopes = self.flux._numeric
        self._bp = bp
        self._slopes = slopes
        self._range_max = [_RangeMax(np.abs(slopes[:, d])) for d in range(flux.dimension)]
        self._global_alpha = None

    @property
    def dimension(self):
        return self.flux.dimension

    def values(self, u, d):
        return self.flux.component_values(u, d)

    def slope_bound(self, lo, hi, d):
        """Max ``|phi_d'|`` over ``[lo, hi]`` (arrays, elementwise)."""
        J = self._slopes.shape[0]
        i0 = np.clip(np.searchsorted(self._bp, lo, side="right") - 1, 0, J - 1)
        i1 = np.clip(np.searchsorted(self._bp, hi, side="left") - 1, 0, J - 1)
        return self._range_max[d](np.minimum(i0, i1), np.maximum(i0, i1))

    def fix_range(self, lo, hi):
        """Freeze the state range used for the CFL bound and global viscosity."""
        self._global_alpha = np.array(
            [float(self.slope_bound(np.array([lo]), np.array([hi]), d)[0]) for d in range(self.dimension)]
        )
        return self._global_alpha

    def alpha(self, a, b, d):
        if self.viscosity == "global":
            return self._global_alpha[d]
        return self.slope_bound(np.minimum(a, b), np.maximum(a, b), d)

    def numerical_flux(self, a, b, d):
        return 0.5 * (self.values(a, d) + self.values(b, d)) - 0.5 * self.alpha(a, b, d) * (b - a)


def cfl_limit(field, flux, cfl=DEFAULT_CFL, state_range=None):
    """Largest stable ``dt``: ``cfl * min_d h_d / alpha_d`` over the state range."""
    grid = flux if isinstance(flux, GridFlux) else GridFlux(flux, field.lattice)
    lo, hi = state_range or (float(field.data.min()), float(field.data.max()))
    alphas = grid.fix_range(lo, hi)
    limits = [h / a for h, a in zip(field.spacing, alphas) if a > 0]
    return cfl * min(limits) if limits else math.inf


def _sweep(u, grid, d, lam):
    right = np.roll(u, -1, axis=d)
    F = grid.numerical_flux(u, right, d)
    return u - lam * (F - np.roll(F, 1, axis=d))


def _step(u, grid, dt, spacing, order, record=None):
    for d in order:
        v = _sweep(u, grid, d, dt / spacing[d])
        if record is not None:
            record.append((d, dt, u))
        u = v
    return u


def step(field, flux, dt, cfl=0.5, order=None):
    """Advance one split time step of size ``dt``.

    Raises :class:`CFLError` when ``dt`` exceeds ``cfl_limit(field, flux, cfl)``.
    ``cfl`` may be raised to 1 (the monotonicity limit of each sweep).
    """
    if not 0 < cfl <= 1:
        raise ConfigError("cfl must lie in (0, 1]", "cfl")
    grid = flux if isinstance(flux, GridFlux) else GridFlux(flux, field.lattice)
    limit = cfl_limit(field, grid, cfl)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt} exceeds the CFL limit {limit}", "dt")
    order = tuple(range(field.lattice.dimension)) if order is None else tuple(order)
    u = _step(field.data, grid, dt, field.spacing, order)
    _check_max_principle(field.data, u)
    return PeriodicField(u, field.lattice)


def _check_max_principle(before, after):
    lo, hi = before.min(), before.max()
    if after.min() < lo - MAXIMUM_PRINCIPLE_TOL or after.max() > hi + MAXIMUM_PRINCIPLE_TOL:
        raise RuntimeError("discrete maximum principle violated; scheme is not monotone at this dt")


@dataclass
class Trajectory:
    """Time samples ``u(t_i, .)`` of one solver run.

    ``substeps`` holds ``(axis, dt, state_before)`` for every sweep and
    ``final_state`` the state after the last sweep, but only when the run
    had diagnostics enabled.
    """

    times: np.ndarray
    fields: list
    lattice: LatticeSpec
    flux: FluxPL
    cfl: float
    viscosity: str = "global"
    dt_max: float = math.inf
    n_steps: int = 0
    state_range: tuple = None
    substeps: list = field(default=None, repr=False)
    final_state: np.ndarray = field(default=None, repr=False)

    @property
    def dims(self):
        return self.fields[0].shape

    def field(self, i):
        return PeriodicField(self.fields[i], self.lattice)

    def at(self, t):
        """Field at the sample time closest to ``t``."""
        return self.fields[int(np.argmin(np.abs(self.times - t)))]

    def to_csv(self):
        """CSV text with header ``t, i0[, i1, i2], value``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = len(self.dims)
        w.writerow(["t"] + [f"i{d}" for d in range(n)] + ["value"])
        for t, u in zip(self.times, self.fields):
            for idx in np.ndindex(u.shape):
                w.writerow([repr(float(t))] + list(idx) + [repr(float(u[idx]))])
        return buf.getvalue()


def solve(flux, u0, T, sample_times=None, cfl=DEFAULT_CFL, diagnostics=False, viscosity="global",
          state_range=None):
    """Approximate the periodic entropy solution up to time ``T``.

    The time step is fixed from the CFL bound over the initial state range
    (the discrete maximum principle keeps the solution inside it) and shrunk
    on each interval between consecutive sample times so that every sample
    time is hit exactly.

    Parameters
    ----------
    flux : FluxPL
        Physical flux ``phi``.
    u0 : PeriodicField
        Initial cell averages.
    T : float
        Final time, positive.
    sample_times : sequence of float, optional
        Output times within ``[0, T]``; ``0`` and ``T`` are always included.
    cfl : float
        Courant number, in ``(0, 0.5]``.
    diagnostics : bool
        Keep every sweep so that :func:`entropy_residual` can be evaluated.
    viscosity : {"global", "local"}
        ``alpha`` from the whole state range (monotone) or from the two
        neighbouring states.
    state_range : (float, float), optional
        Override the state range used for the CFL bound, so that several
        runs can share one time step.

    Returns
    -------
    Trajectory
    """
    T = float(check_positive(T, "T"))
    cfl = float(as_number(cfl, "cfl"))
    if not 0 < cfl <= 0.5:
        raise ConfigError("cfl must lie in (0, 0.5]", "cfl")
    times = sorted({0.0, T} | {float(t) for t in (() if sample_times is None else sample_times)})
    if times[0] < 0 or times[-1] > T * (1 + 1e-12):
        raise ConfigError("sample times must lie in [0, T]", "sample_times")
    grid = GridFlux(flux, u0.lattice, viscosity)
    lo, hi = state_range or (float(u0.data.min()), float(u0.data.max()))
    dt_max = cfl_limit(u0, grid, cfl, (lo, hi))
    spacing = u0.spacing
    dim = u0.lattice.dimension
    record = [] if diagnostics else None

    u = u0.data.copy()
    fields = [u.copy()]
    n_steps = 0
    for t0, t1 in zip(times, times[1:]):
        span = t1 - t0
        count = 1 if math.isinf(dt_max) else max(1, math.ceil(span / dt_max * (1 - 1e-12)))
        dt = span / count
        for _ in range(count):
            order = range(dim) if n_steps % 2 == 0 else range(dim - 1, -1, -1)
            u = _step(u, grid, dt, spacing, order, record)
            n_steps += 1
        _check_max_principle(u0.data, u)
        fields.append(u.copy())
    return Trajectory(
        times=np.array(times),
        fields=fields,
        lattice=u0.lattice,
        flux=flux,
        cfl=cfl,
        viscosity=viscosity,
        dt_max=dt_max,
        n_steps=n_steps,
        state_range=(lo, hi),
        substeps=record,
        final_state=u.copy() if diagnostics else None,
    )


def entropy_residual(trajectory, k):
    """Largest positive discrete Kruzhkov residual over all sweeps.

    For each sweep ``u -> v`` along axis ``d`` the residual

        |v - k| - |u - k| + (dt/h) (G_{i+1/2} - G_{i-1/2}),
        G(a, b) = F(a v k, b v k) - F(a ^ k, b ^ k),

    is the discrete form of ``|u-k|_t + div[sign(u-k)(phi(u)-phi(k))]``.
    A monotone scheme keeps it ``<= 0`` up to rounding.
    """
    if trajectory.substeps is None:
        raise ConfigError("trajectory was produced without diagnostics", "diagnostics")
    grid = GridFlux(trajectory.flux, trajectory.lattice, trajectory.viscosity)
    grid.fix_range(*trajectory.state_range)
    k = float(k)
    spacing = tuple(1.0 / N for N in trajectory.dims)
    worst = 0.0
    states = [s for _, _, s in trajectory.substeps] + [trajectory.final_state]
    for j, (d, dt, u) in enumerate(trajectory.substeps):
        v = states[j + 1]
        right = np.roll(u, -1, axis=d)
        G = grid.numerical_flux(np.maximum(u, k), np.maximum(right, k), d) - grid.numerical_flux(
            np.minimum(u, k), np.minimum(right, k), d
        )
        r = np.abs(v - k) - np.abs(u - k) + dt / spacing[d] * (G - np.roll(G, 1, axis=d))
        worst = max(worst, float(r.max()))
    return worst
