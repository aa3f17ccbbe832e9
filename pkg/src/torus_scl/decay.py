"""Decay to the mean: measurement, classification and the non-decaying converse.

``e(t) = int |u(t, x) - I| dx`` is the L1 distance of the solution to its
conserved mean ``I``.  A monotone scheme makes ``e`` non-increasing on any
grid, and numerical diffusion alone drives it to zero on a fixed grid, so
decay is judged from how ``e(T)/e(0)`` moves under grid refinement.
"""

from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np
from scipy import integrate
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ConfigError
from .flux import check_nd2, flux_from_spec
from .lattice import LatticeSpec
from .solver import PeriodicField, Trajectory, cell_centers, mean, solve

THETA_DECAY = 0.2
THETA_STALL = 0.8
WAVE_SHRINK = 0.9
# calibrated once on the N=400 squeeze run (observed 1.09), frozen
SCHEME_ENVELOPE_C = 1.5


def scheme_envelope(h, C=SCHEME_ENVELOPE_C):
    """Scheme-diffusion tolerance ``C h^{1/2}``."""
    return C * math.sqrt(h)


@dataclass
class DecayReport:
    mean: float
    times: np.ndarray
    e_values: np.ndarray
    classification: str = "inconclusive"
    meta: dict = field(default_factory=dict)

    @property
    def terminal_ratio(self):
        e0 = self.e_values[0]
        return 0.0 if e0 == 0 else float(self.e_values[-1] / e0)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "e", "I"])
        for t, e in zip(self.times, self.e_values):
            w.writerow([repr(float(t)), repr(float(e)), repr(float(self.mean))])
        return buf.getvalue()


def decay_curve(source, times=None):
    """The decay functional at every sample time.

    ``source`` is a :class:`~torus_scl.solver.Trajectory`, or a
    :class:`TravelingWave` together with ``times``; the wave is integrated by
    adaptive quadrature instead of grid sampling.
    """
    if isinstance(source, TravelingWave):
        if times is None:
            raise ConfigError("times are required for an analytic wave", "times")
        times = np.asarray(times, dtype=float)
        e = np.array([source.l1_deviation(t) for t in times])
        return DecayReport(float(source.mean), times, e, meta={"source": "analytic"})
    if not isinstance(source, Trajectory):
        raise ConfigError("expected a Trajectory or a TravelingWave", "trajectory")
    I = mean(source.fields[0])
    e = np.array([float(np.mean(np.abs(u - I))) for u in source.fields])
    return DecayReport(I, source.times.copy(), e, meta={"cells": int(np.prod(source.dims)), "dims": list(source.dims)})


class DecayClassifier(BaseEstimator):
    """Classify decay from a set of refinement levels.

    ``fit`` takes :class:`DecayReport` objects sharing their sample times and
    sorts them by cell count.  With terminal ratios ``rho_N = e(T)/e(0)``,
    the run "decays" when the finest ``rho`` is at most ``theta_decay`` and
    ``rho`` either never exceeds it or is non-increasing under refinement.
    It "stalls" when ``rho`` strictly increases with refinement and the
    finest level reaches ``theta_stall``: the apparent decay is numerical
    diffusion that disappears in the limit.  Anything else is
    "inconclusive".  A single report is accepted only when ``e`` vanishes
    identically.
    """

    def __init__(self, theta_decay=THETA_DECAY, theta_stall=THETA_STALL):
        self.theta_decay = theta_decay
        self.theta_stall = theta_stall

    def fit(self, reports, y=None):
        reports = list(reports)
        # e == 0 is decay without any refinement evidence
        if len(reports) < 2 and not (reports and np.all(reports[0].e_values == 0)):
            raise ConfigError("need at least two refinement levels", "refinements")
        t0 = reports[0].times
        for i, r in enumerate(reports):
            if len(r.times) != len(t0) or not np.allclose(r.times, t0, rtol=0, atol=1e-12):
                raise ConfigError("inconsistent sample grids", f"refinements[{i}]")
        reports.sort(key=lambda r: r.meta.get("cells", 0))
        rho = np.array([r.terminal_ratio for r in reports])
        self.ratios_ = rho
        self.cells_ = [r.meta.get("cells") for r in reports]
        finest = rho[-1]
        if finest <= self.theta_decay and (
            np.all(rho <= self.theta_decay) or np.all(np.diff(rho) <= 1e-12)
        ):
            self.classification_ = "decays"
        elif np.all(np.diff(rho) > 0) and finest >= self.theta_stall:
            self.classification_ = "stalls"
        else:
            self.classification_ = "inconclusive"
        for r in reports:
            r.classification = self.classification_
        return self

    def predict(self, X=None):
        check_is_fitted(self, "classification_")
        return self.classification_


def classify_decay(report, refinements=(), theta_decay=THETA_DECAY, theta_stall=THETA_STALL):
    """Functional form of :class:`DecayClassifier` over ``[report, *refinements]``."""
    levels = [report] + [r for r in refinements if r is not report]
    return DecayClassifier(theta_decay, theta_stall).fit(levels).predict()


@dataclass(frozen=True)
class TravelingWave:
    """Exact entropy solution ``I + delta sin(2 pi (xi . x - a t))``.

    Valid because ``xi . phi`` is affine with slope ``a`` on the whole range
    ``[I - delta, I + delta]``.  ``mode`` holds the integer lattice
    coordinates ``B^T xi``, so on the grid the wave is
    ``I + delta sin(2 pi (mode . y - a t))``.
    """

    xi: tuple
    a: object
    b: object
    delta: float
    mean: object
    mode: tuple
    lattice: LatticeSpec = field(repr=False)

    def physical(self, t, *x):
        arg = sum(float(c) * xc for c, xc in zip(self.xi, x))
        return float(self.mean) + self.delta * np.sin(2 * np.pi * (arg - float(self.a) * t))

    def __call__(self, t, *y):
        arg = sum(c * yc for c, yc in zip(self.mode, y))
        return float(self.mean) + self.delta * np.sin(2 * np.pi * (arg - float(self.a) * t))

    def sample(self, dims, t=0.0):
        """Cell-midpoint values at time ``t``."""
        return np.asarray(self(t, *cell_centers(tuple(dims))), dtype=float)

    def initial_field(self, dims):
        return PeriodicField(self.sample(dims), self.lattice)

    def descriptor(self):
        """Initial data as a scenario Fourier spec."""
        return {
            "offset": float(self.mean),
            "modes": [{"mode": list(self.mode), "amplitude": self.delta, "phase": 0.0}],
        }

    def l1_deviation(self, t):
        """``int |u(t) - I|`` over the torus.

        ``mode . y`` is equidistributed mod 1 for a nonzero integer mode, so
        the torus integral reduces to one period of the phase.
        """
        shift = (float(self.a) * t) % 1.0
        f = lambda s: abs(np.sin(2 * np.pi * (s - shift)))
        pts = sorted({shift % 0.5, shift % 0.5 + 0.5})
        val, _ = integrate.quad(f, 0.0, 1.0, points=pts, epsabs=1e-14, epsrel=1e-14, limit=200)
        return self.delta * val

    def rescaled(self, k):
        """``u(k t, k x)``: the same wave with mode and speed multiplied by ``k``."""
        return TravelingWave(
            tuple(k * c for c in self.xi), k * self.a, self.b, self.delta, self.mean,
            tuple(k * c for c in self.mode), self.lattice,
        )


def traveling_wave(flux, lattice, I, R=None, shrink=WAVE_SHRINK):
    """Non-decaying exact solution when the decay criterion fails at ``I``, else ``None``.

    The first (shortest) witness ``xi`` is used, and the amplitude is
    ``shrink * min(I - l, r - I)`` for its affine interval ``[l, r]``.  A
    flux affine on all of ``R`` gets amplitude ``shrink``.
    """
    report = check_nd2(flux, lattice, I, R)
    if report.holds:
        return None
    w = report.witnesses[0]
    I = report.mean
    room = min(I - w.lo, w.hi - I)
    delta = shrink * (1.0 if math.isinf(float(room)) else float(room))
    mode = np.rint(lattice.dual_coefficients([float(c) for c in w.xi])).astype(int)
    return TravelingWave(w.xi, w.slope, w.intercept, delta, I, tuple(int(c) for c in mode), lattice)


def wave_l1_error(trajectory, wave):
    """L1 distance between the final solver state and the exact wave, on cell midpoints."""
    T = float(trajectory.times[-1])
    return float(np.mean(np.abs(trajectory.fields[-1] - wave.sample(trajectory.dims, T))))


def min_shift_distance(u, v):
    """``min_s mean|u - roll(v, s)|`` over integer cell shifts (1-D fields)."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if u.ndim != 1 or u.shape != v.shape:
        raise ConfigError("min_shift_distance expects equal 1-D fields", "field")
    return min(float(np.mean(np.abs(u - np.roll(v, s)))) for s in range(len(u)))


def comparison_check(flux, u0a, u0b, T, sample_times=None, cfl=0.45, tol=1e-12):
    """Monotone dependence on data: ``u0a <= u0b`` implies ``u_a(t) <= u_b(t)``.

    Both runs share one time step (CFL bound over the union of the ranges),
    so they are the same monotone map applied to ordered data.
    """
    a, b = u0a.data, u0b.data
    if a.shape != b.shape:
        raise ConfigError("initial fields differ in shape", "u0b")
    if np.any(a > b):
        raise ConfigError("precondition u0a <= u0b violated", "u0a")
    rng = (float(min(a.min(), b.min())), float(max(a.max(), b.max())))
    ta = solve(flux, u0a, T, sample_times, cfl=cfl, state_range=rng)
    tb = solve(flux, u0b, T, sample_times, cfl=cfl, state_range=rng)
    return all(np.all(ua <= ub + tol) for ua, ub in zip(ta.fields, tb.fields))


@dataclass
class SqueezeReport:
    """Per-time violations of ``u(t, x-t) >= v_-(x)`` and ``u(t, x+t) <= v_+(x)``."""

    times: np.ndarray
    lower_violation: np.ndarray
    upper_violation: np.ndarray
    tolerance: float

    @property
    def passed(self):
        return bool(
            np.all(self.lower_violation <= self.tolerance) and np.all(self.upper_violation <= self.tolerance)
        )


def squeeze_check(u0, T, n_samples=8, cfl=0.45, C=SCHEME_ENVELOPE_C):
    """Check the ordering ``v_- <= u <= v_+`` along the characteristics of ``|u|``.

    Here ``v_+ = max(u0, 0)`` moves right and ``v_- = min(u0, 0)`` moves left
    with unit speed.  Sample times are whole numbers of cells of travel, so
    the shift is an exact index roll.  Requires one space dimension and data
    of both signs.
    """
    if u0.lattice.dimension != 1:
        raise ConfigError("squeeze check is one-dimensional", "lattice")
    data = u0.data
    if not (np.any(data > 0) and np.any(data < 0)):
        raise ConfigError("initial data must take both signs", "initial")
    N = data.shape[0]
    period = float(u0.lattice.generators[0, 0])
    # one cell of travel in lattice coordinates takes period * h time units
    cell_time = abs(period) / N
    total = int(math.floor(T / cell_time + 1e-9))
    shifts = sorted({int(round(j * total / n_samples)) for j in range(n_samples + 1)})
    times = [s * cell_time for s in shifts]
    flux = flux_from_spec("abs")
    traj = solve(flux, u0, times[-1], times, cfl=cfl)
    vp, vm = np.maximum(data, 0.0), np.minimum(data, 0.0)
    sign = 1 if period > 0 else -1
    lower, upper = [], []
    for s, u in zip(shifts, traj.fields[: len(shifts)]):
        lower.append(max(0.0, float(np.max(vm - np.roll(u, sign * s)))))
        upper.append(max(0.0, float(np.max(np.roll(u, -sign * s) - vp))))
    return SqueezeReport(np.array(times), np.array(lower), np.array(upper), scheme_envelope(1.0 / N, C))
