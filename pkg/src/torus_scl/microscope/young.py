"""Empirical Young measures and distribution functions of oscillating sequences.

For a bounded sequence ``u_r`` the Young measure ``nu_x`` is recorded through
its distribution function ``u0(x, p) = nu_x((p, +inf))`` on a finite grid of
levels ``p``.  The domain is cut into a regular grid of windows and
``u0(w, p)`` is the fraction of pooled samples in window ``w`` strictly above
``p`` (so the Heaviside convention is ``theta(0) = 0``).  Samples are pooled
over the most oscillatory members of the sequence.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import ConfigError, check_field, check_field_list

N_LEVELS = 17


def _window_index(shape, windows):
    """Per-axis window labels for a grid of ``shape`` cut into ``windows`` blocks."""
    return [np.minimum((np.arange(N) * W) // N, W - 1) for N, W in zip(shape, windows)]


def _flat_labels(shape, windows):
    labels = _window_index(shape, windows)
    return np.ravel_multi_index(np.meshgrid(*labels, indexing="ij"), windows).ravel()


def _normalise_windows(windows, ndim):
    if np.isscalar(windows):
        windows = (int(windows),) * ndim
    windows = tuple(int(w) for w in windows)
    if len(windows) != ndim:
        raise ConfigError(f"windows must have {ndim} entries", "windows")
    if any(w < 1 for w in windows):
        raise ConfigError("window counts must be positive", "windows")
    return windows


def default_p_grid(samples, n_levels=N_LEVELS, margin=0.01):
    """Uniform levels over ``[min - eps, max + eps]`` moved off any atom of the samples.

    A level hit exactly by a sample value is shifted up by half a grid step;
    ``eps`` is ``margin`` times the data range (or ``1e-3`` for constant data).
    """
    lo, hi = float(np.min(samples)), float(np.max(samples))
    span = hi - lo
    eps = margin * span if span > 0 else 1e-3 * max(1.0, abs(lo))
    grid = np.linspace(lo - eps, hi + eps, n_levels)
    step = grid[1] - grid[0]
    values = np.unique(samples)
    for i, p in enumerate(grid):
        j = np.searchsorted(values, p)
        near = [values[k] for k in (j - 1, j) if 0 <= k < len(values)]
        if any(abs(v - p) <= 1e-12 * max(1.0, abs(p)) for v in near):
            grid[i] = p + step / 2
    return grid


@dataclass(frozen=True)
class YoungMeasureEstimate:
    """Windowed distribution functions ``u0_table[w..., l] = nu_w((p_l, +inf))``."""

    p_grid: np.ndarray
    u0_table: np.ndarray
    windows: tuple
    shape: tuple
    counts: np.ndarray

    def level_index(self, p):
        """Index of ``p`` in the grid; ``p`` must be a grid level."""
        idx = np.flatnonzero(np.isclose(self.p_grid, p, rtol=0, atol=1e-12))
        if len(idx) == 0:
            raise ConfigError(f"level {p!r} is not on the p-grid", "p")
        return int(idx[0])

    def u0_field(self, shape=None):
        """``u0(window(x), p)`` broadcast to every cell, shape ``(L,) + shape``."""
        shape = self.shape if shape is None else tuple(shape)
        labels = _window_index(shape, self.windows)
        table = self.u0_table
        for ax, lab in enumerate(labels):
            table = np.take(table, lab, axis=ax)
        return np.moveaxis(table, -1, 0)

    def interval_mass(self, window=None):
        """``nu((p_l, p_{l+1}])`` for adjacent levels, at one window or all windows."""
        t = self.u0_table if window is None else self.u0_table[tuple(window)]
        return t[..., :-1] - t[..., 1:]

    def window_of(self, point):
        """Window multi-index of a point of the unit cell."""
        return tuple(min(int(np.floor(c * W)), W - 1) for c, W in zip(point, self.windows))

    def to_json(self):
        return {
            "p_grid": [float(p) for p in self.p_grid],
            "windows": list(self.windows),
            "u0": np.round(self.u0_table, 15).reshape(-1, len(self.p_grid)).tolist(),
        }


@dataclass(frozen=True)
class DistributionField:
    """``U_r(x, p) = theta(u_r(x) - p) - u0(x, p)``, shape ``(L,) + field shape``."""

    p_grid: np.ndarray
    values: np.ndarray

    def window_means(self, windows):
        """Average of each level's field over a regular grid of windows."""
        shape = self.values.shape[1:]
        windows = _normalise_windows(windows, len(shape))
        label = _flat_labels(shape, windows)
        n_win = int(np.prod(windows))
        counts = np.bincount(label, minlength=n_win)
        flat = self.values.reshape(len(self.values), -1)
        sums = np.stack([np.bincount(label, weights=row, minlength=n_win) for row in flat])
        return (sums / counts).reshape((len(self.values),) + windows)


class YoungMeasureEstimator(TransformerMixin, BaseEstimator):
    """Estimate the Young measure of a sequence from its most oscillatory members.

    Parameters
    ----------
    p_grid : array-like, optional
        Strictly increasing levels.  Default: :func:`default_p_grid` with
        ``n_levels`` levels over the pooled samples.
    n_levels : int
        Size of the default grid.
    windows : int or tuple of int
        Number of windows per axis.
    pool : float
        Fraction of the sequence (taken from the end) whose samples are
        pooled; ``0.5`` is the top half.

    Attributes
    ----------
    estimate_ : YoungMeasureEstimate
    """

    def __init__(self, p_grid=None, n_levels=N_LEVELS, windows=1, pool=0.5):
        self.p_grid = p_grid
        self.n_levels = n_levels
        self.windows = windows
        self.pool = pool

    def fit(self, fields, y=None):
        """Fit on a list of fields ordered by increasing oscillation index ``r``."""
        stack = check_field_list(fields, "fields")
        if len(stack) < 2:
            raise ConfigError("need fields for at least two values of r", "fields")
        if not 0 < self.pool <= 1:
            raise ConfigError("pool must lie in (0, 1]", "pool")
        n_pool = max(1, int(np.ceil(len(stack) * self.pool)))
        pooled = stack[len(stack) - n_pool:]
        shape = pooled.shape[1:]
        windows = _normalise_windows(self.windows, len(shape))
        if any(W > N for W, N in zip(windows, shape)):
            raise ConfigError("empty windows: more windows than cells", "windows")
        if self.p_grid is None:
            grid = default_p_grid(pooled, self.n_levels)
        else:
            grid = np.asarray(self.p_grid, dtype=float)
            if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
                raise ConfigError("p_grid must be strictly increasing with >= 2 levels", "p_grid")
        flat_label = _flat_labels(shape, windows)
        n_win = int(np.prod(windows))
        counts = np.bincount(flat_label, minlength=n_win) * n_pool
        if np.any(counts == 0):
            raise ConfigError("empty windows", "windows")
        vals = pooled.reshape(n_pool, -1)
        table = np.empty((n_win, len(grid)))
        for l, p in enumerate(grid):
            above = (vals > p).sum(axis=0)
            table[:, l] = np.bincount(flat_label, weights=above, minlength=n_win)
        table /= counts[:, None]
        self.estimate_ = YoungMeasureEstimate(
            grid, table.reshape(windows + (len(grid),)), windows, tuple(shape), counts.reshape(windows)
        )
        return self

    def transform(self, field):
        """Distribution field of one member ``u_r`` of the sequence."""
        check_is_fitted(self, "estimate_")
        return distribution_field(field, self.estimate_)


def young_estimate(fields, p_grid=None, windows=1, n_levels=N_LEVELS, pool=0.5):
    """Functional form of :class:`YoungMeasureEstimator`."""
    return YoungMeasureEstimator(p_grid, n_levels, windows, pool).fit(fields).estimate_


def distribution_field(field, young, p=None):
    """``U_r(x, p)`` for all grid levels, or for the single level ``p``.

    Returns a :class:`DistributionField`; with ``p`` given the level axis has
    length one.  ``p`` must be a grid level.
    """
    u = check_field(field, "field")
    levels = young.p_grid
    if p is not None:
        levels = levels[[young.level_index(p)]]
    u0 = young.u0_field(u.shape)
    if p is not None:
        u0 = u0[[young.level_index(p)]]
    theta = (u[None, ...] > levels.reshape((-1,) + (1,) * u.ndim)).astype(float)
    return DistributionField(levels.copy(), theta - u0)
