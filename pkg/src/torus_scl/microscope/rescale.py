"""Rescaled sequences ``u_k(t, y) = u(k t, k y)`` on a fixed evaluation grid."""

import numpy as np

from .._validation import ConfigError
from ..decay import TravelingWave
from ..solver import Trajectory


def _midpoints(N):
    return (np.arange(N) + 0.5) / N


def rescaled_sample_times(k_list, n_time):
    """Source times ``k t_j`` needed to rescale onto ``n_time`` midpoints of ``[0, 1]``."""
    t = _midpoints(n_time)
    return sorted({float(k * tj) for k in k_list for tj in t})


def rescale_sequence(source, k_list, eval_shape, time_axis=True, t0=0.0):
    """Fields ``u_k`` for every ``k`` in ``k_list``, sampled on cell midpoints.

    Parameters
    ----------
    source : Trajectory, TravelingWave or callable ``f(t, *y)``
        The solution ``u``.  A trajectory is sampled by nearest neighbour in
        space and time; the others are evaluated directly.
    k_list : sequence of int
        Strictly increasing positive integers.
    eval_shape : tuple of int
        ``(n_time, N_1, ..., N_n)`` when ``time_axis`` is set, else the
        spatial grid.
    time_axis : bool
        Produce space-time fields over the unit time interval; otherwise
        static snapshots at time ``k t0``.

    Returns
    -------
    list of ndarray
    """
    ks = [int(k) for k in k_list]
    if not ks or any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigError("k_list must be strictly increasing positive integers", "k_list")
    eval_shape = tuple(int(n) for n in eval_shape)
    space_shape = eval_shape[1:] if time_axis else eval_shape
    times = _midpoints(eval_shape[0]) if time_axis else np.array([t0])

    if isinstance(source, Trajectory):
        if len(space_shape) != len(source.dims):
            raise ConfigError("evaluation grid and trajectory differ in dimension", "eval_shape")
        return [_from_trajectory(source, k, times, space_shape, time_axis) for k in ks]
    if isinstance(source, TravelingWave) or callable(source):
        out = []
        for k in ks:
            grids = np.meshgrid(times * k, *[_midpoints(N) * k % 1.0 for N in space_shape], indexing="ij")
            vals = np.asarray(source(*grids), dtype=float) * np.ones(grids[0].shape)
            out.append(vals if time_axis else vals[0])
        return out
    raise ConfigError("source must be a Trajectory, a TravelingWave or a callable", "source")


def _from_trajectory(traj, k, times, space_shape, time_axis):
    src = traj.dims
    for ax, (Ne, Ns) in enumerate(zip(space_shape, src)):
        if k * Ne > Ns:
            raise ConfigError(
                f"resolution insufficient: k={k} needs {k * Ne} source cells on axis {ax}, have {Ns}",
                "k_list",
            )
    idx = [np.floor((k * _midpoints(Ne) % 1.0) * Ns).astype(int) % Ns for Ne, Ns in zip(space_shape, src)]
    dt_eval = (times[1] - times[0]) if len(times) > 1 else 1.0
    half_gap = 0.5 * k * dt_eval + 1e-9
    frames = []
    for t in times:
        target = k * t
        j = int(np.argmin(np.abs(traj.times - target)))
        if abs(traj.times[j] - target) > half_gap:
            raise ConfigError(
                f"no trajectory sample near t={target:g} (nearest {traj.times[j]:g})", "trajectory.times"
            )
        frames.append(traj.fields[j][np.ix_(*idx)])
    stack = np.stack(frames)
    return stack if time_axis else stack[0]
