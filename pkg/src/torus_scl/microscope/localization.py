"""Mass of a space-time H-measure near the directions ``(tau, xi)``, ``xi`` in the dual lattice.

For a fixed ``xi`` the directions ``(tau, xi)/|(tau, xi)|`` sweep a half great
circle from pole to pole, so the set is a union of great circles through the
time poles.  The angular distance of a unit vector ``v = (v_t, v_x)`` to the
circle through ``xi`` is the arcsine of the part of ``v_x`` orthogonal to
``xi``.  With one space dimension every direction off the poles lies on such
a circle, so the test only has content in two or more space dimensions.
"""

from dataclasses import dataclass

import numpy as np

from .._validation import ConfigError
from ..lattice import enumerate_dual


@dataclass(frozen=True)
class LocalizationReport:
    fraction: float
    pole_fraction: float
    baseline: float
    angular_tol: float
    radius: float
    n_directions: int

    def to_json(self):
        return {k: (float(v) if isinstance(v, float) else v) for k, v in self.__dict__.items()}


def dual_directions(lattice, R):
    """Distinct unit spatial directions of nonzero dual vectors with ``|xi| <= R``, up to sign."""
    vecs = np.asarray(enumerate_dual(lattice, R), dtype=float)
    if len(vecs) == 0:
        raise ConfigError("no nonzero dual vector within the radius", "R")
    unit = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    # identify xi and -xi: make the first nonzero component positive
    first = np.argmax(np.abs(unit) > 1e-12, axis=1)
    unit *= np.sign(unit[np.arange(len(unit)), first])[:, None]
    return np.unique(np.round(unit, 12), axis=0)


def s0_distance(directions, lattice, R):
    """Angular distance of unit space-time directions to the truncated ``S_0``."""
    v = np.asarray(directions, dtype=float)
    n = lattice.dimension
    if v.shape[-1] != n + 1:
        raise ConfigError(f"directions must have {n + 1} components for an {n}-d lattice", "bins")
    u = dual_directions(lattice, R)
    vs = v[..., 1:]
    along = vs @ u.T
    perp2 = np.sum(vs ** 2, axis=-1)[..., None] - along ** 2
    return np.arcsin(np.sqrt(np.clip(perp2.min(axis=-1), 0.0, 1.0)))


def pole_distance(directions):
    v = np.asarray(directions, dtype=float)
    return np.arccos(np.clip(np.abs(v[..., 0]), 0.0, 1.0))


def cap_baseline(bins, lattice, angular_tol, R, samples=200000, seed=0):
    """Fraction of the sphere (by uniform Monte-Carlo) whose bin is counted as near ``S_0``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, bins.dimension))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    near = s0_distance(bins.centers, lattice, R) <= angular_tol
    return float(near[bins.assign(x)].mean())


def localization_mass(H, lattice, angular_tol, R=None, kind="variation", seed=0):
    """Fraction of ``H``'s mass in bins whose centre is within ``angular_tol`` of ``S_0``.

    ``S_0`` is truncated to dual vectors with ``|xi| <= R`` (default: the
    lattice's default radius).  Bins within ``angular_tol`` of a time pole
    count only through some circle, which always reaches the pole; their
    mass is reported separately as ``pole_fraction``.
    """
    if not H.time_axis:
        raise ConfigError("localization needs space-time bins", "H")
    if H.bins.dimension != lattice.dimension + 1:
        raise ConfigError("dimension mismatch between H bins and lattice", "lattice")
    R = lattice.default_radius() if R is None else float(R)
    mass = H.bin_mass(kind)
    total = float(mass.sum())
    near = s0_distance(H.bins.centers, lattice, R) <= angular_tol
    pole = pole_distance(H.bins.centers) <= angular_tol
    frac = 0.0 if total <= 0 else float(mass[near].sum() / total)
    pfrac = 0.0 if total <= 0 else float(mass[pole].sum() / total)
    base = cap_baseline(H.bins, lattice, angular_tol, R, seed=seed)
    return LocalizationReport(frac, pfrac, base, float(angular_tol), R, len(dual_directions(lattice, R)))
