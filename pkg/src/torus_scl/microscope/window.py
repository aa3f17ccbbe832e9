"""Smooth localisation windows ``K_m(x) = m^n K(m x)`` and their square roots."""

from dataclasses import dataclass

import numpy as np

from .._validation import ConfigError


def bump(r2):
    """The C-infinity bump ``exp(1 - 1/(1 - |x|^2))`` on the unit ball, as a function of ``|x|^2``."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


@dataclass(frozen=True)
class WindowSpec:
    """Window of scale ``m`` centred at ``center`` in the unit cell.

    ``periodic`` flags the axes that wrap (space); a non-periodic axis (time)
    must contain the whole support ``|x - center| < 1/m``.
    """

    center: tuple
    m: int
    periodic: tuple = None

    def _periodic(self):
        return self.periodic if self.periodic is not None else (True,) * len(self.center)

    def weights(self, shape):
        """Discrete ``K_m`` on the midpoint grid, normalised to unit mass."""
        if len(shape) != len(self.center):
            raise ConfigError(f"window has {len(self.center)} axes, field has {len(shape)}", "window")
        if self.m < 1:
            raise ConfigError("window scale m must be >= 1", "window.m")
        radius = 1.0 / self.m
        r2 = 0.0
        axes = []
        for ax, (c, N, per) in enumerate(zip(self.center, shape, self._periodic())):
            if N * radius < 4:
                raise ConfigError(f"window of scale {self.m} under-resolved on {N} cells", "window.m")
            if per:
                if radius > 0.5:
                    raise ConfigError("window support wraps around the torus", "window.m")
            elif c - radius < 0 or c + radius > 1:
                raise ConfigError("window clipped by domain", "window.center")
            x = (np.arange(N) + 0.5) / N - c
            if per:
                x = (x + 0.5) % 1.0 - 0.5
            axes.append((x * self.m) ** 2)
        grids = np.meshgrid(*axes, indexing="ij") if len(axes) > 1 else axes
        r2 = sum(grids)
        K = bump(r2)
        mass = K.sum() / np.prod(shape)
        return K / mass

    def root_weights(self, shape):
        """``Phi_m = K_m^{1/2}``, unit L2 norm."""
        return np.sqrt(self.weights(shape))
