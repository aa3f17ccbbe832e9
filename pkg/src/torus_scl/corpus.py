"""Seeded random corpora: rational PL fluxes, lattices and field sequences."""

from fractions import Fraction

import numpy as np

from ._validation import ConfigError
from .flux import make_flux
from .lattice import LatticeSpec
from .solver import cell_centers


def random_flux(rng, n):
    """Rational PL flux in ``n`` components with 2 to 6 breakpoints on a quarter grid."""
    while True:
        pts = sorted({Fraction(int(x), 4) for x in rng.integers(-8, 9, size=int(rng.integers(3, 7)))})
        if len(pts) >= 2:
            break
    vals = [[Fraction(int(c), 4) for c in rng.integers(-6, 7, size=n)] for _ in pts]
    return make_flux(pts, vals)


MAX_CONDITION = 4.0


def random_lattice(rng, n, max_condition=MAX_CONDITION):
    """Rational lattice with small entries (identity plus a perturbation).

    Generators with condition number above ``max_condition`` are rejected:
    nearly degenerate cells put the short dual vectors at large integer
    modes, which no affordable grid resolves.
    """
    for _ in range(100):
        B = [[Fraction(int(rng.integers(-2, 3)), int(rng.integers(1, 3))) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            B[i][i] += 1
        if np.linalg.cond(np.array(B, dtype=float)) > max_condition:
            continue
        try:
            return LatticeSpec.from_generators(B)
        except ConfigError:
            continue
    return LatticeSpec.integer(n)


def random_mean(rng, flux):
    """A breakpoint half of the time (where affine pieces meet), else a generic rational."""
    bps = flux.breakpoints
    if rng.random() < 0.5:
        return bps[int(rng.integers(len(bps)))]
    return Fraction(int(rng.integers(-8, 9)), 8) + Fraction(1, 16)


def wave_corpus(seed, count=50):
    """``count`` cases ``(flux, lattice, I)`` alternating between one and two dimensions."""
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(count):
        n = 1 + i % 2
        flux = random_flux(rng, n)
        cases.append((flux, random_lattice(rng, n), random_mean(rng, flux)))
    return cases


def oscillating_sequence(rng, r_list, shape):
    """Random bounded sequence ``v(x) + A s(2 pi r m.x + phase)`` with ``s`` a sine or a square wave."""
    ys = cell_centers(shape)
    ys = ys if isinstance(ys, list) else list(ys)
    n = len(shape)
    mode = rng.integers(-2, 3, size=n)
    if not np.any(mode):
        mode[0] = 1
    amp = float(rng.uniform(0.3, 1.0))
    phase = float(rng.uniform(0, 2 * np.pi))
    slow = rng.integers(-1, 2, size=n)
    base = float(rng.uniform(-0.5, 0.5)) * np.sin(2 * np.pi * sum(c * y for c, y in zip(slow, ys)))
    square = bool(rng.random() < 0.3)
    out = []
    for r in r_list:
        arg = 2 * np.pi * r * sum(int(c) * y for c, y in zip(mode, ys)) + phase
        osc = np.sign(np.sin(arg)) if square else np.sin(arg)
        out.append(base + amp * osc)
    return out


def microscope_corpus(seed, count=20):
    """``count`` static sequences, 1-D on 2048 cells and 2-D on 64x64."""
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(count):
        shape = (2048,) if i % 2 == 0 else (64, 64)
        r_list = (4, 8, 16) if len(shape) == 2 else (8, 16, 32, 64)
        cases.append((r_list, oscillating_sequence(rng, r_list, shape)))
    return cases


def isotropic_field(rng, shape, k, band=(2.0, 4.0)):
    """Real random field with Fourier support in the shell ``band[0] k <= |freq| <= band[1] k``."""
    freq = np.stack(np.meshgrid(*[np.fft.fftfreq(N, 1.0 / N) for N in shape], indexing="ij"), axis=-1)
    rad = np.linalg.norm(freq, axis=-1)
    mask = (rad >= band[0] * k) & (rad <= band[1] * k)
    coef = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
    return np.real(np.fft.ifftn(coef))
