"""Period lattices of the torus and their duals.

A lattice ``L`` is given by a generator matrix ``B`` whose columns span it.
The dual lattice ``L' = {xi : xi . x in Z for all x in L}`` is generated by
the columns of ``D = B^{-T}``.  Rational generators are kept as
:class:`~fractions.Fraction` so the dual and everything derived from it is
exact.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import itertools
import math

import numpy as np
import sympy

from ._validation import ConfigError, FLOAT_TOL, as_number

DEFAULT_ENUMERATION_CAP = 100_000


def _to_rows(matrix):
    rows = [list(r) for r in matrix]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ConfigError("generator matrix must be square and non-empty", "lattice")
    return [[as_number(v, "lattice") for v in r] for r in rows]


def dual_lattice(B):
    """Generator matrix of the dual lattice, ``inverse(B).T``.

    Returns a tuple-of-tuples of Fractions when every entry of ``B`` is
    rational, otherwise a float ndarray.

    >>> dual_lattice([[1, 1], [0, 1]])
    ((Fraction(1, 1), Fraction(0, 1)), (Fraction(-1, 1), Fraction(1, 1)))
    """
    rows = _to_rows(B)
    n = len(rows)
    if all(isinstance(v, Fraction) for r in rows for v in r):
        M = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in rows])
        if M.det() == 0:
            raise ConfigError("degenerate lattice", "lattice")
        Dt = M.inv().T
        return tuple(
            tuple(Fraction(int(Dt[i, j].p), int(Dt[i, j].q)) for j in range(n)) for i in range(n)
        )
    Bf = np.array(rows, dtype=float)
    if abs(np.linalg.det(Bf)) <= FLOAT_TOL:
        raise ConfigError("degenerate lattice", "lattice")
    return np.linalg.inv(Bf).T


@dataclass(frozen=True)
class LatticeSpec:
    """A full-rank period lattice together with its dual.

    ``generators`` and ``dual_generators`` are float arrays; the ``exact_*``
    fields hold Fraction matrices (or ``None`` for irrational input).
    """

    generators: np.ndarray
    dual_generators: np.ndarray
    exact_generators: tuple = field(default=None, repr=False)
    exact_dual: tuple = field(default=None, repr=False)

    @property
    def dimension(self):
        return self.generators.shape[0]

    @property
    def exact(self):
        return self.exact_generators is not None

    @classmethod
    def from_generators(cls, B):
        rows = _to_rows(B)
        D = dual_lattice(rows)
        if isinstance(D, tuple):
            return cls(
                generators=np.array([[float(v) for v in r] for r in rows]),
                dual_generators=np.array([[float(v) for v in r] for r in D]),
                exact_generators=tuple(tuple(r) for r in rows),
                exact_dual=D,
            )
        return cls(generators=np.array(rows, dtype=float), dual_generators=np.asarray(D))

    @classmethod
    def from_flat(cls, values, n=None):
        """Parse the row-major ``n*n`` list used in scenario files."""
        values = list(values)
        if n is None:
            n = math.isqrt(len(values))
        if n == 0 or n * n != len(values):
            raise ConfigError(f"expected {n * n} entries, got {len(values)}", "lattice")
        return cls.from_generators([values[i * n:(i + 1) * n] for i in range(n)])

    @classmethod
    def integer(cls, n=1):
        """The standard lattice ``Z^n`` (unit torus)."""
        return cls.from_generators([[int(i == j) for j in range(n)] for i in range(n)])

    def default_radius(self):
        """Truncation radius for dual enumeration: 8x the longest dual generator."""
        return 8.0 * float(np.max(np.linalg.norm(self.dual_generators, axis=0)))

    def to_physical(self, coeffs):
        """Dual vectors ``D @ m`` for integer coefficient vectors ``m`` (last axis)."""
        return np.asarray(coeffs, dtype=float) @ self.dual_generators.T

    def dual_coefficients(self, xi):
        """Integer coordinates ``B^T xi`` of a dual vector."""
        return np.asarray(xi, dtype=float) @ self.generators


def enumerate_dual(lattice, R, cap=DEFAULT_ENUMERATION_CAP):
    """All nonzero dual vectors with ``|xi| <= R``.

    Sorted by length, ties broken by descending lexicographic order (so
    ``+1`` precedes ``-1`` in one dimension).  Entries are Fractions when the
    lattice is exact.

    Parameters
    ----------
    lattice : LatticeSpec or array_like
        The lattice, or a dual generator matrix ``D``.
    R : float
        Truncation radius, must be positive.
    cap : int
        Maximum number of vectors in the result.
    """
    if not isinstance(lattice, LatticeSpec):
        # a dual generator matrix D was passed; its dual is the primal B
        lattice = LatticeSpec.from_generators(dual_lattice(lattice))
    R = as_number(R, "R")
    if R <= 0:
        raise ConfigError("must be positive", "R")
    n = lattice.dimension
    # |m_i| = |b_i . xi| <= |b_i| R
    bounds = np.floor(np.linalg.norm(lattice.generators, axis=0) * float(R) * (1 + 1e-9)).astype(int)
    box = int(np.prod(2 * bounds + 1))
    if box > 50 * cap:
        raise ConfigError("enumeration cap exceeded", "R")
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bounds], indexing="ij")
    M = np.stack([g.ravel() for g in grids], axis=1)
    M = M[np.any(M != 0, axis=1)]
    xi = lattice.to_physical(M)
    keep = np.einsum("ij,ij->i", xi, xi) <= float(R) ** 2 * (1 + 1e-9) + 1e-12
    M = M[keep]
    if lattice.exact:
        Dx = lattice.exact_dual
        R2 = Fraction(R) ** 2
        out = []
        for m in M:
            v = tuple(sum(Dx[i][j] * int(m[j]) for j in range(n)) for i in range(n))
            if sum(c * c for c in v) <= R2:
                out.append(v)
        key = lambda v: (sum(c * c for c in v), tuple(-c for c in v))
    else:
        xi = xi[keep]
        r2 = np.einsum("ij,ij->i", xi, xi)
        out = [tuple(float(c) for c in v) for v in xi[r2 <= float(R) ** 2 * (1 + FLOAT_TOL)]]
        key = lambda v: (round(sum(c * c for c in v), 12), tuple(-c for c in v))
    if len(out) > cap:
        raise ConfigError("enumeration cap exceeded", "R")
    return sorted(out, key=key)


def pairs_integrally(lattice, xi, tol=1e-10, span=3):
    """Check ``xi . (B m)`` is an integer for all ``|m|_inf <= span``."""
    n = lattice.dimension
    M = np.array(list(itertools.product(range(-span, span + 1), repeat=n)), dtype=float)
    x = M @ lattice.generators.T
    vals = x @ np.asarray(xi, dtype=float)
    return bool(np.all(np.abs(vals - np.round(vals)) <= tol))
