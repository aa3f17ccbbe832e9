"""Continuous piecewise-linear fluxes and the decay criterion.

A :class:`FluxPL` is a vector function ``phi: R -> R^n`` fixed by its values at
strictly increasing breakpoints, interpolated linearly in between and
continued affinely (with the boundary slopes) outside.  Rational data is
kept as Fractions, which makes "is ``xi . phi`` affine near ``I``" an exact
question.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
import math
import re

import numpy as np
import sympy

from ._validation import ConfigError, FLOAT_TOL, as_number, check_positive
from .lattice import enumerate_dual


def _close(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(float(a) - float(b)) <= FLOAT_TOL * max(1.0, abs(float(a)), abs(float(b)))


def _dot(xi, v):
    return sum(x * c for x, c in zip(xi, v))


@dataclass(frozen=True)
class FluxPL:
    """Continuous piecewise-linear flux ``phi: R -> R^n``.

    Parameters
    ----------
    breakpoints : tuple
        Strictly increasing state values ``lambda_0 < ... < lambda_J``.
    values : tuple of tuple
        ``phi(lambda_j)`` for every breakpoint, each of length ``n``.
    sampled : bool
        True when the flux is a PL sampling of a smooth function; decay
        verdicts then only hold at the sampling resolution.
    name : str
        Label used in reports.
    """

    breakpoints: tuple
    values: tuple
    sampled: bool = False
    name: str = field(default="pl", compare=False)

    def __post_init__(self):
        if len(self.breakpoints) < 2 or len(self.breakpoints) != len(self.values):
            raise ConfigError("need equal-length breakpoints and values, at least 2", "flux")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ConfigError("breakpoints must be strictly increasing", "flux.breakpoints")
        n = len(self.values[0])
        if n < 1 or any(len(v) != n for v in self.values):
            raise ConfigError("all flux values must have the same dimension", "flux.values")

    @property
    def dimension(self):
        return len(self.values[0])

    @cached_property
    def exact(self):
        return all(isinstance(b, Fraction) for b in self.breakpoints) and all(
            isinstance(c, Fraction) for v in self.values for c in v
        )

    @cached_property
    def slopes(self):
        """Slope vector of each of the ``J`` interior pieces."""
        bp, vals = self.breakpoints, self.values
        return tuple(
            tuple((vals[j + 1][d] - vals[j][d]) / (bp[j + 1] - bp[j]) for d in range(self.dimension))
            for j in range(len(bp) - 1)
        )

    def piece_slopes_at(self, u):
        """Slopes of the pieces touching ``u`` (two at a breakpoint, else one)."""
        bp, s = self.breakpoints, self.slopes
        for j, b in enumerate(bp):
            if _close(u, b):
                left = s[max(j - 1, 0)]
                right = s[min(j, len(s) - 1)]
                return [left, right]
        j = int(np.searchsorted(np.asarray(bp, dtype=float), float(u), side="right")) - 1
        return [s[min(max(j, 0), len(s) - 1)]]

    def evaluate_exact(self, u):
        """Evaluate at a single state, exactly when ``u`` and the data are rational."""
        bp, vals, s = self.breakpoints, self.values, self.slopes
        if u <= bp[0]:
            j = 0
        elif u >= bp[-1]:
            j = len(bp) - 2
        else:
            j = max(i for i in range(len(bp) - 1) if bp[i] <= u)
        return tuple(vals[j][d] + s[j][d] * (u - bp[j]) for d in range(self.dimension))

    @cached_property
    def _numeric(self):
        bp = np.array([float(b) for b in self.breakpoints])
        vals = np.array([[float(c) for c in v] for v in self.values])
        s = np.array([[float(c) for c in v] for v in self.slopes])
        return bp, vals, s

    def __call__(self, u):
        """Vectorised float evaluation; returns shape ``u.shape + (n,)``."""
        bp, vals, s = self._numeric
        u = np.asarray(u, dtype=float)
        out = np.empty(u.shape + (self.dimension,))
        for d in range(self.dimension):
            out[..., d] = self.component_values(u, d)
        return out

    def component_values(self, u, d):
        """Float values of component ``d`` of the flux at states ``u``."""
        bp, vals, s = self._numeric
        u = np.asarray(u, dtype=float)
        y = np.interp(u, bp, vals[:, d])
        lo, hi = u < bp[0], u > bp[-1]
        if lo.any():
            y = np.where(lo, vals[0, d] + s[0, d] * (u - bp[0]), y)
        if hi.any():
            y = np.where(hi, vals[-1, d] + s[-1, d] * (u - bp[-1]), y)
        return y

    def directional(self, xi):
        """The scalar flux ``lambda -> xi . phi(lambda)``."""
        xi = tuple(xi)
        if len(xi) != self.dimension:
            raise ConfigError(f"direction has dimension {len(xi)}, flux has {self.dimension}", "xi")
        return FluxPL(
            self.breakpoints,
            tuple((_dot(xi, v),) for v in self.values),
            sampled=self.sampled,
            name=f"{self.name}.xi",
        )

    def transformed(self, A):
        """The flux ``A phi`` for an ``n x n`` matrix ``A`` (rows as sequences)."""
        A = [list(r) for r in A]
        return FluxPL(
            self.breakpoints,
            tuple(tuple(_dot(row, v) for row in A) for v in self.values),
            sampled=self.sampled,
            name=self.name,
        )

    def pushed_forward(self, lattice):
        """Flux in lattice coordinates, ``B^{-1} phi`` (the solver's grid flux)."""
        if lattice.dimension != self.dimension:
            raise ConfigError("flux and lattice dimensions differ", "flux")
        if lattice.exact and self.exact:
            # B^{-1} = D^T
            D = lattice.exact_dual
            n = lattice.dimension
            return self.transformed([[D[j][i] for j in range(n)] for i in range(n)])
        return self.transformed(np.linalg.inv(lattice.generators).tolist())

    def refined(self, extra):
        """Same function with additional (collinear) breakpoints inserted."""
        pts = sorted(set(self.breakpoints) | set(extra))
        return FluxPL(tuple(pts), tuple(self.evaluate_exact(p) for p in pts), self.sampled, self.name)

    def max_abs_slope(self, lo, hi, d=0):
        """Largest ``|phi_d'|`` over pieces meeting ``[lo, hi]``."""
        bp, _, s = self._numeric
        i0 = int(np.searchsorted(bp, lo, side="right")) - 1
        i1 = int(np.searchsorted(bp, hi, side="left")) - 1
        i0, i1 = min(max(i0, 0), len(s) - 1), min(max(i1, 0), len(s) - 1)
        return float(np.max(np.abs(s[min(i0, i1):max(i0, i1) + 1, d])))


def make_flux(breakpoints, values, sampled=False, name="pl"):
    """Build a :class:`FluxPL`, parsing numbers and ``"p/q"`` strings.

    Scalar ``values`` entries give a one-dimensional flux.
    """
    bp = tuple(as_number(b, "flux.breakpoints") for b in breakpoints)
    vals = []
    for v in values:
        if isinstance(v, (list, tuple, np.ndarray)):
            vals.append(tuple(as_number(c, "flux.values") for c in v))
        else:
            vals.append((as_number(v, "flux.values"),))
    if not all(isinstance(b, Fraction) for b in bp) or not all(
        isinstance(c, Fraction) for v in vals for c in v
    ):
        bp = tuple(float(b) for b in bp)
        vals = [tuple(float(c) for c in v) for v in vals]
    return FluxPL(bp, tuple(vals), sampled=sampled, name=name)


@dataclass(frozen=True)
class AffinePiece:
    """Maximal closed interval ``[lo, hi]`` on which ``g(l) = slope*l + intercept``."""

    lo: object
    hi: object
    slope: object
    intercept: object

    def contains_interior(self, x):
        return self.lo < x < self.hi


def affine_intervals(g):
    """Maximal affine intervals of a scalar PL function, left to right.

    The first and last intervals are unbounded (affine continuation).
    Consecutive pieces with equal slope are merged, so adjacent intervals
    always have distinct slopes.
    """
    if g.dimension != 1:
        raise ConfigError("affine_intervals needs a scalar flux", "flux")
    bp = g.breakpoints
    slopes = [s[0] for s in g.slopes]
    out = []
    start = 0
    for j in range(1, len(slopes) + 1):
        if j == len(slopes) or not _close(slopes[j], slopes[start]):
            a = slopes[start]
            b = g.values[start][0] - a * bp[start]
            lo = -math.inf if start == 0 else bp[start]
            hi = math.inf if j == len(slopes) else bp[j]
            out.append(AffinePiece(lo, hi, a, b))
            start = j
    return out


@dataclass(frozen=True)
class Nd2Witness:
    xi: tuple
    lo: object
    hi: object
    slope: object
    intercept: object

    def to_json(self):
        return {
            "xi": [_num(c) for c in self.xi],
            "interval": [_num(self.lo), _num(self.hi)],
            "a": _num(self.slope),
            "b": _num(self.intercept),
        }


@dataclass(frozen=True)
class Nd2Report:
    """Outcome of the decay criterion at mean value ``mean``.

    ``exact_violation`` is the radius-free answer when it can be decided
    (rational data or ``n = 1``), ``None`` otherwise; ``beyond_radius`` is
    set when that answer is "violated" but no witness lies in the ball.
    """

    verdict: str
    witnesses: tuple
    radius: float
    mean: object
    sampled: bool = False
    exact_violation: object = None

    @property
    def holds(self):
        return self.verdict == "holds"

    @property
    def beyond_radius(self):
        return bool(self.exact_violation) and self.holds

    def to_json(self):
        out = {
            "verdict": self.verdict,
            "mean": _num(self.mean),
            "radius": float(self.radius),
            "witnesses": [w.to_json() for w in self.witnesses],
            "beyond_radius": self.beyond_radius,
        }
        if self.sampled:
            out["caveat"] = "sampled flux - verdict at sampling resolution"
        return out


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _slope_jump(flux, I):
    """Difference of left and right slope vectors at ``I`` (zero off breakpoints)."""
    s = flux.piece_slopes_at(I)
    if len(s) == 1:
        return tuple(0 * c for c in s[0])
    return tuple(a - b for a, b in zip(s[0], s[1]))


def _radius_free_violation(flux, lattice, I):
    """Whether some nonzero ``xi`` in the full dual lattice makes ``xi . phi`` affine at ``I``."""
    w = _slope_jump(flux, I)
    if all(c == 0 for c in w):
        return True
    n = flux.dimension
    if n == 1:
        return False
    if lattice.exact and flux.exact:
        # xi = D m gives xi . w = m . (D^T w); a rational hyperplane in n >= 2 has integer points
        return True
    return None


def check_nd2(flux, lattice, I, R=None):
    """Decide the decay criterion at mean value ``I``.

    The criterion fails ("violated") when some nonzero dual vector ``xi``
    makes ``xi . phi`` affine on an open interval around ``I``.  Every such
    ``xi`` with ``|xi| <= R`` is returned as a witness together with the
    maximal affine interval and its coefficients.

    Parameters
    ----------
    flux : FluxPL
    lattice : LatticeSpec
    I : number
        Mean value of the initial data.
    R : float, optional
        Truncation radius for the dual lattice, defaults to
        :meth:`LatticeSpec.default_radius`.
    """
    if lattice.dimension != flux.dimension:
        raise ConfigError("flux and lattice dimensions differ", "lattice")
    I = as_number(I, "I")
    if not (flux.exact and isinstance(I, Fraction)):
        I = float(I)
    R = lattice.default_radius() if R is None else check_positive(R, "R")
    if lattice.exact and flux.exact:
        vectors = enumerate_dual(lattice, R)
    else:
        vectors = [tuple(float(c) for c in v) for v in enumerate_dual(lattice, R)]
    witnesses = []
    for xi in vectors:
        for piece in affine_intervals(flux.directional(xi)):
            if piece.contains_interior(I):
                witnesses.append(Nd2Witness(xi, piece.lo, piece.hi, piece.slope, piece.intercept))
                break
    return Nd2Report(
        verdict="violated" if witnesses else "holds",
        witnesses=tuple(witnesses),
        radius=float(R),
        mean=I,
        sampled=flux.sampled,
        exact_violation=_radius_free_violation(flux, lattice, I),
    )


@dataclass(frozen=True)
class NondegResult:
    nondegenerate: bool
    witness: object = None


def nondeg_at(flux, u):
    """Pointwise non-degeneracy: is ``xi . phi`` non-constant near ``u`` for all ``xi != 0``?

    ``xi . phi`` is constant near ``u`` exactly when ``xi`` is orthogonal to
    the slopes of every piece touching ``u``, so the flux is degenerate at
    ``u`` iff those slopes fail to span ``R^n``.  A unit witness from the
    orthogonal complement is returned in that case.
    """
    slopes = flux.piece_slopes_at(as_number(u, "u"))
    n = flux.dimension
    if flux.exact:
        S = sympy.Matrix([[sympy.Rational(c.numerator, c.denominator) for c in s] for s in slopes])
        null = S.nullspace()
        if not null:
            return NondegResult(True)
        v = np.array([float(c) for c in null[0]])
    else:
        S = np.array(slopes, dtype=float)
        _, sv, vt = np.linalg.svd(S)
        rank = int(np.sum(sv > FLOAT_TOL * max(1.0, sv.max(initial=0.0))))
        if rank == n:
            return NondegResult(True)
        v = vt[-1] if rank < vt.shape[0] else vt[rank]
    v = v / np.linalg.norm(v)
    # fix the sign: first nonzero coordinate positive
    if v[np.flatnonzero(np.abs(v) > 1e-14)[0]] < 0:
        v = -v
    return NondegResult(False, tuple(float(c) for c in v))


def _cantor_primitive(depth, u):
    """Exact primitive ``int_0^u C_depth`` of the depth-``depth`` Cantor stair on [0, 1]."""
    if depth == 0:
        return u * u / 2
    third = Fraction(1, 3)
    if u <= third:
        return _cantor_primitive(depth - 1, 3 * u) / 6
    if u <= 2 * third:
        return Fraction(1, 12) + (u - third) / 2
    return Fraction(1, 4) + (u - 2 * third) / 2 + _cantor_primitive(depth - 1, 3 * u - 2) / 6


def _cantor_intervals(depth):
    """Left endpoints of the ``2^depth`` intervals kept by the middle-thirds construction."""
    lefts = [Fraction(0)]
    for k in range(1, depth + 1):
        w = Fraction(2, 3 ** k)
        lefts = [x for l in lefts for x in (l, l + w)]
    return lefts


def cantor_flux(depth, samples_per_piece=4):
    """PL sampling of the primitive of the depth-``depth`` Cantor stair.

    The stair ``C_k`` is constant on every middle third removed up to level
    ``k``, so its primitive is affine there; on each of the ``2^k`` kept
    intervals it is quadratic and is sampled at ``samples_per_piece``
    equal sub-steps.  ``depth = 0`` is ``u^2 / 2``.  All values are exact.
    """
    if not isinstance(depth, int) or depth < 0 or depth > 12:
        raise ConfigError(f"depth must be an integer in [0, 12], got {depth!r}", "flux.depth")
    if samples_per_piece < 1:
        raise ConfigError("samples_per_piece must be >= 1", "flux.samples_per_piece")
    width = Fraction(1, 3 ** depth)
    pts = set()
    for left in _cantor_intervals(depth):
        for i in range(samples_per_piece + 1):
            pts.add(left + width * i / samples_per_piece)
    pts = sorted(pts)
    return FluxPL(
        tuple(pts),
        tuple((_cantor_primitive(depth, p),) for p in pts),
        sampled=True,
        name=f"cantor({depth})",
    )


def sample_flux(funcs, lo, hi, h, name="sampled"):
    """PL interpolant of smooth component functions on ``[lo, hi]`` with step ``h``.

    Rational ``lo, hi, h`` and functions mapping Fractions to Fractions give
    an exact flux.
    """
    lo, hi, h = as_number(lo, "lo"), as_number(hi, "hi"), check_positive(h, "h")
    count = int(round((hi - lo) / h))
    if count < 1 or count > 200_000:
        raise ConfigError(f"bad sampling grid ({count} steps)", "flux.h")
    pts = [lo + h * j for j in range(count + 1)]
    return make_flux(pts, [[f(p) for f in funcs] for p in pts], sampled=True, name=name)


_SAMPLED = {
    "burgers_sampled": [lambda p: p * p / 2],
    "burgers2_sampled": [lambda p: p * p / 2] * 2,
    "cubic2_sampled": [lambda p: p * p / 2, lambda p: p * p * p / 3],
}
_BUILTIN = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def flux_from_spec(spec):
    """Build a flux from a scenario entry.

    Accepted forms are ``{"breakpoints": [...], "values": [...]}`` or one of
    the builtin strings ``"abs"``, ``"burgers_sampled(h)"``,
    ``"burgers_sampled(h, lo, hi)"``, ``"burgers2_sampled(h)"`` (the
    two-dimensional ``(u^2/2, u^2/2)``), ``"cubic2_sampled(h)"`` (the
    two-dimensional ``(u^2/2, u^3/3)``), ``"cantor(depth)"`` and
    ``"affine(c1, ..., cn)"``.
    """
    if isinstance(spec, dict):
        if "breakpoints" not in spec or "values" not in spec:
            raise ConfigError("flux object needs 'breakpoints' and 'values'", "flux")
        return make_flux(spec["breakpoints"], spec["values"], sampled=bool(spec.get("sampled", False)))
    if not isinstance(spec, str):
        raise ConfigError(f"unrecognised flux spec {spec!r}", "flux")
    m = _BUILTIN.match(spec)
    if not m:
        raise ConfigError(f"unrecognised flux spec {spec!r}", "flux")
    name, args = m.group(1), m.group(2)
    args = [a.strip() for a in args.split(",")] if args and args.strip() else []
    if name == "abs" and not args:
        return make_flux([-1, 0, 1], [1, 0, 1], name="abs")
    if name == "affine" and args:
        c = [as_number(a, "flux") for a in args]
        return make_flux([0, 1], [[0 * x for x in c], c], name=spec.strip())
    if name == "cantor" and len(args) == 1:
        return cantor_flux(int(args[0]))
    if name in _SAMPLED and len(args) in (1, 3):
        h = as_number(args[0], "flux.h")
        lo, hi = (as_number(args[1], "flux"), as_number(args[2], "flux")) if len(args) == 3 else (-2, 2)
        return sample_flux(_SAMPLED[name], lo, hi, h, name=spec.strip())
    raise ConfigError(f"unrecognised flux spec {spec!r}", "flux")
