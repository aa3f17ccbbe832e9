from fractions import Fraction
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torus_scl._validation import ConfigError
from torus_scl.lattice import LatticeSpec, dual_lattice, enumerate_dual, pairs_integrally

F = Fraction


def brute_dual(D, R, span=6):
    """Oracle: scan integer coefficient vectors in exact arithmetic, keep the short ones."""
    D = [[F(x) for x in row] for row in D]
    n = len(D)
    R2 = F(R) ** 2
    out = set()
    for m in itertools.product(range(-span, span + 1), repeat=n):
        if any(m):
            xi = [sum(D[i][j] * m[j] for j in range(n)) for i in range(n)]
            if sum(x * x for x in xi) <= R2:
                out.add(tuple(round(float(x), 12) for x in xi))
    return sorted(out)


@pytest.mark.parametrize("B, D", [
    ([[1, 0], [0, 1]], ((1, 0), (0, 1))),
    ([[2, 0], [0, 1]], ((F(1, 2), 0), (0, 1))),
    ([[1, 1], [0, 1]], ((1, 0), (-1, 1))),
])
def test_dual_lattice_examples(B, D):
    assert dual_lattice(B) == tuple(tuple(F(x) for x in row) for row in D)


def test_dual_lattice_singular():
    with pytest.raises(ConfigError, match="degenerate lattice"):
        dual_lattice([[1, 2], [2, 4]])


def test_dual_lattice_float_input():
    D = dual_lattice(np.array([[np.sqrt(2), 0.0], [0.0, 1.0]]))
    assert isinstance(D, np.ndarray)
    np.testing.assert_allclose(D, [[1 / np.sqrt(2), 0], [0, 1]])


def test_enumerate_dual_1d_order():
    assert enumerate_dual(LatticeSpec.integer(1), 2.5) == [(1,), (-1,), (2,), (-2,)]


def test_enumerate_dual_unit_vectors():
    got = enumerate_dual(LatticeSpec.integer(2), 1)
    assert sorted(got) == sorted([(1, 0), (-1, 0), (0, 1), (0, -1)])


def test_enumerate_dual_half_lattice():
    # (1/2, 1) has length sqrt(5)/2 > 1.1, so only six vectors are within range
    lat = LatticeSpec.from_generators([[2, 0], [0, 1]])
    got = enumerate_dual(lat, 1.1)
    assert len(got) == 6
    assert sorted(tuple(float(x) for x in v) for v in got) == brute_dual(lat.exact_dual, 1.1)
    assert sorted(got) == sorted([(F(1, 2), 0), (F(-1, 2), 0), (1, 0), (-1, 0), (0, 1), (0, -1)])


def test_enumerate_dual_cap():
    with pytest.raises(ConfigError, match="enumeration cap exceeded"):
        enumerate_dual(LatticeSpec.integer(2), 50, cap=100)


def test_enumerate_dual_radius_positive():
    with pytest.raises(ConfigError):
        enumerate_dual(LatticeSpec.integer(1), 0)


def _small_lattice():
    entry = st.fractions(min_value=-2, max_value=2, max_denominator=3)
    return st.lists(st.lists(entry, min_size=2, max_size=2), min_size=2, max_size=2).filter(
        lambda B: abs(B[0][0] * B[1][1] - B[0][1] * B[1][0]) >= F(1, 2))


@settings(max_examples=40, deadline=None)
@given(_small_lattice())
def test_dual_pairs_integrally(B):
    lat = LatticeSpec.from_generators(B)
    D = np.array(lat.dual_generators, dtype=float)
    Bf = np.array(B, dtype=float)
    np.testing.assert_allclose(D.T @ Bf, np.eye(2), atol=1e-12)
    for xi in enumerate_dual(lat, 1.5 * float(np.abs(D).max()) + 0.1)[:10]:
        assert pairs_integrally(lat, xi)


@settings(max_examples=25, deadline=None)
@given(_small_lattice(), st.floats(min_value=0.5, max_value=2.5))
def test_enumeration_matches_brute_force(B, R):
    lat = LatticeSpec.from_generators(B)
    got = sorted(tuple(round(float(x), 12) for x in v) for v in enumerate_dual(lat, R))
    span = int(np.ceil(R * np.abs(np.array(B, dtype=float)).sum(axis=0).max())) + 1
    assert got == brute_dual(lat.exact_dual, R, span)


def test_enumeration_sorted_by_length():
    vecs = enumerate_dual(LatticeSpec.from_generators([[1, F(1, 2)], [0, 1]]), 3)
    lengths = [np.linalg.norm(np.array(v, dtype=float)) for v in vecs]
    assert lengths == sorted(lengths)


def test_default_radius_positive():
    lat = LatticeSpec.from_generators([[2, 0], [0, 1]])
    assert lat.default_radius() == pytest.approx(8.0)
