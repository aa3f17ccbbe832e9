from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torus_scl._validation import ConfigError
from torus_scl.decay import (
    DecayClassifier, DecayReport, classify_decay, comparison_check, decay_curve, min_shift_distance,
    squeeze_check, traveling_wave, wave_l1_error,
)
from torus_scl.flux import check_nd2, flux_from_spec, make_flux
from torus_scl.lattice import LatticeSpec, enumerate_dual
from torus_scl.solver import PeriodicField, solve

F = Fraction
ABS = flux_from_spec("abs")
BURGERS = flux_from_spec("burgers_sampled(1/20)")
L1 = LatticeSpec.integer(1)


def sine(N, offset=0.0, amp=1.0):
    return PeriodicField.from_function(lambda x: offset + amp * np.sin(2 * np.pi * x), (N,))


def test_constant_data_zero_curve():
    rep = decay_curve(solve(BURGERS, PeriodicField(np.full(32, 0.4), L1), 1.0))
    assert np.all(rep.e_values == 0.0)
    assert classify_decay(rep) == "decays"


def test_analytic_wave_curve_is_two_delta_over_pi():
    wave = traveling_wave(ABS, L1, 1)
    rep = decay_curve(wave, np.linspace(0, 2, 9))
    np.testing.assert_allclose(rep.e_values, 2 * 0.9 / np.pi, rtol=1e-12)


def test_burgers_curve_strictly_decreasing():
    rep = decay_curve(solve(BURGERS, sine(200), 1.0, np.linspace(0, 1, 6)))
    assert np.all(np.diff(rep.e_values) < 0)


def test_burgers_classified_decays():
    reps = [decay_curve(solve(BURGERS, sine(N), 3.0)) for N in (100, 200, 400)]
    assert classify_decay(reps[0], reps[1:]) == "decays"


def test_abs_half_mean_stalls():
    reps = [decay_curve(solve(ABS, sine(N, 0.5, 0.3), 3.0)) for N in (100, 200, 400)]
    clf = DecayClassifier().fit(reps)
    assert clf.predict() == "stalls"
    assert clf.get_params() == {"theta_decay": 0.2, "theta_stall": 0.8}


def test_classifier_needs_fit():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        DecayClassifier().predict()


def test_classifier_threshold_validation():
    with pytest.raises(ConfigError):
        DecayClassifier(theta_decay=0.9, theta_stall=0.5).fit([decay_curve(solve(ABS, sine(20), 0.1))])


def test_inconclusive_band():
    t = np.array([0.0, 1.0])
    coarse = DecayReport(0.0, t, np.array([1.0, 0.5]), meta={"cells": 100})
    fine = DecayReport(0.0, t, np.array([1.0, 0.4]), meta={"cells": 200})
    assert classify_decay(coarse, [fine]) == "inconclusive"


def test_single_nonzero_report_rejected():
    with pytest.raises(ConfigError, match="two refinement"):
        classify_decay(decay_curve(solve(BURGERS, sine(20), 0.1)))


def test_wave_abs_example():
    w = traveling_wave(ABS, L1, 1, 1)
    assert w.xi == (1,) and w.a == 1 and w.delta == pytest.approx(0.9)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(w.physical(0.3, x), 1 + 0.9 * np.sin(2 * np.pi * (x - 0.3)), atol=1e-14)


def test_wave_none_when_criterion_holds():
    assert traveling_wave(ABS, L1, 0) is None


def test_wave_affine_flux_uses_shortest_dual():
    lat = LatticeSpec.from_generators([[1, F(1, 2)], [0, 1]])
    w = traveling_wave(flux_from_spec("affine(1/2, -2)"), lat, F(3, 10))
    xi = enumerate_dual(lat, lat.default_radius())[0]
    assert w.xi == tuple(xi)
    assert w.a == F(1, 2) * xi[0] - 2 * xi[1]


def test_wave_is_exact_solution_of_linear_flux():
    # an affine flux advects the wave without change; the scheme error is pure diffusion
    w = traveling_wave(make_flux([0, 1], [0, 1]), L1, F(1, 4))
    errs = [wave_l1_error(solve(make_flux([0, 1], [0, 1]), w.initial_field((N,)), 0.25), w) for N in (100, 200)]
    assert errs[1] < errs[0] and math.log2(errs[0] / errs[1]) >= 0.4


def test_wave_rescaled():
    w = traveling_wave(ABS, L1, 1).rescaled(3)
    assert w.mode == (3,) and w.a == 3


def test_min_shift_distance_recovers_roll(rng):
    u = rng.standard_normal(50)
    assert min_shift_distance(np.roll(u, 17), u) == pytest.approx(0.0, abs=1e-15)


def test_comparison_examples():
    u = sine(64)
    assert comparison_check(ABS, u, u, 0.5)
    lo = PeriodicField(np.minimum(u.data, 0), L1)
    hi = PeriodicField(np.maximum(u.data, 0), L1)
    assert comparison_check(ABS, lo, u, 0.5) and comparison_check(ABS, u, hi, 0.5)
    c = PeriodicField(np.full(64, 0.1), L1)
    c2 = PeriodicField(np.full(64, 0.35), L1)
    assert comparison_check(BURGERS, c, c2, 0.5)


@pytest.mark.parametrize("N", [200, 400])
def test_squeeze_sine(N):
    assert squeeze_check(sine(N), 1.0).passed


@pytest.mark.parametrize("data", [np.full(32, 0.5), np.zeros(32)])
def test_squeeze_preconditions(data):
    with pytest.raises(ConfigError):
        squeeze_check(PeriodicField(data, L1), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=3, max_size=6), st.fractions(-2, 2, max_denominator=8))
def test_wave_exists_iff_violated(vals, I):
    flux = make_flux(list(range(-1, len(vals) - 1)), [F(v) for v in vals])
    rep = check_nd2(flux, L1, I)
    w = traveling_wave(flux, L1, I)
    assert (w is None) == (rep.verdict == "holds")
    if w is not None:
        # the wave stays inside the affine interval, so it is an exact solution
        wit = rep.witnesses[0]
        assert wit.lo < I - w.delta and I + w.delta < wit.hi or math.isinf(float(wit.lo))
