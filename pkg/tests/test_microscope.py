import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torus_scl._validation import ConfigError
from torus_scl.decay import traveling_wave
from torus_scl.flux import flux_from_spec
from torus_scl.lattice import LatticeSpec
from torus_scl.microscope import (
    HMeasureEstimator, SphereBins, WindowSpec, YoungMeasureEstimator, bump, check_hmeasure_properties,
    default_p_grid, distribution_field, frequency_directions, hmeasure_estimate, localization_mass,
    rescale_sequence, rescaled_sample_times, s0_distance, young_estimate,
)
from torus_scl.solver import PeriodicField, cell_centers, solve


def grid(N):
    return (np.arange(N) + 0.5) / N


def sines(r_list, N=2048):
    x = grid(N)
    return [np.sin(2 * np.pi * r * x) for r in r_list]


# -- windows and bins ---------------------------------------------------------

def test_bump_support():
    assert bump(np.array([0.0]))[0] == 1.0
    assert bump(np.array([1.0, 2.0])).tolist() == [0.0, 0.0]


@pytest.mark.parametrize("shape, m", [((256,), 4), ((64, 64), 8), ((16, 16, 16), 2)])
def test_window_unit_mass(shape, m):
    w = WindowSpec((0.5,) * len(shape), m).weights(shape)
    # unit integral: the cell average is one
    assert w.shape == shape and w.mean() == pytest.approx(1.0) and w.min() >= 0


def test_window_periodic_wrap_equals_shift():
    a = WindowSpec((0.05,), 4).weights((128,))
    b = WindowSpec((0.55,), 4).weights((128,))
    np.testing.assert_allclose(np.roll(b, -64), a, atol=1e-15)


@pytest.mark.parametrize("m, N, msg", [(1, 64, "wraps"), (32, 64, "under-resolved")])
def test_window_errors(m, N, msg):
    with pytest.raises(ConfigError, match=msg):
        WindowSpec((0.5,), m).weights((N,))


def test_window_clipped_non_periodic_axis():
    with pytest.raises(ConfigError):
        WindowSpec((0.05, 0.5), 4, periodic=(False, True)).weights((64, 64))


def test_sphere_defaults():
    assert SphereBins.default(1).centers.shape == (2, 1)
    assert SphereBins.default(2).centers.shape == (64, 2)
    assert SphereBins.default(3).centers.shape == (80, 3)
    assert SphereBins.icosahedral(3).centers.shape == (1280, 3)


@pytest.mark.parametrize("bins", [SphereBins.arcs(64), SphereBins.icosahedral(1), SphereBins.icosahedral(2)])
def test_sphere_assign_nearest_center(bins, rng):
    v = rng.standard_normal((500, bins.dimension))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    got = bins.assign(v)
    # the assigned centre is never farther than the closest centre by more than a bin width
    best = np.max(v @ bins.centers.T, axis=1)
    assert np.all(np.einsum("ij,ij->i", v, bins.centers[got]) >= best - 0.2)
    if bins.kind != "arcs":
        np.testing.assert_array_equal(got, np.argmax(v @ bins.centers.T, axis=1))


def test_sphere_equal_area_icosahedral(rng):
    bins = SphereBins.icosahedral(1)
    v = rng.standard_normal((200000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    frac = np.bincount(bins.assign(v), minlength=80) / len(v)
    assert frac.max() / frac.min() < 1.5


# -- Young measures -----------------------------------------------------------

def test_young_arccos_oracle():
    p = np.linspace(-0.99, 0.99, 41)
    y = young_estimate(sines((32, 64), 2 ** 14), p_grid=p)
    assert y.counts.tolist() == [2 ** 14]
    assert np.abs(y.u0_table[0] - np.arccos(p) / np.pi).max() <= 0.02


def test_young_regular_is_step(rng):
    v = rng.uniform(-1, 1, 512)
    p = np.linspace(-1.1, 1.1, 23)
    y = young_estimate([v, v, v], p_grid=p, windows=512)
    expect = (v[:, None] > p[None, :]).astype(float)
    np.testing.assert_array_equal(y.u0_table, expect)


def test_young_two_valued_counting():
    a, b = -0.5, 0.75
    f = np.where(np.arange(1024) % 2 == 0, a, b)
    y = young_estimate([f, f], p_grid=[-1.0, 0.0, 1.0])
    np.testing.assert_allclose(y.u0_table[0], [1.0, 0.5, 0.0])


def test_young_level_index_and_errors():
    y = young_estimate(sines((8, 16), 256), p_grid=[-0.5, 0.0, 0.5])
    assert y.level_index(0.0) == 1
    with pytest.raises(ConfigError):
        y.level_index(0.25)
    with pytest.raises(ConfigError):
        young_estimate(sines((8,), 256))
    with pytest.raises(ConfigError):
        young_estimate(sines((8, 16), 256), windows=512)


def test_default_p_grid_avoids_atoms():
    data = np.array([0.0, 1.0])
    p = default_p_grid(data, 5)
    assert len(p) == 5 and not np.any(np.isin(p, data))


def test_young_estimator_api():
    est = YoungMeasureEstimator(windows=4)
    assert est.get_params()["windows"] == 4
    fs = sines((8, 16, 32, 64), 1024)
    y = est.fit(fs).estimate_
    U = est.transform(fs[-1])
    assert U.values.shape == (len(y.p_grid), 1024)


def test_distribution_field_strong():
    x = grid(4096)
    v = np.sin(2 * np.pi * x)
    y = young_estimate([v, v], windows=64)
    U = distribution_field(v, y)
    assert np.abs(U.window_means(64)).max() <= 1e-12
    vals = np.unique(np.round(U.values + y.u0_field(v.shape), 12))
    assert set(vals.tolist()) <= {0.0, 1.0}


def test_distribution_field_square_wave():
    N, r = 4096, 64
    x = grid(N)
    f = np.sign(np.sin(2 * np.pi * r * x))
    y = young_estimate([f, f], p_grid=[-0.5, 0.0, 0.5])
    U = distribution_field(f, y, 0.0)
    np.testing.assert_allclose(np.abs(U.values), 0.5)
    assert np.abs(U.window_means(8)).max() <= 1.0 / (r / 8) + 1e-12


def test_distribution_field_above_max():
    fs = sines((8, 16), 512)
    y = young_estimate(fs, p_grid=[0.0, 2.0])
    U = distribution_field(fs[-1], y, 2.0)
    np.testing.assert_allclose(U.values, 0.0)


# -- H-measures ---------------------------------------------------------------

def static_sine_2d(r_list, N=128, omega=(1, 0)):
    X, Y = cell_centers((N, N))
    return [np.sin(2 * np.pi * r * (omega[0] * X + omega[1] * Y)) for r in r_list]


def test_single_mode_concentration_2d():
    fs = static_sine_2d((16, 32, 64), N=256)
    H = hmeasure_estimate(fs, r_list=(16, 32, 64), m_list=(2,), young_windows=32)
    assert H.concentration([[1, 0], [-1, 0]]) >= 0.9
    rep = check_hmeasure_properties(H, young_estimate(fs, windows=32))
    assert rep.passed


def test_strong_sequence_small_mass():
    X, Y = cell_centers((128, 128))
    v = np.sin(2 * np.pi * X)
    osc = static_sine_2d((8, 16, 32))
    strong = [v] * 3
    kw = dict(r_list=(8, 16, 32), m_list=(2, 4), young_windows=32)
    Hs = hmeasure_estimate(strong, **kw)
    Ho = hmeasure_estimate(osc, **kw)
    assert Hs.total_mass() <= 0.1 * Ho.total_mass()


def test_hermitian_and_swapped():
    H = hmeasure_estimate(sines((8, 16, 32)), r_list=(8, 16, 32), m_list=(4,))
    e = H.entries
    np.testing.assert_allclose(e, np.conj(np.swapaxes(e, 1, 2)), atol=0)
    np.testing.assert_array_equal(H.swapped(1, 3), np.conj(e[:, 1, 3]))


def test_zero_matrix_passes():
    fs = sines((8, 16, 32))
    H = hmeasure_estimate(fs, r_list=(8, 16, 32), m_list=(4,))
    Z = dataclasses.replace(H, entries=np.zeros_like(H.entries),
                            ladder={k: np.zeros_like(v) for k, v in H.ladder.items()})
    assert check_hmeasure_properties(Z, young_estimate(fs)).passed


def test_corrupted_diagonal_fails_psd():
    fs = sines((8, 16, 32))
    H = hmeasure_estimate(fs, r_list=(8, 16, 32), m_list=(4,))
    e = H.entries.copy()
    b = int(np.argmax(H.bin_mass("trace")))
    e[b, 5, 5] = -e[b, 5, 5]
    bad = dataclasses.replace(H, entries=e, ladder={**H.ladder, (4, 32): e})
    rep = check_hmeasure_properties(bad, young_estimate(fs))
    assert not rep.psd_ok and not rep.passed


def test_degenerate_fields_rejected():
    with pytest.raises(ConfigError, match="degenerate"):
        hmeasure_estimate([np.zeros(256), np.zeros(256)])


def test_grid_mismatch_rejected():
    fs = sines((8, 16))
    H = hmeasure_estimate(fs, r_list=(8, 16), m_list=(4,))
    with pytest.raises(ConfigError, match="grid mismatch"):
        check_hmeasure_properties(H, young_estimate(fs, p_grid=[0.0, 0.5]))


def test_estimator_api():
    fs = sines((8, 16, 32))
    est = HMeasureEstimator(m_list=(4, 8))
    assert set(est.get_params()) >= {"m_list", "bins", "young_windows"}
    H = est.fit(fs, r_list=(8, 16, 32)).predict()
    assert H.m_list == (4, 8) and H.r_list == (8, 16, 32)
    assert len(H.ladder_rows()) == 6
    assert H.ladder_csv().splitlines()[0].startswith("m,r")


def test_frequency_directions_physical():
    lat = LatticeSpec.from_generators([[1, 0.5], [0, 1]])
    d = frequency_directions((8, 6, 4), lat, time_axis=True)
    assert d.shape == (8, 6, 4, 3)
    kt, k1, k2 = 3, 2, -1
    np.testing.assert_allclose(d[kt, k1, k2], [kt, *(lat.dual_generators @ [k1, k2])])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_properties_on_random_sequences(seed):
    from torus_scl.corpus import oscillating_sequence
    rng = np.random.default_rng(seed)
    fs = oscillating_sequence(rng, (8, 16, 32), (1024,))
    y = young_estimate(fs, windows=8)
    H = hmeasure_estimate(fs, young=y, r_list=(8, 16, 32), m_list=(4, 8))
    assert check_hmeasure_properties(H, y).passed


# -- rescaling and localization ----------------------------------------------

def test_rescale_identity_k1():
    traj = solve(flux_from_spec("abs"), PeriodicField.from_function(lambda x: np.sin(2 * np.pi * x), (64,)), 1.0,
                 rescaled_sample_times([1], 8))
    (f,) = rescale_sequence(traj, [1], (8, 64))
    for j, t in enumerate(rescaled_sample_times([1], 8)):
        np.testing.assert_array_equal(f[j], traj.at(t))


def test_rescale_wave_matches_closed_form():
    w = traveling_wave(flux_from_spec("abs"), LatticeSpec.integer(1), 1)
    fs = rescale_sequence(w, [1, 3], (16, 32))
    direct = rescale_sequence(w.rescaled(3), [1], (16, 32))[0]
    np.testing.assert_allclose(fs[1], direct, atol=1e-14)


def test_rescale_constant():
    traj = solve(flux_from_spec("abs"), PeriodicField(np.full(64, 0.2), LatticeSpec.integer(1)), 2.0,
                 rescaled_sample_times([1, 2], 8))
    for f in rescale_sequence(traj, [1, 2], (8, 32)):
        np.testing.assert_allclose(f, 0.2)


def test_rescale_resolution_error():
    traj = solve(flux_from_spec("abs"), PeriodicField(np.full(64, 0.2), LatticeSpec.integer(1)), 2.0,
                 rescaled_sample_times([1, 2], 8))
    with pytest.raises(ConfigError, match="resolution"):
        rescale_sequence(traj, [1, 2], (8, 64))


def test_s0_distance_geometry():
    lat = LatticeSpec.integer(2)
    v = np.array([[0.6, 0.8, 0.0], [0.0, np.sqrt(0.5), np.sqrt(0.5)], [0.0, 2 / np.sqrt(5), 1 / np.sqrt(5)]])
    d = s0_distance(v, lat, 1.5)
    assert d[0] == pytest.approx(0.0) and d[1] == pytest.approx(0.0)
    # nearest circle is through (1, 1)
    assert d[2] == pytest.approx(np.arccos(3 / np.sqrt(10)))


def test_localization_wave():
    flux = flux_from_spec({"breakpoints": [-1, 0, 1], "values": [[-1, 1], [0, 0], [1, 1]]})
    lat = LatticeSpec.integer(2)
    w = traveling_wave(flux, lat, 0.5)
    fs = rescale_sequence(w, [2, 4, 8], (32, 32, 32))
    H = hmeasure_estimate(fs, r_list=(2, 4, 8), m_list=(2,), bins=SphereBins.icosahedral(3),
                          lattice=lat, time_axis=True, young_windows=(4, 4, 4))
    rep = localization_mass(H, lat, 0.1, 1.5)
    assert rep.fraction >= 0.8 > rep.baseline


def test_localization_requires_time_axis():
    fs = sines((8, 16))
    H = hmeasure_estimate(fs, r_list=(8, 16), m_list=(4,))
    with pytest.raises(ConfigError):
        localization_mass(H, LatticeSpec.integer(1), 0.1)


def test_ladder_concentration_monotone_in_r():
    r_list = (8, 16, 32, 64)
    fs = static_sine_2d(r_list, N=256)
    H = hmeasure_estimate(fs, r_list=r_list, m_list=(2, 4), young_windows=32)
    for m in (2, 4):
        conc = [H.level(m, r).concentration([[1, 0], [-1, 0]]) for r in r_list]
        assert all(b >= a for a, b in zip(conc, conc[1:])), (m, conc)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([1, 4, 16]))
def test_young_table_monotone_in_p(seed, windows):
    rng = np.random.default_rng(seed)
    fs = [rng.standard_normal(256) for _ in range(3)]
    y = young_estimate(fs, windows=windows)
    t = y.u0_table
    assert t.min() >= 0 and t.max() <= 1
    assert np.all(np.diff(t, axis=-1) <= 0)
