import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torus_scl._validation import ConfigError
from torus_scl.flux import flux_from_spec, make_flux
from torus_scl.lattice import LatticeSpec
from torus_scl.solver import CFLError, PeriodicField, cfl_limit, entropy_residual, mean, solve, step

ABS = flux_from_spec("abs")
LIN = make_flux([0, 1], [0, 1])
BURGERS = flux_from_spec("burgers_sampled(1/20)")
L1 = LatticeSpec.integer(1)
L2 = LatticeSpec.integer(2)


def sine(N, offset=0.0, amp=1.0):
    return PeriodicField.from_function(lambda x: offset + amp * np.sin(2 * np.pi * x), (N,))


@pytest.mark.parametrize("flux, lat, dims", [
    (ABS, L1, (64,)), (BURGERS, L1, (50,)), (flux_from_spec("burgers2_sampled(1/10)"), L2, (16, 12)),
])
def test_constant_unchanged(flux, lat, dims):
    u = PeriodicField(np.full(dims, 0.37), lat)
    v = step(u, flux, 0.5 * cfl_limit(u, flux, 0.5) + 1e-3)
    np.testing.assert_array_equal(v.data, u.data)
    traj = solve(flux, u, 0.5)
    for f in traj.fields:
        np.testing.assert_array_equal(f, u.data)


def test_linear_flux_unit_cfl_is_exact_shift():
    N = 40
    u = sine(N)
    h = 1.0 / N
    v = step(u, LIN, h, cfl=1.0)
    np.testing.assert_allclose(v.data, np.roll(u.data, 1), atol=1e-15)


def test_abs_on_nonnegative_matches_linear(rng):
    u = PeriodicField(rng.uniform(0.0, 1.0, 64), L1)
    dt = 0.4 / 64
    np.testing.assert_allclose(step(u, ABS, dt).data, step(u, LIN, dt).data, atol=1e-15)


def test_cfl_violation_raises():
    u = sine(50)
    with pytest.raises(CFLError):
        step(u, BURGERS, 10 * cfl_limit(u, BURGERS, 0.5))


def test_abs_translation_example():
    # nonnegative data moves right with unit speed
    N = 400
    u0 = PeriodicField.from_function(lambda x: np.maximum(np.sin(2 * np.pi * x), 0.0), (N,))
    traj = solve(ABS, u0, 1.0)
    from torus_scl.decay import min_shift_distance
    assert min_shift_distance(traj.fields[-1], u0.data) <= 1.5 * np.sqrt(1.0 / N)


def test_mean_midpoint_sine():
    assert mean(PeriodicField(np.full(10, 2.5), L1)) == 2.5
    for N in (8, 64, 400):
        assert abs(mean(sine(N, 0.3, 0.5)) - 0.3) <= 1e-12


def test_sample_times_hit_exactly():
    times = [0.0, 0.013, 0.1, 0.25]
    traj = solve(BURGERS, sine(100), 0.25, times)
    np.testing.assert_array_equal(traj.times, times)


@pytest.mark.parametrize("flux, u0", [
    (BURGERS, sine(200)),
    (ABS, sine(200)),
    (ABS, sine(200, 0.5, 0.3)),
])
def test_entropy_residual_small(flux, u0):
    traj = solve(flux, u0, 0.5, diagnostics=True)
    for k in np.linspace(u0.data.min(), u0.data.max(), 5):
        assert entropy_residual(traj, k) <= 1e-10


def test_entropy_residual_trivial_cases():
    traj = solve(BURGERS, PeriodicField(np.full(20, 0.2), L1), 0.2, diagnostics=True)
    assert entropy_residual(traj, 0.0) == 0.0
    traj = solve(BURGERS, sine(50), 0.2, diagnostics=True)
    assert entropy_residual(traj, 3.0) <= 1e-13


def test_entropy_residual_requires_diagnostics():
    with pytest.raises(ConfigError):
        entropy_residual(solve(BURGERS, sine(20), 0.1), 0.0)


def test_field_validation():
    with pytest.raises(ConfigError):
        PeriodicField(np.array([1.0, np.nan]), L1)
    with pytest.raises(ConfigError):
        PeriodicField(np.zeros((4, 4)), L1)


def test_two_dimensional_skew_lattice_conserves():
    lat = LatticeSpec.from_generators([[1, 0.5], [0, 1]])
    u0 = PeriodicField.from_fourier((24, 24), [{"mode": [1, 2], "amplitude": 0.8}], 0.1, lat)
    traj = solve(flux_from_spec("cubic2_sampled(1/10)"), u0, 0.3)
    for f in traj.fields:
        assert abs(f.mean() - u0.data.mean()) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(8, 96), st.floats(-1, 1), st.floats(0.05, 1.5), st.integers(0, 2 ** 31))
def test_invariants_random_data(N, offset, amp, seed):
    """Conservation, maximum principle and L1 contraction on random 1-D data."""
    rng = np.random.default_rng(seed)
    data = offset + amp * rng.standard_normal(N)
    u0 = PeriodicField(data, L1)
    traj = solve(BURGERS, u0, 0.3, np.linspace(0, 0.3, 5))
    e = []
    for f in traj.fields:
        assert abs(f.mean() - data.mean()) <= 1e-12
        assert f.min() >= data.min() - 1e-12 and f.max() <= data.max() + 1e-12
        e.append(np.abs(f - data.mean()).mean())
    assert np.all(np.diff(e) <= 1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_comparison_principle(seed):
    from torus_scl.decay import comparison_check
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, 64)
    b = a + rng.uniform(0, 0.5, 64)
    assert comparison_check(BURGERS, PeriodicField(a, L1), PeriodicField(b, L1), 0.2)


def test_trajectory_csv_roundtrip():
    traj = solve(ABS, sine(16), 0.1, [0, 0.05, 0.1])
    lines = traj.to_csv().strip().splitlines()
    assert len(lines) == 1 + 3 * 16
    assert lines[0].split(",")[0] == "t"


def test_deterministic():
    a = solve(BURGERS, sine(128), 0.4)
    b = solve(BURGERS, sine(128), 0.4)
    np.testing.assert_array_equal(a.fields[-1], b.fields[-1])


@pytest.mark.parametrize("flux", [BURGERS, ABS])
def test_self_convergence(flux):
    """L1 distance between the N and 2N solutions decreases with N."""
    def at(N, M):
        f = solve(flux, sine(N), 0.5).fields[-1]
        return f.reshape(M, N // M).mean(axis=1)

    dists = []
    for N in (100, 200, 400):
        dists.append(np.abs(at(N, 100) - at(2 * N, 100)).mean())
    assert dists[0] > dists[1] > dists[2]
