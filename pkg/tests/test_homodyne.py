import numpy as np
import pytest

from nlsq.fock import QuantumState, fock_state, superposition01, vacuum, variance
from nlsq.homodyne import (FOUR_ANGLES, binned_moments, four_angle_variance,
                           monte_carlo_squeezing, monte_carlo_z_scan,
                           quadrature_pdf, sample, sample_moments)
from nlsq.squeezing import gaussian_bound, min_ratio_at_z, minimize_squeezing, \
    nonlinear_operator, to_db

PHI2_AMPS = (0.430324900655, 0.783465365767, 0.448333024124)


def _phi1(dim=12):
    return superposition01(dim, -1.28j)


def _phi2(dim=12):
    amps = np.zeros(dim, dtype=complex)
    amps[0] = PHI2_AMPS[0]
    amps[1] = 1j * PHI2_AMPS[1]
    amps[2] = -PHI2_AMPS[2]
    return QuantumState.pure(amps / np.linalg.norm(amps))


def test_pdf_vacuum_gaussian():
    for theta in (0.0, 0.7, np.pi / 2):
        dist = quadrature_pdf(vacuum(10), theta)
        assert np.trapezoid(dist.density, dist.xgrid) == pytest.approx(1.0, abs=1e-9)
        assert dist.moment(2) == pytest.approx(0.5, abs=1e-9)
        expected = np.exp(-dist.xgrid**2) / np.sqrt(np.pi)
        assert np.abs(dist.density - expected).max() < 1e-9


def test_pdf_single_photon_shape():
    dist = quadrature_pdf(fock_state(10, 1), 1.3)
    expected = 2 * dist.xgrid**2 * np.exp(-dist.xgrid**2) / np.sqrt(np.pi)
    assert np.abs(dist.density - expected).max() < 1e-9
    mid = dist.xgrid.size // 2
    assert dist.density[mid] < 1e-6


def test_pdf_rotation_matches_operator_moments():
    # the distribution of X(theta) = cos(theta) x + sin(theta) p must have
    # the operator's first and second moments
    from nlsq.fock import expectation, quadrature_ops
    rng = np.random.default_rng(2)
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    st = QuantumState.pure(np.pad(amps / np.linalg.norm(amps), (0, 8)))
    x, p = quadrature_ops(12)
    for theta in (0.0, 0.4, np.pi / 2, 2.0):
        dist = quadrature_pdf(st, theta)
        op = np.cos(theta) * x + np.sin(theta) * p
        assert dist.moment(1) == pytest.approx(expectation(st, op).real, abs=1e-9)
        assert dist.moment(2) == pytest.approx(expectation(st, op @ op).real, abs=1e-9)


def test_pdf_mirror_symmetry_between_opposite_angles():
    # 0-1 superposition with real amplitude: theta = 0 and theta = pi give
    # mirror-image densities
    st = superposition01(12, 1.28)
    d0 = quadrature_pdf(st, 0.0)
    dpi = quadrature_pdf(st, np.pi)
    assert np.abs(d0.density - dpi.density[::-1]).max() < 1e-10


def test_pdf_rejects_mixed_states():
    mixed = QuantumState.mixed(np.diag([0.5, 0.5, 0, 0]).astype(complex))
    with pytest.raises(ValueError):
        quadrature_pdf(mixed, 0.0)


def test_pdf_cdf_invariants():
    dist = quadrature_pdf(_phi1(), 0.73)
    assert np.all(dist.density >= 0)
    assert np.all(np.diff(dist.cdf) >= 0)
    assert dist.cdf[-1] == pytest.approx(1.0, abs=1e-9)


def test_sampling_deterministic():
    dist = quadrature_pdf(vacuum(10), 0.0)
    s1 = sample(dist, 5000, 99)
    s2 = sample(dist, 5000, 99)
    assert np.array_equal(s1.samples, s2.samples)


def test_sampling_vacuum_statistics():
    dist = quadrature_pdf(vacuum(10), 0.0)
    s = sample(dist, 10**6, 7)
    assert s.samples.var() == pytest.approx(0.5, abs=0.002)
    assert abs(s.samples.mean()) < 0.003


def test_sampling_single_photon_mean():
    dist = quadrature_pdf(fock_state(10, 1), 0.0)
    s = sample(dist, 10**6, 8)
    assert abs(s.samples.mean()) < 0.004


def test_sample_rejects_empty():
    dist = quadrature_pdf(vacuum(10), 0.0)
    with pytest.raises(ValueError):
        sample(dist, 0, 1)


def test_binned_moments_constant_samples():
    bm = binned_moments(np.full(500, 1.7))
    assert np.count_nonzero(bm.counts) == 1
    assert bm.m == 500
    for k in range(1, 5):
        assert bm.moments[k - 1] == pytest.approx(1.7**k, abs=1e-12)


def test_binned_moments_vacuum_bands():
    s = sample(quadrature_pdf(vacuum(10), 0.0), 10**5, 21)
    bm = binned_moments(s.samples)
    assert bm.moments[1] == pytest.approx(0.5, abs=0.01)
    assert bm.moments[3] == pytest.approx(0.75, abs=0.03)


def test_binned_vs_direct_moments():
    s = sample(quadrature_pdf(superposition01(12, 1.28), 0.0), 10**5, 5)
    binned = binned_moments(s.samples).moments
    direct = sample_moments(s.samples)
    for k in range(4):
        rel = abs(binned[k] - direct[k]) / max(abs(direct[k]), 1e-12)
        assert rel < 0.002, f"moment {k + 1} differs by {rel}"


def test_binned_moments_empty_raises():
    with pytest.raises(ValueError):
        binned_moments(np.array([]))


def test_four_angle_formula_on_vacuum():
    dists = [quadrature_pdf(vacuum(10), th) for th in FOUR_ANGLES]
    ms = [d.exact_moments() for d in dists]
    # oracle: operator variance of O(1, pi/2) on vacuum
    oracle = variance(vacuum(10), nonlinear_operator(10, 1.0, np.pi / 2))
    assert four_angle_variance(ms[0], ms[1], ms[2], ms[3], 1.0) == pytest.approx(
        oracle, abs=1e-10)
    assert oracle == pytest.approx(1.0, abs=1e-12)


def test_four_angle_reduces_to_p_variance_at_zero_z():
    dists = [quadrature_pdf(_phi1(), th) for th in FOUR_ANGLES]
    ms = [d.exact_moments() for d in dists]
    expected = ms[1][1] - ms[1][0] ** 2
    assert four_angle_variance(ms[0], ms[1], ms[2], ms[3], 0.0) == pytest.approx(
        expected, abs=1e-12)


@pytest.mark.parametrize("state_fn", [vacuum, lambda d: _phi1(d), lambda d: _phi2(d)])
def test_four_angle_identity_against_operator(state_fn):
    st = state_fn(12)
    dists = [quadrature_pdf(st, th) for th in FOUR_ANGLES]
    ms = [d.exact_moments() for d in dists]
    for z in (0.2, 0.49, 2**-0.5, 1.0, 1.5):
        est = four_angle_variance(ms[0], ms[1], ms[2], ms[3], z)
        op = variance(st, nonlinear_operator(12, z, np.pi / 2))
        assert est == pytest.approx(op, abs=1e-9), f"z = {z}"


def test_four_angle_vectorized_over_z():
    dists = [quadrature_pdf(_phi1(), th) for th in FOUR_ANGLES]
    ms = [d.exact_moments() for d in dists]
    zs = np.array([0.3, 0.49, 0.8])
    vec = four_angle_variance(ms[0], ms[1], ms[2], ms[3], zs)
    for z, v in zip(zs, vec):
        assert v == pytest.approx(four_angle_variance(ms[0], ms[1], ms[2], ms[3], z))


def test_monte_carlo_reproducible():
    r1 = monte_carlo_squeezing(_phi1(), 0.49, 2000, 5, 31)
    r2 = monte_carlo_squeezing(_phi1(), 0.49, 2000, 5, 31)
    assert np.array_equal(r1.xi_db, r2.xi_db)
    assert r1.mean == r2.mean and r1.std == r2.std


def test_monte_carlo_result_consistency_and_io(tmp_path):
    res = monte_carlo_squeezing(_phi1(), 0.49, 2000, 8, 13)
    assert res.mean == pytest.approx(res.xi_db.mean(), abs=1e-12)
    assert res.std == pytest.approx(res.xi_db.std(ddof=1), abs=1e-12)
    data = res.to_json()
    assert '"m": 2000' in data
    path = tmp_path / "repeats.csv"
    res.repeats_to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "repeat,xi_db"
    assert len(lines) == 9


def test_monte_carlo_vacuum_false_positive_guard():
    res = monte_carlo_squeezing(vacuum(10), 2**-0.5, 10**5, 100, 77)
    assert abs(res.mean) < res.std
    smaller = monte_carlo_squeezing(vacuum(10), 2**-0.5, 10**6, 30, 78)
    assert smaller.std < res.std


def test_estimator_consistency_with_sample_size():
    phi1 = _phi1()
    exact = to_db(min_ratio_at_z(phi1, 0.49)[0])
    biases, stds = [], []
    for m in (10**3, 10**4, 10**5, 10**6):
        res = monte_carlo_squeezing(phi1, 0.49, m, 50, 123)
        biases.append(abs(res.mean - exact))
        stds.append(res.std)
    assert all(b2 <= b1 + 0.01 for b1, b2 in zip(biases, biases[1:]))
    assert biases[-1] < biases[0] / 5
    # std should follow roughly M^{-1/2} over three decades (factor-2 band)
    ratio = stds[0] / stds[-1]
    assert np.sqrt(1000) / 2 < ratio < np.sqrt(1000) * 2


def test_z_scan_minimizer_near_native_cubicity():
    zs = np.arange(0.15, 1.2001, 0.02)
    xi = monte_carlo_z_scan(_phi1(), zs, 10**5, 20, 11)
    mean = xi.mean(axis=0)
    z_star = zs[np.argmin(mean)]
    assert abs(z_star - 0.49) <= 0.05
    # single-minimum shape: strictly higher at the scan edges
    assert mean[0] > mean.min() + 0.3
    assert mean[-1] > mean.min() + 0.3


def test_z_scan_tracks_exact_curve():
    zs = np.array([0.3, 0.49, 0.9])
    xi = monte_carlo_z_scan(_phi1(), zs, 10**5, 20, 19).mean(axis=0)
    exact = np.array([to_db(min_ratio_at_z(_phi1(), z)[0]) for z in zs])
    assert np.abs(xi - exact).max() < 0.05


def test_phi2_states_squeezes_more_than_phi1():
    r1 = minimize_squeezing(_phi1())
    r2 = minimize_squeezing(_phi2())
    assert r2.xi_db < r1.xi_db - 0.5
    assert r2.theta_opt == pytest.approx(np.pi / 2, abs=1e-6)
    assert r2.z_opt > 0
