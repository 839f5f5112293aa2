import numpy as np
import pytest
from scipy.sparse.linalg import svds

from nlsq.errors import CoefficientError, GridError
from nlsq.fock import superposition01, variance
from nlsq.pdc import (HeraldedCoefficients, MeasurementBasis, closed_form_variance,
                      complete_basis, double_gaussian_jsa, frequency_grid,
                      gaussian_profile, heralded_coeffs, make_seed_profile,
                      random_unitary, reduced_state, scenario_sweep,
                      schmidt_decompose, schmidt_number, seed_overlaps,
                      widths_for_schmidt_number)
from nlsq.squeezing import minimize_squeezing, nonlinear_operator


def _decomp(a, b, points=512):
    grid = frequency_grid(a, b, points=points)
    return schmidt_decompose(double_gaussian_jsa(a, b, grid), grid), grid


def test_jsa_pointwise_and_symmetry():
    grid = frequency_grid(1.0, 0.5)
    jsa = double_gaussian_jsa(1.0, 0.5, grid)
    ws, wi = np.meshgrid(grid, grid, indexing="ij")
    expected = np.exp(-((ws + wi) ** 2)) * np.exp(-((ws - wi) ** 2) / 0.25)
    assert np.abs(jsa - expected).max() < 1e-15
    assert np.abs(jsa - jsa.T).max() < 1e-15
    odd = frequency_grid(1.0, 1.0, points=513)  # contains omega = 0 exactly
    assert double_gaussian_jsa(1.0, 1.0, odd)[256, 256] == pytest.approx(1.0, abs=1e-15)


def test_jsa_grid_validation():
    with pytest.raises(GridError):
        double_gaussian_jsa(1.0, 1.0, np.linspace(-5, 5, 100))
    with pytest.raises(GridError):
        double_gaussian_jsa(1.0, 1.0, np.linspace(-3, 3, 512))
    with pytest.raises(GridError):
        double_gaussian_jsa(1.0, 1.0, np.linspace(-4, 6, 512))


def test_separable_source_is_rank_one():
    d, _ = _decomp(1.0, 1.0)
    assert d.weights[0] > 1 - 1e-8
    assert d.k_eff == pytest.approx(1.0, abs=1e-8)


def test_schmidt_number_from_width_ratio():
    d, _ = _decomp(2.0, 1.0)
    assert d.k_eff == pytest.approx(1.25, abs=1e-6)


@pytest.mark.parametrize("a,b", [(1.0, 2.0), (1.0, 3.0), (2.0, 3.0)])
def test_weight_geometric_law_vs_svd(a, b):
    # oracle is the numerical SVD; the geometric law with mu = |a-b|/(a+b)
    # is the implementer-verified closed form
    d, _ = _decomp(a, b)
    mu = abs(a - b) / (a + b)
    geo = (1 - mu**2) * mu ** (2 * np.arange(d.n_modes))
    geo /= geo.sum()
    assert np.abs(d.weights - geo).max() < 1e-6


def test_mode_gram_matrices():
    d, grid = _decomp(1.0, 0.4)
    w = np.gradient(grid)
    gram_s = (d.signal_modes.conj() * w) @ d.signal_modes.T
    gram_i = (d.idler_modes.conj() * w) @ d.idler_modes.T
    eye = np.eye(d.n_modes)
    assert np.abs(gram_s - eye).max() < 1e-6
    assert np.abs(gram_i - eye).max() < 1e-6


def test_schmidt_reconstructs_jsa():
    grid = frequency_grid(1.0, 0.6)
    jsa = double_gaussian_jsa(1.0, 0.6, grid)
    d = schmidt_decompose(jsa, grid, lambda_cutoff=1e-14)
    sigma = np.sqrt(d.weights)
    recon = (d.signal_modes.T * sigma) @ d.idler_modes
    scale = jsa.max() / recon.max().real
    assert np.abs(jsa - recon * scale).max() < 1e-6


def test_schmidt_number_examples():
    assert schmidt_number([1.0]) == pytest.approx(1.0)
    assert schmidt_number([0.5, 0.5]) == pytest.approx(2.0)
    assert schmidt_number([0.8, 0.2]) == pytest.approx(1 / 0.68, abs=1e-12)
    with pytest.raises(ValueError):
        schmidt_number([])
    with pytest.raises(ValueError):
        schmidt_number([0.5, 0.1])


def test_seed_overlaps_schmidt_modes():
    d, _ = _decomp(1.0, 0.5)
    f1 = seed_overlaps(d.signal_modes[0], d)
    assert abs(f1[0] - 1.0) < 1e-8
    assert np.abs(f1[1:]).max() < 1e-8
    f2 = seed_overlaps(d.signal_modes[1], d)
    assert abs(f2[1] - 1.0) < 1e-8
    assert abs(f2[0]) < 1e-8


def test_seed_overlaps_grid_mismatch():
    d, _ = _decomp(1.0, 0.5)
    with pytest.raises(GridError):
        seed_overlaps(np.ones(17), d)


def test_gaussian_seed_overlap_grid_refinement_oracle():
    # coarse- and fine-grid values of the leading overlap agree to 1e-6;
    # the fine-grid mode comes from an independent Lanczos SVD
    a, b = 1.0, 0.45
    d, grid = _decomp(a, b, points=256)
    coarse = abs(seed_overlaps(gaussian_profile(a, grid), d)[0])
    assert coarse < 1.0

    fine = frequency_grid(a, b, points=2560)
    jsa = double_gaussian_jsa(a, b, fine)
    dw = fine[1] - fine[0]
    u, s, vh = svds(jsa * dw, k=3)
    order = np.argsort(s)[::-1]
    tau1 = u[:, order[0]] / np.sqrt(dw)
    tau1 /= np.sqrt(np.sum(np.abs(tau1) ** 2) * dw)
    overlap_fine = abs(np.sum(np.conj(tau1) * gaussian_profile(a, fine)) * dw)
    assert overlap_fine == pytest.approx(coarse, abs=1e-6)


def test_grid_refinement_stability():
    d1, _ = _decomp(1.0, 0.5, points=512)
    d2, _ = _decomp(1.0, 0.5, points=1024)
    n = min(8, d1.n_modes, d2.n_modes)
    assert np.abs(d1.weights[:n] - d2.weights[:n]).max() < 1e-7
    xi = []
    for points in (512, 1024):
        pts = scenario_sweep(1, [(1.0, 0.5)], 1.28, grid_points=points)
        xi.append(pts[0].xi_db)
    assert abs(xi[0] - xi[1]) < 1e-4


def test_seed_profile_norm_validation():
    d, grid = _decomp(1.0, 0.5)
    with pytest.raises(ValueError):
        make_seed_profile(1.0, np.ones(grid.size), d)
    prof = make_seed_profile(0.3 + 0.1j, gaussian_profile(1.0, grid), d)
    assert np.sum(np.abs(prof.overlaps) ** 2) <= 1 + 1e-9


def test_measurement_basis_validation():
    with pytest.raises(ValueError):
        MeasurementBasis(np.array([[1.0, 0.1], [0.0, 1.0]]))
    rng = np.random.default_rng(0)
    MeasurementBasis(random_unitary(4, rng))  # does not raise


def test_complete_basis_first_column():
    rng = np.random.default_rng(1)
    v = rng.normal(size=6) + 1j * rng.normal(size=6)
    v /= np.linalg.norm(v)
    u = complete_basis(v)
    assert np.abs(u[:, 0] - v).max() < 1e-12
    assert np.abs(u.conj().T @ u - np.eye(6)).max() < 1e-12


def test_heralded_single_mode_collapses_to_pure_state():
    coeffs = heralded_coeffs([1.0], np.eye(1), 1.28, [1.0])
    assert coeffs.normalization == pytest.approx(1 / (1.28**2 + 1), abs=1e-12)
    assert coeffs.corr[0, 0].real == pytest.approx(1.0, abs=1e-12)
    assert abs(coeffs.cross[0]) < 1e-12
    assert abs(coeffs.vac_weight[0]) < 1e-12
    st = reduced_state(coeffs, 0, 12)
    target = superposition01(12, 1.28)  # |phi(beta)> = beta*|0> + |1>, beta real
    assert np.abs(st.density() - target.density()).max() < 1e-12


def test_heralded_two_mode_schmidt_basis():
    lam1, lam2 = 0.7, 0.3
    gamma = 0.9 + 0.4j
    f = np.array([1.0, 1.0]) / np.sqrt(2)
    coeffs = heralded_coeffs([lam1, lam2], np.eye(2), gamma, f)
    assert coeffs.corr[0, 0].real == pytest.approx(lam1, abs=1e-12)
    assert coeffs.corr[1, 1].real == pytest.approx(lam2, abs=1e-12)
    assert np.abs(coeffs.cross).max() < 1e-12
    # vacuum weight of mode 1 matches (1 - lam1)((1 - f1^2)|gamma|^2 + 1),
    # scaled by the overall normalization in the reduced state
    st = reduced_state(coeffs, 0, 6)
    expected_vac = (1 - lam1) * ((1 - 0.5) * abs(gamma) ** 2 + 1)
    assert coeffs.vac_weight[0] == pytest.approx(expected_vac, abs=1e-12)
    phi = np.array([np.conj(coeffs.beta[0]), 1.0])
    recon = coeffs.normalization * (lam1 * np.outer(phi, phi.conj())
                                    + np.diag([expected_vac, 0.0]))
    assert np.abs(st.density()[:2, :2] - recon).max() < 1e-12


def test_heralded_two_mode_diagonal_basis():
    # equal seed split, basis rotated by nu = -pi/4: beta1 = 0, beta2 = gamma,
    # cross couplings (lam1-lam2) gamma/2 and 0, corr diag 1/2
    lam1, lam2 = 0.8, 0.2
    gamma = 1.1 - 0.3j
    alpha = np.array([gamma, gamma]) / np.sqrt(2)
    nu = -np.pi / 4
    u = np.array([[np.cos(nu), -np.sin(nu)], [np.sin(nu), np.cos(nu)]])
    coeffs = heralded_coeffs([lam1, lam2], u, gamma,
                             np.array([1, 1]) / np.sqrt(2))
    assert abs(coeffs.beta[0]) < 1e-12
    assert coeffs.beta[1] == pytest.approx(gamma, abs=1e-12)
    assert coeffs.cross[0] == pytest.approx((lam1 - lam2) * gamma / 2, abs=1e-12)
    assert abs(coeffs.cross[1]) < 1e-12
    assert coeffs.corr[0, 0].real == pytest.approx(0.5, abs=1e-12)
    assert coeffs.corr[1, 1].real == pytest.approx(0.5, abs=1e-12)
    assert coeffs.vac_weight[1] == pytest.approx(0.5, abs=1e-12)


def test_heralded_coeffs_validation():
    with pytest.raises(ValueError):
        heralded_coeffs([0.7, 0.3], np.array([[1, 0.2], [0, 1]]), 1.0, [1, 0])
    with pytest.raises(ValueError):
        heralded_coeffs([0.7, 0.7], np.eye(2), 1.0, [1, 0])


def test_reduced_state_rejects_inconsistent_coefficients():
    bad = HeraldedCoefficients(
        normalization=0.5,
        corr=np.eye(2, dtype=complex) * 0.5,
        beta=np.array([2.0, 0.0], dtype=complex),
        cross=np.array([0.0, 0.0], dtype=complex),
        vac_weight=np.array([-2.0, 0.5]),
    )
    with pytest.raises(CoefficientError):
        reduced_state(bad, 0, 8)


def test_reduced_state_mode_index():
    coeffs = heralded_coeffs([1.0], np.eye(1), 0.5, [1.0])
    with pytest.raises(ValueError):
        reduced_state(coeffs, 1, 8)


def test_reduced_state_depends_only_on_measured_column():
    rng = np.random.default_rng(5)
    lam = np.array([0.5, 0.3, 0.2])
    gamma = 0.8 + 0.6j
    f = rng.normal(size=3) + 1j * rng.normal(size=3)
    f = 0.9 * f / np.linalg.norm(f)
    u = random_unitary(3, rng)
    rho = reduced_state(heralded_coeffs(lam, u, gamma, f), 0, 8).density()
    # acting with a unitary on the complement of mode 0 keeps rho_0 fixed
    v = np.eye(3, dtype=complex)
    v[1:, 1:] = random_unitary(2, rng)
    rho2 = reduced_state(heralded_coeffs(lam, u @ v, gamma, f), 0, 8).density()
    assert np.abs(rho - rho2).max() < 1e-12
    # permuting the basis relabels the reduced states
    perm = np.eye(3)[:, [2, 0, 1]]
    rho3 = reduced_state(heralded_coeffs(lam, u @ perm, gamma, f), 1, 8).density()
    assert np.abs(rho - rho3).max() < 1e-12


def test_closed_form_variance_examples():
    coeffs = heralded_coeffs([1.0], np.eye(1), 1.28, [1.0])
    st = reduced_state(coeffs, 0, 12)
    direct = variance(st, nonlinear_operator(12, 0.49, np.pi / 2))
    assert closed_form_variance(coeffs, 0, 0.49) == pytest.approx(direct, abs=1e-10)

    # gamma = 0: variance = 1/2 + kappa + z^2 (1/2 + 2 kappa - kappa^2)
    coeffs0 = heralded_coeffs([0.6, 0.4], np.eye(2), 0.0, [1.0, 0.0])
    kap = coeffs0.normalization * coeffs0.corr[0, 0].real
    for z in (0.2, 0.7):
        expected = 0.5 + kap + z**2 * (0.5 + 2 * kap - kap**2)
        assert closed_form_variance(coeffs0, 0, z) == pytest.approx(expected, abs=1e-12)


def test_closed_form_variance_random_configurations():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 6))
        lam = rng.random(n) + 1e-3
        lam /= lam.sum()
        u = random_unitary(n, rng)
        f = rng.normal(size=n) + 1j * rng.normal(size=n)
        f = rng.uniform(0.1, 1.0) * f / np.linalg.norm(f)
        gamma = rng.normal() + 1j * rng.normal()
        z = rng.uniform(-2.0, 2.0)
        j = int(rng.integers(0, n))
        coeffs = heralded_coeffs(lam, u, gamma, f)
        fast = closed_form_variance(coeffs, j, z)
        slow = variance(reduced_state(coeffs, j, 10), nonlinear_operator(10, z, np.pi / 2))
        worst = max(worst, abs(fast - slow))
    assert worst < 1e-9


def test_canonical_configuration_maximizes_displacement_term():
    # the linear-in-z coefficient is largest for the identity basis and a
    # seed matched to the measured Schmidt mode (gamma on the imaginary axis)
    rng = np.random.default_rng(13)
    lam = np.array([0.6, 0.25, 0.15])
    gamma = 1.28j
    f = np.array([1.0, 0.0, 0.0])

    def mu(u):
        c = heralded_coeffs(lam, u, gamma, f)
        return np.sqrt(2) * c.normalization * float(
            np.imag(c.corr[0, 0] * c.beta[0] + c.cross[0]))

    canonical = mu(np.eye(3))
    best = max(mu(random_unitary(3, rng)) for _ in range(500))
    assert best <= canonical + 1e-9


def test_scenario_sweep_endpoint_and_dominance():
    ks = (1.0, 1.2, 1.5, 1.9)
    pairs = [widths_for_schmidt_number(k) for k in ks]
    s1 = scenario_sweep(1, pairs, 1.28)
    s2 = scenario_sweep(2, pairs, 1.28)
    assert s1[0].xi_db == pytest.approx(-1.45, abs=0.02)
    assert s2[0].xi_db == pytest.approx(-1.45, abs=0.02)
    for p1, p2 in zip(s1, s2):
        assert p1.xi_db <= p2.xi_db + 1e-6
        assert p1.k_eff == pytest.approx(p2.k_eff, abs=1e-6)


def test_scenario_sweep_rejects_unknown_id():
    with pytest.raises(ValueError):
        scenario_sweep(3, [(1.0, 1.0)], 1.0)


def test_schmidt_csv(tmp_path):
    d, _ = _decomp(1.0, 0.5, points=256)
    path = tmp_path / "schmidt.csv"
    d.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0].startswith("# weights,")
    assert lines[1].split(",")[0] == "omega"
    assert len(lines) == 2 + 256
