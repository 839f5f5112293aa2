"""Seeded, heralded multimode parametric down-conversion source model.

Builds the double-Gaussian joint spectral amplitude, its Schmidt decomposition
on a frequency grid, the change to an arbitrary measurement basis, and the
reduced single-mode states conditioned on a mode-unresolved single-photon
herald.  A closed-form variance for the heralded states provides a fast path
that the Fock-space machinery cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CoefficientError, GridError
from .fock import QuantumState
from .squeezing import OptimizerOptions, minimize_squeezing

LAMBDA_CUTOFF = 1e-8
MAX_MODES = 32
UNITARY_TOL = 1e-10


def frequency_grid(a: float, b: float, span_factor: float = 5.0,
                   points: int = 512) -> np.ndarray:
    """Uniform symmetric grid covering span_factor times the larger width."""
    half = span_factor * max(a, b)
    return np.linspace(-half, half, points)


def _quadrature_weights(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    w = np.empty_like(grid)
    w[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    w[0] = 0.5 * (grid[1] - grid[0])
    w[-1] = 0.5 * (grid[-1] - grid[-2])
    return w


def double_gaussian_jsa(a: float, b: float, grid: np.ndarray) -> np.ndarray:
    """S(ω, ω') = exp(-(ω+ω')²/a²) exp(-(ω-ω')²/b²) sampled on the grid."""
    if a <= 0 or b <= 0:
        raise ValueError("spectral widths must be positive")
    grid = np.asarray(grid, dtype=float)
    if grid.size < 256:
        raise GridError(f"need at least 256 grid points, got {grid.size}")
    if abs(grid[0] + grid[-1]) > 1e-9 * (grid[-1] - grid[0]):
        raise GridError("frequency grid must be symmetric about 0")
    if grid[-1] < 5.0 * max(a, b) * (1.0 - 1e-12):
        raise GridError(
            f"grid reaches {grid[-1]:.3g} but must span at least 5 max(a,b) = "
            f"{5.0 * max(a, b):.3g}"
        )
    ws, wi = np.meshgrid(grid, grid, indexing="ij")
    return np.exp(-((ws + wi) ** 2) / a**2) * np.exp(-((ws - wi) ** 2) / b**2)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Schmidt modes of a discretized joint spectral amplitude.

    ``weights`` are the normalized eigenvalues (descending, summing to one),
    ``signal_modes[n]`` and ``idler_modes[n]`` the discretized mode functions,
    orthonormal under the grid quadrature, and ``k_eff`` the Schmidt number.
    """

    omega: np.ndarray
    weights: np.ndarray
    signal_modes: np.ndarray
    idler_modes: np.ndarray
    k_eff: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "k_eff",
                           float(1.0 / np.sum(self.weights**2)))

    @property
    def n_modes(self) -> int:
        return self.weights.size

    def to_csv(self, path):
        lam = ",".join(f"{v:.12g}" for v in self.weights)
        with open(path, "w") as fh:
            fh.write(f"# weights,{lam}\n")
            cols = ["omega"]
            cols += [f"signal_{n}" for n in range(self.n_modes)]
            cols += [f"idler_{n}" for n in range(self.n_modes)]
            fh.write(",".join(cols) + "\n")
            for i, w in enumerate(self.omega):
                row = [f"{w:.12g}"]
                row += [f"{v:.12g}" for v in self.signal_modes[:, i].real]
                row += [f"{v:.12g}" for v in self.idler_modes[:, i].real]
                fh.write(",".join(row) + "\n")


def schmidt_decompose(jsa: np.ndarray, grid: np.ndarray,
                      lambda_cutoff: float = LAMBDA_CUTOFF,
                      max_modes: int = MAX_MODES) -> SchmidtDecomposition:
    """Quadrature-weighted SVD of the JSA, normalized so the weights sum to 1.

    The kernel is symmetrized with sqrt(quadrature weight) factors before the
    SVD so the discrete modes come out orthonormal under the continuum inner
    product; each signal mode's global phase is fixed by making its largest
    entry real positive.
    """
    grid = np.asarray(grid, dtype=float)
    jsa = np.asarray(jsa, dtype=complex)
    if jsa.shape != (grid.size, grid.size):
        raise GridError(f"JSA shape {jsa.shape} does not match grid {grid.size}")
    w = _quadrature_weights(grid)
    sqw = np.sqrt(w)
    kernel = sqw[:, None] * jsa * sqw[None, :]
    try:
        u, s, vh = np.linalg.svd(kernel)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(f"SVD of the JSA failed: {exc}") from exc
    lam = s**2
    lam = lam / lam.sum()
    keep = min(max_modes, int(np.sum(lam > lambda_cutoff)))
    keep = max(keep, 1)
    lam = lam[:keep]
    lam = lam / lam.sum()
    signal = (u[:, :keep] / sqw[:, None]).T.copy()
    idler = (vh[:keep, :] / sqw[None, :]).copy()
    for n in range(keep):
        i = int(np.argmax(np.abs(signal[n])))
        phase = signal[n, i] / abs(signal[n, i])
        signal[n] /= phase
        idler[n] *= phase
    return SchmidtDecomposition(omega=grid, weights=lam,
                                signal_modes=signal, idler_modes=idler)


def schmidt_number(weights) -> float:
    """K = 1/Σ λ², the effective number of occupied Schmidt modes."""
    lam = np.asarray(weights, dtype=float)
    if lam.size == 0:
        raise ValueError("empty weight vector")
    total = lam.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"weights sum to {total}, not normalized")
    return float(1.0 / np.sum(lam**2))


@dataclass(frozen=True)
class SeedProfile:
    """Coherent seed: amplitude, discretized spectral profile and mode overlaps."""

    gamma: complex
    values: np.ndarray
    overlaps: np.ndarray


def seed_overlaps(f_values: np.ndarray, decomp: SchmidtDecomposition) -> np.ndarray:
    """Overlap of the seed profile with each signal Schmidt mode."""
    f = np.asarray(f_values, dtype=complex)
    if f.size != decomp.omega.size:
        raise GridError(
            f"seed profile has {f.size} points but the decomposition grid has "
            f"{decomp.omega.size}"
        )
    w = _quadrature_weights(decomp.omega)
    overlaps = decomp.signal_modes.conj() @ (w * f)
    total = float(np.sum(np.abs(overlaps) ** 2))
    if total > 1.0 + 1e-9:
        raise ValueError(f"overlap norm {total} exceeds 1")
    return overlaps


def make_seed_profile(gamma: complex, values: np.ndarray,
                      decomp: SchmidtDecomposition) -> SeedProfile:
    values = np.asarray(values, dtype=complex)
    w = _quadrature_weights(decomp.omega)
    norm = float(np.sum(w * np.abs(values) ** 2))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"seed profile norm {norm} is not 1 within 1e-9")
    return SeedProfile(gamma=complex(gamma), values=values,
                       overlaps=seed_overlaps(values, decomp))


def gaussian_profile(width_a: float, grid: np.ndarray) -> np.ndarray:
    """Fundamental Schmidt mode of the symmetric (a = b) source, unit norm."""
    grid = np.asarray(grid, dtype=float)
    prof = np.exp(-2.0 * grid**2 / width_a**2)
    w = _quadrature_weights(grid)
    return prof / np.sqrt(np.sum(w * prof**2))


@dataclass(frozen=True)
class MeasurementBasis:
    """Unitary connecting the Schmidt basis to the measurement basis."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        defect = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
        if defect > UNITARY_TOL:
            raise ValueError(f"basis matrix is not unitary (defect {defect:.2e})")
        object.__setattr__(self, "matrix", u)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0]


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


def complete_basis(first_column: np.ndarray) -> np.ndarray:
    """Unitary whose first column is the given unit vector (QR completion)."""
    col = np.asarray(first_column, dtype=complex).reshape(-1)
    col = col / np.linalg.norm(col)
    n = col.size
    block = np.eye(n, dtype=complex)
    block[:, 0] = col
    q, _ = np.linalg.qr(block)
    s = np.vdot(q[:, 0], col)
    q[:, 0] *= s
    # re-fix residual phases so the first column matches exactly
    q[:, 0] = col
    return q


@dataclass(frozen=True)
class HeraldedCoefficients:
    """Coefficients of the heralded multimode state in a measurement basis.

    ``normalization`` is the overall factor fixed by the herald, ``corr`` the
    Hermitian PSD mode-correlation matrix, ``beta`` the displaced coherent
    amplitude of each measurement mode, ``cross`` the coupling of each mode's
    photon-added component to the traced-over background, and ``vac_weight``
    the leftover vacuum weight that makes each reduced state unit trace.
    """

    normalization: float
    corr: np.ndarray
    beta: np.ndarray
    cross: np.ndarray
    vac_weight: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.beta.size

    def validate(self):
        c = self.corr
        if abs(np.trace(c).real - 1.0) > 1e-10:
            raise CoefficientError(f"corr trace {np.trace(c).real} is not 1")
        if np.abs(c - c.conj().T).max() > 1e-10:
            raise CoefficientError("corr matrix is not Hermitian")
        if np.linalg.eigvalsh(c).min() < -1e-10:
            raise CoefficientError("corr matrix is not PSD")
        if self.normalization <= 0:
            raise CoefficientError("normalization must be positive")


def heralded_coeffs(lambdas, basis, gamma: complex, overlaps) -> HeraldedCoefficients:
    """Build the reduced-state coefficients from the source description.

    With mode weights λ_n, basis matrix u (Schmidt -> measurement), seed
    amplitude γ and mode overlaps f_n:
      α_n = γ f_n,   β_m = Σ_n u*_{nm} α_n,   corr_{ll'} = Σ_n λ_n u*_{nl} u_{nl'},
      normalization = 1/Σ_n λ_n (|α_n|² + 1),
      cross_j = Σ_{m≠j} corr_{jm} β_m,
      vac_weight_j = 1/normalization - corr_jj (|β_j|²+1) - 2 Re(β_j* cross_j).
    """
    lam = np.asarray(lambdas, dtype=float)
    u = np.asarray(getattr(basis, "matrix", basis), dtype=complex)
    f = np.asarray(overlaps, dtype=complex)
    if u.shape != (lam.size, lam.size) or f.size != lam.size:
        raise ValueError("inconsistent mode counts between weights, basis and overlaps")
    if np.abs(u.conj().T @ u - np.eye(lam.size)).max() > UNITARY_TOL:
        raise ValueError("basis matrix is not unitary")
    if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-9:
        raise ValueError("mode weights must be nonnegative and sum to 1")

    alpha = gamma * f
    beta = u.conj().T @ alpha
    corr = u.conj().T @ (lam[:, None] * u)
    norm = 1.0 / float(np.sum(lam * (np.abs(alpha) ** 2 + 1.0)))
    cross = corr @ beta - np.diag(corr) * beta
    vac = (1.0 / norm
           - np.real(np.diag(corr)) * (np.abs(beta) ** 2 + 1.0)
           - 2.0 * np.real(np.conj(beta) * cross))
    coeffs = HeraldedCoefficients(normalization=norm, corr=corr, beta=beta,
                                  cross=cross, vac_weight=vac)
    coeffs.validate()
    return coeffs


def reduced_state(coeffs: HeraldedCoefficients, mode: int, dim: int) -> QuantumState:
    """Reduced density matrix of one measurement mode (displacement removed).

    rho = normalization [ corr_jj |φ><φ| + cross_j |φ><0| + cross_j* |0><φ|
          + vac_weight_j |0><0| ]  with unnormalized |φ> = β_j*|0> + |1>.
    """
    if not 0 <= mode < coeffs.n_modes:
        raise ValueError(f"mode {mode} outside [0, {coeffs.n_modes})")
    n = coeffs.normalization
    cjj = float(coeffs.corr[mode, mode].real)
    beta = coeffs.beta[mode]
    cross = coeffs.cross[mode]
    eta = float(coeffs.vac_weight[mode])
    phi = np.array([np.conj(beta), 1.0], dtype=complex)
    block = (cjj * np.outer(phi, phi.conj())
             + cross * np.outer(phi, [1.0, 0.0])
             + np.conj(cross) * np.outer([1.0, 0.0], phi.conj()))
    block[0, 0] += eta
    block *= n
    evals = np.linalg.eigvalsh(block)
    if evals.min() < -1e-8:
        raise CoefficientError(
            f"reduced state not PSD (min eigenvalue {evals.min():.2e}); "
            "coefficients are inconsistent"
        )
    rho = np.zeros((dim, dim), dtype=complex)
    rho[:2, :2] = block
    return QuantumState.mixed(rho)


def closed_form_variance(coeffs: HeraldedCoefficients, mode: int, z: float) -> float:
    """Variance of O(z, θ=π/2) on the reduced state, in closed form.

    With κ = normalization·corr_jj and μ = sqrt(2)·normalization·
    Im(corr_jj β_j + cross_j):
      var = -μ² - 2 z κ μ + 1/2 + κ + z² (1/2 + 2κ - κ²).
    Agrees with the Fock-space variance of the reduced state to round-off.
    """
    if not 0 <= mode < coeffs.n_modes:
        raise ValueError(f"mode {mode} outside [0, {coeffs.n_modes})")
    n = coeffs.normalization
    cjj = float(coeffs.corr[mode, mode].real)
    kap = n * cjj
    mu = np.sqrt(2.0) * n * float(np.imag(cjj * coeffs.beta[mode] + coeffs.cross[mode]))
    return (-mu * mu - 2.0 * z * kap * mu
            + 0.5 + kap + z * z * (0.5 + 2.0 * kap - kap * kap))


@dataclass(frozen=True)
class ScenarioPoint:
    """One point of a multimode sweep: source widths, Schmidt number, optimum."""

    a: float
    b: float
    k_eff: float
    xi_db: float
    z_opt: float
    theta_opt: float


def scenario_sweep(scenario: int, ab_pairs, gamma: complex,
                   options: OptimizerOptions | None = None,
                   dim: int = 12, grid_points: int = 512) -> list[ScenarioPoint]:
    """Squeezing in the first measurement mode across source configurations.

    Scenario 1: seed and local oscillator follow the first Schmidt mode of
    each source.  Scenario 2: both are fixed to the Gaussian fundamental mode
    of the symmetric source with the same pump width.  The measurement mode
    is the seed mode in both cases.
    """
    if scenario not in (1, 2):
        raise ValueError(f"unknown scenario {scenario}")
    opts = options or OptimizerOptions()
    out = []
    for a, b in ab_pairs:
        grid = frequency_grid(a, b, points=grid_points)
        decomp = schmidt_decompose(double_gaussian_jsa(a, b, grid), grid)
        if scenario == 1:
            profile = decomp.signal_modes[0]
        else:
            profile = gaussian_profile(a, grid)
        overlaps = seed_overlaps(profile, decomp)
        basis = complete_basis(overlaps.conj())
        coeffs = heralded_coeffs(decomp.weights, basis, gamma, overlaps)
        state = reduced_state(coeffs, 0, dim)
        res = minimize_squeezing(state, opts)
        out.append(ScenarioPoint(a=float(a), b=float(b), k_eff=decomp.k_eff,
                                 xi_db=res.xi_db, z_opt=res.z_opt,
                                 theta_opt=res.theta_opt))
    return out


def widths_for_schmidt_number(k: float, a: float = 1.0) -> tuple[float, float]:
    """(a, b) of a double-Gaussian source with Schmidt number k (b <= a)."""
    if k < 1.0:
        raise ValueError(f"Schmidt number must be >= 1, got {k}")
    ratio = k + np.sqrt(k * k - 1.0)
    return a, a / ratio


def scenario_points_to_csv(points, path):
    with open(path, "w") as fh:
        fh.write("k,xi_db,z_opt,theta_opt\n")
        for pt in points:
            fh.write(f"{pt.k_eff:.12g},{pt.xi_db:.12g},"
                     f"{pt.z_opt:.12g},{pt.theta_opt:.12g}\n")
