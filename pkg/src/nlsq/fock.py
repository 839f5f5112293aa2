"""Truncated Fock-space operators, states and exact low-order moments.

Conventions used throughout the package: hbar = 1, x = (a + a†)/sqrt(2),
p = (a - a†)/(i sqrt(2)), hence [x, p] = i and the vacuum variance of
either quadrature is 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

from .errors import TruncationError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
TAIL_MASS_TOL = 1e-10
SUPPORT_ATOL = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FockOperator:
    """Dense complex operator on a truncated Fock space of dimension ``dim``."""

    entries: np.ndarray

    def __post_init__(self):
        mat = _readonly(self.entries)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {mat.shape}")
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "FockOperator":
        return FockOperator(self.entries.conj().T)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_defect() < tol

    def bandwidth(self, atol: float = 1e-14) -> int:
        """Largest |i - j| with a non-negligible entry (ladder order for
        polynomials in a, a†)."""
        rows, cols = np.nonzero(np.abs(self.entries) > atol)
        return int(np.max(np.abs(rows - cols))) if rows.size else 0

    def __matmul__(self, other):
        return FockOperator(self.entries @ as_matrix(other))

    def __add__(self, other):
        return FockOperator(self.entries + as_matrix(other))

    def __sub__(self, other):
        return FockOperator(self.entries - as_matrix(other))

    def __mul__(self, scalar):
        return FockOperator(self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return FockOperator(-self.entries)


def as_matrix(op) -> np.ndarray:
    """Return the dense matrix behind a FockOperator (or pass arrays through)."""
    if isinstance(op, FockOperator):
        return op.entries
    return np.asarray(op, dtype=complex)


class QuantumState:
    """Pure (amplitude vector) or mixed (density matrix) truncated Fock state.

    Instances are immutable; all arrays are stored read-only.  Construction
    validates normalization, hermiticity and positivity.  ``truncation_adequate``
    reports whether the top four Fock levels carry less than 1e-10 of the mass.
    """

    def __init__(self, *, vector=None, rho=None):
        if (vector is None) == (rho is None):
            raise ValueError("provide exactly one of vector or rho")
        if vector is not None:
            vec = np.asarray(vector, dtype=complex).reshape(-1)
            norm = np.linalg.norm(vec)
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"pure state norm {norm} is not 1 within 1e-12")
            self._vector = _readonly(vec)
            self._rho = None
            self._dim = vec.size
        else:
            mat = np.asarray(rho, dtype=complex)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError("density matrix must be square")
            tr = np.trace(mat).real
            if abs(tr - 1.0) > 1e-12:
                raise ValueError(f"density matrix trace {tr} is not 1 within 1e-12")
            if np.abs(mat - mat.conj().T).max() > 1e-12:
                raise ValueError("density matrix is not Hermitian within 1e-12")
            w = np.linalg.eigvalsh(mat)
            if w.min() < -1e-10:
                raise ValueError(f"density matrix has eigenvalue {w.min()} < -1e-10")
            self._vector = None
            self._rho = _readonly(mat)
            self._dim = mat.shape[0]

    @classmethod
    def pure(cls, amplitudes) -> "QuantumState":
        return cls(vector=amplitudes)

    @classmethod
    def mixed(cls, rho) -> "QuantumState":
        return cls(rho=rho)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def is_pure(self) -> bool:
        return self._vector is not None

    @property
    def vector(self) -> np.ndarray:
        if self._vector is None:
            raise ValueError("state is mixed; no amplitude vector")
        return self._vector

    def density(self) -> np.ndarray:
        if self._rho is not None:
            return self._rho
        return np.outer(self._vector, self._vector.conj())

    def level_mass(self) -> np.ndarray:
        """Occupation probability of each Fock level."""
        if self.is_pure:
            return np.abs(self._vector) ** 2
        return np.real(np.diag(self._rho))

    def tail_mass(self, levels: int = 4) -> float:
        """Total mass on the top ``levels`` Fock levels."""
        mass = self.level_mass()
        return float(mass[max(0, self._dim - levels):].sum())

    @property
    def truncation_adequate(self) -> bool:
        return self.tail_mass() < TAIL_MASS_TOL

    def support(self, atol: float = SUPPORT_ATOL) -> int:
        """Highest Fock level with amplitude above ``atol`` (0 for vacuum)."""
        amp = np.sqrt(self.level_mass())
        idx = np.nonzero(amp > atol)[0]
        return int(idx[-1]) if idx.size else 0


def make_ladder(dim: int):
    """Annihilation and creation operators: a[n-1, n] = sqrt(n)."""
    if dim < 2:
        raise ValueError(f"Fock dimension must be at least 2, got {dim}")
    a = np.zeros((dim, dim), dtype=complex)
    ns = np.arange(1, dim)
    a[ns - 1, ns] = np.sqrt(ns)
    return FockOperator(a), FockOperator(a.conj().T)


def identity_op(dim: int) -> FockOperator:
    return FockOperator(np.eye(dim, dtype=complex))


def number_op(dim: int) -> FockOperator:
    return FockOperator(np.diag(np.arange(dim)).astype(complex))


def quadrature_ops(dim: int):
    """x = (a + a†)/sqrt(2) and p = (a - a†)/(i sqrt(2))."""
    a, adag = make_ladder(dim)
    x = (a.entries + adag.entries) / np.sqrt(2.0)
    p = (a.entries - adag.entries) / (1j * np.sqrt(2.0))
    return FockOperator(x), FockOperator(p)


def rotated_quadratures(dim: int, theta: float):
    """X(θ) = -cosθ p + sinθ x and P(θ) = sinθ p + cosθ x."""
    x, p = quadrature_ops(dim)
    x_theta = np.sin(theta) * x.entries - np.cos(theta) * p.entries
    p_theta = np.sin(theta) * p.entries + np.cos(theta) * x.entries
    return FockOperator(x_theta), FockOperator(p_theta)


def coherent_tail_mass(dim: int, alpha: complex, levels: int = 4) -> float:
    """Poisson mass of |alpha> on the top ``levels`` of a dim-level space."""
    n2 = abs(alpha) ** 2
    if n2 == 0.0:
        return 0.0 if dim > levels else 1.0
    ns = np.arange(max(0, dim - levels), dim)
    logp = -n2 + ns * np.log(n2) - gammaln(ns + 1)
    return float(np.exp(logp).sum())


def _check_truncation(dim: int, alpha: complex):
    tail = coherent_tail_mass(dim, alpha)
    if tail >= TAIL_MASS_TOL:
        raise TruncationError(
            f"dim={dim} too small for |alpha|={abs(alpha):.3f}: "
            f"coherent tail mass {tail:.2e} >= {TAIL_MASS_TOL:.0e}"
        )


def default_dim(alpha: complex, minimum: int = 40, margin: int = 8) -> int:
    """Smallest comfortable truncation for states built around |alpha>."""
    dim = minimum
    while coherent_tail_mass(dim, alpha) >= TAIL_MASS_TOL:
        dim += 8
    return dim + margin


def displacement(dim: int, alpha: complex) -> FockOperator:
    """D(alpha) = exp(alpha a† - alpha* a) on the truncated space."""
    if dim < 2:
        raise ValueError(f"Fock dimension must be at least 2, got {dim}")
    _check_truncation(dim, alpha)
    a, adag = make_ladder(dim)
    gen = alpha * adag.entries - np.conj(alpha) * a.entries
    return FockOperator(expm(gen))


def vacuum(dim: int) -> QuantumState:
    return fock_state(dim, 0)


def fock_state(dim: int, n: int) -> QuantumState:
    if not 0 <= n < dim:
        raise ValueError(f"Fock level {n} outside [0, {dim})")
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    return QuantumState.pure(vec)


def coherent(dim: int, alpha: complex) -> QuantumState:
    """Coherent state |alpha>, renormalized on the truncated space."""
    _check_truncation(dim, alpha)
    ns = np.arange(dim)
    log_mag = -abs(alpha) ** 2 / 2 + ns * np.log(abs(alpha)) if alpha != 0 else None
    if alpha == 0:
        return vacuum(dim)
    amps = np.exp(log_mag - 0.5 * gammaln(ns + 1)) * np.exp(1j * ns * np.angle(alpha))
    amps /= np.linalg.norm(amps)
    return QuantumState.pure(amps)


def superposition01(dim: int, c: complex) -> QuantumState:
    """Normalized c|0> + |1>."""
    if dim < 2:
        raise ValueError(f"Fock dimension must be at least 2, got {dim}")
    vec = np.zeros(dim, dtype=complex)
    eta = 1.0 / np.sqrt(abs(c) ** 2 + 1.0)
    vec[0] = eta * c
    vec[1] = eta
    return QuantumState.pure(vec)


def pacs(dim: int, alpha: complex) -> QuantumState:
    """Photon-added coherent state: normalized a†|alpha>."""
    _check_truncation(dim, alpha)
    _, adag = make_ladder(dim)
    raw = adag.entries @ coherent(dim, alpha).vector
    return QuantumState.pure(raw / np.linalg.norm(raw))


def squeezed_vacuum(dim: int, r: float) -> QuantumState:
    """Single-mode squeezed vacuum exp(r(a² - a†²)/2)|0> (test utility)."""
    a, adag = make_ladder(dim)
    gen = 0.5 * r * (a.entries @ a.entries - adag.entries @ adag.entries)
    vec = expm(gen)[:, 0]
    return QuantumState.pure(vec / np.linalg.norm(vec))


def rotate(state: QuantumState, chi: float) -> QuantumState:
    """Phase-space rotation exp(-i chi n̂); maps |alpha> to |alpha e^{-i chi}>."""
    phases = np.exp(-1j * chi * np.arange(state.dim))
    if state.is_pure:
        return QuantumState.pure(phases * state.vector)
    rho = state.density() * np.outer(phases, phases.conj())
    return QuantumState.mixed(rho)


def expectation(state: QuantumState, op) -> complex:
    """Tr(rho Op) for mixed states, <psi|Op|psi> for pure states."""
    mat = as_matrix(op)
    if mat.shape[0] != state.dim:
        raise ValueError(f"dimension mismatch: op {mat.shape[0]} vs state {state.dim}")
    if state.is_pure:
        return complex(np.vdot(state.vector, mat @ state.vector))
    return complex(np.trace(mat @ state.density()))


def variance(state: QuantumState, op) -> float:
    """<Op²> - <Op>² for a Hermitian operator, exact under the support guard.

    The guard requires support(state) + bandwidth(op) <= dim - 1, which makes
    the truncated moments identical to the infinite-dimensional ones.
    """
    if not isinstance(op, FockOperator):
        op = FockOperator(op)
    if not op.is_hermitian(1e-10):
        raise ValueError("variance requires a Hermitian operator")
    if op.dim != state.dim:
        raise ValueError(f"dimension mismatch: op {op.dim} vs state {state.dim}")
    guard = state.support() + op.bandwidth()
    if guard > state.dim - 1:
        raise TruncationError(
            f"state support {state.support()} + operator order {op.bandwidth()} "
            f"exceeds dim-1 = {state.dim - 1}; raise the truncation"
        )
    mean = expectation(state, op).real
    second = expectation(state, op @ op).real
    return second - mean * mean


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a rectangular (x, p) grid.

    ``values[i, j]`` holds W(xs[i], ps[j]); the grid integral of W is 1 up to
    truncation and grid-coverage error.
    """

    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        return float(trapezoid(trapezoid(self.values, self.ps, axis=1), self.xs))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x,p,W\n")
            for i, xv in enumerate(self.xs):
                for j, pv in enumerate(self.ps):
                    fh.write(f"{xv:.12g},{pv:.12g},{self.values[i, j]:.12g}\n")


def wigner_grid(state: QuantumState, xs, ps) -> WignerGrid:
    """Wigner function W(x, p) with the normalization ∫∫ W dx dp = 1.

    Uses the Laguerre closed form for the Fock matrix elements,
    w_{mn} = (1/π) e^{-x²-p²} (-1)^m sqrt(m!/n!) (sqrt(2)(x+ip))^{n-m}
             L_m^{n-m}(2(x²+p²))  for n >= m.
    """
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    rho = state.density()
    dim = state.dim
    xg, pg = np.meshgrid(xs, ps, indexing="ij")
    r2 = xg**2 + pg**2
    env = np.exp(-r2) / np.pi
    u = np.sqrt(2.0) * (xg + 1j * pg)

    occupied = np.nonzero(np.abs(rho).max(axis=1) > 1e-16)[0]
    w = np.zeros_like(r2)
    power = np.ones_like(u)
    for d in range(dim):
        if d > 0:
            power = power * u
        acc = None
        for m in occupied:
            n = m + d
            if n >= dim or abs(rho[m, n]) < 1e-16:
                continue
            pref = (-1.0) ** m * np.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
            term = (rho[m, n] * pref) * eval_genlaguerre(m, d, 2.0 * r2)
            acc = term if acc is None else acc + term
        if acc is None:
            continue
        contrib = (acc * power).real
        w += contrib if d == 0 else 2.0 * contrib
    return WignerGrid(xs=xs, ps=ps, values=w * env)
