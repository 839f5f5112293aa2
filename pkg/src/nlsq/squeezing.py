"""Nonlinear-squeezing ratio of O(z, θ) = P(θ) + z X(θ)² and its minimization.

The figure of merit is the variance of O in a state divided by the minimum
variance achievable by Gaussian states, 3 (1/2)^{5/3} |z|^{2/3}.  Values below
one (negative in dB) certify non-Gaussian cubic squeezing.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import TruncationError
from .fock import FockOperator, QuantumState, quadrature_ops, superposition01

GAUSSIAN_BOUND_COEFF = 3.0 * 0.5 ** (5.0 / 3.0)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def nonlinear_operator(dim: int, z: float, theta: float) -> FockOperator:
    """O(z, θ) = P(θ) + z X(θ)², Hermitian by construction."""
    x, p = quadrature_ops(dim)
    x_t = np.sin(theta) * x.entries - np.cos(theta) * p.entries
    p_t = np.sin(theta) * p.entries + np.cos(theta) * x.entries
    return FockOperator(p_t + z * (x_t @ x_t))


def gaussian_bound(z: float) -> float:
    """Minimum of var(O(z, θ)) over all Gaussian states: 3 (1/2)^{5/3} |z|^{2/3}."""
    if z == 0:
        raise ValueError("gaussian bound vanishes at z = 0")
    return GAUSSIAN_BOUND_COEFF * abs(z) ** (2.0 / 3.0)


def to_db(xi_linear: float) -> float:
    """Power-style decibels, 10 log10(xi)."""
    if xi_linear <= 0:
        raise ValueError(f"ratio must be positive, got {xi_linear}")
    return 10.0 * math.log10(xi_linear)


def from_db(xi_db: float) -> float:
    return 10.0 ** (xi_db / 10.0)


@dataclass(frozen=True)
class VarianceDecomposition:
    """Coefficients of var(O(z, θ)) = var_p + 2 z cov_p_x2 + z² var_x2 at fixed θ.

    cov_p_x2 is the symmetrized covariance (⟨PX² + X²P⟩/2 - ⟨P⟩⟨X²⟩).
    """

    var_p: float
    cov_p_x2: float
    var_x2: float

    def variance(self, z) -> np.ndarray | float:
        return self.var_p + 2.0 * z * self.cov_p_x2 + np.square(z) * self.var_x2


def _moment_components(state: QuantumState, thetas: np.ndarray, block: int = 128):
    """A(θ) = var P, B(θ) = 2 cov(P, X²), C(θ) = var X² for an array of angles.

    Exactness requires support(state) + 2 <= dim - 1 (fourth moments of the
    truncated quadratures are then identical to the untruncated ones).
    """
    dim = state.dim
    if state.support() + 2 > dim - 1:
        raise TruncationError(
            f"state support {state.support()} too high for exact fourth moments "
            f"at dim {dim}; raise the truncation"
        )
    x, p = quadrature_ops(dim)
    xm, pm = x.entries, p.entries
    pure = state.is_pure
    psi = state.vector if pure else None
    rho = None if pure else state.density()

    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    a_out = np.empty(thetas.size)
    b_out = np.empty(thetas.size)
    c_out = np.empty(thetas.size)
    for start in range(0, thetas.size, block):
        th = thetas[start:start + block]
        sin = np.sin(th)[:, None, None]
        cos = np.cos(th)[:, None, None]
        x_t = sin * xm - cos * pm
        p_t = sin * pm + cos * xm
        x2 = x_t @ x_t
        x4 = x2 @ x2
        p2 = p_t @ p_t
        px2 = p_t @ x2
        if pure:
            def mom(ops):
                return np.einsum("tij,j,i->t", ops, psi, psi.conj())
        else:
            def mom(ops):
                return np.einsum("tij,ji->t", ops, rho)
        e_p = mom(p_t).real
        e_x2 = mom(x2).real
        e_p2 = mom(p2).real
        e_x4 = mom(x4).real
        e_px2 = mom(px2)
        sl = slice(start, start + th.size)
        a_out[sl] = e_p2 - e_p**2
        b_out[sl] = 2.0 * e_px2.real - 2.0 * e_p * e_x2
        c_out[sl] = e_x4 - e_x2**2
    return a_out, b_out, c_out


def variance_decomposition(state: QuantumState, theta: float) -> VarianceDecomposition:
    """Variance components of O at a fixed rotation angle."""
    a, b, c = _moment_components(state, np.array([theta]))
    return VarianceDecomposition(var_p=float(a[0]), cov_p_x2=float(b[0]) / 2.0,
                                 var_x2=float(c[0]))


_FOURIER_SAMPLES = 16  # > 2*4 + 1, the components are degree-4 trig polynomials


class ComponentModel:
    """Exact trigonometric model of the variance components over θ.

    P(θ) is linear and X(θ)² quadratic in (sin θ, cos θ), so A, B and C are
    trigonometric polynomials of degree at most 4; sixteen equispaced samples
    determine them exactly and any angle can then be evaluated without
    touching the state again.
    """

    def __init__(self, state: QuantumState):
        th = np.linspace(0.0, 2.0 * np.pi, _FOURIER_SAMPLES, endpoint=False)
        a, b, c = _moment_components(state, th)
        self._coef = [np.fft.rfft(v) / _FOURIER_SAMPLES for v in (a, b, c)]

    def components(self, thetas):
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        k = np.arange(self._coef[0].size)
        weights = np.full(k.size, 2.0)
        weights[0] = 1.0
        if _FOURIER_SAMPLES % 2 == 0:
            weights[-1] = 1.0
        phases = np.exp(1j * np.outer(thetas, k))
        out = [np.real(phases @ (coef * weights)) for coef in self._coef]
        return out[0], out[1], out[2]


def squeezing_ratio(state: QuantumState, z: float, theta: float,
                    z_floor: float = 1e-6) -> float:
    """var(O(z, θ)) divided by the Gaussian bound at the same z."""
    if abs(z) < z_floor:
        raise ValueError(f"|z| = {abs(z)} below the search floor {z_floor}")
    dec = variance_decomposition(state, theta)
    return float(dec.variance(z)) / gaussian_bound(z)


@dataclass(frozen=True)
class OptimizerOptions:
    """Search controls for the joint (z, θ) minimization."""

    theta_points: int = 720
    z_min: float = 1e-6
    z_max: float = 1e3
    refine_tol: float = 1e-8
    tie_tol: float = 1e-10


@dataclass(frozen=True)
class NonlinearSqueezingResult:
    """Optimal squeezing ratio together with the minimizing parameters."""

    xi_linear: float
    xi_db: float
    z_opt: float
    theta_opt: float
    variance_opt: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "NonlinearSqueezingResult":
        return cls(**json.loads(text))


def _branch_minima(a, b, c, z_min, z_max):
    """Minimize (a + b z + c z²)/(K |z|^{2/3}) over each sign branch of z.

    Stationarity on z > 0 gives 4 c z² + b z - 2 a = 0 with a unique positive
    root; the z < 0 branch follows with b -> -b.  Returns (z_pos, r_pos,
    z_neg, r_neg) as arrays over the θ grid.
    """
    a = np.maximum(np.asarray(a, dtype=float), 0.0)
    b = np.asarray(b, dtype=float)
    c = np.maximum(np.asarray(c, dtype=float), 0.0)
    safe_c = np.where(c > 1e-300, c, 1.0)
    disc = np.sqrt(b * b + 32.0 * a * c)
    z_pos = np.where(c > 1e-300, (-b + disc) / (8.0 * safe_c), z_max)
    z_neg = np.where(c > 1e-300, (b + disc) / (8.0 * safe_c), z_max)
    z_pos = np.clip(z_pos, z_min, z_max)
    z_neg = np.clip(z_neg, z_min, z_max)
    bound_pos = GAUSSIAN_BOUND_COEFF * z_pos ** (2.0 / 3.0)
    bound_neg = GAUSSIAN_BOUND_COEFF * z_neg ** (2.0 / 3.0)
    r_pos = (a + b * z_pos + c * z_pos**2) / bound_pos
    r_neg = (a - b * z_neg + c * z_neg**2) / bound_neg
    return z_pos, r_pos, z_neg, r_neg


def _best_over_z(model: ComponentModel, theta, opts):
    """(ratio, z) at a single θ, using the closed-form branch minima."""
    a, b, c = model.components(theta)
    z_pos, r_pos, z_neg, r_neg = _branch_minima(a, b, c, opts.z_min, opts.z_max)
    if r_pos[0] <= r_neg[0]:
        return float(r_pos[0]), float(z_pos[0])
    return float(r_neg[0]), float(-z_neg[0])


def _golden_theta(model: ComponentModel, lo, hi, opts):
    """Golden-section refinement of θ -> min_z ratio on [lo, hi]."""
    f = lambda th: _best_over_z(model, th, opts)[0]
    h = hi - lo
    c = lo + _INV_PHI2 * h
    d = lo + _INV_PHI * h
    yc, yd = f(c), f(d)
    while h > opts.refine_tol:
        h *= _INV_PHI
        if yc < yd:
            hi, d, yd = d, c, yc
            c = lo + _INV_PHI2 * h
            yc = f(c)
        else:
            lo, c, yc = c, d, yd
            d = lo + _INV_PHI * h
            yd = f(d)
    return c if yc < yd else d


def minimize_squeezing(state: QuantumState,
                       options: OptimizerOptions | None = None) -> NonlinearSqueezingResult:
    """Global minimum of the squeezing ratio over cubicity z and angle θ.

    For every angle on a uniform grid the 1-D ratio in z is the closed form
    (A + Bz + Cz²)/(K |z|^{2/3}) built from the variance decomposition and is
    minimized on both sign branches; the best grid angle is then refined by
    golden-section search.  Ties within ``tie_tol`` resolve to the smallest
    |z|, then the smallest θ, then positive z.
    """
    opts = options or OptimizerOptions()
    model = ComponentModel(state)
    thetas = np.linspace(0.0, 2.0 * np.pi, opts.theta_points, endpoint=False)
    a, b, c = model.components(thetas)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise FloatingPointError("non-finite variance components")
    z_pos, r_pos, z_neg, r_neg = _branch_minima(a, b, c, opts.z_min, opts.z_max)

    ratios = np.concatenate([r_pos, r_neg])
    zs = np.concatenate([z_pos, -z_neg])
    ths = np.concatenate([thetas, thetas])
    best = ratios.min()
    tied = np.nonzero(ratios <= best + opts.tie_tol)[0]
    order = np.lexsort((zs[tied] < 0, ths[tied], np.round(np.abs(zs[tied]), 9)))
    pick = tied[order[0]]
    theta_star = ths[pick]

    span = 2.0 * np.pi / opts.theta_points
    theta_ref = _golden_theta(model, theta_star - span, theta_star + span, opts)
    ratio_ref, z_ref = _best_over_z(model, theta_ref, opts)
    if ratio_ref < ratios[pick] - opts.tie_tol:
        theta_star, z_star, ratio_star = theta_ref, z_ref, ratio_ref
    else:
        z_star, ratio_star = zs[pick], ratios[pick]

    theta_star = float(np.mod(theta_star, 2.0 * np.pi))
    return NonlinearSqueezingResult(
        xi_linear=float(ratio_star),
        xi_db=to_db(float(ratio_star)),
        z_opt=float(z_star),
        theta_opt=theta_star,
        variance_opt=float(ratio_star) * gaussian_bound(float(z_star)),
    )


def min_ratio_at_z(state: QuantumState, z: float,
                   options: OptimizerOptions | None = None) -> tuple[float, float]:
    """(ratio, θ) minimizing the squeezing ratio over θ only, at fixed z.

    Used for the fixed-cubicity maps; the θ grid is refined by golden-section
    search around the best grid point.
    """
    opts = options or OptimizerOptions()
    if abs(z) < opts.z_min:
        raise ValueError(f"|z| = {abs(z)} below the search floor {opts.z_min}")
    model = ComponentModel(state)
    thetas = np.linspace(0.0, 2.0 * np.pi, opts.theta_points, endpoint=False)
    a, b, c = model.components(thetas)
    bound = gaussian_bound(z)
    ratios = (a + b * z + c * z * z) / bound
    k = int(np.argmin(ratios))
    span = 2.0 * np.pi / opts.theta_points

    def f(th):
        aa, bb, cc = model.components(th)
        return float(aa[0] + bb[0] * z + cc[0] * z * z) / bound

    lo, hi = thetas[k] - span, thetas[k] + span
    h = hi - lo
    cpt = lo + _INV_PHI2 * h
    dpt = lo + _INV_PHI * h
    yc, yd = f(cpt), f(dpt)
    while h > opts.refine_tol:
        h *= _INV_PHI
        if yc < yd:
            hi, dpt, yd = dpt, cpt, yc
            cpt = lo + _INV_PHI2 * h
            yc = f(cpt)
        else:
            lo, cpt, yc = cpt, dpt, yd
            dpt = lo + _INV_PHI * h
            yd = f(dpt)
    theta = cpt if yc < yd else dpt
    ratio = min(f(theta), float(ratios[k]))
    if f(theta) <= ratios[k]:
        return ratio, float(np.mod(theta, 2.0 * np.pi))
    return float(ratios[k]), float(np.mod(thetas[k], 2.0 * np.pi))


def ratio_curve_at_thetas(state: QuantumState, thetas, z_values):
    """Ratio matrix over a (θ, z) product grid, exploiting the quadratic form."""
    a, b, c = ComponentModel(state).components(np.asarray(thetas, dtype=float))
    z = np.asarray(z_values, dtype=float)
    bound = GAUSSIAN_BOUND_COEFF * np.abs(z) ** (2.0 / 3.0)
    var = a[:, None] + b[:, None] * z[None, :] + c[:, None] * z[None, :] ** 2
    return var / bound[None, :]


def minimize_over_01_family(c_max: float = 3.0, dim: int = 12,
                            options: OptimizerOptions | None = None):
    """Best ratio over the c|0> + |1> family; returns (|c|, result).

    The ratio is phase covariant, so only the modulus of c is scanned.
    """
    opts = options or OptimizerOptions()

    def objective(c_abs):
        return minimize_squeezing(superposition01(dim, c_abs), opts).xi_linear

    grid = np.linspace(0.0, c_max, 31)
    vals = [objective(c) for c in grid]
    k = int(np.argmin(vals))
    lo = grid[max(0, k - 1)]
    hi = grid[min(len(grid) - 1, k + 1)]
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6})
    c_opt = float(res.x)
    return c_opt, minimize_squeezing(superposition01(dim, c_opt), opts)


def optimal_012_amplitudes(dim: int = 12, options: OptimizerOptions | None = None):
    """Real amplitudes (r0, r1, r2) of the best 0-1-2 superposition.

    Runs the (z, θ) minimizer inside a Nelder-Mead simplex over the two free
    direction parameters of a real unit vector; the overall sign gauge is
    fixed so that r0 > 0 and the symmetry-angle cubicity is positive.
    """
    opts = options or OptimizerOptions()

    def state_from(params):
        t1, t2 = params
        vec = np.array([np.cos(t1), np.sin(t1) * np.cos(t2), np.sin(t1) * np.sin(t2)])
        amps = np.zeros(dim, dtype=complex)
        amps[:3] = vec
        return QuantumState.pure(amps / np.linalg.norm(amps)), vec

    def objective(params):
        state, _ = state_from(params)
        return minimize_squeezing(state, opts).xi_linear

    res = minimize(objective, x0=np.array([0.9, 0.4]), method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 400})
    _, vec = state_from(res.x)
    if vec[0] < 0:
        vec = -vec
    state = QuantumState.pure(np.pad(vec, (0, dim - 3)) / np.linalg.norm(vec))
    result = minimize_squeezing(state, opts)
    return vec / np.linalg.norm(vec), result
