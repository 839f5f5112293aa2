"""Two-mode heralded source: rotated measurement basis and its optimization.

Specializes the multimode pipeline to two Schmidt modes with weights
(λ₁, 1-λ₁), a real seed split (f₁, f₂ = sqrt(1-f₁²)) and the one-parameter
measurement basis
    B₁ = cos(ν) A₁ + sin(ν) A₂,   B₂ = cos(ν) A₂ - sin(ν) A₁.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import QuantumState
from .pdc import HeraldedCoefficients, MeasurementBasis, heralded_coeffs, reduced_state
from .squeezing import (NonlinearSqueezingResult, OptimizerOptions,
                        minimize_squeezing)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class TwoModeConfig:
    """Two-mode source parameters: weight λ₁, seed amplitude and split, angle ν."""

    lambda1: float
    gamma: complex
    f1: float = 1.0 / math.sqrt(2.0)
    nu: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lambda1 <= 1.0:
            raise ValueError(f"lambda1 must lie in [0, 1], got {self.lambda1}")
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 must lie in [0, 1], got {self.f1}")

    @property
    def f2(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.f1**2))

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.lambda1, 1.0 - self.lambda1])

    @property
    def overlaps(self) -> np.ndarray:
        return np.array([self.f1, self.f2], dtype=complex)


def rotation_basis(nu: float) -> MeasurementBasis:
    """Measurement basis rotated by ν with respect to the Schmidt basis."""
    c, s = math.cos(nu), math.sin(nu)
    # columns are the measurement modes expressed in the Schmidt basis
    return MeasurementBasis(np.array([[c, -s], [s, c]], dtype=complex))


def two_mode_coeffs(config: TwoModeConfig) -> HeraldedCoefficients:
    return heralded_coeffs(config.weights, rotation_basis(config.nu),
                           config.gamma, config.overlaps)


def two_mode_reduced(config: TwoModeConfig, mode: int, dim: int) -> QuantumState:
    """Reduced state of measurement mode 0 (B₁) or 1 (B₂)."""
    return reduced_state(two_mode_coeffs(config), mode, dim)


def optimize_basis(lambda1: float, gamma: complex, f1: float,
                   options: OptimizerOptions | None = None,
                   nu_points: int = 360, dim: int = 12,
                   nu_tol: float = 1e-6) -> tuple[float, NonlinearSqueezingResult]:
    """Best measurement-basis angle for squeezing in B₁.

    Scans ν over [-π/2, π/2) on a uniform grid, re-optimizing (z, θ) at every
    angle, then refines the best grid angle by golden-section search.
    """
    opts = options or OptimizerOptions()

    def xi_at(nu):
        cfg = TwoModeConfig(lambda1=lambda1, gamma=gamma, f1=f1, nu=nu)
        return minimize_squeezing(two_mode_reduced(cfg, 0, dim), opts).xi_linear

    nus = np.linspace(-np.pi / 2, np.pi / 2, nu_points, endpoint=False)
    vals = np.array([xi_at(nu) for nu in nus])
    k = int(np.argmin(vals))
    span = np.pi / nu_points
    lo, hi = nus[k] - span, nus[k] + span
    h = hi - lo
    c = lo + _INV_PHI2 * h
    d = lo + _INV_PHI * h
    yc, yd = xi_at(c), xi_at(d)
    while h > nu_tol:
        h *= _INV_PHI
        if yc < yd:
            hi, d, yd = d, c, yc
            c = lo + _INV_PHI2 * h
            yc = xi_at(c)
        else:
            lo, c, yc = c, d, yd
            d = lo + _INV_PHI * h
            yd = xi_at(d)
    nu_best = c if yc < yd else d
    if min(yc, yd) > vals[k]:
        nu_best = nus[k]
    cfg = TwoModeConfig(lambda1=lambda1, gamma=gamma, f1=f1, nu=float(nu_best))
    return float(nu_best), minimize_squeezing(two_mode_reduced(cfg, 0, dim), opts)


def simultaneous_states(lambda1: float, gamma: complex,
                        dim: int) -> tuple[QuantumState, QuantumState]:
    """Reduced states of both modes for the equally split seed at ν = -π/4.

    Built from the explicit two-level matrices; the second mode's state is
    independent of λ₁ and both coincide at λ₁ = 1.
    """
    g2 = abs(gamma) ** 2
    denom = g2 / 2.0 + 1.0
    d21 = (2.0 * lambda1 - 1.0) / 2.0
    rho1 = np.zeros((dim, dim), dtype=complex)
    rho1[0, 0] = (g2 + 1.0) / 2.0
    rho1[1, 1] = 0.5
    rho1[1, 0] = d21 * gamma
    rho1[0, 1] = d21 * np.conj(gamma)
    rho1[:2, :2] /= denom

    rho2 = np.zeros((dim, dim), dtype=complex)
    rho2[0, 0] = (g2 + 1.0) / 2.0
    rho2[1, 1] = 0.5
    rho2[1, 0] = gamma / 2.0
    rho2[0, 1] = np.conj(gamma) / 2.0
    rho2[:2, :2] /= denom
    return QuantumState.mixed(rho1), QuantumState.mixed(rho2)
