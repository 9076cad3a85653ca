"""Photonic qudit source: Lambda-system dynamics and noisy-amplitude sampling.

The microscopic model (three-level emitter in a one-sided cavity, driven by a
square laser pulse) is exposed for validation and parameter studies.  The
protocol engine itself uses the phenomenological noisy-qudit model
(:func:`sample_noisy_qudit`), which captures laser amplitude/phase
fluctuations as Gaussian noise on the time-bin amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp


@dataclass(frozen=True)
class SourceParams:
    """Hardware parameters of the qudit source.

    All rates in rad/s, times in seconds.  ``tau_pulse`` is the duration of
    the square drive pulse for a single time-bin.  ``sigma_a`` and ``sigma_p``
    are the (dimensionless) standard deviations of the per-bin amplitude and
    phase fluctuations of the drive laser.
    """

    Omega: complex
    Delta: float
    delta: float
    g: complex
    gamma_g: float
    gamma_f: float
    kappa: float
    tau_pulse: float
    sigma_a: float = 0.1
    sigma_p: float = 0.1

    def __post_init__(self) -> None:
        for name in ("gamma_g", "gamma_f", "kappa", "tau_pulse"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.sigma_a < 0 or self.sigma_p < 0:
            raise ValueError("noise std-devs must be non-negative")

    @property
    def gamma(self) -> float:
        return self.gamma_g + self.gamma_f

    @property
    def cooperativity(self) -> float:
        return abs(self.g) ** 2 / (self.kappa * self.gamma)


class EmissionBudget(NamedTuple):
    """Spontaneous-emission probability and its loss/dephasing split."""

    p_total: float
    p_loss: float
    p_dephasing: float


@dataclass(frozen=True)
class QuditAmplitudes:
    """Unit-norm complex amplitudes over the N = 2^m time bins."""

    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=np.complex128)
        object.__setattr__(self, "amps", amps)
        if amps.ndim != 1:
            raise ValueError("amps must be a vector")
        n = float(np.vdot(amps, amps).real)
        if not math.isclose(n, 1.0, abs_tol=1e-10):
            raise ValueError(f"amplitudes must be unit norm, got |.|^2 = {n}")

    @property
    def n_bins(self) -> int:
        return len(self.amps)


def _drive(p: SourceParams, t: float) -> complex:
    """Square pulse: Omega for 0 <= t < tau_pulse, zero afterwards."""
    return p.Omega if 0.0 <= t < p.tau_pulse else 0.0


def solve_lambda_dynamics(p: SourceParams, t_grid: np.ndarray) -> np.ndarray:
    """Integrate the non-Hermitian Schroedinger system for (c0, c1, c2).

    The basis is {|g,0>, |e,0>, |f,1>} with initial condition (1, 0, 0).
    Returns an array of shape (len(t_grid), 3).  The norm is non-increasing:
    its decay is the accumulated decay probability.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing with >= 2 points")

    def rhs(t: float, c: np.ndarray) -> np.ndarray:
        om = _drive(p, t)
        c0, c1, c2 = c
        dc0 = -1j * np.conj(om) * c1
        dc1 = -1j * (om * c0 + (p.Delta - 0.5j * p.gamma) * c1 + p.g * c2)
        dc2 = -1j * (np.conj(p.g) * c1 + (p.delta - 0.5j * p.kappa) * c2)
        return np.array([dc0, dc1, dc2])

    sol = solve_ivp(
        rhs,
        (float(t_grid[0]), float(t_grid[-1])),
        np.array([1.0 + 0j, 0.0, 0.0]),
        t_eval=t_grid,
        rtol=1e-9,
        atol=1e-12,
        max_step=p.tau_pulse / 50 if p.tau_pulse > 0 else np.inf,
    )
    if not sol.success:
        raise RuntimeError(f"ODE integration failed: {sol.message}")
    return sol.y.T


def _adiabatic_prefactor(p: SourceParams) -> complex:
    c = p.cooperativity
    denom = p.Delta**2 + (p.gamma**2 / 4.0) * (1.0 + 4.0 * c) ** 2
    return 2j * p.Omega * np.conj(p.g) * (p.Delta + 0.5j * p.gamma * (1 + 4 * c)) / denom


def adiabatic_b(p: SourceParams) -> complex:
    """Complex rate governing the ground-state depletion during the drive."""
    c = p.cooperativity
    denom = p.Delta**2 + (p.gamma**2 / 4.0) * (1.0 + 4.0 * c) ** 2
    return 1j * abs(p.Omega) ** 2 * (p.Delta + 0.5j * p.gamma * (1 + 4 * c)) / denom


def closed_form_c2(p: SourceParams, t: np.ndarray, c0_init: complex = 1.0) -> np.ndarray:
    """Adiabatic-regime closed form for the cavity-photon amplitude c2(t)."""
    t = np.asarray(t, dtype=float)
    pref = _adiabatic_prefactor(p) / p.kappa * c0_init
    b = adiabatic_b(p)
    c = p.cooperativity
    out = np.empty(t.shape, dtype=np.complex128)
    during = t <= p.tau_pulse
    out[during] = pref * np.exp(b * t[during])
    out[~during] = (
        pref
        * np.exp(b * p.tau_pulse)
        * np.exp(
            -1j * (p.Delta - 0.5j * p.gamma * (1 + 4 * c)) * (t[~during] - p.tau_pulse)
        )
    )
    return out


def closed_form_output_mode(
    p: SourceParams, t: np.ndarray, c0_init: complex = 1.0
) -> np.ndarray:
    """Output time-bin mode v(t) from the cavity input-output relation.

    Piecewise in t: exponential quasi-steady emission during the square pulse,
    then free decay of the cavity population at the Purcell-enhanced rate
    gamma*(1+4C)/2 (in amplitude).  Assumes zero two-photon detuning.
    """
    return math.sqrt(p.kappa) * closed_form_c2(p, t, c0_init)


def spontaneous_emission_prob(p: SourceParams) -> EmissionBudget:
    """Approximate probability of any spontaneous emission during the drive.

    Valid once the drive is long enough to deplete the ground state,
    exp(2*A*tau_pulse) <= 0.01; shorter pulses are rejected because the
    approximation degenerates there.  The total splits into a photon-loss
    share (decay to |f>) and a qudit-dephasing share (decay back to |g>).
    """
    c = p.cooperativity
    a = adiabatic_b(p).real  # = -|Omega|^2 gamma (1+4C) / (2 (Delta^2 + ...))
    depletion = math.exp(2.0 * a * p.tau_pulse)
    if depletion > 0.01:
        raise ValueError(
            "pulse too short for the emission-probability approximation "
            f"(exp(2 A tau) = {depletion:.3g} > 0.01)"
        )
    p_total = 1.0 - (4.0 * c / (1.0 + 4.0 * c)) * (1.0 - depletion)
    return EmissionBudget(
        p_total=p_total,
        p_loss=(p.gamma_f / p.gamma) * p_total,
        p_dephasing=(p.gamma_g / p.gamma) * p_total,
    )


def precompensated_amplitudes(branch_transmissions: np.ndarray) -> QuditAmplitudes:
    """Amplitudes inversely weighted by downstream per-bin transmission.

    After the bin-dependent loss sqrt(transmission[l]) acts, the surviving
    vector is uniform, so asymmetric loss costs rate instead of fidelity.
    """
    trans = np.asarray(branch_transmissions, dtype=float)
    if np.any(trans <= 0) or np.any(trans > 1.0):
        raise ValueError("branch transmissions must lie in (0, 1]")
    amps = 1.0 / np.sqrt(trans)
    amps = amps / np.linalg.norm(amps)
    return QuditAmplitudes(amps.astype(np.complex128))


def sample_noisy_qudit(
    m: int, base: QuditAmplitudes, p: SourceParams, rng: np.random.Generator
) -> QuditAmplitudes:
    """One draw of the laser-noise qudit model.

    Each bin amplitude picks up a relative amplitude error (1 + alpha_l) with
    alpha_l ~ N(0, sigma_a^2) and a phase e^{i theta_l} with
    theta_l ~ N(0, sigma_p^2); the vector is then renormalized exactly.
    """
    n = 2**m
    if base.n_bins != n:
        raise ValueError("base amplitude count does not match 2^m")
    if p.sigma_a == 0.0 and p.sigma_p == 0.0:
        return base
    alpha = rng.normal(0.0, p.sigma_a, size=n) if p.sigma_a > 0 else np.zeros(n)
    theta = rng.normal(0.0, p.sigma_p, size=n) if p.sigma_p > 0 else np.zeros(n)
    amps = base.amps * (1.0 + alpha) * np.exp(1j * theta)
    amps = amps / np.linalg.norm(amps)
    return QuditAmplitudes(amps)
