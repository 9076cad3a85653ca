"""Passive and active optics: switches, fiber, delay loops, QFT measurement.

Switch imperfections are modeled as incoherent branches (correct routing,
wrong routing, loss); loss branches terminate an attempt since there is only
one photon per attempt.  The detection side converts the time-bin encoding to
spatial modes with fiber delay loops and measures in the generalized X
(Fourier) basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .qstate import DensityOperator, PureState

LOSS_CAUSES = ("fiber", "switch", "cavity", "loop", "detector", "wrong_switch_timing")


@dataclass(frozen=True)
class SwitchParams:
    """Optical switch: transmission per pass and wrong-port leakage."""

    eta_sw: float = 0.9
    e_sw: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta_sw <= 1.0:
            raise ValueError("eta_sw must lie in [0, 1]")
        if not 0.0 <= self.e_sw <= 1.0:
            raise ValueError("e_sw must lie in [0, 1]")


@dataclass(frozen=True)
class DetectionParams:
    """Detection-side hardware: per-loop loss and interferometer dephasing.

    ``sigma_X`` defaults to 0.1*m (phase stability degrades with interferometer
    size); ``loops_for_bin`` maps a bin index to its delay-loop count, default
    N-1-l so every bin is aligned to the latest one.  ``detector_efficiency``
    is a hook, default 1 (not separately modeled otherwise).
    """

    eta_lag: float = 0.01
    sigma_X: float | None = None
    loops_for_bin: Callable[[int, int], int] = field(
        default=lambda l, n_bins: n_bins - 1 - l
    )
    detector_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta_lag <= 1.0:
            raise ValueError("eta_lag must lie in [0, 1]")
        if self.sigma_X is not None and self.sigma_X < 0:
            raise ValueError("sigma_X must be non-negative")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must lie in [0, 1]")

    def sigma_x_for(self, m: int) -> float:
        return 0.1 * m if self.sigma_X is None else self.sigma_X


@dataclass(frozen=True)
class MeasurementOutcome:
    heralded: bool
    k: int | None = None
    loss_cause: str | None = None

    def __post_init__(self) -> None:
        if self.heralded and self.k is None:
            raise ValueError("heralded outcome requires an outcome index k")
        if not self.heralded and self.k is not None:
            raise ValueError("k is only defined for heralded outcomes")
        if self.loss_cause is not None and self.loss_cause not in LOSS_CAUSES:
            raise ValueError(f"unknown loss cause {self.loss_cause!r}")


@dataclass(frozen=True)
class SwitchBranch:
    """One incoherent branch of a switch pass."""

    kind: str  # "correct" | "wrong" | "loss"
    weight: float
    state: PureState | None
    routed: np.ndarray | None  # per-bin bool mask actually routed to the side port


def switch_channel(
    state: PureState, p: SwitchParams, intended_route: np.ndarray
) -> list[SwitchBranch]:
    """Split a switch pass into correct/wrong/loss branches.

    ``intended_route`` is a per-bin boolean mask (True = side port).  Weights
    are eta*(1-e), eta*e and 1-eta and always sum to one; zero-weight branches
    are omitted.  The loss branch carries no state (attempt over).
    """
    intended = np.asarray(intended_route, dtype=bool)
    branches: list[SwitchBranch] = []
    w_correct = p.eta_sw * (1.0 - p.e_sw)
    w_wrong = p.eta_sw * p.e_sw
    w_loss = 1.0 - p.eta_sw
    if w_correct > 0:
        branches.append(
            SwitchBranch(
                "correct",
                w_correct * state.branch_weight,
                PureState(state.amplitudes, state.layout, state.branch_weight * w_correct),
                intended,
            )
        )
    if w_wrong > 0:
        branches.append(
            SwitchBranch(
                "wrong",
                w_wrong * state.branch_weight,
                PureState(state.amplitudes, state.layout, state.branch_weight * w_wrong),
                ~intended,
            )
        )
    if w_loss > 0:
        branches.append(SwitchBranch("loss", w_loss * state.branch_weight, None, None))
    return branches


def fiber_transmission(length_km: float, attenuation_length_km: float) -> float:
    """exp(-L / L_att)."""
    if length_km < 0 or attenuation_length_km <= 0:
        raise ValueError("lengths must be positive (L may be zero)")
    return math.exp(-length_km / attenuation_length_km)


def detection_transmission_per_bin(
    l: int, m: int, sw: SwitchParams, det: DetectionParams
) -> float:
    """Total detection-side transmission for bin l.

    The photon crosses m switches, each with effective transmission
    eta_sw*(1-e_sw) (wrong switching heralds a failure), then the bin's delay
    loops with transmission (1-eta_lag) each.
    """
    n_bins = 2**m
    if not 0 <= l < n_bins:
        raise ValueError("bin index out of range")
    loops = det.loops_for_bin(l, n_bins)
    return (sw.eta_sw * (1.0 - sw.e_sw)) ** m * (1.0 - det.eta_lag) ** loops


def loop_transmissions(m: int, det: DetectionParams) -> np.ndarray:
    """Per-bin delay-loop transmission (1 - eta_lag)^loops(l)."""
    n_bins = 2**m
    loops = np.array([det.loops_for_bin(l, n_bins) for l in range(n_bins)])
    return (1.0 - det.eta_lag) ** loops


def interferometer_dephase(
    state,
    sigma_x: float,
    mode: str = "sampled",
    rng: np.random.Generator | None = None,
):
    """Dephasing of the photonic qudit from interferometer phase errors.

    ``exact`` mode acts on a DensityOperator whose first factor is the photon
    and scales every photon off-diagonal by exp(-sigma_x^2/2).  ``sampled``
    mode applies independent random phases to the photon bins of a PureState;
    the per-bin variance is sigma_x^2/2 so the ensemble mean of the
    off-diagonals reproduces the exact factor exp(-sigma_x^2/2).
    """
    if sigma_x < 0:
        raise ValueError("sigma_x must be non-negative")
    if mode == "exact":
        if not isinstance(state, DensityOperator):
            raise TypeError("exact mode operates on a DensityOperator")
        n = state.layout.dims[0]
        rest = state.layout.dim // n
        mat = state.matrix.reshape(n, rest, n, rest).copy()
        factor = math.exp(-(sigma_x**2) / 2.0)
        fac = np.where(np.eye(n, dtype=bool), 1.0, factor)
        mat *= fac[:, None, :, None]
        return DensityOperator(mat.reshape(state.layout.dim, state.layout.dim), state.layout)
    if mode == "sampled":
        if not isinstance(state, PureState):
            raise TypeError("sampled mode operates on a PureState")
        if rng is None:
            raise ValueError("sampled mode requires an rng")
        n = state.layout.dims[0]
        theta = rng.normal(0.0, sigma_x / math.sqrt(2.0), size=n)
        phases = np.exp(1j * theta)
        amps = (state.as_tensor() * phases.reshape((n,) + (1,) * (state.layout.n_factors - 1))).reshape(-1)
        return PureState(amps, state.layout, state.branch_weight)
    raise ValueError(f"unknown mode {mode!r}")


def qft_matrix(m: int) -> np.ndarray:
    """N x N matrix with rows <X_k|, entries omega^{-kl}/sqrt(N), omega = e^{i pi / 2^{m-1}}.

    Applying it to a photon amplitude vector gives the projection amplitudes
    onto the generalized X basis |X_k> = (1/sqrt(N)) sum_l omega^{kl} |l>.
    """
    n = 2**m
    omega = np.exp(-1j * math.pi / 2 ** (m - 1))
    k = np.arange(n)
    return omega ** np.outer(k, k) / math.sqrt(n)


def qft_outcome_probabilities(photon_amps: np.ndarray) -> np.ndarray:
    """|<X_k|psi>|^2 for an (unnormalized) surviving photon branch.

    The probabilities sum to the branch squared norm; the deficit from one is
    the no-detection probability.
    """
    amps = np.asarray(photon_amps, dtype=np.complex128)
    # <X_k|psi> = (1/sqrt(N)) sum_l omega^{-kl} psi_l, the unitary DFT.
    proj = np.fft.fft(amps) / math.sqrt(len(amps))
    return np.abs(proj) ** 2


def qft_measure(photon_amps: np.ndarray, rng: np.random.Generator) -> MeasurementOutcome:
    """Sample the generalized X measurement on the surviving photon branch."""
    probs = qft_outcome_probabilities(photon_amps)
    total = float(probs.sum())
    u = rng.random()
    if u >= total:
        return MeasurementOutcome(heralded=False, loss_cause="detector")
    k = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return MeasurementOutcome(heralded=True, k=min(k, len(probs) - 1))
