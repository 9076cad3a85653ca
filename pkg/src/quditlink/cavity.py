"""Spin-photon controlled-phase gate from single-sided-cavity reflection.

A photon routed to a spin-cavity system reflects with a spin-dependent
coefficient (r0, r1); combined with the binary routing of the time bins and a
fixed single-qubit gate after each register pass, this maps the time-bin
qudit onto the qubit register, |l> (x) |0..0>  ->  |l> (x) |l_{m-1}..l_0>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optics import SwitchParams, switch_channel
from .qstate import PureState

# Single-qubit gate applied to every register spin after its side's cavity
# passes.  With the ideal reflections (r0, r1) = (-1, +1) and a spin prepared
# in |+>, this basis choice sends routed bins to |1> and unrouted bins to |0>
# with no residual sign, so the ideal pipeline produces the photon-register
# entangled state with all-positive amplitudes.
POST_SCATTER_GATE = np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=np.complex128) / math.sqrt(2.0)

PLUS = np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)


@dataclass(frozen=True)
class GateParams:
    """Spin-cavity hardware for the scattering gate.

    Detunings/rates in rad/s.  ``omega`` is the detuning of the incoming
    photon from the cavity resonance (the photon is treated as monochromatic).
    """

    Delta0: float
    Delta1: float
    g0: complex
    g1: complex
    gamma0: float
    gamma1: float
    kappa_a: float
    kappa: float
    omega: float = 0.0

    def __post_init__(self) -> None:
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if not 0.0 <= self.kappa_a <= self.kappa:
            raise ValueError("kappa_a must lie in [0, kappa]")
        if self.gamma0 <= 0 or self.gamma1 <= 0:
            raise ValueError("spontaneous rates must be positive")

    @property
    def c0(self) -> float:
        return abs(self.g0) ** 2 / (self.kappa * self.gamma0)

    @property
    def c1(self) -> float:
        return abs(self.g1) ** 2 / (self.kappa * self.gamma1)


@dataclass(frozen=True)
class ReflectionPair:
    r0: complex
    r1: complex

    def __post_init__(self) -> None:
        if abs(self.r0) > 1.0 + 1e-12 or abs(self.r1) > 1.0 + 1e-12:
            raise ValueError("reflection amplitudes cannot exceed one")

    @property
    def mean_reflected_power(self) -> float:
        """Spin-averaged |r|^2, the per-visit transmission used for
        pre-compensation (the spin-dependent part cannot be compensated
        bin-by-bin)."""
        return 0.5 * (abs(self.r0) ** 2 + abs(self.r1) ** 2)


def _reflection(p: GateParams, coop: float, delta_j: float, gamma_j: float) -> complex:
    emitter = coop / (-1j * (p.omega + delta_j) / gamma_j + 0.5)
    return 1.0 - (p.kappa_a / p.kappa) / (-1j * p.omega / p.kappa + 0.5 + emitter)


def reflection_coefficients(p: GateParams) -> ReflectionPair:
    """Reflection amplitudes for spin states |0> and |1> at photon detuning omega."""
    return ReflectionPair(
        r0=_reflection(p, p.c0, p.Delta0, p.gamma0),
        r1=_reflection(p, p.c1, p.Delta1, p.gamma1),
    )


def ideal_reflections() -> ReflectionPair:
    return ReflectionPair(-1.0 + 0j, 1.0 + 0j)


def apply_single_qubit(state: PureState, axis: int, u: np.ndarray) -> PureState:
    """Apply a 2x2 operator on one factor of a composite pure state."""
    tens = state.as_tensor()
    out = np.moveaxis(np.tensordot(u, tens, axes=([1], [axis])), 0, axis)
    return PureState(out.reshape(-1), state.layout, state.branch_weight)


def _bin_controlled_reflection(
    state: PureState, qubit_axis: int, routed: np.ndarray, r: ReflectionPair
) -> PureState:
    """Multiply routed photon-bin components by diag(r0, r1) on one spin."""
    n_factors = state.layout.n_factors
    n_bins = state.layout.dims[0]
    mult = np.ones((n_bins, 2), dtype=np.complex128)
    mult[routed, 0] = r.r0
    mult[routed, 1] = r.r1
    shape = [1] * n_factors
    shape[0] = n_bins
    shape[qubit_axis] = 2
    tens = state.as_tensor() * mult.reshape(shape)
    return PureState(tens.reshape(-1), state.layout, state.branch_weight)


def scatter_stage(
    state: PureState,
    qubit_index: int,
    bin_predicate: np.ndarray,
    r: ReflectionPair,
    switch: SwitchParams,
) -> list[PureState]:
    """One switch + cavity pass addressing a single register spin.

    Photon components whose bin satisfies ``bin_predicate`` are routed to the
    cavity and pick up the spin-conditioned reflection; the rest pass through
    untouched.  Switch loss and wrong routing produce an incoherent branch
    list whose weights sum to eta_sw (the deficit is the loss probability).
    """
    if state.layout.dims[qubit_index] != 2:
        raise ValueError("addressed subsystem is not a qubit")
    predicate = np.asarray(bin_predicate, dtype=bool)
    if predicate.shape != (state.layout.dims[0],):
        raise ValueError("bin predicate length must match the photon dimension")

    out: list[PureState] = []
    for branch in switch_channel(state, switch, predicate):
        if branch.kind == "loss":
            continue
        out.append(_bin_controlled_reflection(branch.state, qubit_index, branch.routed, r))
    return out


def bin_predicate_for(i: int, n_bins: int) -> np.ndarray:
    """Bins whose i'th binary digit is one (those interact with spin i)."""
    return ((np.arange(n_bins) >> i) & 1).astype(bool)


def register_interaction(
    state: PureState,
    side: str,
    m: int,
    r: ReflectionPair,
    switch: SwitchParams,
) -> list[PureState]:
    """Full register pass for one side, followed by the per-spin basis gate.

    Assumes the canonical layout [photon, A_{m-1}..A_0, B_{m-1}..B_0] and the
    side's m spins prepared in |+> on first use.  With ideal hardware the map
    on the surviving branch is |l> (x) |0..0> -> |l> (x) |l_{m-1}..l_0|>.
    Branch count grows as 2^m when e_sw > 0 (wrong-routing branches keep the
    photon alive but mis-apply the interaction).
    """
    if side not in ("alice", "bob"):
        raise ValueError("side must be 'alice' or 'bob'")
    n_bins = state.layout.dims[0]
    offset = 1 if side == "alice" else 1 + m

    branches = [state]
    for i in range(m - 1, -1, -1):
        axis = offset + (m - 1 - i)
        predicate = bin_predicate_for(i, n_bins)
        branches = [
            b2 for b in branches for b2 in scatter_stage(b, axis, predicate, r, switch)
        ]
    for i in range(m):
        branches = [apply_single_qubit(b, offset + i, POST_SCATTER_GATE) for b in branches]
    return branches
