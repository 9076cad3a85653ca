"""Spin-memory decoherence: pure dephasing + generalized amplitude damping.

The combined memory channel is the composition written as Kraus products
A_i E_j (damping first, then dephasing).  ``apply_pair_memory`` provides the
same channel as a vectorized map over batches of two-qubit density matrices;
the Kraus route and the vectorized route are cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qstate import DensityOperator, apply_kraus

_I2 = np.eye(2, dtype=np.complex128)
_Z = np.diag([1.0, -1.0]).astype(np.complex128)


@dataclass(frozen=True)
class ChannelParams:
    """Memory-qubit decoherence times and the damping steady-state population.

    ``a_beta`` is the steady-state population of |0>; the channel relaxes any
    input toward diag(a_beta, 1-a_beta).  Defaults to the symmetric
    (infinite-temperature) point 0.5 since no other value is pinned down by
    the hardware assumptions.
    """

    T1: float = 10e-3
    T_p: float = 5e-3
    a_beta: float = 0.5

    def __post_init__(self) -> None:
        if self.T1 <= 0 or self.T_p <= 0:
            raise ValueError("decoherence times must be positive")
        if not 0.0 <= self.a_beta <= 1.0:
            raise ValueError("a_beta must lie in [0, 1]")


@dataclass(frozen=True)
class WaitTimes:
    """Per-qubit wait durations (seconds) before the pairs are usable."""

    alice: np.ndarray
    bob: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.alice, dtype=float)
        b = np.asarray(self.bob, dtype=float)
        object.__setattr__(self, "alice", a)
        object.__setattr__(self, "bob", b)
        if a.shape != b.shape:
            raise ValueError("alice and bob wait vectors must have equal length")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("wait times must be non-negative")


@dataclass(frozen=True)
class RoundsRecord:
    """Per-link success round and the total round count of one trajectory."""

    success_rounds: np.ndarray
    total_rounds: int

    def __post_init__(self) -> None:
        rounds = np.asarray(self.success_rounds, dtype=int)
        object.__setattr__(self, "success_rounds", rounds)
        if np.any(rounds < 1) or np.any(rounds > self.total_rounds):
            raise ValueError("success rounds must lie in [1, total_rounds]")
        if int(rounds.max()) != self.total_rounds:
            raise ValueError("total_rounds must equal the last successful round")


def dephasing_kraus(t: float, t_p: float) -> list[np.ndarray]:
    """Pure-dephasing Kraus pair {sqrt((1+e)/2) I, sqrt((1-e)/2) Z}, e = exp(-t/T_p)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    e = math.exp(-t / t_p)
    return [math.sqrt((1.0 + e) / 2.0) * _I2, math.sqrt((1.0 - e) / 2.0) * _Z]


def gad_kraus(t: float, t1: float, a_beta: float) -> list[np.ndarray]:
    """Generalized amplitude damping toward diag(a_beta, 1 - a_beta)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if not 0.0 <= a_beta <= 1.0:
        raise ValueError("a_beta must lie in [0, 1]")
    s = math.exp(-t / (2.0 * t1))
    lam = math.sqrt(max(1.0 - s * s, 0.0))
    sa = math.sqrt(a_beta)
    sb = math.sqrt(1.0 - a_beta)
    e0 = sa * np.array([[1.0, 0.0], [0.0, s]], dtype=np.complex128)
    e1 = sa * np.array([[0.0, lam], [0.0, 0.0]], dtype=np.complex128)
    e2 = sb * np.array([[s, 0.0], [0.0, 1.0]], dtype=np.complex128)
    e3 = sb * np.array([[0.0, 0.0], [lam, 0.0]], dtype=np.complex128)
    return [e0, e1, e2, e3]


def memory_kraus(t: float, p: ChannelParams) -> list[np.ndarray]:
    """Composite Kraus set {A_i E_j}: damping first, then dephasing."""
    deph = dephasing_kraus(t, p.T_p)
    gad = gad_kraus(t, p.T1, p.a_beta)
    return [a @ e for a in deph for e in gad]


def memory_channel(
    rho: DensityOperator, qubit: int, t: float, p: ChannelParams
) -> DensityOperator:
    """Apply the combined memory channel to one qubit of a composite state."""
    return apply_kraus(rho, memory_kraus(t, p), qubit)


def _single_qubit_map(t: np.ndarray, p: ChannelParams) -> np.ndarray:
    """Tensor M[..., i, k, j, l] with rho'_{ij} = M_{ikjl} rho_{kl} for one qubit.

    Closed form of the composed channel: populations relax toward
    (a_beta, 1-a_beta) at rate 1/T1, coherences decay by
    exp(-t/(2 T1)) * exp(-t/T_p).
    """
    t = np.asarray(t, dtype=float)
    g = np.exp(-t / p.T1)
    coh = np.exp(-t / (2.0 * p.T1)) * np.exp(-t / p.T_p)
    lam = 1.0 - g
    a = p.a_beta
    m = np.zeros(t.shape + (2, 2, 2, 2), dtype=np.complex128)
    m[..., 0, 0, 0, 0] = 1.0 - lam * (1.0 - a)
    m[..., 0, 1, 0, 1] = lam * a
    m[..., 1, 1, 1, 1] = 1.0 - lam * a
    m[..., 1, 0, 1, 0] = lam * (1.0 - a)
    m[..., 0, 0, 1, 1] = coh
    m[..., 1, 1, 0, 0] = coh
    return m


def apply_pair_memory(
    rho: np.ndarray, t_alice: np.ndarray, t_bob: np.ndarray, p: ChannelParams
) -> np.ndarray:
    """Vectorized memory channel on batches of two-qubit density matrices.

    ``rho`` has shape (..., 4, 4) in the |A B> product basis; ``t_alice`` and
    ``t_bob`` broadcast against the batch shape.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    batch = rho.shape[:-2]
    r = rho.reshape(batch + (2, 2, 2, 2))
    ma = _single_qubit_map(np.broadcast_to(np.asarray(t_alice, float), batch), p)
    mb = _single_qubit_map(np.broadcast_to(np.asarray(t_bob, float), batch), p)
    out = np.einsum("...ikjl,...xuyv,...kulv->...ixjy", ma, mb, r)
    return out.reshape(batch + (4, 4))


def assign_wait_times(
    protocol: str,
    rounds_record: RoundsRecord | None,
    m: int,
    length_km: float,
    c_fiber_km_s: float,
) -> WaitTimes:
    """Wait durations before the pairs are usable, per qubit and side.

    For the qudit protocol and the one-shot qubit strategy every pair is
    created in the final (single successful) round: Alice waits the full
    round trip 2L/c, Bob waits L/c for his herald to reach Alice.  For the
    all-keep strategy a link that succeeded in round k of K waits the extra
    (K - k) rounds of duration 2L/c on both ends on top of its minimum wait.
    """
    t0 = length_km / c_fiber_km_s
    alice_min = np.full(m, 2.0 * t0)
    bob_min = np.full(m, t0)
    if protocol in ("qudit", "qubit_one_shot"):
        return WaitTimes(alice_min, bob_min)
    if protocol == "qubit_all_keep":
        if rounds_record is None:
            raise ValueError("all-keep wait assignment needs a rounds record")
        rounds = np.asarray(rounds_record.success_rounds, dtype=int)
        if rounds.shape != (m,):
            raise ValueError("rounds record length must equal m")
        extra = (rounds_record.total_rounds - rounds) * (2.0 * t0)
        return WaitTimes(alice_min + extra, bob_min + extra)
    raise ValueError(f"unknown protocol {protocol!r}")
