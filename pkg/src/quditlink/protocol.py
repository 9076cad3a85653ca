"""End-to-end orchestration of the entanglement-distribution protocols.

Provides the qudit attempt pipeline (a readable dense-state reference path),
the Monte Carlo metric estimator built on the vectorized trajectory kernel,
and the two comparative qubit strategies (one-shot and all-keep).

The estimator folds every photon-loss mechanism into a per-trajectory
heralding weight instead of terminating trajectories by Bernoulli draws:
each simulated trajectory contributes its exact heralding probability
``h = (scalar transmissions) * sum_k p_k`` and its heralded-conditional
per-pair states.  This is an unbiased, lower-variance estimator of the same
ensemble, and it keeps every trajectory informative at long distances.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from . import kernel
from .cavity import (
    GateParams,
    ReflectionPair,
    ideal_reflections,
    reflection_coefficients,
    register_interaction,
)
from .channels import ChannelParams, apply_pair_memory, assign_wait_times
from .optics import (
    DetectionParams,
    MeasurementOutcome,
    SwitchParams,
    detection_transmission_per_bin,
    fiber_transmission,
    interferometer_dephase,
    loop_transmissions,
    qft_matrix,
)
from .qstate import PureState, register_layout
from .source import (
    QuditAmplitudes,
    SourceParams,
    precompensated_amplitudes,
    sample_noisy_qudit,
)

STRATEGIES = ("qudit", "qubit_one_shot", "qubit_all_keep")

_CHUNK = 1024
_QUANTILES = (0.5, 0.9, 0.99)
# stream tags decorrelating the RNG roles within one config
_TAG_QUDIT = 0
_TAG_LINK = 1
_TAG_ROUNDS = 2


class EstimationFailureError(RuntimeError):
    """Raised when a whole campaign point produces zero heralded weight."""


def default_source() -> SourceParams:
    """Emitter drive in the adiabatic regime (C = 10) with default laser noise."""
    two_pi = 2.0 * math.pi
    return SourceParams(
        Omega=two_pi * 2.0e7,
        Delta=two_pi * 1.0e9,
        delta=0.0,
        g=two_pi * 1.0e9,
        gamma_g=two_pi * 5.0e6,
        gamma_f=two_pi * 5.0e6,
        kappa=two_pi * 1.0e10,
        tau_pulse=5.0e-6,
    )


def default_gate() -> GateParams:
    """Spin-photon gate hardware: C1 = 100, C0 = 0, 5% in/out coupling loss."""
    two_pi = 2.0 * math.pi
    kappa = two_pi * 1.0e10
    gamma1 = two_pi * 1.0e7
    return GateParams(
        Delta0=0.0,
        Delta1=0.0,
        g0=0.0,
        g1=math.sqrt(100.0 * kappa * gamma1),
        gamma0=gamma1,
        gamma1=gamma1,
        kappa_a=0.95 * kappa,
        kappa=kappa,
    )


@dataclass(frozen=True)
class ProtocolConfig:
    """Full configuration of one simulated campaign point.

    ``gate=None`` selects lossless ideal mirrors (r0, r1) = (-1, +1);
    ``reflections_override`` bypasses the cavity model entirely (used for
    targeted loss-asymmetry studies).  ``precompensate`` shapes the source
    amplitudes against all bin-dependent downstream losses.
    """

    m: int = 2
    L: float = 20.0
    L_att: float = 20.0
    c_fiber: float = 2.0e5
    source: SourceParams = field(default_factory=default_source)
    gate: GateParams | None = field(default_factory=default_gate)
    switch: SwitchParams = field(default_factory=SwitchParams)
    detection: DetectionParams = field(default_factory=DetectionParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    strategy: str = "qudit"
    n_trajectories: int = 10_000
    seed: int = 2024
    precompensate: bool = True
    reflections_override: ReflectionPair | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.m <= 6:
            raise ValueError("m must lie in [1, 6] (engine limit)")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be at least 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.L < 0 or self.L_att <= 0 or self.c_fiber <= 0:
            raise ValueError("L must be >= 0; L_att and c_fiber positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def reflections(self) -> ReflectionPair:
        if self.reflections_override is not None:
            return self.reflections_override
        if self.gate is None:
            return ideal_reflections()
        return reflection_coefficients(self.gate)


def ideal_config(m: int, **overrides) -> ProtocolConfig:
    """A configuration with every noise and loss mechanism switched off."""
    base = ProtocolConfig(
        m=m,
        L=0.0,
        source=replace(default_source(), sigma_a=0.0, sigma_p=0.0),
        gate=None,
        switch=SwitchParams(eta_sw=1.0, e_sw=0.0),
        detection=DetectionParams(eta_lag=0.0, sigma_X=0.0),
        channel=ChannelParams(T1=1e9, T_p=1e9),
    )
    return replace(base, **overrides)


@dataclass(frozen=True)
class PairMetrics:
    """Per-pair Bell fidelities of the heralded ensemble."""

    per_pair_fidelity: np.ndarray
    average_fidelity: float
    standard_error: float

    def __post_init__(self) -> None:
        f = np.asarray(self.per_pair_fidelity, dtype=float)
        object.__setattr__(self, "per_pair_fidelity", f)
        if np.any(f < -1e-9) or np.any(f > 1.0 + 1e-9):
            raise ValueError("fidelities must lie in [0, 1]")
        if not 0.0 <= self.average_fidelity <= 1.0 + 1e-9:
            raise ValueError("average fidelity must lie in [0, 1]")


@dataclass(frozen=True)
class RateMetrics:
    """Heralding probability and attempt statistics."""

    success_probability: float
    average_attempts: float
    attempts_distribution_summary: dict[str, float]
    success_probability_stderr: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.success_probability <= 1.0 + 1e-12:
            raise ValueError("success probability must lie in (0, 1]")
        if self.average_attempts < 1.0 - 1e-12:
            raise ValueError("average attempts must be at least 1")
        if self.success_probability_stderr < 0.0:
            raise ValueError("stderr must be non-negative")


def correction_phases(k: int, m: int) -> np.ndarray:
    """RZ angle per pair cancelling the outcome-k residual phase.

    Pair p carries a residual omega^{-2^p k} on its |11> component, with
    omega = e^{2 pi i / 2^m}; rotating Bob's qubit p by +2 pi 2^p k / 2^m
    cancels it.
    """
    n = 2**m
    if not 0 <= k < n:
        raise ValueError("outcome index out of range")
    p = np.arange(m)
    return np.mod(2.0 * np.pi * (2.0**p) * k / n, 2.0 * np.pi)


# ---------------------------------------------------------------------------
# shared helpers


def _bin_transmissions(cfg: ProtocolConfig, m_eff: int) -> np.ndarray:
    """Bin-dependent downstream power transmission (cavity visits + loops)."""
    n = 2**m_eff
    visits = 2 * np.array([bin(l).count("1") for l in range(n)])
    mean_power = cfg.reflections().mean_reflected_power
    return mean_power**visits * loop_transmissions(m_eff, cfg.detection)


def _base_amplitudes(cfg: ProtocolConfig, m_eff: int) -> QuditAmplitudes:
    n = 2**m_eff
    if cfg.precompensate:
        return precompensated_amplitudes(_bin_transmissions(cfg, m_eff))
    return QuditAmplitudes(np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128))


def _scalar_transmission(cfg: ProtocolConfig, m_eff: int) -> float:
    """Bin-independent transmissions: fiber, switch passes, detector."""
    sw = cfg.switch
    return (
        fiber_transmission(cfg.L, cfg.L_att)
        * sw.eta_sw ** (2 * m_eff)
        * (sw.eta_sw * (1.0 - sw.e_sw)) ** m_eff
        * cfg.detection.detector_efficiency
    )


def _chunk_rng(seed: int, tag: int, chunk_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tag, chunk_idx]))


def _phi_plus_fidelity(rhos: np.ndarray) -> np.ndarray:
    """<Phi+|rho|Phi+> over a (..., 4, 4) batch."""
    f = 0.5 * (
        rhos[..., 0, 0] + rhos[..., 0, 3] + rhos[..., 3, 0] + rhos[..., 3, 3]
    )
    return np.clip(f.real, 0.0, 1.0)


def _kernel_chunks(
    cfg: ProtocolConfig, m_eff: int, tag: int, threads: int
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Run the trajectory kernel chunk by chunk, in deterministic order.

    Yields ``(h, k, rhos)`` per chunk where ``h`` already includes the scalar
    transmissions.  Chunk randomness depends only on (seed, tag, chunk index),
    so the stream is reproducible and independent of the thread count.
    """
    n = 2**m_eff
    base = _base_amplitudes(cfg, m_eff).amps
    refl = cfg.reflections()
    scalar = _scalar_transmission(cfg, m_eff)
    det_amp = np.sqrt(loop_transmissions(m_eff, cfg.detection))
    sigma_a = cfg.source.sigma_a
    sigma_p = cfg.source.sigma_p
    sigma_x = cfg.detection.sigma_x_for(m_eff)
    e_sw = cfg.switch.e_sw

    sizes = [
        min(_CHUNK, cfg.n_trajectories - start)
        for start in range(0, cfg.n_trajectories, _CHUNK)
    ]

    def work(args: tuple[int, int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        chunk_idx, size = args
        rng = _chunk_rng(cfg.seed, tag, chunk_idx)
        alpha = rng.standard_normal((size, n)) * sigma_a
        theta_p = rng.standard_normal((size, n)) * sigma_p
        theta_x = rng.standard_normal((size, n)) * (sigma_x / math.sqrt(2.0))
        u_wrong = rng.random((size, 2 * m_eff))
        u_k = rng.random(size)
        total, k, rhos = kernel.run_chunk(
            base, refl.r0, refl.r1, m_eff, e_sw,
            alpha, theta_p, theta_x, u_wrong, u_k, det_amp,
        )
        return scalar * total, k, rhos

    jobs = list(enumerate(sizes))
    if threads <= 1:
        for job in jobs:
            yield work(job)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(work, jobs)


class _WeightedFidelityAccumulator:
    """Running weighted moments of per-pair and trajectory-average fidelity."""

    def __init__(self, m: int) -> None:
        self.sum_h = 0.0
        self.sum_h_pair = np.zeros(m)
        self.sum_h_avg = 0.0
        self.sum_h2_avg = 0.0
        self.sum_h2_avg2 = 0.0
        self.sum_h2 = 0.0

    def add(self, h: np.ndarray, fid: np.ndarray) -> None:
        favg = fid.mean(axis=1)
        self.sum_h += float(h.sum())
        self.sum_h_pair += (h[:, None] * fid).sum(axis=0)
        self.sum_h_avg += float((h * favg).sum())
        self.sum_h2_avg += float((h * h * favg).sum())
        self.sum_h2_avg2 += float(((h * favg) ** 2).sum())
        self.sum_h2 += float((h * h).sum())

    def pair_metrics(self) -> PairMetrics:
        if self.sum_h <= 0.0:
            raise EstimationFailureError("no heralded weight accumulated")
        per_pair = np.clip(self.sum_h_pair / self.sum_h, 0.0, 1.0)
        avg = min(max(self.sum_h_avg / self.sum_h, 0.0), 1.0)
        var = (
            self.sum_h2_avg2 - 2.0 * avg * self.sum_h2_avg + avg * avg * self.sum_h2
        ) / (self.sum_h * self.sum_h)
        return PairMetrics(per_pair, avg, math.sqrt(max(var, 0.0)))


def _geometric_quantiles(p: float) -> dict[str, float]:
    out: dict[str, float] = {}
    for q in _QUANTILES:
        if p >= 1.0:
            val = 1.0
        else:
            val = math.ceil(math.log(1.0 - q) / math.log(1.0 - p))
        out[f"q{int(q * 100)}"] = float(val)
    return out


# ---------------------------------------------------------------------------
# estimators


def estimate_metrics(
    cfg: ProtocolConfig, threads: int = 1
) -> tuple[PairMetrics, RateMetrics]:
    """Monte Carlo fidelity and attempt metrics for any strategy."""
    if cfg.strategy == "qudit":
        return _estimate_qudit(cfg, threads)
    return run_qubit_strategy(cfg, threads)


def _estimate_qudit(
    cfg: ProtocolConfig, threads: int
) -> tuple[PairMetrics, RateMetrics]:
    waits = assign_wait_times("qudit", None, cfg.m, cfg.L, cfg.c_fiber)
    acc = _WeightedFidelityAccumulator(cfg.m)
    for h, _k, rhos in _kernel_chunks(cfg, cfg.m, _TAG_QUDIT, threads):
        rhos = apply_pair_memory(rhos, waits.alice, waits.bob, cfg.channel)
        acc.add(h, _phi_plus_fidelity(rhos))
    pair = acc.pair_metrics()
    n = cfg.n_trajectories
    p_hat = acc.sum_h / n
    p_se = math.sqrt(max(acc.sum_h2 / n - p_hat * p_hat, 0.0) / n)
    rate = RateMetrics(p_hat, 1.0 / p_hat, _geometric_quantiles(p_hat), p_se)
    return pair, rate


def run_qubit_strategy(
    cfg: ProtocolConfig, threads: int = 1
) -> tuple[PairMetrics, RateMetrics]:
    """Qubit-baseline metrics: m independent single-photon links.

    Each link is the m=1 instance of the qudit pipeline.  One-shot requires
    all links to herald in the same round.  All-keep stores early successes
    and pays for the extra storage with memory decoherence; its per-link
    round counts are drawn from the measured per-round success probability.
    """
    if cfg.strategy not in ("qubit_one_shot", "qubit_all_keep"):
        raise ValueError("run_qubit_strategy requires a qubit strategy")
    m = cfg.m
    t0 = cfg.L / cfg.c_fiber

    if cfg.strategy == "qubit_one_shot":
        waits = assign_wait_times("qubit_one_shot", None, 1, cfg.L, cfg.c_fiber)
        acc = _WeightedFidelityAccumulator(1)
        for h, _k, rhos in _kernel_chunks(cfg, 1, _TAG_LINK, threads):
            rhos = apply_pair_memory(rhos, waits.alice, waits.bob, cfg.channel)
            acc.add(h, _phi_plus_fidelity(rhos))
        link = acc.pair_metrics()
        n = cfg.n_trajectories
        p_link = acc.sum_h / n
        p_all = p_link**m
        if p_all <= 0.0:
            raise EstimationFailureError("zero volley success probability")
        link_se = math.sqrt(max(acc.sum_h2 / n - p_link * p_link, 0.0) / n)
        p_all_se = m * p_link ** (m - 1) * link_se  # delta method
        pair = PairMetrics(
            np.full(m, link.average_fidelity),
            link.average_fidelity,
            link.standard_error,
        )
        rate = RateMetrics(p_all, 1.0 / p_all, _geometric_quantiles(p_all), p_all_se)
        return pair, rate

    # all-keep: first measure the per-round link success probability, then
    # replay the identical trajectory stream with sampled storage rounds.
    sum_h = 0.0
    for h, _k, _rhos in _kernel_chunks(cfg, 1, _TAG_LINK, threads):
        sum_h += float(h.sum())
    if sum_h <= 0.0:
        raise EstimationFailureError("no heralded weight accumulated")
    p_link = sum_h / cfg.n_trajectories

    acc = _WeightedFidelityAccumulator(m)
    max_rounds: list[np.ndarray] = []
    log_q = math.log1p(-min(p_link, 1.0 - 1e-15))
    for chunk_idx, (h, _k, rhos) in enumerate(
        _kernel_chunks(cfg, 1, _TAG_LINK, threads)
    ):
        size = h.shape[0]
        rng = _chunk_rng(cfg.seed, _TAG_ROUNDS, chunk_idx)
        u = rng.random((size, m))
        rounds = np.floor(np.log1p(-u) / log_q).astype(np.int64) + 1
        k_rounds = rounds.max(axis=1)
        extra = (k_rounds[:, None] - rounds) * (2.0 * t0)
        t_alice = 2.0 * t0 + extra
        t_bob = t0 + extra
        pair_rhos = np.broadcast_to(rhos, (size, m, 4, 4))
        pair_rhos = apply_pair_memory(pair_rhos, t_alice, t_bob, cfg.channel)
        acc.add(h, _phi_plus_fidelity(pair_rhos))
        max_rounds.append(k_rounds)
    pair = acc.pair_metrics()
    all_k = np.concatenate(max_rounds)
    summary = {
        f"q{int(q * 100)}": float(np.quantile(all_k, q)) for q in _QUANTILES
    }
    rate = RateMetrics(p_link, float(all_k.mean()), summary)
    return pair, rate


# ---------------------------------------------------------------------------
# dense reference path (single sampled attempt on the full state vector)


def _sample_branch(
    branches: list[PureState], rng: np.random.Generator
) -> PureState | None:
    weights = np.array([b.branch_weight for b in branches])
    total = float(weights.sum())
    u = rng.random()
    if u >= total:
        return None
    idx = int(np.searchsorted(np.cumsum(weights), u, side="right"))
    chosen = branches[min(idx, len(branches) - 1)]
    return PureState(chosen.amplitudes, chosen.layout, 1.0)


def run_qudit_attempt(
    cfg: ProtocolConfig, rng: np.random.Generator
) -> tuple[MeasurementOutcome, PureState | None]:
    """One sampled attempt on the dense 2^m x 4^m state vector.

    Slower than the trajectory kernel but written directly in terms of the
    composable state operations; used as a cross-check of the kernel and as
    the readable description of the pipeline: source -> Alice register ->
    fiber -> Bob register -> detection transmission -> interferometer
    dephasing -> generalized X measurement -> phase corrections.
    """
    m = cfg.m
    n = 2**m
    base = _base_amplitudes(cfg, m)
    qudit = sample_noisy_qudit(m, base, cfg.source, rng)

    amps = qudit.amps
    plus = np.full(2, 1.0 / math.sqrt(2.0), dtype=np.complex128)
    for _ in range(2 * m):
        amps = np.kron(amps, plus)
    state = PureState(amps, register_layout(m))

    refl = cfg.reflections()
    state = _sample_branch(register_interaction(state, "alice", m, refl, cfg.switch), rng)
    if state is None:
        return MeasurementOutcome(heralded=False, loss_cause="switch"), None

    if rng.random() >= fiber_transmission(cfg.L, cfg.L_att):
        return MeasurementOutcome(heralded=False, loss_cause="fiber"), None

    state = _sample_branch(register_interaction(state, "bob", m, refl, cfg.switch), rng)
    if state is None:
        return MeasurementOutcome(heralded=False, loss_cause="switch"), None

    det_trans = np.array(
        [detection_transmission_per_bin(l, m, cfg.switch, cfg.detection) for l in range(n)]
    ) * cfg.detection.detector_efficiency
    tensor = state.amplitudes.reshape(n, -1) * np.sqrt(det_trans)[:, None]
    state = PureState(tensor.reshape(-1), state.layout)

    sigma_x = cfg.detection.sigma_x_for(m)
    if sigma_x > 0:
        state = interferometer_dephase(state, sigma_x, mode="sampled", rng=rng)

    proj = qft_matrix(m) @ state.amplitudes.reshape(n, -1)
    probs = (np.abs(proj) ** 2).sum(axis=1)
    u = rng.random()
    if u >= probs.sum():
        return MeasurementOutcome(heralded=False, loss_cause="detector"), None
    k = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    k = min(k, n - 1)

    spin_amps = proj[k] / math.sqrt(probs[k])
    spin_layout = state.layout.keep(range(1, 2 * m + 1))
    # phase corrections on Bob's qubits (spin-only layout index m + (m-1-p))
    spin_tensor = spin_amps.reshape((2,) * (2 * m))
    for p, angle in enumerate(correction_phases(k, m)):
        axis = m + (m - 1 - p)
        shape = [1] * (2 * m)
        shape[axis] = 2
        phase = np.array([1.0, np.exp(1j * angle)]).reshape(shape)
        spin_tensor = spin_tensor * phase
    spins = PureState(spin_tensor.reshape(-1), spin_layout)
    return MeasurementOutcome(heralded=True, k=k), spins
