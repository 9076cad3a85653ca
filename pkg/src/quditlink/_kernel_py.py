"""Pure-NumPy trajectory kernel.

The joint state stays in exact product form throughout the pipeline,

    |psi> = sum_l a_l |l>_photon  (x)_q  u_{l,q},

because every operation is either a photon-bin phase/amplitude factor or a
bin-controlled single-spin map.  A chunk of trajectories is evolved with
vectorized array operations; all randomness enters through the pregenerated
arrays so that every backend produces identical trajectories from identical
inputs.

Spin array layout: index q = side*m + (m-1-i) holds the register qubit that
interacts at routing bit i on Alice's (side 0) or Bob's (side 1) register.
Entangled pair p therefore lives at array indices (m-1-p, 2m-1-p).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_SQRT_HALF = 1.0 / np.sqrt(2.0)
# Post-scatter single-qubit gate: maps the routed spin branch to |1> and the
# unrouted branch to |0> with all-positive signs under ideal reflections.
_G = np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=np.complex128) * _SQRT_HALF

_TINY = 1e-300


def run_chunk(
    base_amps: np.ndarray,
    r0: complex,
    r1: complex,
    m: int,
    e_sw: float,
    alpha: np.ndarray,
    theta_p: np.ndarray,
    theta_x: np.ndarray,
    u_wrong: np.ndarray,
    u_k: np.ndarray,
    det_amp: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evolve one chunk of trajectories through the full qudit pipeline.

    Parameters are the noise draws for the chunk: ``alpha``/``theta_p`` are
    the source amplitude/phase deviations (T, N), ``theta_x`` the per-bin
    interferometer phases (T, N), ``u_wrong`` uniforms deciding wrong-switch
    events per entangling stage (T, 2m), ``u_k`` uniforms selecting the
    measurement outcome (T,).  ``base_amps`` is the (pre-compensated) source
    amplitude profile and ``det_amp`` the per-bin detection amplitude from
    storage-loop loss.  Scalar transmissions (fiber, switch throughput,
    detector) are applied by the caller.

    Returns ``(sum_ptilde, k, rhos)``: the per-trajectory heralding weight
    before scalar transmissions, the sampled outcome index, and the
    trace-normalized phase-corrected per-pair 4x4 density matrices of shape
    (T, m, 4, 4).
    """
    n = 2**m
    t_count = alpha.shape[0]
    bins = np.arange(n)

    a = base_amps[None, :] * (1.0 + alpha) * np.exp(1j * theta_p)
    a = a / np.linalg.norm(a, axis=1, keepdims=True)

    u = np.full((t_count, 2 * m, n, 2), _SQRT_HALF, dtype=np.complex128)
    r_arr = np.array([r0, r1], dtype=np.complex128)
    wrong = u_wrong < e_sw

    for side in (0, 1):
        for i in range(m - 1, 0 - 1, -1):
            q = side * m + (m - 1 - i)
            routed = ((bins >> i) & 1).astype(bool)
            mask = routed[None, :] ^ wrong[:, q][:, None]
            mult = np.where(mask[:, :, None], r_arr[None, None, :], 1.0)
            u[:, q] = u[:, q] * mult
        lo, hi = side * m, (side + 1) * m
        u[:, lo:hi] = u[:, lo:hi] @ _G.T

    a = a * np.exp(1j * theta_x) * det_amp[None, :]

    # Combined Gram factor per routing bit: C_j[l, l'] = <u_{l', A}|u_{l, A}>
    # conj-paired with Bob's, so that prod_j C_j carries all spin overlaps.
    c_gram = np.empty((m, t_count, n, n), dtype=np.complex128)
    for j in range(m):
        sa = np.einsum("tlc,tmc->tlm", u[:, j], u[:, j].conj())
        sb = np.einsum("tlc,tmc->tlm", u[:, j + m], u[:, j + m].conj())
        c_gram[j] = sa * sb

    prod_all = a[:, :, None] * a.conj()[:, None, :]
    for j in range(m):
        prod_all = prod_all * c_gram[j]

    # ptilde_k = (1/N) sum_{l,l'} omega^{-k(l-l')} M_{ll'} via a double DFT.
    b = np.fft.ifft(np.fft.fft(prod_all, axis=1), axis=2)
    probs = np.einsum("tkk->tk", b).real.copy()
    np.clip(probs, 0.0, None, out=probs)
    total = probs.sum(axis=1)

    safe = np.maximum(total, _TINY)
    cdf = np.cumsum(probs, axis=1) / safe[:, None]
    k = np.minimum((u_k[:, None] >= cdf).sum(axis=1), n - 1).astype(np.int64)

    # Post-measurement photon coefficients <X_k|l> a_l.
    phase = np.exp(-2j * np.pi * (k[:, None] * bins[None, :]) / n)
    c = a * phase / np.sqrt(n)
    cc = c[:, :, None] * c.conj()[:, None, :]

    rhos = np.empty((t_count, m, 4, 4), dtype=np.complex128)
    eye4 = np.eye(4, dtype=np.complex128) / 4.0
    for p in range(m):
        j = m - 1 - p
        w = cc.copy()
        for j2 in range(m):
            if j2 != j:
                w = w * c_gram[j2]
        ua = u[:, j]
        ub = u[:, j + m].copy()
        ub[:, :, 1] *= np.exp(2j * np.pi * (2**p) * k / n)[:, None]
        x = (ua[:, :, :, None] * ub[:, :, None, :]).reshape(t_count, n, 4)
        tmp = w @ x.conj()
        rho = x.transpose(0, 2, 1) @ tmp
        tr = np.einsum("tii->t", rho).real
        rho = rho / np.maximum(tr, _TINY)[:, None, None]
        dead = tr <= 0.0
        if dead.any():
            rho[dead] = eye4
        rhos[:, p] = rho

    return total, k, rhos
