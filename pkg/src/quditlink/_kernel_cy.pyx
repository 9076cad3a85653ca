# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled trajectory kernel.

Semantics are identical to ``_kernel_py.run_chunk`` (same inputs, same
outputs, same trajectory-by-trajectory arithmetic); the per-trajectory work
is written as typed loops instead of whole-chunk array operations.
"""

import numpy as np

cimport cython
from libc.math cimport M_PI, cos, sin, sqrt

BACKEND = "cython"

ctypedef double complex dcomplex

cdef double TINY = 1e-300


cdef inline dcomplex cexp_i(double phi) noexcept nogil:
    return cos(phi) + 1j * sin(phi)


def run_chunk(
    base_amps,
    r0,
    r1,
    int m,
    double e_sw,
    alpha,
    theta_p,
    theta_x,
    u_wrong,
    u_k,
    det_amp,
):
    """See ``_kernel_py.run_chunk`` for the contract; outputs match it."""
    cdef int n = 1 << m
    cdef double[:, ::1] alpha_v = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[:, ::1] thp_v = np.ascontiguousarray(theta_p, dtype=np.float64)
    cdef double[:, ::1] thx_v = np.ascontiguousarray(theta_x, dtype=np.float64)
    cdef double[:, ::1] uw_v = np.ascontiguousarray(u_wrong, dtype=np.float64)
    cdef double[::1] uk_v = np.ascontiguousarray(u_k, dtype=np.float64)
    cdef double complex[::1] base_v = np.ascontiguousarray(
        base_amps, dtype=np.complex128
    )
    cdef double[::1] det_v = np.ascontiguousarray(det_amp, dtype=np.float64)
    cdef int t_count = alpha_v.shape[0]

    total_np = np.empty(t_count, dtype=np.float64)
    k_np = np.empty(t_count, dtype=np.int64)
    rhos_np = np.empty((t_count, m, 4, 4), dtype=np.complex128)
    cdef double[::1] total_v = total_np
    cdef long long[::1] k_v = k_np
    cdef dcomplex[:, :, :, ::1] rhos_v = rhos_np

    # per-trajectory workspaces
    a_np = np.empty(n, dtype=np.complex128)
    u_np = np.empty((2 * m, n, 2), dtype=np.complex128)
    cg_np = np.empty((m, n, n), dtype=np.complex128)
    w_np = np.empty((n, n), dtype=np.complex128)
    probs_np = np.empty(n, dtype=np.float64)
    x_np = np.empty((n, 4), dtype=np.complex128)
    cdef dcomplex[::1] a = a_np
    cdef dcomplex[:, :, ::1] u = u_np
    cdef dcomplex[:, :, ::1] cg = cg_np
    cdef dcomplex[:, ::1] w = w_np
    cdef double[::1] probs = probs_np
    cdef dcomplex[:, ::1] x = x_np
    # omega^{-d} lookup and photon-diagonal sums, shared by all trajectories
    om_np = np.exp(-2j * np.pi * np.arange(n) / n)
    sdiag_np = np.empty(n, dtype=np.complex128)
    cdef dcomplex[::1] om = om_np
    cdef dcomplex[::1] sdiag = sdiag_np

    cdef dcomplex r_0 = r0
    cdef dcomplex r_1 = r1
    cdef double inv_sqrt2 = 1.0 / sqrt(2.0)
    cdef double inv_sqrtn = 1.0 / sqrt(<double> n)
    cdef double two_pi_over_n = 2.0 * M_PI / n

    cdef int t, l, l2, i, j, j2, q, side, p, kk, ii, jj, routed
    cdef double norm, tot, target, acc, tr, phi
    cdef dcomplex amp, g0, g1, s_a, s_b, pr, corr, tmp
    cdef int wrong_flag

    with nogil:
        for t in range(t_count):
            _one_trajectory(
                t, n, m, e_sw, r_0, r_1, inv_sqrt2, inv_sqrtn, two_pi_over_n,
                base_v, det_v, alpha_v, thp_v, thx_v, uw_v, uk_v,
                a, u, cg, w, probs, x, om, sdiag, total_v, k_v, rhos_v,
            )

    return total_np, k_np, rhos_np


cdef void _one_trajectory(
    int t, int n, int m, double e_sw, dcomplex r_0, dcomplex r_1,
    double inv_sqrt2, double inv_sqrtn, double two_pi_over_n,
    double complex[::1] base_v, double[::1] det_v,
    double[:, ::1] alpha_v, double[:, ::1] thp_v, double[:, ::1] thx_v,
    double[:, ::1] uw_v, double[::1] uk_v,
    dcomplex[::1] a, dcomplex[:, :, ::1] u, dcomplex[:, :, ::1] cg,
    dcomplex[:, ::1] w, double[::1] probs, dcomplex[:, ::1] x,
    dcomplex[::1] om, dcomplex[::1] sdiag,
    double[::1] total_v, long long[::1] k_v, dcomplex[:, :, :, ::1] rhos_v,
) noexcept nogil:
    cdef int l, l2, i, j, j2, q, side, p, kk, ii, jj, routed, d
    cdef double norm, tot, target, acc, tr, phi
    cdef dcomplex amp, g0, g1, s_a, s_b, pr, corr, tmp
    cdef int wrong_flag

    if True:
        # source amplitudes with multiplicative noise, renormalized
        norm = 0.0
        for l in range(n):
            amp = base_v[l] * (1.0 + alpha_v[t, l]) * cexp_i(thp_v[t, l])
            a[l] = amp
            norm += amp.real * amp.real + amp.imag * amp.imag
        norm = sqrt(norm)
        for l in range(n):
            a[l] = a[l] / norm

        for q in range(2 * m):
            for l in range(n):
                u[q, l, 0] = inv_sqrt2
                u[q, l, 1] = inv_sqrt2

        # bin-controlled scattering stages, then the post-scatter gate
        for side in range(2):
            for i in range(m - 1, -1, -1):
                q = side * m + (m - 1 - i)
                wrong_flag = 1 if uw_v[t, q] < e_sw else 0
                for l in range(n):
                    routed = (l >> i) & 1
                    if routed != wrong_flag:
                        u[q, l, 0] = u[q, l, 0] * r_0
                        u[q, l, 1] = u[q, l, 1] * r_1
            for q in range(side * m, side * m + m):
                for l in range(n):
                    g0 = (u[q, l, 0] + u[q, l, 1]) * inv_sqrt2
                    g1 = (-u[q, l, 0] + u[q, l, 1]) * inv_sqrt2
                    u[q, l, 0] = g0
                    u[q, l, 1] = g1

        # interferometer phases and per-bin detection amplitudes
        for l in range(n):
            a[l] = a[l] * cexp_i(thx_v[t, l]) * det_v[l]

        # combined Gram factor per routing bit
        for j in range(m):
            for l in range(n):
                for l2 in range(n):
                    s_a = (
                        u[j, l, 0] * u[j, l2, 0].conjugate()
                        + u[j, l, 1] * u[j, l2, 1].conjugate()
                    )
                    s_b = (
                        u[j + m, l, 0] * u[j + m, l2, 0].conjugate()
                        + u[j + m, l, 1] * u[j + m, l2, 1].conjugate()
                    )
                    cg[j, l, l2] = s_a * s_b

        # outcome probabilities ptilde_k = (1/N) sum omega^{-k(l-l2)} M,
        # reduced to the photon-diagonal sums s[d] = sum_{l-l2=d mod N} M
        for d in range(n):
            sdiag[d] = 0.0
        for l in range(n):
            for l2 in range(n):
                pr = a[l] * a[l2].conjugate()
                for j in range(m):
                    pr = pr * cg[j, l, l2]
                w[l, l2] = pr
                d = l - l2
                if d < 0:
                    d += n
                sdiag[d] = sdiag[d] + pr
        tot = 0.0
        for kk in range(n):
            tmp = 0.0
            for d in range(n):
                tmp = tmp + sdiag[d] * om[(kk * d) % n]
            acc = tmp.real / n
            if acc < 0.0:
                acc = 0.0
            probs[kk] = acc
            tot += acc
        total_v[t] = tot

        # sample the heralded outcome index
        target = uk_v[t] * (tot if tot > TINY else TINY)
        acc = 0.0
        kk = n - 1
        for i in range(n):
            acc += probs[i]
            if target < acc:
                kk = i
                break
        k_v[t] = kk

        # post-measurement photon coefficients <X_k|l> a_l
        for l in range(n):
            a[l] = a[l] * om[(kk * l) % n] * inv_sqrtn

        # phase-corrected per-pair reduced density matrices
        for p in range(m):
            j = m - 1 - p
            corr = om[((1 << p) * kk) % n].conjugate()
            for l in range(n):
                x[l, 0] = u[j, l, 0] * u[j + m, l, 0]
                x[l, 1] = u[j, l, 0] * u[j + m, l, 1] * corr
                x[l, 2] = u[j, l, 1] * u[j + m, l, 0]
                x[l, 3] = u[j, l, 1] * u[j + m, l, 1] * corr
            for l in range(n):
                for l2 in range(n):
                    pr = a[l] * a[l2].conjugate()
                    for j2 in range(m):
                        if j2 != j:
                            pr = pr * cg[j2, l, l2]
                    w[l, l2] = pr
            for ii in range(4):
                for jj in range(4):
                    tmp = 0.0
                    for l in range(n):
                        for l2 in range(n):
                            tmp = tmp + x[l, ii] * w[l, l2] * x[l2, jj].conjugate()
                    rhos_v[t, p, ii, jj] = tmp
            tr = 0.0
            for ii in range(4):
                tr += rhos_v[t, p, ii, ii].real
            if tr > 0.0:
                for ii in range(4):
                    for jj in range(4):
                        rhos_v[t, p, ii, jj] = rhos_v[t, p, ii, jj] / tr
            else:
                for ii in range(4):
                    for jj in range(4):
                        rhos_v[t, p, ii, jj] = 0.25 if ii == jj else 0.0
