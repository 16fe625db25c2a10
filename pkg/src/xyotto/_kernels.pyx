# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: 4x4 Hermitian Jacobi and schedule propagation.

Mirrors ``_fallback`` function for function; the pure-Python module is the
reference and the test-suite checks both agree.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, fmax, cos, sin, hypot

cnp.import_array()

cdef double OFF_TOL = 1e-14
cdef int MAX_SWEEPS = 100


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double complex conj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef int _jacobi4(double complex[4][4] A, double complex[4][4] V,
                  double* w, double* off_out) noexcept nogil:
    """Cyclic complex Jacobi on A (destroyed). Returns sweeps used or -1."""
    cdef int i, j, k, p, q, sweep
    cdef double norm2 = 0.0, off2 = 0.0, mag, theta, t, c, s, app, aqq, re, im, big, r
    cdef double complex ph, rpp, rpq, rqp, rqq, x, y
    cdef int used = -1

    for i in range(4):
        for j in range(4):
            V[i][j] = 1.0 if i == j else 0.0
            norm2 += cabs2(A[i][j])

    for sweep in range(MAX_SWEEPS + 1):
        off2 = 0.0
        for i in range(4):
            for j in range(4):
                if i != j:
                    off2 += cabs2(A[i][j])
        if off2 <= OFF_TOL * OFF_TOL * norm2:
            used = sweep
            break
        if sweep == MAX_SWEEPS:
            break
        for p in range(3):
            for q in range(p + 1, 4):
                mag = hypot(A[p][q].real, A[p][q].imag)
                if mag == 0.0:
                    continue
                # rescale before normalising so |ph| = 1 even for subnormal entries
                re = A[p][q].real
                im = A[p][q].imag
                big = fmax(fabs(re), fabs(im))
                re = re / big
                im = im / big
                r = hypot(re, im)
                ph.real = re / r
                ph.imag = im / r
                app = A[p][p].real
                aqq = A[q][q].real
                theta = (aqq - app) / (2.0 * mag)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                rpp = c
                rpq = s
                rqp = -s * conj(ph)
                rqq = c * conj(ph)
                for k in range(4):
                    x = A[k][p]
                    y = A[k][q]
                    A[k][p] = x * rpp + y * rqp
                    A[k][q] = x * rpq + y * rqq
                for k in range(4):
                    x = A[p][k]
                    y = A[q][k]
                    A[p][k] = conj(rpp) * x + conj(rqp) * y
                    A[q][k] = conj(rpq) * x + conj(rqq) * y
                A[p][q] = 0.0
                A[q][p] = 0.0
                A[p][p] = A[p][p].real
                A[q][q] = A[q][q].real
                for k in range(4):
                    x = V[k][p]
                    y = V[k][q]
                    V[k][p] = x * rpp + y * rqp
                    V[k][q] = x * rpq + y * rqq

    off_out[0] = sqrt(off2)
    for i in range(4):
        w[i] = A[i][i].real

    # stable insertion sort, ascending
    cdef double wk
    cdef double complex col[4]
    for i in range(1, 4):
        wk = w[i]
        for k in range(4):
            col[k] = V[k][i]
        j = i - 1
        while j >= 0 and w[j] > wk:
            w[j + 1] = w[j]
            for k in range(4):
                V[k][j + 1] = V[k][j]
            j -= 1
        w[j + 1] = wk
        for k in range(4):
            V[k][j + 1] = col[k]
    return used


def jacobi_eigh(M):
    """Eigen-decompose one Hermitian 4x4 matrix.

    Returns ``(w, V, sweeps, off_norm)``; ``sweeps`` is -1 if the sweep cap
    was hit without convergence.
    """
    cdef double complex[:, :] m = np.asarray(M, dtype=np.complex128)
    cdef double complex A[4][4]
    cdef double complex V[4][4]
    cdef double w[4]
    cdef double off
    cdef int i, j, used
    for i in range(4):
        for j in range(4):
            A[i][j] = m[i, j]
    with nogil:
        used = _jacobi4(A, V, w, &off)
    wa = np.empty(4)
    va = np.empty((4, 4), dtype=np.complex128)
    cdef double[:] wv = wa
    cdef double complex[:, :] vv = va
    for i in range(4):
        wv[i] = w[i]
        for j in range(4):
            vv[i, j] = V[i][j]
    return wa, va, used, off


cdef inline void _drive(double h1, double h2, double tau, double t, bint reflect,
                        double* h, double* hd, double* hdd) noexcept nogil:
    cdef double a, b, s
    if reflect:
        # time-reversed compression-direction cubic
        a = h2
        b = h1
        s = tau - t
    else:
        a = h1
        b = h2
        s = t
    h[0] = a - 6.0 * (a - b) * (s * s / (tau * tau)) * (0.5 - s / (3.0 * tau))
    hd[0] = -6.0 * (a - b) * (s / (tau * tau) - s * s / (tau * tau * tau))
    hdd[0] = -6.0 * (a - b) * (1.0 / (tau * tau) - 2.0 * s / (tau * tau * tau))
    if reflect:
        hd[0] = -hd[0]


cdef inline double _cd_coeff(double g, double h, double hd) noexcept nogil:
    if g == 0.0 or hd == 0.0:
        return 0.0
    return -hd * g / (4.0 * (h * h + g * g))


cdef inline double _cd_rate(double g, double h, double hd, double hdd) noexcept nogil:
    cdef double l2 = h * h + g * g
    if g == 0.0:
        return 0.0
    return -g * (hdd * l2 - 2.0 * h * hd * hd) / (4.0 * l2 * l2)


cdef inline void _hamiltonian(double g, double h, double f, double complex[4][4] H) noexcept nogil:
    cdef int i, j
    for i in range(4):
        for j in range(4):
            H[i][j] = 0.0
    H[0][0] = 2.0 * h
    H[3][3] = -2.0 * h
    H[0][3] = 2.0 * g - 2j * f
    H[3][0] = 2.0 * g + 2j * f
    H[1][2] = 2.0
    H[2][1] = 2.0


cdef inline double _cd_expect(double complex[4][4] R) noexcept nogil:
    # tr[rho (sx sy + sy sx)] = -4 Im rho[0][3]
    return -4.0 * R[0][3].imag


def propagate_schedule(rho0, double gamma, double h_start, double h_end,
                       double tau, int steps, bint cd, bint reflect,
                       bint track_cost, int sample_every):
    """Exponential-midpoint propagation over one cubic drive stroke.

    Returns ``(rho_final, cost_integral, times, states, status)``; status is
    0 on success or -1 if a Jacobi solve failed to converge.
    """
    cdef double complex[:, :] r0 = np.asarray(rho0, dtype=np.complex128)
    cdef double complex R[4][4]
    cdef double complex H[4][4]
    cdef double complex V[4][4]
    cdef double complex U[4][4]
    cdef double complex T[4][4]
    cdef double complex ph[4]
    cdef double w[4]
    cdef double off, dt, t, h, hd, hdd, f, cost = 0.0, wt
    cdef int i, j, k, n, status = 0, nsamp, si = 0
    for i in range(4):
        for j in range(4):
            R[i][j] = r0[i, j]

    if sample_every > 0:
        nsamp = steps // sample_every + 1
        if steps % sample_every != 0:
            nsamp += 1
    else:
        nsamp = 2
    times_a = np.empty(nsamp)
    states_a = np.empty((nsamp, 4, 4), dtype=np.complex128)
    cdef double[:] tv = times_a
    cdef double complex[:, :, :] sv = states_a

    dt = tau / steps
    tv[0] = 0.0
    for i in range(4):
        for j in range(4):
            sv[0, i, j] = R[i][j]
    si = 1

    with nogil:
        if track_cost:
            _drive(h_start, h_end, tau, 0.0, reflect, &h, &hd, &hdd)
            cost += 0.5 * dt * _cd_rate(gamma, h, hd, hdd) * _cd_expect(R)
        for n in range(steps):
            t = (n + 0.5) * dt
            _drive(h_start, h_end, tau, t, reflect, &h, &hd, &hdd)
            f = _cd_coeff(gamma, h, hd) if cd else 0.0
            _hamiltonian(gamma, h, f, H)
            if _jacobi4(H, V, w, &off) < 0:
                status = -1
                break
            for k in range(4):
                ph[k] = cos(w[k] * dt) - 1j * sin(w[k] * dt)
            for i in range(4):
                for j in range(4):
                    U[i][j] = 0.0
                    for k in range(4):
                        U[i][j] = U[i][j] + V[i][k] * ph[k] * conj(V[j][k])
            # T = U R
            for i in range(4):
                for j in range(4):
                    T[i][j] = 0.0
                    for k in range(4):
                        T[i][j] = T[i][j] + U[i][k] * R[k][j]
            # R = T U^dagger
            for i in range(4):
                for j in range(4):
                    R[i][j] = 0.0
                    for k in range(4):
                        R[i][j] = R[i][j] + T[i][k] * conj(U[j][k])
            if track_cost:
                t = (n + 1) * dt if n + 1 < steps else tau
                _drive(h_start, h_end, tau, t, reflect, &h, &hd, &hdd)
                wt = 0.5 * dt if n + 1 == steps else dt
                cost += wt * _cd_rate(gamma, h, hd, hdd) * _cd_expect(R)
            if (sample_every > 0 and (n + 1) % sample_every == 0) or n + 1 == steps:
                tv[si] = (n + 1) * dt if n + 1 < steps else tau
                for i in range(4):
                    for j in range(4):
                        sv[si, i, j] = R[i][j]
                si += 1

    out = np.empty((4, 4), dtype=np.complex128)
    cdef double complex[:, :] ov = out
    for i in range(4):
        for j in range(4):
            ov[i, j] = R[i][j]
    return out, cost, times_a[:si], states_a[:si], status
