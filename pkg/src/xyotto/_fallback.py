"""Pure numpy implementations of the compiled kernels.

Same signatures and return conventions as ``_kernels``. The Jacobi solver is
batched over a leading axis so a whole stroke's midpoint Hamiltonians are
diagonalised in one vectorised pass.
"""

import numpy as np

OFF_TOL = 1e-14
MAX_SWEEPS = 100

_PAIRS = [(p, q) for p in range(3) for q in range(p + 1, 4)]


def jacobi_eigh_batch(M):
    """Cyclic Jacobi on a stack of Hermitian 4x4 matrices.

    Returns ``(w, V, sweeps, off_norm)`` with ``w`` of shape (n, 4) ascending,
    ``V`` of shape (n, 4, 4), and per-matrix sweep counts (-1 on failure).
    """
    A = np.array(M, dtype=np.complex128, copy=True)
    n = A.shape[0]
    V = np.broadcast_to(np.eye(4, dtype=np.complex128), (n, 4, 4)).copy()
    norm2 = np.sum(np.abs(A) ** 2, axis=(1, 2))
    offmask = ~np.eye(4, dtype=bool)
    used = np.full(n, -1)
    rows = np.arange(n)

    for sweep in range(MAX_SWEEPS + 1):
        off2 = np.sum(np.abs(A[:, offmask]) ** 2, axis=1)
        done = (off2 <= OFF_TOL**2 * norm2) & (used < 0)
        used[done] = sweep
        active = rows[used < 0]
        if active.size == 0 or sweep == MAX_SWEEPS:
            break
        for p, q in _PAIRS:
            apq = A[active, p, q]
            mag = np.abs(apq)
            sel = mag > 0.0
            if not sel.any():
                continue
            idx = active[sel]
            mag = mag[sel]
            # rescale before normalising so |ph| = 1 even for subnormal entries
            re, im = apq[sel].real, apq[sel].imag
            big = np.maximum(np.abs(re), np.abs(im))
            re, im = re / big, im / big
            r = np.hypot(re, im)
            ph = re / r + 1j * (im / r)
            with np.errstate(over="ignore"):
                # theta = inf gives t = 0, a pure phase rotation
                theta = (A[idx, q, q].real - A[idx, p, p].real) / (2.0 * mag)
                t = 1.0 / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta < 0.0, -t, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rpp, rpq = c, s
            rqp, rqq = -s * ph.conj(), c * ph.conj()

            x = A[idx, :, p].copy()
            y = A[idx, :, q]
            A[idx, :, p] = x * rpp[:, None] + y * rqp[:, None]
            A[idx, :, q] = x * rpq[:, None] + y * rqq[:, None]
            x = A[idx, p, :].copy()
            y = A[idx, q, :]
            A[idx, p, :] = np.conj(rpp)[:, None] * x + np.conj(rqp)[:, None] * y
            A[idx, q, :] = np.conj(rpq)[:, None] * x + np.conj(rqq)[:, None] * y
            A[idx, p, q] = 0.0
            A[idx, q, p] = 0.0
            A[idx, p, p] = A[idx, p, p].real
            A[idx, q, q] = A[idx, q, q].real
            x = V[idx, :, p].copy()
            y = V[idx, :, q]
            V[idx, :, p] = x * rpp[:, None] + y * rqp[:, None]
            V[idx, :, q] = x * rpq[:, None] + y * rqq[:, None]

    off = np.sqrt(np.sum(np.abs(A[:, offmask]) ** 2, axis=1))
    w = np.real(np.diagonal(A, axis1=1, axis2=2)).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w, V, used, off


def jacobi_eigh(M):
    w, V, used, off = jacobi_eigh_batch(np.asarray(M)[None])
    return w[0], V[0], int(used[0]), float(off[0])


def _drive(h1, h2, tau, t, reflect):
    if reflect:
        a, b, s = h2, h1, tau - t
    else:
        a, b, s = h1, h2, t
    h = a - 6.0 * (a - b) * (s * s / (tau * tau)) * (0.5 - s / (3.0 * tau))
    hd = -6.0 * (a - b) * (s / (tau * tau) - s * s / (tau * tau * tau))
    hdd = -6.0 * (a - b) * (1.0 / (tau * tau) - 2.0 * s / (tau * tau * tau))
    if reflect:
        hd = -hd
    return h, hd, hdd


def _cd_coeff(g, h, hd):
    l2 = h * h + g * g
    with np.errstate(divide="ignore", invalid="ignore"):
        f = -hd * g / (4.0 * l2)
    return np.where((g == 0.0) | (hd == 0.0), 0.0, f)


def _cd_rate(g, h, hd, hdd):
    if g == 0.0:
        return np.zeros_like(np.asarray(h, dtype=float))
    l2 = h * h + g * g
    return -g * (hdd * l2 - 2.0 * h * hd * hd) / (4.0 * l2 * l2)


def _hamiltonians(g, h, f):
    n = h.shape[0]
    H = np.zeros((n, 4, 4), dtype=np.complex128)
    H[:, 0, 0] = 2.0 * h
    H[:, 3, 3] = -2.0 * h
    H[:, 0, 3] = 2.0 * g - 2j * f
    H[:, 3, 0] = 2.0 * g + 2j * f
    H[:, 1, 2] = 2.0
    H[:, 2, 1] = 2.0
    return H


def propagate_schedule(rho0, gamma, h_start, h_end, tau, steps, cd, reflect,
                       track_cost, sample_every):
    dt = tau / steps
    tmid = (np.arange(steps) + 0.5) * dt
    h, hd, _ = _drive(h_start, h_end, tau, tmid, reflect)
    f = _cd_coeff(gamma, h, hd) if cd else np.zeros(steps)
    w, V, used, _ = jacobi_eigh_batch(_hamiltonians(gamma, h, f))
    status = 0 if (used >= 0).all() else -1
    U = np.einsum("nik,nk,njk->nij", V, np.exp(-1j * w * dt), V.conj())

    if track_cost:
        tgrid = np.arange(steps + 1) * dt
        tgrid[-1] = tau
        hg, hdg, hddg = _drive(h_start, h_end, tau, tgrid, reflect)
        rate = _cd_rate(gamma, hg, hdg, hddg)
        weights = np.full(steps + 1, dt)
        weights[0] = weights[-1] = 0.5 * dt

    R = np.array(rho0, dtype=np.complex128)
    times, states = [0.0], [R.copy()]
    cost = 0.0
    if track_cost:
        cost += weights[0] * rate[0] * (-4.0 * R[0, 3].imag)
    for n in range(steps):
        R = U[n] @ R @ U[n].conj().T
        if track_cost:
            cost += weights[n + 1] * rate[n + 1] * (-4.0 * R[0, 3].imag)
        if (sample_every > 0 and (n + 1) % sample_every == 0) or n + 1 == steps:
            times.append((n + 1) * dt if n + 1 < steps else tau)
            states.append(R.copy())
    return R, float(cost), np.array(times), np.array(states), status
