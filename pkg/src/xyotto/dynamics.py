"""Unitary work strokes: von Neumann propagation of the density matrix."""

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ContractViolation, ControlFailure, NumericFailure
from .model import (
    ModelParams,
    build_hamiltonian,
    cd_hamiltonian,
    drive_field,
    labeled_eigenbasis,
)
from .smallmat import check_density, hermitian_eigen, trace_product, unitary_step

METHODS = ("midpoint", "rk4")

TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8
FREEZE_TOL = 1e-6
FREEZE_FAIL_TOL = 1e-4


@dataclass(frozen=True)
class PropagatorConfig:
    method: str = "midpoint"
    steps: int = 4096
    sample_every: int = 0  # 0 keeps only the endpoints

    def __post_init__(self):
        if self.method not in METHODS:
            raise ContractViolation(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ContractViolation(f"steps must be a positive integer, got {self.steps}")
        if self.sample_every < 0:
            raise ContractViolation("sample_every must be >= 0")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 4, 4)
    cost_integral: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]


def expectation(rho, O):
    return trace_product(rho, O).real


def _sample_index(n, steps, every):
    return every > 0 and (n + 1) % every == 0 or n + 1 == steps


def _check_states(states):
    for rho in states:
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise NumericFailure(
                f"trace drifted to {tr.real:.12g}; increase the number of steps", residual=abs(tr - 1.0)
            )
        lo = hermitian_eigen(0.5 * (rho + rho.conj().T)).eigenvalues[0]
        if lo < -POSITIVITY_TOL:
            raise NumericFailure(
                f"negative density eigenvalue {lo:.3e}; increase the number of steps", residual=lo
            )


def _rk4_step(rho, H_of_t, t, dt):
    def rhs(r, H):
        return -1j * (H @ r - r @ H)

    Ha, Hm, Hb = H_of_t(t), H_of_t(t + 0.5 * dt), H_of_t(t + dt)
    k1 = rhs(rho, Ha)
    k2 = rhs(rho + 0.5 * dt * k1, Hm)
    k3 = rhs(rho + 0.5 * dt * k2, Hm)
    k4 = rhs(rho + dt * k3, Hb)
    out = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return 0.5 * (out + out.conj().T)


def evolve(rho0, H_of_t, tau, cfg=PropagatorConfig(), rate_of_t=None):
    """Propagate rho0 under a time-dependent Hamiltonian for a duration tau.

    ``rate_of_t``, if given, is an observable-valued function whose
    expectation is integrated along the trajectory (trapezoid rule on the
    substep grid); the result lands in ``Trajectory.cost_integral``.
    """
    rho = check_density(rho0).copy()
    if not tau > 0.0:
        raise ContractViolation(f"tau must be positive, got {tau}")
    steps = cfg.steps
    dt = tau / steps
    times, states = [0.0], [rho.copy()]
    integral = 0.0
    if rate_of_t is not None:
        integral += 0.5 * dt * expectation(rho, rate_of_t(0.0))
    for n in range(steps):
        t = n * dt
        if cfg.method == "midpoint":
            U = unitary_step(H_of_t(t + 0.5 * dt), dt)
            rho = U @ rho @ U.conj().T
        else:
            rho = _rk4_step(rho, H_of_t, t, dt)
        tn = (n + 1) * dt if n + 1 < steps else tau
        if rate_of_t is not None:
            integral += (0.5 * dt if n + 1 == steps else dt) * expectation(rho, rate_of_t(tn))
        if _sample_index(n, steps, cfg.sample_every):
            times.append(tn)
            states.append(rho.copy())
    traj = Trajectory(np.array(times), np.array(states), integral)
    _check_states(traj.states)
    return traj


def schedule_hamiltonian(s, cd=False):
    """H(t) along a drive schedule, optionally with the counterdiabatic term."""

    def H_of_t(t):
        h, hd, _ = drive_field(s, min(max(t, 0.0), s.tau))
        H = build_hamiltonian(ModelParams(s.gamma, min(max(h, 0.0), 1.0)))
        if cd:
            H = H + cd_hamiltonian(s.gamma, h, hd)
        return H

    return H_of_t


def evolve_schedule(rho0, s, cfg=PropagatorConfig(), cd=False, track_cost=False):
    """Propagate along a cubic drive schedule.

    The midpoint method runs in the compiled kernel (or its numpy twin);
    rk4 goes through the generic ``evolve`` loop.
    """
    rho0 = check_density(rho0)
    if cfg.method == "midpoint":
        rho, cost, times, states, status = _backend.propagate_schedule(
            rho0, float(s.gamma), float(s.h_start), float(s.h_end), float(s.tau),
            int(cfg.steps), bool(cd), bool(s.reflected), bool(track_cost), int(cfg.sample_every),
        )
        if status != 0:
            raise NumericFailure("Jacobi eigensolver did not converge inside the propagator")
        traj = Trajectory(np.asarray(times), np.asarray(states), float(cost))
        _check_states(traj.states)
        return traj
    rate = None
    if track_cost:
        from .model import cd_hamiltonian_derivative

        def rate(t):
            h, hd, hdd = drive_field(s, min(max(t, 0.0), s.tau))
            return cd_hamiltonian_derivative(s.gamma, h, hd, hdd)

    return evolve(rho0, schedule_hamiltonian(s, cd), s.tau, cfg, rate_of_t=rate)


def instantaneous_populations(rho, p, raw=False):
    """Populations in the eigenbasis of H_0(p), summed over degenerate levels.

    Returned per block label (inner-, outer-, outer+, inner+); levels that
    share an energy get the group total split evenly so the result is basis
    independent inside each degenerate subspace. ``raw=True`` skips the split.
    """
    eig = labeled_eigenbasis(p)
    V = eig.eigenvectors
    pops = np.real(np.einsum("ik,ij,jk->k", V.conj(), rho, V))
    return pops if raw else _even_split(pops, eig.eigenvalues)


def _even_split(pops, energies, tol=1e-12):
    out = pops.copy()
    seen = np.zeros(4, dtype=bool)
    for k in range(4):
        if seen[k]:
            continue
        grp = np.abs(energies - energies[k]) <= tol
        seen |= grp
        out[grp] = pops[grp].sum() / grp.sum()
    return out


def evolve_with_cd(rho0, s, cfg=PropagatorConfig(), track_cost=False):
    """Propagate under H_0 + H_CD and verify the populations stay frozen.

    Every sampled state is checked in the instantaneous eigenbasis of the
    bare Hamiltonian. Deviations beyond 1e-4 raise :class:`ControlFailure`;
    the largest deviation is stored in ``meta["max_population_drift"]``.
    """
    traj = evolve_schedule(rho0, s, cfg, cd=True, track_cost=track_cost)
    p0 = instantaneous_populations(traj.states[0], ModelParams(s.gamma, s.h_start), raw=True)
    drift = 0.0
    for t, rho in zip(traj.times, traj.states):
        h = drive_field(s, min(t, s.tau))[0]
        pt = ModelParams(s.gamma, min(max(h, 0.0), 1.0))
        levels = labeled_eigenbasis(pt).eigenvalues
        now = instantaneous_populations(rho, pt)
        drift = max(drift, float(np.max(np.abs(now - _even_split(p0, levels)))))
    traj.meta["max_population_drift"] = drift
    if drift > FREEZE_FAIL_TOL:
        raise ControlFailure(f"counterdiabatic populations drifted by {drift:.3e}", residual=drift)
    return traj


def adiabatic_map(rho0, start, end, coherence_tol=1e-8):
    """Ideal adiabatic transport of level populations from H_0(start) to H_0(end)."""
    rho0 = check_density(rho0)
    a = labeled_eigenbasis(start)
    b = labeled_eigenbasis(end)
    M = a.eigenvectors.conj().T @ rho0 @ a.eigenvectors
    off = np.max(np.abs(M - np.diag(np.diag(M))))
    if off > coherence_tol:
        raise ContractViolation(
            f"state carries coherences ({off:.3e}) in the start eigenbasis; adiabatic transport undefined"
        )
    pops = _even_split(np.real(np.diag(M)), a.eigenvalues)
    V = b.eigenvectors
    out = (V * pops) @ V.conj().T
    return 0.5 * (out + out.conj().T)
