"""Two-spin anisotropic XY working medium in a transverse field.

Basis order is |uu>, |ud>, |du>, |dd> (spin a tensor spin b, up = sigma_z +1).
The Hamiltonian splits into an "outer" block on {|uu>, |dd>} with energies
+-2*lam, lam = sqrt(h^2 + gamma^2), and an "inner" block on {|ud>, |du>}
with fixed energies +-2.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegeneracyError, SingularityError
from .smallmat import EigenDecomposition4, hermitian_eigen, matrix_function

SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
I2 = np.eye(2, dtype=np.complex128)

XX = np.kron(SX, SX)
YY = np.kron(SY, SY)
ZSUM = np.kron(SZ, I2) + np.kron(I2, SZ)
# generator of the counterdiabatic term
XY_YX = np.kron(SX, SY) + np.kron(SY, SX)

# eigenvector labels in the order used for adiabatic transport
INNER_MINUS, OUTER_MINUS, OUTER_PLUS, INNER_PLUS = range(4)


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ContractViolation(f"gamma must lie in [0, 1], got {self.gamma}")
        if not (0.0 <= self.h <= 1.0):
            raise ContractViolation(f"h must lie in [0, 1], got {self.h}")

    @property
    def lam(self):
        return math.hypot(self.h, self.gamma)


@dataclass(frozen=True)
class BathSpec:
    T1: float = 1.0
    T2: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.T1 < self.T2):
            raise ContractViolation(f"need 0 < T1 < T2, got T1={self.T1}, T2={self.T2}")

    @property
    def carnot(self):
        return 1.0 - self.T1 / self.T2


@dataclass(frozen=True)
class DriveSchedule:
    """Cubic field ramp h_start -> h_end over time tau at fixed gamma.

    ``reflected=True`` evaluates the h_end -> h_start ramp backwards in time
    instead of swapping endpoints in the formula.
    """

    h_start: float
    h_end: float
    tau: float
    gamma: float
    reflected: bool = False

    def __post_init__(self):
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ContractViolation(f"tau must be positive and finite, got {self.tau}")
        for name in ("h_start", "h_end"):
            ModelParams(self.gamma, getattr(self, name))


def build_hamiltonian(p):
    return (1 + p.gamma) * XX + (1 - p.gamma) * YY + p.h * ZSUM


def analytic_spectrum(p):
    lam = p.lam
    return np.sort(np.array([-2.0, -2.0 * lam, 2.0 * lam, 2.0]), kind="stable")


def outer_mixing_angle(p):
    """Rotation angle theta of the outer block, tan(theta) = gamma / h."""
    return math.atan2(p.gamma, p.h)


def labeled_eigenbasis(p):
    """Closed-form eigenpairs in fixed block-label order.

    Order is (inner -2, outer -2*lam, outer +2*lam, inner +2). This equals
    ascending order whenever lam <= 1; outside that range the labels keep
    continuity along a drive while the sorted order would swap levels.
    """
    lam = p.lam
    V = np.zeros((4, 4), dtype=np.complex128)
    r = 1.0 / math.sqrt(2.0)
    V[1, INNER_MINUS], V[2, INNER_MINUS] = r, -r
    V[1, INNER_PLUS], V[2, INNER_PLUS] = r, r
    if lam == 0.0:
        V[3, OUTER_MINUS] = 1.0
        V[0, OUTER_PLUS] = 1.0
    else:
        half = 0.5 * outer_mixing_angle(p)
        c, s = math.cos(half), math.sin(half)
        V[0, OUTER_MINUS], V[3, OUTER_MINUS] = -s, c
        V[0, OUTER_PLUS], V[3, OUTER_PLUS] = c, s
    w = np.array([-2.0, -2.0 * lam, 2.0 * lam, 2.0])
    return EigenDecomposition4(w, V)


def analytic_eigenbasis(p):
    """Closed-form eigendecomposition sorted ascending (stable in label order)."""
    lab = labeled_eigenbasis(p)
    order = np.argsort(lab.eigenvalues, kind="stable")
    return EigenDecomposition4(lab.eigenvalues[order], lab.eigenvectors[:, order])


def gibbs_state(H, T):
    """exp(-H/T) / Z, evaluated with the ground energy shifted out."""
    if not T > 0.0:
        raise ContractViolation(f"temperature must be positive, got {T}")
    e0 = hermitian_eigen(H).eigenvalues[0]
    rho = matrix_function(H, lambda x: math.exp(-(x - e0) / T))
    return rho / np.trace(rho).real


def drive_field(s, t):
    """(h, dh/dt, d2h/dt2) of the cubic ramp at time t in [0, tau]."""
    tau = s.tau
    if not (0.0 <= t <= tau):
        raise ContractViolation(f"t = {t} outside [0, {tau}]")
    if s.reflected:
        a, b, x = s.h_end, s.h_start, tau - t
    else:
        a, b, x = s.h_start, s.h_end, t
    h = a - 6.0 * (a - b) * (x * x / tau**2) * (0.5 - x / (3.0 * tau))
    hd = -6.0 * (a - b) * (x / tau**2 - x * x / tau**3)
    hdd = -6.0 * (a - b) * (1.0 / tau**2 - 2.0 * x / tau**3)
    if s.reflected:
        hd = -hd
    return h, hd, hdd


def cd_coefficient(gamma, h, hdot):
    """Prefactor of (sx sy + sy sx) in the counterdiabatic term at fixed gamma."""
    if gamma == 0.0 or hdot == 0.0:
        return 0.0
    l2 = h * h + gamma * gamma
    if l2 == 0.0:
        raise SingularityError("counterdiabatic coefficient undefined at h = gamma = 0")
    return -hdot * gamma / (4.0 * l2)


def cd_coefficient_rate(gamma, h, hdot, hddot):
    if gamma == 0.0 or (hdot == 0.0 and hddot == 0.0):
        return 0.0
    l2 = h * h + gamma * gamma
    if l2 == 0.0:
        raise SingularityError("counterdiabatic coefficient undefined at h = gamma = 0")
    return -gamma * (hddot * l2 - 2.0 * h * hdot * hdot) / (4.0 * l2 * l2)


def cd_hamiltonian(gamma, h, hdot):
    return cd_coefficient(gamma, h, hdot) * XY_YX


def cd_hamiltonian_derivative(gamma, h, hdot, hddot):
    return cd_coefficient_rate(gamma, h, hdot, hddot) * XY_YX


def generic_cd_from_eigenbasis(s, t, dt=1e-6):
    """Transitionless-driving term assembled from numerically differentiated eigenvectors.

    Independent of the closed-form coefficient: eigenvectors come from
    ``analytic_eigenbasis`` at t +- dt, are phase-aligned to the vectors at
    t, and enter i * sum_n (|dn><n| - <n|dn> |n><n|).
    """
    h, _, _ = drive_field(s, t)
    p = ModelParams(s.gamma, h)
    lam = p.lam
    if lam == 0.0 or abs(lam - 1.0) < 1e-9:
        raise DegeneracyError(f"spectrum degenerate at t={t} (lambda={lam})")
    lo, hi = max(0.0, t - dt), min(s.tau, t + dt)
    V0 = analytic_eigenbasis(p).eigenvectors

    def aligned(tt):
        V = analytic_eigenbasis(ModelParams(s.gamma, drive_field(s, tt)[0])).eigenvectors
        ov = np.einsum("ik,ik->k", V0.conj(), V)
        return V * (ov.conj() / np.abs(ov))

    dV = (aligned(hi) - aligned(lo)) / (hi - lo)
    H = np.zeros((4, 4), dtype=np.complex128)
    for n in range(4):
        v, dv = V0[:, n], dV[:, n]
        berry = np.vdot(v, dv)
        H += np.outer(dv, v.conj()) - berry * np.outer(v, v.conj())
    H = 1j * H
    return 0.5 * (H + H.conj().T)
