import math

import numpy as np
import pytest

from xyotto.errors import ContractViolation, DegeneracyError, SingularityError
from xyotto.model import (
    XY_YX,
    BathSpec,
    DriveSchedule,
    ModelParams,
    analytic_eigenbasis,
    analytic_spectrum,
    build_hamiltonian,
    cd_coefficient,
    cd_coefficient_rate,
    cd_hamiltonian,
    drive_field,
    generic_cd_from_eigenbasis,
    gibbs_state,
    labeled_eigenbasis,
    outer_mixing_angle,
)
from xyotto.smallmat import hermitian_eigen, matrix_function


def test_hamiltonian_entries():
    H = build_hamiltonian(ModelParams(0.6, 0.3))
    expected = np.array([
        [0.6, 0, 0, 1.2],
        [0, 0, 2, 0],
        [0, 2, 0, 0],
        [1.2, 0, 0, -0.6],
    ])
    assert np.allclose(H, expected, atol=0)


def test_spectrum_closed_form():
    p = ModelParams(0.6, 0.8)
    assert np.allclose(analytic_spectrum(p), [-2, -2, 2, 2])
    p = ModelParams(0.3, 0.4)
    assert np.allclose(analytic_spectrum(p), [-2, -1, 1, 2])
    assert math.isclose(p.lam, 0.5)


def test_eigenbasis_diagonalises():
    for g, h in [(0.6, 0.0), (0.3, 0.52), (0.0, 0.7), (1.0, 1.0), (0.0, 0.0)]:
        p = ModelParams(g, h)
        for eig in (labeled_eigenbasis(p), analytic_eigenbasis(p)):
            assert np.allclose(eig.reconstruct(), build_hamiltonian(p), atol=1e-14)


def test_mixing_angle():
    assert math.isclose(outer_mixing_angle(ModelParams(0.6, 0.8)), math.atan(0.75))
    assert outer_mixing_angle(ModelParams(0.0, 0.5)) == 0.0
    assert math.isclose(outer_mixing_angle(ModelParams(0.5, 0.0)), math.pi / 2)


def test_gibbs_state_against_direct_exponential():
    H = build_hamiltonian(ModelParams(0.6, 0.8))
    rho = gibbs_state(H, 10.0)
    E = matrix_function(H, lambda x: math.exp(-x / 10.0))
    assert np.allclose(rho, E / np.trace(E).real, atol=1e-14)
    assert math.isclose(np.trace(rho).real, 1.0)
    # very cold: ground state projector without overflow
    w = hermitian_eigen(build_hamiltonian(ModelParams(0.3, 0.4))).eigenvalues
    cold = gibbs_state(build_hamiltonian(ModelParams(0.3, 0.4)), 1e-3)
    assert np.isfinite(cold).all() and w[0] < w[1]
    with pytest.raises(ContractViolation):
        gibbs_state(H, 0.0)


def test_parameter_validation():
    with pytest.raises(ContractViolation):
        ModelParams(1.2, 0.1)
    with pytest.raises(ContractViolation):
        ModelParams(0.5, -0.1)
    with pytest.raises(ContractViolation):
        BathSpec(10, 1)
    with pytest.raises(ContractViolation):
        DriveSchedule(0.0, 0.8, 0.0, 0.6)
    assert BathSpec().carnot == 0.9


def test_drive_boundary_values():
    s = DriveSchedule(0.0, 0.8, 2.0, 0.6)
    assert drive_field(s, 0.0) == (0.0, 0.0, pytest.approx(1.2))
    h, hd, _ = drive_field(s, 2.0)
    assert math.isclose(h, 0.8) and abs(hd) < 1e-15
    assert math.isclose(drive_field(s, 1.0)[0], 0.4)
    with pytest.raises(ContractViolation):
        drive_field(s, 2.5)


def test_reflected_drive_equals_swapped():
    a = DriveSchedule(0.8, 0.0, 1.3, 0.6)
    b = DriveSchedule(0.8, 0.0, 1.3, 0.6, reflected=True)
    for t in np.linspace(0, 1.3, 17):
        assert np.allclose(drive_field(a, t), drive_field(b, t), atol=1e-14)


def test_cd_coefficient_value_and_rate():
    assert cd_coefficient(0.6, 0.4, 1.0) == pytest.approx(-0.288461538461538, abs=1e-14)
    assert cd_coefficient(0.0, 0.4, 1.2) == 0.0
    s = DriveSchedule(0.0, 0.8, 1.0, 0.6)
    eps = 1e-6
    for t in (0.2, 0.5, 0.8):
        def f(tt):
            h, hd, _ = drive_field(s, tt)
            return cd_coefficient(0.6, h, hd)
        fd = (f(t + eps) - f(t - eps)) / (2 * eps)
        h, hd, hdd = drive_field(s, t)
        assert cd_coefficient_rate(0.6, h, hd, hdd) == pytest.approx(fd, abs=1e-8)


def test_cd_singular_point():
    # gamma**2 underflows, so lambda vanishes while the numerator does not
    with pytest.raises(SingularityError):
        cd_coefficient(1e-200, 0.0, 1.0)
    with pytest.raises(SingularityError):
        cd_coefficient_rate(1e-200, 0.0, 1.0, 0.0)


def test_eigenbasis_oracle_matches_closed_form():
    for g, h1, h2 in [(0.6, 0.0, 0.8), (0.3, 0.52, 0.95)]:
        s = DriveSchedule(h1, h2, 1.0, g)
        for t in np.linspace(0.05, 0.95, 19):
            h, hd, _ = drive_field(s, t)
            assert np.max(np.abs(generic_cd_from_eigenbasis(s, t) - cd_hamiltonian(g, h, hd))) <= 1e-6


def test_oracle_refuses_degenerate_point():
    s = DriveSchedule(0.0, 0.8, 1.0, 0.6)
    with pytest.raises(DegeneracyError):
        generic_cd_from_eigenbasis(s, 1.0)


def test_cd_term_vanishes_at_stroke_ends():
    s = DriveSchedule(0.52, 0.95, 0.7, 0.3)
    for t in (0.0, 0.7):
        h, hd, _ = drive_field(s, t)
        assert np.max(np.abs(cd_hamiltonian(0.3, h, hd))) < 1e-14


def test_cd_generator_structure():
    assert XY_YX[0, 3] == -2j and XY_YX[3, 0] == 2j
    assert np.count_nonzero(XY_YX) == 2
