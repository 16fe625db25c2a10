import math

import numpy as np
import pytest
import scipy.linalg

from xyotto.cycle import (
    CycleParams,
    adiabatic_cycle_scalar,
    adiabatic_efficiency_closed_form,
    adiabatic_work_closed_form,
    efficiency_lag,
    engine_operational,
    relative_entropy_to_gibbs,
    run_cycle,
    sta_cost,
    sta_efficiency,
    sta_power,
    von_neumann_entropy,
)
from xyotto.dynamics import PropagatorConfig, expectation
from xyotto.errors import ContractViolation
from xyotto.model import BathSpec, DriveSchedule, ModelParams, analytic_spectrum, build_hamiltonian, gibbs_state
from xyotto.verify import _engine_grid

ETA_A = float(adiabatic_efficiency_closed_form(0.6, 1.0, 1.0, 10.0))
TAUS = (1e-3, 1e-2, 0.1, 1.0, 10.0)


def test_reference_point_efficiency():
    assert ETA_A == pytest.approx(0.095, abs=5e-4)
    rep = run_cycle(CycleParams())
    assert rep.eta == pytest.approx(ETA_A, abs=1e-12)
    assert rep.engine


def test_closed_forms_match_simulation_on_engine_grid():
    for l1, l2 in _engine_grid(20):
        rep = run_cycle(CycleParams(gamma=0.5 * l1, lambda1=l1, lambda2=l2))
        assert abs(rep.Wnet - adiabatic_work_closed_form(l1, l2, 1, 10)) <= 1e-9
        assert abs(rep.eta - adiabatic_efficiency_closed_form(l1, l2, 1, 10)) <= 1e-9
    rep = run_cycle(CycleParams(gamma=0.3, lambda1=0.4))
    assert rep.eta == pytest.approx(float(adiabatic_efficiency_closed_form(0.4, 1.0, 1, 10)), abs=1e-9)


def test_scalar_bookkeeping_matches_closed_forms():
    L1, L2 = np.meshgrid(np.linspace(0.05, 1, 30), np.linspace(0.05, 1, 30), indexing="ij")
    parts = adiabatic_cycle_scalar(L1, L2, 1.0, 10.0)
    assert np.allclose(parts["Wnet"], adiabatic_work_closed_form(L1, L2, 1.0, 10.0), atol=1e-13)
    eng = parts["Wnet"] > 1e-9
    assert np.allclose((parts["Wnet"] / parts["Q2"])[eng],
                       adiabatic_efficiency_closed_form(L1, L2, 1.0, 10.0)[eng], atol=1e-12)


def test_closed_form_degenerate_cases():
    assert adiabatic_work_closed_form(0.7, 0.7, 1, 10) == 0.0
    assert adiabatic_efficiency_closed_form(0.7, 0.7, 1, 10) == 0.0
    l1, l2 = np.meshgrid(np.linspace(0.01, 1, 50), np.linspace(0.01, 1, 50), indexing="ij")
    below = l1 < l2
    assert np.all(adiabatic_work_closed_form(l1, l2, 2.0, 2.0)[below] <= 1e-15)
    assert not np.any(engine_operational(l1, l2, 1, 10)[l1 >= l2])


@pytest.mark.parametrize("mode", ["adiabatic", "nonadiabatic", "cd"])
@pytest.mark.parametrize("gamma", [0.0, 0.3, 0.6])
def test_first_law_and_lag_identity(mode, gamma):
    for tau in (1e-3, 0.5, 5.0):
        rep = run_cycle(CycleParams(gamma=gamma, tau=tau, mode=mode))
        assert abs(rep.first_law_residual) <= 1e-8
        assert abs(rep.eta_work - (rep.eta_carnot - rep.lag)) <= 1e-8
        assert rep.lag_hot >= -1e-12 and rep.lag_cold >= -1e-12


@pytest.mark.parametrize("gamma", [0.6, 0.3])
def test_cd_works_equal_adiabatic(gamma):
    ref = run_cycle(CycleParams(gamma=gamma))
    for tau in TAUS:
        rep = run_cycle(CycleParams(gamma=gamma, tau=tau, mode="cd"))
        assert abs(rep.W1 - ref.W1) <= 1e-6 and abs(rep.W3 - ref.W3) <= 1e-6


def test_isotropic_fixed_point():
    for tau in (1e-3, 0.1, 10.0):
        for mode in ("nonadiabatic", "cd"):
            rep = run_cycle(CycleParams(gamma=0.0, tau=tau, mode=mode))
            assert rep.eta == pytest.approx(ETA_A, abs=1e-6)
            assert rep.V1 == 0.0 and rep.V3 == 0.0


def test_nonadiabatic_converges_to_adiabatic():
    taus = np.logspace(math.log10(5.0), math.log10(500.0), 15)
    gaps = [abs(run_cycle(CycleParams(tau=t, mode="nonadiabatic"), PropagatorConfig(steps=16384)).eta - ETA_A)
            for t in taus]
    assert gaps[-1] <= 1e-4
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_short_stroke_is_not_an_engine_at_large_gamma():
    rep = run_cycle(CycleParams(tau=0.5, mode="nonadiabatic"))
    assert not rep.engine and rep.Wnet < 0


def test_lag_minimum_at_reference_point():
    rep = run_cycle(CycleParams())
    assert rep.eta_carnot == 0.9
    assert rep.lag == pytest.approx(0.805, abs=1e-3)
    assert rep.lag == pytest.approx(0.9 - ETA_A, abs=1e-12)


def test_lag_excess_is_nonnegative():
    lmin = run_cycle(CycleParams()).lag
    for tau in (1e-3, 0.3, 1.0, 3.0, 30.0):
        assert run_cycle(CycleParams(tau=tau, mode="nonadiabatic")).lag - lmin >= -1e-9


def test_lag_vanishes_for_gibbs_pairs():
    baths = BathSpec()
    H1 = build_hamiltonian(ModelParams(0.6, 0.0))
    H2 = build_hamiltonian(ModelParams(0.6, 0.8))
    L, hot, cold = efficiency_lag(gibbs_state(H2, 10.0), gibbs_state(H1, 1.0), H1, H2, baths, 1.0)
    assert abs(L) < 1e-13 and abs(hot) < 1e-13 and abs(cold) < 1e-13
    assert math.isnan(efficiency_lag(gibbs_state(H2, 10.0), gibbs_state(H1, 1.0), H1, H2, baths, -1.0)[0])


def test_literal_pairing_breaks_the_identity():
    rep = run_cycle(CycleParams(lag_pairing="literal"))
    assert abs(rep.eta - (rep.eta_carnot - rep.lag)) > 1e-3


def test_relative_entropy_against_matrix_log(rng):
    H = build_hamiltonian(ModelParams(0.3, 0.52))
    for _ in range(10):
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = A @ A.conj().T
        rho /= np.trace(rho).real
        sigma = gibbs_state(H, 2.0)
        ref = np.trace(rho @ (scipy.linalg.logm(rho) - scipy.linalg.logm(sigma))).real
        assert relative_entropy_to_gibbs(rho, H, 2.0) == pytest.approx(ref, abs=1e-10)
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(math.log(4))
    assert von_neumann_entropy(np.diag([1.0, 0, 0, 0]).astype(complex)) == 0.0


def test_expectation_examples():
    H = build_hamiltonian(ModelParams(0.6, 0.0))
    assert expectation(np.eye(4) / 4, np.eye(4)) == pytest.approx(1.0)
    assert expectation(np.eye(4) / 4, H) == pytest.approx(0.0, abs=1e-15)
    E = analytic_spectrum(ModelParams(0.6, 0.0))
    p = np.exp(-E) / np.exp(-E).sum()
    assert expectation(gibbs_state(H, 1.0), H) == pytest.approx(float(p @ E), abs=1e-13)


def test_sta_cost_properties():
    rho0 = gibbs_state(build_hamiltonian(ModelParams(0.0, 0.6)), 1.0)
    assert sta_cost(DriveSchedule(0.6, 1.0, 0.3, 0.0), rho0) == 0.0
    rho = gibbs_state(build_hamiltonian(ModelParams(0.6, 0.0)), 1.0)
    short = sta_cost(DriveSchedule(0.0, 0.8, 0.1, 0.6), rho)
    long = sta_cost(DriveSchedule(0.0, 0.8, 50.0, 0.6), rho)
    assert long <= 1e-3 * short
    # cd-driven trajectory stays diagonal, so the expectation of the off-diagonal rate vanishes
    assert sta_cost(DriveSchedule(0.0, 0.8, 0.1, 0.6), rho, cost_state="cd") < 1e-6
    with pytest.raises(ContractViolation):
        sta_cost(DriveSchedule(0.0, 0.8, 0.1, 0.6), rho, cost_state="other")


def test_cost_smaller_at_lower_anisotropy():
    for tau in np.logspace(-3, 2, 12):
        lo = run_cycle(CycleParams(gamma=0.3, tau=tau, mode="cd"))
        hi = run_cycle(CycleParams(gamma=0.6, tau=tau, mode="cd"))
        assert lo.V1 + lo.V3 < hi.V1 + hi.V3


def test_sta_efficiency_and_power_algebra():
    assert sta_efficiency(-1.0, 0.4, 2.0, 0.0, 0.0) == pytest.approx(0.3)
    assert sta_efficiency(-1.0, 0.4, 2.0, 0.1, 0.1) < 0.3
    assert math.isnan(sta_efficiency(-1.0, 0.4, -0.5, 0.1, 0.1))
    assert sta_power(-1.0, 0.4, 0.0, 0.0, 1.0) == pytest.approx(0.3)
    assert sta_power(-1.0, 0.4, 0.1, 0.1, 2.0) == pytest.approx(0.5 * sta_power(-1.0, 0.4, 0.1, 0.1, 1.0))
    with pytest.raises(ContractViolation):
        sta_power(0, 0, 0, 0, 0.0)


def test_sta_efficiency_pipeline_value():
    rep = run_cycle(CycleParams(tau=0.5, mode="cd"))
    assert 0.0 < rep.eta < ETA_A


@pytest.mark.xfail(strict=True, reason="bare-driven cost at tau=0.05 costs about 10% of the power, not under 5%")
def test_sta_power_close_to_costless_power():
    rep = run_cycle(CycleParams(gamma=0.3, tau=0.05, mode="cd"))
    ideal = float(adiabatic_work_closed_form(0.6, 1.0, 1.0, 10.0)) / 0.1
    assert rep.power > 0
    assert abs(rep.power - ideal) <= 0.05 * ideal


def test_expansion_paths_agree():
    for mode in ("nonadiabatic", "cd"):
        a = run_cycle(CycleParams(tau=0.7, mode=mode))
        b = run_cycle(CycleParams(tau=0.7, mode=mode, expansion_path="reflect"))
        assert a.W3 == pytest.approx(b.W3, abs=1e-12) and a.V3 == pytest.approx(b.V3, abs=1e-12)


def test_cycle_params_validation():
    with pytest.raises(ContractViolation):
        CycleParams(gamma=0.7)
    with pytest.raises(ContractViolation):
        CycleParams(lambda1=1.0, lambda2=0.6)
    with pytest.raises(ContractViolation):
        CycleParams(tau=0.0)
    with pytest.raises(ContractViolation):
        CycleParams(mode="slow")
    with pytest.raises(ContractViolation):
        CycleParams(T1=10, T2=1)


def test_report_serialisation():
    rep = run_cycle(CycleParams(tau=0.5, mode="cd"))
    d = rep.to_dict()
    for k in ("W1", "W3", "Q2", "Q4", "Wnet", "V1", "V3", "eta", "power", "lag", "lag_hot",
              "lag_cold", "eta_carnot", "engine_flag", "strokes"):
        assert k in d
    assert [s["kind"] for s in d["strokes"]] == ["compression", "heating", "expansion", "cooling"]
    assert d["strokes"][1]["sta_cost"] == 0.0 and d["strokes"][3]["sta_cost"] == 0.0
