"""Acceptance suite: one function per criterion, each returning a CriterionResult.

Every criterion bundles a few checks. A check records what was measured,
what was expected and the tolerance applied, so a failing criterion can be
read off the report without rerunning anything.
"""

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .cycle import (
    CycleParams,
    adiabatic_efficiency_closed_form,
    adiabatic_work_closed_form,
    run_cycle,
)
from .dynamics import PropagatorConfig, evolve_schedule, evolve_with_cd
from .model import (
    DriveSchedule,
    ModelParams,
    analytic_spectrum,
    build_hamiltonian,
    cd_hamiltonian,
    drive_field,
    generic_cd_from_eigenbasis,
    gibbs_state,
)
from .smallmat import hermitian_eigen
from .sweep import (
    default_taus,
    find_engine_boundary,
    find_max_work,
    find_work_threshold,
    gamma_sweep,
    tau_sweep,
)


@dataclass
class Check:
    label: str
    measured: object
    expected: object
    tolerance: object
    passed: bool


@dataclass
class CriterionResult:
    id: int
    name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, label, measured, expected, tolerance, passed):
        self.checks.append(Check(label, measured, expected, tolerance, bool(passed)))

    def to_dict(self):
        return {"id": self.id, "name": self.name, "passed": self.passed,
                "checks": [asdict(c) for c in self.checks]}


def _near(label, res, measured, expected, tol):
    res.add(label, measured, expected, tol, abs(measured - expected) <= tol)


def _fields(gamma, l1=0.6, l2=1.0):
    return math.sqrt(l1 * l1 - gamma * gamma), math.sqrt(l2 * l2 - gamma * gamma)


# --------------------------------------------------------------- criteria

def adiabatic_optimum():
    res = CriterionResult(1, "adiabatic optimum")
    _near("closed-form eta(0.6, 1.0)", res, float(adiabatic_efficiency_closed_form(0.6, 1.0, 1.0, 10.0)), 0.095, 5e-4)
    best = find_max_work()
    _near("max-work lambda1*", res, best.lambda1, 0.60, 0.01)
    _near("max-work lambda2*", res, best.lambda2, 1.00, 1e-9)
    return res


def engine_boundary():
    res = CriterionResult(2, "engine boundary")
    _near("lambda1*/lambda2 at lambda2 = 1", res, find_engine_boundary(1.0), 0.23, 0.01)
    return res


def carnot_anchor():
    res = CriterionResult(3, "Carnot anchor")
    rep = run_cycle(CycleParams())
    res.add("eta_Carnot", rep.eta_carnot, 0.9, 0.0, rep.eta_carnot == 0.9)
    _near("adiabatic-limit lag", res, rep.lag, 0.805, 1e-3)
    return res


def nonadiabatic_threshold(cfg=PropagatorConfig()):
    res = CriterionResult(4, "non-adiabatic threshold")
    tau = find_work_threshold(0.6, cfg=cfg)
    res.add("smallest tau with positive work (gamma 0.6)", tau, [1.2, 1.6], "interval", 1.2 <= tau <= 1.6)
    return res


def reduced_irreversibility(cfg=PropagatorConfig(), taus=None, threads=0):
    res = CriterionResult(5, "reduced irreversibility")
    eta_a = float(adiabatic_efficiency_closed_form(0.6, 1.0, 1.0, 10.0))
    fast = run_cycle(CycleParams(gamma=0.3, tau=1e-3, mode="nonadiabatic"), cfg)
    res.add("eta(gamma 0.3, tau 1e-3) / eta_A", fast.eta / eta_a, ">= 0.85", 0.0, fast.eta >= 0.85 * eta_a)
    taus = default_taus() if taus is None else taus
    sw = tau_sweep((0.3, 0.6), taus, ("nonadiabatic", "cd"), cfg=cfg, threads=threads)
    rows = {(r["gamma"], r["tau"], r["mode"]): r for r in sw.records}
    lag_bad, cost_bad = [], []
    for t in taus:
        t = float(t)
        if not rows[(0.3, t, "nonadiabatic")]["lag"] < rows[(0.6, t, "nonadiabatic")]["lag"]:
            lag_bad.append(t)
        lo = rows[(0.3, t, "cd")]["V1"] + rows[(0.3, t, "cd")]["V3"]
        hi = rows[(0.6, t, "cd")]["V1"] + rows[(0.6, t, "cd")]["V3"]
        if not lo < hi:
            cost_bad.append(t)
    res.add("taus where L(0.3) >= L(0.6)", lag_bad, [], 0, not lag_bad)
    res.add("taus where V(0.3) >= V(0.6)", cost_bad, [], 0, not cost_bad)
    return res


def fixed_point(cfg=PropagatorConfig()):
    res = CriterionResult(6, "fixed point")
    eta_a = float(adiabatic_efficiency_closed_form(0.6, 1.0, 1.0, 10.0))
    h1, h2 = _fields(0.0)
    s = DriveSchedule(h1, h2, 1.0, 0.0)
    worst = max(
        float(np.max(np.abs(cd_hamiltonian(0.0, *drive_field(s, t)[:2])))) for t in np.linspace(0, 1, 11)
    )
    res.add("max |H_CD| at gamma 0", worst, 0.0, 0.0, worst == 0.0)
    for tau in (1e-3, 0.1, 10.0):
        rep = run_cycle(CycleParams(gamma=0.0, tau=tau, mode="nonadiabatic"), cfg)
        _near(f"eta(gamma 0, tau {tau:g})", res, rep.eta, eta_a, 1e-6)
    sw = gamma_sweep(0.5, cfg=cfg)
    eta = [r["eta"] for r in sw.records]
    rises = [i for i in range(len(eta) - 1) if eta[i + 1] > eta[i] + 1e-9]
    res.add("gamma-sweep increases", rises, [], 1e-9, not rises)
    _near("gamma-sweep eta at gamma 0", res, eta[0], eta_a, 1e-4)
    return res


def cd_fidelity(cfg=PropagatorConfig(sample_every=64), taus=(1e-3, 1e-2, 0.1, 1.0, 10.0)):
    res = CriterionResult(7, "counterdiabatic fidelity")
    worst_w, worst_p = 0.0, 0.0
    for g in (0.6, 0.3):
        ref = run_cycle(CycleParams(gamma=g, mode="adiabatic"))
        for tau in taus:
            rep = run_cycle(CycleParams(gamma=g, tau=tau, mode="cd"), PropagatorConfig(steps=cfg.steps))
            worst_w = max(worst_w, abs(rep.W1 - ref.W1), abs(rep.W3 - ref.W3))
            h1, h2 = _fields(g)
            for a, b, T in ((h1, h2, 1.0), (h2, h1, 10.0)):
                rho = gibbs_state(build_hamiltonian(ModelParams(g, a)), T)
                traj = evolve_with_cd(rho, DriveSchedule(a, b, tau, g), cfg)
                worst_p = max(worst_p, traj.meta["max_population_drift"])
    res.add("max |W_cd - W_adiabatic|", worst_w, 0.0, 1e-6, worst_w <= 1e-6)
    res.add("max population drift", worst_p, 0.0, 1e-6, worst_p <= 1e-6)
    return res


def _engine_grid(n=20):
    """n x n (lambda1, lambda2) points strictly inside the engine region."""
    pts = []
    for l2 in np.linspace(0.4, 1.0, n):
        lo = find_engine_boundary(float(l2)) * l2
        for l1 in np.linspace(lo, l2, n + 2)[1:-1]:
            pts.append((float(l1), float(l2)))
    return pts


def identities(cfg=PropagatorConfig(), taus=(1e-3, 0.1, 1.0, 10.0)):
    res = CriterionResult(8, "identities and closure")
    closure, lag_err, cf_err = 0.0, 0.0, 0.0
    for g in (0.0, 0.3, 0.6):
        for mode in ("adiabatic", "nonadiabatic", "cd"):
            for tau in taus:
                rep = run_cycle(CycleParams(gamma=g, tau=tau, mode=mode), cfg)
                closure = max(closure, abs(rep.first_law_residual))
                if rep.Q2 > 0.0:
                    lag_err = max(lag_err, abs(rep.eta_work - (rep.eta_carnot - rep.lag)))
    for l1, l2 in _engine_grid():
        rep = run_cycle(CycleParams(gamma=0.5 * l1, lambda1=l1, lambda2=l2))
        cf_err = max(
            cf_err,
            abs(rep.Wnet - float(adiabatic_work_closed_form(l1, l2, 1.0, 10.0))),
            abs(rep.eta - float(adiabatic_efficiency_closed_form(l1, l2, 1.0, 10.0))),
        )
        closure = max(closure, abs(rep.first_law_residual))
        lag_err = max(lag_err, abs(rep.eta - (rep.eta_carnot - rep.lag)))
    res.add("max first-law residual", closure, 0.0, 1e-8, closure <= 1e-8)
    res.add("max |eta - (eta_C - L)|", lag_err, 0.0, 1e-8, lag_err <= 1e-8)
    res.add("max closed-form mismatch (20x20)", cf_err, 0.0, 1e-9, cf_err <= 1e-9)
    return res


def numerics(points=10_000, seed=20240611):
    res = CriterionResult(9, "numerics")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for g, h in rng.uniform(0.0, 1.0, size=(points, 2)):
        p = ModelParams(float(g), float(h))
        w = hermitian_eigen(build_hamiltonian(p)).eigenvalues
        worst = max(worst, float(np.max(np.abs(w - analytic_spectrum(p)))))
    res.add("Jacobi vs analytic spectrum", worst, 0.0, 1e-12, worst <= 1e-12)

    drift, halving = 0.0, 0.0
    for g in (0.6, 0.3):
        h1, h2 = _fields(g)
        rho = gibbs_state(build_hamiltonian(ModelParams(g, h1)), 1.0)
        p0 = float(np.real(np.trace(rho @ rho)))
        for tau in (1e-3, 0.5, 10.0):
            s = DriveSchedule(h1, h2, tau, g)
            for cd in (False, True):
                traj = evolve_schedule(rho, s, PropagatorConfig(sample_every=64), cd=cd)
                for r in traj.states:
                    drift = max(drift, abs(np.trace(r).real - 1.0), abs(np.real(np.trace(r @ r)) - p0))
            a = evolve_schedule(rho, s, PropagatorConfig(steps=4096)).final
            b = evolve_schedule(rho, s, PropagatorConfig(steps=8192)).final
            halving = max(halving, float(np.max(np.abs(a - b))))
    res.add("trace and purity drift", drift, 0.0, 1e-8, drift <= 1e-8)
    res.add("step-halving change", halving, 0.0, 1e-8, halving <= 1e-8)

    oracle = 0.0
    for g in (0.6, 0.3):
        h1, h2 = _fields(g)
        s = DriveSchedule(h1, h2, 1.0, g)
        for t in np.linspace(0.05, 0.95, 19):
            h, hd, _ = drive_field(s, float(t))
            diff = generic_cd_from_eigenbasis(s, float(t)) - cd_hamiltonian(g, h, hd)
            oracle = max(oracle, float(np.max(np.abs(diff))))
    res.add("eigenbasis oracle vs closed-form H_CD", oracle, 0.0, 1e-6, oracle <= 1e-6)
    return res


CRITERIA = (
    adiabatic_optimum,
    engine_boundary,
    carnot_anchor,
    nonadiabatic_threshold,
    reduced_irreversibility,
    fixed_point,
    cd_fidelity,
    identities,
    numerics,
)


def run_all(only=None):
    return [f() for f in CRITERIA if only is None or CRITERIA.index(f) + 1 in only]


def format_table(results):
    lines = []
    for r in results:
        lines.append(f"[{'PASS' if r.passed else 'FAIL'}] {r.id}. {r.name}")
        for c in r.checks:
            mark = "ok " if c.passed else "BAD"
            lines.append(f"    {mark} {c.label}: measured={_fmt(c.measured)} expected={_fmt(c.expected)} tol={_fmt(c.tolerance)}")
    return "\n".join(lines)


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)
