"""Parameter-landscape scans over the Otto engine.

Grid points are independent. Finite-time sweeps fan out over a thread pool;
the compiled propagator releases the GIL so threads run in parallel, and
results are always assembled in row-major input order.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, _backend
from .cycle import (
    SUMMARY_FIELDS,
    CycleParams,
    adiabatic_cycle_scalar,
    adiabatic_efficiency_closed_form,
    adiabatic_work_closed_form,
    run_cycle,
)
from .dynamics import PropagatorConfig
from .errors import BoundaryNotFound, ContractViolation, NumericFailure

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    points: int
    log: bool = False

    def __post_init__(self):
        if self.points < 2:
            raise ContractViolation(f"axis {self.name!r} needs at least 2 points")
        if not self.lo < self.hi:
            raise ContractViolation(f"axis {self.name!r} needs lo < hi")
        if self.log and self.lo <= 0.0:
            raise ContractViolation(f"log axis {self.name!r} needs lo > 0")

    def values(self):
        if self.log:
            return np.logspace(math.log10(self.lo), math.log10(self.hi), self.points)
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class GridSpec:
    axes: tuple
    template: CycleParams = CycleParams()

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ContractViolation("a grid has one or two axes")


@dataclass
class SweepResult:
    param_names: tuple
    records: list  # dicts: parameter columns then summary fields
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)


def _resolve_threads(threads):
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return threads


def _meta(kind, cfg=None, **extra):
    meta = {
        "kind": kind,
        "version": __version__,
        "backend": _backend.BACKEND,
    }
    if cfg is not None:
        meta["propagator"] = asdict(cfg)
    meta.update(extra)
    return meta


def default_lambda_axis(points=100, name="lambda"):
    # (0, 1] sampled at k / points
    return Axis(name, 1.0 / points, 1.0, points)


# ---------------------------------------------------------------- adiabatic

def adiabatic_grid(lambda1_axis=None, lambda2_axis=None, T1=1.0, T2=10.0, tau=1.0):
    """Closed-form work and efficiency on a (lambda1, lambda2) grid, row-major in lambda1."""
    a1 = lambda1_axis or default_lambda_axis(name="lambda1")
    a2 = lambda2_axis or default_lambda_axis(name="lambda2")
    t0 = time.time()
    L1, L2 = np.meshgrid(a1.values(), a2.values(), indexing="ij")
    W = adiabatic_work_closed_form(L1, L2, T1, T2)
    eta = adiabatic_efficiency_closed_form(L1, L2, T1, T2)
    parts = adiabatic_cycle_scalar(L1, L2, T1, T2)
    engine = (W > 0.0) & (parts["Q2"] > 0.0) & (parts["Q4"] < 0.0)
    records = []
    for i in range(L1.shape[0]):
        for j in range(L1.shape[1]):
            rec = {"lambda1": float(L1[i, j]), "lambda2": float(L2[i, j])}
            for k in ("W1", "W3", "Q2", "Q4"):
                rec[k] = float(parts[k][i, j])
            rec.update(
                Wnet=float(W[i, j]), V1=0.0, V3=0.0, eta=float(eta[i, j]),
                power=float(W[i, j]) / (2.0 * tau),
                lag=float(parts["lag"][i, j]), lag_hot=float(parts["lag_hot"][i, j]),
                lag_cold=float(parts["lag_cold"][i, j]), engine_flag=int(engine[i, j]),
            )
            records.append(rec)
    meta = _meta("adiabatic-grid", T1=T1, T2=T2, tau=tau,
                 axes=[asdict(a1), asdict(a2)], elapsed=time.time() - t0)
    return SweepResult(("lambda1", "lambda2"), records, meta)


def bisect(f, lo, hi, tol=1e-6):
    """Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BoundaryNotFound(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_engine_boundary(lambda2=1.0, T1=1.0, T2=10.0, tol=1e-6, scan_points=400):
    """Lower edge lambda1*/lambda2 of the engine region at fixed lambda2.

    A coarse scan locates the first lambda1 with positive closed-form work;
    bisection then refines the sign change between it and the previous scan
    point.
    """
    if not 0.0 < lambda2 <= 1.0:
        raise ContractViolation(f"lambda2 must lie in (0, 1], got {lambda2}")

    def work(l1):
        return float(adiabatic_work_closed_form(l1, lambda2, T1, T2))

    xs = np.linspace(0.0, lambda2, scan_points + 1)[1:-1]
    ws = adiabatic_work_closed_form(xs, lambda2, T1, T2)
    pos = np.nonzero(ws > 0.0)[0]
    if pos.size == 0:
        raise BoundaryNotFound(f"closed-form work never positive for lambda1 in (0, {lambda2})")
    k = pos[0]
    lo = xs[k - 1] if k > 0 else 1e-12 * lambda2
    if work(lo) > 0.0:
        raise BoundaryNotFound("work already positive at the lower end of (0, lambda2)")
    return bisect(work, lo, xs[k], tol) / lambda2


def golden_max(f, lo, hi, tol=1e-5):
    """Maximiser of a unimodal f on [lo, hi] by golden-section search."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    # endpoints are admissible maximisers on a closed interval
    best = max((f(lo), lo), (f(x), x), (f(hi), hi))
    return best[1]


@dataclass
class MaxWork:
    lambda1: float
    lambda2: float
    work: float
    eta: float
    operational: bool


def find_max_work(points=100, T1=1.0, T2=10.0, tol=1e-5, max_rounds=50):
    """Maximum extracted adiabatic work over (0, 1]^2.

    Coarse grid scan, then golden-section refinement alternating between the
    two axes until neither coordinate moves by more than ``tol``.
    """
    xs = default_lambda_axis(points).values()
    L1, L2 = np.meshgrid(xs, xs, indexing="ij")
    W = adiabatic_work_closed_form(L1, L2, T1, T2)
    i, j = np.unravel_index(np.argmax(W), W.shape)
    if not W[i, j] > 0.0:
        return MaxWork(float(L1[i, j]), float(L2[i, j]), float(W[i, j]), math.nan, False)

    def work(l1, l2):
        return float(adiabatic_work_closed_form(l1, l2, T1, T2))

    step = xs[1] - xs[0]
    l1, l2 = float(L1[i, j]), float(L2[i, j])
    for _ in range(max_rounds):
        n1 = golden_max(lambda x: work(x, l2), max(l1 - 2 * step, 1e-9), min(l1 + 2 * step, l2), tol)
        n2 = golden_max(lambda y: work(n1, y), max(l2 - 2 * step, n1), min(l2 + 2 * step, 1.0), tol)
        moved = max(abs(n1 - l1), abs(n2 - l2))
        l1, l2 = n1, n2
        if moved <= tol:
            break
    w = work(l1, l2)
    eta = float(adiabatic_efficiency_closed_form(l1, l2, T1, T2))
    return MaxWork(float(l1), float(l2), w, eta, w > 0.0)


# -------------------------------------------------------------- finite time

def fields_for_gamma(gamma, lambda1=0.6, lambda2=1.0):
    """Field endpoints (h1, h2) that realise the gap parameters at this anisotropy."""
    if gamma > lambda1:
        raise ContractViolation(f"gamma = {gamma} exceeds lambda1 = {lambda1}")
    return math.sqrt(max(lambda1**2 - gamma**2, 0.0)), math.sqrt(max(lambda2**2 - gamma**2, 0.0))


def _point(args):
    template, overrides, cfg = args
    try:
        return run_cycle(replace(template, **overrides), cfg).summary(), None
    except (NumericFailure, ContractViolation) as exc:
        return {k: math.nan for k in SUMMARY_FIELDS}, f"{type(exc).__name__}: {exc}"


def _run_points(template, overrides, cfg, threads):
    # parameters are built inside the worker so invalid points are recorded, not raised
    jobs = [(template, o, cfg) for o in overrides]
    n = _resolve_threads(threads)
    if n == 1 or len(jobs) <= 1:
        return [_point(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_point, jobs))


def default_taus(points=60, lo=1e-3, hi=1e2):
    return Axis("tau", lo, hi, points, log=True).values()


def tau_sweep(gammas=(0.6, 0.3), taus=None, modes=("adiabatic", "nonadiabatic", "cd"),
              template=CycleParams(), cfg=PropagatorConfig(), threads=0):
    """Full cycle reports for every (gamma, tau, mode), row-major in that order."""
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    t0 = time.time()
    keys = [{"gamma": float(g), "tau": float(tau), "mode": mode} for g in gammas for tau in taus for mode in modes]
    results = _run_points(template, keys, cfg, threads)
    records, errors = [], []
    for idx, (key, (summary, err)) in enumerate(zip(keys, results)):
        records.append({**key, **summary})
        if err is not None:
            errors.append({"index": idx, **key, "error": err})
    meta = _meta("tau-sweep", cfg, template=asdict(template), gammas=[float(g) for g in gammas],
                 taus=[float(t) for t in taus], modes=list(modes), errors=errors,
                 elapsed=time.time() - t0)
    return SweepResult(("gamma", "tau", "mode"), records, meta)


def gamma_sweep(tau=0.5, gammas=None, template=CycleParams(), cfg=PropagatorConfig(), threads=0):
    """Non-adiabatic cycles across anisotropies at fixed stroke time."""
    gammas = np.linspace(0.0, 0.6, 25) if gammas is None else np.asarray(gammas, dtype=float)
    for g in gammas:
        if not 0.0 <= g <= template.lambda1:
            raise ContractViolation(f"gamma {g} outside [0, {template.lambda1}]")
    t0 = time.time()
    overrides = [{"gamma": float(g), "tau": float(tau), "mode": "nonadiabatic"} for g in gammas]
    results = _run_points(template, overrides, cfg, threads)
    records, errors = [], []
    for idx, (g, (summary, err)) in enumerate(zip(gammas, results)):
        records.append({"gamma": float(g), "tau": float(tau), **summary})
        if err is not None:
            errors.append({"index": idx, "gamma": float(g), "error": err})
    meta = _meta("gamma-sweep", cfg, template=asdict(template), errors=errors, elapsed=time.time() - t0)
    return SweepResult(("gamma", "tau"), records, meta)


def find_work_threshold(gamma=0.6, taus=None, template=CycleParams(), cfg=PropagatorConfig(),
                        tol=1e-3, threads=0):
    """Shortest stroke time giving positive non-adiabatic extracted work.

    The first sign change on the tau grid is refined by bisection on tau.
    """
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    base = replace(template, gamma=gamma, mode="nonadiabatic")
    res = _run_points(base, [{"tau": float(t)} for t in taus], cfg, threads)
    wn = np.array([r[0]["Wnet"] for r in res])
    pos = np.nonzero(wn > 0.0)[0]
    if pos.size == 0:
        raise BoundaryNotFound(f"no positive work on the tau grid for gamma={gamma}")
    k = pos[0]
    if k == 0:
        return float(taus[0])

    def work(t):
        return run_cycle(replace(base, tau=t), cfg).Wnet

    return bisect(work, float(taus[k - 1]), float(taus[k]), tol)
