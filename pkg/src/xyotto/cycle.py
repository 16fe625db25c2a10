"""Four-stroke Otto cycle bookkeeping, closed forms, STA cost and efficiency lag.

Sign conventions: W1, W3, Q2, Q4 are energy changes of the working medium
(positive = energy flows in). Extracted work is Wnet = -(W1 + W3).
Thermalisation strokes are instantaneous Gibbs resets, so one cycle lasts
2 * tau.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import PropagatorConfig, adiabatic_map, evolve_schedule, evolve_with_cd, expectation
from .errors import ContractViolation
from .model import BathSpec, DriveSchedule, ModelParams, build_hamiltonian, gibbs_state
from .smallmat import hermitian_eigen

MODES = ("adiabatic", "nonadiabatic", "cd")
COST_STATES = ("bare", "cd")
LAG_PAIRINGS = ("text", "literal")
EXPANSION_PATHS = ("swap", "reflect")

# columns shared by CSV and JSON records, in output order
SUMMARY_FIELDS = (
    "W1", "W3", "Q2", "Q4", "Wnet", "V1", "V3", "eta", "power", "lag", "lag_hot", "lag_cold", "engine_flag",
)


@dataclass(frozen=True)
class CycleParams:
    gamma: float = 0.6
    lambda1: float = 0.6
    lambda2: float = 1.0
    T1: float = 1.0
    T2: float = 10.0
    tau: float = 1.0
    mode: str = "adiabatic"
    cost_state: str = "bare"
    lag_pairing: str = "text"
    expansion_path: str = "swap"

    def __post_init__(self):
        for name, allowed in (
            ("mode", MODES), ("cost_state", COST_STATES),
            ("lag_pairing", LAG_PAIRINGS), ("expansion_path", EXPANSION_PATHS),
        ):
            if getattr(self, name) not in allowed:
                raise ContractViolation(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        g, l1, l2 = self.gamma, self.lambda1, self.lambda2
        if not 0.0 <= g <= 1.0:
            raise ContractViolation(f"gamma must lie in [0, 1], got {g}")
        if not 0.0 < l1 < l2 <= math.sqrt(1.0 + g * g) + 1e-15:
            raise ContractViolation(f"need 0 < lambda1 < lambda2 <= sqrt(1 + gamma^2), got {l1}, {l2}")
        if g > l1 + 1e-15:
            raise ContractViolation(f"gamma = {g} exceeds lambda1 = {l1}: field would be imaginary")
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ContractViolation(f"tau must be positive and finite, got {self.tau}")
        BathSpec(self.T1, self.T2)

    @property
    def baths(self):
        return BathSpec(self.T1, self.T2)

    @property
    def h1(self):
        return math.sqrt(max(self.lambda1**2 - self.gamma**2, 0.0))

    @property
    def h2(self):
        return min(math.sqrt(max(self.lambda2**2 - self.gamma**2, 0.0)), 1.0)


@dataclass
class StrokeRecord:
    kind: str  # compression | heating | expansion | cooling
    energy_change: float
    sta_cost: float
    end_state: np.ndarray


@dataclass
class CycleReport:
    W1: float
    W3: float
    Q2: float
    Q4: float
    Wnet: float
    V1: float
    V3: float
    eta: float
    power: float
    lag: float
    lag_hot: float
    lag_cold: float
    eta_carnot: float
    eta_work: float  # -(W1 + W3) / Q2, before any control cost
    engine: bool
    V1_signed: float = 0.0
    V3_signed: float = 0.0
    strokes: list = field(default_factory=list, repr=False)

    @property
    def lag_terms(self):
        return self.lag_hot, self.lag_cold

    @property
    def first_law_residual(self):
        return self.W1 + self.Q2 + self.W3 + self.Q4

    def summary(self):
        out = {k: getattr(self, k) for k in SUMMARY_FIELDS if k != "engine_flag"}
        out["engine_flag"] = int(self.engine)
        return out

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k != "strokes"}
        d["engine_flag"] = int(self.engine)
        d["strokes"] = [
            {"kind": s.kind, "energy_change": s.energy_change, "sta_cost": s.sta_cost} for s in self.strokes
        ]
        return d


# ---------------------------------------------------------------- closed forms

def _closed_form_parts(l1, l2, T1, T2):
    A1 = np.cosh(2 * l1 / T1) + np.cosh(2 / T1)
    A2 = np.cosh(2 * l2 / T2) + np.cosh(2 / T2)
    C = np.sinh(2 * l2 / T2) * A1 - np.sinh(2 * l1 / T1) * A2
    return C, A1, A2


def adiabatic_work_closed_form(l1, l2, T1, T2):
    """Extracted work -(W1 + W3) of the ideal adiabatic cycle (array friendly)."""
    C, A1, A2 = _closed_form_parts(l1, l2, T1, T2)
    return 2 * C * (l1 - l2) / (A1 * A2)


def adiabatic_efficiency_closed_form(l1, l2, T1, T2):
    """Efficiency of the ideal adiabatic cycle (array friendly).

    The textbook expression for this medium carries an overall sign flip
    relative to -(W1 + W3)/Q2; the sign is corrected here. Outside the
    engine region the raw value is returned; use ``engine_operational`` to
    flag it.
    """
    C, _, _ = _closed_form_parts(l1, l2, T1, T2)
    den = (
        C * l2
        + np.sinh(2 / T2) * np.cosh(2 * l1 / T1)
        - np.sinh(2 / T1) * np.cosh(2 * l2 / T2)
        + np.sinh(2 / T2 - 2 / T1)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        return -C * (l1 - l2) / den


def engine_operational(l1, l2, T1, T2):
    return adiabatic_work_closed_form(l1, l2, T1, T2) > 0.0


def _boltzmann(levels, T):
    x = -(levels - levels.min(axis=-1, keepdims=True)) / T
    p = np.exp(x)
    return p / p.sum(axis=-1, keepdims=True)


def adiabatic_cycle_scalar(l1, l2, T1, T2):
    """Per-stroke bookkeeping of the ideal cycle from level populations alone.

    Vectorised over broadcastable l1, l2. Used for dense landscape scans;
    ``run_cycle(mode="adiabatic")`` is the matrix-level counterpart.
    """
    l1, l2 = np.broadcast_arrays(np.asarray(l1, float), np.asarray(l2, float))
    ones = np.ones_like(l1)
    E1 = np.stack([-2 * ones, -2 * l1, 2 * l1, 2 * ones], axis=-1)
    E2 = np.stack([-2 * ones, -2 * l2, 2 * l2, 2 * ones], axis=-1)
    p1, p2 = _boltzmann(E1, T1), _boltzmann(E2, T2)
    W1 = np.sum(p1 * (E2 - E1), axis=-1)
    Q2 = np.sum((p2 - p1) * E2, axis=-1)
    W3 = np.sum(p2 * (E1 - E2), axis=-1)
    Q4 = np.sum((p1 - p2) * E1, axis=-1)

    def kl(p, q):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sum(np.where(p > 1e-300, p * np.log(p / q), 0.0), axis=-1)

    lag_hot, lag_cold = kl(p1, p2), kl(p2, p1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lag = (lag_hot + lag_cold) / (Q2 / T1)
    return {"W1": W1, "W3": W3, "Q2": Q2, "Q4": Q4, "Wnet": -(W1 + W3),
            "lag": lag, "lag_hot": lag_hot, "lag_cold": lag_cold}


# --------------------------------------------------------- figures of merit

def sta_efficiency(W1, W3, Q2, V1, V3):
    """-(W1 + W3) / (Q2 + V1 + V3); NaN when the denominator is not positive."""
    den = Q2 + V1 + V3
    if not den > 0.0:
        return math.nan
    return -(W1 + W3) / den


def sta_power(W1, W3, V1, V3, tau):
    """(extracted work - control cost) / (2 tau)."""
    if not tau > 0.0:
        raise ContractViolation(f"tau must be positive, got {tau}")
    return (-(W1 + W3) - V1 - V3) / (2.0 * tau)


def von_neumann_entropy(rho):
    p = hermitian_eigen(0.5 * (rho + rho.conj().T)).eigenvalues
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def log_partition(H, T):
    w = hermitian_eigen(H).eigenvalues
    e0 = w[0]
    return float(-e0 / T + math.log(np.sum(np.exp(-(w - e0) / T))))


def relative_entropy_to_gibbs(rho, H, T):
    """D(rho || exp(-H/T)/Z) = tr[rho H]/T + ln Z - S(rho)."""
    return expectation(rho, H) / T + log_partition(H, T) - von_neumann_entropy(rho)


def efficiency_lag(rho_com, rho_exp, H1, H2, baths, Q_hot, pairing="text"):
    """Efficiency lag and its two relative-entropy terms.

    ``pairing="text"`` compares the compressed state with the hot Gibbs
    state and the expanded state with the cold one; ``"literal"`` swaps the
    partners. The denominator is Q_hot / T1, which makes eta = eta_Carnot - L
    hold identically for the text pairing. Returns NaN for L when
    Q_hot <= 0.
    """
    T1, T2 = baths.T1, baths.T2
    if pairing == "text":
        hot = relative_entropy_to_gibbs(rho_com, H2, T2)
        cold = relative_entropy_to_gibbs(rho_exp, H1, T1)
    elif pairing == "literal":
        hot = relative_entropy_to_gibbs(rho_exp, H2, T2)
        cold = relative_entropy_to_gibbs(rho_com, H1, T1)
    else:
        raise ContractViolation(f"pairing must be one of {LAG_PAIRINGS}, got {pairing!r}")
    if not Q_hot > 0.0:
        return math.nan, hot, cold
    return (hot + cold) / (Q_hot / T1), hot, cold


def sta_cost_signed(schedule, initial_state, cfg=PropagatorConfig(), cost_state="bare"):
    """Time integral of <dH_CD/dt> along the chosen trajectory."""
    if cost_state == "bare":
        traj = evolve_schedule(initial_state, schedule, cfg, cd=False, track_cost=True)
    elif cost_state == "cd":
        traj = evolve_schedule(initial_state, schedule, cfg, cd=True, track_cost=True)
    else:
        raise ContractViolation(f"cost_state must be one of {COST_STATES}, got {cost_state!r}")
    return traj.cost_integral


def sta_cost(schedule, initial_state, cfg=PropagatorConfig(), cost_state="bare"):
    """Control cost of one counterdiabatic stroke (magnitude of the signed integral)."""
    return abs(sta_cost_signed(schedule, initial_state, cfg, cost_state))


# ------------------------------------------------------------------- cycle

def stroke_schedules(p):
    comp = DriveSchedule(p.h1, p.h2, p.tau, p.gamma)
    if p.expansion_path == "swap":
        exp = DriveSchedule(p.h2, p.h1, p.tau, p.gamma)
    else:
        exp = DriveSchedule(p.h2, p.h1, p.tau, p.gamma, reflected=True)
    return comp, exp


def _unitary_stroke(p, rho, sched, start, end, cfg):
    """End state and signed cost of one work stroke in the cycle's mode."""
    if p.mode == "adiabatic":
        return adiabatic_map(rho, start, end), 0.0
    if p.mode == "nonadiabatic":
        return evolve_schedule(rho, sched, cfg).final, 0.0
    traj = evolve_with_cd(rho, sched, cfg, track_cost=p.cost_state == "cd")
    if p.cost_state == "cd":
        cost = traj.cost_integral
    else:
        cost = sta_cost_signed(sched, rho, cfg, "bare")
    return traj.final, cost


def run_cycle(p, cfg=PropagatorConfig()):
    """Run one Otto cycle and return its full energy bookkeeping."""
    P1, P2 = ModelParams(p.gamma, p.h1), ModelParams(p.gamma, p.h2)
    H1, H2 = build_hamiltonian(P1), build_hamiltonian(P2)
    comp, expn = stroke_schedules(p)

    rho_b1 = gibbs_state(H1, p.T1)
    rho_com, V1s = _unitary_stroke(p, rho_b1, comp, P1, P2, cfg)
    W1 = expectation(rho_com, H2) - expectation(rho_b1, H1)

    rho_b2 = gibbs_state(H2, p.T2)
    Q2 = expectation(rho_b2, H2) - expectation(rho_com, H2)

    rho_exp, V3s = _unitary_stroke(p, rho_b2, expn, P2, P1, cfg)
    W3 = expectation(rho_exp, H1) - expectation(rho_b2, H2)
    Q4 = expectation(rho_b1, H1) - expectation(rho_exp, H1)

    V1, V3 = abs(V1s), abs(V3s)
    Wnet = -(W1 + W3)
    eta_work = Wnet / Q2 if Q2 > 0.0 else math.nan
    if p.mode == "cd":
        eta = sta_efficiency(W1, W3, Q2, V1, V3)
        power = sta_power(W1, W3, V1, V3, p.tau)
    else:
        eta = eta_work
        power = Wnet / (2.0 * p.tau)
    lag, lag_hot, lag_cold = efficiency_lag(rho_com, rho_exp, H1, H2, p.baths, Q2, p.lag_pairing)
    engine = bool(Wnet > 0.0 and Q2 > 0.0 and Q4 < 0.0)

    strokes = [
        StrokeRecord("compression", W1, V1, rho_com),
        StrokeRecord("heating", Q2, 0.0, rho_b2),
        StrokeRecord("expansion", W3, V3, rho_exp),
        StrokeRecord("cooling", Q4, 0.0, rho_b1),
    ]
    return CycleReport(
        W1=W1, W3=W3, Q2=Q2, Q4=Q4, Wnet=Wnet, V1=V1, V3=V3,
        eta=eta, power=power, lag=lag, lag_hot=lag_hot, lag_cold=lag_cold,
        eta_carnot=p.baths.carnot, eta_work=eta_work, engine=engine,
        V1_signed=V1s, V3_signed=V3s, strokes=strokes,
    )
