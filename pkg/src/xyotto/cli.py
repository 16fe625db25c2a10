"""Command-line front end: one experiment per invocation, CSV or JSON out.

Exit codes: 0 success, 1 bad parameters, 2 numeric or I/O failure,
3 acceptance-suite failure.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import subprocess
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _backend, sweep, verify
from .cycle import (
    COST_STATES,
    EXPANSION_PATHS,
    LAG_PAIRINGS,
    MODES,
    SUMMARY_FIELDS,
    CycleParams,
    CycleReport,
    run_cycle,
)
from .dynamics import METHODS, PropagatorConfig
from .errors import ContractViolation, NumericFailure

EXPERIMENTS = (
    "adiabatic-grid", "boundary", "max-work", "finite-time",
    "lag-cost", "eff-vs-gamma", "single-cycle", "verify",
)
FORMATS = ("csv", "json")
JSON_DEFAULT = {"boundary", "max-work", "single-cycle", "verify"}

# settings left as None are resolved per experiment
PER_EXPERIMENT = {
    "gamma": {"finite-time": [0.6, 0.3], "lag-cost": [0.6, 0.3], "eff-vs-gamma": None},
    "tau": {"eff-vs-gamma": 0.5},
    "modes": {"finite-time": ["adiabatic", "nonadiabatic", "cd"], "lag-cost": ["nonadiabatic", "cd"]},
}


@dataclasses.dataclass
class RunConfig:
    experiment: str = "single-cycle"
    output: str = "-"
    format: str = None
    gamma: list = None
    lambda1: float = 0.6
    lambda2: float = 1.0
    t1: float = 1.0
    t2: float = 10.0
    tau: float = None
    modes: list = None
    steps: int = 4096
    method: str = "midpoint"
    cost_state: str = "bare"
    lag_pairing: str = "text"
    expansion_path: str = "swap"
    threads: int = 0
    grid_points: int = 100
    tau_min: float = 1e-3
    tau_max: float = 1e2
    tau_points: int = 60
    gamma_points: int = 25
    criteria: list = None

    def resolved(self):
        """Copy with every experiment-dependent default filled in."""
        c = dataclasses.replace(self)
        if c.experiment not in EXPERIMENTS:
            raise ContractViolation(f"unknown experiment {c.experiment!r}; choose from {EXPERIMENTS}")
        if c.format is None:
            c.format = "json" if c.experiment in JSON_DEFAULT else "csv"
        if c.format not in FORMATS:
            raise ContractViolation(f"format must be one of {FORMATS}")
        if c.gamma is None:
            g = PER_EXPERIMENT["gamma"].get(c.experiment, [0.6])
            c.gamma = (list(np.linspace(0.0, c.lambda1, c.gamma_points)) if g is None else g)
        c.gamma = [float(g) for g in c.gamma]
        if c.tau is None:
            c.tau = PER_EXPERIMENT["tau"].get(c.experiment, 1.0)
        if c.modes is None:
            c.modes = PER_EXPERIMENT["modes"].get(c.experiment, ["adiabatic"])
        for m in c.modes:
            if m not in MODES:
                raise ContractViolation(f"mode must be one of {MODES}, got {m!r}")
        if c.threads < 0:
            raise ContractViolation("threads must be >= 0")
        return c

    def template(self, gamma=None):
        return CycleParams(
            gamma=self.gamma[0] if gamma is None else gamma,
            lambda1=self.lambda1, lambda2=self.lambda2, T1=self.t1, T2=self.t2, tau=self.tau,
            mode=self.modes[0], cost_state=self.cost_state, lag_pairing=self.lag_pairing,
            expansion_path=self.expansion_path,
        )

    def propagator(self):
        return PropagatorConfig(method=self.method, steps=self.steps)


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except OSError:
        raise
    except ValueError as exc:
        raise ContractViolation(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ContractViolation("config file must hold a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ContractViolation(f"unknown config keys: {', '.join(unknown)}")
    return data


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


class _Parser(argparse.ArgumentParser):
    # usage errors are bad parameters, not argparse's exit status 2
    def error(self, message):
        raise ContractViolation(message)


def build_parser():
    ap = _Parser(prog="xyotto", description=__doc__.splitlines()[0], argument_default=argparse.SUPPRESS)
    ap.add_argument("experiment_pos", nargs="?", metavar="experiment", help=" | ".join(EXPERIMENTS))
    ap.add_argument("-e", "--experiment", choices=EXPERIMENTS)
    ap.add_argument("-o", "--output", help="output path, '-' for stdout")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    ap.add_argument("--gamma", type=_float_list, help="anisotropy, or a comma-separated list")
    ap.add_argument("--lambda1", type=float)
    ap.add_argument("--lambda2", type=float)
    ap.add_argument("--t1", type=float, help="cold bath temperature")
    ap.add_argument("--t2", type=float, help="hot bath temperature")
    ap.add_argument("--tau", type=float, help="stroke duration")
    ap.add_argument("--mode", "--modes", dest="modes", type=_str_list)
    ap.add_argument("--steps", type=int)
    ap.add_argument("--method", choices=METHODS)
    ap.add_argument("--cost-state", dest="cost_state", choices=COST_STATES)
    ap.add_argument("--lag-pairing", dest="lag_pairing", choices=LAG_PAIRINGS)
    ap.add_argument("--expansion-path", dest="expansion_path", choices=EXPANSION_PATHS)
    ap.add_argument("--threads", type=int, help="worker threads, 0 = one per CPU")
    ap.add_argument("--grid-points", dest="grid_points", type=int)
    ap.add_argument("--tau-min", dest="tau_min", type=float)
    ap.add_argument("--tau-max", dest="tau_max", type=float)
    ap.add_argument("--tau-points", dest="tau_points", type=int)
    ap.add_argument("--gamma-points", dest="gamma_points", type=int)
    ap.add_argument("--criteria", type=lambda s: [int(x) for x in _str_list(s)],
                    help="verify only these criterion numbers")
    return ap


def config_from_args(ns):
    opts = vars(ns).copy()
    cfg = {}
    if "config" in opts:
        cfg.update(load_config(opts.pop("config")))
    pos = opts.pop("experiment_pos", None)
    if pos is not None:
        if "experiment" in opts and opts["experiment"] != pos:
            raise ContractViolation("positional experiment and --experiment disagree")
        opts["experiment"] = pos
    cfg.update(opts)
    return RunConfig(**cfg).resolved()


# ---------------------------------------------------------------- serializers

def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        # + 0.0 folds negative zero into zero
        return "" if math.isnan(x) else format(float(x) + 0.0, ".12g")
    return str(x)


def _value_names(result):
    return result.metadata.get("value_names", SUMMARY_FIELDS)


def emit_csv(result, path):
    """Header of parameter columns then value columns; eta/power blank for non-engines."""
    if isinstance(result, CycleReport):
        result = report_as_sweep(result)
    names = list(result.param_names) + list(_value_names(result))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for rec in result.records:
        row = {k: rec.get(k, "") for k in names}
        if "engine_flag" in rec and not rec["engine_flag"]:
            for k in ("eta", "power"):
                if k in row:
                    row[k] = math.nan
        w.writerow([_cell(row[k]) for k in names])
    _write(path, buf.getvalue())


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def emit_json(result, path, config=None):
    """Single document: metadata (version, config echo, git revision) plus records."""
    if isinstance(result, CycleReport):
        meta, records = {"kind": "single-cycle"}, [result.to_dict()]
    else:
        meta, records = dict(result.metadata), result.records
    meta = {"version": __version__, "backend": _backend.BACKEND, **meta}
    if config is not None:
        meta["config"] = dataclasses.asdict(config)
    rev = git_revision()
    if rev:
        meta["git_revision"] = rev
    # everything that varies between identical runs lives under "run"
    meta["run"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "elapsed": meta.pop("elapsed", None),
    }
    doc = {"metadata": _jsonable(meta), "records": _jsonable(records)}
    _write(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text)


def git_revision():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return None
    if out.returncode != 0:
        return None
    return out.stdout.strip() or None


def report_as_sweep(rep, params=None):
    p = params or {}
    rec = {**p, **rep.summary()}
    return sweep.SweepResult(tuple(p), [rec], {"kind": "single-cycle"})


# ---------------------------------------------------------------- experiments

def _grid(cfg):
    ax1 = sweep.default_lambda_axis(cfg.grid_points, "lambda1")
    ax2 = sweep.default_lambda_axis(cfg.grid_points, "lambda2")
    return sweep.adiabatic_grid(ax1, ax2, cfg.t1, cfg.t2, cfg.tau)


def _boundary(cfg):
    ratio = sweep.find_engine_boundary(cfg.lambda2, cfg.t1, cfg.t2)
    rec = {"lambda2": cfg.lambda2, "ratio": ratio, "lambda1": ratio * cfg.lambda2}
    return sweep.SweepResult(("lambda2",), [rec], {"kind": "boundary", "value_names": ["ratio", "lambda1"]})


def _max_work(cfg):
    best = sweep.find_max_work(cfg.grid_points, cfg.t1, cfg.t2)
    rec = dataclasses.asdict(best)
    rec["work"] = float(rec["work"])
    return sweep.SweepResult((), [rec], {"kind": "max-work", "value_names": list(rec)})


def _taus(cfg):
    return sweep.default_taus(cfg.tau_points, cfg.tau_min, cfg.tau_max)


def _finite_time(cfg):
    return sweep.tau_sweep(cfg.gamma, _taus(cfg), cfg.modes, cfg.template(), cfg.propagator(), cfg.threads)


def _eff_vs_gamma(cfg):
    return sweep.gamma_sweep(cfg.tau, cfg.gamma, cfg.template(0.0), cfg.propagator(), cfg.threads)


def _single(cfg):
    p = cfg.template()
    return run_cycle(p, cfg.propagator())


def _single_csv(cfg, rep):
    p = cfg.template()
    params = {k: getattr(p, k) for k in ("gamma", "lambda1", "lambda2", "T1", "T2", "tau", "mode")}
    return report_as_sweep(rep, params)


RUNNERS = {
    "adiabatic-grid": _grid,
    "boundary": _boundary,
    "max-work": _max_work,
    "finite-time": _finite_time,
    "lag-cost": _finite_time,
    "eff-vs-gamma": _eff_vs_gamma,
    "single-cycle": _single,
}


def _verify(cfg):
    results = verify.run_all(cfg.criteria)
    sys.stderr.write(verify.format_table(results) + "\n")
    records = [r.to_dict() for r in results]
    if cfg.format == "csv":
        rows = []
        for r in results:
            for c in r.checks:
                rows.append({"id": r.id, "criterion": r.name, "check": c.label, "measured": _cell(c.measured),
                             "expected": _cell(c.expected), "tolerance": _cell(c.tolerance), "passed": int(c.passed)})
        res = sweep.SweepResult(("id", "criterion", "check"), rows,
                                {"value_names": ["measured", "expected", "tolerance", "passed"]})
        emit_csv(res, cfg.output)
    else:
        res = sweep.SweepResult(("id",), records, {"kind": "verify", "all_passed": all(r.passed for r in results)})
        emit_json(res, cfg.output, cfg)
    return len(results), all(r.passed for r in results)


def run(cfg):
    """Execute a resolved RunConfig; returns (points, ok)."""
    if cfg.experiment == "verify":
        return _verify(cfg)
    result = RUNNERS[cfg.experiment](cfg)
    if isinstance(result, CycleReport):
        if cfg.format == "csv":
            emit_csv(_single_csv(cfg, result), cfg.output)
        else:
            emit_json(result, cfg.output, cfg)
        return 1, True
    if cfg.format == "csv":
        emit_csv(result, cfg.output)
    else:
        emit_json(result, cfg.output, cfg)
    return len(result), True


def main(argv=None):
    t0 = time.time()
    name = "?"
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        name = cfg.experiment
        points, ok = run(cfg)
    except ContractViolation as exc:
        print(f"xyotto {name}: error: {exc}", file=sys.stderr)
        return 1
    except TypeError as exc:
        # bad value types coming from a config file
        print(f"xyotto {name}: error: {exc}", file=sys.stderr)
        return 1
    except (NumericFailure, OSError) as exc:
        print(f"xyotto {name}: failure: {exc}", file=sys.stderr)
        return 2
    status = "ok" if ok else "FAILED"
    print(f"xyotto {name}: {points} points in {time.time() - t0:.2f}s [{status}]", file=sys.stderr)
    return 0 if ok else 3


if __name__ == "__main__":
    sys.exit(main())
