"""Batch experiments: single runs, gamma sweeps, bisection and asymptotics reports.

Every run writes into its own directory:

``trajectory.csv``
    columns ``step,t,dt,grad_inf,E,R_fit,C_fit`` (``nan`` where no bubble fit)
``summary.json``
    the :class:`RunRecord`
``config.cfg``
    the configuration that produced it
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics, diagnostics
from .config import ExperimentConfig
from .core import LLGError
from .integrator import EnergyIncreaseError, StiffnessFailure, Trajectory, run_until

TRAJECTORY_COLUMNS = ("step", "t", "dt", "grad_inf", "E", "R_fit", "C_fit")
_SAMPLE_ATTR = {"E": "energy"}


class PreconditionError(LLGError, ValueError):
    pass


class SolverError(LLGError):
    pass


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


@dataclass
class RunRecord:
    status: str                  # ok | solver-failure
    reason: str | None           # termination reason of run_until
    outcome: str | None          # Blowup, DecayPlus, DecayMinus, Undetermined
    evidence: dict = field(default_factory=dict)
    bubble: dict | None = None   # final BubbleFit
    rate: dict | None = None     # RateFit of the R_fit series
    angles: dict | None = None   # measured vs predicted inner/outer azimuth
    t_final: float = math.nan
    steps: int = 0
    peak_grad: float = math.nan
    error: str | None = None
    files: dict = field(default_factory=dict)
    config: str = ""

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True)

    @classmethod
    def load(cls, run_dir) -> "RunRecord":
        data = json.loads((Path(run_dir) / "summary.json").read_text())
        return cls(**{k: (math.nan if v is None and k in ("t_final", "peak_grad") else v)
                      for k, v in data.items()})


def write_trajectory(path, traj: Trajectory):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for smp in traj.samples:
            w.writerow([_num(getattr(smp, _SAMPLE_ATTR.get(c, c))) for c in TRAJECTORY_COLUMNS])


def read_trajectory(path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def _analyse(traj: Trajectory, cfg: ExperimentConfig, rec: RunRecord):
    rec.reason = traj.reason
    rec.peak_grad = traj.peak_grad
    if traj.final is not None:
        rec.t_final, rec.steps = traj.final.t, traj.final.step_count
    try:
        out = diagnostics.classify(traj, cfg["diag.undetermined"])
        rec.outcome, rec.evidence = out.tag, dict(out.evidence)
    except ValueError:
        rec.outcome = None
    if traj.final is None or traj.final.grad_inf() < diagnostics.MIN_CORE_GRADIENT:
        return
    try:
        fit = diagnostics.fit_bubble(traj.final, window=cfg["diag.fit_window"])
    except diagnostics.BubbleFitError:
        return
    rec.bubble = {"R": fit.R, "C": fit.C, "residual": fit.residual,
                  "profile_error": diagnostics.profile_error(traj.final, fit)}
    params = traj.params
    predicted = diagnostics.predicted_angle(params)
    try:
        measured = diagnostics.inner_outer_angle(traj.final, fit)
    except diagnostics.BubbleFitError:
        measured = math.nan
    rec.angles = {"measured": measured, "predicted": predicted}
    if rec.reason == "gradient-threshold":
        try:
            rf = diagnostics.fit_rate(traj.column("t"), traj.column("R_fit"))
            rec.rate = {"kappa": rf.kappa, "T": rf.T, "window": list(rf.window),
                        "residual": rf.residual, "alternatives": rf.alternatives}
        except diagnostics.RateFitError as exc:
            rec.rate = {"error": str(exc)}


def simulate(cfg: ExperimentConfig) -> Trajectory:
    """Run the configured experiment in memory (no files)."""
    return run_until(cfg.initial_state(), cfg.params(), cfg.stop_spec(), cfg.integrator_config(),
                     cfg.mesh_config(), sample_every=cfg["sample.every_steps"], keep_snapshots=False)


def run(cfg: ExperimentConfig, run_dir=None) -> RunRecord:
    """Execute one experiment and persist its trajectory and summary.

    Solver failures are recorded (``status = solver-failure``) together with
    the partial trajectory instead of being raised.
    """
    run_dir = Path(run_dir if run_dir is not None else cfg["output.dir"])
    run_dir.mkdir(parents=True, exist_ok=True)
    rec = RunRecord("ok", None, None, config=cfg.to_text())
    try:
        traj = simulate(cfg)
    except (StiffnessFailure, EnergyIncreaseError) as exc:
        rec.status, rec.error = "solver-failure", f"{type(exc).__name__}: {exc}"
        traj = getattr(exc, "trajectory", None) or Trajectory(params=cfg.params(), reason="solver-failure")
    _analyse(traj, cfg, rec)
    (run_dir / "config.cfg").write_text(rec.config)
    write_trajectory(run_dir / "trajectory.csv", traj)
    rec.files = {"trajectory": "trajectory.csv", "config": "config.cfg"}
    (run_dir / "summary.json").write_text(rec.to_json() + "\n")
    return rec


def _gamma_tag(gamma: float) -> str:
    return f"gamma_{gamma:.10f}".rstrip("0").rstrip(".")


def sweep(cfg: ExperimentConfig, gammas, out_dir=None) -> list:
    """One run per ``gamma``; writes ``sweep.csv`` (gamma, peak grad, outcome, rotation)."""
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise PreconditionError("empty gamma list")
    if any(not 0.0 <= g <= 1.0 for g in gammas):
        raise PreconditionError("gamma values must lie in [0, 1]")
    out_dir = Path(out_dir if out_dir is not None else cfg["output.dir"])
    records = []
    rows = []
    for g in gammas:
        sub = out_dir / _gamma_tag(g)
        rec = run(cfg.with_values(init__gamma=g), sub)
        records.append(rec)
        rows.append([_num(g), _num(rec.peak_grad), rec.outcome or "", _num(rec.evidence.get("rotation", math.nan)),
                     rec.reason or "", rec.status, sub.name])
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "peak_grad", "outcome", "rotation", "reason", "status", "run_dir"])
        w.writerows(rows)
    return records


@dataclass
class BisectResult:
    gamma_star: float
    lo: float
    hi: float
    iterations: int
    records: list  # (gamma, RunRecord) in evaluation order
    final: RunRecord | None


def _sign(rec: RunRecord) -> int | None:
    if rec.outcome == "DecayPlus":
        return 1
    if rec.outcome == "DecayMinus":
        return -1
    return None


def bisect(cfg: ExperimentConfig, lo: float, hi: float, tol: float, out_dir=None,
           max_iter: int = 60) -> BisectResult:
    """Bisection on the sign of the net rotation of decaying runs.

    A run that blows up at a midpoint ends the search there.  An undetermined
    outcome is retried once with a 100x tighter equilibrium tolerance.
    """
    if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0) or lo == hi or tol <= 0:
        raise PreconditionError("need distinct lo, hi in [0, 1] and tol > 0")
    out_dir = Path(out_dir if out_dir is not None else cfg["output.dir"])
    history = []

    def evaluate(g):
        sub = out_dir / f"{len(history):02d}_{_gamma_tag(g)}"
        rec = run(cfg.with_values(init__gamma=g), sub)
        if rec.outcome == "Undetermined" and cfg["stop.eq_tol"] is not None:
            tighter = cfg.with_values(init__gamma=g, stop__eq_tol=cfg["stop.eq_tol"] * 1e-2)
            rec = run(tighter, sub)
        history.append((g, rec))
        if rec.status != "ok":
            raise SolverError(f"run at gamma={g} failed: {rec.error}")
        return rec

    s_lo, s_hi = _sign(evaluate(lo)), _sign(evaluate(hi))
    if s_lo is None or s_hi is None or s_lo == s_hi:
        raise PreconditionError(f"bracket [{lo}, {hi}] does not straddle a sign change "
                                f"({history[0][1].outcome}, {history[1][1].outcome})")
    it = 0
    final = None
    while abs(hi - lo) > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        rec = evaluate(mid)
        it += 1
        s = _sign(rec)
        if s is None:
            if rec.outcome == "Blowup":
                return BisectResult(mid, lo, hi, it, history, rec)
            raise SolverError(f"gamma={mid}: outcome {rec.outcome} after retry")
        if s == s_lo:
            lo = mid
        else:
            hi = mid
    gamma_star = 0.5 * (lo + hi)
    final = run(cfg.with_values(init__gamma=gamma_star), out_dir / f"final_{_gamma_tag(gamma_star)}")
    history.append((gamma_star, final))
    return BisectResult(gamma_star, lo, hi, it, history, final)


def report_asymptotics(n_max: int, out_dir, attach=None) -> dict:
    """Write the reduced-model tables; compare with a run directory if given.

    Files: ``En.csv``, ``separatrix.csv``, ``higher_n.csv`` and, with
    ``attach``, ``comparison.csv``.
    """
    if n_max < 2:
        raise PreconditionError("n-max must be >= 2")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    with open(out / "En.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "closed_form", "quadrature", "abs_diff"])
        for n in range(2, n_max + 1):
            a, b = asymptotics.En(n), asymptotics.En_quadrature(n)
            w.writerow([n, _num(a), _num(b), _num(abs(a - b))])
    files["En"] = "En.csv"

    with open(out / "separatrix.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["C0", "t", "C_numerical", "C_closed_form"])
        for C0 in (-3.0, -1.0, -1e-3, 1e-3, 1.0, 3.0):
            sol = asymptotics.separatrix_ode(C0, (-10.0, 10.0), n_out=201)
            for t, a, b in zip(sol.t, sol.numerical, sol.closed_form):
                w.writerow([_num(C0), _num(t), _num(a), _num(b)])
    files["separatrix"] = "separatrix.csv"

    with open(out / "higher_n.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "R0", "C0", "t", "R", "C_tilde", "status"])
        for n in range(2, n_max + 1):
            for C0 in np.linspace(-0.75 * math.pi, 0.75 * math.pi, 7):
                sol = asymptotics.higher_n_system(0.1, float(C0), n, t_range=(0.0, 200.0),
                                                  stop_on_exit=False, n_out=201)
                for t, R, C in zip(sol.t, sol.R, sol.C_tilde):
                    w.writerow([n, _num(0.1), _num(C0), _num(t), _num(R), _num(C), sol.status])
    files["higher_n"] = "higher_n.csv"

    if attach is not None:
        rec = RunRecord.load(attach)
        cfg = ExperimentConfig.from_text(rec.config)
        params = cfg.params()
        rows = [["angle", "predicted", _num(diagnostics.predicted_angle(params)),
                 _num((rec.angles or {}).get("measured", math.nan))]]
        if rec.outcome in ("DecayPlus", "DecayMinus"):
            sign = 1.0 if rec.outcome == "DecayPlus" else -1.0
            rows.append(["rotation", "predicted", _num(sign * math.pi),
                         _num(rec.evidence.get("rotation", math.nan))])
        with open(out / "comparison.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "kind", "predicted", "measured"])
            w.writerows(rows)
        files["comparison"] = "comparison.csv"
    return files

