"""Experiment harness: flat-file configs, seeded repetitions, CSV traces.

A config is a flat ``key = value`` file (values parse as JSON fragments,
so lists inline naturally); unknown keys are rejected.  An experiment runs
``repetitions`` runs per listed seed, writes one trace CSV per run with
the fixed header ``run_id,epoch,iter,samples,objective,grad_map_sq,
wallclock_ns``, a mean curve aligned on cumulative samples by last-value
interpolation, and a flat key-value summary.

Trace CSVs are byte-identical for identical (seed, repetition) pairs; to
keep that true the wallclock column is written as 0 unless the config
sets ``wallclock = true``.  Real timings always appear in the summary.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .datasets import ingest_returns_csv
from .model import CompositeProblem, derive_constants
from .problems import (
    VARIANCE_PENALTY,
    VARIANCE_REWARD,
    mdp_problem,
    portfolio_problem,
    random_mdp,
    synth_quadratic_composite,
    synthetic_returns,
)
from .prox import L1BallReg, L1Reg, Regularizer, ZeroReg
from .rng import key_tuple
from .solver import (
    RunTrace,
    SolverResult,
    TraceOptions,
    baseline_prox_fullgrad,
    baseline_prox_plugin_sgd,
    run_civr,
    run_restarted,
)
from . import schedules

TRACE_HEADER = "run_id,epoch,iter,samples,objective,grad_map_sq,wallclock_ns"

PROBLEMS = ("portfolio", "mdp", "synth-quadratic")
ALGORITHMS = ("civr", "civr-adp", "restarted", "fullgrad", "plugin-sgd")
RESTART_PRESETS = (
    "gradient-dominant-finite",
    "strongly-convex-finite",
    "gradient-dominant-expectation",
    "strongly-convex-expectation",
)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    problem: str = "portfolio"
    algorithm: str = "civr"
    outdir: str = "out"

    # portfolio
    returns_csv: str = ""
    returns_scale: str = "raw"
    take_last: int = 0
    returns_rows: int = 1000
    returns_assets: int = 30
    returns_mean: float = 0.05
    returns_vol: float = 1.0
    risk_weight: float = 0.2
    sign_mode: str = VARIANCE_PENALTY

    # mdp
    mdp_states: int = 10
    mdp_features: int = 0
    mdp_gamma: float = 0.8
    mdp_feature_kind: str = "orthonormal"

    # synth quadratic
    synth_d: int = 8
    synth_p: int = 8
    synth_n: int = 64
    synth_lambda_min: float = 1.0
    synth_lambda_max: float = 2.0
    synth_jitter: float = 0.1

    problem_seed: int = 7

    # regularizer
    reg: str = "zero"
    reg_param: float = 0.0

    # algorithm parameters
    epochs: int = 10
    eta: float = 0.0
    batch: int = 32
    iters: int = 100
    periods: int = 1
    restart_preset: str = ""
    nu: float = 0.0
    mu: float = 0.0
    eps: float = 0.0
    triples: list = field(default_factory=list)

    # run control
    seeds: list = field(default_factory=lambda: [0])
    repetitions: int = 1
    cadence: int = 0
    diagnostics: bool = True
    workers: int = 1
    wallclock: bool = False


_FIELDS = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; values are JSON when possible."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    unknown = sorted(set(mapping) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = ExperimentConfig(**mapping)
    validate_config(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text(encoding="utf-8")))


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"problem must be one of {PROBLEMS}, got {cfg.problem!r}")
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {cfg.algorithm!r}")
    if cfg.sign_mode not in (VARIANCE_PENALTY, VARIANCE_REWARD):
        raise ConfigError(f"unknown sign_mode {cfg.sign_mode!r}")
    if cfg.reg not in ("zero", "l1", "l1ball"):
        raise ConfigError(f"reg must be zero|l1|l1ball, got {cfg.reg!r}")
    if cfg.returns_scale not in ("percent", "raw"):
        raise ConfigError("returns_scale must be percent|raw")
    if not cfg.seeds:
        raise ConfigError("seeds must be a nonempty list")
    if cfg.repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    if cfg.algorithm == "restarted" and cfg.restart_preset not in RESTART_PRESETS:
        raise ConfigError(f"restarted runs need restart_preset in {RESTART_PRESETS}")
    if cfg.algorithm == "plugin-sgd" and cfg.batch < 1:
        raise ConfigError("plugin-sgd needs batch >= 1")


def build_regularizer(cfg: ExperimentConfig) -> Regularizer:
    if cfg.reg == "zero":
        return ZeroReg()
    if cfg.reg == "l1":
        return L1Reg(cfg.reg_param)
    return L1BallReg(cfg.reg_param)


@dataclass
class _ProblemSetup:
    problem: CompositeProblem
    reg: Regularizer
    n: int | None
    eta: float
    x0: np.ndarray
    notes: dict


def build_problem(cfg: ExperimentConfig) -> _ProblemSetup:
    reg = build_regularizer(cfg)
    notes: dict = {}
    if cfg.problem == "portfolio":
        if cfg.returns_csv:
            ds = ingest_returns_csv(cfg.returns_csv, take_last=cfg.take_last or None, scale=cfg.returns_scale)
            returns = ds.matrix
            notes["dataset"] = ds.provenance
        else:
            returns = synthetic_returns(
                cfg.returns_rows, cfg.returns_assets, cfg.problem_seed, cfg.returns_mean, cfg.returns_vol
            )
            notes["dataset"] = f"synthetic({cfg.returns_rows}x{cfg.returns_assets}, seed={cfg.problem_seed})"
        problem = portfolio_problem(returns, cfg.risk_weight, cfg.sign_mode)
        n = problem.oracle.n_components
        eta = cfg.eta or derive_constants(problem.oracle.smoothness_constants()).eta_max_nonconvex
        x0 = np.zeros(problem.oracle.dim_d)
        return _ProblemSetup(problem, reg, n, eta, x0, notes)
    if cfg.problem == "mdp":
        oracle = random_mdp(
            cfg.mdp_states,
            cfg.mdp_features or None,
            cfg.mdp_gamma,
            cfg.problem_seed,
            cfg.mdp_feature_kind,
        )
        problem = mdp_problem(oracle)
        eta = cfg.eta or oracle.default_step_size()
        notes["mdp"] = f"S={cfg.mdp_states} gamma={cfg.mdp_gamma} seed={cfg.problem_seed}"
        x0 = np.zeros(oracle.dim_d)
        return _ProblemSetup(problem, reg, None, eta, x0, notes)
    problem, default_reg, info = synth_quadratic_composite(
        cfg.synth_d,
        cfg.synth_p,
        cfg.synth_n,
        cfg.synth_lambda_min,
        cfg.synth_lambda_max,
        cfg.synth_jitter,
        l1_weight=cfg.reg_param if cfg.reg == "l1" else 0.0,
        seed=cfg.problem_seed,
    )
    if cfg.reg != "l1":
        default_reg = reg
    eta = cfg.eta or derive_constants(info.constants).eta_max_nonconvex
    notes["synth"] = f"d={cfg.synth_d} p={cfg.synth_p} n={cfg.synth_n} seed={cfg.problem_seed}"
    notes["phi_star"] = info.phi_star
    notes["mu"] = info.mu
    notes["nu"] = info.nu
    x0 = np.zeros(problem.oracle.dim_d)
    return _ProblemSetup(problem, default_reg, cfg.synth_n, eta, x0, notes)


def _build_schedule(cfg: ExperimentConfig, setup: _ProblemSetup) -> schedules.Schedule:
    if cfg.triples:
        return schedules.custom(setup.eta, cfg.triples)
    if cfg.problem == "mdp":
        if cfg.algorithm == "civr-adp":
            raise ConfigError("civr-adp needs a finite-sum problem; mdp runs use epoch length S")
        s = setup.problem.oracle.n_states
        plan = [(s, "full", s)] * cfg.epochs
        return schedules.custom(setup.eta, plan, kind="mdp-epoch")
    if setup.n is None:
        raise ConfigError("schedule presets need a finite-sum problem or explicit triples")
    if cfg.algorithm == "civr-adp":
        return schedules.adaptive_sqrt_finite(setup.n, cfg.epochs, eta=setup.eta)
    return schedules.constant_finite(setup.n, cfg.epochs, eta=setup.eta)


def _restart_schedule(cfg: ExperimentConfig, setup: _ProblemSetup) -> schedules.Schedule:
    consts = setup.problem.constants
    if consts is None and cfg.problem == "portfolio":
        consts = setup.problem.oracle.smoothness_constants()
    if consts is None:
        raise ConfigError("restart presets need smoothness constants for this problem")
    derived = derive_constants(consts)
    name = cfg.restart_preset
    if name == "gradient-dominant-finite":
        if not cfg.nu:
            raise ConfigError("gradient-dominant presets need nu")
        return schedules.gradient_dominant_finite(setup.n, cfg.nu, derived, eta=cfg.eta or None)
    if name == "strongly-convex-finite":
        if not cfg.mu:
            raise ConfigError("strongly-convex presets need mu")
        return schedules.strongly_convex_finite(setup.n, cfg.mu, derived, eta=cfg.eta or None)
    if not cfg.eps:
        raise ConfigError("expectation-mode restart presets need eps")
    if name == "gradient-dominant-expectation":
        return schedules.gradient_dominant_expectation(cfg.eps, cfg.nu, derived, eta=cfg.eta or None)
    return schedules.strongly_convex_expectation(cfg.eps, cfg.mu, derived, eta=cfg.eta or None)


def _run_one(cfg: ExperimentConfig, setup: _ProblemSetup, seed: int, rep: int) -> SolverResult:
    opts = TraceOptions(diagnostics=cfg.diagnostics, cadence=cfg.cadence or None)
    key = key_tuple(seed) + (rep,)
    algo = cfg.algorithm
    if algo in ("civr", "civr-adp"):
        sched = _build_schedule(cfg, setup)
        return run_civr(setup.problem, setup.reg, setup.x0, sched, seed=key, trace_opts=opts)
    if algo == "restarted":
        sched = _restart_schedule(cfg, setup)
        return run_restarted(setup.problem, setup.reg, setup.x0, sched, cfg.periods, seed=key, trace_opts=opts)
    if algo == "fullgrad":
        return baseline_prox_fullgrad(setup.problem, setup.reg, setup.x0, setup.eta, cfg.iters, trace_opts=opts)
    return baseline_prox_plugin_sgd(
        setup.problem, setup.reg, setup.x0, setup.eta, cfg.batch, cfg.iters, seed=key, trace_opts=opts
    )


def _fmt(v: float) -> str:
    return format(v, ".17g")


def write_trace_csv(trace: RunTrace, path, run_id: str, real_wallclock: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for k in range(len(trace)):
            wall = trace.wallclock_ns[k] if real_wallclock else 0
            fh.write(
                f"{run_id},{trace.epoch[k]},{trace.inner[k]},{trace.samples[k]},"
                f"{_fmt(trace.objective[k])},{_fmt(trace.grad_map_sq[k])},{wall}\n"
            )


def read_trace_csv(path) -> dict[str, np.ndarray]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            rows.append(parts)
    out = {
        "epoch": np.array([int(r[1]) for r in rows]),
        "iter": np.array([int(r[2]) for r in rows]),
        "samples": np.array([int(r[3]) for r in rows]),
        "objective": np.array([float(r[4]) for r in rows]),
        "grad_map_sq": np.array([float(r[5]) for r in rows]),
        "wallclock_ns": np.array([int(r[6]) for r in rows]),
    }
    return out


def mean_curve(traces: list[RunTrace]) -> dict[str, np.ndarray]:
    """Align traces on cumulative samples (last-value interpolation) and average."""
    if not traces:
        raise ValueError("no traces to average")
    grids = [np.asarray(t.samples, dtype=np.int64) for t in traces]
    grid = np.unique(np.concatenate(grids))
    objective = np.zeros((len(traces), grid.size))
    gmap = np.zeros((len(traces), grid.size))
    for k, t in enumerate(traces):
        s = grids[k]
        idx = np.searchsorted(s, grid, side="right") - 1
        idx = np.clip(idx, 0, s.size - 1)
        objective[k] = np.asarray(t.objective)[idx]
        gmap[k] = np.asarray(t.grad_map_sq)[idx]
    return {
        "samples": grid,
        "objective": objective.mean(axis=0),
        "grad_map_sq": gmap.mean(axis=0),
    }


def write_flat(path, mapping: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in mapping.items():
            if isinstance(value, float):
                fh.write(f"{key} = {_fmt(value)}\n")
            else:
                fh.write(f"{key} = {json.dumps(value) if not isinstance(value, str) else value}\n")


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute all (seed, repetition) runs and write traces, mean curve, summary.

    Returns the summary mapping.  Any run failure aborts with the failing
    seed and location in the message.
    """
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    setup = build_problem(cfg)
    jobs = [(seed, rep) for seed in cfg.seeds for rep in range(cfg.repetitions)]

    def execute(job):
        seed, rep = job
        try:
            return _run_one(cfg, setup, seed, rep)
        except Exception as exc:
            raise RuntimeError(f"run failed for seed={seed} rep={rep}: {exc}") from exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(execute, jobs))
    else:
        results = [execute(job) for job in jobs]

    summary: dict = {
        "problem": cfg.problem,
        "algorithm": cfg.algorithm,
        "runs": len(jobs),
    }
    for key, value in setup.notes.items():
        summary[f"note_{key}"] = value
    traces = []
    finals_obj = []
    finals_gmap = []
    total_wall = 0
    for (seed, rep), res in zip(jobs, results):
        run_id = f"s{seed}r{rep}"
        write_trace_csv(res.trace, outdir / f"run_{run_id}.csv", run_id, real_wallclock=cfg.wallclock)
        traces.append(res.trace)
        summary[f"run_{run_id}_final_objective"] = res.trace.objective[-1]
        summary[f"run_{run_id}_final_grad_map_sq"] = res.trace.grad_map_sq[-1]
        summary[f"run_{run_id}_samples"] = res.trace.samples[-1]
        summary[f"run_{run_id}_wallclock_ns"] = res.trace.wallclock_ns[-1]
        finals_obj.append(res.trace.objective[-1])
        finals_gmap.append(res.trace.grad_map_sq[-1])
        total_wall += res.trace.wallclock_ns[-1]
        for hkey, hval in res.trace.header.items():
            summary.setdefault(f"header_{hkey}", hval)
    curve = mean_curve(traces)
    with open(outdir / "mean_curve.csv", "w", encoding="utf-8") as fh:
        fh.write("samples,objective,grad_map_sq\n")
        for k in range(curve["samples"].size):
            fh.write(
                f"{curve['samples'][k]},{_fmt(curve['objective'][k])},{_fmt(curve['grad_map_sq'][k])}\n"
            )
    finals_obj_arr = np.asarray(finals_obj)
    finals_gmap_arr = np.asarray(finals_gmap)
    summary["final_objective_mean"] = float(np.nanmean(finals_obj_arr)) if finals_obj else math.nan
    summary["final_grad_map_sq_mean"] = float(np.nanmean(finals_gmap_arr)) if finals_gmap else math.nan
    summary["wallclock_ns_total"] = total_wall
    write_flat(outdir / "summary.txt", summary)
    return summary
