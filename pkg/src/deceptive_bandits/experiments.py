"""Configuration-driven experiment harness with seeded, reproducible runs.

Each experiment fans episodes out over seeds (optionally across processes),
aggregates per-step series into means with 95% confidence intervals, and
writes CSV with the fixed header ``time,series_name,mean,ci_low,ci_high``
(floats at 12 significant digits, so reruns are byte-identical).

Presets reproduce the four standard setups:

* ``fig1``  - pull-count growth under round-robin boosting vs the predictor.
* ``fig2``  - identification error for KL budgets {0, 1e-3, 1e-2, 1e-1, 1, inf}.
* ``fig3``  - per-arm sampling shares under equal vs asymmetric public gaps.
* ``fig4``  - convergence of the realized exponent to the optimal allocation's.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import _kernels
from .agent import AgentConfig, run_episode
from .allocation import gap_structure, gamma_value, solve_allocation
from .core import BanditInstance, RandomSource
from .decay_process import DecayProcessParams, predicted_pulls, simulate_decay
from .kl_boost import boost_curve
from .reference_policy import QuadratureRule

log = logging.getLogger(__name__)

KINDS = ("rate", "eps_sweep", "asymmetry", "gamma_convergence", "decay", "allocate", "boost_curve")
SCHEDULES = ("algorithm1", "round_robin_suboptimal")
SERIES_HEADER = ("time", "series_name", "mean", "ci_low", "ci_high")
CURVE_HEADER = ("p", "q_star", "q_hat")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def parse_epsilon(value) -> float:
    """Budget values: numbers, or the strings 'inf' / 'unconstrained' for no budget."""
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "infinity", "unconstrained"):
            return math.inf
        try:
            value = float(token)
        except ValueError:
            raise ConfigError(f"cannot parse epsilon value {value!r}") from None
    eps = float(value)
    if eps < 0 or math.isnan(eps):
        raise ConfigError(f"epsilon must be nonnegative, got {eps!r}")
    return eps


def format_epsilon(eps: float) -> str:
    return "inf" if math.isinf(eps) else f"{eps:g}"


@dataclass
class ExperimentConfig:
    """One experiment: what to run, on which instances, with which budgets and seeds."""

    kind: str
    instances: list = field(default_factory=list)
    epsilons: list = field(default_factory=lambda: [0.1])
    seeds: int = 50
    horizon: int = 100_000
    output_path: Optional[str] = None
    boost_schedule: str = "algorithm1"
    base_seed: int = 0
    threads: Optional[int] = None
    grid_points: int = 1000
    delta: float = 0.05
    use_approx_boost: bool = False
    decay_c: float = 1.0
    decay_m0: float = 1.0
    curve_p_min: float = 1e-10
    curve_p_max: float = 0.5
    curve_points: int = 200

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.boost_schedule not in SCHEDULES:
            raise ConfigError(f"unknown boost_schedule {self.boost_schedule!r}; expected one of {SCHEDULES}")
        self.instances = [inst if isinstance(inst, BanditInstance) else BanditInstance.from_dict(inst)
                          for inst in self.instances]
        self.epsilons = [parse_epsilon(e) for e in self.epsilons]
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if self.horizon < 2:
            raise ConfigError("horizon must be >= 2")
        if self.kind in ("rate", "eps_sweep", "asymmetry", "gamma_convergence", "allocate"):
            if not self.instances:
                raise ConfigError(f"kind {self.kind!r} needs at least one instance")
            k = self.instances[0].n_arms
            if self.kind != "allocate" and self.horizon < k + 1:
                raise ConfigError("horizon must exceed the initialization round")
        if not self.epsilons:
            raise ConfigError("need at least one epsilon")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["instances"] = [inst.to_dict() for inst in self.instances]
        d["epsilons"] = [format_epsilon(e) for e in self.epsilons]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "kind" not in d:
            raise ConfigError("config is missing required key 'kind'")
        return cls(**d)

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        return cls.from_dict(data)

    def to_yaml(self, path):
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)


def preset(name: str, **overrides) -> ExperimentConfig:
    """Built-in experiment presets; keyword overrides replace any config field."""
    if name == "fig1":
        cfg = dict(kind="rate",
                   instances=[BanditInstance([0.6, 0.3, 0.0, 0.2], [0.2, 0.5, 0.1, 0.0])],
                   epsilons=[0.1], seeds=50, horizon=300_000,
                   boost_schedule="round_robin_suboptimal")
    elif name == "fig2":
        cfg = dict(kind="eps_sweep",
                   instances=[BanditInstance([0.6, 0.3, 0.0, 0.2], [0.2, 0.5, 0.1, 0.0])],
                   epsilons=[0.0, 1e-3, 1e-2, 1e-1, 1.0, math.inf], seeds=100, horizon=100_000)
    elif name == "fig3":
        cfg = dict(kind="asymmetry",
                   instances=[BanditInstance([0.6, 0.1, 0.1, 0.1], [0.2, 0.5, 0.0, 0.0]),
                              BanditInstance([0.6, 0.5, 0.0, 0.3], [0.2, 0.5, 0.0, 0.0])],
                   epsilons=[0.1], seeds=100, horizon=100_000)
    elif name == "fig4":
        cfg = dict(kind="gamma_convergence",
                   instances=[BanditInstance([0.6, 0.3, 0.1], [0.2, 0.5, 0.3]),
                              BanditInstance([0.8, 0.3, 0.6], [0.1, 0.35, 0.2])],
                   epsilons=[0.1], seeds=50, horizon=200_000)
    else:
        raise ConfigError(f"unknown preset {name!r}; expected fig1|fig2|fig3|fig4")
    cfg.update(overrides)
    return ExperimentConfig(**cfg)


@dataclass(frozen=True)
class AggregateSeries:
    """Across-seed mean with a 95% normal-approximation confidence band."""

    times: np.ndarray
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_seeds: int

    @property
    def single_seed(self) -> bool:
        return self.n_seeds == 1


def aggregate(values, times) -> AggregateSeries:
    """Aggregate a (seeds, times) array: mean and mean +- 1.96 * stddev / sqrt(seeds)."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times)
    if values.ndim != 2 or values.shape[1] != times.size:
        raise ValueError("values must be (seeds, times)")
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n == 1:
        log.warning("aggregating a single seed: confidence band is degenerate")
        return AggregateSeries(times, mean, mean.copy(), mean.copy(), 1)
    half = 1.96 * values.std(axis=0, ddof=1) / math.sqrt(n)
    return AggregateSeries(times, mean, mean - half, mean + half, n)


def constant_series(times, values) -> AggregateSeries:
    """Deterministic reference curve: the band collapses onto the line."""
    values = np.asarray(values, dtype=float)
    return AggregateSeries(np.asarray(times), values, values.copy(), values.copy(), 1)


def make_grid(horizon: int, points: int, after: int) -> np.ndarray:
    """Recording times: about ``points`` evenly spaced steps in (after, horizon]."""
    step = max(1, horizon // points)
    grid = np.arange(step, horizon + 1, step, dtype=np.int64)
    grid = grid[grid > after]
    if grid.size == 0 or grid[-1] != horizon:
        grid = np.append(grid, horizon)
    return grid


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: dict
    audit: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    csv_path: Optional[str] = None


# --- seed-parallel fan-out -----------------------------------------------------

def _episode_task(args):
    """Worker: one fixed-horizon episode; returns compact grid snapshots."""
    (inst, eps, key, base_seed, horizon, delta, use_approx, grid) = args
    rng = RandomSource(base_seed, spawn_key=key)
    cfg = AgentConfig(epsilon=eps, delta=delta, max_steps=horizon, use_approx_boost=use_approx)
    res = run_episode(inst, cfg, rng, fixed_horizon=True, record_steps=False, grid=grid)
    return key, res.grid_error_prob, res.grid_counts, res.grid_boost_counts, \
        res.max_kl_spent, res.eps_zero_bitwise


def _schedule_task(args):
    """Worker: one round-robin boosting run (public side only)."""
    (inst, eps, key, base_seed, horizon, use_approx, grid, targets) = args
    rng = RandomSource(base_seed, spawn_key=key)
    rule = QuadratureRule.gauss_hermite()
    k = inst.n_arms
    pub_counts = np.zeros(k, dtype=np.int64)
    pub_means = np.zeros(k)
    boost_counts = np.zeros(k, dtype=np.int64)
    grid_counts = np.zeros((grid.size, k), dtype=np.int64)
    _, max_kl = _kernels.schedule_loop(
        rng.gen, inst.public_means, inst.sigma, eps, use_approx,
        np.asarray(targets, dtype=np.int64), horizon, 1, rule.nodes, rule.weights,
        grid, pub_counts, pub_means, boost_counts, grid_counts)
    return key, grid_counts, max_kl


def _decay_task(args):
    (c, m0, key, base_seed, horizon, grid) = args
    rng = RandomSource(base_seed, spawn_key=key)
    trace = simulate_decay(DecayProcessParams(c=c, m0=m0, horizon=horizon), rng)
    return key, trace.success_counts[grid]


def _fan_out(task_fn, payloads, threads):
    """Run payloads (possibly in processes); results keyed and re-ordered deterministically."""
    if threads is None:
        threads = os.cpu_count() or 1
    results = {}
    if threads <= 1 or len(payloads) <= 1:
        for p in payloads:
            out = task_fn(p)
            results[out[0]] = out[1:]
        return results
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for out in pool.map(task_fn, payloads, chunksize=1):
            results[out[0]] = out[1:]
    return results


# --- experiment drivers ----------------------------------------------------------

def _run_rate(config: ExperimentConfig) -> ExperimentResult:
    inst = config.instances[0]
    eps = config.epsilons[0]
    if config.boost_schedule != "round_robin_suboptimal":
        raise ConfigError("rate experiments use boost_schedule=round_robin_suboptimal")
    grid = make_grid(config.horizon, config.grid_points, inst.n_arms)
    i_star = inst.best_public_arm
    targets = [a for a in range(inst.n_arms) if a != i_star]
    payloads = [(inst, eps, (0, 0, s), config.base_seed, config.horizon,
                 config.use_approx_boost, grid, targets) for s in range(config.seeds)]
    results = _fan_out(_schedule_task, payloads, config.threads)
    counts = np.stack([results[(0, 0, s)][0] for s in range(config.seeds)])  # (seeds, G, K)
    share = 1.0 / len(targets)
    series: dict[str, AggregateSeries] = {}
    for a in targets:
        series[f"pulls_arm{a}"] = aggregate(counts[:, :, a], grid)
        phi = np.array([predicted_pulls(eps, inst.variance, float(inst.public_means[i_star] - inst.public_means[a]),
                                        share, int(t)) for t in grid])
        series[f"phi_arm{a}"] = constant_series(grid, phi)
    max_kl = max(results[(0, 0, s)][1] for s in range(config.seeds))
    return ExperimentResult(config, series, audit={"max_kl": max_kl, "kl_ok": max_kl <= eps + 1e-9})


def _run_eps_sweep(config: ExperimentConfig) -> ExperimentResult:
    inst = config.instances[0]
    grid = make_grid(config.horizon, config.grid_points, inst.n_arms)
    payloads = []
    for j, eps in enumerate(config.epsilons):
        for s in range(config.seeds):
            payloads.append((inst, eps, (0, j, s), config.base_seed, config.horizon,
                             config.delta, config.use_approx_boost, grid))
    results = _fan_out(_episode_task, payloads, config.threads)
    series = {}
    audit = {"max_kl_by_eps": {}, "eps_zero_bitwise": True, "kl_ok": True}
    for j, eps in enumerate(config.epsilons):
        errs = np.stack([results[(0, j, s)][0] for s in range(config.seeds)])
        label = format_epsilon(eps)
        series[f"eps={label}"] = aggregate(errs, grid)
        max_kl = max(results[(0, j, s)][3] for s in range(config.seeds))
        audit["max_kl_by_eps"][label] = max_kl
        if not math.isinf(eps) and max_kl > eps + 1e-9:
            audit["kl_ok"] = False
        if eps == 0.0 and not all(results[(0, j, s)][4] for s in range(config.seeds)):
            audit["eps_zero_bitwise"] = False
    return ExperimentResult(config, series, audit=audit)


def _run_asymmetry(config: ExperimentConfig) -> ExperimentResult:
    eps = config.epsilons[0]
    series = {}
    audit = {"kl_ok": True}
    for i, inst in enumerate(config.instances):
        grid = make_grid(config.horizon, config.grid_points, inst.n_arms)
        payloads = [(inst, eps, (i, 0, s), config.base_seed, config.horizon,
                     config.delta, config.use_approx_boost, grid) for s in range(config.seeds)]
        results = _fan_out(_episode_task, payloads, config.threads)
        counts = np.stack([results[(i, 0, s)][1] for s in range(config.seeds)])
        shares = counts / grid[None, :, None]
        for a in range(inst.n_arms):
            series[f"inst{i + 1}_share_arm{a}"] = aggregate(shares[:, :, a], grid)
        max_kl = max(results[(i, 0, s)][3] for s in range(config.seeds))
        if not math.isinf(eps) and max_kl > eps + 1e-9:
            audit["kl_ok"] = False
    return ExperimentResult(config, series, audit=audit)


def _gamma_gap_series(boosts, grid, inst) -> np.ndarray:
    """Gamma* - Gamma(w_t) per seed: w_t from boost tallies on arms != the true best public arm."""
    gaps = gap_structure(inst)
    gamma_star = solve_allocation(gaps).gamma_star
    keep = list(gaps.boostable_arms)
    out = np.empty(boosts.shape[:2])
    for s in range(boosts.shape[0]):
        for g in range(boosts.shape[1]):
            w = boosts[s, g, keep].astype(float)
            total = w.sum()
            if total <= 0:
                out[s, g] = gamma_star
            else:
                out[s, g] = gamma_star - gamma_value(w / total, gaps)
    return out


def _run_gamma_convergence(config: ExperimentConfig) -> ExperimentResult:
    eps = config.epsilons[0]
    series = {}
    extra = {}
    audit = {"kl_ok": True}
    for i, inst in enumerate(config.instances):
        grid = make_grid(config.horizon, config.grid_points, inst.n_arms)
        payloads = [(inst, eps, (i, 0, s), config.base_seed, config.horizon,
                     config.delta, config.use_approx_boost, grid) for s in range(config.seeds)]
        results = _fan_out(_episode_task, payloads, config.threads)
        boosts = np.stack([results[(i, 0, s)][2] for s in range(config.seeds)])
        gap_series = _gamma_gap_series(boosts, grid, inst)
        series[f"inst{i + 1}_gamma_gap"] = aggregate(gap_series, grid)
        extra[f"inst{i + 1}_solution"] = solve_allocation(gap_structure(inst))
        max_kl = max(results[(i, 0, s)][3] for s in range(config.seeds))
        if not math.isinf(eps) and max_kl > eps + 1e-9:
            audit["kl_ok"] = False
    return ExperimentResult(config, series, audit=audit, extra=extra)


def _run_decay(config: ExperimentConfig) -> ExperimentResult:
    grid = make_grid(config.horizon, config.grid_points, 0)
    payloads = [(config.decay_c, config.decay_m0, (0, 0, s), config.base_seed,
                 config.horizon, grid) for s in range(config.seeds)]
    results = _fan_out(_decay_task, payloads, config.threads)
    counts = np.stack([results[(0, 0, s)][0] for s in range(config.seeds)]).astype(float)
    series = {
        "m_t": aggregate(counts, grid),
        "sqrt_2ct": constant_series(grid, np.sqrt(2.0 * config.decay_c * grid)),
    }
    return ExperimentResult(config, series)


def _run_allocate(config: ExperimentConfig) -> ExperimentResult:
    extra = {f"inst{i + 1}": solve_allocation(gap_structure(inst))
             for i, inst in enumerate(config.instances)}
    return ExperimentResult(config, series={}, extra=extra)


def _run_boost_curve(config: ExperimentConfig) -> ExperimentResult:
    rows = boost_curve(config.epsilons[0], config.curve_p_min, config.curve_p_max,
                       config.curve_points)
    return ExperimentResult(config, series={}, extra={"curve": rows})


def write_series_csv(path, series: dict):
    """Fixed schema (time, series_name, mean, ci_low, ci_high), 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SERIES_HEADER) + "\n")
        for name, agg in series.items():
            for t, m, lo, hi in zip(agg.times, agg.mean, agg.ci_low, agg.ci_high):
                fh.write(f"{int(t)},{name},{m:.12g},{lo:.12g},{hi:.12g}\n")


def write_curve_csv(path, rows: np.ndarray):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CURVE_HEADER) + "\n")
        for p, q_star, q_hat in rows:
            fh.write(f"{p:.12g},{q_star:.12g},{q_hat:.12g}\n")


def write_allocation_csv(path, solutions: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("instance,key,value\n")
        for name, sol in solutions.items():
            fh.write(f"{name},gamma_star,{sol.gamma_star:.12g}\n")
            fh.write(f"{name},y_star,{sol.y_star:.12g}\n")
            fh.write(f"{name},case,{sol.case}\n")
            for arm, w in zip(sol.arms, sol.weights.probs):
                fh.write(f"{name},w_{arm},{w:.12g}\n")


_DRIVERS = {
    "rate": _run_rate,
    "eps_sweep": _run_eps_sweep,
    "asymmetry": _run_asymmetry,
    "gamma_convergence": _run_gamma_convergence,
    "decay": _run_decay,
    "allocate": _run_allocate,
    "boost_curve": _run_boost_curve,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one experiment and (when ``output_path`` is set) write its CSV."""
    log.info("running %s: %d seed(s), horizon %d", config.kind, config.seeds, config.horizon)
    result = _DRIVERS[config.kind](config)
    if config.output_path:
        if config.kind == "boost_curve":
            write_curve_csv(config.output_path, result.extra["curve"])
        elif config.kind == "allocate":
            write_allocation_csv(config.output_path, result.extra)
        else:
            write_series_csv(config.output_path, result.series)
        result.csv_path = str(config.output_path)
        log.info("wrote %s", config.output_path)
    return result
