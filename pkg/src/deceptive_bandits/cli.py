"""Command-line entry point.

Subcommands:
  simulate     error-probability sweeps and asymmetry runs (presets fig2 / fig3)
  rate         pull-count growth under round-robin boosting (preset fig1), or
               the raw decaying-success process with --kind decay
  gamma        convergence of the realized exponent to the optimum (preset fig4)
  allocate     solve the optimal boosting allocation for an instance config
  boost-curve  (p, q*, q_hat) table for a log-spaced grid of base probabilities
"""

from __future__ import annotations

import argparse
import logging
import sys

from .allocation import gap_structure, solve_allocation
from .experiments import ConfigError, ExperimentConfig, preset, run_experiment


def _add_common(p: argparse.ArgumentParser, default_preset: str | None):
    p.add_argument("--config", help="YAML experiment config (overrides the preset)")
    p.add_argument("--preset", choices=["fig1", "fig2", "fig3", "fig4"], default=default_preset,
                   help="built-in experiment preset")
    p.add_argument("--seeds", type=int, help="number of seeded runs")
    p.add_argument("--horizon", type=int, help="steps per run")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    p.add_argument("--base-seed", type=int, help="master seed for the run family")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("-v", "--verbose", action="store_true")


def _build_config(args, allowed_kinds: tuple[str, ...]) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_yaml(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("provide --config or --preset")
    for attr, key in (("seeds", "seeds"), ("horizon", "horizon"), ("threads", "threads"),
                      ("base_seed", "base_seed")):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, key, value)
    if args.out:
        cfg.output_path = args.out
    if cfg.kind not in allowed_kinds:
        raise ConfigError(f"this subcommand runs kinds {allowed_kinds}, got {cfg.kind!r}")
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _build_config(args, ("eps_sweep", "asymmetry"))
    result = run_experiment(cfg)
    for name, agg in result.series.items():
        print(f"{name}: final mean {agg.mean[-1]:.6g}")
    return 0


def _cmd_rate(args) -> int:
    if args.kind == "decay":
        cfg = ExperimentConfig(kind="decay", seeds=args.seeds or 50,
                               horizon=args.horizon or 1_000_000,
                               decay_c=args.c, decay_m0=args.m0,
                               base_seed=args.base_seed or 0, threads=args.threads,
                               output_path=args.out)
    else:
        args.preset = args.preset or "fig1"
        cfg = _build_config(args, ("rate",))
    result = run_experiment(cfg)
    for name, agg in result.series.items():
        print(f"{name}: final mean {agg.mean[-1]:.6g}")
    return 0


def _cmd_gamma(args) -> int:
    args.preset = args.preset or "fig4"
    cfg = _build_config(args, ("gamma_convergence",))
    result = run_experiment(cfg)
    for name, agg in result.series.items():
        print(f"{name}: final mean {agg.mean[-1]:.6g}")
    return 0


def _cmd_allocate(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_yaml(args.config)
        if cfg.kind != "allocate":
            cfg.kind = "allocate"
        instances = cfg.instances
    else:
        instances = preset(args.preset or "fig4").instances
    solutions = {}
    for i, inst in enumerate(instances):
        sol = solve_allocation(gap_structure(inst))
        solutions[f"inst{i + 1}"] = sol
        weights = ", ".join(f"w[{a}]={w:.6g}" for a, w in zip(sol.arms, sol.weights.probs))
        print(f"inst{i + 1}: gamma_star={sol.gamma_star:.6g} y_star={sol.y_star:.6g} "
              f"case={sol.case} {weights}")
    if args.out:
        from .experiments import write_allocation_csv
        write_allocation_csv(args.out, solutions)
    return 0


def _cmd_boost_curve(args) -> int:
    cfg = ExperimentConfig(kind="boost_curve", epsilons=[args.epsilon],
                           curve_p_min=args.p_min, curve_p_max=args.p_max,
                           curve_points=args.points, output_path=args.out)
    result = run_experiment(cfg)
    if not args.out:
        rows = result.extra["curve"]
        print("p,q_star,q_hat")
        for p, q_star, q_hat in rows:
            print(f"{p:.12g},{q_star:.12g},{q_hat:.12g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deceptive-bandits",
                                     description="Deceptive exploration in Gaussian bandits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="error-probability / asymmetry experiments")
    _add_common(p, None)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("rate", help="pull-count growth or raw decay process")
    _add_common(p, None)
    p.add_argument("--kind", choices=["fig1", "decay"], default="fig1")
    p.add_argument("--c", type=float, default=1.0, help="decay numerator c")
    p.add_argument("--m0", type=float, default=1.0, help="decay offset m0")
    p.set_defaults(fn=_cmd_rate)

    p = sub.add_parser("gamma", help="exponent convergence experiment")
    _add_common(p, None)
    p.set_defaults(fn=_cmd_gamma)

    p = sub.add_parser("allocate", help="solve the optimal boosting allocation")
    p.add_argument("--config", help="YAML config with instances")
    p.add_argument("--preset", choices=["fig1", "fig2", "fig3", "fig4"])
    p.add_argument("--out", help="output CSV path")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(fn=_cmd_allocate)

    p = sub.add_parser("boost-curve", help="(p, q*, q_hat) table at fixed epsilon")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--p-min", type=float, default=1e-10, dest="p_min")
    p.add_argument("--p-max", type=float, default=0.5, dest="p_max")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(fn=_cmd_boost_curve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
