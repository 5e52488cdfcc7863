"""Command-line entry point.

Exit codes: 0 on success, 2 on a configuration error, 1 on any other
failure.  Messages go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, MisgpError
from .experiments import (
    SCENARIOS,
    ExperimentConfig,
    gamma_rows,
    run_coverage,
    run_experiment,
    scenario_config,
    write_outputs,
)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="misgp", description="Misspecified GP bandit experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp):
        sp.add_argument("--seed", type=int, help="override the base seed")
        sp.add_argument("--replications", type=int, help="override the replication count")
        sp.add_argument("--out", help="output directory (run) or file (gamma, coverage)")

    run = sub.add_parser("run", help="execute an experiment")
    run.add_argument("config", nargs="?", help="JSON config file")
    run.add_argument("--scenario", choices=sorted(SCENARIOS), help="use a built-in scenario instead")
    overrides(run)

    gamma = sub.add_parser("gamma", help="print information gain estimates as CSV")
    gamma.add_argument("config")
    overrides(gamma)

    cov = sub.add_parser("coverage", help="confidence band coverage Monte Carlo")
    cov.add_argument("config")
    overrides(cov)

    sc = sub.add_parser("scenarios", help="built-in scenarios")
    sc.add_argument("action", choices=["list", "show"])
    sc.add_argument("name", nargs="?")
    return p


def _load(args) -> ExperimentConfig:
    if getattr(args, "scenario", None):
        config = ExperimentConfig.from_dict(scenario_config(args.scenario))
    elif args.config is None:
        raise ConfigError("give a config file or --scenario")
    else:
        config = ExperimentConfig.load(args.config)
    if args.seed is not None or args.replications is not None:
        config = config.with_overrides(seed=args.seed, replications=args.replications)
    return config


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "scenarios":
            if args.action == "list":
                for name in SCENARIOS:
                    print(name)
            else:
                print(json.dumps(scenario_config(args.name or ""), indent=2))
            return 0
        config = _load(args)
        if args.command == "run":
            traces, summary = run_experiment(config)
            out = args.out or config.output or f"runs/{config.name}"
            trace_path, summary_path = write_outputs(out, traces, summary)
            print(f"wrote {trace_path} and {summary_path}")
            print(
                f"{summary.algorithm}: mean R*_T = {summary.mean_regret_star:.4f} "
                f"(std {summary.std_regret_star:.4f}), mean R_T = {summary.mean_regret_tilde:.4f}"
            )
        elif args.command == "gamma":
            lines = ["method,t,lambda,value"]
            lines += [f"{m},{t},{lam:g},{v:.6f}" for m, t, lam, v in gamma_rows(config)]
            _emit("\n".join(lines) + "\n", args.out)
        else:
            _emit(json.dumps(run_coverage(config), indent=2) + "\n", args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MisgpError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
