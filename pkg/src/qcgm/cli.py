"""Command-line entry point: ``qcgm <command> ...``.

Failures exit nonzero and print ``{"error": ..., "message": ...}`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import (
    METHODS,
    OUTPUT_ENV,
    ExperimentConfig,
    cmd_experiment,
    cmd_export_qasm,
    cmd_gen_model,
    cmd_learn,
    cmd_map,
    cmd_partition,
    cmd_sample,
)
from .inference import GRADIENT_SOURCES, AdamConfig
from .model import load_model
from .samplers import GibbsConfig, SoGConfig
from .simulator import NoiseConfig
from .structures import STRUCTURES


def _add_common(p, model=True):
    if model:
        p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcgm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="write a random model for a built-in structure")
    p.add_argument("structure", choices=sorted(STRUCTURES))
    p.add_argument("--theta-low", type=float, default=-5.0)
    p.add_argument("--theta-high", type=float, default=0.0)
    _add_common(p, model=False)

    p = sub.add_parser("sample", help="sample a model and compare with the exact pmf")
    p.add_argument("--method", choices=METHODS, default="qcgm")
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--noise-depol", type=float, default=0.0)
    p.add_argument("--noise-readout", type=float, default=0.0)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--thinning", type=int, default=100)
    p.add_argument("--sog-k", type=int)
    p.add_argument("--sog-s", type=int, default=10)
    p.add_argument("--sog-tau", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("learn", help="maximum-likelihood training with ADAM")
    p.add_argument("structure", choices=sorted(STRUCTURES), nargs="?", default="3-chain")
    p.add_argument("--source", choices=GRADIENT_SOURCES, default="qcgm")
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--step-size", type=float, default=0.1)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--n-grad", type=int, default=10000)
    p.add_argument("--data", help="CSV of training bitstrings (default: Gibbs samples of a random truth)")
    p.add_argument("--data-size", type=int, default=100000)
    p.add_argument("--truth-seed", type=int, default=0)
    _add_common(p, model=False)

    p = sub.add_parser("experiment", help="run a full structure x sampler matrix")
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("--out")

    p = sub.add_parser("export-qasm", help="write the compiled circuit as OpenQASM 3")
    _add_common(p)

    p = sub.add_parser("map", help="most probable configuration")
    p.add_argument("--model", required=True)

    p = sub.add_parser("partition", help="estimate Z from the circuit success rate")
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--exact", action="store_true", help="use the exact success probability")
    _add_common(p)
    return parser


def _print(obj):
    print(json.dumps(obj, indent=2, default=str))


def run(args) -> None:
    if args.command == "gen-model":
        print(cmd_gen_model(args.structure, args.seed, args.out, args.theta_low, args.theta_high))
    elif args.command == "sample":
        model = load_model(args.model)
        noise = None
        if args.noise_depol or args.noise_readout:
            noise = NoiseConfig(args.noise_readout, args.noise_depol)
        report = cmd_sample(
            model, args.method, args.shots, args.seed, args.out, noise,
            gibbs=GibbsConfig(args.burn_in, args.thinning),
            sog=SoGConfig(args.sog_k, args.sog_s, args.sog_tau),
            stem=Path(args.model).stem,
        )
        _print({k: report[k] for k in ("method", "mode", "comparison", "artifacts")})
    elif args.command == "learn":
        adam = AdamConfig(args.step_size, args.beta1, args.beta2, iterations=args.iterations,
                          n_grad=args.n_grad, source=args.source, seed=args.seed)
        report = cmd_learn(args.structure, adam, truth_seed=args.truth_seed, data_size=args.data_size,
                           data_seed=args.seed, data_path=args.data, out=args.out)
        _print({k: report[k] for k in ("nll_init", "nll_final", "nll_optimum", "optimum_check", "artifacts")})
    elif args.command == "experiment":
        cfg = ExperimentConfig.from_file(args.config)
        if args.out:
            cfg.out = args.out
        payload = cmd_experiment(cfg)
        _print(payload["summary"])
    elif args.command == "export-qasm":
        print(cmd_export_qasm(load_model(args.model), args.out, Path(args.model).stem))
    elif args.command == "map":
        _print(cmd_map(load_model(args.model)))
    elif args.command == "partition":
        _print(cmd_partition(load_model(args.model), args.shots, args.seed, args.exact))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
