"""Command-line front-end.

Subcommands:

* ``run <spec-file>``  -- execute an experiment file and write metrics.
* ``leakage``          -- worst-case leakage bound for a coding plan.
* ``roundtrip``        -- encode/apply/decode error for a named function.
* ``nodes``            -- print the node families of a coding plan.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .codec import NoiseSpec, roundtrip_error
from .harness import SpecError, load_spec, run_experiment
from .interpolation import DEFAULT_NOISE_SHIFT, make_plan
from .privacy import (
    EXHAUSTIVE,
    GREEDY,
    PrivacyConfig,
    RANDOM_SAMPLED,
    max_secure_amplitude,
    worst_case_leakage,
)

FUNCTIONS = {
    "identity": lambda v: v,
    "square": lambda v: v * v,
    "relu": lambda v: np.maximum(v, 0.0),
    "affine": lambda v: 2.0 * v + 1.0,
}


def _add_plan_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--N", type=int, required=True, help="worker count")
    parser.add_argument("--K", type=int, required=True, help="data points per coding group")
    parser.add_argument("--T", type=int, required=True, help="noise blocks")
    parser.add_argument("--shift", type=float, default=DEFAULT_NOISE_SHIFT,
                        help="noise-node shift (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbacc")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec file")
    p_run.add_argument("spec", help="YAML experiment file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--strategy", choices=[EXHAUSTIVE, GREEDY, RANDOM_SAMPLED],
                       default=None)

    p_leak = sub.add_parser("leakage", help="worst-case leakage bound")
    _add_plan_args(p_leak)
    p_leak.add_argument("--sigma", type=float, required=True, help="noise std dev scale")
    p_leak.add_argument("--c", type=int, required=True, help="colluder count")
    p_leak.add_argument("--s", type=float, default=1.0, help="input amplitude bound")
    p_leak.add_argument("--epsilon", type=float, default=1.0, help="target bits/element")
    p_leak.add_argument("--strategy", choices=[EXHAUSTIVE, GREEDY, RANDOM_SAMPLED],
                        default=GREEDY)
    p_leak.add_argument("--samples", type=int, default=1000,
                        help="draws for the random strategy")
    p_leak.add_argument("--seed", type=int, default=0)
    p_leak.add_argument("--report-max-s", action="store_true",
                        help="when the bound fails at the given s, also report the "
                             "largest s that satisfies epsilon")

    p_rt = sub.add_parser("roundtrip", help="encode/apply/decode error")
    _add_plan_args(p_rt)
    p_rt.add_argument("--function", choices=sorted(FUNCTIONS), default="identity")
    p_rt.add_argument("--sigma", type=float, default=0.0)
    p_rt.add_argument("--subset-size", type=int, default=None,
                      help="number of fastest results used (default: all N)")
    p_rt.add_argument("--extent", type=int, default=None,
                      help="coding-axis extent of the test tensor (default: 4K)")
    p_rt.add_argument("--seed", type=int, default=0)

    p_nodes = sub.add_parser("nodes", help="print node families")
    _add_plan_args(p_nodes)
    return parser


def cmd_leakage(args) -> int:
    if args.c < 1:
        print("error: need at least one colluder", file=sys.stderr)
        return 2
    try:
        plan = make_plan(args.K, args.T, args.N, args.shift)
        cfg = PrivacyConfig(K=args.K, T=args.T, sigma_n=args.sigma, c=args.c,
                            s=args.s, epsilon=args.epsilon)
        report = worst_case_leakage(plan, cfg, strategy=args.strategy,
                                    samples=args.samples, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = report.to_dict() | {
        "epsilon": args.epsilon,
        "meets_epsilon": bool(report.i_L <= args.epsilon),
        "config": {"N": args.N, "K": args.K, "T": args.T, "sigma_n": args.sigma,
                   "c": args.c, "s": args.s, "shift": args.shift},
    }
    if args.report_max_s and report.i_L > args.epsilon:
        payload["max_s_for_epsilon"] = max_secure_amplitude(
            plan, cfg, args.epsilon, strategy=args.strategy)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_roundtrip(args) -> int:
    try:
        plan = make_plan(args.K, args.T, args.N, args.shift)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    extent = args.extent if args.extent is not None else 4 * args.K
    rng = np.random.default_rng(args.seed)
    x = rng.normal(0.0, 1.0, size=extent)
    subset_size = args.subset_size if args.subset_size is not None else args.N
    if not 1 <= subset_size <= args.N:
        print(f"error: subset size must be in [1, {args.N}]", file=sys.stderr)
        return 2
    subset = sorted(rng.choice(args.N, size=subset_size, replace=False).tolist()) \
        if subset_size < args.N else list(range(args.N))
    noise = NoiseSpec(sigma_n=args.sigma, T=args.T, seed=args.seed)
    err = roundtrip_error(x, FUNCTIONS[args.function], plan, noise, subset)
    print(json.dumps({
        "function": args.function, "max_relative_error": err,
        "subset_size": subset_size,
        "config": {"N": args.N, "K": args.K, "T": args.T, "sigma_n": args.sigma,
                   "shift": args.shift, "extent": extent, "seed": args.seed},
    }, indent=2, sort_keys=True))
    return 0


def cmd_nodes(args) -> int:
    try:
        plan = make_plan(args.K, args.T, args.N, args.shift)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({
        "data_nodes": plan.data_nodes.values.tolist(),
        "noise_nodes": plan.noise_nodes.values.tolist() if plan.noise_nodes else [],
        "encoder_nodes": plan.betas.tolist(),
        "perturbed_encoder_indices": list(plan.perturbed),
    }, indent=2, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    try:
        spec = load_spec(args.spec)
        summary = run_experiment(spec, output_dir=args.output_dir,
                                 seed=args.seed, strategy=args.strategy)
    except SpecError as exc:
        print(f"error: invalid experiment spec: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for cell in summary["cells"]:
        leak = cell["leakage"]
        leak_txt = f" i_L={leak['i_L']:.4g}" if leak else ""
        print(f"cell {cell['cell']}: final_loss={cell['final_loss']:.6g} "
              f"final_accuracy={cell['final_accuracy']:.4g}{leak_txt}")
    print(f"wrote {spec.output_dir}/rounds.csv and {spec.output_dir}/summary.json")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "leakage": cmd_leakage,
               "roundtrip": cmd_roundtrip, "nodes": cmd_nodes}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
