"""Experiment configuration, orchestration and metrics emission.

An experiment file is YAML (nested key-value).  The privacy section accepts
scalars or sweep lists for sigma_n, T and c; the cartesian product of the
sweep lists defines the experiment cells.  Per-round metrics go to a CSV
table (one record per round, carrying the full resolved configuration) and
per-cell results to a JSON summary.  All randomness derives from one root
seed, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import yaml

from . import learners, protocols
from .codec import write_tensor
from .interpolation import DEFAULT_NOISE_SHIFT, make_plan
from .privacy import GREEDY, PrivacyConfig, worst_case_leakage
from .protocols import (
    DLCD_SECURE_TRAINING,
    DLDD_SECURE_AGGREGATION,
    DLDD_SECURE_TRAINING,
    NetworkConfig,
    SchemeConfig,
    StragglerModel,
    run_scheme,
)

CODED_SCHEMES = (DLCD_SECURE_TRAINING, DLDD_SECURE_AGGREGATION, DLDD_SECURE_TRAINING)

ROUND_COLUMNS = [
    "scheme", "cell", "N", "K", "T", "sigma_n", "c", "s", "epsilon", "shift",
    "lr", "batch_size", "epochs_per_round", "rounds", "seed", "strategy",
    "loss_kind", "agg_rule", "dataset", "samples", "features", "hidden",
    "activation", "separation", "round", "loss", "accuracy",
    "messages", "elements", "encode_ops", "encode_elements",
    "decode_ops", "decode_elements", "train_ops", "train_elements",
]


class SpecError(ValueError):
    """Invalid experiment specification."""


def _as_list(value) -> list:
    if isinstance(value, list):
        if not value:
            raise SpecError("sweep lists must be nonempty")
        return value
    return [value]


@dataclass
class ExperimentSpec:
    scheme: str
    seed: int
    rounds: int
    n_nodes: int
    straggler: StragglerModel
    K: int
    shift: float
    sigma_n_values: list[float]
    T_values: list[int]
    c_values: list[int]
    s: float
    epsilon: float
    lr: float
    batch_size: int
    epochs_per_round: int
    loss: str
    agg_rule: str
    dataset: str
    samples: int
    features: int
    hidden: list[int]
    activation: str
    separation: float
    output_dir: str
    strategy: str = GREEDY
    raw: dict = field(default_factory=dict, repr=False)


def load_spec(path: str) -> ExperimentSpec:
    if not os.path.exists(path):
        raise SpecError(f"experiment file {path!r} does not exist")
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise SpecError("experiment file must hold a mapping at the top level")
    return spec_from_dict(raw)


def spec_from_dict(raw: dict) -> ExperimentSpec:
    try:
        scheme = raw["scheme"]
    except KeyError:
        raise SpecError("missing required key 'scheme'") from None
    if scheme not in protocols.SCHEMES:
        raise SpecError(f"unknown scheme {scheme!r}; choose one of {protocols.SCHEMES}")

    net = raw.get("network") or {}
    plan_raw = raw.get("plan") or {}
    privacy_raw = raw.get("privacy") or {}
    training = raw.get("training") or {}

    straggler_raw = net.get("straggler") or {"kind": "none"}
    if isinstance(straggler_raw, str):
        straggler_raw = {"kind": straggler_raw}

    try:
        straggler = StragglerModel(
            kind=straggler_raw.get("kind", "none"),
            count=int(straggler_raw.get("count", 0)),
            keep_n=int(straggler_raw.get("keep_n", 0)),
            seed=int(straggler_raw.get("seed", 0)))
        spec = ExperimentSpec(
            scheme=scheme,
            seed=int(raw.get("seed", 0)),
            rounds=int(raw.get("rounds", 10)),
            n_nodes=int(net.get("nodes", 8)),
            straggler=straggler,
            K=int(plan_raw.get("K", 1)),
            shift=float(plan_raw.get("shift", DEFAULT_NOISE_SHIFT)),
            sigma_n_values=[float(v) for v in _as_list(privacy_raw.get("sigma_n", 0.0))],
            T_values=[int(v) for v in _as_list(privacy_raw.get("T", 0))],
            c_values=[int(v) for v in _as_list(privacy_raw.get("c", 1))],
            s=float(privacy_raw.get("s", 1.0)),
            epsilon=float(privacy_raw.get("epsilon", 1.0)),
            lr=float(training.get("lr", 0.05)),
            batch_size=int(training.get("batch_size", 10)),
            epochs_per_round=int(training.get("epochs_per_round", 1)),
            loss=training.get("loss", "softmax_ce"),
            agg_rule=training.get("agg", learners.FEDAVG),
            dataset=training.get("dataset", "two_clusters"),
            samples=int(training.get("samples", 400)),
            features=int(training.get("features", 2)),
            hidden=[int(h) for h in _as_list(training.get("hidden", [8]))],
            activation=training.get("activation", learners.TANH),
            separation=float(training.get("separation", 3.0)),
            output_dir=str(raw.get("output", "results")),
            strategy=raw.get("strategy", GREEDY),
            raw=raw,
        )
    except SpecError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc)) from None
    _validate(spec)
    return spec


def _validate(spec: ExperimentSpec) -> None:
    if spec.rounds < 1:
        raise SpecError("rounds must be >= 1")
    if spec.n_nodes < 2:
        raise SpecError("need at least two nodes")
    if spec.loss not in learners.LOSSES:
        raise SpecError(f"unknown loss {spec.loss!r}")
    if spec.activation not in learners.ACTIVATIONS:
        raise SpecError(f"unknown activation {spec.activation!r}")
    if spec.dataset not in ("two_clusters", "survival"):
        raise SpecError(f"unknown dataset {spec.dataset!r}")
    if spec.samples < spec.n_nodes:
        raise SpecError("need at least one sample per node")
    if spec.scheme in CODED_SCHEMES:
        if any(t < 0 for t in spec.T_values):
            raise SpecError("T values must be >= 0")
        if any(sg < 0 for sg in spec.sigma_n_values):
            raise SpecError("sigma_n values must be >= 0")


def _make_dataset(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    data_seed = protocols._derived_seed(spec.seed, 1)
    if spec.dataset == "two_clusters":
        x, y = learners.make_two_clusters(spec.samples, spec.features,
                                          spec.separation, seed=data_seed)
        if spec.loss == learners.MSE:
            return x, x.copy()
        return x, y
    x, targets = learners.make_survival(spec.samples, spec.features, seed=data_seed)
    return x, targets


def _split_per_node(x: np.ndarray, y: np.ndarray, n: int):
    parts = np.array_split(np.arange(x.shape[0]), n)
    return [(x[idx], y[idx]) for idx in parts]


def _output_width(spec: ExperimentSpec) -> int:
    if spec.loss == learners.SOFTMAX_CE:
        return 2
    if spec.loss == learners.COX_PH:
        return 1
    return spec.features


def run_experiment(spec: ExperimentSpec, output_dir: str | None = None,
                   seed: int | None = None, strategy: str | None = None) -> dict:
    """Run every sweep cell, write rounds.csv and summary.json, return the summary."""
    if seed is not None:
        spec.seed = int(seed)
    if output_dir is not None:
        spec.output_dir = output_dir
    if strategy is not None:
        spec.strategy = strategy

    os.makedirs(spec.output_dir, exist_ok=True)
    x, y = _make_dataset(spec)
    sizes = [spec.features] + spec.hidden + [_output_width(spec)]
    model_init = learners.init_mlp(sizes, spec.activation,
                                   seed=protocols._derived_seed(spec.seed, 2))

    coded = spec.scheme in CODED_SCHEMES
    cells = list(product(spec.sigma_n_values, spec.T_values, spec.c_values)) \
        if coded else [(0.0, 0, 0)]

    round_rows: list[dict] = []
    summaries: list[dict] = []
    for cell_index, (sigma_n, t_blocks, colluders) in enumerate(cells):
        plan = make_plan(spec.K, t_blocks, spec.n_nodes, spec.shift) if coded else None
        privacy = None
        if coded and t_blocks >= 1 and sigma_n > 0 and colluders >= 1:
            privacy = PrivacyConfig(K=spec.K, T=t_blocks, sigma_n=sigma_n,
                                    c=colluders, s=spec.s, epsilon=spec.epsilon)
        scheme_cfg = SchemeConfig(
            scheme=spec.scheme, plan=plan, sigma_n=sigma_n if coded else 0.0,
            privacy=privacy, lr=spec.lr, batch_size=spec.batch_size,
            epochs_per_round=spec.epochs_per_round, rounds=spec.rounds,
            loss=spec.loss, agg_rule=spec.agg_rule)
        net_cfg = NetworkConfig(n_nodes=spec.n_nodes, straggler=spec.straggler,
                                seed=protocols._derived_seed(spec.seed, 3, cell_index))

        data = (x, y) if spec.scheme in (DLCD_SECURE_TRAINING, protocols.UNCODED_DLCD) \
            else _split_per_node(x, y, spec.n_nodes)
        traces = run_scheme(scheme_cfg, net_cfg, data, model_init)

        base = {
            "scheme": spec.scheme, "cell": cell_index, "N": spec.n_nodes,
            "K": spec.K if coded else "", "T": t_blocks if coded else "",
            "sigma_n": sigma_n if coded else "", "c": colluders if coded else "",
            "s": spec.s if coded else "", "epsilon": spec.epsilon if coded else "",
            "shift": spec.shift if coded else "",
            "lr": spec.lr, "batch_size": spec.batch_size,
            "epochs_per_round": spec.epochs_per_round, "rounds": spec.rounds,
            "seed": spec.seed, "strategy": spec.strategy, "loss_kind": spec.loss,
            "agg_rule": spec.agg_rule, "dataset": spec.dataset,
            "samples": spec.samples, "features": spec.features,
            "hidden": "-".join(str(h) for h in spec.hidden),
            "activation": spec.activation, "separation": spec.separation,
        }
        for trace in traces:
            round_rows.append(base | {
                "round": trace.round_index,
                "loss": trace.loss, "accuracy": trace.accuracy,
                "messages": trace.message_count, "elements": trace.element_volume,
                "encode_ops": trace.encode_ops.count,
                "encode_elements": trace.encode_ops.elements,
                "decode_ops": trace.decode_ops.count,
                "decode_elements": trace.decode_ops.elements,
                "train_ops": trace.train_ops.count,
                "train_elements": trace.train_ops.elements,
            })

        leakage = None
        if privacy is not None:
            report = worst_case_leakage(plan, privacy, strategy=spec.strategy)
            leakage = report.to_dict() | {"meets_epsilon": bool(report.i_L <= spec.epsilon)}

        per_round = [t for t in traces if t.round_index >= 1]
        setup = [t for t in traces if t.round_index == 0]
        write_tensor(os.path.join(spec.output_dir, f"model_cell{cell_index}.bin"),
                     per_round[-1].decoded_model)
        summaries.append({k: v for k, v in base.items()} | {
            "final_loss": per_round[-1].loss,
            "final_accuracy": per_round[-1].accuracy,
            "messages_per_round": per_round[0].message_count,
            "elements_per_round": per_round[0].element_volume,
            "once_messages": setup[0].message_count if setup else 0,
            "once_elements": setup[0].element_volume if setup else 0,
            "leakage": leakage,
        })

    rounds_path = os.path.join(spec.output_dir, "rounds.csv")
    with open(rounds_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ROUND_COLUMNS)
        writer.writeheader()
        for row in round_rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in ROUND_COLUMNS})

    summary = {"config": _resolved_config(spec), "cells": summaries}
    summary_path = os.path.join(spec.output_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _resolved_config(spec: ExperimentSpec) -> dict:
    return {
        "scheme": spec.scheme, "seed": spec.seed, "rounds": spec.rounds,
        "network": {"nodes": spec.n_nodes,
                    "straggler": {"kind": spec.straggler.kind,
                                  "count": spec.straggler.count,
                                  "keep_n": spec.straggler.keep_n,
                                  "seed": spec.straggler.seed}},
        "plan": {"K": spec.K, "shift": spec.shift},
        "privacy": {"sigma_n": spec.sigma_n_values, "T": spec.T_values,
                    "c": spec.c_values, "s": spec.s, "epsilon": spec.epsilon},
        "training": {"lr": spec.lr, "batch_size": spec.batch_size,
                     "epochs_per_round": spec.epochs_per_round, "loss": spec.loss,
                     "agg": spec.agg_rule, "dataset": spec.dataset,
                     "samples": spec.samples, "features": spec.features,
                     "hidden": spec.hidden, "activation": spec.activation,
                     "separation": spec.separation},
        "strategy": spec.strategy, "output": spec.output_dir,
    }
