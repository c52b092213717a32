"""Deterministic in-process simulation of the coded learning schemes.

Transport is simulated: every message is recorded as an in-process tuple
(sender, receiver, element count, phase tag), never serialized or sent.
That makes the per-round communication cost an exact, reproducible count
instead of a wall-clock measurement.  Five schemes are provided:

* ``dlcd_secure_training``   -- master owns the data; the dataset is encoded
  once and workers compute the model execution on encoded batches; the
  master decodes the outputs, evaluates loss/gradients and steps the model.
* ``uncoded_dlcd``           -- master partitions the plaintext dataset;
  workers train locally and the master aggregates.
* ``dldd_secure_aggregation``-- nodes own the data, train in plaintext and
  exchange encoded model shares; aggregation happens in the coded domain
  and the master decodes only the aggregate.
* ``dldd_secure_training``   -- the master encodes the global model at a
  single data node; workers run the full local training on encoded
  parameters and decoding natively averages the trained models.
* ``uncoded_dldd``           -- plain federated learning.

Rounds are numbered from 1; runners with a one-time sharing phase prepend a
setup trace with ``round_index`` 0 holding those messages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .codec import NoiseSpec, decode, encode
from .interpolation import CodingPlan
from .learners import (
    FEDAVG,
    ModelParams,
    aggregate,
    backward_from_output,
    evaluate,
    forward,
    forward_with_cache,
    local_train,
    loss_and_output_grad,
    sgd_step,
)
from .privacy import PrivacyConfig

DLCD_SECURE_TRAINING = "dlcd_secure_training"
DLDD_SECURE_AGGREGATION = "dldd_secure_aggregation"
DLDD_SECURE_TRAINING = "dldd_secure_training"
UNCODED_DLCD = "uncoded_dlcd"
UNCODED_DLDD = "uncoded_dldd"
SCHEMES = (DLCD_SECURE_TRAINING, DLDD_SECURE_AGGREGATION, DLDD_SECURE_TRAINING,
           UNCODED_DLCD, UNCODED_DLDD)

STRAGGLER_NONE = "none"
DROP_SLOWEST = "drop_slowest"
RANDOM_DELAY = "random_delay"


class Message(NamedTuple):
    sender: str
    receiver: str
    elements: int
    phase: str


@dataclass
class OpCount:
    count: int = 0
    elements: int = 0

    def add(self, elements: int) -> None:
        self.count += 1
        self.elements += int(elements)


@dataclass
class RoundTrace:
    """Everything observable about one protocol round."""

    round_index: int
    messages: list[Message] = field(default_factory=list)
    encode_ops: OpCount = field(default_factory=OpCount)
    decode_ops: OpCount = field(default_factory=OpCount)
    train_ops: OpCount = field(default_factory=OpCount)
    decoded_model: np.ndarray | None = None
    loss: float = float("nan")
    accuracy: float = float("nan")

    def send(self, sender: str, receiver: str, elements: int, phase: str) -> None:
        self.messages.append(Message(sender, receiver, int(elements), phase))

    @property
    def message_count(self) -> int:
        return len(self.messages)

    @property
    def element_volume(self) -> int:
        return sum(m.elements for m in self.messages)


@dataclass(frozen=True)
class StragglerModel:
    kind: str = STRAGGLER_NONE
    count: int = 0       # drop_slowest: how many results arrive too late
    keep_n: int = 0      # random_delay: how many results are used
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (STRAGGLER_NONE, DROP_SLOWEST, RANDOM_DELAY):
            raise ValueError(f"unknown straggler model {self.kind!r}")


@dataclass(frozen=True)
class NetworkConfig:
    n_nodes: int
    straggler: StragglerModel = StragglerModel()
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError(f"need at least one node, got {self.n_nodes}")
        if self.straggler.kind == DROP_SLOWEST and not 0 <= self.straggler.count < self.n_nodes:
            raise ValueError("drop_slowest count must be < n_nodes")
        if self.straggler.kind == RANDOM_DELAY and not 1 <= self.straggler.keep_n <= self.n_nodes:
            raise ValueError("random_delay keep_n must be in [1, n_nodes]")


def select_fastest(net_cfg: NetworkConfig, round_index: int) -> list[int]:
    """Indices of the workers whose results the master uses this round.

    Deterministic: per-round delays are drawn from a generator keyed by the
    straggler seed and the round index.
    """
    n = net_cfg.n_nodes
    model = net_cfg.straggler
    if model.kind == STRAGGLER_NONE:
        return list(range(n))
    rng = np.random.default_rng([model.seed, round_index])
    delays = rng.random(n)
    keep = n - model.count if model.kind == DROP_SLOWEST else model.keep_n
    fastest = np.argsort(delays, kind="stable")[:keep]
    return sorted(int(i) for i in fastest)


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str
    plan: CodingPlan | None = None
    sigma_n: float = 0.0
    privacy: PrivacyConfig | None = None
    lr: float = 0.05
    batch_size: int = 10
    epochs_per_round: int = 1
    rounds: int = 10
    loss: str = "softmax_ce"
    agg_rule: str = FEDAVG

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.rounds < 1:
            raise ValueError(f"need rounds >= 1, got {self.rounds}")
        coded = self.scheme in (DLCD_SECURE_TRAINING, DLDD_SECURE_AGGREGATION,
                                DLDD_SECURE_TRAINING)
        if coded and self.plan is None:
            raise ValueError(f"scheme {self.scheme} needs a coding plan")
        if self.scheme == DLDD_SECURE_TRAINING and self.plan.K != 1:
            raise ValueError("secure training over decentralized data encodes the "
                             "model at a single data node; the plan must have K=1")


def _derived_seed(root: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=root, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def _noise_spec(cfg: SchemeConfig, net: NetworkConfig, *key: int) -> NoiseSpec:
    return NoiseSpec(sigma_n=cfg.sigma_n, T=cfg.plan.T,
                     seed=_derived_seed(net.seed, *key))


def run_dlcd_secure_training(scheme_cfg: SchemeConfig, net_cfg: NetworkConfig,
                             dataset: tuple[np.ndarray, np.ndarray],
                             model_init: ModelParams) -> list[RoundTrace]:
    """Coded distributed training over the master's own dataset.

    The dataset is encoded exactly once (setup trace).  Per round and per
    encoded batch the master broadcasts the current model (plaintext), every
    worker computes the model execution on its encoded batch slice, and the
    master decodes the batch outputs from the fastest subset, evaluates the
    loss on them, backpropagates through its own plaintext activations and
    steps the model.
    """
    cfg, net = scheme_cfg, net_cfg
    plan = cfg.plan
    if plan.N != net.n_nodes:
        raise ValueError(f"plan encodes for N={plan.N} workers but the network has {net.n_nodes}")
    inputs, targets = dataset
    n_samples = inputs.shape[0]
    if n_samples < plan.K:
        raise ValueError("dataset smaller than the coding batch size K")
    w_elems = model_init.size

    setup = RoundTrace(round_index=0)
    shares, _ = encode(inputs, plan, _noise_spec(cfg, net, 0), axis=0)
    setup.encode_ops.add(inputs.size)
    for share in shares:
        setup.send("master", f"node{share.node_index}", share.payload.size, "dataset_share")
    traces = [setup]

    n_batches = shares[0].payload.shape[0]
    model = model_init.copy()
    for r in range(1, cfg.rounds + 1):
        trace = RoundTrace(round_index=r)
        fastest = select_fastest(net, r)
        for g in range(n_batches):
            lo = g * plan.K
            valid = min(plan.K, n_samples - lo)
            results = []
            for share in shares:
                trace.send("master", f"node{share.node_index}", w_elems, "model_broadcast")
                pred = forward(model, share.payload[g])
                trace.train_ops.add(w_elems)
                trace.send(f"node{share.node_index}", "master", pred.size, "inference_result")
                results.append((share.beta, pred))
            used = [results[j] for j in fastest]
            decoded = decode(used, plan, axis=0, out_extent=valid)
            trace.decode_ops.add(decoded.size)

            batch_x = inputs[lo:lo + valid]
            batch_y = targets[lo:lo + valid]
            loss_val, dpred = loss_and_output_grad(decoded, batch_y, cfg.loss)
            _, cache = forward_with_cache(model, batch_x)
            grads = backward_from_output(model, cache, dpred)
            model = sgd_step(model, grads, cfg.lr)
            trace.train_ops.add(w_elems)

        trace.loss, trace.accuracy = evaluate(model, inputs, targets, cfg.loss)
        trace.decoded_model = model.flattened_view
        traces.append(trace)
    return traces


def run_uncoded_dlcd(scheme_cfg: SchemeConfig, net_cfg: NetworkConfig,
                     dataset: tuple[np.ndarray, np.ndarray],
                     model_init: ModelParams) -> list[RoundTrace]:
    """Plaintext distributed training: partition once, train locally, aggregate."""
    cfg, net = scheme_cfg, net_cfg
    inputs, targets = dataset
    n = net.n_nodes
    parts = np.array_split(np.arange(inputs.shape[0]), n)
    w_elems = model_init.size
    t_width = targets[0].size if targets.ndim > 1 else 1

    setup = RoundTrace(round_index=0)
    for j, idx in enumerate(parts):
        setup.send("master", f"node{j}", idx.size * (inputs.shape[1] + t_width), "dataset_part")
    traces = [setup]

    model = model_init.copy()
    for r in range(1, cfg.rounds + 1):
        trace = RoundTrace(round_index=r)
        fastest = select_fastest(net, r)
        locals_flat = []
        for j, idx in enumerate(parts):
            trace.send("master", f"node{j}", w_elems, "model_broadcast")
            trained = local_train(model, inputs[idx], targets[idx], cfg.loss,
                                  cfg.lr, cfg.batch_size, cfg.epochs_per_round)
            trace.train_ops.add(w_elems)
            trace.send(f"node{j}", "master", w_elems, "local_model")
            locals_flat.append(trained.flattened_view)
        merged = aggregate([locals_flat[j] for j in fastest], cfg.agg_rule)
        model = model.with_flat(merged)
        trace.loss, trace.accuracy = evaluate(model, inputs, targets, cfg.loss)
        trace.decoded_model = model.flattened_view
        traces.append(trace)
    return traces


def run_dldd_secure_aggregation(scheme_cfg: SchemeConfig, net_cfg: NetworkConfig,
                                per_node_datasets: Sequence[tuple[np.ndarray, np.ndarray]],
                                model_init: ModelParams) -> list[RoundTrace]:
    """Federated learning with aggregation in the coded domain.

    Nodes train in plaintext, encode their updated parameters and exchange
    one share with every other node; each node aggregates the shares it
    received and the master decodes only the aggregate.
    """
    cfg, net = scheme_cfg, net_cfg
    plan = cfg.plan
    n = net.n_nodes
    if len(per_node_datasets) != n:
        raise ValueError(f"need one dataset per node ({n}), got {len(per_node_datasets)}")
    if plan.N != n:
        raise ValueError(f"plan encodes for N={plan.N} workers but the network has {n}")
    eval_x = np.concatenate([d[0] for d in per_node_datasets])
    eval_y = np.concatenate([d[1] for d in per_node_datasets])
    w_elems = model_init.size

    model = model_init.copy()
    traces = []
    for r in range(1, cfg.rounds + 1):
        trace = RoundTrace(round_index=r)
        fastest = select_fastest(net, r)

        trained = []
        for j, (x, y) in enumerate(per_node_datasets):
            trace.send("master", f"node{j}", w_elems, "model_broadcast")
            local = local_train(model, x, y, cfg.loss, cfg.lr,
                                cfg.batch_size, cfg.epochs_per_round)
            trace.train_ops.add(w_elems)
            trained.append(local.flattened_view)

        # share_table[j][i]: share of node j's model held by node i
        share_table = []
        for j in range(n):
            shares, _ = encode(trained[j], plan, _noise_spec(cfg, net, r, j), axis=0)
            trace.encode_ops.add(w_elems)
            for i in range(n):
                if i != j:
                    trace.send(f"node{j}", f"node{i}", shares[i].payload.size, "share_exchange")
            share_table.append(shares)

        results = []
        for i in range(n):
            agg_i = aggregate([share_table[j][i].payload for j in range(n)], cfg.agg_rule)
            trace.send(f"node{i}", "master", agg_i.size, "aggregate_result")
            results.append((share_table[0][i].beta, agg_i))

        merged = decode([results[i] for i in fastest], plan, axis=0, out_extent=w_elems)
        trace.decode_ops.add(w_elems)
        model = model.with_flat(merged)
        trace.loss, trace.accuracy = evaluate(model, eval_x, eval_y, cfg.loss)
        trace.decoded_model = model.flattened_view
        traces.append(trace)
    return traces


def run_dldd_secure_training(scheme_cfg: SchemeConfig, net_cfg: NetworkConfig,
                             per_node_datasets: Sequence[tuple[np.ndarray, np.ndarray]],
                             model_init: ModelParams) -> list[RoundTrace]:
    """Federated learning where workers never see the plaintext global model.

    The master encodes the flattened model at the single data node, each
    worker runs its entire local training on the encoded parameter vector,
    and decoding the returned shares natively aggregates the local models.
    """
    cfg, net = scheme_cfg, net_cfg
    plan = cfg.plan
    n = net.n_nodes
    if len(per_node_datasets) != n:
        raise ValueError(f"need one dataset per node ({n}), got {len(per_node_datasets)}")
    if plan.N != n:
        raise ValueError(f"plan encodes for N={plan.N} workers but the network has {n}")
    eval_x = np.concatenate([d[0] for d in per_node_datasets])
    eval_y = np.concatenate([d[1] for d in per_node_datasets])
    w_elems = model_init.size

    model = model_init.copy()
    traces = []
    for r in range(1, cfg.rounds + 1):
        trace = RoundTrace(round_index=r)
        fastest = select_fastest(net, r)

        shares, _ = encode(model.flattened_view, plan, _noise_spec(cfg, net, r), axis=0)
        trace.encode_ops.add(w_elems)
        results = []
        for j, (x, y) in enumerate(per_node_datasets):
            trace.send("master", f"node{j}", shares[j].payload.size, "encoded_model")
            local = local_train(model.with_flat(shares[j].payload), x, y, cfg.loss,
                                cfg.lr, cfg.batch_size, cfg.epochs_per_round)
            trace.train_ops.add(w_elems)
            flat = local.flattened_view
            trace.send(f"node{j}", "master", flat.size, "trained_model")
            results.append((shares[j].beta, flat))

        merged = decode([results[j] for j in fastest], plan, axis=0, out_extent=w_elems)
        trace.decode_ops.add(w_elems)
        model = model.with_flat(merged)
        trace.loss, trace.accuracy = evaluate(model, eval_x, eval_y, cfg.loss)
        trace.decoded_model = model.flattened_view
        traces.append(trace)
    return traces


def run_uncoded_dldd(scheme_cfg: SchemeConfig, net_cfg: NetworkConfig,
                     per_node_datasets: Sequence[tuple[np.ndarray, np.ndarray]],
                     model_init: ModelParams) -> list[RoundTrace]:
    """Plain federated learning: plaintext local training plus aggregation."""
    cfg, net = scheme_cfg, net_cfg
    n = net.n_nodes
    if len(per_node_datasets) != n:
        raise ValueError(f"need one dataset per node ({n}), got {len(per_node_datasets)}")
    eval_x = np.concatenate([d[0] for d in per_node_datasets])
    eval_y = np.concatenate([d[1] for d in per_node_datasets])
    w_elems = model_init.size

    model = model_init.copy()
    traces = []
    for r in range(1, cfg.rounds + 1):
        trace = RoundTrace(round_index=r)
        fastest = select_fastest(net, r)
        locals_flat = []
        for j, (x, y) in enumerate(per_node_datasets):
            trace.send("master", f"node{j}", w_elems, "model_broadcast")
            local = local_train(model, x, y, cfg.loss, cfg.lr,
                                cfg.batch_size, cfg.epochs_per_round)
            trace.train_ops.add(w_elems)
            trace.send(f"node{j}", "master", w_elems, "local_model")
            locals_flat.append(local.flattened_view)
        merged = aggregate([locals_flat[j] for j in fastest], cfg.agg_rule)
        model = model.with_flat(merged)
        trace.loss, trace.accuracy = evaluate(model, eval_x, eval_y, cfg.loss)
        trace.decoded_model = model.flattened_view
        traces.append(trace)
    return traces


def run_scheme(scheme_cfg: SchemeConfig, net_cfg: NetworkConfig, data,
               model_init: ModelParams) -> list[RoundTrace]:
    """Dispatch on the scheme name.

    ``data`` is a (inputs, targets) pair for the centralized-data schemes
    and a sequence of per-node pairs for the decentralized ones.
    """
    runner = {
        DLCD_SECURE_TRAINING: run_dlcd_secure_training,
        UNCODED_DLCD: run_uncoded_dlcd,
        DLDD_SECURE_AGGREGATION: run_dldd_secure_aggregation,
        DLDD_SECURE_TRAINING: run_dldd_secure_training,
        UNCODED_DLDD: run_uncoded_dldd,
    }[scheme_cfg.scheme]
    return runner(scheme_cfg, net_cfg, data, model_init)


def expected_message_counts(scheme: str, n_nodes: int, n_batches: int = 0) -> dict[str, int]:
    """Closed-form per-round (and one-time) message counts for each scheme."""
    if scheme in (UNCODED_DLCD, UNCODED_DLDD):
        per_round = 2 * n_nodes
    elif scheme == DLDD_SECURE_AGGREGATION:
        per_round = 2 * n_nodes + n_nodes * (n_nodes - 1)
    elif scheme == DLDD_SECURE_TRAINING:
        per_round = 2 * n_nodes
    elif scheme == DLCD_SECURE_TRAINING:
        per_round = 2 * n_nodes * n_batches
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    once = n_nodes if scheme in (DLCD_SECURE_TRAINING, UNCODED_DLCD) else 0
    return {"per_round": per_round, "once": once}
