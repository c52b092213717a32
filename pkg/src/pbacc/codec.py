"""Encoding of real tensors into worker shares and approximate decoding.

``encode`` compresses the coding axis by a factor K: contiguous groups of K
slices are mapped to the K data nodes and padded with T Gaussian noise
blocks at the noise nodes, then the resulting rational interpolant is
evaluated at each worker's encoder node.  ``decode`` rebuilds the function
values at the data nodes from whatever subset of worker results arrived,
which is what gives the scheme its straggler tolerance.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Callable, Sequence

import numpy as np

from .interpolation import (
    COINCIDENCE_GUARD,
    CodingPlan,
    berrut_basis,
    berrut_basis_matrix,
    _coincident_index,
)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise configuration: T blocks of i.i.d. N(0, sigma_n^2 / T) entries."""

    sigma_n: float
    T: int
    seed: int

    def __post_init__(self):
        if self.sigma_n < 0:
            raise ValueError(f"need sigma_n >= 0, got {self.sigma_n}")
        if self.T < 0:
            raise ValueError(f"need T >= 0, got {self.T}")


@dataclass(frozen=True)
class EncodedShare:
    """One worker's evaluation of the encoding interpolant."""

    node_index: int
    beta: float
    payload: np.ndarray


def encode(x: np.ndarray, plan: CodingPlan, noise: NoiseSpec,
           axis: int = 0, pad: bool = True) -> tuple[list[EncodedShare], list[np.ndarray]]:
    """Encode ``x`` along ``axis`` into N shares plus T noise blocks.

    The coding axis is processed in contiguous groups of K slices; the final
    short group is zero-padded when ``pad`` is true (decode truncates via its
    ``out_extent`` argument).  Each share's coding-axis extent is
    ceil(extent / K).  Noise is drawn once per call from ``noise.seed`` and
    shared by all encoder-node evaluations; each of the T blocks has the
    share payload shape, so distinct groups see independent noise entries.

    Returns the shares (node order) and the drawn noise blocks.
    """
    x = np.asarray(x, dtype=float)
    if not -x.ndim <= axis < x.ndim:
        raise ValueError(f"axis {axis} out of range for rank-{x.ndim} tensor")
    if noise.T != plan.T:
        raise ValueError(f"noise spec has T={noise.T} but plan has T={plan.T}")
    xm = np.moveaxis(x, axis, 0)
    extent = xm.shape[0]
    K, T = plan.K, plan.T
    groups, rem = divmod(extent, K)
    if rem:
        if not pad:
            raise ValueError(
                f"coding-axis extent {extent} is not a multiple of K={K} and padding is disabled")
        groups += 1
        padding = np.zeros((groups * K - extent,) + xm.shape[1:])
        xm = np.concatenate([xm, padding], axis=0)

    # (K, groups, *rest): element i of group g sits at data node alpha_i.
    stacked = xm.reshape(groups, K, *xm.shape[1:]).swapaxes(0, 1)
    if T > 0:
        rng = np.random.default_rng(noise.seed)
        blocks = rng.normal(0.0, noise.sigma_n / np.sqrt(T), size=(T, groups) + xm.shape[1:])
        coeffs = np.concatenate([stacked, blocks], axis=0)
    else:
        blocks = np.empty((0, groups) + xm.shape[1:])
        coeffs = stacked

    basis = berrut_basis_matrix(plan.betas, plan.alphas)  # (N, K+T)
    evals = np.tensordot(basis, coeffs, axes=(1, 0))      # (N, groups, *rest)
    shares = [EncodedShare(node_index=j, beta=float(plan.betas[j]),
                           payload=np.moveaxis(evals[j], 0, axis))
              for j in range(plan.N)]
    noise_blocks = [np.moveaxis(blocks[t], 0, axis) for t in range(T)]
    return shares, noise_blocks


def decode(results: Sequence[tuple[float, np.ndarray]], plan: CodingPlan,
           axis: int = 0, out_extent: int | None = None) -> np.ndarray:
    """Decode worker results back to the data nodes.

    ``results`` holds (encoder node value, payload) pairs from any nonempty
    subset of workers; payloads must share one shape.  Results are sorted by
    node value descending (the natural second-kind order) before the
    alternating weights are assigned, which keeps the decoding interpolant
    pole-free.  The interpolant is evaluated at each of the K data nodes and
    the outputs are re-interleaved along the coding axis; ``out_extent``
    truncates encode-time padding.
    """
    if len(results) == 0:
        raise ValueError("need at least one result to decode")
    betas = np.array([float(b) for b, _ in results])
    payloads = [np.asarray(p, dtype=float) for _, p in results]
    shape = payloads[0].shape
    if any(p.shape != shape for p in payloads):
        raise ValueError("result payloads disagree in shape")
    if len(betas) > 1:
        gaps = np.abs(betas[:, None] - betas[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < COINCIDENCE_GUARD * max(1.0, np.abs(betas).max()):
            raise ValueError("duplicate encoder node values in results")

    order = np.argsort(-betas)
    betas = betas[order]
    stack = np.stack([np.moveaxis(payloads[i], axis, 0) for i in order])  # (n, G, *rest)

    groups = stack.shape[1]
    K = plan.K
    per_node = np.empty((K,) + stack.shape[1:])
    for i in range(K):
        z = float(plan.data_nodes.values[i])
        hit = _coincident_index(z, betas)
        if hit is not None:
            per_node[i] = stack[hit]
        else:
            q = berrut_basis(z, betas)
            per_node[i] = np.tensordot(q, stack, axes=(0, 0))

    out = per_node.swapaxes(0, 1).reshape((groups * K,) + stack.shape[2:])
    if out_extent is not None:
        if not 0 < out_extent <= out.shape[0]:
            raise ValueError(f"out_extent {out_extent} not in (0, {out.shape[0]}]")
        out = out[:out_extent]
    return np.moveaxis(out, 0, axis)


def roundtrip_error(x: np.ndarray, f: Callable[[np.ndarray], np.ndarray],
                    plan: CodingPlan, noise: NoiseSpec,
                    subset: Sequence[int], axis: int = 0) -> float:
    """Sup-norm relative error of encode -> apply f per share -> decode.

    The reference is ``f`` applied directly to ``x``; the error is
    max |decoded - f(x)| normalized by max |f(x)| (or 1 if f(x) is zero).
    """
    subset = list(subset)
    if not subset:
        raise ValueError("subset must be nonempty")
    if len(set(subset)) != len(subset):
        raise ValueError("subset indices must be distinct")
    if any(not 0 <= j < plan.N for j in subset):
        raise ValueError(f"subset indices must lie in [0, {plan.N})")
    x = np.asarray(x, dtype=float)
    shares, _ = encode(x, plan, noise, axis=axis)
    results = [(shares[j].beta, f(shares[j].payload)) for j in subset]
    decoded = decode(results, plan, axis=axis, out_extent=x.shape[axis])
    expected = f(x)
    scale = np.max(np.abs(expected))
    return float(np.max(np.abs(decoded - expected)) / max(scale, np.finfo(float).tiny))


# Tensor wire format: uint32 rank, rank x uint64 extents, then row-major
# float64 payload, all little-endian.  Used for golden files.

def tensor_to_bytes(x: np.ndarray) -> bytes:
    x = np.ascontiguousarray(x, dtype="<f8")
    header = struct.pack("<I", x.ndim) + struct.pack(f"<{x.ndim}Q", *x.shape)
    return header + x.tobytes()


def tensor_from_bytes(raw: bytes) -> np.ndarray:
    (rank,) = struct.unpack_from("<I", raw, 0)
    shape = struct.unpack_from(f"<{rank}Q", raw, 4)
    offset = 4 + 8 * rank
    count = int(np.prod(shape)) if rank else 1
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
    return data.reshape(shape).copy()


def write_tensor(fp: BinaryIO | str, x: np.ndarray) -> None:
    if isinstance(fp, str):
        with open(fp, "wb") as fh:
            fh.write(tensor_to_bytes(x))
    else:
        fp.write(tensor_to_bytes(x))


def read_tensor(fp: BinaryIO | str) -> np.ndarray:
    if isinstance(fp, str):
        with open(fp, "rb") as fh:
            return tensor_from_bytes(fh.read())
    return tensor_from_bytes(fp.read())
