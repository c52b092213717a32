"""Interpolation nodes and the Berrut rational interpolant.

The encoder and decoder both rest on the barycentric rational interpolant
with alternating weights (-1)^i.  On a monotonically ordered node sequence
this weight pattern keeps the denominator sign-alternating, so the
interpolant has no poles on the real line.  Three node families are used:

* Chebyshev points of the first kind   -- data nodes (decode targets),
* Chebyshev points of the second kind  -- encoder nodes (one per worker),
* shifted Chebyshev points of the first kind -- noise nodes.

The shift places the noise block outside the data interval (-1, 1).  A
negative shift puts the noise block *below* the data block, which continues
the alternating sign pattern of the concatenated (data, noise) node list for
every (K, T) and therefore keeps the encoder pole-free.  A positive shift
does the same only when K + T is even; for odd K + T the denominator gains a
real zero between the two blocks, inside the encoder-node range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHEBYSHEV_FIRST = "chebyshev_first"
CHEBYSHEV_SECOND = "chebyshev_second"
SHIFTED_CHEBYSHEV_FIRST = "shifted_chebyshev_first"

#: Relative half-width of the node-coincidence guard band.
COINCIDENCE_GUARD = 1e-12

#: Offset applied to an encoder node that collides with an interpolation node.
COLLISION_NUDGE = 1e-9

#: Default shift of the noise-node block (see module docstring).
DEFAULT_NOISE_SHIFT = -2.0


class NodeCoincidenceError(ValueError):
    """Evaluation point lies within the guard band of node ``index``."""

    def __init__(self, z: float, index: int, node: float):
        super().__init__(f"z={z!r} coincides with node {index} ({node!r})")
        self.index = index


def chebyshev_first(count: int) -> np.ndarray:
    """Chebyshev points of the first kind, cos((2j+1)pi/2n), j = 0..n-1."""
    if count < 1:
        raise ValueError(f"need count >= 1, got {count}")
    j = np.arange(count)
    return np.cos((2 * j + 1) * np.pi / (2 * count))


def chebyshev_second(count: int) -> np.ndarray:
    """Chebyshev points of the second kind, cos(j*pi/(n-1)), j = 0..n-1."""
    if count < 2:
        raise ValueError(f"need count >= 2, got {count}")
    j = np.arange(count)
    return np.cos(j * np.pi / (count - 1))


def shifted_chebyshev_first(count: int, shift: float) -> np.ndarray:
    """First-kind Chebyshev points translated by ``shift``."""
    return shift + chebyshev_first(count)


@dataclass(frozen=True)
class NodeFamily:
    """One named family of pairwise-distinct interpolation nodes."""

    kind: str
    count: int
    shift: float
    values: np.ndarray

    def __len__(self) -> int:
        return self.count


def make_nodes(kind: str, count: int, shift: float = 0.0) -> NodeFamily:
    """Build a node family from its closed form.  Deterministic.

    ``shift`` is used only by the shifted first-kind family.
    """
    if kind == CHEBYSHEV_FIRST:
        values = chebyshev_first(count)
    elif kind == CHEBYSHEV_SECOND:
        values = chebyshev_second(count)
    elif kind == SHIFTED_CHEBYSHEV_FIRST:
        values = shifted_chebyshev_first(count, shift)
    else:
        raise ValueError(f"unknown node kind {kind!r}")
    values.flags.writeable = False
    return NodeFamily(kind=kind, count=count, shift=shift, values=values)


def berrut_weights(count: int) -> np.ndarray:
    """Alternating barycentric weights (-1)^i."""
    return (-1.0) ** np.arange(count)


def _coincident_index(z: float, nodes: np.ndarray) -> int | None:
    """Index of the node within the guard band of ``z``, or None."""
    diff = np.abs(z - nodes)
    guard = COINCIDENCE_GUARD * np.maximum(1.0, np.abs(nodes))
    hits = np.nonzero(diff < guard)[0]
    return int(hits[0]) if hits.size else None


def berrut_basis(z: float, nodes: np.ndarray) -> np.ndarray:
    """Berrut basis q_i(z) = ((-1)^i/(z-a_i)) / sum_j (-1)^j/(z-a_j).

    The basis is a partition of unity: sum_i q_i(z) = 1 up to rounding.
    Raises :class:`NodeCoincidenceError` when ``z`` falls inside the guard
    band of a node; callers take the interpolation limit there.
    """
    nodes = np.asarray(nodes, dtype=float)
    hit = _coincident_index(z, nodes)
    if hit is not None:
        raise NodeCoincidenceError(z, hit, float(nodes[hit]))
    terms = berrut_weights(len(nodes)) / (z - nodes)
    return terms / terms.sum()


def berrut_basis_matrix(zs: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Stacked Berrut basis rows, one per evaluation point.

    All evaluation points must be clear of the nodes; a CodingPlan
    guarantees this for its encoder nodes, so a violation here is an
    internal error rather than bad input.
    """
    zs = np.asarray(zs, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    diff = zs[:, None] - nodes[None, :]
    guard = COINCIDENCE_GUARD * np.maximum(1.0, np.abs(nodes))[None, :]
    if np.any(np.abs(diff) < guard):
        raise RuntimeError("evaluation point collides with a node; "
                           "the coding plan should have prevented this")
    terms = berrut_weights(len(nodes))[None, :] / diff
    return terms / terms.sum(axis=1, keepdims=True)


def berrut_eval(z: float, nodes: np.ndarray, payloads) -> np.ndarray:
    """Evaluate the Berrut interpolant through ``(nodes, payloads)`` at ``z``.

    Payloads may be an array stacked along axis 0 or a sequence of
    equally-shaped arrays.  At a node (within the guard band) the exact
    payload is returned, realizing the interpolation property u(a_j) = X_j.
    """
    nodes = np.asarray(nodes, dtype=float)
    stack = np.asarray(payloads, dtype=float)
    if stack.shape[0] != len(nodes):
        raise ValueError(f"{len(nodes)} nodes but {stack.shape[0]} payloads")
    if stack.ndim == 0:
        raise ValueError("payloads must be at least 1-dimensional")
    hit = _coincident_index(z, nodes)
    if hit is not None:
        return stack[hit].copy()
    q = berrut_basis(z, nodes)
    return np.tensordot(q, stack, axes=(0, 0))


@dataclass(frozen=True)
class CodingPlan:
    """All interpolation points of one coding configuration.

    ``data_nodes`` hold the K decode targets, ``noise_nodes`` the T noise
    positions (None when T = 0), and ``encoder_nodes`` the N worker points.
    Encoder nodes that collided with an interpolation node have been nudged
    by :data:`COLLISION_NUDGE`; their indices are in ``perturbed``.
    """

    data_nodes: NodeFamily
    noise_nodes: NodeFamily | None
    encoder_nodes: NodeFamily
    K: int
    T: int
    N: int
    shift: float
    perturbed: tuple[int, ...] = field(default=())
    _betas: np.ndarray = field(default=None, repr=False)

    @property
    def alphas(self) -> np.ndarray:
        """Concatenated interpolation nodes, data first then noise."""
        if self.noise_nodes is None:
            return self.data_nodes.values
        return np.concatenate([self.data_nodes.values, self.noise_nodes.values])

    @property
    def betas(self) -> np.ndarray:
        """Encoder nodes after collision perturbation."""
        return self._betas


def make_plan(K: int, T: int, N: int, shift: float = DEFAULT_NOISE_SHIFT) -> CodingPlan:
    """Construct a coding plan with K data, T noise and N encoder nodes.

    Raises when the K+T interpolation nodes are not pairwise distinct
    (possible when the shifted noise block overlaps the data block).
    """
    if K < 1:
        raise ValueError(f"need K >= 1, got {K}")
    if T < 0:
        raise ValueError(f"need T >= 0, got {T}")
    data = make_nodes(CHEBYSHEV_FIRST, K)
    noise = make_nodes(SHIFTED_CHEBYSHEV_FIRST, T, shift) if T > 0 else None
    enc = make_nodes(CHEBYSHEV_SECOND, N)

    alphas = data.values if noise is None else np.concatenate([data.values, noise.values])
    if len(alphas) > 1:
        gaps = np.abs(alphas[:, None] - alphas[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < COINCIDENCE_GUARD * max(1.0, np.abs(alphas).max()):
            raise ValueError(
                f"interpolation nodes collide for K={K}, T={T}, shift={shift}; "
                "move the noise shift away from the data interval")

    betas = enc.values.copy()
    perturbed = []
    for j in range(N):
        if _coincident_index(betas[j], alphas) is not None:
            betas[j] += COLLISION_NUDGE
            perturbed.append(j)
    betas.flags.writeable = False
    return CodingPlan(data_nodes=data, noise_nodes=noise, encoder_nodes=enc,
                      K=K, T=T, N=N, shift=shift,
                      perturbed=tuple(perturbed), _betas=betas)
