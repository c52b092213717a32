"""Encode/decode round trips, noise handling, and the wire format."""

import io

import numpy as np
import pytest

from pbacc.codec import (
    EncodedShare,
    NoiseSpec,
    decode,
    encode,
    read_tensor,
    roundtrip_error,
    tensor_from_bytes,
    tensor_to_bytes,
    write_tensor,
)
from pbacc.interpolation import berrut_eval, make_plan

from oracles import encode_share_mp

NO_NOISE = NoiseSpec(0.0, 0, 0)

# first-run regression value: relu, K=4, T=4, N=128, sigma=0.1, fastest 120
RELU_GOLDEN = 0.007953011730120757


def full(plan):
    return list(range(plan.N))


def test_k1_t0_shares_equal_input_exactly():
    plan = make_plan(1, 0, 8)
    x = np.array([[1.5, -2.0], [0.25, 3.0], [7.0, -0.5]])
    shares, blocks = encode(x, plan, NO_NOISE)
    assert blocks == []
    for share in shares:
        assert np.array_equal(share.payload, x)


def test_interpolation_property_at_data_nodes():
    # evaluating the encoding interpolant at a data node returns that slice
    plan = make_plan(2, 0, 16)
    a, b = 3.25, -1.75
    out = berrut_eval(float(plan.alphas[0]), plan.alphas, np.array([[a], [b]]))
    assert out[0] == a


def test_encode_matches_extended_precision_oracle():
    plan = make_plan(2, 2, 8)
    x = np.array([1.0, 2.0])
    shares, blocks = encode(x, plan, NoiseSpec(1.0, 2, seed=7))
    noise_scalars = [float(blk[0]) for blk in blocks]
    alphas = [float(a) for a in plan.alphas]
    for share in shares:
        expected = encode_share_mp(float(share.beta), alphas, [1.0, 2.0], noise_scalars)
        assert abs(float(share.payload[0]) - float(expected)) <= 1e-12 * max(1.0, abs(float(expected)))


def test_encode_deterministic_per_seed():
    plan = make_plan(3, 4, 16)
    x = np.arange(12.0).reshape(6, 2)
    a, _ = encode(x, plan, NoiseSpec(2.0, 4, seed=99))
    b, _ = encode(x, plan, NoiseSpec(2.0, 4, seed=99))
    c, _ = encode(x, plan, NoiseSpec(2.0, 4, seed=100))
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.payload, sb.payload)
    assert any(not np.array_equal(sa.payload, sc.payload) for sa, sc in zip(a, c))


def test_encode_linearity_without_noise():
    plan = make_plan(4, 0, 24)
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(8, 3)), rng.normal(size=(8, 3))
    ex, _ = encode(x, plan, NO_NOISE)
    ey, _ = encode(y, plan, NO_NOISE)
    exy, _ = encode(2.0 * x - 3.0 * y, plan, NO_NOISE)
    for sx, sy, sxy in zip(ex, ey, exy):
        np.testing.assert_allclose(sxy.payload, 2.0 * sx.payload - 3.0 * sy.payload,
                                   rtol=1e-12, atol=1e-12)


def test_noise_blocks_shape_and_scale():
    plan = make_plan(2, 8, 16)
    x = np.zeros((6, 5))
    shares, blocks = encode(x, plan, NoiseSpec(4.0, 8, seed=0))
    assert len(blocks) == 8
    assert all(blk.shape == (3, 5) for blk in blocks)  # groups x slice shape
    spread = np.std(np.concatenate([b.ravel() for b in blocks]))
    assert spread == pytest.approx(4.0 / np.sqrt(8), rel=0.2)


def test_encode_rejects_bad_arguments():
    plan = make_plan(2, 0, 8)
    with pytest.raises(ValueError):
        encode(np.arange(5.0), plan, NO_NOISE, pad=False)
    with pytest.raises(ValueError):
        encode(np.arange(4.0), plan, NoiseSpec(1.0, 3, 0))  # T mismatch
    with pytest.raises(ValueError):
        encode(np.arange(4.0), plan, NO_NOISE, axis=2)


def test_decode_constant_payloads_reproduced():
    plan = make_plan(3, 0, 12)
    payload = np.full((2, 4), -3.75)
    results = [(float(b), payload) for b in plan.betas]
    out = decode(results, plan)
    np.testing.assert_allclose(out, -3.75, rtol=1e-12)
    assert out.shape == (6, 4)


def test_decode_single_result_is_that_payload():
    plan = make_plan(3, 0, 12)
    payload = np.array([[1.0, 2.0]])
    out = decode([(0.4, payload)], plan)
    np.testing.assert_allclose(out, np.repeat(payload, 3, axis=0), rtol=1e-12)


def test_decode_rejects_bad_results():
    plan = make_plan(2, 0, 8)
    payload = np.zeros((1, 2))
    with pytest.raises(ValueError):
        decode([], plan)
    with pytest.raises(ValueError):
        decode([(0.5, payload), (0.5, payload)], plan)
    with pytest.raises(ValueError):
        decode([(0.5, payload), (0.6, np.zeros((1, 3)))], plan)


def test_roundtrip_identity_k1():
    plan = make_plan(1, 0, 16)
    x = np.linspace(-2.0, 2.0, 7)
    assert roundtrip_error(x, lambda v: v, plan, NO_NOISE, full(plan)) <= 1e-12


def test_roundtrip_error_shrinks_with_more_workers():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    errors = {}
    for n in (32, 64):
        plan = make_plan(4, 0, n)
        errors[n] = roundtrip_error(x, lambda v: v, plan, NO_NOISE, full(plan))
    assert errors[64] < errors[32]


def test_affine_error_at_most_square_error():
    # affine maps commute with the encoder, so only decoding error remains
    plan = make_plan(4, 0, 64)
    x = np.linspace(-1.5, 2.1, 16)
    affine = roundtrip_error(x, lambda v: 2.0 * v + 1.0, plan, NO_NOISE, full(plan))
    square = roundtrip_error(x, lambda v: v * v, plan, NO_NOISE, full(plan))
    assert affine <= square


def test_relu_roundtrip_regression():
    plan = make_plan(4, 4, 128)
    x = np.random.default_rng(123).normal(0.0, 1.0, size=16)
    err = roundtrip_error(x, lambda v: np.maximum(v, 0.0), plan,
                          NoiseSpec(0.1, 4, seed=9), subset=list(range(120)))
    assert err == pytest.approx(RELU_GOLDEN, rel=1e-9)


def test_straggler_error_non_increasing_on_average():
    plan = make_plan(4, 0, 32)
    rng = np.random.default_rng(21)
    x = np.sort(rng.normal(0.0, 1.0, size=8))
    means = []
    for n in (8, 16, 32):
        errs = []
        for rep in range(20):
            subset = sorted(np.random.default_rng(100 + rep).choice(32, n, replace=False).tolist())
            errs.append(roundtrip_error(x, lambda v: v * v, plan, NO_NOISE, subset))
        means.append(np.mean(errs))
    assert means[0] >= means[1] >= means[2]


def test_noise_placement_error_shrinks_with_far_shift():
    x = np.array([1.0, -0.5, 2.0, 0.7])
    errs = {}
    for shift in (2.0, 10.0, -2.0, -10.0):
        plan = make_plan(2, 2, 32, shift=shift)
        errs[shift] = roundtrip_error(x, lambda v: v, plan,
                                      NoiseSpec(0.5, 2, seed=3), full(plan))
    assert errs[10.0] < errs[2.0]
    assert errs[-10.0] < errs[-2.0]


def test_roundtrip_rejects_bad_subsets():
    plan = make_plan(2, 0, 8)
    x = np.arange(4.0)
    with pytest.raises(ValueError):
        roundtrip_error(x, lambda v: v, plan, NO_NOISE, [])
    with pytest.raises(ValueError):
        roundtrip_error(x, lambda v: v, plan, NO_NOISE, [1, 1])
    with pytest.raises(ValueError):
        roundtrip_error(x, lambda v: v, plan, NO_NOISE, [8])


def test_padding_roundtrip_truncates():
    plan = make_plan(4, 0, 32)
    x = np.arange(10.0)  # extent 10 needs 2 pad slices for K=4
    shares, _ = encode(x, plan, NO_NOISE)
    assert shares[0].payload.shape == (3,)
    out = decode([(s.beta, s.payload) for s in shares], plan, out_extent=10)
    assert out.shape == (10,)
    # full groups decode tightly; the zero-padded tail group is rougher
    np.testing.assert_allclose(out[:8], x[:8], atol=5e-3)
    np.testing.assert_allclose(out[8:], x[8:], atol=0.5)


def test_nonzero_coding_axis():
    plan = make_plan(2, 0, 16)
    x = np.random.default_rng(5).normal(size=(3, 6, 2))
    shares, _ = encode(x, plan, NO_NOISE, axis=1)
    assert shares[0].payload.shape == (3, 3, 2)
    out = decode([(s.beta, s.payload) for s in shares], plan, axis=1, out_extent=6)
    np.testing.assert_allclose(out, x, atol=1e-2)


def test_share_metadata():
    plan = make_plan(2, 0, 8)
    shares, _ = encode(np.arange(4.0), plan, NO_NOISE)
    for j, share in enumerate(shares):
        assert isinstance(share, EncodedShare)
        assert share.node_index == j
        assert share.beta == plan.betas[j]


def test_tensor_wire_format_roundtrip():
    x = np.random.default_rng(0).normal(size=(3, 4, 2))
    raw = tensor_to_bytes(x)
    assert raw[:4] == (3).to_bytes(4, "little")
    np.testing.assert_array_equal(tensor_from_bytes(raw), x)
    buf = io.BytesIO()
    write_tensor(buf, x)
    buf.seek(0)
    np.testing.assert_array_equal(read_tensor(buf), x)


def test_tensor_wire_format_on_disk(tmp_path):
    path = str(tmp_path / "t.bin")
    x = np.arange(6.0).reshape(2, 3)
    write_tensor(path, x)
    np.testing.assert_array_equal(read_tensor(path), x)
