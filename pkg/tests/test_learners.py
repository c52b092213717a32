"""Models, losses, analytic gradients, optimizer and aggregation rules."""

import numpy as np
import pytest

from pbacc.learners import (
    Batch,
    COORD_MEDIAN,
    COX_PH,
    FEDAVG,
    IDENTITY,
    MSE,
    ModelParams,
    RELU,
    SOFTMAX_CE,
    TANH,
    aggregate,
    evaluate,
    forward,
    init_mlp,
    local_train,
    loss_and_grad,
    loss_and_output_grad,
    make_survival,
    make_two_clusters,
    sgd_step,
)


def central_diff_grads(params, batch, loss, h=1e-6):
    flat = params.flattened_view
    out = np.empty_like(flat)
    for i in range(flat.size):
        plus, minus = flat.copy(), flat.copy()
        plus[i] += h
        minus[i] -= h
        lp, _ = loss_and_grad(params.with_flat(plus), batch, loss)
        lm, _ = loss_and_grad(params.with_flat(minus), batch, loss)
        out[i] = (lp - lm) / (2 * h)
    return out


def test_zero_parameters_give_zero_output():
    params = ModelParams(layers=[(np.zeros((3, 4)), np.zeros(4)),
                                 (np.zeros((4, 2)), np.zeros(2))], activation=RELU)
    out = forward(params, np.random.default_rng(0).normal(size=(5, 3)))
    assert np.array_equal(out, np.zeros((5, 2)))


def test_identity_single_layer_passes_input_through():
    params = ModelParams(layers=[(np.eye(3), np.zeros(3))], activation=IDENTITY)
    x = np.random.default_rng(1).normal(size=(4, 3))
    np.testing.assert_allclose(forward(params, x), x, rtol=1e-15)


def test_fixed_relu_network_matches_hand_computation():
    w1 = np.array([[1.0, -1.0], [2.0, 0.5]])
    b1 = np.array([0.5, -1.0])
    w2 = np.array([[1.0], [-2.0]])
    b2 = np.array([0.25])
    params = ModelParams(layers=[(w1, b1), (w2, b2)], activation=RELU)
    # x = (1, 2): pre1 = (5.5, -1) -> relu (5.5, 0) -> out 5.5*1 + 0*(-2) + 0.25
    out = forward(params, np.array([1.0, 2.0]))
    assert out.shape == (1, 1)
    assert out[0, 0] == pytest.approx(5.75, rel=1e-15)


def test_forward_rejects_feature_mismatch():
    params = init_mlp([3, 2], seed=0)
    with pytest.raises(ValueError):
        forward(params, np.zeros((4, 5)))


def test_mse_zero_at_perfect_prediction():
    params = ModelParams(layers=[(np.eye(2), np.zeros(2))], activation=IDENTITY)
    x = np.array([[1.0, 2.0], [3.0, -1.0]])
    value, grads = loss_and_grad(params, Batch(x, x.copy()), MSE)
    assert value == 0.0
    for gw, gb in grads.layers:
        assert np.array_equal(gw, np.zeros_like(gw))
        assert np.array_equal(gb, np.zeros_like(gb))


def test_softmax_ce_uniform_logits_is_log_n_classes():
    preds = np.zeros((6, 4))
    value, _ = loss_and_output_grad(preds, np.arange(6) % 4, SOFTMAX_CE)
    assert value == pytest.approx(np.log(4.0), rel=1e-12)


def test_softmax_ce_rejects_out_of_range_labels():
    with pytest.raises(ValueError):
        loss_and_output_grad(np.zeros((2, 3)), np.array([0, 3]), SOFTMAX_CE)


def test_cox_requires_time_event_targets():
    params = init_mlp([3, 1], activation=IDENTITY, seed=0)
    x = np.random.default_rng(2).normal(size=(5, 3))
    with pytest.raises(ValueError):
        loss_and_grad(params, Batch(x, np.ones(5)), COX_PH)


def test_gradients_match_central_differences():
    rng = np.random.default_rng(9)
    for trial in range(10):
        sizes = [3, int(rng.integers(2, 5)), 2]
        activation = (RELU, TANH, IDENTITY)[trial % 3]
        params = init_mlp(sizes, activation=activation, seed=100 + trial)
        x = rng.normal(size=(6, 3))
        if trial % 3 == 0:
            batch, loss = Batch(x, rng.normal(size=(6, 2))), MSE
        else:
            batch, loss = Batch(x, rng.integers(0, 2, size=6)), SOFTMAX_CE
        _, grads = loss_and_grad(params, batch, loss)
        numeric = central_diff_grads(params, batch, loss)
        gap = np.max(np.abs(grads.flattened_view - numeric))
        assert gap / max(1.0, np.max(np.abs(numeric))) <= 1e-5


def test_cox_gradients_match_central_differences():
    rng = np.random.default_rng(4)
    x, targets = make_survival(12, features=3, seed=8)
    params = init_mlp([3, 1], activation=IDENTITY, seed=3)
    batch = Batch(x, targets)
    _, grads = loss_and_grad(params, batch, COX_PH)
    numeric = central_diff_grads(params, batch, COX_PH)
    gap = np.max(np.abs(grads.flattened_view - numeric))
    assert gap / max(1.0, np.max(np.abs(numeric))) <= 1e-5


def test_sgd_step_basics():
    params = init_mlp([2, 2], seed=1)
    zero = ModelParams(layers=[(np.zeros_like(w), np.zeros_like(b))
                               for w, b in params.layers], activation=params.activation)
    unchanged = sgd_step(params, zero, lr=0.5)
    assert np.array_equal(unchanged.flattened_view, params.flattened_view)

    g = init_mlp([2, 2], seed=2)
    negated = sgd_step(zero, g, lr=1.0)
    np.testing.assert_array_equal(negated.flattened_view, -g.flattened_view)

    with pytest.raises(ValueError):
        sgd_step(params, g, lr=0.0)


def test_two_steps_equal_one_summed_step():
    base = init_mlp([3, 2], seed=5)
    g1, g2 = init_mlp([3, 2], seed=6), init_mlp([3, 2], seed=7)
    summed = base.with_flat(g1.flattened_view + g2.flattened_view)
    via_two = sgd_step(sgd_step(base, g1, 0.1), g2, 0.1)
    via_one = sgd_step(base, summed, 0.1)
    np.testing.assert_allclose(via_two.flattened_view, via_one.flattened_view,
                               rtol=1e-14, atol=1e-14)


def test_flatten_round_trip_is_exact():
    params = init_mlp([4, 7, 3], activation=TANH, seed=11)
    rebuilt = params.with_flat(params.flattened_view)
    for (w1, b1), (w2, b2) in zip(params.layers, rebuilt.layers):
        assert np.array_equal(w1, w2)
        assert np.array_equal(b1, b2)
    assert params.flattened_view.size == params.size


def test_aggregate_single_model_is_itself():
    v = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(aggregate([v], FEDAVG), v)
    np.testing.assert_array_equal(aggregate([v], COORD_MEDIAN), v)


def test_fedavg_of_opposite_models_is_zero():
    v = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(aggregate([v, -v], FEDAVG), np.zeros(3), atol=1e-15)


def test_coord_median_picks_middle_values():
    models = [np.array([1.0, 9.0]), np.array([5.0, 4.0]), np.array([3.0, 6.0])]
    np.testing.assert_array_equal(aggregate(models, COORD_MEDIAN), [3.0, 6.0])


def test_fedavg_is_linear():
    rng = np.random.default_rng(12)
    a = [rng.normal(size=5) for _ in range(4)]
    b = [rng.normal(size=5) for _ in range(4)]
    mixed = aggregate([2.0 * x + 3.0 * y for x, y in zip(a, b)], FEDAVG)
    np.testing.assert_allclose(
        mixed, 2.0 * aggregate(a, FEDAVG) + 3.0 * aggregate(b, FEDAVG), rtol=1e-12)


def test_aggregate_validation():
    with pytest.raises(ValueError):
        aggregate([], FEDAVG)
    with pytest.raises(ValueError):
        aggregate([np.ones(2), np.ones(2)], FEDAVG, weights=[0.9, 0.9])


def test_local_train_is_deterministic_and_learns():
    x, y = make_two_clusters(60, seed=3)
    init = init_mlp([2, 6, 2], activation=TANH, seed=4)
    a = local_train(init, x, y, SOFTMAX_CE, lr=0.1, batch_size=10, epochs=5)
    b = local_train(init, x, y, SOFTMAX_CE, lr=0.1, batch_size=10, epochs=5)
    assert np.array_equal(a.flattened_view, b.flattened_view)
    before, _ = evaluate(init, x, y, SOFTMAX_CE)
    after, acc = evaluate(a, x, y, SOFTMAX_CE)
    assert after < before
    assert acc > 0.9


def test_evaluate_accuracy_nan_for_regression():
    x, targets = make_survival(20, features=3, seed=1)
    params = init_mlp([3, 1], activation=IDENTITY, seed=2)
    value, acc = evaluate(params, x, targets, COX_PH)
    assert np.isfinite(value)
    assert np.isnan(acc)
