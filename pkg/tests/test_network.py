import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shallowtrade.dataset import Chunk, LabeledExample, build_split
from shallowtrade.errors import ConfigInvalid, DimensionMismatch, EmptyTrainSet, ZeroDimension
from shallowtrade.network import (
    NetworkParams,
    Recommendation,
    TrainConfig,
    backprop,
    decide,
    dump_params,
    forward,
    init_network,
    load_params,
    loss,
    mean_gradient,
    sigmoid,
    train,
    train_many,
    train_with_history,
)
from shallowtrade.synthetic import random_walk_series

EPS = 1e-5


def fd_gradient(params, x, label, eps=EPS):
    """Central finite differences of the per-example loss, one parameter at a time."""
    theta = params.as_vector()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += eps
        down[i] -= eps
        f_up = loss(forward(NetworkParams.from_vector(up, params.shape), x)[0], label)
        f_down = loss(forward(NetworkParams.from_vector(down, params.shape), x)[0], label)
        grad[i] = (f_up - f_down) / (2 * eps)
    return grad


def random_triple(rng):
    inputs, hidden = int(rng.integers(1, 11)), int(rng.integers(1, 21))
    scale = rng.uniform(0.1, 2.0)
    params = NetworkParams(
        rng.normal(0, scale, (hidden, inputs)), rng.normal(0, scale, hidden),
        rng.normal(0, scale, (2, hidden)), rng.normal(0, scale, 2),
    )
    return params, rng.uniform(0, 1, inputs), int(rng.integers(0, 2))


def make_examples(rows, labels):
    return [LabeledExample(tuple(r), Chunk(k + 1, tuple(r)), int(y)) for k, (r, y) in enumerate(zip(rows, labels))]


# -- sigmoid -----------------------------------------------------------------

def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    for z in (0.3, 2.0, 17.0, -5.5):
        assert sigmoid(z) + sigmoid(-z) == pytest.approx(1.0, abs=1e-15)
        assert sigmoid(z) == pytest.approx(1 / (1 + math.exp(-z)), rel=1e-15)


def test_sigmoid_extremes_do_not_overflow():
    with np.errstate(over="raise", invalid="raise"):
        assert 0.0 < sigmoid(1000.0) <= 1.0
        assert 0.0 < sigmoid(-1000.0) < 1e-200
        out = sigmoid(np.array([-1e6, 0.0, 1e6]))
    assert out.shape == (3,) and np.all((out > 0) & (out <= 1))


# -- init_network ------------------------------------------------------------

def test_init_is_deterministic():
    assert init_network((10, 20, 2), 42).identical_to(init_network((10, 20, 2), 42))
    assert not init_network((10, 20, 2), 42).identical_to(init_network((10, 20, 2), 43))


def test_init_shapes_and_ranges():
    p = init_network((10, 20, 2), 7)
    assert p.w1.shape == (20, 10) and p.b1.shape == (20,)
    assert p.w2.shape == (2, 20) and p.b2.shape == (2,)
    assert p.shape == (10, 20, 2)
    assert np.all(np.abs(p.w1) <= 1 / math.sqrt(10)) and np.all(np.abs(p.w2) <= 1 / math.sqrt(20))
    assert not p.b1.any() and not p.b2.any()


def test_init_zero_dimension():
    with pytest.raises(ZeroDimension):
        init_network((10, 0, 2), 1)


def test_params_are_read_only():
    p = init_network(seed=1)
    with pytest.raises(ValueError):
        p.w1[0, 0] = 1.0


def test_params_reject_non_finite():
    with pytest.raises(ValueError):
        NetworkParams([[np.nan]], [0.0], [[1.0], [1.0]], [0.0, 0.0])


def test_params_json_round_trip(tmp_path):
    p = init_network(seed=5)
    dump_params(p, tmp_path / "p.json")
    doc = json.loads((tmp_path / "p.json").read_text())
    assert set(doc) == {"w1", "b1", "w2", "b2", "shape", "seed"}
    assert doc["shape"] == [10, 20, 2] and doc["seed"] == 5
    q = load_params(tmp_path / "p.json")
    assert q.identical_to(p) and q.seed == 5


def test_params_json_shape_mismatch():
    doc = init_network(seed=5).to_json_dict()
    doc["shape"] = [9, 20, 2]
    with pytest.raises(DimensionMismatch):
        NetworkParams.from_json_dict(doc)


# -- forward / decide / loss -------------------------------------------------

def test_forward_zero_network():
    p = NetworkParams(np.zeros((20, 10)), np.zeros(20), np.zeros((2, 20)), np.zeros(2))
    rec, cache = forward(p, np.linspace(0, 1, 10))
    assert (rec.a, rec.b) == (0.5, 0.5)
    assert cache.hidden.shape == (20,) and cache.output.shape == (2,)


def test_forward_hand_built_network():
    p = NetworkParams([[1.0]], [0.0], [[1.0], [1.0]], [0.0, 0.0])
    inner = 1 / (1 + math.exp(-1))
    expected = 1 / (1 + math.exp(-inner))  # sigmoid(sigmoid(1)) = 0.6750375273768237
    rec, _ = forward(p, [1.0])
    assert rec.a == pytest.approx(expected, rel=1e-15)
    assert rec.b == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.6750375273768237, rel=1e-15)


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        forward(init_network(seed=0), np.zeros(9))


@pytest.mark.parametrize("a, b, c", [(0.7, 0.3, 0), (0.3, 0.7, 1), (0.5, 0.5, 1)])
def test_decide(a, b, c):
    assert decide(Recommendation(a, b)) == c


monotone = [lambda v: v ** 3, lambda v: math.sqrt(v), lambda v: (math.exp(v) - 1) / (math.e - 1)]


@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from(monotone))
def test_decide_invariant_under_monotone_transform(a, b, g):
    ga, gb = g(a), g(b)
    # monotone maps can merge distinct floats; only compare when order survives
    if (a > b) == (ga > gb):
        assert decide(Recommendation(a, b)) == decide(Recommendation(ga, gb))


def test_recommendation_range():
    with pytest.raises(ValueError):
        Recommendation(1.2, 0.0)


@pytest.mark.parametrize("a, b, label, value", [(1, 0, 0, 0.0), (0.5, 0.5, 0, 0.25), (0.5, 0.5, 1, 0.25), (0, 1, 0, 1.0)])
def test_loss(a, b, label, value):
    assert loss(Recommendation(a, b), label) == value


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_forward_output_strictly_inside_unit_interval(seed):
    rng = np.random.default_rng(seed)
    rec, _ = forward(init_network(seed=seed), rng.uniform(0, 1, 10))
    assert 0 < rec.a < 1 and 0 < rec.b < 1
    assert decide(rec) in (0, 1)


# -- backprop ----------------------------------------------------------------

def test_backprop_matches_finite_differences():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        params, x, label = random_triple(rng)
        analytic = backprop(params, x, label).as_vector()
        np.testing.assert_allclose(analytic, fd_gradient(params, x, label), rtol=1e-5, atol=1e-7)


def test_backprop_zero_network_output_bias():
    p = NetworkParams(np.zeros((20, 10)), np.zeros(20), np.zeros((2, 20)), np.zeros(2))
    g = backprop(p, np.linspace(0, 1, 10), 1)
    np.testing.assert_array_equal(g.b2, [0.125, -0.125])
    assert not g.w1.any() and not g.b1.any()  # zero w2 blocks the hidden layer


def test_gradient_vanishes_as_output_approaches_target():
    norms = []
    for scale in (1.0, 4.0, 8.0, 16.0):
        p = NetworkParams([[1.0]], [0.0], [[-scale], [scale]], [-scale, scale])
        norms.append(np.linalg.norm(backprop(p, [1.0], 1).as_vector()))
    assert all(later < earlier for earlier, later in zip(norms, norms[1:]))
    assert norms[-1] < 1e-12


def test_backprop_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        backprop(init_network(seed=0), np.zeros(3), 1)


def test_mean_gradient_is_mean_of_backprop():
    rng = np.random.default_rng(5)
    p = init_network((4, 6, 2), 3)
    rows, labels = rng.uniform(0, 1, (9, 4)), rng.integers(0, 2, 9)
    _, g = mean_gradient(p, make_examples(rows, labels))
    per_example = np.mean([backprop(p, r, int(y)).as_vector() for r, y in zip(rows, labels)], axis=0)
    np.testing.assert_allclose(g.as_vector(), per_example, rtol=1e-12, atol=1e-15)


# -- train -------------------------------------------------------------------

def test_train_config_contract():
    for bad in (dict(epochs=0), dict(learning_rate=0.0), dict(learning_rate=-1), dict(seed=-1),
                dict(seed=2**64), dict(loss="cross_entropy"), dict(update="sgd"), dict(epochs=1.5)):
        with pytest.raises(ConfigInvalid):
            TrainConfig(**bad)
    assert TrainConfig() == TrainConfig(0.5, 1000, 0, "quadratic", "full_batch")


def test_train_empty_set():
    with pytest.raises(EmptyTrainSet):
        train(init_network(seed=0), [], TrainConfig(epochs=1))


def test_train_step_is_learning_rate_times_mean_gradient():
    rng = np.random.default_rng(9)
    p = init_network((10, 20, 2), 1)
    ex = make_examples(rng.uniform(0, 1, (6, 10)), rng.integers(0, 2, 6))
    _, g = mean_gradient(p, ex)
    stepped = train(p, ex, TrainConfig(learning_rate=0.3, epochs=1))
    np.testing.assert_allclose(stepped.as_vector(), p.as_vector() - 0.3 * g.as_vector(), rtol=0, atol=1e-15)


def test_training_reduces_loss_on_separable_data():
    rng = np.random.default_rng(3)
    rows = np.vstack([rng.uniform(0, 0.3, (10, 10)), rng.uniform(0.7, 1, (10, 10))])
    ex = make_examples(rows, [0] * 10 + [1] * 10)
    p = init_network(seed=11)
    trained, history = train_with_history(p, ex, TrainConfig())
    assert history.shape == (1001,)
    assert history[-1] < history[0]
    assert history[0] == pytest.approx(mean_gradient(p, ex)[0], rel=1e-12)
    assert history[-1] == pytest.approx(mean_gradient(trained, ex)[0], rel=1e-12)
    assert all(decide(forward(trained, e.features)[0]) == e.label for e in ex)


def test_training_is_bit_reproducible(walk):
    ex = build_split(walk).train
    cfg = TrainConfig(epochs=300)
    a = train(init_network(seed=99), ex, cfg)
    b = train(init_network(seed=99), ex, cfg)
    assert a.identical_to(b)


def test_train_many_matches_individual_training():
    splits = [build_split(random_walk_series(f"W{i}", n_days=200 + 10 * (i % 3), seed=i)) for i in range(8)]
    nets = [init_network(seed=100 + i) for i in range(8)]
    cfg = TrainConfig(epochs=150)
    together = train_many(nets, [s.train for s in splits], cfg)
    # reversed order lands the same networks in differently composed stacks
    backwards = train_many(nets[::-1], [s.train for s in splits][::-1], cfg)[::-1]
    for net, split, t, r in zip(nets, splits, together, backwards):
        alone = train(net, split.train, cfg)
        assert alone.identical_to(t) and alone.identical_to(r)


def test_train_does_not_mutate_inputs(walk):
    p = init_network(seed=4)
    before = p.as_vector().copy()
    train(p, build_split(walk).train, TrainConfig(epochs=5))
    np.testing.assert_array_equal(p.as_vector(), before)


def test_descent_rarely_increases_loss():
    increases = total = 0
    for i in range(20):
        ex = build_split(random_walk_series(f"D{i}", seed=500 + i)).train
        lr = (0.1, 0.25, 0.5)[i % 3]
        _, history = train_with_history(init_network(seed=i), ex, TrainConfig(learning_rate=lr, epochs=500))
        steps = np.diff(history)
        increases += int(np.sum(steps > 1e-9))
        total += steps.size
    assert increases / total <= 0.01
