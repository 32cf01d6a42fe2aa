import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gatqnn.backend import BackendConfig
from gatqnn.chromosome import GeneBounds, random_chromosome
from gatqnn.circuit import build
from gatqnn.data import EncodedDataset, synthetic_blobs
from gatqnn.errors import EmptyDataset, LabelOutOfRange
from gatqnn.hqnn import (
    HybridModel,
    TrainConfig,
    batch_gradients,
    evaluate,
    forward,
    grad_head,
    grad_quantum,
    loss,
    train,
)

import oracles

EXACT = BackendConfig("exact")


def random_model(rng, ch=None, classes=4):
    ch = ch or random_chromosome(GeneBounds(), rng)
    spec = build(ch, 4)
    return HybridModel(
        spec,
        rng.uniform(-np.pi, np.pi, len(spec.slots)),
        rng.uniform(-1, 1, (classes, 4)),
        rng.uniform(-0.5, 0.5, classes),
    )


def flat_params(m):
    return np.concatenate([m.angles, m.head_weights.ravel(), m.head_bias])


def dense_loss_fn(m, x, label):
    n_ang, c = len(m.angles), m.n_classes

    def f(v):
        return oracles.dense_loss(m.spec, x, label, v[:n_ang], v[n_ang : n_ang + 4 * c].reshape(c, 4), v[n_ang + 4 * c :])

    return f


def assert_gradients_close(analytic, numeric, rel=1e-5, abs_small=1e-7):
    for a, n in zip(analytic, numeric):
        if abs(n) < 1e-2:
            assert abs(a - n) <= abs_small, (a, n)
        else:
            assert abs(a - n) <= rel * abs(n), (a, n)


def test_forward_uniform_and_bias():
    rng = np.random.default_rng(0)
    m = random_model(rng)
    m.head_weights[:] = 0
    m.head_bias[:] = 0
    x = oracles.random_unit(rng, 16)
    assert np.allclose(forward(m, x, EXACT), 0.25)
    m.head_bias[:] = [10, 0, 0, 0]
    assert np.argmax(forward(m, x, EXACT)) == 0


def test_loss_examples():
    assert loss(np.full(4, 0.25), 2) == pytest.approx(np.log(4), abs=1e-4)
    assert loss(np.eye(4)[1], 1) == 0.0
    assert loss(np.eye(4)[1], 0) == pytest.approx(-np.log(1e-12))
    with pytest.raises(LabelOutOfRange):
        loss(np.full(4, 0.25), 4)


def test_gradients_match_dense_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(8):
        m = random_model(rng)
        x = oracles.random_unit(rng, 16)
        label = int(rng.integers(4))
        _, _, d_ang, d_w, d_b = batch_gradients(m, x, label, EXACT)
        numeric = oracles.central_difference(dense_loss_fn(m, x, label), flat_params(m))
        assert_gradients_close(np.concatenate([d_ang, d_w.ravel(), d_b]), numeric)


def test_head_gradient_examples():
    rng = np.random.default_rng(2)
    m = random_model(rng)
    x = oracles.random_unit(rng, 16)
    g_w, g_b = grad_head(m, x, 1, EXACT)
    assert abs(g_b.sum()) <= 1e-12
    # a model that is certain of the right answer has zero head gradient
    m.head_weights[:] = 0
    m.head_bias[:] = [0, 200, 0, 0]
    g_w, g_b = grad_head(m, x, 1, EXACT)
    assert np.allclose(g_w, 0) and np.allclose(g_b, 0)


def test_zero_weight_column_kills_slot_gradient():
    rng = np.random.default_rng(3)
    # CNOT-free circuit so wire 2 only feeds z[2]
    m = random_model(rng, ch=(3, 1, 1, 1, 1))
    m = HybridModel(type(m.spec)(4, tuple(g for g in m.spec.gates if g.kind == "RX"), m.spec.slots), m.angles, m.head_weights, m.head_bias)
    m.head_weights[:, 2] = 0.0
    grads = grad_quantum(m, oracles.random_unit(rng, 16), 0, EXACT)
    assert abs(grads[m.spec.slots[2]]) <= 1e-15


def test_gradient_reproducible_at_zero_angles():
    spec = build((4, 4, 4, 4, 2), 4)
    m = HybridModel(spec, np.zeros(8), np.eye(4), np.zeros(4))
    x = np.eye(16)[5]
    a = grad_quantum(m, x, 2, EXACT)
    assert a == grad_quantum(m, x, 2, EXACT)
    assert all(np.isfinite(v) for v in a.values())


def test_shot_gradients_unbiased():
    rng = np.random.default_rng(21)
    m = random_model(rng, ch=(4, 4, 3, 2, 2))
    x = oracles.random_unit(rng, 16)
    exact = batch_gradients(m, x, 1, EXACT)[2]
    shots = BackendConfig("shots", shots=1024)
    stream = np.random.default_rng(22)
    est = np.array([batch_gradients(m, x, 1, shots, stream)[2] for _ in range(1000)])
    se = est.std(axis=0, ddof=1) / np.sqrt(len(est))
    assert np.all(np.abs(est.mean(axis=0) - exact) <= 3 * se)


def test_train_zero_lr_is_identity():
    rng = np.random.default_rng(4)
    m = random_model(rng)
    data = synthetic_blobs(4, 16, 10, 0.3, rng)
    out, hist = train(m, data, TrainConfig(epochs=2, learning_rate=0.0, optimizer="sgd"), EXACT)
    assert np.array_equal(out.angles, m.angles) and np.array_equal(out.head_weights, m.head_weights)
    assert len(hist.loss) == len(hist.accuracy) == 2


def test_train_does_not_mutate_input():
    rng = np.random.default_rng(5)
    m = random_model(rng)
    before = flat_params(m).copy()
    train(m, synthetic_blobs(4, 16, 5, 0.3, rng), TrainConfig(epochs=1), EXACT)
    assert np.array_equal(flat_params(m), before)


def test_single_sample_step_descends():
    rng = np.random.default_rng(6)
    m = random_model(rng)
    x = oracles.random_unit(rng, 16)
    data = EncodedDataset(x[None, :], np.array([2]), {c: c for c in range(4)})
    for opt in ("sgd", "adam"):
        out, _ = train(m, data, TrainConfig(epochs=1, learning_rate=1e-3, batch_size=1, optimizer=opt), EXACT)
        assert loss(forward(out, x, EXACT), 2) < loss(forward(m, x, EXACT), 2)


def test_trainer_separates_two_blobs():
    # frozen from the trainer-validation script: 500 per class, spread 0.1
    rng = np.random.default_rng(0)
    data = synthetic_blobs(2, 16, 500, 0.1, rng)
    m = random_model(rng, ch=(4, 4, 4, 4, 2), classes=2)
    _, hist = train(m, data, TrainConfig(), EXACT)
    assert hist.accuracy[-1] >= 0.95


def test_empty_dataset():
    m = random_model(np.random.default_rng(0))
    empty = EncodedDataset(np.zeros((0, 16)), np.zeros(0, dtype=int), {c: c for c in range(4)})
    with pytest.raises(EmptyDataset):
        train(m, empty, TrainConfig(), EXACT)
    with pytest.raises(EmptyDataset):
        evaluate(m, empty, EXACT)


def test_evaluate_constant_predictor():
    spec = build((1, 1, 1, 1, 1), 4)
    m = HybridModel(spec, [0.0], np.zeros((4, 4)), np.array([5.0, 0, 0, 0]))
    rng = np.random.default_rng(0)
    ones = EncodedDataset(np.tile(np.eye(16)[0], (8, 1)), np.zeros(8, dtype=int), {c: c for c in range(4)})
    assert evaluate(m, ones, EXACT) == 1.0
    balanced = synthetic_blobs(4, 16, 5, 0.3, rng)
    assert evaluate(m, balanced, EXACT) == 0.25


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_forward_properties_and_purity(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng)
    before = flat_params(m).copy()
    data = synthetic_blobs(4, 16, 3, 0.5, rng)
    p = forward(m, data.features, EXACT)
    assert np.all(p > 0) and np.allclose(p.sum(axis=1), 1.0, atol=1e-10)
    acc = evaluate(m, data, EXACT)
    perm = rng.permutation(len(data))
    assert evaluate(m, data.take(perm), EXACT) == acc
    assert all(loss(row, int(y)) >= 0 for row, y in zip(p, data.labels))
    assert np.array_equal(flat_params(m), before)
