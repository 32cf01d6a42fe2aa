import copy

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gatqnn.circuit import SlotId, slot_set
from gatqnn.errors import EmptyResults
from gatqnn.pool import ParameterPool, TrainedResult, extract, init_pool, pool_hash, reintegrate, write_slots


@pytest.fixture
def pool():
    return init_pool(4, 2, 4, np.random.default_rng(5))


def result(ch, fitness, angles, head=0.0):
    slots = slot_set(ch)
    angles = np.broadcast_to(np.asarray(angles, dtype=float), (len(slots),)).copy()
    return TrainedResult(tuple(ch), fitness, slots, angles, np.full((4, 4), head), np.full(4, head))


def test_init_shapes_and_ranges(pool):
    assert pool.quantum.shape == (2, 4) and len(pool.slots) == 8
    assert pool.head_weights.size + pool.head_bias.size == 20
    assert np.all(np.abs(pool.quantum) <= np.pi)
    assert np.all(np.abs(pool.head_weights) <= 0.5)
    assert np.all(pool.head_bias == 0) and pool.revision == 0


def test_init_deterministic():
    a = init_pool(4, 2, 4, np.random.default_rng(1))
    b = init_pool(4, 2, 4, np.random.default_rng(1))
    assert pool_hash(a) == pool_hash(b)


def test_pool_arrays_read_only(pool):
    with pytest.raises(ValueError):
        pool.quantum[0, 0] = 1.0
    with pytest.raises(ValueError):
        pool.head_weights[0, 0] = 1.0


def test_extract_full_and_partial(pool):
    full = extract(pool, (4, 4, 4, 4, 2))
    assert len(full.slots) == 8 and np.allclose(full.angles, pool.quantum.ravel())
    part = extract(pool, (1, 1, 4, 1, 1))
    assert part.slots == [SlotId(1, 0)]
    assert part.angles[0] == pool.quantum[0, 0]


def test_extract_returns_copies(pool):
    digest = pool_hash(pool)
    a = extract(pool, (4, 4, 4, 4, 2))
    a.angles[:] = 0.0
    a.head_weights[:] = 0.0
    b = extract(pool, (4, 4, 4, 4, 2))
    assert np.allclose(b.angles, pool.quantum.ravel())
    assert pool_hash(pool) == digest


def test_reintegrate_single_full_result(pool):
    out = reintegrate(pool, [result((4, 4, 4, 4, 2), 0.7, np.arange(8.0), head=0.3)])
    assert np.array_equal(out.quantum.ravel(), np.arange(8.0))
    assert np.all(out.head_weights == 0.3) and out.revision == pool.revision + 1


def test_reintegrate_disjoint_coverage(pool):
    a = result((1, 1, 1, 1, 1), 0.2, 1.0)  # slot (1,0)
    b = TrainedResult((2, 1, 1, 1, 1), 0.9, [SlotId(1, 1)], np.array([2.0]), np.zeros((4, 4)), np.zeros(4))
    out = reintegrate(pool, [a, b])
    assert out.angle(SlotId(1, 0)) == 1.0 and out.angle(SlotId(1, 1)) == 2.0


def test_reintegrate_hand_trace(pool):
    a = result((1, 1, 1, 1, 1), 0.9, [0.11], head=1.0)
    b = result((2, 1, 1, 1, 1), 0.5, [0.22, 0.33], head=2.0)
    out = reintegrate(pool, [a, b])
    assert out.angle(SlotId(1, 0)) == 0.11
    assert out.angle(SlotId(1, 1)) == 0.33
    assert np.all(out.head_weights == 1.0)
    # uncovered slots are bit-identical
    assert np.array_equal(out.quantum[1], pool.quantum[1])
    assert np.array_equal(out.quantum[0, 2:], pool.quantum[0, 2:])


def test_reintegrate_ties_prefer_lower_index(pool):
    a = result((1, 1, 1, 1, 1), 0.5, [1.0], head=1.0)
    b = result((1, 1, 1, 1, 1), 0.5, [2.0], head=2.0)
    out = reintegrate(pool, [a, b])
    assert out.angle(SlotId(1, 0)) == 1.0 and out.head_bias[0] == 1.0


def test_reintegrate_weighted(pool):
    a = result((1, 1, 1, 1, 1), 0.75, [1.0], head=1.0)
    b = result((1, 1, 1, 1, 1), 0.25, [3.0], head=3.0)
    out = reintegrate(pool, [a, b], policy="weighted")
    assert out.angle(SlotId(1, 0)) == pytest.approx(1.5)
    assert out.head_bias[0] == pytest.approx(1.5)


def test_reintegrate_empty(pool):
    with pytest.raises(EmptyResults):
        reintegrate(pool, [])


def test_write_slots_full(pool):
    params = extract(pool, (4, 4, 4, 4, 2))
    params.angles = params.angles + 1.0
    out = write_slots(pool, params)
    assert np.allclose(out.quantum, pool.quantum + 1.0) and out.revision == 1


def test_hash_semantics(pool):
    assert pool_hash(pool) == pool_hash(copy.deepcopy(pool))
    assert pool_hash(pool) == pool_hash(pool.replace(revision=7))
    q = np.array(pool.quantum)
    q[1, 2] += 1e-3
    assert pool_hash(pool) != pool_hash(pool.replace(quantum=q))


def test_json_round_trip(pool, tmp_path):
    path = tmp_path / "pool.json"
    pool.replace(revision=3).save(path)
    back = ParameterPool.load(path)
    assert pool_hash(back) == pool_hash(pool) and back.revision == 3
    doc = pool.to_dict()
    assert set(doc) >= {"n", "L_max", "C", "revision", "quantum", "head_weights", "head_bias"}
    assert doc["quantum"][0] == {"layer": 1, "wire": 0, "angle": pool.quantum[0, 0]}


chromosomes = st.tuples(*[st.integers(1, 4)] * 4, st.integers(1, 2))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(chromosomes, st.floats(0, 1)), min_size=1, max_size=6), st.integers(0, 1000))
def test_reintegration_conservative(entries, seed):
    pool = init_pool(4, 2, 4, np.random.default_rng(seed))
    rng = np.random.default_rng(seed + 1)
    results = [result(ch, f, rng.standard_normal(len(slot_set(ch)))) for ch, f in entries]
    covered = {s for r in results for s in r.slots}
    for policy in ("best", "weighted"):
        out = reintegrate(pool, results, policy)
        assert out.revision == pool.revision + 1
        for s in pool.slots:
            candidates = [a for r in results for t, a in zip(r.slots, r.angles) if t == s]
            if s not in covered:
                assert out.angle(s) == pool.angle(s)
            elif policy == "best":
                assert out.angle(s) in candidates
            else:
                assert min(candidates) - 1e-12 <= out.angle(s) <= max(candidates) + 1e-12
