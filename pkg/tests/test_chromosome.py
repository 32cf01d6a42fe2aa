import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gatqnn.chromosome import (
    GeneBounds,
    active_genes,
    crossover,
    depth,
    mutate,
    random_chromosome,
    to_json,
    validate,
)
from gatqnn.errors import InvalidChromosome, TooManyPoints

DEFAULT = GeneBounds()
SINGLETON = GeneBounds(width=(1, 1), depth=(1, 1))

chromosomes = st.tuples(*[st.integers(1, 4)] * 4, st.integers(1, 2))
seeds = st.integers(0, 2**32 - 1)


def test_singleton_bounds_always_all_ones():
    rng = np.random.default_rng(0)
    assert all(random_chromosome(SINGLETON, rng) == (1, 1, 1, 1, 1) for _ in range(20))


def test_width_gene_uniformity():
    rng = np.random.default_rng(0)
    draws = np.array([random_chromosome(DEFAULT, rng) for _ in range(10_000)])
    for pos in range(4):
        freq = np.bincount(draws[:, pos], minlength=5)[1:] / len(draws)
        assert np.max(np.abs(freq - 0.25)) <= 0.02
    depth_freq = np.bincount(draws[:, 4], minlength=3)[1:] / len(draws)
    assert np.max(np.abs(depth_freq - 0.5)) <= 0.02


@pytest.mark.parametrize(
    "ch,expected",
    [((1, 1, 4, 1, 1), [1, 1]), ((3, 2, 2, 1, 2), [3, 2, 2, 1]), ((4, 4, 4, 4, 2), [4, 4, 4, 4])],
)
def test_active_genes(ch, expected):
    assert active_genes(ch) == expected
    assert depth(ch) == ch[-1]


def test_validate_rejects():
    with pytest.raises(InvalidChromosome):
        validate((1, 1, 1, 1), DEFAULT)
    with pytest.raises(InvalidChromosome):
        validate((5, 1, 1, 1, 1), DEFAULT)
    with pytest.raises(InvalidChromosome):
        validate((1, 1, 1, 1, 3), DEFAULT)


def test_bounds_reject_width_above_qubits():
    with pytest.raises(ValueError):
        GeneBounds(width=(1, 5), n_qubits=4)


def test_crossover_hand_trace():
    child = crossover((1, 1, 1, 1, 1), (4, 4, 4, 4, 2), 3, None, cuts=[1, 2, 3])
    assert child == (1, 4, 1, 4, 2)


def test_crossover_identical_parents():
    p = (3, 2, 2, 1, 2)
    assert crossover(p, p, 3, np.random.default_rng(1)) == p


def test_crossover_too_many_points():
    with pytest.raises(TooManyPoints):
        crossover((1,) * 5, (2,) * 5, 5, np.random.default_rng(0))


def test_crossover_cut_positions_uniform():
    # 3 distinct cuts out of 4 boundaries: each boundary is used with probability 3/4
    rng = np.random.default_rng(3)
    p1, p2 = (1, 1, 1, 1, 1), (2, 2, 2, 2, 2)
    switches = np.zeros(4)
    trials = 4000
    for _ in range(trials):
        c = crossover(p1, p2, 3, rng)
        switches += np.array([c[i] != c[i + 1] for i in range(4)])
    assert np.allclose(switches / trials, 0.75, atol=0.03)


def test_mutate_depth_gene():
    assert mutate((1, 1, 4, 1, 1), DEFAULT, np.random.default_rng(0), position=4) == (1, 1, 4, 1, 2)


def test_mutate_singleton_unchanged():
    assert mutate((1, 1, 1, 1, 1), SINGLETON, np.random.default_rng(0)) == (1, 1, 1, 1, 1)


def test_to_json():
    assert to_json((3, 2, 2, 1, 2)) == "[3,2,2,1,2]"


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_random_chromosome_validates(seed):
    validate(random_chromosome(DEFAULT, np.random.default_rng(seed)), DEFAULT)


@settings(max_examples=200, deadline=None)
@given(chromosomes, chromosomes, st.integers(0, 4), seeds)
def test_crossover_provenance_and_closure(p1, p2, k, seed):
    child = crossover(p1, p2, k, np.random.default_rng(seed))
    validate(child, DEFAULT)
    assert all(c in (a, b) for c, a, b in zip(child, p1, p2))
    if k == 0:
        assert child == p1


@settings(max_examples=200, deadline=None)
@given(chromosomes, seeds)
def test_mutation_hamming_one(ch, seed):
    out = mutate(ch, DEFAULT, np.random.default_rng(seed))
    validate(out, DEFAULT)
    assert sum(a != b for a, b in zip(ch, out)) == 1


@settings(max_examples=50, deadline=None)
@given(chromosomes, chromosomes, seeds)
def test_operators_deterministic(p1, p2, seed):
    def run():
        rng = np.random.default_rng(seed)
        return random_chromosome(DEFAULT, rng), crossover(p1, p2, 3, rng), mutate(p1, DEFAULT, rng)

    assert run() == run()
