"""CRF layer checked against exhaustive enumeration.

The oracle here recomputes path scores and the partition function directly
from the scoring formula, independently of the production DP code.
"""
import itertools
import math

import numpy as np
import pytest

from seqforge.errors import LabelOutOfRange
from seqforge.nn import (
    crf_backward,
    crf_nll,
    log_sum_exp,
    softmax_backward,
    softmax_decode,
    softmax_nll,
    viterbi_decode,
)


def enum_score(E, A, seq):
    """Oracle: score one sequence straight from the formula."""
    K = E.shape[1]
    start, end = K, K + 1
    total = A[start, seq[0]] + A[seq[-1], end]
    for t, y in enumerate(seq):
        total += E[t, y]
    for a, b in zip(seq, seq[1:]):
        total += A[a, b]
    return total


def enum_log_z(E, A):
    """Oracle: partition function by summing every path."""
    T, K = E.shape
    return math.log(sum(
        math.exp(enum_score(E, A, seq))
        for seq in itertools.product(range(K), repeat=T)))


def enum_argmax(E, A):
    """Oracle: best path, ties resolved exactly like backtracking Viterbi
    with first-argmax (minimal sequence under right-to-left comparison)."""
    T, K = E.shape
    best_score = -math.inf
    best = None
    for seq in itertools.product(range(K), repeat=T):
        s = enum_score(E, A, seq)
        key = tuple(reversed(seq))
        if s > best_score or (s == best_score and key < best):
            best_score, best = s, key
    return list(reversed(best)), best_score


def random_instance(rng, T=None, K=None):
    T = T or int(rng.integers(1, 6))
    K = K or int(rng.integers(2, 5))
    E = rng.normal(size=(T, K))
    A = rng.normal(size=(K + 2, K + 2))
    return E, A


class TestCrfNll:
    def test_uniform_t1_is_ln2(self):
        loss, _ = crf_nll(np.zeros((1, 2)), np.zeros((4, 4)), np.array([0]))
        assert loss == pytest.approx(math.log(2), abs=1e-12)

    def test_uniform_t2_is_ln4(self):
        for gold in ([0, 0], [0, 1], [1, 0], [1, 1]):
            loss, _ = crf_nll(np.zeros((2, 2)), np.zeros((4, 4)),
                              np.array(gold))
            assert loss == pytest.approx(math.log(4), abs=1e-12)

    def test_matches_enumeration_t3_k3(self):
        rng = np.random.default_rng(7)
        E, A = random_instance(rng, T=3, K=3)
        gold = np.array([1, 2, 0])
        loss, _ = crf_nll(E, A, gold)
        expected = enum_log_z(E, A) - enum_score(E, A, tuple(gold))
        assert loss == pytest.approx(expected, abs=1e-10)

    def test_loss_nonnegative(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            E, A = random_instance(rng)
            gold = rng.integers(0, E.shape[1], size=E.shape[0])
            loss, _ = crf_nll(E, A, gold)
            assert loss >= 0.0

    def test_gold_out_of_range(self):
        with pytest.raises(LabelOutOfRange):
            crf_nll(np.zeros((1, 2)), np.zeros((4, 4)), np.array([5]))

    def test_probabilities_normalize(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            E, A = random_instance(rng)
            T, K = E.shape
            total = sum(
                math.exp(-crf_nll(E, A, np.array(seq))[0])
                for seq in itertools.product(range(K), repeat=T))
            assert total == pytest.approx(1.0, abs=1e-9)


class TestViterbi:
    def test_zero_transitions_is_per_position_argmax(self):
        rng = np.random.default_rng(5)
        E = rng.normal(size=(6, 3))
        labels, _ = viterbi_decode(E, np.zeros((5, 5)))
        assert labels == list(np.argmax(E, axis=1))

    def test_t1(self):
        E = np.array([[0.3, 0.1]])
        A = np.zeros((4, 4))
        A[2, 0], A[2, 1] = -1.0, 1.0    # START transitions favor label 1
        A[0, 3], A[1, 3] = 0.0, 0.0
        labels, score = viterbi_decode(E, A)
        assert labels == [1]
        assert score == pytest.approx(1.0 + 0.1)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            E, A = random_instance(rng)
            labels, score = viterbi_decode(E, A)
            exp_labels, exp_score = enum_argmax(E, A)
            assert labels == exp_labels
            assert score == pytest.approx(exp_score, abs=1e-9)

    def test_all_zero_ties_take_lowest_index(self):
        labels, score = viterbi_decode(np.zeros((3, 4)), np.zeros((6, 6)))
        assert labels == [0, 0, 0]
        assert score == 0.0

    def test_shift_invariance(self):
        rng = np.random.default_rng(17)
        E, A = random_instance(rng, T=4, K=3)
        labels, _ = viterbi_decode(E, A)
        shifted = E.copy()
        shifted[2] += 123.45  # constant shift at one position
        assert viterbi_decode(shifted, A)[0] == labels


class TestCrfGradients:
    def test_emission_gradient_is_marginal_minus_onehot(self):
        loss, cache = crf_nll(np.zeros((1, 2)), np.zeros((4, 4)), np.array([0]))
        dE, dA = crf_backward(cache)
        np.testing.assert_allclose(dE, [[-0.5, 0.5]], atol=1e-12)

    def test_finite_difference_emissions_and_transitions(self):
        rng = np.random.default_rng(23)
        E, A = random_instance(rng, T=4, K=3)
        gold = np.array([0, 2, 1, 1])
        _, cache = crf_nll(E, A, gold)
        dE, dA = crf_backward(cache)
        h = 1e-6
        for idx in np.ndindex(E.shape):
            Ep, Em = E.copy(), E.copy()
            Ep[idx] += h
            Em[idx] -= h
            num = (crf_nll(Ep, A, gold)[0] - crf_nll(Em, A, gold)[0]) / (2 * h)
            assert dE[idx] == pytest.approx(num, abs=1e-6)
        for idx in np.ndindex(A.shape):
            Ap, Am = A.copy(), A.copy()
            Ap[idx] += h
            Am[idx] -= h
            num = (crf_nll(E, Ap, gold)[0] - crf_nll(E, Am, gold)[0]) / (2 * h)
            assert dA[idx] == pytest.approx(num, abs=1e-6)

    def test_gradient_near_zero_at_confident_minimum(self):
        # emissions overwhelmingly favor the gold path
        gold = np.array([0, 1, 0])
        E = np.full((3, 2), -50.0)
        E[np.arange(3), gold] = 50.0
        A = np.zeros((4, 4))
        loss, cache = crf_nll(E, A, gold)
        dE, dA = crf_backward(cache)
        assert loss < 1e-12
        assert np.abs(dE).max() < 1e-12
        assert np.abs(dA).max() < 1e-12

    def test_repeated_gold_bigrams_accumulate(self):
        rng = np.random.default_rng(29)
        E, A = random_instance(rng, T=5, K=2)
        gold = np.array([0, 1, 0, 1, 0])  # bigram (0,1) and (1,0) repeat
        _, cache = crf_nll(E, A, gold)
        _, dA = crf_backward(cache)
        h = 1e-6
        Ap, Am = A.copy(), A.copy()
        Ap[0, 1] += h
        Am[0, 1] -= h
        num = (crf_nll(E, Ap, gold)[0] - crf_nll(E, Am, gold)[0]) / (2 * h)
        assert dA[0, 1] == pytest.approx(num, abs=1e-6)


class TestSoftmaxMode:
    def test_decode_rows(self):
        assert softmax_decode(np.array([[1.0, 3.0, 2.0]])) == [1]

    def test_tie_takes_lower_index(self):
        assert softmax_decode(np.array([[2.0, 2.0]])) == [0]

    def test_uniform_loss_is_ln3_per_token(self):
        E = np.zeros((4, 3))
        loss, _ = softmax_nll(E, np.array([0, 1, 2, 0]))
        assert loss == pytest.approx(4 * math.log(3), abs=1e-12)

    def test_gradient_finite_difference(self):
        rng = np.random.default_rng(31)
        E = rng.normal(size=(3, 4))
        gold = np.array([2, 0, 3])
        _, cache = softmax_nll(E, gold)
        dE = softmax_backward(cache)
        h = 1e-6
        for idx in np.ndindex(E.shape):
            Ep, Em = E.copy(), E.copy()
            Ep[idx] += h
            Em[idx] -= h
            num = (softmax_nll(Ep, gold)[0] - softmax_nll(Em, gold)[0]) / (2 * h)
            assert dE[idx] == pytest.approx(num, abs=1e-6)


def test_log_sum_exp_stability():
    big = np.array([1000.0, 1000.0])
    assert log_sum_exp(big) == pytest.approx(1000.0 + math.log(2))
    small = np.array([-1000.0, -1000.0])
    assert log_sum_exp(small) == pytest.approx(-1000.0 + math.log(2))
