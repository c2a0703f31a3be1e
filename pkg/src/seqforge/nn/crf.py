"""Linear-chain CRF over emission scores: log-space forward algorithm for
the negative log-likelihood, forward-backward posterior marginals for exact
gradients, and max-product Viterbi decoding.

The transition matrix has two virtual states appended after the K labels:
START = K and END = K + 1. Transitions into START and out of END are never
read. A path score is

    A[START, y_1] + sum_t E[t, y_t] + sum_{t>=2} A[y_{t-1}, y_t] + A[y_T, END]
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LabelOutOfRange


def log_sum_exp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-shifted logsumexp along `axis`; safe for large magnitudes."""
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(
        np.sum(np.exp(a - m), axis=axis))


@dataclass
class CrfCache:
    emissions: np.ndarray     # (T, K)
    transitions: np.ndarray   # (K+2, K+2)
    gold: np.ndarray          # (T,)
    alpha: np.ndarray         # (T, K) forward lattice
    log_z: float


@dataclass
class SoftmaxCache:
    emissions: np.ndarray
    gold: np.ndarray
    probs: np.ndarray         # (T, K) softmax rows


def path_score(emissions: np.ndarray, transitions: np.ndarray,
               labels: np.ndarray) -> float:
    """Score of one label sequence, including START/END transitions."""
    K = emissions.shape[1]
    start, end = K, K + 1
    score = transitions[start, labels[0]] + transitions[labels[-1], end]
    score += emissions[np.arange(len(labels)), labels].sum()
    score += transitions[labels[:-1], labels[1:]].sum()
    return float(score)


def crf_nll(emissions: np.ndarray, transitions: np.ndarray,
            gold: np.ndarray) -> tuple[float, CrfCache]:
    """Negative log-likelihood of the gold sequence: logZ - score(gold),
    with logZ computed by the log-space forward algorithm."""
    T, K = emissions.shape
    gold = np.asarray(gold, dtype=np.intp)
    if gold.shape != (T,):
        raise LabelOutOfRange(f"gold length {gold.shape} != ({T},)")
    if np.any(gold < 0) or np.any(gold >= K):
        raise LabelOutOfRange(f"gold labels outside [0,{K})")
    start, end = K, K + 1

    alpha = np.empty((T, K))
    alpha[0] = transitions[start, :K] + emissions[0]
    inner = transitions[:K, :K]  # (from, to)
    for t in range(1, T):
        # alpha[t-1][j] + A[j, k], reduced over j
        alpha[t] = emissions[t] + log_sum_exp(
            alpha[t - 1][:, None] + inner, axis=0)
    log_z = float(log_sum_exp(alpha[-1] + transitions[:K, end]))
    loss = log_z - path_score(emissions, transitions, gold)
    return loss, CrfCache(emissions=emissions, transitions=transitions,
                          gold=gold, alpha=alpha, log_z=log_z)


def crf_backward(cache: CrfCache) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the NLL w.r.t. emissions and transitions.

    d logZ / dE are the posterior unary marginals and d logZ / dA the
    pairwise marginals (summed over positions); the gold path contributes
    its negated indicator counts.
    """
    E, A, gold = cache.emissions, cache.transitions, cache.gold
    alpha, log_z = cache.alpha, cache.log_z
    T, K = E.shape
    start, end = K, K + 1
    inner = A[:K, :K]

    beta = np.empty((T, K))
    beta[-1] = A[:K, end]
    for t in range(T - 2, -1, -1):
        beta[t] = log_sum_exp(inner + (E[t + 1] + beta[t + 1])[None, :], axis=1)

    marginals = np.exp(alpha + beta - log_z)          # (T, K)

    dE = marginals.copy()
    dE[np.arange(T), gold] -= 1.0

    dA = np.zeros_like(A)
    for t in range(T - 1):
        pairwise = np.exp(alpha[t][:, None] + inner
                          + (E[t + 1] + beta[t + 1])[None, :] - log_z)
        dA[:K, :K] += pairwise
    dA[start, :K] += marginals[0]
    dA[:K, end] += marginals[-1]

    dA[start, gold[0]] -= 1.0
    if T > 1:
        # duplicate gold bigrams must accumulate
        np.subtract.at(dA, (gold[:-1], gold[1:]), 1.0)
    dA[gold[-1], end] -= 1.0
    return dE, dA


def viterbi_decode(emissions: np.ndarray,
                   transitions: np.ndarray) -> tuple[list[int], float]:
    """Exact argmax label sequence and its score, by max-product dynamic
    programming. Ties break toward the lower label index (argmax takes the
    first maximum, applied from the sequence end backwards)."""
    T, K = emissions.shape
    start, end = K, K + 1
    inner = transitions[:K, :K]

    delta = np.empty((T, K))
    back = np.empty((T, K), dtype=np.intp)
    delta[0] = transitions[start, :K] + emissions[0]
    for t in range(1, T):
        scores = delta[t - 1][:, None] + inner    # (from, to)
        back[t] = np.argmax(scores, axis=0)
        delta[t] = emissions[t] + scores[back[t], np.arange(K)]
    final = delta[-1] + transitions[:K, end]
    last = int(np.argmax(final))
    best_score = float(final[last])

    labels = [last]
    for t in range(T - 1, 0, -1):
        last = int(back[t, last])
        labels.append(last)
    labels.reverse()
    return labels, best_score


def softmax_nll(emissions: np.ndarray,
                gold: np.ndarray) -> tuple[float, SoftmaxCache]:
    """Per-token cross-entropy of softmaxed emissions, summed over the
    sentence (the CRF-disabled training loss)."""
    T, K = emissions.shape
    gold = np.asarray(gold, dtype=np.intp)
    if np.any(gold < 0) or np.any(gold >= K):
        raise LabelOutOfRange(f"gold labels outside [0,{K})")
    shifted = emissions - emissions.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_z = np.log(exp.sum(axis=1)) + emissions.max(axis=1)
    loss = float((log_z - emissions[np.arange(T), gold]).sum())
    return loss, SoftmaxCache(emissions=emissions, gold=gold, probs=probs)


def softmax_backward(cache: SoftmaxCache) -> np.ndarray:
    """Gradient of the summed cross-entropy w.r.t. emissions."""
    dE = cache.probs.copy()
    dE[np.arange(len(cache.gold)), cache.gold] -= 1.0
    return dE


def softmax_decode(emissions: np.ndarray) -> list[int]:
    """Per-position argmax (first maximum, so ties take the lower index)."""
    return [int(i) for i in np.argmax(emissions, axis=1)]
