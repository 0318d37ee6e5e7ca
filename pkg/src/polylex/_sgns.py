"""Numba kernels for the skip-gram negative-sampling trainer.

The kernels release the GIL so several Python threads can apply
asynchronous (hogwild) updates to the shared parameter matrices. A single
worker with a fixed seed is bit-reproducible.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64_1 = np.uint64(1)
_MULT = np.uint64(2685821657736338717)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(inline="always", cache=True)
def _next_u64(state):
    s = state[0]
    s ^= s >> np.uint64(12)
    s ^= s << np.uint64(25)
    s ^= s >> np.uint64(27)
    state[0] = s
    return s * _MULT


@njit(inline="always", cache=True)
def _uniform(state):
    return np.float64(_next_u64(state) >> np.uint64(11)) * _INV_2_53


def seed_state(seed: int, worker: int) -> np.ndarray:
    """Derive a nonzero 64-bit xorshift state via splitmix64."""
    z = (seed * 0x9E3779B97F4A7C15 + (worker + 1) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 31
    if z == 0:
        z = 0x106689D45497FDB5
    return np.array([z], dtype=np.uint64)


@njit(cache=True, nogil=True)
def train_shard(
    tokens,          # int32[:] word ids, documents concatenated
    offsets,         # int64[:] document start offsets, len = n_docs + 1
    doc_lo,          # first document index of this shard
    doc_hi,          # one past the last document index
    word_in,         # float32[V, dim] input word vectors
    sub_in,          # float32[B, dim] input subword bucket vectors
    word_out,        # float32[V, dim] output (context) vectors
    ng_indptr,       # int64[V + 1] CSR pointers into ng_ids
    ng_ids,          # int32[:] subword bucket ids per word
    keep_prob,       # float64[V] subsampling keep probabilities
    neg_cdf,         # float64[V] cumulative unigram^0.75 distribution
    window,          # int, maximum context radius
    negatives,       # int, negatives per positive
    lr0,             # float64 initial learning rate
    total_scheduled, # float64 epochs * corpus token count
    progress,        # int64[1] shared token counter across workers/epochs
    state,           # uint64[1] per-worker RNG state
):
    dim = word_in.shape[1]
    h = np.empty(dim, dtype=np.float32)
    gh = np.empty(dim, dtype=np.float32)
    uwindow = np.uint64(window)

    for d in range(doc_lo, doc_hi):
        start = offsets[d]
        end = offsets[d + 1]
        for i in range(start, end):
            progress[0] += 1
            w = tokens[i]
            kp = keep_prob[w]
            if kp < 1.0 and _uniform(state) > kp:
                continue
            frac = 1.0 - np.float64(progress[0]) / total_scheduled
            if frac <= 0.0:
                continue
            lr = lr0 * frac

            radius = 1 + np.int64(_next_u64(state) % uwindow)
            lo = i - radius
            if lo < start:
                lo = start
            hi = i + radius
            if hi > end - 1:
                hi = end - 1

            p0 = ng_indptr[w]
            p1 = ng_indptr[w + 1]
            inv = np.float32(1.0 / (1.0 + (p1 - p0)))

            for j in range(lo, hi + 1):
                if j == i:
                    continue
                c = tokens[j]

                # center representation: mean of word row and subword rows
                for t in range(dim):
                    h[t] = word_in[w, t]
                for g in range(p0, p1):
                    row = ng_ids[g]
                    for t in range(dim):
                        h[t] += sub_in[row, t]
                for t in range(dim):
                    h[t] *= inv
                    gh[t] = 0.0

                for n in range(negatives + 1):
                    if n == 0:
                        target = np.int64(c)
                        label = 1.0
                    else:
                        u = _uniform(state)
                        target = np.searchsorted(neg_cdf, u, side="right")
                        if target >= neg_cdf.shape[0]:
                            target = neg_cdf.shape[0] - 1
                        if target == c:
                            continue
                        label = 0.0
                    score = 0.0
                    for t in range(dim):
                        score += np.float64(h[t]) * np.float64(word_out[target, t])
                    if score > 30.0:
                        sig = 1.0
                    elif score < -30.0:
                        sig = 0.0
                    else:
                        sig = 1.0 / (1.0 + math.exp(-score))
                    g_ = np.float32((label - sig) * lr)
                    for t in range(dim):
                        gh[t] += g_ * word_out[target, t]
                        word_out[target, t] += g_ * h[t]

                # distribute the mean-composition gradient to every input row
                for t in range(dim):
                    gh[t] *= inv
                for t in range(dim):
                    word_in[w, t] += gh[t]
                for g in range(p0, p1):
                    row = ng_ids[g]
                    for t in range(dim):
                        sub_in[row, t] += gh[t]


@njit(cache=True, nogil=True)
def compose_all(word_in, sub_in, ng_indptr, ng_ids, out):
    """Write the mean word-plus-subword vector of every vocabulary word."""
    dim = word_in.shape[1]
    for w in range(word_in.shape[0]):
        p0 = ng_indptr[w]
        p1 = ng_indptr[w + 1]
        inv = np.float32(1.0 / (1.0 + (p1 - p0)))
        for t in range(dim):
            out[w, t] = word_in[w, t]
        for g in range(p0, p1):
            row = ng_ids[g]
            for t in range(dim):
                out[w, t] += sub_in[row, t]
        for t in range(dim):
            out[w, t] *= inv
