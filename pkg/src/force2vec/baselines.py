"""Random-walk skip-gram and Katz-proximity factorization baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit, prange
from sklearn.utils.extmath import randomized_svd

from .engine import init_embedding, thread_count
from .errors import ConfigError, TrainingError, ValidationError
from .graph import CsrGraph
from .models import SIGMOID, add_attractive, add_repulsive
from .rng import draw_index, stream_key

DENSE_LIMIT = 20_000


@dataclass
class WalkCorpus:
    """Walks stored row-wise; truncated walks are padded with -1."""

    walks: np.ndarray
    walks_per_vertex: int
    walk_length: int
    window: int = 10

    @property
    def n_tokens(self) -> int:
        return int(np.count_nonzero(self.walks >= 0))


@njit(parallel=True, cache=True)
def _walks(row_ptr, col_ids, per_vertex, length, seed, out):
    n = row_ptr.shape[0] - 1
    for idx in prange(n * per_vertex):
        rep = idx // n
        u = idx % n
        key = stream_key(seed, rep, u)
        j = np.int64(u)
        out[idx, 0] = j
        for step in range(1, length):
            lo = row_ptr[j]
            deg = row_ptr[j + 1] - lo
            if deg == 0:
                for rest in range(step, length):
                    out[idx, rest] = -1
                break
            j = np.int64(col_ids[lo + draw_index(key, step, deg)])
            out[idx, step] = j


def generate_walks(g: CsrGraph, walks_per_vertex: int = 10, walk_length: int = 80, seed: int = 0,
                   window: int = 10, threads: int = 1) -> WalkCorpus:
    """Uniform random walks of ``walk_length`` vertices, ``walks_per_vertex`` from each vertex.

    Walk ``rep * n + u`` starts at ``u``; a walk that reaches an isolated
    vertex stops there.
    """
    if walk_length < 1 or walks_per_vertex < 1:
        raise ConfigError("walk_length and walks_per_vertex must be >= 1")
    out = np.empty((g.n * walks_per_vertex, walk_length), dtype=np.int64)
    with thread_count(threads):
        _walks(g.row_ptr, g.col_ids, walks_per_vertex, walk_length, seed, out)
    return WalkCorpus(out, walks_per_vertex, walk_length, window)


@njit(cache=True)
def _walk_pairs(walk, window):
    """All (center, context) pairs of a walk in position order, plus per-position offsets."""
    length = 0
    while length < walk.shape[0] and walk[length] >= 0:
        length += 1
    starts = np.zeros(length + 1, dtype=np.int64)
    for i in range(length):
        starts[i + 1] = starts[i] + min(length - 1, i + window) - max(0, i - window)
    pairs = np.empty((starts[length], 2), dtype=np.int64)
    p = 0
    for i in range(length):
        for j in range(max(0, i - window), min(length, i + window + 1)):
            if j != i:
                pairs[p, 0] = walk[i]
                pairs[p, 1] = walk[j]
                p += 1
    return pairs, starts


@njit(parallel=True, cache=True)
def _skipgram(walks, window, target, context, neg, lr, epochs, seed, batch):
    n, d = target.shape
    width = 2 * window * batch
    gt = np.zeros((width, d))
    gc = np.zeros((width, neg + 1, d))
    rows = np.empty((width, neg + 1), dtype=np.int64)
    for ep in range(epochs):
        for w in range(walks.shape[0]):
            pairs, starts = _walk_pairs(walks[w], window)
            npos = starts.shape[0] - 1
            stream = ep * walks.shape[0] + w
            for pos in range(0, npos, batch):
                lo = starts[pos]
                size = starts[min(npos, pos + batch)] - lo
                for i in prange(size):
                    p = lo + i
                    t = pairs[p, 0]
                    c = pairs[p, 1]
                    key = stream_key(seed, stream, p)
                    gt[i, :] = 0.0
                    gc[i, :, :] = 0.0
                    rows[i, 0] = c
                    add_attractive(SIGMOID, target[t], context[c], 1.0, gt[i])
                    add_attractive(SIGMOID, context[c], target[t], 1.0, gc[i, 0])
                    for k in range(neg):
                        v = draw_index(key, k, n)
                        rows[i, k + 1] = v
                        add_repulsive(SIGMOID, target[t], context[v], 1.0, gt[i])
                        add_repulsive(SIGMOID, context[v], target[t], 1.0, gc[i, k + 1])
                # fixed-order scatter keeps results independent of the schedule
                for i in range(size):
                    t = pairs[lo + i, 0]
                    for k in range(d):
                        target[t, k] -= lr * gt[i, k]
                    for r in range(neg + 1):
                        v = rows[i, r]
                        for k in range(d):
                            context[v, k] -= lr * gc[i, r, k]


def skipgram_train(corpus: WalkCorpus, n: int, d: int = 128, neg: int = 5, lr: float = 0.025,
                   epochs: int = 1, seed: int = 0, threads: int = 1, batch: int = 1) -> np.ndarray:
    """Two-matrix skip-gram with uniform negative sampling; returns the target matrix.

    A batch is ``batch`` consecutive walk positions: every (center, context)
    pair they own, with ``neg`` negatives each, is scored against the
    parameters as they stood before the batch, then all updates are applied
    in pair order.
    """
    if corpus.window < 1 or corpus.window > corpus.walk_length:
        raise ConfigError("window must lie in [1, walk_length]")
    if neg < 1 or d < 1 or epochs < 1 or batch < 1 or not lr > 0:
        raise ConfigError("need neg, d, epochs, batch >= 1 and lr > 0")
    target = init_embedding(n, d, seed)
    context = np.zeros((n, d))
    with thread_count(threads):
        _skipgram(corpus.walks, corpus.window, target, context, neg, float(lr), epochs, seed, batch)
    if not np.all(np.isfinite(target)):
        raise TrainingError("skip-gram produced non-finite coordinates; lower the learning rate")
    return target


def deepwalk(g: CsrGraph, d: int = 128, walks_per_vertex: int = 10, walk_length: int = 80, window: int = 10,
             neg: int = 5, lr: float = 0.025, epochs: int = 1, seed: int = 0, threads: int = 1) -> np.ndarray:
    corpus = generate_walks(g, walks_per_vertex, walk_length, seed, window=window, threads=threads)
    return skipgram_train(corpus, g.n, d, neg, lr, epochs, seed, threads)


# --------------------------------------------------------------------------
# Katz / HOPE
# --------------------------------------------------------------------------

def _adjacency(g: CsrGraph) -> sp.csr_matrix:
    return sp.csr_matrix((g.weight_array(), g.col_ids, g.row_ptr), shape=(g.n, g.n))


def spectral_radius(g: CsrGraph, iters: int = 50) -> float:
    """Power-iteration estimate of the largest adjacency eigenvalue magnitude."""
    a = _adjacency(g)
    x = np.ones(g.n) / np.sqrt(max(g.n, 1))
    rho = 0.0
    for _ in range(iters):
        y = a @ x
        rho = float(np.linalg.norm(y))
        if rho == 0.0:
            return 0.0
        x = y / rho
    return rho


def katz_proximity(g: CsrGraph, beta: float = 0.01, tol: float = 1e-10, max_terms: int = 100_000) -> np.ndarray:
    """Dense Katz matrix ``sum_{l>=1} beta^l A^l``, truncated once a term's max-norm drops below ``tol``."""
    if g.n > DENSE_LIMIT:
        raise ValidationError(f"Katz proximity is dense; n={g.n} exceeds the {DENSE_LIMIT} vertex limit")
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    rho = spectral_radius(g)
    if beta * rho >= 1.0:
        raise ConfigError(f"beta={beta} diverges: beta * rho(A) >= 1 with estimated rho(A)={rho:.6g}")
    a = _adjacency(g)
    term = beta * a.toarray()
    s = term.copy()
    for _ in range(max_terms):
        if np.abs(term).max(initial=0.0) < tol:
            break
        term = beta * (a @ term)
        s += term
    else:
        raise ConfigError(f"Katz series did not converge in {max_terms} terms (rho(A)~{rho:.6g})")
    return 0.5 * (s + s.T)


def hope_embed(s: np.ndarray, d: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Rank-``d`` factors ``(U sqrt(S), V sqrt(S))`` of a proximity matrix via randomized SVD."""
    n = s.shape[0]
    if not 1 <= d <= n:
        raise ValidationError(f"dimension {d} must lie in [1, n={n}]")
    u, sigma, vt = randomized_svd(s, n_components=d, n_oversamples=8, n_iter=4,
                                  power_iteration_normalizer="QR", random_state=seed)
    root = np.sqrt(sigma)
    return u * root, vt.T * root


def hope(g: CsrGraph, d: int = 128, beta: float = 0.01, seed: int = 0) -> np.ndarray:
    source, _ = hope_embed(katz_proximity(g, beta), min(d, g.n), seed)
    if source.shape[1] < d:
        source = np.hstack([source, np.zeros((g.n, d - source.shape[1]))])
    return source
