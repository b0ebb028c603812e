"""Minibatch force-directed trainer.

Vertices are visited in ascending id order in batches of ``batch``. Every
batch member computes its force against the coordinates as they stood before
the batch started; the whole batch is then moved at once. Force computation
and the update are both parallel over batch members, and each member's force
is summed in a fixed order (CSR neighbors, then negatives), so the output is
identical for any thread count.
"""

from __future__ import annotations

import contextlib
import logging
import os
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .errors import ConfigError, TrainingError
from .graph import CsrGraph
from .models import MODEL_CODES, add_attractive, add_repulsive, attractive_loss, model_code, repulsive_loss
from .rng import draw_index, draw_indices, stream_key

logger = logging.getLogger(__name__)

# stream tags; the walk variant draws one negative set per iteration
_NEG_STREAM = 1
_WALK_STREAM = 2


@dataclass
class TrainConfig:
    model: str = "tdist"
    dim: int = 128
    lr: float = 0.02
    neg: int = 5
    batch: int = 256
    iters: int = 600
    walk_length: int = 80
    seed: int = 42
    threads: int = 1
    lr_decay: bool = False

    def validate(self) -> None:
        if self.model not in MODEL_CODES:
            raise ConfigError(f"unknown model {self.model!r}; choose from {sorted(MODEL_CODES)}")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if not self.lr > 0:
            raise ConfigError("lr must be > 0")
        if self.neg < 1:
            raise ConfigError("neg must be >= 1")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.iters < 1:
            raise ConfigError("iters must be >= 1")
        if self.walk_length < 1:
            raise ConfigError("walk_length must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


@contextlib.contextmanager
def thread_count(threads: int):
    """Run compiled kernels with ``threads`` workers, capped at the pool size."""
    cap = max_threads()
    if threads > cap:
        logger.warning("requested %d threads, numba pool holds %d; capping", threads, cap)
        threads = cap
    previous = numba.get_num_threads()
    numba.set_num_threads(threads)
    try:
        yield threads
    finally:
        numba.set_num_threads(previous)


def init_embedding(n: int, d: int, seed: int = 0) -> np.ndarray:
    """Uniform entries in ``[-0.5/d, 0.5/d]``, shape (n, d)."""
    if n < 1 or d < 1:
        raise ConfigError("need n >= 1 and d >= 1")
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5 / d, 0.5 / d, size=(n, d))


def sample_negatives(s: int, n: int, seed: int, iteration: int = 0, batch: int = 0) -> np.ndarray:
    """The ``s`` uniform negative ids the trainer draws for (iteration, batch).

    Collisions with true neighbors, or with the vertex itself, are kept.
    """
    if s < 1 or n < 1:
        raise ConfigError("need s >= 1 and n >= 1")
    return draw_indices(seed, iteration, batch * 4 + _NEG_STREAM, s, n)


@njit(inline="always")
def _walk_from(row_ptr, col_ids, key, u, length, out):
    """Uniform walk of ``length`` steps from ``u`` into ``out``; -1 pads dead ends."""
    j = np.int64(u)
    for step in range(length):
        lo = row_ptr[j]
        deg = row_ptr[j + 1] - lo
        if deg == 0:
            for rest in range(step, length):
                out[rest] = -1
            return
        j = np.int64(col_ids[lo + draw_index(key, step, deg)])
        out[step] = j


@njit(parallel=True, cache=True)
def _sample_walks(row_ptr, col_ids, length, seed, iteration, out):
    n = row_ptr.shape[0] - 1
    for u in prange(n):
        _walk_from(row_ptr, col_ids, stream_key(seed, iteration, u * 4 + _WALK_STREAM), u, length, out[u])


@njit(parallel=True, cache=True)
def _run(row_ptr, col_ids, weights, z, model, lr, neg, batch, iters, seed, decay,
         walk_length, use_walks, status):
    n, d = z.shape
    nbatches = (n + batch - 1) // batch
    force = np.zeros((min(batch, n), d))
    bad = np.zeros(min(batch, n), dtype=np.int8)
    steps = walk_length - 1
    walks = np.empty((n if use_walks else 0, max(steps, 0)), dtype=np.int64)
    negs = np.empty(neg, dtype=np.int64)
    for it in range(iters):
        eta = lr * (1.0 - it / iters) if decay else lr
        if use_walks:
            if steps > 0:
                for u in prange(n):
                    _walk_from(row_ptr, col_ids, stream_key(seed, it, u * 4 + _WALK_STREAM), u, steps, walks[u])
            key = stream_key(seed, it, _NEG_STREAM)
            for i in range(neg):
                negs[i] = draw_index(key, i, n)
        for b in range(nbatches):
            lo = b * batch
            size = min(n, lo + batch) - lo
            if not use_walks:
                key = stream_key(seed, it, b * 4 + _NEG_STREAM)
                for i in range(neg):
                    negs[i] = draw_index(key, i, n)
            for i in prange(size):
                u = lo + i
                f = force[i]
                f[:] = 0.0
                zu = z[u]
                if use_walks:
                    for k in range(steps):
                        v = walks[u, k]
                        if v < 0:
                            break
                        add_attractive(model, zu, z[v], 1.0, f)
                else:
                    for a in range(row_ptr[u], row_ptr[u + 1]):
                        add_attractive(model, zu, z[col_ids[a]], weights[a], f)
                for k in range(neg):
                    add_repulsive(model, zu, z[negs[k]], 1.0, f)
                ok = 1
                for k in range(d):
                    if not np.isfinite(f[k]):
                        ok = 0
                bad[i] = 1 - ok
            for i in range(size):
                if bad[i]:
                    status[0] = it
                    status[1] = lo + i
                    return
            for i in prange(size):
                u = lo + i
                for k in range(d):
                    z[u, k] -= eta * force[i, k]


def _train(g: CsrGraph, cfg: TrainConfig, z0: np.ndarray | None, use_walks: bool) -> np.ndarray:
    cfg.validate()
    if g.n < 1:
        raise ConfigError("graph has no vertices")
    z = init_embedding(g.n, cfg.dim, cfg.seed) if z0 is None else np.array(z0, dtype=np.float64, order="C")
    if z.shape != (g.n, cfg.dim):
        raise ConfigError(f"initial embedding has shape {z.shape}, expected {(g.n, cfg.dim)}")
    status = np.full(2, -1, dtype=np.int64)
    with thread_count(cfg.threads):
        _run(g.row_ptr, g.col_ids, g.weight_array(), z, model_code(cfg.model), float(cfg.lr),
             int(cfg.neg), int(cfg.batch), int(cfg.iters), int(cfg.seed), bool(cfg.lr_decay),
             int(cfg.walk_length), use_walks, status)
    if status[0] >= 0:
        raise TrainingError(
            f"non-finite force at iteration {status[0]}, vertex {g.ids[status[1]]} "
            f"(internal id {status[1]}); try a smaller learning rate",
            iteration=int(status[0]), vertex=int(status[1]))
    return z


def train(g: CsrGraph, cfg: TrainConfig, z0: np.ndarray | None = None) -> np.ndarray:
    """Train with direct neighbors as attractive partners and per-batch negatives."""
    return _train(g, cfg, z0, use_walks=False)


def train_walk(g: CsrGraph, cfg: TrainConfig, z0: np.ndarray | None = None) -> np.ndarray:
    """Semi-random-walk variant.

    Each iteration draws, for every vertex, a uniform walk of
    ``walk_length - 1`` steps and uses the visited vertices (revisits allowed)
    as attractive partners; one negative set is shared by the whole iteration.
    An isolated vertex gets an empty walk and feels only repulsion.
    """
    return _train(g, cfg, z0, use_walks=True)


def sample_walk_partners(g: CsrGraph, walk_length: int, seed: int, iteration: int) -> np.ndarray:
    """The walk table ``train_walk`` uses at ``iteration``; rows padded with -1."""
    steps = max(walk_length - 1, 0)
    out = np.empty((g.n, steps), dtype=np.int64)
    if steps:
        _sample_walks(g.row_ptr, g.col_ids, steps, seed, iteration, out)
    return out


@njit(cache=True)
def _loss(row_ptr, col_ids, weights, z, model, negs):
    total = 0.0
    n = z.shape[0]
    for u in range(n):
        for a in range(row_ptr[u], row_ptr[u + 1]):
            total += weights[a] * attractive_loss(model, z[u], z[col_ids[a]])
        for v in negs:
            total += repulsive_loss(model, z[u], z[v])
    return total


def compute_loss(g: CsrGraph, z: np.ndarray, model: str, negatives) -> float:
    """Sum over vertices of attractive terms on CSR neighbors plus repulsive terms on ``negatives``."""
    negs = np.asarray(negatives, dtype=np.int64)
    if negs.size == 0:
        raise ConfigError("negatives must be nonempty")
    return float(_loss(g.row_ptr, g.col_ids, g.weight_array(), np.ascontiguousarray(z, dtype=np.float64),
                       model_code(model), negs))


def default_threads() -> int:
    return min(os.cpu_count() or 1, max_threads())
