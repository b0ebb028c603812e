"""Name -> embedding method dispatch shared by the CLI and the benchmark harness."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .baselines import DENSE_LIMIT, deepwalk, hope
from .engine import TrainConfig, train, train_walk
from .errors import ConfigError, ValidationError
from .graph import CsrGraph

FORCE_MODELS = {
    "force2vec-tdist": "tdist",
    "force2vec-sigmoid": "sigmoid",
    "force2vec-fr": "fr",
    "force2vec-linlog": "linlog",
    "force2vec-fa": "forceatlas",
}
METHODS = tuple(FORCE_MODELS) + ("force2vec-walk", "deepwalk", "hope")


@dataclass
class BaselineOptions:
    walks: int = 10
    window: int = 10
    beta: float = 0.01
    epochs: int = 1
    walk_model: str = "tdist"


def embed(g: CsrGraph, method: str, cfg: TrainConfig, opts: BaselineOptions | None = None) -> np.ndarray:
    """Run ``method`` on ``g``; every method reads dim, seed and threads from ``cfg``."""
    opts = opts or BaselineOptions()
    if method in FORCE_MODELS:
        return train(g, replace(cfg, model=FORCE_MODELS[method]))
    if method == "force2vec-walk":
        return train_walk(g, replace(cfg, model=opts.walk_model))
    if method == "deepwalk":
        return deepwalk(g, d=cfg.dim, walks_per_vertex=opts.walks, walk_length=cfg.walk_length,
                        window=opts.window, neg=cfg.neg, lr=cfg.lr, epochs=opts.epochs,
                        seed=cfg.seed, threads=cfg.threads)
    if method == "hope":
        if g.n > DENSE_LIMIT:
            raise ValidationError(
                f"hope builds a dense n x n Katz matrix; refusing n={g.n} > {DENSE_LIMIT}")
        return hope(g, d=cfg.dim, beta=opts.beta, seed=cfg.seed)
    raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
