"""Downstream evaluation: node classification, link prediction, clustering, reconstruction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import CsrGraph, LabelSet

logger = logging.getLogger(__name__)

OPERATORS = ("hadamard", "wl1", "wl2")


@dataclass
class EvalReport:
    task: str
    metrics: dict[str, float]
    params: dict[str, object] = field(default_factory=dict)

    def check_ranges(self) -> None:
        for name, value in self.metrics.items():
            if name == "modularity":
                ok = -0.5 - 1e-12 <= value <= 1.0 + 1e-12
            elif name in ("accuracy", "f1_micro", "f1_macro", "reconstruction_accuracy"):
                ok = 0.0 <= value <= 1.0
            else:
                ok = math.isfinite(value)
            if not ok:
                raise ValidationError(f"{self.task}: metric {name}={value} out of range")


# --------------------------------------------------------------------------
# node classification
# --------------------------------------------------------------------------

def split_labeled(labels: LabelSet, train_frac: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Split labeled vertices into (train, test) id arrays.

    Single-label sets are stratified: the overall train size is
    ``round(train_frac * labeled)`` and each class gets its floor share, with
    leftover slots going to the classes with the largest fractional remainders
    (random tie order). Multilabel sets are split uniformly.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValidationError("train_frac must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    ids = labels.labeled()
    total = int(math.floor(train_frac * ids.shape[0] + 0.5))
    if labels.multilabel:
        perm = rng.permutation(ids)
        return np.sort(perm[:total]), np.sort(perm[total:])

    y = labels.single()[ids]
    classes = np.unique(y)
    members = {c: rng.permutation(ids[y == c]) for c in classes}
    share = {c: train_frac * members[c].shape[0] for c in classes}
    take = {c: int(math.floor(share[c])) for c in classes}
    spare = total - sum(take.values())
    if spare > 0:
        jitter = rng.random(classes.shape[0])
        order = sorted(classes, key=lambda c: (-(share[c] - take[c]), jitter[np.searchsorted(classes, c)]))
        for c in order[:spare]:
            take[c] += 1
    train, test = [], []
    for c in classes:
        k = take[c]
        if members[c].shape[0] < 2:
            logger.warning("class %d has %d member(s); forcing it into the training set", c, members[c].shape[0])
            k = members[c].shape[0]
        train.append(members[c][:k])
        test.append(members[c][k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass
class LogisticModel:
    weights: np.ndarray  # (d + 1, C) with the bias in the last row
    mean: np.ndarray
    scale: np.ndarray
    multilabel: bool
    classes: int
    degenerate: bool = False

    def _design(self, x: np.ndarray) -> np.ndarray:
        xs = (np.asarray(x, dtype=np.float64) - self.mean) / self.scale
        return np.hstack([xs, np.ones((xs.shape[0], 1))])

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        logits = self._design(x) @ self.weights
        if self.multilabel:
            return _expit(logits)
        return _softmax(logits)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Class ids for single-label models, a 0/1 indicator matrix for multilabel ones."""
        p = self.predict_proba(x)
        if self.multilabel:
            return (p >= 0.5).astype(np.int8)
        return np.argmax(p, axis=1)


def _expit(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(x):
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def logistic_fit(x, y, multilabel: bool = False, l2: float = 1e-4, iters: int = 300,
                 num_classes: int | None = None) -> LogisticModel:
    """Full-batch gradient descent on L2-penalized logistic loss, from zero weights.

    ``y`` holds class ids (single-label, softmax over classes) or a 0/1
    indicator matrix (multilabel, one independent sigmoid per class).
    Features are standardized with training statistics first, and the step
    is ``1/L`` for the loss's gradient Lipschitz bound ``L``.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValidationError("feature matrix has non-finite entries")
    n = x.shape[0]
    if n == 0:
        raise ValidationError("empty training set")
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    xs = np.hstack([(x - mean) / scale, np.ones((n, 1))])

    if multilabel:
        targets = np.asarray(y, dtype=np.float64)
        c = targets.shape[1]
        degenerate = bool(np.all(targets == targets[0]))
        curvature = 0.25
    else:
        yi = np.asarray(y, dtype=np.int64)
        c = int(num_classes if num_classes is not None else yi.max() + 1)
        targets = np.zeros((n, c))
        targets[np.arange(n), yi] = 1.0
        degenerate = np.unique(yi).shape[0] < 2
        curvature = 0.5
    if degenerate:
        logger.warning("training labels hold a single class; the fitted classifier is constant")

    spectral = np.linalg.norm(xs, 2) ** 2 / n
    step = 1.0 / (curvature * spectral + l2)
    w = np.zeros((xs.shape[1], c))
    penalty = np.ones((xs.shape[1], 1))
    penalty[-1] = 0.0  # bias is not penalized
    for _ in range(iters):
        logits = xs @ w
        p = _expit(logits) if multilabel else _softmax(logits)
        grad = xs.T @ (p - targets) / n + l2 * penalty * w
        w -= step * grad
    return LogisticModel(weights=w, mean=mean, scale=scale, multilabel=multilabel,
                         classes=c, degenerate=degenerate)


def accuracy_from_counts(tp: int, tn: int, fp: int, fn: int) -> float:
    return (tp + tn) / (tp + tn + fp + fn)


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def classification_metrics(y_true, y_pred, classes: int) -> tuple[float, float, float]:
    """(accuracy, F1-micro, F1-macro).

    1-D inputs are single-label class ids; 2-D inputs are multilabel 0/1
    indicator matrices, for which micro counts pool every (vertex, class)
    decision and accuracy is the exact-match rate. A class that is never
    predicted and never true scores F1 = 0 in the macro average.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValidationError("y_true and y_pred differ in shape")
    if y_true.ndim == 1:
        t = np.zeros((y_true.shape[0], classes), dtype=bool)
        p = np.zeros_like(t)
        t[np.arange(y_true.shape[0]), y_true] = True
        p[np.arange(y_pred.shape[0]), y_pred] = True
        accuracy = float(np.mean(y_true == y_pred))
    else:
        t = y_true.astype(bool)
        p = y_pred.astype(bool)
        accuracy = float(np.mean(np.all(t == p, axis=1)))
    tp = np.sum(t & p, axis=0)
    fp = np.sum(~t & p, axis=0)
    fn = np.sum(t & ~p, axis=0)
    micro = _f1(int(tp.sum()), int(fp.sum()), int(fn.sum()))
    macro = float(np.mean([_f1(int(a), int(b), int(c)) for a, b, c in zip(tp, fp, fn)]))
    return accuracy, micro, macro


def node_classification(z: np.ndarray, labels: LabelSet, train_frac: float, seed: int = 0) -> EvalReport:
    train_ids, test_ids = split_labeled(labels, train_frac, seed)
    if labels.multilabel:
        y = labels.indicator()
        model = logistic_fit(z[train_ids], y[train_ids], multilabel=True)
        pred = model.predict(z[test_ids])
        truth = y[test_ids]
    else:
        y = labels.single()
        model = logistic_fit(z[train_ids], y[train_ids], num_classes=labels.num_classes)
        pred = model.predict(z[test_ids])
        truth = y[test_ids]
    acc, micro, macro = classification_metrics(truth, pred, labels.num_classes)
    report = EvalReport(
        task="nc",
        metrics={"accuracy": acc, "f1_micro": micro, "f1_macro": macro},
        params={"train_frac": train_frac, "seed": seed, "degenerate": int(model.degenerate)},
    )
    report.check_ranges()
    return report


# --------------------------------------------------------------------------
# link prediction
# --------------------------------------------------------------------------

@dataclass
class LinkDataset:
    positives: np.ndarray  # (k, 2)
    negatives: np.ndarray  # (k, 2)
    features: np.ndarray   # (2k, d), positives first
    labels: np.ndarray     # (2k,), 1 for positives


def edge_features(z: np.ndarray, pairs: np.ndarray, operator: str) -> np.ndarray:
    """Pair features: hadamard ``z_i*z_j``, wl1 ``|z_i-z_j|``, wl2 ``|z_i-z_j|^2``."""
    zi = z[pairs[:, 0]]
    zj = z[pairs[:, 1]]
    if operator == "hadamard":
        return zi * zj
    if operator == "wl1":
        return np.abs(zi - zj)
    if operator == "wl2":
        return (zi - zj) ** 2
    raise ValidationError(f"unknown operator {operator!r}; choose from {OPERATORS}")


def sample_non_edges(g: CsrGraph, count: int, rng: np.random.Generator, budget: int) -> np.ndarray:
    """``count`` distinct vertex pairs (u < v) that are not edges, by rejection."""
    seen: set[tuple[int, int]] = set()
    out = []
    draws = 0
    while len(out) < count:
        if draws >= budget:
            raise ValidationError(f"could not find {count} non-edges in {budget} draws; graph too dense")
        chunk = rng.integers(0, g.n, size=(max(count - len(out), 16) * 2, 2))
        for u, v in chunk.tolist():
            draws += 1
            if u == v:
                continue
            if u > v:
                u, v = v, u
            if (u, v) in seen or g.has_edge(u, v):
                continue
            seen.add((u, v))
            out.append((u, v))
            if len(out) == count or draws >= budget:
                break
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def _dataset(z, pos, neg, operator) -> LinkDataset:
    pairs = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.shape[0], dtype=np.int64), np.zeros(neg.shape[0], dtype=np.int64)])
    return LinkDataset(pos, neg, edge_features(z, pairs, operator), labels)


def build_link_dataset(g: CsrGraph, z: np.ndarray, operator: str = "hadamard", train_frac: float = 0.5,
                       seed: int = 0) -> tuple[LinkDataset, LinkDataset]:
    """Train/test link datasets with as many verified non-edges as edges."""
    if operator not in OPERATORS:
        raise ValidationError(f"unknown operator {operator!r}; choose from {OPERATORS}")
    if g.m < 2:
        raise ValidationError("link prediction needs at least two edges")
    if not 0.0 < train_frac < 1.0:
        raise ValidationError("train_frac must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    pos = g.edges()[rng.permutation(g.m)]
    neg = sample_non_edges(g, g.m, rng, budget=100 * g.m)
    k = int(math.floor(train_frac * g.m + 0.5))
    return _dataset(z, pos[:k], neg[:k], operator), _dataset(z, pos[k:], neg[k:], operator)


def link_prediction(g: CsrGraph, z: np.ndarray, operator: str = "hadamard", train_frac: float = 0.5,
                    seed: int = 0) -> EvalReport:
    train_set, test_set = build_link_dataset(g, z, operator, train_frac, seed)
    model = logistic_fit(train_set.features, train_set.labels, num_classes=2)
    pred = model.predict(test_set.features)
    acc = float(np.mean(pred == test_set.labels))
    return EvalReport("lp", {"accuracy": acc},
                      {"operator": operator, "train_frac": train_frac, "seed": seed})


# --------------------------------------------------------------------------
# clustering
# --------------------------------------------------------------------------

def _sq_dists(x, centers):
    d = (x * x).sum(axis=1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _seed_centers(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = _sq_dists(x, centers[:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        centers[i] = x[idx]
        closest = np.minimum(closest, _sq_dists(x, centers[i:i + 1])[:, 0])
    return centers


def kmeans(z: np.ndarray, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-8,
           return_inertia: bool = False):
    """Lloyd's algorithm with D^2-weighted seeding.

    Stops after ``max_iter`` rounds or once no centroid moves more than
    ``tol``. A cluster left empty takes the farthest point of any cluster
    that has more than one member. With ``return_inertia`` the within-cluster
    sum of squares after every centroid update is returned too.
    """
    x = np.asarray(z, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, n={n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = _seed_centers(x, k, rng)
    history = []
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        assign = np.argmin(d, axis=1)
        dmin = d[np.arange(n), assign]
        counts = np.bincount(assign, minlength=k)
        for c in np.flatnonzero(counts == 0):
            donor = np.where(counts[assign] > 1, dmin, -np.inf)
            far = int(np.argmax(donor))
            counts[assign[far]] -= 1
            assign[far] = c
            counts[c] = 1
            dmin[far] = 0.0
        new = np.zeros_like(centers)
        np.add.at(new, assign, x)
        new /= counts[:, None]
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        history.append(float(((x - centers[assign]) ** 2).sum()))
        if shift < tol:
            break
    if return_inertia:
        return assign, history
    return assign


def modularity(g: CsrGraph, clusters) -> float:
    """Newman modularity of a vertex partition, in O(n + m)."""
    c = np.asarray(clusters)
    if c.shape[0] != g.n:
        raise ValidationError("cluster ids must cover every vertex")
    w = g.weight_array()
    two_m = float(w.sum())
    if two_m == 0:
        raise ValidationError("modularity is undefined for a graph without edges")
    src = np.repeat(np.arange(g.n), g.degrees())
    inside = float(w[c[src] == c[g.col_ids]].sum())
    _, inv = np.unique(c, return_inverse=True)
    strength = np.bincount(src, weights=w, minlength=g.n)
    per_cluster = np.bincount(inv, weights=strength)
    return inside / two_m - float(np.sum((per_cluster / two_m) ** 2))


def cluster_sweep(g: CsrGraph, z: np.ndarray, k_range, seed: int = 0) -> tuple[int, float, np.ndarray]:
    """Run k-means for every k and keep the most modular partition (smaller k on ties)."""
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValidationError("k_range is empty")
    best = None
    for k in ks:
        labels = kmeans(z, k, seed=seed)
        q = modularity(g, labels)
        if best is None or q > best[1]:
            best = (k, q, labels)
    return best


# --------------------------------------------------------------------------
# reconstruction
# --------------------------------------------------------------------------

def reconstruction_accuracy(g: CsrGraph, z: np.ndarray, sample: int = 1000, seed: int = 0,
                            chunk: int = 256) -> float:
    """Mean fraction of each sampled vertex's deg(u) cosine-nearest vertices that are true neighbors.

    The query vertex itself is excluded from its ranking, zero rows have
    similarity 0 to everything, and ties go to the smaller vertex id.
    """
    if sample < 1:
        raise ValidationError("sample must be >= 1")
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(g.n, size=min(sample, g.n), replace=False))
    deg = g.degrees()
    picked = picked[deg[picked] > 0]
    if picked.shape[0] == 0:
        raise ValidationError("every sampled vertex is isolated")
    x = np.asarray(z, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    unit = np.divide(x, norms[:, None], out=np.zeros_like(x), where=norms[:, None] > 0)
    scores = []
    for start in range(0, picked.shape[0], chunk):
        rows = picked[start:start + chunk]
        sims = unit[rows] @ unit.T
        sims[np.arange(rows.shape[0]), rows] = -np.inf
        order = np.argsort(-sims, axis=1, kind="stable")
        for r, u in enumerate(rows.tolist()):
            k = int(deg[u])
            top = order[r, :k]
            nbrs = g.col_ids[g.row_ptr[u]:g.row_ptr[u + 1]]
            scores.append(np.isin(top, nbrs).sum() / k)
    return float(np.mean(scores))
