"""Undirected graphs in compressed sparse row form, plus loaders and an SBM generator."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

COMMENT_PREFIXES = ("#", "%")


@dataclass(frozen=True, eq=False)
class CsrGraph:
    """Symmetric adjacency in CSR layout.

    Every undirected edge ``{u, v}`` is stored twice, once in each row. Rows are
    sorted ascending, carry no self-loops and no duplicates. ``weights`` is
    ``None`` for unweighted graphs; ``ids`` maps internal vertex ids back to the
    ids found in the source file.
    """

    n: int
    row_ptr: np.ndarray
    col_ids: np.ndarray
    weights: np.ndarray | None = None
    ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(self.n, dtype=np.int64))

    @property
    def m(self) -> int:
        return int(self.row_ptr[-1]) // 2

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def weight_array(self) -> np.ndarray:
        """Arc weights, materialising the implicit 1.0 for unweighted graphs."""
        if self.weights is None:
            return np.ones(self.col_ids.shape[0], dtype=np.float64)
        return self.weights

    def id_map(self) -> dict[int, int]:
        """Original id -> internal id."""
        return {int(orig): i for i, orig in enumerate(self.ids)}

    def has_edge(self, u: int, v: int) -> bool:
        row = self.col_ids[self.row_ptr[u]:self.row_ptr[u + 1]]
        k = np.searchsorted(row, v)
        return bool(k < row.shape[0] and row[k] == v)

    def edges(self) -> np.ndarray:
        """Array of shape (m, 2) holding each undirected edge once with u < v."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        mask = src < self.col_ids
        return np.stack([src[mask], self.col_ids[mask].astype(np.int64)], axis=1)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        src = np.repeat(np.arange(self.n), self.degrees())
        a[src, self.col_ids] = self.weight_array()
        return a

    def equals(self, other: CsrGraph) -> bool:
        if self.n != other.n or self.weighted != other.weighted:
            return False
        same = (np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_ids, other.col_ids)
                and np.array_equal(self.ids, other.ids))
        if same and self.weighted:
            same = np.array_equal(self.weights, other.weights)
        return same

    def validate(self) -> None:
        """Check every structural invariant; raises ValidationError."""
        rp, ci = self.row_ptr, self.col_ids
        if rp.shape[0] != self.n + 1 or rp[0] != 0 or rp[-1] != ci.shape[0]:
            raise ValidationError("row_ptr does not frame col_ids")
        if np.any(np.diff(rp) < 0):
            raise ValidationError("row_ptr is not nondecreasing")
        if ci.shape[0] % 2:
            raise ValidationError("odd arc count in symmetric graph")
        if ci.shape[0] and (ci.min() < 0 or ci.max() >= self.n):
            raise ValidationError("column id out of range")
        src = np.repeat(np.arange(self.n), self.degrees())
        if np.any(src == ci):
            raise ValidationError("self-loop present")
        inner = np.ones(ci.shape[0], dtype=bool)
        inner[rp[1:-1][rp[1:-1] < ci.shape[0]]] = False
        if ci.shape[0] > 1 and np.any((np.diff(ci) <= 0) & inner[1:]):
            raise ValidationError("row not strictly increasing")
        # symmetry: the transposed arc list sorts to the same list
        order = np.lexsort((src, ci))
        if not (np.array_equal(ci[order], src) and np.array_equal(src[order], ci)):
            raise ValidationError("adjacency is not symmetric")
        if self.weights is not None:
            if np.any(self.weights <= 0):
                raise ValidationError("weights must be positive")
            if not np.array_equal(self.weights[order], self.weights):
                raise ValidationError("asymmetric weights")


def from_edges(n: int, edges, weights=None, ids=None) -> CsrGraph:
    """Build a CsrGraph from an (m, 2) array of undirected edges.

    Self-loops are dropped and duplicate edges keep the first occurrence.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    w = None if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
    if e.shape[0] and (e.min() < 0 or e.max() >= n):
        raise ValidationError(f"edge endpoint outside [0, {n})")
    keep = e[:, 0] != e[:, 1]
    e = e[keep]
    if w is not None:
        w = w[keep]
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    # np.unique returns the first index of each key
    _, first = np.unique(lo * n + hi, return_index=True)
    first.sort()
    lo, hi = lo[first], hi[first]
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=row_ptr[1:])
    col_ids = dst[order].astype(np.int32 if n < 2**31 else np.int64)
    arc_w = None
    if w is not None:
        w = w[first]
        arc_w = np.concatenate([w, w])[order]
    return CsrGraph(n=n, row_ptr=row_ptr, col_ids=col_ids, weights=arc_w,
                    ids=None if ids is None else np.asarray(ids, dtype=np.int64))


def _as_text(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        return text.decode("utf-8")
    if hasattr(text, "read"):
        data = text.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    return text


def parse_edge_list(text, directed_input: bool = False) -> CsrGraph:
    """Parse a whitespace-separated edge list.

    Each non-comment line is ``u v`` or ``u v w`` with nonnegative integer ids
    and a positive weight. The result is always symmetrized; ``directed_input``
    only changes logging since reciprocal arcs collapse to one edge anyway.
    Vertex ids are compacted in order of first appearance, and a self-loop line
    still registers its vertex (that is how isolated vertices are written).
    """
    text = _as_text(text)
    id_of: dict[int, int] = {}
    src: list[int] = []
    dst: list[int] = []
    wts: list[float] = []
    weighted = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        tok = line.split()
        if len(tok) not in (2, 3):
            raise ParseError(f"expected 'u v' or 'u v w', got {line!r}", lineno)
        try:
            u, v = int(tok[0]), int(tok[1])
        except ValueError:
            raise ParseError(f"vertex ids must be integers: {line!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"vertex ids must be nonnegative: {line!r}", lineno)
        w = 1.0
        if len(tok) == 3:
            try:
                w = float(tok[2])
            except ValueError:
                raise ParseError(f"weight is not a number: {tok[2]!r}", lineno) from None
            if not np.isfinite(w) or w <= 0:
                raise ValidationError(f"line {lineno}: weight must be positive, got {tok[2]}")
            weighted |= u != v
        iu = id_of.setdefault(u, len(id_of))
        iv = id_of.setdefault(v, len(id_of))
        src.append(iu)
        dst.append(iv)
        wts.append(w)
    n = len(id_of)
    if directed_input:
        logger.debug("symmetrizing directed input with %d arcs", len(src))
    edges = np.column_stack([np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)])
    ids = np.fromiter(id_of.keys(), dtype=np.int64, count=n)
    return from_edges(n, edges, weights=np.asarray(wts) if weighted else None, ids=ids)


def to_edge_list(g: CsrGraph) -> str:
    """Serialize with original ids so that ``parse_edge_list`` rebuilds ``g`` exactly.

    A self-loop line ``u u`` is written for every vertex first, which pins the
    first-appearance order and keeps isolated vertices.
    """
    lines = [f"{u} {u}" for u in g.ids.tolist()]
    e = g.edges()
    ids = g.ids
    if g.weighted:
        src = np.repeat(np.arange(g.n), g.degrees())
        mask = src < g.col_ids
        w = g.weights[mask]
        lines += [f"{ids[a]} {ids[b]} {x!r}" for (a, b), x in zip(e.tolist(), w.tolist())]
    else:
        lines += [f"{ids[a]} {ids[b]}" for a, b in e.tolist()]
    return "\n".join(lines) + "\n"


def neighbors(g: CsrGraph, u: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero-copy views ``(ids, weights)`` of row ``u``."""
    if not 0 <= u < g.n:
        raise IndexError(f"vertex {u} out of range for n={g.n}")
    lo, hi = g.row_ptr[u], g.row_ptr[u + 1]
    w = g.weights[lo:hi] if g.weights is not None else np.broadcast_to(1.0, (hi - lo,))
    return g.col_ids[lo:hi], w


@dataclass(frozen=True)
class LabelSet:
    """Per-vertex class ids. An empty tuple marks an unlabeled vertex."""

    labels: tuple[tuple[int, ...], ...]
    num_classes: int
    multilabel: bool

    @property
    def n(self) -> int:
        return len(self.labels)

    def labeled(self) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.labels) if c], dtype=np.int64)

    def single(self) -> np.ndarray:
        """Class per vertex for single-label sets, -1 where unlabeled."""
        if self.multilabel:
            raise ValidationError("label set is multilabel")
        return np.array([c[0] if c else -1 for c in self.labels], dtype=np.int64)

    def indicator(self) -> np.ndarray:
        """Dense (n, num_classes) 0/1 matrix."""
        y = np.zeros((self.n, self.num_classes), dtype=np.int8)
        for i, cs in enumerate(self.labels):
            y[i, list(cs)] = 1
        return y


def load_labels(text, n: int, id_map: dict[int, int] | None = None) -> LabelSet:
    """Parse ``vertex_id class_id[,class_id...]`` lines.

    With ``id_map`` the vertex ids are original ids and are translated to
    internal ids; without it they must already lie in ``[0, n)``.
    """
    text = _as_text(text)
    labels: list[tuple[int, ...]] = [()] * n
    top = -1
    multilabel = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        tok = line.split()
        if len(tok) != 2:
            raise ParseError(f"expected 'vertex class[,class...]', got {line!r}", lineno)
        try:
            vid = int(tok[0])
            classes = tuple(sorted({int(c) for c in tok[1].split(",") if c}))
        except ValueError:
            raise ParseError(f"non-integer token in {line!r}", lineno) from None
        if not classes or min(classes) < 0:
            raise ParseError(f"class ids must be nonnegative integers: {line!r}", lineno)
        if id_map is not None:
            if vid not in id_map:
                raise ValidationError(f"line {lineno}: vertex {vid} is not in the graph")
            vid = id_map[vid]
        elif not 0 <= vid < n:
            raise ValidationError(f"line {lineno}: vertex id {vid} >= n={n}")
        labels[vid] = tuple(sorted(set(labels[vid]) | set(classes)))
        multilabel |= len(labels[vid]) > 1
        top = max(top, classes[-1])
    return LabelSet(labels=tuple(labels), num_classes=top + 1, multilabel=multilabel)


def labels_to_text(labels: LabelSet, ids: np.ndarray | None = None) -> str:
    out = []
    for i, cs in enumerate(labels.labels):
        if cs:
            vid = i if ids is None else int(ids[i])
            out.append(f"{vid} {','.join(map(str, cs))}")
    return "\n".join(out) + "\n"


def _unrank_pairs(k: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Map ranks in [0, size*(size-1)/2) to pairs i < j, row-major over i."""
    # rank of (i, j) is i*size - i*(i+1)/2 + (j - i - 1)
    kf = k.astype(np.float64)
    b = 2.0 * size - 1.0
    i = np.floor((b - np.sqrt(b * b - 8.0 * kf)) / 2.0).astype(np.int64)
    start = i * size - i * (i + 1) // 2
    # float rounding can be off by one in either direction
    over = start > k
    i[over] -= 1
    start = i * size - i * (i + 1) // 2
    nxt = (i + 1) * size - (i + 1) * (i + 2) // 2
    under = nxt <= k
    i[under] += 1
    start = i * size - i * (i + 1) // 2
    j = k - start + i + 1
    return i, j


def generate_sbm(blocks, p_in: float, p_out: float, seed: int = 0) -> tuple[CsrGraph, LabelSet]:
    """Stochastic block model with planted blocks of the given sizes.

    Every unordered intra-block pair is an edge with probability ``p_in`` and
    every inter-block pair with ``p_out``, independently. Sampling draws a
    binomial edge count per block pair and then a uniform subset of pairs of
    that size, which has the same distribution as independent coin flips.
    """
    blocks = [int(b) for b in blocks]
    if not blocks:
        raise ValidationError("block list is empty")
    if any(b < 1 for b in blocks):
        raise ValidationError("block sizes must be positive")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValidationError("need 0 <= p_out <= p_in <= 1")
    rng = np.random.default_rng(seed)
    offsets = np.concatenate([[0], np.cumsum(blocks)])
    n = int(offsets[-1])
    parts = []
    for a, sa in enumerate(blocks):
        for b in range(a, len(blocks)):
            sb = blocks[b]
            p = p_in if a == b else p_out
            total = sa * (sa - 1) // 2 if a == b else sa * sb
            if total == 0 or p == 0.0:
                continue
            count = int(rng.binomial(total, p))
            if count == 0:
                continue
            ranks = rng.choice(total, size=count, replace=False)
            if a == b:
                i, j = _unrank_pairs(ranks, sa)
            else:
                i, j = ranks // sb, ranks % sb
            parts.append(np.column_stack([i + offsets[a], j + offsets[b]]))
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    g = from_edges(n, edges)
    labels = LabelSet(
        labels=tuple((blk,) for blk, size in enumerate(blocks) for _ in range(size)),
        num_classes=len(blocks),
        multilabel=False,
    )
    return g, labels
