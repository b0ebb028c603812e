"""Embedding text files and SVG scatter export."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .graph import LabelSet

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
)
UNLABELED = "#c7c7c7"


def format_embedding(z: np.ndarray, ids=None) -> str:
    """Header ``n d`` then one ``id f_1 ... f_d`` line per vertex, 6 decimals."""
    z = np.asarray(z, dtype=np.float64)
    n, d = z.shape
    ids = np.arange(n) if ids is None else np.asarray(ids)
    if ids.shape[0] != n:
        raise ValidationError("one id per embedding row required")
    lines = [f"{n} {d}"]
    lines += [f"{vid} " + " ".join(f"{x:.6f}" for x in row) for vid, row in zip(ids.tolist(), z.tolist())]
    return "\n".join(lines) + "\n"


def write_embedding(path, z: np.ndarray, ids=None) -> None:
    Path(path).write_text(format_embedding(z, ids), encoding="utf-8")


def parse_embedding(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`format_embedding`; returns ``(ids, z)``."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty embedding file", 1)
    head = lines[0].split()
    try:
        n, d = int(head[0]), int(head[1])
        if len(head) != 2 or n < 0 or d < 1:
            raise ValueError
    except (ValueError, IndexError):
        raise ParseError(f"header must be 'n d', got {lines[0]!r}", 1) from None
    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(body) != n:
        where = body[n][0] if len(body) > n else len(lines) + 1
        raise ParseError(f"header announces {n} rows, file has {len(body)}", where)
    ids = np.empty(n, dtype=np.int64)
    z = np.empty((n, d))
    for row, (lineno, ln) in enumerate(body):
        tok = ln.split()
        if len(tok) != d + 1:
            raise ParseError(f"expected id and {d} values, got {len(tok)} tokens", lineno)
        try:
            ids[row] = int(tok[0])
            z[row] = [float(t) for t in tok[1:]]
        except ValueError:
            raise ParseError(f"bad number in {ln[:60]!r}", lineno) from None
    if np.unique(ids).shape[0] != n:
        raise ParseError("duplicate vertex ids")
    if not np.all(np.isfinite(z)):
        raise ParseError("non-finite coordinate")
    return ids, z


def read_embedding(path) -> tuple[np.ndarray, np.ndarray]:
    return parse_embedding(Path(path).read_text(encoding="utf-8"))


def align_embedding(ids: np.ndarray, z: np.ndarray, id_map: dict[int, int], n: int) -> np.ndarray:
    """Reorder rows of a read embedding into the graph's internal vertex order."""
    if ids.shape[0] != n:
        raise ValidationError(f"embedding has {ids.shape[0]} rows but the graph has {n} vertices")
    out = np.empty_like(z)
    seen = np.zeros(n, dtype=bool)
    for row, vid in enumerate(ids.tolist()):
        if vid not in id_map:
            raise ValidationError(f"embedding vertex {vid} is not in the graph")
        out[id_map[vid]] = z[row]
        seen[id_map[vid]] = True
    if not seen.all():
        raise ValidationError("embedding does not cover every graph vertex")
    return out


def render_svg(z: np.ndarray, labels: LabelSet | None = None, size: int = 1000, radius: float = 3.0) -> str:
    """Scatter of 2-D coordinates, min-max scaled into a ``size`` x ``size`` view box."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != 2:
        raise ValidationError("SVG export needs a 2-D embedding; retrain with --dim 2")
    lo = z.min(axis=0) if z.shape[0] else np.zeros(2)
    span = (z.max(axis=0) - lo) if z.shape[0] else np.ones(2)
    unit = np.divide(z - lo, span, out=np.full_like(z, 0.5), where=span > 0)
    xs = unit[:, 0] * size
    ys = (1.0 - unit[:, 1]) * size
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" width="{size}" height="{size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for i in range(z.shape[0]):
        if labels is None:
            color = PALETTE[0]
        elif labels.labels[i]:
            color = PALETTE[labels.labels[i][0] % len(PALETTE)]
        else:
            color = UNLABELED
        out.append(f'<circle cx="{xs[i]:.2f}" cy="{ys[i]:.2f}" r="{radius}" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
