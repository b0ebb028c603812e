"""Wall-clock and peak-RSS benchmarking, scaling experiments, CSV emission."""

from __future__ import annotations

import csv
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
import psutil

from .engine import TrainConfig
from .errors import ConfigError, ParseError, ValidationError
from .evaluation import EvalReport
from .graph import CsrGraph, from_edges, generate_sbm
from .methods import BaselineOptions, embed

logger = logging.getLogger(__name__)

SAMPLE_PERIOD = 0.05


@dataclass
class BenchResult:
    kind: str
    method: str
    n: int
    m: int
    threads: int
    wall_seconds: float
    peak_rss_bytes: int
    iters: int


class RssSampler:
    """Background thread recording this process's peak resident set size."""

    def __init__(self, period: float = SAMPLE_PERIOD):
        self.period = period
        self.peak = 0
        self._proc = psutil.Process()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

    def _sample(self):
        self.peak = max(self.peak, self._proc.memory_info().rss)

    def _loop(self):
        while not self._stop.wait(self.period):
            self._sample()

    def __enter__(self):
        self._sample()
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        self._sample()


def hardware_threads() -> int:
    return os.cpu_count() or 1


def _warm_up(method: str, cfg: TrainConfig, opts: BaselineOptions) -> None:
    # compiles the kernels outside the timed region
    tiny = from_edges(3, [(0, 1), (1, 2)])
    embed(tiny, method, replace(cfg, dim=2, iters=1, walk_length=2, threads=1),
          replace(opts, walks=1, window=1))


def time_embed(g: CsrGraph, cfg: TrainConfig, repeats: int = 3, method: str = "force2vec-tdist",
               opts: BaselineOptions | None = None, kind: str = "single") -> BenchResult:
    """Mean wall time of ``repeats`` embedding runs; only the embedding call is timed."""
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    opts = opts or BaselineOptions()
    _warm_up(method, cfg, opts)
    walls = []
    with RssSampler() as rss:
        for _ in range(repeats):
            start = time.perf_counter()
            embed(g, method, cfg, opts)
            walls.append(time.perf_counter() - start)
    return BenchResult(kind=kind, method=method, n=g.n, m=g.m, threads=cfg.threads,
                       wall_seconds=float(np.mean(walls)), peak_rss_bytes=int(rss.peak), iters=cfg.iters)


def bench_graph(n: int, avg_degree: float = 10.0, block_size: int = 1000, mixing: float = 0.1,
                seed: int = 0) -> CsrGraph:
    """SBM with ``n // block_size`` blocks and expected degree ``avg_degree``."""
    nblocks = max(1, n // block_size)
    blocks = [n // nblocks] * nblocks
    blocks[-1] += n - sum(blocks)
    bs = blocks[0]
    if nblocks == 1:
        p_in, p_out = min(1.0, avg_degree / max(n - 1, 1)), 0.0
    else:
        p_in = min(1.0, avg_degree * (1 - mixing) / max(bs - 1, 1))
        p_out = min(p_in, avg_degree * mixing / (n - bs))
    g, _ = generate_sbm(blocks, p_in, p_out, seed)
    return g


def _cap(threads: int) -> int:
    hw = hardware_threads()
    if threads > hw:
        logger.warning("requested %d threads but the machine has %d; capping", threads, hw)
        return hw
    return threads


def scaling_experiment(kind: str, base_n: int, seed: int = 0, threads=None, cfg: TrainConfig | None = None,
                       method: str = "force2vec-tdist", repeats: int = 1, points: int | None = None,
                       avg_degree: float = 10.0) -> list[BenchResult]:
    """Strong, weak or graph scaling runs on SBM inputs.

    strong: one graph of ``base_n`` vertices, threads 1, 2, 4, 8 (or ``threads``).
    weak: ``k * base_n`` vertices with ``k`` threads for k in 1, 2, 4, 8, 16.
    graph: fixed threads, ``base_n`` doubled ``points - 1`` times (default 4 points).
    Thread counts above the hardware count are capped with a warning.
    """
    if base_n < 1000:
        raise ValidationError("base_n must be >= 1000")
    cfg = cfg or TrainConfig()
    results = []
    if kind == "strong":
        g = bench_graph(base_n, avg_degree, seed=seed)
        for t in threads or (1, 2, 4, 8):
            run = replace(cfg, threads=_cap(int(t)))
            results.append(time_embed(g, run, repeats, method, kind="strong"))
        for a, b in zip(results, results[1:]):
            if b.threads > a.threads and b.wall_seconds > a.wall_seconds:
                logger.warning("strong scaling slowed down from %d to %d threads (%.3fs -> %.3fs)",
                               a.threads, b.threads, a.wall_seconds, b.wall_seconds)
    elif kind == "weak":
        for k in (1, 2, 4, 8, 16)[: points or 5]:
            g = bench_graph(k * base_n, avg_degree, seed=seed)
            run = replace(cfg, threads=_cap(k))
            results.append(time_embed(g, run, repeats, method, kind="weak"))
    elif kind == "graph":
        fixed = _cap(int(threads[0]) if threads else hardware_threads())
        for i in range(points or 4):
            g = bench_graph(base_n * 2**i, avg_degree, seed=seed)
            results.append(time_embed(g, replace(cfg, threads=fixed), repeats, method, kind="graph"))
    else:
        raise ConfigError(f"unknown scaling kind {kind!r}; choose strong, weak or graph")
    return results


def loglog_fit(xs, ys) -> tuple[float, float]:
    """Slope and R^2 of a least-squares line through (log x, log y)."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    total = ((ly - ly.mean()) ** 2).sum()
    return float(slope), float(1.0 - (resid ** 2).sum() / total) if total > 0 else 1.0


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

BENCH_COLUMNS = [f.name for f in fields(BenchResult)]
EVAL_COLUMNS = ["task", "metric", "value"]


def _eval_rows(reports) -> list[list[str]]:
    rows = []
    for r in reports:
        params = []
        for key in sorted(r.params):
            params += [key, str(r.params[key])]
        for metric, value in r.metrics.items():
            rows.append([r.task, metric, repr(float(value))] + params)
    return rows


def emit_csv(results, path, overwrite: bool = False, schema: str | None = None) -> None:
    """Write BenchResult or EvalReport rows to ``path``.

    Without ``overwrite`` rows are appended to an existing file whose header
    matches; with it the file is replaced. ``schema`` ("bench" or "eval")
    picks the header when ``results`` is empty. Eval rows carry their
    parameters as trailing ``param,param_value`` column pairs in name order.
    """
    results = list(results)
    if schema is None:
        schema = "eval" if results and isinstance(results[0], EvalReport) else "bench"
    if schema == "bench":
        header = BENCH_COLUMNS
        rows = [[repr(v) if isinstance(v, float) else str(v) for v in asdict(r).values()] for r in results]
    elif schema == "eval":
        rows = _eval_rows(results)
        width = max(((len(r) - 3) // 2 for r in rows), default=0)
        header = EVAL_COLUMNS + ["param", "param_value"] * width
    else:
        raise ValidationError(f"unknown CSV schema {schema!r}")
    path = Path(path)
    try:
        if path.exists() and not overwrite and path.stat().st_size > 0:
            with path.open(newline="") as fh:
                existing = next(csv.reader(fh), [])
            if existing[:3] != header[:3] or len(existing) < len(header):
                raise ValidationError(f"{path}: existing header {existing} does not fit; pass overwrite")
            with path.open("a", newline="") as fh:
                csv.writer(fh, lineterminator="\n").writerows(r + [""] * (len(existing) - len(r)) for r in rows)
            return
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(r + [""] * (len(header) - len(r)) for r in rows)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def read_bench_csv(path) -> list[BenchResult]:
    casts = {f.name: {"int": int, "float": float, "str": str}[f.type] for f in fields(BenchResult)}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != BENCH_COLUMNS:
            raise ParseError(f"unexpected bench header {reader.fieldnames}", 1)
        return [BenchResult(**{k: casts[k](v) for k, v in row.items()}) for row in reader]


def read_eval_csv(path) -> list[tuple[str, str, float, dict[str, str]]]:
    """Rows as ``(task, metric, value, params)``; parameter values stay strings."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != EVAL_COLUMNS:
            raise ParseError(f"unexpected eval header {header}", 1)
        for row in reader:
            rest = row[3:]
            params = {rest[i]: rest[i + 1] for i in range(0, len(rest) - 1, 2) if rest[i]}
            out.append((row[0], row[1], float(row[2]), params))
    return out
