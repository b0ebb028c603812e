"""Command line entry point: ``force2vec {embed,evaluate,bench,generate,export-svg}``.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import bench, evaluation, graph
from .engine import TrainConfig, default_threads
from .errors import ConfigError, ParseError, TrainingError, ValidationError
from .io import align_embedding, read_embedding, render_svg, write_embedding
from .methods import METHODS, BaselineOptions, embed

logger = logging.getLogger("force2vec")

EDGE_FORMAT = """\
edge list: UTF-8 text, one edge per line, "u v" or "u v w" separated by
whitespace; u, v nonnegative integers, w a positive real (default 1.0).
Lines starting with '#' or '%' are comments. The graph is made undirected,
self-loops are dropped (the vertex is still registered) and a repeated edge
keeps the weight of its first occurrence. Vertices are renumbered in order
of first appearance; output files use the original ids."""

LABEL_FORMAT = """\
label file: one line per labeled vertex, "vertex_id c1[,c2,...]" with
nonnegative integer class ids. Vertices without a line are unlabeled."""

EMBEDDING_FORMAT = """\
embedding file: first line "n d", then n lines "vertex_id f_1 ... f_d" with
every coordinate printed to 6 decimals."""

CSV_FORMAT = """\
eval CSV: header "task,metric,value" followed by "param,param_value" column
pairs, one row per metric, parameters sorted by name.
bench CSV: header "kind,method,n,m,threads,wall_seconds,peak_rss_bytes,iters"."""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _read_graph(path) -> graph.CsrGraph:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return graph.parse_edge_list(data)


def _read_labels(path, g: graph.CsrGraph) -> graph.LabelSet:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return graph.load_labels(data, g.n, g.id_map())


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = _Parser(prog="force2vec", description="Force-directed graph embedding and evaluation.",
                epilog="\n\n".join([EDGE_FORMAT, LABEL_FORMAT, EMBEDDING_FORMAT, CSV_FORMAT]),
                formatter_class=fmt)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("embed", help="train an embedding", epilog=EDGE_FORMAT + "\n\n" + EMBEDDING_FORMAT,
                       formatter_class=fmt)
    e.add_argument("--input", required=True, help="edge list file")
    e.add_argument("--model", default="force2vec-tdist", choices=METHODS)
    e.add_argument("--dim", type=int, default=128)
    e.add_argument("--lr", type=float, default=0.02)
    e.add_argument("--neg", type=int, default=5)
    e.add_argument("--batch", type=int, default=256)
    e.add_argument("--iters", type=int, default=600)
    e.add_argument("--walk-length", type=int, default=80)
    e.add_argument("--walks", type=int, default=10)
    e.add_argument("--window", type=int, default=10)
    e.add_argument("--epochs", type=int, default=1, help="skip-gram passes over the walk corpus")
    e.add_argument("--beta", type=float, default=0.01)
    e.add_argument("--lr-decay", action="store_true", help="decay the learning rate linearly to 0")
    e.add_argument("--seed", type=int, default=42)
    e.add_argument("--threads", type=int, default=default_threads())
    e.add_argument("--output", required=True)

    v = sub.add_parser("evaluate", help="score an embedding", epilog=LABEL_FORMAT + "\n\n" + CSV_FORMAT,
                       formatter_class=fmt)
    v.add_argument("task", choices=["nc", "lp", "cluster", "recon"])
    v.add_argument("--embedding", required=True)
    v.add_argument("--graph", required=True, help="edge list the embedding was trained on")
    v.add_argument("--labels")
    v.add_argument("--train-frac", type=_float_list, default=None,
                   help="comma list, e.g. 0.1,0.2,...,0.9 (nc default 0.5, lp default 0.5)")
    v.add_argument("--operator", choices=evaluation.OPERATORS, default="hadamard")
    v.add_argument("--k-min", type=int, default=2)
    v.add_argument("--k-max", type=int, default=10)
    v.add_argument("--sample", type=int, default=1000)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--output", help="CSV path; stdout when omitted")
    v.add_argument("--overwrite", action="store_true")

    b = sub.add_parser("bench", help="timing and scaling experiments", epilog=CSV_FORMAT, formatter_class=fmt)
    b.add_argument("kind", choices=["single", "strong", "weak", "graph"])
    b.add_argument("--input", help="edge list (single only)")
    b.add_argument("--base-n", type=int, default=10_000)
    b.add_argument("--points", type=int, default=None)
    b.add_argument("--threads", type=_int_list, default=None)
    b.add_argument("--model", default="force2vec-tdist", choices=METHODS)
    b.add_argument("--dim", type=int, default=128)
    b.add_argument("--iters", type=int, default=10)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--output")
    b.add_argument("--overwrite", action="store_true")

    g = sub.add_parser("generate", help="write a stochastic block model graph", epilog=EDGE_FORMAT,
                       formatter_class=fmt)
    g.add_argument("--blocks", type=_int_list, required=True, help="block sizes, e.g. 250,250,250,250")
    g.add_argument("--p-in", type=float, required=True)
    g.add_argument("--p-out", type=float, required=True)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--output", required=True)
    g.add_argument("--labels-output")

    s = sub.add_parser("export-svg", help="scatter plot of a 2-D embedding", formatter_class=fmt)
    s.add_argument("--embedding", required=True)
    s.add_argument("--labels")
    s.add_argument("--output", required=True)
    return p


def cmd_embed(args) -> None:
    g = _read_graph(args.input)
    cfg = TrainConfig(dim=args.dim, lr=args.lr, neg=args.neg, batch=args.batch, iters=args.iters,
                      walk_length=args.walk_length, seed=args.seed, threads=args.threads,
                      lr_decay=args.lr_decay)
    opts = BaselineOptions(walks=args.walks, window=args.window, beta=args.beta, epochs=args.epochs)
    z = embed(g, args.model, cfg, opts)
    write_embedding(args.output, z, g.ids)
    logger.info("wrote %d x %d embedding to %s", z.shape[0], z.shape[1], args.output)


def cmd_evaluate(args) -> None:
    g = _read_graph(args.graph)
    ids, raw = read_embedding(args.embedding)
    z = align_embedding(ids, raw, g.id_map(), g.n)
    reports = []
    if args.task == "nc":
        if not args.labels:
            raise ValidationError("node classification needs --labels")
        labels = _read_labels(args.labels, g)
        for frac in args.train_frac or [0.5]:
            reports.append(evaluation.node_classification(z, labels, frac, args.seed))
    elif args.task == "lp":
        for frac in args.train_frac or [0.5]:
            reports.append(evaluation.link_prediction(g, z, args.operator, frac, args.seed))
    elif args.task == "cluster":
        if args.k_min < 1 or args.k_max < args.k_min:
            raise UsageError("need 1 <= --k-min <= --k-max")
        k, q, _ = evaluation.cluster_sweep(g, z, range(args.k_min, min(args.k_max, g.n) + 1), args.seed)
        reports.append(evaluation.EvalReport("cluster", {"modularity": q, "best_k": float(k)},
                                             {"k_min": args.k_min, "k_max": args.k_max, "seed": args.seed}))
    else:
        acc = evaluation.reconstruction_accuracy(g, z, args.sample, args.seed)
        reports.append(evaluation.EvalReport("recon", {"reconstruction_accuracy": acc},
                                             {"sample": args.sample, "seed": args.seed}))
    if args.output:
        bench.emit_csv(reports, args.output, overwrite=args.overwrite, schema="eval")
    else:
        rows = bench._eval_rows(reports)
        width = max((len(r) - 3) // 2 for r in rows)
        out = csv.writer(sys.stdout, lineterminator="\n")
        out.writerow(bench.EVAL_COLUMNS + ["param", "param_value"] * width)
        out.writerows(r + [""] * (3 + 2 * width - len(r)) for r in rows)


def cmd_bench(args) -> None:
    cfg = TrainConfig(dim=args.dim, iters=args.iters, seed=args.seed)
    if args.kind == "single":
        if not args.input:
            raise UsageError("bench single needs --input")
        g = _read_graph(args.input)
        threads = args.threads or [default_threads()]
        results = [bench.time_embed(g, TrainConfig(dim=args.dim, iters=args.iters, seed=args.seed, threads=t),
                                    args.repeats, args.model) for t in threads]
    else:
        results = bench.scaling_experiment(args.kind, args.base_n, args.seed, args.threads, cfg,
                                           args.model, args.repeats, args.points)
    if args.output:
        bench.emit_csv(results, args.output, overwrite=args.overwrite, schema="bench")
    else:
        print(",".join(bench.BENCH_COLUMNS))
        for r in results:
            print(",".join(str(getattr(r, c)) for c in bench.BENCH_COLUMNS))


def cmd_generate(args) -> None:
    g, labels = graph.generate_sbm(args.blocks, args.p_in, args.p_out, args.seed)
    Path(args.output).write_text(graph.to_edge_list(g), encoding="utf-8")
    if args.labels_output:
        Path(args.labels_output).write_text(graph.labels_to_text(labels, g.ids), encoding="utf-8")
    logger.info("SBM with n=%d m=%d written to %s", g.n, g.m, args.output)


def cmd_export_svg(args) -> None:
    ids, z = read_embedding(args.embedding)
    labels = None
    if args.labels:
        id_map = {int(v): i for i, v in enumerate(ids.tolist())}
        labels = graph.load_labels(Path(args.labels).read_bytes(), len(ids), id_map)
    Path(args.output).write_text(render_svg(z, labels), encoding="utf-8")


COMMANDS = {
    "embed": cmd_embed,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "generate": cmd_generate,
    "export-svg": cmd_export_svg,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"force2vec: error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ValidationError) as exc:
        print(f"force2vec: invalid input: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"force2vec: numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"force2vec: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
