import numpy as np
import pytest
from numpy.testing import assert_allclose

from force2vec.bench import (
    BENCH_COLUMNS,
    BenchResult,
    bench_graph,
    emit_csv,
    loglog_fit,
    read_bench_csv,
    read_eval_csv,
    scaling_experiment,
    time_embed,
)
from force2vec.engine import TrainConfig
from force2vec.errors import ConfigError, ValidationError
from force2vec.evaluation import EvalReport
from force2vec.graph import generate_sbm
from force2vec.methods import METHODS, embed


def test_time_embed_fields():
    g, _ = generate_sbm([50, 50], 0.1, 0.01, seed=0)
    r = time_embed(g, TrainConfig(dim=8, iters=5), repeats=3)
    assert (r.n, r.m, r.threads, r.iters, r.method) == (g.n, g.m, 1, 5, "force2vec-tdist")
    assert r.wall_seconds > 0 and r.peak_rss_bytes > 0
    with pytest.raises(ConfigError):
        time_embed(g, TrainConfig(), repeats=0)


def test_time_is_linear_in_iterations():
    g = bench_graph(4000, seed=1)
    short = time_embed(g, TrainConfig(dim=64, iters=20), repeats=3).wall_seconds
    long = time_embed(g, TrainConfig(dim=64, iters=40), repeats=3).wall_seconds
    assert 2 * 0.75 <= long / short <= 2 * 1.25


def test_bench_graph_degree():
    g = bench_graph(5000, avg_degree=10, seed=2)
    assert g.n == 5000
    assert abs(2 * g.m / g.n - 10) < 0.5


def test_strong_single_point():
    res = scaling_experiment("strong", 1000, seed=0, threads=[1], cfg=TrainConfig(dim=8, iters=2))
    assert len(res) == 1 and res[0].threads == 1 and res[0].kind == "strong"


def test_threads_capped_at_hardware(caplog, monkeypatch):
    import force2vec.bench as bench

    monkeypatch.setattr(bench, "hardware_threads", lambda: 2)
    res = scaling_experiment("strong", 1000, threads=[1, 64], cfg=TrainConfig(dim=4, iters=1))
    assert [r.threads for r in res] == [1, 2]
    assert "capping" in caplog.text


def test_weak_and_graph_points():
    cfg = TrainConfig(dim=4, iters=1)
    weak = scaling_experiment("weak", 1000, cfg=cfg, points=2)
    assert [r.n for r in weak] == [1000, 2000]
    graph = scaling_experiment("graph", 1000, cfg=cfg, threads=[1], points=3)
    assert [r.n for r in graph] == [1000, 2000, 4000]
    assert {r.threads for r in graph} == {1}


def test_scaling_rejects_small_or_unknown():
    with pytest.raises(ValidationError):
        scaling_experiment("strong", 999)
    with pytest.raises(ConfigError):
        scaling_experiment("sideways", 1000, cfg=TrainConfig(dim=2, iters=1))


def test_loglog_fit_exact_power():
    slope, r2 = loglog_fit([1, 2, 4, 8], [3, 6, 12, 24])
    assert_allclose((slope, r2), (1.0, 1.0))


def test_empty_csv_is_header_only(tmp_path):
    path = tmp_path / "b.csv"
    emit_csv([], path, schema="bench")
    assert path.read_text() == ",".join(BENCH_COLUMNS) + "\n"
    assert path.read_text().startswith("kind,method,n,m,threads,wall_seconds,peak_rss_bytes,iters")
    emit_csv([], tmp_path / "e.csv", schema="eval")
    assert (tmp_path / "e.csv").read_text() == "task,metric,value\n"


def test_bench_csv_round_trip_and_append(tmp_path):
    rows = [BenchResult("strong", "force2vec-tdist", 10, 20, t, 0.1 / t, 123456 * t, 5) for t in (1, 2)]
    path = tmp_path / "b.csv"
    emit_csv(rows, path)
    assert read_bench_csv(path) == rows
    emit_csv(rows[:1], path)
    assert read_bench_csv(path) == rows + rows[:1]
    emit_csv(rows[:1], path, overwrite=True)
    assert read_bench_csv(path) == rows[:1]


def test_eval_csv_round_trip(tmp_path):
    reports = [EvalReport("nc", {"accuracy": 0.5, "f1_micro": 1 / 3}, {"train_frac": 0.2, "seed": 1}),
               EvalReport("lp", {"accuracy": 0.875}, {"operator": "wl1", "train_frac": 0.5, "seed": 1})]
    path = tmp_path / "e.csv"
    emit_csv(reports, path)
    header = path.read_text().splitlines()[0]
    assert header == "task,metric,value,param,param_value,param,param_value,param,param_value"
    rows = read_eval_csv(path)
    assert rows[1] == ("nc", "f1_micro", 1 / 3, {"seed": "1", "train_frac": "0.2"})
    assert rows[2] == ("lp", "accuracy", 0.875, {"operator": "wl1", "seed": "1", "train_frac": "0.5"})


def test_mismatched_header_refuses_append(tmp_path):
    path = tmp_path / "x.csv"
    emit_csv([], path, schema="bench")
    with pytest.raises(ValidationError):
        emit_csv([EvalReport("lp", {"accuracy": 1.0})], path)


def test_unwritable_path_names_it(tmp_path):
    target = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv([], target, schema="bench")


@pytest.mark.parametrize("method", METHODS)
def test_every_method_embeds(method):
    g, _ = generate_sbm([15, 15], 0.4, 0.05, seed=3)
    z = embed(g, method, TrainConfig(dim=6, iters=5, walk_length=10, seed=1))
    assert z.shape == (30, 6) and np.all(np.isfinite(z))


def test_unknown_method():
    g, _ = generate_sbm([5], 1.0, 0.0, seed=0)
    with pytest.raises(ConfigError):
        embed(g, "node2vec", TrainConfig())


def test_iteration_time_linear_in_n():
    cfg = TrainConfig(dim=32, iters=5, seed=0)
    res = scaling_experiment("graph", 10_000, cfg=cfg, threads=[1], points=3, repeats=3)
    slope, r2 = loglog_fit([r.n for r in res], [r.wall_seconds for r in res])
    assert r2 >= 0.95
    assert 0.7 <= slope <= 1.3
