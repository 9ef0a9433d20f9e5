"""``wembed`` command line: graph generation, embedding, word training and inspection.

Exit codes: 0 on success, 1 when a run fails, 2 for usage errors (bad flags,
missing input files).
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import graphs
from .metric_embed import mean_distortion, train_min_distortion
from .models import budget_shape
from .optim import finite_diff, relative_error
from .ot import SinkhornConfig, sinkhorn_grad
from .persist import RunConfig, load_model, save_model
from .viz import DEFAULT_RESOLUTION, DEFAULT_THRESHOLD, render_words
from .word2cloud import bundled_benchmark, eval_similarity, load_benchmark, nearest_neighbors, train_word_model

log = logging.getLogger("wembed")


class UsageError(Exception):
    """Bad invocation detected after argument parsing; maps to exit code 2."""


def _existing(path, what):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def _out_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_report(path, items):
    Path(path).write_text("".join(f"{k}: {v}\n" for k, v in items))


def _resolve_config(args, **overrides):
    path = _existing(args.config, "config file") if args.config else None
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        base = RunConfig.load(path) if path else RunConfig()
        return base.updated(**overrides)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc)) from None


# gen-graph ------------------------------------------------------------------


def cmd_gen_graph(args):
    cfg = _resolve_config(
        args, graph_model=args.model, n=args.n, attach=args.attach, ring_k=args.ring_k, beta=args.beta,
        blocks=args.blocks, p_in=args.p_in, p_out=args.p_out,
    )
    if args.from_edges:
        edges = graphs.load_edge_list(_existing(args.from_edges, "edge list"))
        size = args.fragment or cfg.n
        g = graphs.bfs_fragment(edges, size, seed=cfg.seed)
        comment = f"bfs fragment of {Path(args.from_edges).name} size={size} seed={cfg.seed}"
    else:
        g = graphs.generate(
            cfg.graph_model, cfg.n, seed=cfg.seed, attach=cfg.attach, ring_k=cfg.ring_k, beta=cfg.beta,
            blocks=cfg.blocks, p_in=cfg.p_in, p_out=cfg.p_out,
        )
        comment = f"model={cfg.graph_model} n={cfg.n} seed={cfg.seed}"
    graphs.write_edge_list(g, args.out, comment)
    if args.metric_out:
        graphs.write_metric_csv(graphs.apsp(g), args.metric_out)
    print(f"vertices={g.n} edges={g.n_edges} connected={str(g.is_connected()).lower()}")
    return 0


# embed-graph ----------------------------------------------------------------


def cmd_embed_graph(args):
    cfg = _resolve_config(
        args, kind=args.kind, points=args.points, ground_dim=args.ground_dim, dim=args.dim, epochs=args.epochs,
        lr=args.lr, lam=args.lam, iterations=args.iterations, batch_pairs=args.batch_pairs,
    )
    if args.budget is not None:
        if cfg.kind == "wasserstein":
            cfg = cfg.updated(points=args.budget // cfg.ground_dim)
        else:
            cfg = cfg.updated(dim=args.budget)
    if cfg.kind == "wasserstein":
        shape = budget_shape("wasserstein", M=cfg.points, k=cfg.ground_dim)
    else:
        shape = budget_shape(cfg.kind, d=cfg.dim)
    edges = graphs.load_edge_list(_existing(args.graph, "graph file"))
    g = graphs.graph_from_edge_list(edges)
    target = graphs.apsp(g)
    out = _out_dir(args.out)
    cfg.save(out / "config.txt")

    with open(out / "history.csv", "w") as hist:
        hist.write("epoch,mean_rel\n")

        def record(epoch, value, _model):
            hist.write(f"{epoch},{value!r}\n")

        model, history = train_min_distortion(target, cfg.kind, shape, cfg.distortion(), callback=record)
        hist.write(f"{cfg.epochs},{history[-1]!r}\n")
    report = mean_distortion(model, target, cfg.sinkhorn())
    save_model(model, out / "model.wemb")
    _write_report(
        out / "report.txt",
        [("kind", cfg.kind), ("n", g.n), ("budget", model.budget)] + [tuple(line.split(": ", 1)) for line in report.as_lines()],
    )
    print(f"mean_rel={report.mean_rel:.6f} worst_case={report.worst_case:.6f} -> {out / 'model.wemb'}")
    return 0


# train-words ----------------------------------------------------------------


def cmd_train_words(args):
    corpus = _existing(args.corpus, "corpus")
    cfg = _resolve_config(
        args, vocab_cap=args.vocab, window=args.window, word_lam=args.lam, word_epochs=args.epochs,
        neg_rate=args.neg, margin=args.margin, hidden=args.hidden, word_points=args.points,
        word_ground_dim=args.ground_dim, word_lr=args.lr, batch_size=args.batch_size,
        word_iterations=args.iterations, negatives=args.negatives,
    )
    out = _out_dir(args.out)
    cfg.save(out / "config.txt")
    with open(out / "history.csv", "w") as hist:
        hist.write("epoch,loss\n")

        def record(epoch, value, _model):
            hist.write(f"{epoch},{value!r}\n")
            print(f"epoch {epoch} loss {value:.6f}", flush=True)

        model, history = train_word_model(corpus, cfg.word_training(), callback=record)
    emb = model.to_embedding()
    save_model(emb, out / "model.wemb")
    items = [("vocab_size", len(model.vocab)), ("points", cfg.word_points), ("ground_dim", cfg.word_ground_dim)]
    items.append(("final_loss", repr(history[-1]) if history else "nan"))
    _write_report(out / "report.txt", items)
    print(f"vocab={len(model.vocab)} -> {out / 'model.wemb'}")
    return 0


# eval-similarity / nn / viz -------------------------------------------------


def _word_model(args):
    return load_model(_existing(args.model, "model file"))


def cmd_eval(args):
    cfg = _resolve_config(args, word_lam=args.lam, word_iterations=args.iterations)
    model = _word_model(args)
    ds = load_benchmark(_existing(args.benchmark, "benchmark")) if args.benchmark else bundled_benchmark(args.bundled)
    res = eval_similarity(model, ds, cfg.word_sinkhorn())
    items = [("benchmark", ds.name), ("spearman", repr(res["spearman"])), ("covered_pairs", res["covered_pairs"]),
             ("total_pairs", len(ds.triples))]
    text = "".join(f"{k}: {v}\n" for k, v in items)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_nn(args):
    cfg = _resolve_config(args, word_lam=args.lam, word_iterations=args.iterations)
    model = _word_model(args)
    ranked = nearest_neighbors(model, args.query.lower(), args.topk, cfg.word_sinkhorn())
    text = "".join(f"{rank}\t{word}\t{dist!r}\n" for rank, (word, dist) in enumerate(ranked, start=1))
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def _parse_groups(specs):
    groups = {}
    for spec in specs:
        if "=" not in spec:
            raise UsageError(f"--group expects name=word1,word2,..., got {spec!r}")
        name, words = spec.split("=", 1)
        groups[name] = [w for w in words.split(",") if w]
    return groups


def cmd_viz(args):
    model = _word_model(args)
    groups = _parse_groups(args.group) if args.group else None
    words = [w for w in (args.words or "").split(",") if w]
    if not groups and not words:
        raise UsageError("viz needs --words or at least one --group")
    bandwidth = None if args.bandwidth in (None, "auto") else float(args.bandwidth)
    colors = args.colors.split(",") if args.colors else None
    render_words(
        model, words, args.out, groups=groups, colors=colors, threshold=args.threshold, bandwidth=bandwidth,
        resolution=args.resolution, size=args.size,
    )
    print(f"wrote {args.out}")
    return 0


# check-grad -----------------------------------------------------------------


def cmd_check_grad(args):
    """Compare reverse-mode Sinkhorn gradients with central differences."""
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    worst = 0.0
    for _ in range(args.instances):
        M, N = rng.integers(1, args.max_points + 1, size=2)
        k = int(rng.integers(1, 4))
        a, b = rng.normal(size=(M, k)), rng.normal(size=(N, k))
        D = np.linalg.norm(a[:, None] - b[None], axis=-1)
        cfg = SinkhornConfig(lam=float(args.lam_scale * max(D.mean(), 1e-3)), iterations=args.iterations)
        _, ga, gb = sinkhorn_grad(a, b, cfg)
        fa = finite_diff(lambda x: sinkhorn_grad(x, b, cfg)[0], a)
        fb = finite_diff(lambda y: sinkhorn_grad(a, y, cfg)[0], b)
        worst = max(worst, relative_error(np.concatenate([ga.ravel(), gb.ravel()]), np.concatenate([fa.ravel(), fb.ravel()])))
    print(f"instances={args.instances} max_relative_error={worst:.3e}")
    return 0 if worst < args.tol else 1


# parser ---------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override its entries")
    common.add_argument("--seed", type=int)
    common.add_argument("--deterministic", action="store_true",
                        help="pin BLAS to one thread so reductions run in a fixed order")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wembed", description="Wasserstein point-cloud embeddings")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-graph", parents=[common], help="generate a random network or a BFS fragment")
    p.add_argument("--model", choices=["ba", "ws", "sbm", "tree"])
    p.add_argument("--n", type=int)
    p.add_argument("--attach", type=int)
    p.add_argument("--ring-k", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--blocks", type=int)
    p.add_argument("--p-in", type=float)
    p.add_argument("--p-out", type=float)
    p.add_argument("--from-edges", help="edge list to cut a BFS fragment from")
    p.add_argument("--fragment", type=int, help="fragment size (defaults to --n)")
    p.add_argument("--metric-out", help="also write the shortest-path metric as CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("embed-graph", parents=[common], help="fit a minimum-distortion embedding")
    p.add_argument("--graph", required=True)
    p.add_argument("--kind", choices=["wasserstein", "euclidean", "hyperbolic"])
    p.add_argument("--points", type=int, help="support points M per cloud")
    p.add_argument("--ground-dim", type=int, help="ground dimension k")
    p.add_argument("--dim", type=int, help="vector dimension d")
    p.add_argument("--budget", type=int, help="parameters per object (M*k or d)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--batch-pairs", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_embed_graph)

    p = sub.add_parser("train-words", parents=[common], help="train point-cloud word embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--neg", type=int)
    p.add_argument("--margin", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--ground-dim", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--negatives", choices=["uniform", "unigram"])
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train_words)

    p = sub.add_parser("eval-similarity", parents=[common], help="Spearman correlation on a similarity benchmark")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--benchmark", help="CSV with header word1,word2,score")
    src.add_argument("--bundled", default="rg65", choices=["rg65"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("nn", parents=[common], help="nearest neighbours of a word")
    p.add_argument("--model", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--topk", type=int, default=5)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("viz", parents=[common], help="draw density level sets of word clouds")
    p.add_argument("--model", required=True)
    p.add_argument("--words", help="comma-separated words, one colour each")
    p.add_argument("--group", action="append", help="name=word1,word2 (repeatable)")
    p.add_argument("--colors", help="comma-separated hex colours")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--bandwidth", default="auto")
    p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--out", required=True, help=".svg or .png")
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("check-grad", parents=[common], help="finite-difference check of Sinkhorn gradients")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--max-points", type=int, default=5)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--lam-scale", type=float, default=0.1, help="lambda as a multiple of mean(D)")
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_check_grad)
    return parser


def _single_thread():
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=1)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    guard = _single_thread() if args.deterministic else contextlib.nullcontext()
    try:
        with guard:
            return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"wembed: error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        print(f"wembed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
