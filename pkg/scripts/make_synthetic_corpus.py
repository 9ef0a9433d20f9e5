"""Write a synthetic token stream that stands in for Text8 at desk scale.

Benchmark words are grouped into topics (words joined by a high human
similarity score share a topic) and emitted in topic runs, interleaved with
Zipf-distributed filler words.  The result exercises the full word-training
configuration and gives every benchmark word some context.

    python scripts/make_synthetic_corpus.py --tokens 100000 --out corpus.txt
"""
import argparse
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from wembed.word2cloud import bundled_benchmark, load_benchmark, synthetic_topic_corpus


def benchmark_topics(ds, min_score):
    words = sorted({w for a, b, _ in ds.triples for w in (a, b)})
    index = {w: i for i, w in enumerate(words)}
    links = [(index[a], index[b]) for a, b, s in ds.triples if s >= min_score]
    rows = [i for i, _ in links]
    cols = [j for _, j in links]
    adj = coo_matrix((np.ones(len(links)), (rows, cols)), shape=(len(words), len(words)))
    n_comp, label = connected_components(adj, directed=False)
    topics = [[w for w in words if label[index[w]] == c] for c in range(n_comp)]
    # singletons cannot form context among themselves; pool them in pairs
    big = [t for t in topics if len(t) > 1]
    small = [w for t in topics if len(t) == 1 for w in t]
    big.extend(small[i : i + 2] for i in range(0, len(small), 2))
    return big


def filler_words(n):
    return [f"f{i:05d}" for i in range(n)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tokens", type=int, default=100_000)
    ap.add_argument("--benchmark", help="CSV word1,word2,score (default: bundled RG-65)")
    ap.add_argument("--min-score", type=float, default=2.5)
    ap.add_argument("--filler-types", type=int, default=20_000)
    ap.add_argument("--filler-rate", type=float, default=0.5)
    ap.add_argument("--segment", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    ds = load_benchmark(args.benchmark) if args.benchmark else bundled_benchmark("rg65")
    topics = benchmark_topics(ds, args.min_score)
    tokens = synthetic_topic_corpus(
        topics, args.tokens, seed=args.seed, segment=args.segment,
        filler=filler_words(args.filler_types), filler_rate=args.filler_rate,
    )
    Path(args.out).write_text(" ".join(tokens) + "\n")
    print(f"tokens={len(tokens)} topics={len(topics)} distinct={len(set(tokens))} -> {args.out}")


if __name__ == "__main__":
    main()
