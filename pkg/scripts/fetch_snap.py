"""Download a SNAP edge list and cut BFS fragments from it.

    python scripts/fetch_snap.py --url https://snap.stanford.edu/data/ca-GrQc.txt.gz \
        --size 128 --fragments 5 --out-dir data/grqc

The library never downloads anything itself; this helper is the only place
that touches the network.
"""
import argparse
import gzip
import shutil
import urllib.request
from pathlib import Path

from wembed.graphs import bfs_fragment, load_edge_list, write_edge_list


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--url", required=True)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--fragments", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", required=True)
    args = ap.parse_args(argv)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = out / Path(args.url).name
    if not raw.exists():
        with urllib.request.urlopen(args.url) as resp, open(raw, "wb") as fh:
            shutil.copyfileobj(resp, fh)
    edges_path = raw
    if raw.suffix == ".gz":
        edges_path = raw.with_suffix("")
        with gzip.open(raw, "rb") as src, open(edges_path, "wb") as dst:
            shutil.copyfileobj(src, dst)
    edges = load_edge_list(edges_path)
    for i in range(args.fragments):
        g = bfs_fragment(edges, args.size, seed=args.seed + i)
        path = out / f"fragment_{i}.txt"
        write_edge_list(g, path, f"bfs fragment of {edges_path.name} seed={args.seed + i}")
        print(f"{path}: vertices={g.n} edges={g.n_edges}")


if __name__ == "__main__":
    main()
