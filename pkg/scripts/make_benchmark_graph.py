#!/usr/bin/env python3
"""Write the deterministic citation-scale benchmark graph and labels to disk.

Usage:
    python scripts/make_benchmark_graph.py [--out data/] [--nodes 2708]
        [--edges 5429] [--classes 7] [--seed 7]
"""

import argparse
from pathlib import Path

from dprank.datasets import benchmark_labels, citation_benchmark_graph
from dprank.graph import write_edge_list


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data")
    parser.add_argument("--nodes", type=int, default=2708)
    parser.add_argument("--edges", type=int, default=5429)
    parser.add_argument("--classes", type=int, default=7)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = citation_benchmark_graph(args.nodes, args.edges, seed=args.seed)
    edge_path = out / f"benchmark_{args.nodes}.tsv"
    write_edge_list(g, edge_path)

    labels = benchmark_labels(args.nodes, args.classes, seed=args.seed)
    label_path = out / f"benchmark_{args.nodes}_labels.csv"
    with open(label_path, "w") as fh:
        fh.write("node_id,class_id\n")
        for node, cls in enumerate(labels):
            fh.write(f"{node},{cls}\n")

    print(f"wrote {edge_path} ({g.num_edges // 2} undirected edges)")
    print(f"wrote {label_path} ({args.classes} classes)")


if __name__ == "__main__":
    main()
