#!/usr/bin/env python3
"""Convert the McCallum Cora files (cora.content, cora.cites) to the ckgnn
dataset text format.

Node ids are assigned in cora.content order, class ids by sorted class name,
and each feature row is normalized to unit sum. Citation pairs become
undirected unweighted edges; self-loops, duplicates, and pairs that mention
unknown paper ids are skipped with a warning.

The output has no mask lines; train with --split semi to get the standard
20-per-class/500/1000 protocol.
"""

import argparse
import sys


def read_content(path):
    ids = {}
    features = []
    label_names = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                sys.exit(f"{path}:{line_no}: expected <id> <features...> <class>")
            paper, feats, name = parts[0], parts[1:-1], parts[-1]
            if dim is None:
                dim = len(feats)
            elif len(feats) != dim:
                sys.exit(f"{path}:{line_no}: expected {dim} features, got {len(feats)}")
            if paper in ids:
                sys.exit(f"{path}:{line_no}: duplicate paper id {paper}")
            ids[paper] = len(ids)
            features.append([float(v) for v in feats])
            label_names.append(name)
    if not ids:
        sys.exit(f"{path}: no content lines")
    classes = sorted(set(label_names))
    class_id = {name: k for k, name in enumerate(classes)}
    labels = [class_id[name] for name in label_names]
    return ids, features, labels, len(classes)


def read_edges(path, ids):
    edges = set()
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                sys.exit(f"{path}:{line_no}: expected <cited> <citing>")
            a, b = parts
            if a not in ids or b not in ids:
                print(f"{path}:{line_no}: unknown paper id, skipping", file=sys.stderr)
                skipped += 1
                continue
            u, v = ids[a], ids[b]
            if u == v:
                print(f"{path}:{line_no}: self-citation, skipping", file=sys.stderr)
                skipped += 1
                continue
            edges.add((min(u, v), max(u, v)))
    return sorted(edges), skipped


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("content", help="path to cora.content")
    ap.add_argument("cites", help="path to cora.cites")
    ap.add_argument("out", help="output dataset path (e.g. data/cora.ckg)")
    args = ap.parse_args()

    ids, features, labels, classes = read_content(args.content)
    edges, skipped = read_edges(args.cites, ids)

    with open(args.out, "w", encoding="utf-8") as out:
        out.write(f"{len(ids)} {len(features[0])} {classes}\n")
        for i, (row, label) in enumerate(zip(features, labels)):
            s = sum(row)
            if s > 0.0:
                row = [v / s for v in row]
            vals = " ".join(f"{v:.17g}" for v in row)
            out.write(f"N {i} {label} {vals}\n")
        for u, v in edges:
            out.write(f"E {u} {v}\n")

    print(f"wrote {args.out}: {len(ids)} nodes, {len(edges)} edges, "
          f"{classes} classes, {skipped} citation lines skipped")


if __name__ == "__main__":
    main()
