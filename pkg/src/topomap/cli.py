"""Command line entry point: ``topomap {map,mutate,select-k,export-graph,eval-pair}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .datamodel import ConfigError, DataFormatError
from .evaluator.pairwise import min_pair, pairwise_matrix

# exit codes, mirrored in pipeline
EXIT_OK = 0
EXIT_INVALID = 2

log = logging.getLogger("topomap")


def _read_label_column(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["row", "label"]:
            raise DataFormatError(f"{path}: expected a row,label CSV")
        return [r[1].strip() for r in reader if r]


def eval_pair(pred_path, truth_path) -> dict:
    """Pairwise weighted accuracies for two label CSVs; labels may be any strings."""
    pred = _read_label_column(pred_path)
    truth = _read_label_column(truth_path)
    if len(pred) != len(truth):
        raise DataFormatError(f"row-count mismatch: {len(pred)} predictions, {len(truth)} truths")
    names = sorted(set(pred) | set(truth))
    index = {n: i for i, n in enumerate(names)}
    M = pairwise_matrix([index[p] for p in pred], [index[t] for t in truth], len(names))
    pairs = []
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            v = M[a, b]
            pairs.append({"a": names[a], "b": names[b], "w_acc": None if v != v else float(v)})
    a, b, v = min_pair(M)
    return {"pairs": pairs, "min_pair": {"a": names[a], "b": names[b], "w_acc": v}}


def _add_common(p, config=True):
    if config:
        p.add_argument("--config", required=True, help="run configuration (JSON)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topomap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("map", help="build and select the topographical map"))

    p = sub.add_parser("mutate", help="cluster-guided mutation killing analysis")
    _add_common(p)
    p.add_argument("--map", dest="map_dir", default=None, help="map directory (default <out>/map)")

    _add_common(sub.add_parser("select-k", help="run the k-selection trace per candidate"))

    p = sub.add_parser("export-graph", help="export the MST-pruned cluster graph")
    _add_common(p, config=False)
    p.add_argument("--map", dest="map_dir", required=True, help="map directory")
    p.add_argument("--format", choices=("gexf", "dot"), default="gexf")
    p.add_argument("--strengths", default=None, help="killing_strength.csv from a mutate run")

    p = sub.add_parser("eval-pair", help="weighted pairwise accuracy of two label CSVs")
    _add_common(p, config=False)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "eval-pair":
            return _eval_pair(args)
        return _dispatch(args)
    except (ConfigError, DataFormatError, FileNotFoundError) as exc:
        print(f"topomap: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _eval_pair(args) -> int:
    result = eval_pair(args.pred, args.truth)
    text = json.dumps(result, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _dispatch(args) -> int:
    # the pipeline pulls in scipy; load it only for the commands that need it
    import numpy as np

    from . import clustering, pipeline, topograph
    from .datamodel import read_assignments

    if args.command == "export-graph":
        map_dir = Path(args.map_dir)
        cm = clustering.load_model(map_dir / "cluster_model" / "cluster_model.json")
        labels = read_assignments(map_dir / "assignments.csv")
        strengths = pipeline.read_strengths(args.strengths) if args.strengths else {}
        g = topograph.build_topograph(cm.centroids, np.bincount(labels, minlength=cm.k), strengths)
        out = args.out or str(map_dir.parent / "graph" / f"map.{args.format}")
        topograph.export_graph(g, args.format, out)
        print(out)
        return pipeline.EXIT_OK

    config = pipeline.load_config(args.config, seed=args.seed, out=args.out)
    if args.command == "map":
        return pipeline.cmd_map(config, jobs=args.jobs)
    if args.command == "mutate":
        return pipeline.cmd_mutate(config, args.map_dir, jobs=args.jobs)
    if args.command == "select-k":
        for i, trace in enumerate(pipeline.cmd_select_k(config)):
            flag = " (exhausted)" if trace.exhausted else ""
            print(f"candidate {i}: k* = {trace.k_star}{flag}")
        return pipeline.EXIT_OK
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
