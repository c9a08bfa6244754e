"""Map generation and mutation evaluation pipelines with on-disk artifacts.

Layout under the output directory::

    summary.csv            candidate ranking
    map/                   winner embedding + cluster model, per-candidate reports
    mutation/              per-mutant CSVs, report.csv, cross-mutant tables
    graph/                 map.gexf, map.dot
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clustering, embedding, mutation, topograph
from .datamodel import (
    ConfigError,
    DataFormatError,
    atomic_write_text,
    load_dataset,
    read_assignments,
    write_assignments,
)
from .evaluator import ClassifierSpec, ClusteringConfiguration, select_configuration, summary_csv
from .evaluator.selection import choose_k, save_report

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ALL_FAILED = 3
EXIT_PARTIAL = 4


@dataclass
class MutationInputs:
    original: Path
    mutants: Path
    tau: float | None = None
    R: int = 10


@dataclass
class RunConfig:
    dataset: Path
    seed: int
    out: Path
    candidates: list = field(default_factory=list)
    classifier: dict = field(default_factory=dict)
    mutation: MutationInputs | None = None

    def classifier_spec(self) -> ClassifierSpec:
        return ClassifierSpec.from_dict({"seed": self.seed, **self.classifier})


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def load_config(path, seed=None, out=None) -> RunConfig:
    """Parse and validate a JSON run configuration; paths resolve against its directory."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent
    if seed is None:
        if "seed" not in raw:
            raise ConfigError("config must set an explicit integer seed")
        seed = raw["seed"]
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    if "dataset" not in raw:
        raise ConfigError("config lacks a dataset manifest")
    dataset = _require(_resolve(base, raw["dataset"]), "dataset manifest")
    out_dir = Path(out) if out is not None else _resolve(base, raw.get("out", "out"))

    candidates = []
    for i, c in enumerate(raw.get("candidates", [])):
        if "embedding" not in c or "clustering" not in c:
            raise ConfigError(f"candidate {i} needs embedding and clustering entries")
        emb = dict(c["embedding"])
        if emb.get("method") not in embedding.METHODS:
            raise ConfigError(f"candidate {i}: unknown embedding method {emb.get('method')!r}")
        if emb["method"] == "external":
            emb["path"] = str(_require(_resolve(base, emb.get("path", "")), "external embedding"))
        cl = dict(c["clustering"])
        if cl.get("method") not in ("kmeans", "birch"):
            raise ConfigError(f"candidate {i}: unknown clustering method {cl.get('method')!r}")
        cl.setdefault("k", None)
        candidates.append(ClusteringConfiguration(emb, cl, int(c.get("seed", seed))))

    mut = None
    if raw.get("mutation"):
        m = raw["mutation"]
        mut = MutationInputs(
            original=_require(_resolve(base, m["original"]), "original predictions"),
            mutants=_require(_resolve(base, m["mutants"]), "mutant manifest"),
            tau=m.get("tau"),
            R=int(m.get("R", 10)),
        )
    return RunConfig(dataset, seed, out_dir, candidates, dict(raw.get("classifier", {})), mut)


# ---------------------------------------------------------------------------
# map
# ---------------------------------------------------------------------------

def cmd_map(config: RunConfig, jobs: int = 1) -> int:
    if not config.candidates:
        raise ConfigError("map needs at least one candidate configuration")
    dataset = load_dataset(config.dataset)
    best, results = select_configuration(config.candidates, dataset, config.classifier_spec(), jobs=jobs)

    out = Path(config.out)
    map_dir = out / "map"
    for i, r in enumerate(results):
        rdir = map_dir / "reports" / f"{i:03d}"
        save_report(r.report, rdir)
        atomic_write_text(rdir / "config.json", json.dumps(r.config.to_dict(), indent=2, sort_keys=True) + "\n")
    atomic_write_text(out / "summary.csv", summary_csv(results))
    errors = [{"candidate": i, "config_id": r.report.config_id, "error": r.report.error}
              for i, r in enumerate(results) if not r.ok]
    atomic_write_text(map_dir / "errors.json", json.dumps({"failed_candidates": errors}, indent=2) + "\n")
    if best is None:
        log.error("all %d candidates failed", len(results))
        return EXIT_ALL_FAILED

    embedding.export_embedding(map_dir / "embedding.tmx", best.embedded)
    if best.embedding_model is not None:
        embedding.save_model(best.embedding_model, map_dir / "embedding_model")
    clustering.save_model(best.cluster_model, map_dir / "cluster_model")
    write_assignments(map_dir / "assignments.csv", best.labels)
    winner = {
        "candidate": results.index(best),
        "config_id": best.report.config_id,
        "config": best.config.to_dict(),
        "min_acc": best.report.min_acc,
        "min_pair": list(best.report.min_pair),
    }
    atomic_write_text(map_dir / "winner.json", json.dumps(winner, indent=2, sort_keys=True) + "\n")
    _write_graph(out / "graph", best.cluster_model.centroids, best.labels, {})
    return EXIT_OK


def _write_graph(graph_dir, centroids, labels, strengths):
    sizes = np.bincount(labels, minlength=len(centroids))
    g = topograph.build_topograph(centroids, sizes, strengths)
    topograph.export_graph(g, "gexf", Path(graph_dir) / "map.gexf")
    topograph.export_graph(g, "dot", Path(graph_dir) / "map.dot")
    return g


def cmd_select_k(config: RunConfig) -> list:
    """k-selection traces for every candidate; written to ``map/ktrace_<i>.csv``."""
    dataset = load_dataset(config.dataset)
    traces = []
    for i, cand in enumerate(config.candidates):
        E, _ = embedding.embed(dataset, cand.embedding, seed=cand.seed)
        trace = choose_k(cand, dataset, E)
        trace.save(Path(config.out) / "map" / f"ktrace_{i:03d}.csv")
        traces.append(trace)
    return traces


# ---------------------------------------------------------------------------
# mutate
# ---------------------------------------------------------------------------

def read_mutant_manifest(path):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["mutant_id", "operator", "configuration", "predictions_path"]
        if reader.fieldnames != expected:
            raise DataFormatError(f"{path}: header must be {','.join(expected)}")
        rows = list(reader)
    for r in rows:
        r["predictions_path"] = str(_resolve(path.parent, r["predictions_path"]))
    return rows


@dataclass
class MutantOutcome:
    entry: dict
    aggregation: mutation.KillingAggregation | None = None
    baseline: mutation.BaselineResult | None = None
    runset: mutation.RunSet | None = None
    error: str = ""
    density: dict = field(default_factory=dict)


def analyze_mutant(entry, assignments, orig, truth, task, tau, R, seed) -> MutantOutcome:
    try:
        mut = mutation.build_runset(entry["predictions_path"], truth, task, tau, entry["mutant_id"])
        agg = mutation.build_killing_aggregation(assignments, orig, mut, entry["mutant_id"])
        base = mutation.random_baseline(len(agg.members), orig, mut, R=R, seed=seed)
        density = mutation.cluster_density(assignments, mutation.contributors(orig, mut))
        return MutantOutcome(entry, agg, base, mut, density=density)
    except (OSError, ValueError) as exc:
        return MutantOutcome(entry, error=f"{type(exc).__name__}: {exc}")


def _analyze_star(args):
    return analyze_mutant(*args)


REPORT_COLUMNS = ["mutant", "killable", "rho_k", "rho_c", "rho_d", "rho_c_random", "clusters",
                  "operator", "configuration", "size", "p_value", "effect_size"]


def _f(v):
    return repr(float(v))


def report_csv(outcomes) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for o in outcomes:
        if o.aggregation is None:
            continue
        a, b = o.aggregation, o.baseline
        w.writerow([a.mutant_id, int(a.killable), _f(a.rho_k), _f(a.rho_c), _f(b.rho_d),
                    _f(b.rho_c_random), " ".join(str(c) for c in a.clusters),
                    o.entry["operator"], o.entry["configuration"], len(a.members),
                    _f(a.verdict.p_value), _f(a.verdict.effect_size)])
    return buf.getvalue()


def mutant_detail_csv(o: MutantOutcome, assignments) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["position", "cluster", "size", "density", "in_aggregation"])
    sizes = np.bincount(assignments)
    chosen = set(o.aggregation.clusters)
    for pos, c in enumerate(o.aggregation.order):
        w.writerow([pos, c, int(sizes[c]), _f(o.density[c]), int(c in chosen)])
    return buf.getvalue()


def cmd_mutate(config: RunConfig, map_dir=None, jobs: int = 1) -> int:
    if config.mutation is None:
        raise ConfigError("config lacks a mutation section")
    out = Path(config.out)
    map_dir = Path(map_dir) if map_dir is not None else out / "map"
    assign_path = _require(map_dir / "assignments.csv", "map assignments")
    model_path = _require(map_dir / "cluster_model" / "cluster_model.json", "map cluster model")

    dataset = load_dataset(config.dataset)
    test = dataset.rows("test")
    truth = dataset.labels[test]
    all_assign = read_assignments(assign_path)
    if len(all_assign) != dataset.n_rows:
        raise DataFormatError("map assignments do not match the dataset rows")
    assignments = all_assign[test]
    task, tau, R = dataset.task, config.mutation.tau, config.mutation.R
    orig = mutation.build_runset(config.mutation.original, truth, task, tau, "original")
    entries = read_mutant_manifest(config.mutation.mutants)

    work = [(e, assignments, orig, truth, task, tau, R, config.seed + i) for i, e in enumerate(entries)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_analyze_star, work))
    else:
        outcomes = [_analyze_star(w) for w in work]

    mdir = out / "mutation"
    for o in outcomes:
        if o.aggregation is not None:
            atomic_write_text(mdir / "mutants" / f"{o.entry['mutant_id']}.csv", mutant_detail_csv(o, assignments))
    atomic_write_text(mdir / "report.csv", report_csv(outcomes))
    errors = [{"mutant": o.entry["mutant_id"], "error": o.error} for o in outcomes if o.error]
    atomic_write_text(mdir / "errors.json", json.dumps({"failed_mutants": errors}, indent=2) + "\n")

    good = [o for o in outcomes if o.aggregation is not None]
    strengths = {}
    try:
        ks = mutation.killing_strength([o.aggregation for o in good])
        strengths = ks.rho_a
    except mutation.MutationError:
        ks = None
    atomic_write_text(mdir / "killing_strength.csv", strength_csv(ks))

    groups: dict[str, list] = {}
    for o in good:
        groups.setdefault(o.entry["operator"], []).append(o.entry["mutant_id"])
    khf = mutation.kill_half_full(
        groups,
        {o.entry["mutant_id"]: o.aggregation for o in good},
        {o.entry["mutant_id"]: o.runset for o in good},
        orig,
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["operator", "configurations", "kill_half", "kill_full"])
    for op in sorted(khf):
        w.writerow([op, len(groups[op]), _f(khf[op][0]), _f(khf[op][1])])
    atomic_write_text(mdir / "kill_half_full.csv", buf.getvalue())

    cm = clustering.load_model(model_path)
    _write_graph(out / "graph", cm.centroids, all_assign, strengths)
    return EXIT_PARTIAL if errors else EXIT_OK


def strength_csv(ks) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "cluster", "rho_a"])
    if ks is not None:
        for rank, (c, v) in enumerate(ks.ranking, 1):
            w.writerow([rank, c, _f(v)])
    return buf.getvalue()


def read_strengths(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        return {int(r["cluster"]): float(r["rho_a"]) for r in csv.DictReader(fh)}

