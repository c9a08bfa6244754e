"""Statistical mutant killing and cluster-guided killing aggregations.

A RunSet holds N independent retrainings of one model evaluated on the test
rows. Row indices here are positions within the test split.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import mannwhitneyu

from .datamodel import read_tmx

ALPHA = 0.05
MIN_EFFECT = 0.5


class MutationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RunSet:
    model_id: str
    correctness: np.ndarray  # N x n, True = mispredicted
    metric_per_run: np.ndarray
    task: str = "classification"
    tau: float | None = None
    predictions: np.ndarray | None = field(default=None, repr=False)  # regression: N x n x d
    truth: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_runs(self) -> int:
        return self.correctness.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.correctness.shape[1]


def runset_from_predictions(preds, truth, task="classification", tau=None, model_id="") -> RunSet:
    """Build a RunSet from an N x n prediction matrix (N x n*d for d-dimensional regression)."""
    preds = np.asarray(preds, dtype=np.float64)
    if preds.ndim != 2 or preds.shape[0] < 2:
        raise MutationError("predictions need N >= 2 runs")
    N = preds.shape[0]
    if task == "classification":
        truth = np.asarray(truth, dtype=np.int64).ravel()
        if preds.shape[1] != len(truth):
            raise MutationError(f"predictions have {preds.shape[1]} columns, test set has {len(truth)} rows")
        wrong = np.rint(preds).astype(np.int64) != truth[None, :]
        return RunSet(model_id, wrong, 1.0 - wrong.mean(axis=1), task)
    if task != "regression":
        raise MutationError(f"unknown task {task!r}")
    if tau is None:
        raise MutationError("regression runsets need a threshold tau")
    truth = np.asarray(truth, dtype=np.float64)
    truth = truth.reshape(len(truth), -1)
    n, d = truth.shape
    if preds.shape[1] != n * d:
        raise MutationError(f"predictions have {preds.shape[1]} columns, expected {n * d}")
    raw = preds.reshape(N, n, d)
    err = raw - truth[None]
    wrong = np.sqrt(np.sum(err ** 2, axis=2)) >= tau
    mse = np.mean(err ** 2, axis=(1, 2))
    return RunSet(model_id, wrong, mse, task, float(tau), raw, truth)


def build_runset(predictions_path, ground_truth, task="classification", tau=None, model_id="") -> RunSet:
    return runset_from_predictions(read_tmx(predictions_path), ground_truth, task, tau,
                                   model_id or str(predictions_path))


def misprediction_probability(rs: RunSet) -> np.ndarray:
    return rs.correctness.mean(axis=0)


def contributors(orig: RunSet, mut: RunSet) -> np.ndarray:
    """Boolean mask of inputs mispredicted strictly more often by the mutant."""
    if orig.n_inputs != mut.n_inputs:
        raise MutationError("runsets cover different test inputs")
    return misprediction_probability(orig) < misprediction_probability(mut)


def metric_on_subset(rs: RunSet, rows) -> np.ndarray:
    """Per-run accuracy (classification) or MSE (regression) on ``rows``."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise MutationError("empty input subset")
    if rs.task == "classification":
        return 1.0 - rs.correctness[:, rows].mean(axis=1)
    err = rs.predictions[:, rows, :] - rs.truth[None, rows, :]
    return np.mean(err ** 2, axis=(1, 2))


# ---------------------------------------------------------------------------
# statistical killing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KillVerdict:
    p_value: float
    effect_size: float
    killed: bool


def cohens_d(a, b) -> float:
    """(mean(a) - mean(b)) / pooled sd with an (n1 + n2 - 2) divisor."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n1, n2 = len(a), len(b)
    diff = a.mean() - b.mean()
    pooled = ((n1 - 1) * a.var(ddof=1) + (n2 - 1) * b.var(ddof=1)) / (n1 + n2 - 2)
    if pooled == 0:
        if diff == 0:
            return 0.0
        return math.copysign(math.inf, diff)
    return float(diff / math.sqrt(pooled))


def is_killed(orig_metrics, mut_metrics) -> KillVerdict:
    a = np.asarray(orig_metrics, dtype=np.float64)
    b = np.asarray(mut_metrics, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise MutationError("killing test needs at least 2 runs per model")
    if np.all(a == a[0]) and np.all(b == a[0]):
        return KillVerdict(1.0, 0.0, False)
    p = float(mannwhitneyu(a, b, alternative="two-sided").pvalue)
    d = cohens_d(a, b)
    return KillVerdict(p, d, bool(p < ALPHA and abs(d) >= MIN_EFFECT))


def kills_subset(orig: RunSet, mut: RunSet, rows) -> KillVerdict:
    return is_killed(metric_on_subset(orig, rows), metric_on_subset(mut, rows))


# ---------------------------------------------------------------------------
# killing aggregations
# ---------------------------------------------------------------------------

@dataclass
class KillingAggregation:
    mutant_id: str
    clusters: list
    members: np.ndarray
    rho_k: float
    rho_c: float
    verdict: KillVerdict
    killable: bool
    order: list = field(default_factory=list)


def cluster_density(assignments, contrib):
    """{cluster: contributor fraction} over the clusters present in ``assignments``."""
    assignments = np.asarray(assignments)
    return {int(c): float(np.mean(contrib[assignments == c])) for c in np.unique(assignments)}


def build_killing_aggregation(assignments, orig: RunSet, mut: RunSet, mutant_id="") -> KillingAggregation:
    """Add clusters by descending contributor density until the subset kills the mutant."""
    assignments = np.asarray(assignments, dtype=np.int64)
    if len(assignments) != orig.n_inputs:
        raise MutationError("every test row needs a cluster assignment")
    contrib = contributors(orig, mut)
    density = cluster_density(assignments, contrib)
    order = sorted(density, key=lambda c: (-density[c], c))
    n = len(assignments)
    mask = np.zeros(n, dtype=bool)
    added = []
    verdict = None
    for c in order:
        mask |= assignments == c
        added.append(c)
        verdict = kills_subset(orig, mut, np.flatnonzero(mask))
        if verdict.killed:
            break
    members = np.flatnonzero(mask)
    return KillingAggregation(
        mutant_id=mutant_id,
        clusters=added,
        members=members,
        rho_k=len(members) / n,
        rho_c=float(contrib[members].mean()),
        verdict=verdict,
        killable=verdict.killed,
        order=order,
    )


@dataclass(frozen=True)
class BaselineResult:
    R: int
    rho_d: float
    rho_c_random: float
    seed: int
    kills: tuple = ()


def random_baseline(size: int, orig: RunSet, mut: RunSet, R: int = 10, seed: int = 0) -> BaselineResult:
    """Kill rate of ``R`` uniform random test subsets of ``size`` rows (without replacement)."""
    n = orig.n_inputs
    if size <= 0:
        raise MutationError("baseline subset size must be positive")
    if size > n:
        raise MutationError(f"baseline size {size} exceeds {n} test rows")
    if R < 1:
        raise MutationError("R must be >= 1")
    rng = np.random.default_rng(seed)
    contrib = contributors(orig, mut)
    kills, fracs = [], []
    for _ in range(R):
        rows = np.sort(rng.choice(n, size=size, replace=False))
        kills.append(kills_subset(orig, mut, rows).killed)
        fracs.append(float(contrib[rows].mean()))
    return BaselineResult(R, sum(kills) / R, float(np.mean(fracs)), seed, tuple(kills))


# ---------------------------------------------------------------------------
# cross-mutant statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KillingStrength:
    rho_a: dict
    ranking: list
    n_aggregations: int

    def top(self, n=3):
        return self.ranking[:n]


def killing_strength(aggregations) -> KillingStrength:
    """Share of killable aggregations that include each cluster."""
    killable = [a for a in aggregations if a.killable]
    if not killable:
        raise MutationError("no killable aggregations")
    counts: dict[int, int] = {}
    for a in killable:
        for c in set(a.clusters):
            counts[c] = counts.get(c, 0) + 1
    rho_a = {c: counts[c] / len(killable) for c in sorted(counts)}
    ranking = sorted(rho_a.items(), key=lambda kv: (-kv[1], kv[0]))
    return KillingStrength(rho_a, ranking, len(killable))


def kill_half_full(mo_groups: dict, aggregations: dict, runsets: dict, orig: RunSet) -> dict:
    """Per operator: fraction of its killing aggregations that kill >= half / all of its configurations.

    ``mo_groups`` maps operator -> mutant ids; only killable aggregations are
    scored (a configuration without one has no aggregation to reuse). An
    operator with no killable configuration maps to (nan, nan).
    """
    out = {}
    for op, members in mo_groups.items():
        members = list(members)
        m = len(members)
        if m == 0:
            raise MutationError(f"operator {op!r} has no configurations")
        need = math.ceil(m / 2)
        half = full = scored = 0
        for mid in members:
            agg = aggregations.get(mid)
            if agg is None or not agg.killable:
                continue
            scored += 1
            killed = sum(kills_subset(orig, runsets[sib], agg.members).killed for sib in members)
            half += killed >= need
            full += killed == m
        out[op] = (half / scored, full / scored) if scored else (float("nan"), float("nan"))
    return out
