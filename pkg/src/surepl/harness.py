"""Experiment orchestration: metrics, significance testing, cross-validation,
grid search, and the report / label-file plumbing used by the CLI.

Everything is reproducible byte for byte from (inputs, flags, seed): fold
splits and per-fold training seeds derive from a single master generator, and
reports serialize with stable key ordering.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import betainc

from .baselines import plknn_predict
from .data import PLDataset, split_folds
from .training import TrainConfig, TrainTrace, predict, train

__all__ = [
    "ExperimentReport",
    "GridSearchResult",
    "TTestResult",
    "accuracy",
    "mae_at_k",
    "t_test_two_sample",
    "cross_validate",
    "grid_search",
    "nested_cross_validate",
    "make_blobs_dataset",
    "report_to_json",
    "report_from_json",
    "write_labels",
    "read_labels",
    "load_values_map",
]

DEFAULT_GRID = (0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 1.0)


def accuracy(pred, truth) -> float:
    """Fraction of exact label matches."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"length mismatch: {pred.shape} predictions vs {truth.shape} truths")
    if pred.size == 0:
        raise ValueError("empty input")
    return float(np.mean(pred == truth))


def mae_at_k(pred, truth, values: dict[int, float] | None = None, k: float = 0.0) -> float:
    """Fraction of predictions whose mapped value is within k of the truth's.

    `values` maps 0-based labels to reals (for example label -> age); the
    default is the identity mapping.  With k = 0 and injective values this
    reduces to plain accuracy.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"length mismatch: {pred.shape} predictions vs {truth.shape} truths")
    if pred.size == 0:
        raise ValueError("empty input")
    if values is None:
        pv, tv = pred.astype(float), truth.astype(float)
    else:
        missing = set(map(int, pred)) | set(map(int, truth))
        missing -= set(values)
        if missing:
            raise ValueError(f"no value mapping for labels {sorted(missing)}")
        pv = np.array([values[int(x)] for x in pred])
        tv = np.array([values[int(x)] for x in truth])
    return float(np.mean(np.abs(pv - tv) <= k))


@dataclass(frozen=True)
class TTestResult:
    """Pooled-variance two-sample t-test, two-tailed, verdict from a's side."""

    t_stat: float
    df: float
    p_value: float
    verdict: str  # "win" | "tie" | "loss"


def t_test_two_sample(a, b, alpha: float = 0.05) -> TTestResult:
    """Two-sample t-test with pooled variance and df = n_a + n_b - 2.

    The two-tailed p-value comes from the regularized incomplete beta
    function.  Degenerate samples with zero pooled variance give a tie when
    the means agree and a win/loss with p = 0 otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    na, nb = a.size, b.size
    df = float(na + nb - 2)
    ma, mb = float(a.mean()), float(b.mean())
    sp2 = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / df
    if sp2 == 0.0:
        if ma == mb:
            return TTestResult(0.0, df, 1.0, "tie")
        t = np.inf if ma > mb else -np.inf
        return TTestResult(float(t), df, 0.0, "win" if ma > mb else "loss")
    t = (ma - mb) / np.sqrt(sp2 * (1.0 / na + 1.0 / nb))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    if p < alpha:
        verdict = "win" if ma > mb else "loss"
    else:
        verdict = "tie"
    return TTestResult(float(t), df, p, verdict)


@dataclass(frozen=True)
class ExperimentReport:
    """Per-fold accuracies with their mean and sample standard deviation."""

    algo: str
    config: dict
    folds: int
    seed: int
    per_fold_accuracy: tuple[float, ...]
    mean: float
    std: float
    traces: tuple[TrainTrace, ...] | None = None

    def __post_init__(self):
        accs = np.asarray(self.per_fold_accuracy)
        if abs(self.mean - accs.mean()) > 1e-12:
            raise ValueError("mean inconsistent with per-fold accuracies")
        if self.std < 0:
            raise ValueError("std must be nonnegative")

    @classmethod
    def from_folds(cls, algo, config, folds, seed, accs, traces=None) -> "ExperimentReport":
        accs = tuple(float(x) for x in accs)
        arr = np.asarray(accs)
        std = float(arr.std(ddof=1)) if len(accs) > 1 else 0.0
        return cls(algo, dict(config), folds, seed, accs, float(arr.mean()), std, traces)


def _fold_plan(d: PLDataset, folds: int, seed: int):
    """Master-seeded split plus one independent training seed per fold."""
    master = np.random.default_rng(seed)
    split_seed = int(master.integers(2**63 - 1))
    fold_seeds = [int(s) for s in master.integers(0, 2**63 - 1, size=folds)]
    return split_folds(d, folds, split_seed), fold_seeds


def _fit_and_predict(d_train: PLDataset, X_test, algo: str, params, fold_seed: int):
    if algo == "sure":
        cfg = replace(params, seed=fold_seed)
        model, _, trace = train(d_train, cfg)
        return predict(model, X_test), trace
    if algo == "plknn":
        return plknn_predict(d_train, X_test, params), None
    raise ValueError(f"unknown algorithm {algo!r}")


def cross_validate(
    d: PLDataset,
    algo: str,
    params,
    folds: int,
    seed: int,
    collect_traces: bool = False,
) -> ExperimentReport:
    """k-fold cross-validation; trains on candidate sets, scores against truth.

    Test instances are presented as bare feature rows; their candidate sets
    are never shown to the model.
    """
    if d.truth is None:
        raise ValueError("cross-validation requires ground truth for scoring")
    parts, fold_seeds = _fold_plan(d, folds, seed)
    accs, traces = [], []
    for (tr, te), fseed in zip(parts, fold_seeds):
        pred, trace = _fit_and_predict(d.subset(tr), d.features[te], algo, params, fseed)
        accs.append(accuracy(pred, d.truth[te]))
        if trace is not None:
            traces.append(trace)
    kept = tuple(traces) if collect_traces and traces else None
    return ExperimentReport.from_folds(algo, asdict(params), folds, seed, accs, kept)


@dataclass(frozen=True)
class GridSearchResult:
    lam: float
    beta: float
    entries: tuple[tuple[float, float, float], ...]  # (lam, beta, inner CV mean)


def grid_search(
    d_train: PLDataset,
    lam_grid=DEFAULT_GRID,
    beta_grid=DEFAULT_GRID,
    inner_folds: int = 5,
    seed: int = 0,
    base: TrainConfig = TrainConfig(),
) -> GridSearchResult:
    """Pick (lam, beta) by inner cross-validation mean accuracy on d_train.

    Every grid point sees the same folds.  Ties prefer the smaller lam, then
    the smaller beta; every evaluation is logged in `entries`.
    """
    lams = sorted(set(float(v) for v in lam_grid))
    betas = sorted(set(float(v) for v in beta_grid))
    if not lams or not betas:
        raise ValueError("grids must be nonempty")
    entries = []
    best = None
    for lam in lams:
        for beta in betas:
            cfg = replace(base, lam=lam, beta=beta)
            rep = cross_validate(d_train, "sure", cfg, inner_folds, seed)
            entries.append((lam, beta, rep.mean))
            if best is None or rep.mean > best[2]:
                best = (lam, beta, rep.mean)
    return GridSearchResult(best[0], best[1], tuple(entries))


def nested_cross_validate(
    d: PLDataset,
    lam_grid=DEFAULT_GRID,
    beta_grid=DEFAULT_GRID,
    folds: int = 10,
    inner_folds: int = 5,
    seed: int = 0,
    base: TrainConfig = TrainConfig(),
) -> ExperimentReport:
    """Full evaluation protocol: per outer fold, select (lam, beta) by inner
    cross-validation on the training split, refit, and score the held-out fold."""
    if d.truth is None:
        raise ValueError("cross-validation requires ground truth for scoring")
    parts, fold_seeds = _fold_plan(d, folds, seed)
    accs, chosen = [], []
    for (tr, te), fseed in zip(parts, fold_seeds):
        d_tr = d.subset(tr)
        gs = grid_search(d_tr, lam_grid, beta_grid, inner_folds, fseed, base)
        cfg = replace(base, lam=gs.lam, beta=gs.beta, seed=fseed)
        model, _, _ = train(d_tr, cfg)
        accs.append(accuracy(predict(model, d.features[te]), d.truth[te]))
        chosen.append({"lam": gs.lam, "beta": gs.beta})
    config = {
        "base": asdict(base),
        "lam_grid": [float(v) for v in sorted(set(map(float, lam_grid)))],
        "beta_grid": [float(v) for v in sorted(set(map(float, beta_grid)))],
        "inner_folds": inner_folds,
        "selected": chosen,
    }
    return ExperimentReport.from_folds("sure+grid", config, folds, seed, accs)


def make_blobs_dataset(
    m: int,
    classes: int = 3,
    n_features: int = 2,
    separation: float = 4.0,
    spread: float = 1.0,
    seed: int = 0,
) -> PLDataset:
    """Gaussian blobs with singleton candidate sets, for synthetic experiments.

    Class centers sit on a circle in the first two feature dimensions with
    nearest-center distance `separation`; rows are shuffled.
    """
    if classes < 2 or m < classes:
        raise ValueError("need at least two classes and one instance per class")
    rng = np.random.default_rng(seed)
    radius = separation / (2.0 * np.sin(np.pi / classes))
    angles = 2.0 * np.pi * np.arange(classes) / classes
    centers = np.zeros((classes, n_features))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, min(1, n_features - 1)] = radius * np.sin(angles)
    counts = [m // classes + (1 if c < m % classes else 0) for c in range(classes)]
    rows = []
    labels = []
    for c, cnt in enumerate(counts):
        rows.append(centers[c] + spread * rng.standard_normal((cnt, n_features)))
        labels.extend([c] * cnt)
    X = np.vstack(rows)
    truth = np.array(labels, dtype=np.int64)
    perm = rng.permutation(m)
    X, truth = X[perm], truth[perm]
    cands = np.zeros((m, classes), dtype=np.uint8)
    cands[np.arange(m), truth] = 1
    return PLDataset(X, cands, truth)


# ---------------------------------------------------------------------------
# report and label-file plumbing


def _trace_dict(trace: TrainTrace) -> dict:
    return {
        "delta_p": list(trace.delta_p),
        "iterations_run": trace.iterations_run,
        "converged": trace.converged,
    }


def report_to_json(report: ExperimentReport) -> str:
    payload = {
        "algo": report.algo,
        "config": report.config,
        "folds": report.folds,
        "seed": report.seed,
        "per_fold_accuracy": list(report.per_fold_accuracy),
        "mean": report.mean,
        "std": report.std,
    }
    if report.traces is not None:
        payload["traces"] = [_trace_dict(t) for t in report.traces]
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def report_from_json(text: str) -> ExperimentReport:
    payload = json.loads(text)
    traces = None
    if "traces" in payload:
        traces = tuple(
            TrainTrace(tuple(t["delta_p"]), t["iterations_run"], t["converged"])
            for t in payload["traces"]
        )
    return ExperimentReport(
        payload["algo"],
        payload["config"],
        payload["folds"],
        payload["seed"],
        tuple(payload["per_fold_accuracy"]),
        payload["mean"],
        payload["std"],
        traces,
    )


def write_labels(path, labels) -> None:
    """One 1-based label per line."""
    lines = [str(int(v) + 1) for v in np.asarray(labels)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_labels(path) -> np.ndarray:
    """Parse a label file back to 0-based labels."""
    out = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        v = int(raw)
        if v < 1:
            raise ValueError(f"label must be >= 1 at line {lineno}")
        out.append(v - 1)
    if not out:
        raise ValueError("empty label file")
    return np.array(out, dtype=np.int64)


def load_values_map(path) -> dict[int, float]:
    """Two-column text file '<1-based label> <value>' -> {0-based label: value}."""
    values: dict[int, float] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 2:
            raise ValueError(f"expected '<label> <value>' at line {lineno}")
        label = int(parts[0])
        if label < 1:
            raise ValueError(f"label must be >= 1 at line {lineno}")
        values[label - 1] = float(parts[1])
    if not values:
        raise ValueError("empty values file")
    return values
