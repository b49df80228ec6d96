"""Partial-label datasets, the PLD text format, and controlled candidate corruption.

A partial-label (PL) example is a feature vector paired with a set of candidate
labels, exactly one of which is the hidden ground truth.  In-memory label
indices are 0-based; the PLD file format uses 1-based indices.

PLD format (UTF-8, LF line endings)::

    pld 1
    <m> <n> <l>
    <f_1> ... <f_n> | <c_1>,<c_2>,...,<c_k>[ | <t>]

where the ``f_j`` are decimal floats, the ``c_j`` are 1-based candidate label
indices in strictly ascending order and the optional ``t`` is the 1-based
ground-truth label (present for every line or for none).  Floats are written
with shortest round-trip precision, so save followed by load is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PLDataset",
    "SyntheticSpec",
    "PldFormatError",
    "load_dataset",
    "save_dataset",
    "corrupt",
    "split_folds",
]

PLD_MAGIC = "pld 1"


class PldFormatError(ValueError):
    """A PLD file violates the format; the message names the offending line."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)
        self.line = line


def _locked(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PLDataset:
    """Instances plus candidate-label sets, optionally with concealed ground truth.

    features:   (m, n) float64 matrix of feature values.
    candidates: (m, l) 0/1 matrix; candidates[i, j] == 1 iff label j is a
                candidate for instance i.  Every row has at least one 1.
    truth:      optional (m,) array of 0-based labels, each one a candidate
                of its own row.

    Instances are immutable after construction and safe to share across
    threads; the backing arrays are copied and marked read-only.
    """

    features: np.ndarray
    candidates: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64)
        cands = np.array(self.candidates)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ValueError("features must be a non-empty 2-D matrix")
        if not np.isfinite(feats).all():
            raise ValueError("features must be finite")
        if cands.ndim != 2 or cands.shape[0] != feats.shape[0]:
            raise ValueError(
                f"dimension mismatch: {feats.shape[0]} feature rows vs "
                f"{cands.shape[0] if cands.ndim == 2 else '?'} candidate rows"
            )
        if cands.shape[1] < 1:
            raise ValueError("candidate matrix needs at least one label column")
        if not np.isin(cands, (0, 1)).all():
            raise ValueError("candidate matrix entries must be 0 or 1")
        cands = cands.astype(np.uint8)
        row_sizes = cands.sum(axis=1)
        if (row_sizes == 0).any():
            bad = int(np.flatnonzero(row_sizes == 0)[0])
            raise ValueError(f"empty candidate set in row {bad}")
        truth = self.truth
        if truth is not None:
            truth = np.array(truth, dtype=np.int64)
            if truth.shape != (feats.shape[0],):
                raise ValueError("truth must have one label per instance")
            if truth.min() < 0 or truth.max() >= cands.shape[1]:
                raise ValueError("truth labels out of range")
            if not cands[np.arange(len(truth)), truth].all():
                bad = int(np.flatnonzero(~cands[np.arange(len(truth)), truth].astype(bool))[0])
                raise ValueError(f"truth label outside candidate set in row {bad}")
            truth = _locked(truth)
        object.__setattr__(self, "features", _locked(feats))
        object.__setattr__(self, "candidates", _locked(cands))
        object.__setattr__(self, "truth", truth)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def l(self) -> int:
        return self.candidates.shape[1]

    def subset(self, indices) -> "PLDataset":
        """New dataset restricted to the given instance indices (order kept)."""
        idx = np.asarray(indices, dtype=np.int64)
        truth = None if self.truth is None else self.truth[idx]
        return PLDataset(self.features[idx], self.candidates[idx], truth)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the controlled corruption protocol.

    p:       proportion of instances turned into PL examples.
    r:       number of false positive labels added per PL example
             (random mode; coupled mode always adds exactly one).
    epsilon: probability that the designated coupled label is the one added
             (coupled mode only).
    mode:    "random" or "coupled".
    seed:    64-bit seed; identical seeds give byte-identical outputs.
    """

    p: float
    r: int = 1
    epsilon: float = 0.0
    mode: str = "random"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError("r must be a positive integer")
        if self.mode not in ("random", "coupled"):
            raise ValueError(f"unknown mode {self.mode!r}")


def corrupt(clean: PLDataset, spec: SyntheticSpec) -> PLDataset:
    """Conceal ground truth inside candidate sets following the (p, r, epsilon) protocol.

    The input must be fully supervised: truth present and every candidate set
    the singleton of its truth label.  round(p * m) instances are selected
    uniformly without replacement.  In random mode each selected instance
    receives r distinct false positive labels drawn uniformly from the l - 1
    non-truth labels.  In coupled mode each selected instance receives exactly
    one extra label: with probability epsilon the designated coupled label of
    its class (class c couples to class (c + 1) mod l), otherwise one of the
    remaining l - 2 labels uniformly at random.  Truth is preserved unchanged.
    """
    if clean.truth is None:
        raise ValueError("corrupt requires a dataset with ground truth")
    if (clean.candidates.sum(axis=1) != 1).any():
        raise ValueError("corrupt requires singleton candidate sets (fully supervised input)")
    m, l = clean.m, clean.l
    if spec.mode == "random" and spec.r > l - 1:
        raise ValueError(f"r={spec.r} exceeds the {l - 1} available non-truth labels")
    if spec.mode == "coupled" and l < 3:
        raise ValueError("coupled mode needs at least 3 labels")

    rng = np.random.default_rng(spec.seed)
    n_pl = int(round(spec.p * m))
    selected = rng.choice(m, size=n_pl, replace=False)

    cands = np.array(clean.candidates)
    truth = clean.truth
    all_labels = np.arange(l)
    if spec.mode == "random":
        for i in selected:
            pool = all_labels[all_labels != truth[i]]
            extra = rng.choice(pool, size=spec.r, replace=False)
            cands[i, extra] = 1
    else:
        for i in selected:
            coupled = (truth[i] + 1) % l
            if rng.random() < spec.epsilon:
                extra = coupled
            else:
                pool = all_labels[(all_labels != truth[i]) & (all_labels != coupled)]
                extra = rng.choice(pool)
            cands[i, extra] = 1
    return PLDataset(clean.features, cands, truth)


def split_folds(d: PLDataset, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic k-fold partition; returns (train_idx, test_idx) pairs.

    Test folds are disjoint, cover all instances, and differ in size by at
    most one.  When ground truth is available the assignment is stratified:
    per-class index blocks are shuffled and dealt round-robin, which keeps
    every class spread evenly across folds.
    """
    m = d.m
    if k < 2:
        raise ValueError("fold count must be at least 2")
    if k > m:
        raise ValueError(f"fold count {k} exceeds {m} instances")
    rng = np.random.default_rng(seed)
    if d.truth is not None:
        blocks = [rng.permutation(np.flatnonzero(d.truth == lab)) for lab in np.unique(d.truth)]
        order = np.concatenate(blocks)
    else:
        order = rng.permutation(m)
    fold_of = np.arange(m) % k
    out = []
    for f in range(k):
        test = np.sort(order[fold_of == f])
        train = np.sort(order[fold_of != f])
        out.append((train, test))
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def save_dataset(d: PLDataset, path) -> None:
    """Write the dataset in PLD format; load_dataset inverts this bit-exactly."""
    lines = [PLD_MAGIC, f"{d.m} {d.n} {d.l}"]
    has_truth = d.truth is not None
    for i in range(d.m):
        feats = " ".join(_fmt(v) for v in d.features[i])
        cands = ",".join(str(j + 1) for j in np.flatnonzero(d.candidates[i]))
        line = f"{feats} | {cands}"
        if has_truth:
            line += f" | {d.truth[i] + 1}"
        lines.append(line)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_dataset(path) -> PLDataset:
    """Parse a PLD file; malformed input raises PldFormatError naming the line."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != PLD_MAGIC:
        raise PldFormatError(f"malformed header: expected {PLD_MAGIC!r}", line=1)
    if len(lines) < 2:
        raise PldFormatError("malformed header: missing dimension line", line=2)
    dims = lines[1].split()
    if len(dims) != 3:
        raise PldFormatError("malformed header: expected '<m> <n> <l>'", line=2)
    try:
        m, n, l = (int(tok) for tok in dims)
    except ValueError:
        raise PldFormatError("malformed header: dimensions must be integers", line=2) from None
    if m < 1 or n < 1 or l < 1:
        raise PldFormatError("malformed header: dimensions must be positive", line=2)
    if len(lines) - 2 != m:
        raise PldFormatError(
            f"dimension mismatch: header declares {m} rows, file has {len(lines) - 2}", line=2
        )

    features = np.empty((m, n), dtype=np.float64)
    candidates = np.zeros((m, l), dtype=np.uint8)
    truth_vals: list[int] = []
    has_truth: bool | None = None
    for i in range(m):
        lineno = i + 3
        parts = [s.strip() for s in lines[i + 2].split("|")]
        if len(parts) not in (2, 3):
            raise PldFormatError(
                "malformed record: expected '<features> | <candidates> [| <truth>]'", line=lineno
            )
        row_truth = len(parts) == 3
        if has_truth is None:
            has_truth = row_truth
        elif has_truth != row_truth:
            raise PldFormatError("inconsistent truth column", line=lineno)

        feat_tokens = parts[0].split()
        if len(feat_tokens) != n:
            raise PldFormatError(
                f"dimension mismatch: expected {n} features, found {len(feat_tokens)}", line=lineno
            )
        try:
            features[i] = [float(tok) for tok in feat_tokens]
        except ValueError:
            raise PldFormatError("invalid feature value", line=lineno) from None

        if parts[1] == "":
            raise PldFormatError("empty candidate set", line=lineno)
        try:
            cand_idx = [int(tok) for tok in parts[1].split(",")]
        except ValueError:
            raise PldFormatError("invalid candidate index", line=lineno) from None
        prev = 0
        for c in cand_idx:
            if not 1 <= c <= l:
                raise PldFormatError(f"candidate index {c} out of range [1, {l}]", line=lineno)
            if c <= prev:
                raise PldFormatError("candidates not in strictly ascending order", line=lineno)
            prev = c
            candidates[i, c - 1] = 1

        if row_truth:
            try:
                t = int(parts[2])
            except ValueError:
                raise PldFormatError("invalid truth label", line=lineno) from None
            if not 1 <= t <= l:
                raise PldFormatError(f"truth label {t} out of range [1, {l}]", line=lineno)
            if candidates[i, t - 1] != 1:
                raise PldFormatError(f"truth label {t} outside candidate set", line=lineno)
            truth_vals.append(t - 1)

    truth = np.array(truth_vals, dtype=np.int64) if has_truth else None
    return PLDataset(features, candidates, truth)
