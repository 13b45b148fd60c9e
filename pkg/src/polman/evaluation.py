"""Signed link prediction probe and temporal polarization curves."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .community import CommunityError, estimate_k
from .embedding import EmbeddingError, EmbeddingMatrix, align, spectral_signed_embedding
from .graph import GraphError, SignedGraph, SnapshotSequence, canonical_pair, largest_connected_component
from .polarization import measure
from .spectral import SolverConfig

logger = logging.getLogger(__name__)

CLASSES = ("positive", "negative", "nonedge")


class EvaluationError(ValueError):
    pass


@dataclass
class LabeledPairSet:
    pairs: list = field(default_factory=list)  # (u, v, label)

    def __post_init__(self):
        seen = {}
        for u, v, lab in self.pairs:
            if lab not in CLASSES:
                raise EvaluationError(f"unknown label {lab!r}")
            p = canonical_pair(u, v)
            if p in seen and seen[p] != lab:
                raise EvaluationError(f"pair {p} carries two labels")
            seen[p] = lab

    @property
    def class_counts(self) -> dict:
        counts = {c: 0 for c in CLASSES}
        for _, _, lab in self.pairs:
            counts[lab] += 1
        return counts

    def __len__(self):
        return len(self.pairs)

    @classmethod
    def from_parts(cls, signed_edges, nonedges) -> "LabeledPairSet":
        pairs = [(u, v, "positive" if s > 0 else "negative") for u, v, s in signed_edges]
        pairs += [(u, v, "nonedge") for u, v in nonedges]
        return cls(pairs)


def sample_nonedges(g: SignedGraph, count: int, seed=0, nodes=None, exclude=()) -> list:
    """Uniformly sample ``count`` distinct unconnected node pairs by rejection."""
    nodes = sorted(g.nodes if nodes is None else nodes)
    n = len(nodes)
    node_set = set(nodes)
    present = sum(1 for u, v in g.pos_edges | g.neg_edges if u in node_set and v in node_set)
    excluded = {canonical_pair(u, v) for u, v in exclude}
    available = n * (n - 1) // 2 - present - len(excluded)
    if count > available:
        raise EvaluationError(f"requested {count} non-edges but at most {max(available, 0)} exist")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    taken = set()
    out = []
    while len(out) < count:
        a, b = rng.integers(n, size=2)
        if a == b:
            continue
        p = canonical_pair(nodes[a], nodes[b])
        if p in taken or p in excluded or g.has_edge(*p):
            continue
        taken.add(p)
        out.append(p)
    return out


def edge_features(H: EmbeddingMatrix, u, v) -> np.ndarray:
    """Concatenated embeddings ``h_u || h_v``."""
    rows = H.rows([u, v])
    return np.concatenate([rows[0], rows[1]])


def _features(H: EmbeddingMatrix, pairs) -> np.ndarray:
    idx = {u: i for i, u in enumerate(H.node_order)}
    try:
        a = [idx[u] for u, _, *_ in pairs]
        b = [idx[v] for _, v, *_ in pairs]
    except KeyError as exc:
        raise EmbeddingError(f"node {exc.args[0]!r} has no embedding") from None
    return np.hstack([H.values[a], H.values[b]])


def _softmax(S):
    S = S - S.max(axis=1, keepdims=True)
    E = np.exp(S)
    return E / E.sum(axis=1, keepdims=True)


@dataclass
class LinkClassifier:
    """Multinomial logistic regression on standardized pair features."""

    weights: np.ndarray
    bias: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    symmetric: bool = True

    def _proba(self, X):
        return _softmax(((X - self.mean) / self.std) @ self.weights + self.bias)

    def predict_proba(self, H: EmbeddingMatrix, pairs) -> np.ndarray:
        P = self._proba(_features(H, pairs))
        if self.symmetric:
            swapped = [(v, u) for u, v, *_ in pairs]
            P = (P + self._proba(_features(H, swapped))) / 2
        return P

    def predict(self, H: EmbeddingMatrix, pairs) -> np.ndarray:
        return self.predict_proba(H, pairs).argmax(axis=1)


def train_link_classifier(train: LabeledPairSet, H: EmbeddingMatrix, l2: float = 1e-4,
                          epochs: int = 500, lr: float = 0.5, symmetric: bool = True) -> LinkClassifier:
    """Full-batch gradient descent from zero weights."""
    counts = train.class_counts
    missing = [c for c, n in counts.items() if n == 0]
    if missing:
        raise EvaluationError(f"training set lacks classes {missing}")
    X = _features(H, train.pairs)
    y = np.array([CLASSES.index(lab) for _, _, lab in train.pairs])
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Xs = (X - mean) / std
    n, f = Xs.shape
    Y = np.eye(len(CLASSES))[y]
    W = np.zeros((f, len(CLASSES)))
    b = np.zeros(len(CLASSES))
    for _ in range(epochs):
        P = _softmax(Xs @ W + b)
        G = (P - Y) / n
        W -= lr * (Xs.T @ G + l2 * W)
        b -= lr * G.sum(axis=0)
    return LinkClassifier(W, b, mean, std, symmetric)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_f1: float
    per_class_f1: tuple
    n: int
    deltas: Optional[dict] = None

    def to_dict(self) -> dict:
        d = {"accuracy": self.accuracy, "macro_f1": self.macro_f1,
             "per_class_f1": dict(zip(CLASSES, self.per_class_f1)), "n": self.n}
        if self.deltas is not None:
            d["deltas_pct"] = self.deltas
        return d


def delta_pct(new: float, base: float) -> float:
    """Relative change in percent."""
    if base == 0:
        return 0.0 if new == 0 else float("inf")
    return 100.0 * (new - base) / base


def classification_report(y_true, y_pred, num_classes: int = 3) -> EvalReport:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0:
        raise EvaluationError("empty test set")
    f1s = []
    for c in range(num_classes):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        f1s.append(float(2 * tp / denom) if denom else 0.0)
    acc = float(np.mean(y_true == y_pred))
    return EvalReport(acc, float(np.mean(f1s)), tuple(f1s), int(len(y_true)))


def evaluate(clf: LinkClassifier, test: LabeledPairSet, H: EmbeddingMatrix,
             baseline: Optional[EvalReport] = None) -> EvalReport:
    if len(test) == 0:
        raise EvaluationError("empty test set")
    y = [CLASSES.index(lab) for _, _, lab in test.pairs]
    rep = classification_report(y, clf.predict(H, test.pairs))
    if baseline is not None:
        rep = EvalReport(rep.accuracy, rep.macro_f1, rep.per_class_f1, rep.n, {
            "accuracy": delta_pct(rep.accuracy, baseline.accuracy),
            "macro_f1": delta_pct(rep.macro_f1, baseline.macro_f1)})
    return rep


def builtin_embedder(dim: int = 16) -> Callable:
    def embed(g: SignedGraph, seed: int) -> EmbeddingMatrix:
        return spectral_signed_embedding(g, min(dim, g.n - 1), seed)
    return embed


def temporal_polarization_curve(snapshots: SnapshotSequence, eta: float = 0.1,
                                embed: Optional[Callable] = None, seed: int = 0,
                                min_size: Optional[int] = None, runs: int = 10,
                                k_override: Optional[int] = None,
                                config: SolverConfig = SolverConfig()) -> list:
    """Polarization of each cumulative snapshot as ``[(cut_time, P), ...]``.

    Each snapshot is cut to its largest component, embedded with ``embed``
    (``(graph, seed) -> EmbeddingMatrix``; built-in spectral embedder by
    default), its ``k`` estimated, aligned and measured. Snapshots too small
    for these steps are skipped with a warning.
    """
    embed = embed or builtin_embedder()
    series = []
    for t, snap in zip(snapshots.cut_times, snapshots.snapshots):
        try:
            g = largest_connected_component(snap)
            H = embed(g, seed)
            k = k_override if k_override is not None else estimate_k(g, runs, min_size)
            Zhat = align(H.restrict(g.node_list()), min(k, H.dim))
            series.append((t, measure(g, Zhat, eta, config).score))
        except (CommunityError, EmbeddingError, GraphError) as exc:
            logger.warning("skipping snapshot at t=%s: %s", t, exc)
    return series
