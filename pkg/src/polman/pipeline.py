"""End-to-end measurement, mitigation and evaluation runs for one seed."""
from __future__ import annotations

import contextlib
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .community import estimate_k, kmeans_partition
from .embedding import EmbeddingMatrix, align, spectral_signed_embedding
from .evaluation import LabeledPairSet, evaluate, sample_nonedges, train_link_classifier
from .graph import build_graph, largest_connected_component, split_edges
from .mitigation import MitigationParams, mitigate
from .polarization import measure

logger = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class RunConfig:
    dataset: Optional[str] = None
    fmt: Optional[str] = None
    embeddings: Optional[str] = None
    eta: float = 0.1
    tau: float = 0.6
    d_max: int = 2
    gamma: float = 1.0
    seeds: tuple = (0, 1, 2, 3, 4)
    k_override: Optional[int] = None
    min_size: Optional[int] = None
    runs: int = 10
    top_n: int = 50
    min_community: int = 1000
    prune: Optional[bool] = None
    dim: int = 16
    split: tuple = (0.70, 0.15, 0.15)
    conflict_policy: str = "last-wins"
    num_snapshots: int = 10
    binning: str = "time"
    output: str = "polman-out"

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "split", tuple(float(s) for s in self.split))
        self.validate()

    def validate(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.k_override is not None and self.k_override < 1:
            raise ValueError("k_override must be >= 1")
        if self.min_size is not None and self.min_size < 1:
            raise ValueError("min_size must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def mitigation_params(self, seed: int) -> MitigationParams:
        return MitigationParams(self.eta, self.tau, self.d_max, self.gamma, seed,
                                self.top_n, self.min_community, self.prune)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d["split"] = list(self.split)
        return d


@dataclass
class SeedRun:
    seed: int
    graph: object = None
    H: Optional[EmbeddingMatrix] = None
    k: Optional[int] = None
    Zhat: object = None
    report: object = None
    partition: object = None
    augmented: object = None
    plan: object = None
    H_mitigated: Optional[EmbeddingMatrix] = None
    report_mitigated: object = None
    eval_baseline: object = None
    eval_mitigated: object = None
    extra: dict = field(default_factory=dict)


def embed(g, cfg: RunConfig, seed: int, external: Optional[EmbeddingMatrix] = None) -> EmbeddingMatrix:
    if external is not None:
        return external.restrict(g.node_list())
    return spectral_signed_embedding(g, min(cfg.dim, g.n - 1), seed)


def training_graph(records, cfg: RunConfig, seed: int):
    """Symmetrize, split and cut the training graph to its largest component."""
    with stage("build"):
        full = build_graph(records, cfg.conflict_policy)
    with stage("split"):
        split = split_edges(full.to_records(), cfg.split, seed, cfg.conflict_policy)
    with stage("lcc"):
        g = largest_connected_component(split.train)
    return full, split, g


def measure_graph(g, cfg: RunConfig, seed: int, external=None, k: Optional[int] = None):
    with stage("embed"):
        H = embed(g, cfg, seed, external)
    with stage("estimate_k"):
        if k is None:
            k = cfg.k_override if cfg.k_override is not None else estimate_k(g, cfg.runs, cfg.min_size)
        k = min(k, H.dim)
    with stage("align"):
        Zhat = align(H, k)
    with stage("measure"):
        report = measure(g, Zhat, cfg.eta)
    return H, k, Zhat, report


def run_seed(records, cfg: RunConfig, seed: int, *, do_mitigate: bool = False, do_eval: bool = False,
             external: Optional[EmbeddingMatrix] = None,
             external_mitigated: Optional[EmbeddingMatrix] = None) -> SeedRun:
    full, split, g = training_graph(records, cfg, seed)
    run = SeedRun(seed, graph=g)
    run.H, run.k, run.Zhat, run.report = measure_graph(g, cfg, seed, external)
    if do_mitigate or do_eval:
        with stage("partition"):
            run.partition = kmeans_partition(run.H, run.k, seed)
        with stage("mitigate"):
            run.augmented, run.plan = mitigate(g, run.H, run.Zhat, run.partition, cfg.mitigation_params(seed))
        if external is not None and external_mitigated is None and run.plan.added_edges:
            raise StageError("re-embed", ValueError(
                "external embeddings given for the original graph only; supply embeddings "
                "for the augmented graph or use the built-in embedder"))
        run.H_mitigated, _, _, run.report_mitigated = measure_graph(
            run.augmented, cfg, seed, external_mitigated if external is not None else None, k=run.k)
    if do_eval:
        with stage("evaluate"):
            run.eval_baseline, run.eval_mitigated = _evaluate(full, split, g, run, seed)
    return run


def _evaluate(full, split, g, run: SeedRun, seed: int):
    nodes = g.nodes
    train_edges = list(g.edges())
    test_edges = sorted({(r.pair[0], r.pair[1], r.sign) for r in split.test
                         if r.u in nodes and r.v in nodes})
    rng = np.random.default_rng([seed, 7])
    nonedges = sample_nonedges(full, len(train_edges) + len(test_edges), rng, nodes=nodes)
    train = LabeledPairSet.from_parts(train_edges, nonedges[:len(train_edges)])
    test = LabeledPairSet.from_parts(test_edges, nonedges[len(train_edges):])
    clf = train_link_classifier(train, run.H)
    base = evaluate(clf, test, run.H)
    clf2 = train_link_classifier(train, run.H_mitigated)
    mitigated = evaluate(clf2, test, run.H_mitigated, baseline=base)
    return base, mitigated


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("POLMAN_THREADS", "1")))
    except ValueError:
        return 1


def run_seeds(fn, seeds) -> list:
    """Apply ``fn`` to each seed, concurrently when POLMAN_THREADS > 1; order preserved."""
    workers = min(thread_count(), len(seeds))
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


def mean_std(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
