"""Signed graph data model, edge-list ingestion, splits and temporal snapshots."""
from __future__ import annotations

import io
import logging
import math
import warnings
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Optional, Sequence, TextIO, Union

import numpy as np

logger = logging.getLogger(__name__)

NodeId = Hashable
Pair = tuple

CONFLICT_POLICIES = ("last-wins", "majority", "drop")


class GraphError(ValueError):
    """Raised for malformed graph input or violated graph preconditions."""


class ParseError(GraphError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SelfLoopWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EdgeRecord:
    u: NodeId
    v: NodeId
    sign: int
    weight: Optional[float] = None
    timestamp: Optional[int] = None

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise GraphError(f"edge sign must be +1 or -1, got {self.sign!r}")
        if self.u == self.v:
            raise GraphError(f"self-loop on node {self.u!r}")
        if self.weight is not None and self.weight < 0:
            raise GraphError("edge weight must be nonnegative")

    @property
    def pair(self) -> Pair:
        return canonical_pair(self.u, self.v)


def canonical_pair(u: NodeId, v: NodeId) -> Pair:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SignedGraph:
    """Undirected signed graph with disjoint positive and negative edge sets.

    Edges are stored as canonical ``(u, v)`` tuples with ``u < v``.
    """

    nodes: frozenset
    pos_edges: frozenset
    neg_edges: frozenset
    _adj: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        pos = frozenset(canonical_pair(u, v) for u, v in self.pos_edges)
        neg = frozenset(canonical_pair(u, v) for u, v in self.neg_edges)
        object.__setattr__(self, "pos_edges", pos)
        object.__setattr__(self, "neg_edges", neg)
        if pos & neg:
            raise GraphError("a node pair cannot carry both signs")
        for u, v in pos | neg:
            if u == v:
                raise GraphError(f"self-loop on node {u!r}")
            if u not in self.nodes or v not in self.nodes:
                raise GraphError(f"edge ({u!r}, {v!r}) has an endpoint outside the node set")

    @classmethod
    def from_edges(cls, pos: Iterable[Pair] = (), neg: Iterable[Pair] = (),
                   nodes: Iterable[NodeId] = ()) -> "SignedGraph":
        pos = [canonical_pair(u, v) for u, v in pos]
        neg = [canonical_pair(u, v) for u, v in neg]
        all_nodes = set(nodes)
        for u, v in pos + neg:
            all_nodes.update((u, v))
        return cls(frozenset(all_nodes), frozenset(pos), frozenset(neg))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.pos_edges) + len(self.neg_edges)

    def node_list(self) -> list:
        return sorted(self.nodes)

    def edges(self) -> Iterator[tuple]:
        """Yield ``(u, v, sign)`` in canonical sorted order."""
        signed = [(u, v, 1) for u, v in self.pos_edges] + [(u, v, -1) for u, v in self.neg_edges]
        yield from sorted(signed)

    def sign(self, u: NodeId, v: NodeId) -> int:
        """Return +1, -1, or 0 when the pair is unconnected."""
        p = canonical_pair(u, v)
        if p in self.pos_edges:
            return 1
        if p in self.neg_edges:
            return -1
        return 0

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        return self.sign(u, v) != 0

    @property
    def adjacency(self) -> dict:
        """Sign-ignoring neighbour sets, built lazily."""
        if self._adj is None:
            adj = {u: set() for u in self.nodes}
            for u, v in self.pos_edges | self.neg_edges:
                adj[u].add(v)
                adj[v].add(u)
            object.__setattr__(self, "_adj", adj)
        return self._adj

    def subgraph(self, nodes: Iterable[NodeId]) -> "SignedGraph":
        keep = frozenset(nodes) & self.nodes
        pos = [e for e in self.pos_edges if e[0] in keep and e[1] in keep]
        neg = [e for e in self.neg_edges if e[0] in keep and e[1] in keep]
        return SignedGraph(keep, frozenset(pos), frozenset(neg))

    def with_positive_edges(self, extra: Iterable[Pair]) -> "SignedGraph":
        extra = {canonical_pair(u, v) for u, v in extra}
        clash = extra & (self.pos_edges | self.neg_edges)
        if clash:
            raise GraphError(f"{len(clash)} added edge(s) already exist in the graph")
        return SignedGraph(self.nodes, self.pos_edges | extra, self.neg_edges)

    def to_records(self) -> list:
        return [EdgeRecord(u, v, s) for u, v, s in self.edges()]

    def components(self) -> list:
        """Connected components (signs ignored), largest first, ties by smallest node id."""
        adj = self.adjacency
        seen = set()
        comps = []
        for start in self.node_list():
            if start in seen:
                continue
            comp = [start]
            seen.add(start)
            queue = deque([start])
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        comp.append(w)
                        queue.append(w)
            comps.append(comp)
        comps.sort(key=lambda c: (-len(c), min(c)))
        return comps

    def is_connected(self) -> bool:
        return self.n > 0 and len(self.components()) == 1


def _parse_node(token: str) -> NodeId:
    try:
        return int(token)
    except ValueError:
        return token


def load_edge_list(source: Union[TextIO, bytes, str], fmt: Optional[str] = None) -> list:
    """Parse a signed edge list into :class:`EdgeRecord` objects in file order.

    Rows are ``src dst sign [timestamp]``; the sign column may hold any
    numeric rating, whose sign is taken (zero ratings are dropped). Lines
    starting with ``#`` are ignored. Self-loops are dropped with a
    :class:`SelfLoopWarning`.
    """
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    if fmt not in (None, "tsv", "csv"):
        raise GraphError(f"unknown edge-list format {fmt!r}")
    delim = {"tsv": "\t", "csv": ","}.get(fmt)

    records = []
    self_loops = zero_ratings = 0
    saw_row = False
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        saw_row = True
        if delim is None:
            parts = line.split("," if "," in line else None)
        else:
            parts = line.split(delim)
        parts = [p.strip() for p in parts]
        if len(parts) < 3:
            raise ParseError(f"expected at least 3 fields, got {len(parts)}", lineno)
        u, v = _parse_node(parts[0]), _parse_node(parts[1])
        try:
            rating = float(parts[2])
        except ValueError:
            raise ParseError(f"non-numeric sign {parts[2]!r}", lineno) from None
        if not math.isfinite(rating):
            raise ParseError(f"non-finite sign {parts[2]!r}", lineno)
        ts = None
        if len(parts) >= 4 and parts[3]:
            try:
                ts = int(float(parts[3]))
            except ValueError:
                raise ParseError(f"non-numeric timestamp {parts[3]!r}", lineno) from None
        if type(u) is not type(v):
            raise ParseError("mixed integer and string node ids", lineno)
        if u == v:
            self_loops += 1
            continue
        if rating == 0:
            zero_ratings += 1
            continue
        records.append(EdgeRecord(u, v, 1 if rating > 0 else -1, timestamp=ts))

    if not saw_row:
        raise ParseError("empty edge list")
    if self_loops:
        warnings.warn(f"dropped {self_loops} self-loop(s)", SelfLoopWarning, stacklevel=2)
    if zero_ratings:
        logger.info("dropped %d zero-rated edge(s)", zero_ratings)
    return records


def read_edge_list(path, fmt: Optional[str] = None) -> list:
    if fmt is None and str(path).endswith(".csv"):
        fmt = "csv"
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh, fmt)


def write_edge_list(g: SignedGraph, fh: TextIO, header: Optional[str] = None) -> None:
    if header:
        fh.write(f"# {header}\n")
    for u, v, s in g.edges():
        fh.write(f"{u}\t{v}\t{s}\n")


def build_graph(records: Sequence[EdgeRecord], conflict_policy: str = "last-wins") -> SignedGraph:
    """Symmetrize records into a canonical :class:`SignedGraph`.

    ``conflict_policy`` resolves pairs seen with both signs: ``last-wins``
    keeps the sign of the final record, ``majority`` the more frequent sign
    (ties go to the last record), ``drop`` removes the pair. Nodes of
    dropped pairs stay in the node set.
    """
    if not records:
        raise GraphError("cannot build a graph from an empty record list")
    if conflict_policy not in CONFLICT_POLICIES:
        raise GraphError(f"unknown conflict policy {conflict_policy!r}")

    last = {}
    counts = defaultdict(Counter)
    nodes = set()
    for r in records:
        p = r.pair
        nodes.update(p)
        last[p] = r.sign
        counts[p][r.sign] += 1

    pos, neg = [], []
    for p, s in last.items():
        c = counts[p]
        if len(c) > 1:
            if conflict_policy == "drop":
                continue
            if conflict_policy == "majority" and c[1] != c[-1]:
                s = 1 if c[1] > c[-1] else -1
        (pos if s > 0 else neg).append(p)
    return SignedGraph(frozenset(nodes), frozenset(pos), frozenset(neg))


def largest_connected_component(g: SignedGraph) -> SignedGraph:
    if g.n == 0:
        raise GraphError("graph is empty")
    comps = g.components()
    if len(comps) == 1:
        return g
    return g.subgraph(comps[0])


@dataclass(frozen=True)
class DataSplit:
    train: SignedGraph
    train_records: tuple
    val: tuple
    test: tuple
    seed: int


def split_edges(records: Sequence[EdgeRecord], ratios=(0.70, 0.15, 0.15), seed: int = 0,
                conflict_policy: str = "last-wins") -> DataSplit:
    """Randomly partition edges into train/val/test.

    Validation and test sizes are rounded down; the remainder goes to train.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise GraphError(f"split ratios must be three nonnegative values summing to 1, got {ratios}")
    n = len(records)
    if n < 10:
        raise GraphError(f"need at least 10 edges to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_val = int(math.floor(n * ratios[1] + 1e-9))
    n_test = int(math.floor(n * ratios[2] + 1e-9))
    n_train = n - n_val - n_test
    shuffled = [records[i] for i in perm]
    train = tuple(shuffled[:n_train])
    val = tuple(shuffled[n_train:n_train + n_val])
    test = tuple(shuffled[n_train + n_val:])
    return DataSplit(build_graph(train, conflict_policy), train, val, test, seed)


@dataclass(frozen=True)
class SnapshotSequence:
    snapshots: tuple
    cut_times: tuple

    def __len__(self):
        return len(self.snapshots)


def cumulative_snapshots(records: Sequence[EdgeRecord], num_snapshots: int, binning: str = "time",
                         conflict_policy: str = "last-wins") -> SnapshotSequence:
    """Cumulative graphs at ``num_snapshots`` cut times.

    ``binning="time"`` places cuts evenly over the timestamp range;
    ``binning="count"`` places them at quantiles of the timestamps, so each
    bin receives roughly the same number of edges.
    """
    if num_snapshots < 2:
        raise GraphError("need at least 2 snapshots")
    if not records:
        raise GraphError("no records")
    if any(r.timestamp is None for r in records):
        raise GraphError("all records must carry timestamps for snapshotting")
    ts = np.array([r.timestamp for r in records], dtype=float)
    fracs = np.arange(1, num_snapshots + 1) / num_snapshots
    if binning == "time":
        cuts = ts.min() + fracs * (ts.max() - ts.min())
    elif binning == "count":
        cuts = np.quantile(ts, fracs)
    else:
        raise GraphError(f"unknown binning {binning!r}")
    cuts[-1] = ts.max()

    order = np.argsort(ts, kind="stable")
    snaps, times = [], []
    for cut in cuts:
        chosen = [records[i] for i in order if ts[i] <= cut]
        if not chosen:
            continue
        snaps.append(build_graph(chosen, conflict_policy))
        times.append(float(cut))
    return SnapshotSequence(tuple(snaps), tuple(times))
