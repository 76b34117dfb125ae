"""Core hypergraph container, file I/O, dataset statistics and clique expansion.

A hypergraph is a node count plus a list of hyperedges, each hyperedge a
set of node ids.  Everything downstream (homophily, sampling, rewiring,
training) consumes the validated, immutable structure defined here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np


class HypergraphError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(HypergraphError):
    """A file could not be parsed under the declared format."""


class ValidationError(HypergraphError):
    """Structurally invalid data (bad node id, duplicate member, empty edge)."""


class Hypergraph:
    """Immutable hypergraph: ``num_nodes`` and an ordered list of hyperedges.

    Hyperedges are normalised to sorted, duplicate-free tuples of node ids in
    ``[0, num_nodes)``.  Hyperedge order is significant and preserved: the
    rewiring strategies rely on stable indices.  Node membership lists
    (``memberships[v]`` = indices of hyperedges containing ``v``) are derived
    once and cached; the structure is safe for concurrent reads.
    """

    __slots__ = ("num_nodes", "hyperedges", "_memberships")

    def __init__(self, num_nodes: int, hyperedges: Sequence[Sequence[int]]):
        if num_nodes < 0:
            raise ValidationError(f"num_nodes must be >= 0, got {num_nodes}")
        normalized = []
        for idx, edge in enumerate(hyperedges):
            members = sorted(int(v) for v in edge)
            if not members:
                raise ValidationError(f"hyperedge {idx} is empty")
            if members[0] < 0 or members[-1] >= num_nodes:
                bad = members[0] if members[0] < 0 else members[-1]
                raise ValidationError(
                    f"hyperedge {idx} contains node id {bad} outside [0, {num_nodes})"
                )
            for a, b in zip(members, members[1:]):
                if a == b:
                    raise ValidationError(f"hyperedge {idx} contains duplicate node id {a}")
            normalized.append(tuple(members))
        self.num_nodes = int(num_nodes)
        self.hyperedges: tuple[tuple[int, ...], ...] = tuple(normalized)
        self._memberships: Optional[tuple[tuple[int, ...], ...]] = None

    @property
    def num_edges(self) -> int:
        return len(self.hyperedges)

    @property
    def memberships(self) -> tuple[tuple[int, ...], ...]:
        """For each node, the sorted indices of hyperedges containing it."""
        if self._memberships is None:
            buckets: list[list[int]] = [[] for _ in range(self.num_nodes)]
            for eid, edge in enumerate(self.hyperedges):
                for v in edge:
                    buckets[v].append(eid)
            self._memberships = tuple(tuple(b) for b in buckets)
        return self._memberships

    def degree(self, v: int) -> int:
        return len(self.memberships[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(m) for m in self.memberships], dtype=np.int64)

    def edge_sizes(self) -> np.ndarray:
        return np.array([len(e) for e in self.hyperedges], dtype=np.int64)

    def sum_of_sizes(self) -> int:
        return int(self.edge_sizes().sum()) if self.hyperedges else 0

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Hypergraph)
            and self.num_nodes == other.num_nodes
            and self.hyperedges == other.hyperedges
        )

    def __hash__(self) -> int:
        return hash((self.num_nodes, self.hyperedges))

    def __repr__(self) -> str:
        return f"Hypergraph(n={self.num_nodes}, m={self.num_edges})"


class LabelAssignment:
    """Per-node class ids in ``[0, num_classes)``."""

    __slots__ = ("labels", "num_classes")

    def __init__(self, labels: Sequence[int], num_classes: Optional[int] = None):
        labels = tuple(int(y) for y in labels)
        if num_classes is None:
            num_classes = (max(labels) + 1) if labels else 1
        if num_classes < 1:
            raise ValidationError(f"num_classes must be >= 1, got {num_classes}")
        for v, y in enumerate(labels):
            if y < 0 or y >= num_classes:
                raise ValidationError(f"label {y} of node {v} outside [0, {num_classes})")
        self.labels = labels
        self.num_classes = int(num_classes)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, v: int) -> int:
        return self.labels[v]

    def as_array(self) -> np.ndarray:
        return np.array(self.labels, dtype=np.int64)

    def class_counts(self) -> np.ndarray:
        counts = np.zeros(self.num_classes, dtype=np.int64)
        for y in self.labels:
            counts[y] += 1
        return counts

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LabelAssignment)
            and self.labels == other.labels
            and self.num_classes == other.num_classes
        )

    def __repr__(self) -> str:
        return f"LabelAssignment(n={len(self.labels)}, C={self.num_classes})"


class FeatureMatrix:
    """Dense real matrix, row ``v`` = feature vector of node ``v``."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("feature matrix contains non-finite values")
        self.values = arr

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_cols(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"FeatureMatrix(shape={self.values.shape})"


@dataclass(frozen=True)
class StatsReport:
    """Dataset statistics: size counts, hyperedge sizes, node degrees."""

    num_nodes: int
    num_hyperedges: int
    num_classes: Optional[int]
    min_edge_size: Optional[int]
    median_edge_size: Optional[int]
    max_edge_size: Optional[int]
    min_degree: int
    median_degree: int
    mean_degree: float
    max_degree: int
    isolated_node_count: int
    isolated_node_fraction: float
    degree_histogram: dict
    sum_of_hyperedge_sizes: int

    def as_dict(self) -> dict:
        return {
            "num_nodes": self.num_nodes,
            "num_hyperedges": self.num_hyperedges,
            "num_classes": self.num_classes,
            "min_edge_size": self.min_edge_size,
            "median_edge_size": self.median_edge_size,
            "max_edge_size": self.max_edge_size,
            "min_degree": self.min_degree,
            "median_degree": self.median_degree,
            "mean_degree": self.mean_degree,
            "max_degree": self.max_degree,
            "isolated_node_count": self.isolated_node_count,
            "isolated_node_fraction": self.isolated_node_fraction,
            "degree_histogram": dict(self.degree_histogram),
            "sum_of_hyperedge_sizes": self.sum_of_hyperedge_sizes,
        }


def _lower_median(values: Sequence[int]) -> int:
    # Deterministic lower median: no interpolation for count data.
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def compute_stats(h: Hypergraph, labels: Optional[LabelAssignment] = None) -> StatsReport:
    """Summarise a hypergraph; medians are lower medians.

    Asserts the handshake identity sum(|e|) == sum(d_v) before returning.
    """
    sizes = [len(e) for e in h.hyperedges]
    degrees = [h.degree(v) for v in range(h.num_nodes)]
    total = sum(sizes)
    if total != sum(degrees):
        raise AssertionError("handshake identity violated: sum |e| != sum d_v")
    isolated = sum(1 for d in degrees if d == 0)
    hist = {"0": 0, "1": 0, "2": 0, "3": 0, ">3": 0}
    for d in degrees:
        hist[str(d) if d <= 3 else ">3"] += 1
    return StatsReport(
        num_nodes=h.num_nodes,
        num_hyperedges=h.num_edges,
        num_classes=labels.num_classes if labels is not None else None,
        min_edge_size=min(sizes) if sizes else None,
        median_edge_size=_lower_median(sizes) if sizes else None,
        max_edge_size=max(sizes) if sizes else None,
        min_degree=min(degrees) if degrees else 0,
        median_degree=_lower_median(degrees) if degrees else 0,
        mean_degree=(total / h.num_nodes) if h.num_nodes else 0.0,
        max_degree=max(degrees) if degrees else 0,
        isolated_node_count=isolated,
        isolated_node_fraction=(isolated / h.num_nodes) if h.num_nodes else 0.0,
        degree_histogram=hist,
        sum_of_hyperedge_sizes=total,
    )


def clique_expand(h: Hypergraph) -> list[set[int]]:
    """Replace every hyperedge by a clique; returns adjacency sets.

    No self-loops; isolated hypergraph nodes stay isolated.
    """
    adj: list[set[int]] = [set() for _ in range(h.num_nodes)]
    for edge in h.hyperedges:
        for i, u in enumerate(edge):
            for w in edge[i + 1 :]:
                adj[u].add(w)
                adj[w].add(u)
    return adj


def subhypergraph(h: Hypergraph, keep: Callable[[int], bool]) -> Hypergraph:
    """Filter hyperedges by index predicate; node set and relative order kept."""
    kept = [edge for idx, edge in enumerate(h.hyperedges) if keep(idx)]
    return Hypergraph(h.num_nodes, kept)


class LoadResult(NamedTuple):
    hypergraph: Hypergraph
    labels: Optional[LabelAssignment]
    features: Optional[FeatureMatrix]
    # Original-id -> dense-id mapping when the edge-list loader had to remap
    # sparse node ids; None when ids were already dense.
    id_map: Optional[dict] = None


def load_hypergraph(path, fmt: Optional[str] = None) -> LoadResult:
    """Load a hypergraph from ``path`` in ``json`` or ``edge-list`` format.

    With ``fmt=None`` the format is inferred from the extension (``.json``
    means JSON, anything else is edge-list).  The JSON format carries
    ``num_nodes`` and may carry labels/features; the edge-list format is one
    hyperedge per line (whitespace-separated ids, ``#`` comments) with an
    optional companion ``<path>.labels`` file of one integer per line.
    """
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix == ".json" else "edge-list"
    if fmt == "json":
        return _load_json(path)
    if fmt == "edge-list":
        return _load_edge_list(path)
    raise ParseError(f"unknown format {fmt!r} (expected 'json' or 'edge-list')")


def _load_json(path: Path) -> LoadResult:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError(f"{path}: top-level JSON value must be an object")
    for key in ("num_nodes", "hyperedges"):
        if key not in payload:
            raise ParseError(f"{path}: missing required key {key!r}")
    num_nodes = payload["num_nodes"]
    edges = payload["hyperedges"]
    if not isinstance(num_nodes, int):
        raise ParseError(f"{path}: num_nodes must be an integer")
    if not isinstance(edges, list) or any(not isinstance(e, list) for e in edges):
        raise ParseError(f"{path}: hyperedges must be an array of arrays")
    h = Hypergraph(num_nodes, edges)

    labels = None
    if payload.get("labels") is not None:
        raw = payload["labels"]
        if not isinstance(raw, list) or len(raw) != num_nodes:
            raise ParseError(f"{path}: labels must be an array of length num_nodes")
        labels = LabelAssignment(raw, payload.get("num_classes"))

    features = None
    if payload.get("features") is not None:
        raw = payload["features"]
        if not isinstance(raw, list) or len(raw) != num_nodes:
            raise ParseError(f"{path}: features must be an array of length num_nodes")
        features = FeatureMatrix(raw)
        if features.num_rows != num_nodes:
            raise ValidationError(f"{path}: feature row count != num_nodes")
    return LoadResult(h, labels, features)


def _load_edge_list(path: Path) -> LoadResult:
    edges_raw: list[list[int]] = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    edges_raw.append([int(tok) for tok in line.split()])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc

    seen = sorted({v for edge in edges_raw for v in edge})
    if seen and seen[0] < 0:
        raise ValidationError(f"{path}: negative node id {seen[0]}")
    id_map = None
    if seen and seen != list(range(len(seen))):
        # Sparse ids: remap to a dense 0-based range and report the mapping.
        id_map = {orig: dense for dense, orig in enumerate(seen)}
        edges_raw = [[id_map[v] for v in edge] for edge in edges_raw]
    num_nodes = len(seen)
    h = Hypergraph(num_nodes, edges_raw)

    labels = None
    for candidate in (Path(str(path) + ".labels"), path.with_suffix(".labels")):
        if candidate != path and candidate.exists():
            raw = []
            with open(candidate, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line and not line.startswith("#"):
                        raw.append(int(line))
            if len(raw) != num_nodes:
                raise ParseError(
                    f"{candidate}: expected {num_nodes} labels, found {len(raw)}"
                )
            labels = LabelAssignment(raw)
            break
    return LoadResult(h, labels, features=None, id_map=id_map)


def save_hypergraph(
    h: Hypergraph,
    path,
    labels: Optional[LabelAssignment] = None,
    features: Optional[FeatureMatrix] = None,
) -> None:
    """Write the canonical JSON format; byte-stable for identical inputs."""
    payload: dict = {
        "num_nodes": h.num_nodes,
        "hyperedges": [list(edge) for edge in h.hyperedges],
    }
    if labels is not None:
        payload["labels"] = list(labels.labels)
        payload["num_classes"] = labels.num_classes
    if features is not None:
        payload["features"] = [[float(x) for x in row] for row in features.values]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
