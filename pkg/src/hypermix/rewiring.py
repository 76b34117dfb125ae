"""Connectivity manipulation: size-ordered drops and homophilic splits.

Five strategies: *trimming* removes the smallest x% of hyperedges,
*retention* keeps only the smallest x%, *random drop* removes a uniform
random x%, *label split* partitions every hyperedge into single-class
sub-hyperedges, and *k-means split* partitions hyperedges by clustering
member features, picking the cluster count per edge with an elbow rule.

Every strategy preserves the node set; fraction-to-count rounding is
floor, and equal-size ties follow the original hyperedge index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from hypermix.hypergraph import (
    FeatureMatrix,
    Hypergraph,
    LabelAssignment,
    ValidationError,
)
from hypermix.sampling import make_rng


def order_by_size(h: Hypergraph) -> list[int]:
    """Hyperedge indices in ascending size order, ties by original index."""
    return sorted(range(h.num_edges), key=lambda i: (len(h.hyperedges[i]), i))


def _check_fraction(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"fraction must be in [0, 1], got {x}")
    return float(x)


def _keep_indices(h: Hypergraph, kept: set[int]) -> Hypergraph:
    return Hypergraph(h.num_nodes, [e for i, e in enumerate(h.hyperedges) if i in kept])


def trim(h: Hypergraph, x: float) -> Hypergraph:
    """Remove the smallest floor(x * m) hyperedges; node set unchanged."""
    x = _check_fraction(x)
    count = int(np.floor(x * h.num_edges))
    dropped = set(order_by_size(h)[:count])
    return _keep_indices(h, set(range(h.num_edges)) - dropped)


def retain(h: Hypergraph, x: float) -> Hypergraph:
    """Keep only the smallest floor(x * m) hyperedges; node set unchanged."""
    x = _check_fraction(x)
    count = int(np.floor(x * h.num_edges))
    return _keep_indices(h, set(order_by_size(h)[:count]))


def random_drop(h: Hypergraph, x: float, seed: int) -> Hypergraph:
    """Remove a uniformly random floor(x * m)-subset of hyperedges."""
    x = _check_fraction(x)
    count = int(np.floor(x * h.num_edges))
    rng = make_rng(seed)
    dropped = set(int(i) for i in rng.permutation(h.num_edges)[:count])
    return _keep_indices(h, set(range(h.num_edges)) - dropped)


def label_split(
    h: Hypergraph, labels: LabelAssignment, drop_singletons: bool = False
) -> Hypergraph:
    """Split every hyperedge into one fully homophilic sub-edge per class.

    The sub-edges of an edge appear in class-id order; unless
    ``drop_singletons`` is set, size-1 sub-edges are kept so that every
    incidence of the input survives (sum |e| is preserved).
    """
    if len(labels) != h.num_nodes:
        raise ValidationError("labels must cover all nodes")
    new_edges: list[tuple[int, ...]] = []
    for edge in h.hyperedges:
        groups: dict[int, list[int]] = {}
        for v in edge:
            groups.setdefault(labels[v], []).append(v)
        for c in sorted(groups):
            part = groups[c]
            if drop_singletons and len(part) == 1:
                continue
            new_edges.append(tuple(part))
    return Hypergraph(h.num_nodes, new_edges)


@dataclass(frozen=True)
class KMeansParams:
    """Inner-solver settings: seeded k-means++ with Lloyd refinement."""

    restarts: int = 10
    max_iters: int = 100
    tol: float = 1e-6

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1 or self.tol <= 0:
            raise ValidationError("k-means parameters must be positive")


@dataclass
class KMeansResult:
    """Chosen cluster count, assignments, and the inertia curve over candidates."""

    m: int
    assignments: np.ndarray
    inertia_curve: list[float]


def _plus_plus_init(points: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((m, points.shape[1]), dtype=np.float64)
    centers[0] = points[int(rng.integers(n))]
    dist2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, m):
        total = dist2.sum()
        if total <= 0.0:
            # All remaining points coincide with a chosen centre.
            centers[j] = points[int(rng.integers(n))]
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(dist2), r, side="right"))
        idx = min(idx, n - 1)
        centers[j] = points[idx]
        dist2 = np.minimum(dist2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(
    points: np.ndarray, centers: np.ndarray, params: KMeansParams
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    m = centers.shape[0]
    history: list[float] = []
    for _ in range(params.max_iters):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        # Repair empty clusters: seize the point farthest from its centre.
        for j in range(m):
            if not np.any(assign == j):
                worst = int(d2[np.arange(len(points)), assign].argmax())
                assign[worst] = j
                d2[worst] = ((points[worst] - centers) ** 2).sum(axis=1)
        for j in range(m):
            centers[j] = points[assign == j].mean(axis=0)
        inertia = float(((points - centers[assign]) ** 2).sum())
        done = history and history[-1] - inertia <= params.tol * max(history[-1], 1e-12)
        history.append(inertia)
        if done:
            break
    return assign, centers, history


def kmeans(
    points,
    m: int,
    params: KMeansParams = KMeansParams(),
    rng: Optional[np.random.Generator] = None,
    return_history: bool = False,
):
    """Best-of-restarts k-means; returns (assignments, centers, inertia).

    With ``return_history`` the per-iteration inertia list of the winning
    restart is appended to the tuple (it is non-increasing).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if not np.all(np.isfinite(points)):
        raise ValidationError("k-means input contains non-finite values")
    n = points.shape[0]
    if m < 1 or m > n:
        raise ValidationError(f"need 1 <= m <= #points, got m={m}, n={n}")
    if rng is None:
        rng = make_rng(0)
    if m == 1:
        center = points.mean(axis=0, keepdims=True)
        inertia = float(((points - center) ** 2).sum())
        result = (np.zeros(n, dtype=np.int64), center, inertia)
        return result + ([inertia],) if return_history else result
    best = None
    for _ in range(params.restarts):
        centers = _plus_plus_init(points, m, rng)
        assign, centers, history = _lloyd(points, centers.copy(), params)
        if best is None or history[-1] < best[2]:
            best = (assign, centers, history[-1], history)
    return best if return_history else best[:3]


def elbow_choice(inertias, rel_drop_threshold: float = 0.10) -> int:
    """Pick a cluster count from an inertia curve over m = 1..len(inertias).

    Returns 1 (no split) when the curve starts at zero or the relative drop
    from m=1 to m=2 is below the threshold; with only two candidates the
    remaining choice is m=2; otherwise the interior point maximising the
    discrete second difference (curve curvature) wins, ties to the smaller m.
    """
    inertias = [float(i) for i in inertias]
    M = len(inertias)
    if M == 0:
        raise ValidationError("empty inertia curve")
    if M == 1 or inertias[0] <= 0.0:
        return 1
    if (inertias[0] - inertias[1]) / inertias[0] < rel_drop_threshold:
        return 1
    if M == 2:
        return 2
    curvature = [inertias[i - 1] - 2 * inertias[i] + inertias[i + 1] for i in range(1, M - 1)]
    return 2 + int(np.argmax(curvature))


def kmeans_scan(
    points,
    m_max: int,
    params: KMeansParams = KMeansParams(),
    rng: Optional[np.random.Generator] = None,
    rel_drop_threshold: float = 0.10,
) -> KMeansResult:
    """Run k-means for m = 1..m_max and keep the elbow choice."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if rng is None:
        rng = make_rng(0)
    curve = []
    assigns = []
    for m in range(1, m_max + 1):
        assign, _, inertia = kmeans(points, m, params, rng)
        curve.append(inertia)
        assigns.append(assign)
    m = elbow_choice(curve, rel_drop_threshold)
    return KMeansResult(m=m, assignments=assigns[m - 1], inertia_curve=curve)


def kmeans_split(
    h: Hypergraph,
    features: FeatureMatrix,
    num_classes: int,
    params: KMeansParams = KMeansParams(),
    seed: int = 0,
    min_split_size: int = 3,
    rel_drop_threshold: float = 0.10,
) -> Hypergraph:
    """Partition each hyperedge by clustering its members' feature rows.

    Per hyperedge of size >= ``min_split_size``, candidate cluster counts
    run from 1 to min(num_classes, |e|) and the elbow rule decides (m=1
    leaves the edge intact).  Smaller hyperedges pass through unchanged.
    Each hyperedge gets its own generator stream derived from ``seed`` and
    the edge index, so results do not depend on processing order.
    """
    if features.num_rows != h.num_nodes:
        raise ValidationError("feature rows must cover all nodes")
    if num_classes < 2:
        raise ValidationError(f"need num_classes >= 2, got {num_classes}")
    new_edges: list[tuple[int, ...]] = []
    for eid, edge in enumerate(h.hyperedges):
        m_max = min(num_classes, len(edge))
        if len(edge) < min_split_size or m_max < 2:
            new_edges.append(edge)
            continue
        pts = features.values[list(edge)]
        result = kmeans_scan(
            pts, m_max, params, make_rng(seed, eid), rel_drop_threshold
        )
        if result.m == 1:
            new_edges.append(edge)
            continue
        for j in range(result.m):
            part = tuple(v for v, a in zip(edge, result.assignments) if a == j)
            if part:
                new_edges.append(part)
    return Hypergraph(h.num_nodes, new_edges)
