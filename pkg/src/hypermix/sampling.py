"""Two-step mini-batch sampling and its probabilistic analysis.

Step 1 draws ``B`` hyperedges without replacement (uniformly or with
probability proportional to hyperedge size); step 2 draws up to ``L``
member nodes per drawn hyperedge, padding short rows with a sentinel.
An epoch partitions the hyperedge list into ``ceil(m / B)`` consecutive
batches of a seeded shuffle, so every hyperedge is visited once per
epoch; with ``B == 0`` step 1 is skipped and one batch holds every
hyperedge.

The analysis half quantifies the sampling process: the first-visit epoch
of a fixed node inside one hyperedge is geometric, the expected wait
until a node has been seen in all of its hyperedges is bounded through
the mean-plus-variance inequality for maxima of independent variables,
and the chance of being seen at all in one epoch has an exact product
form.  Closed forms ship next to Monte-Carlo estimators so each side can
check the other.

Randomness comes from the 64-bit PCG64 generator; independent streams
are derived from the master seed through ``SeedSequence`` spawn keys, so
a (hypergraph, config, seed) triple reproduces bit-identical batch
sequences regardless of platform or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from hypermix.hypergraph import Hypergraph, LabelAssignment, ValidationError


@dataclass(frozen=True)
class SamplerConfig:
    """Mini-batch shape: B hyperedges per batch (0 = take all), L nodes per edge."""

    B: int
    L: int
    mode: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValidationError(f"L must be >= 1, got {self.L}")
        if self.B < 0:
            raise ValidationError(f"B must be >= 0, got {self.B}")
        if self.mode not in ("uniform", "size-weighted"):
            raise ValidationError(f"unknown sampling mode {self.mode!r}")


@dataclass(frozen=True)
class MiniBatch:
    """B x L node-id matrix with a padding mask.

    Row ``i`` holds ``min(L, |e_i|)`` distinct members of hyperedge
    ``edge_ids[i]``; remaining cells carry the PAD sentinel
    (``num_nodes``, one past the valid id range) and are mask-false.
    """

    edge_ids: tuple
    nodes: np.ndarray
    mask: np.ndarray
    pad_value: int

    @property
    def num_rows(self) -> int:
        return len(self.edge_ids)


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; extra ints select an independent stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=spawn_key)))


def _draw_edges(h: Hypergraph, cfg: SamplerConfig, rng: np.random.Generator) -> list[int]:
    m = h.num_edges
    if cfg.B == 0:
        return list(range(m))
    if cfg.B > m:
        raise ValidationError(f"B={cfg.B} exceeds the {m} available hyperedges")
    if cfg.mode == "uniform":
        weights = np.ones(m, dtype=np.float64)
    else:
        weights = h.edge_sizes().astype(np.float64)
    # Sequential cumulative-weight draws without replacement.
    chosen = []
    for _ in range(cfg.B):
        cum = np.cumsum(weights)
        r = rng.random() * cum[-1]
        idx = int(np.searchsorted(cum, r, side="right"))
        idx = min(idx, m - 1)
        chosen.append(idx)
        weights[idx] = 0.0
    return chosen


def _fill_rows(
    h: Hypergraph, edge_ids: list[int], L: int, rng: np.random.Generator
) -> MiniBatch:
    pad = h.num_nodes
    nodes = np.full((len(edge_ids), L), pad, dtype=np.int64)
    mask = np.zeros((len(edge_ids), L), dtype=bool)
    for i, eid in enumerate(edge_ids):
        members = h.hyperedges[eid]
        if len(members) <= L:
            take = np.array(members, dtype=np.int64)
        else:
            take = rng.permutation(np.array(members, dtype=np.int64))[:L]
        nodes[i, : len(take)] = take
        mask[i, : len(take)] = True
    return MiniBatch(edge_ids=tuple(edge_ids), nodes=nodes, mask=mask, pad_value=pad)


def sample_batch(
    h: Hypergraph, cfg: SamplerConfig, rng: np.random.Generator
) -> MiniBatch:
    """Draw one mini-batch: step-1 hyperedge draw, then step-2 node draws."""
    edge_ids = _draw_edges(h, cfg, rng)
    return _fill_rows(h, edge_ids, cfg.L, rng)


def iterate_epoch(
    h: Hypergraph, cfg: SamplerConfig, rng: np.random.Generator
) -> Iterator[MiniBatch]:
    """Yield the batches of one epoch.

    With step 1 active the hyperedge list is shuffled once and cut into
    consecutive chunks of ``B`` (the last chunk may be shorter), so the
    epoch partitions the hyperedge set; with ``B == 0`` a single batch
    carries every hyperedge in index order.
    """
    if cfg.B == 0:
        yield _fill_rows(h, list(range(h.num_edges)), cfg.L, rng)
        return
    if cfg.B > h.num_edges:
        raise ValidationError(f"B={cfg.B} exceeds the {h.num_edges} available hyperedges")
    order = rng.permutation(h.num_edges)
    for start in range(0, h.num_edges, cfg.B):
        chunk = [int(e) for e in order[start : start + cfg.B]]
        yield _fill_rows(h, chunk, cfg.L, rng)


@dataclass(frozen=True)
class ClassShiftReport:
    """Original vs sampled class histograms and their total-variation gaps."""

    num_classes: int
    original: np.ndarray
    step1_only: np.ndarray
    step1_and_2: np.ndarray
    tv_step1: float
    tv_step1_and_2: float

    def as_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "original": [float(x) for x in self.original],
            "step1_only": [float(x) for x in self.step1_only],
            "step1_and_2": [float(x) for x in self.step1_and_2],
            "tv_step1": self.tv_step1,
            "tv_step1_and_2": self.tv_step1_and_2,
        }


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def class_shift(
    h: Hypergraph,
    labels: LabelAssignment,
    cfg: SamplerConfig,
    num_batches: int,
    rng: Optional[np.random.Generator] = None,
) -> ClassShiftReport:
    """Measure how mini-batching skews the effective class distribution.

    The step-1-only histogram counts every member of each drawn hyperedge
    (node exposure is then proportional to node degree); the step-1-and-2
    histogram counts only the nodes surviving the per-edge node draw.
    """
    if num_batches < 1:
        raise ValidationError(f"num_batches must be >= 1, got {num_batches}")
    if rng is None:
        rng = make_rng(cfg.seed)
    C = labels.num_classes
    y = labels.as_array()
    # Per-edge class membership counts, for fast step-1 accumulation.
    edge_counts = np.zeros((h.num_edges, C), dtype=np.int64)
    for eid, edge in enumerate(h.hyperedges):
        for v in edge:
            edge_counts[eid, y[v]] += 1

    step1 = np.zeros(C, dtype=np.int64)
    step12 = np.zeros(C, dtype=np.int64)
    for _ in range(num_batches):
        batch = sample_batch(h, cfg, rng)
        step1 += edge_counts[list(batch.edge_ids)].sum(axis=0)
        sampled = batch.nodes[batch.mask]
        step12 += np.bincount(y[sampled], minlength=C)

    original = labels.class_counts().astype(np.float64)
    original /= original.sum()
    h1 = step1.astype(np.float64) / step1.sum()
    h12 = step12.astype(np.float64) / step12.sum()
    return ClassShiftReport(
        num_classes=C,
        original=original,
        step1_only=h1,
        step1_and_2=h12,
        tv_step1=total_variation(original, h1),
        tv_step1_and_2=total_variation(original, h12),
    )


def first_sample_pmf(n: int, c: int, T: int) -> float:
    """Probability that a fixed member of a size-n hyperedge is first drawn
    at epoch ``T`` when ``c`` of the ``n`` members are drawn each epoch.

    Geometric law: (1 - c/n)^(T-1) * (c/n).  With ``c == n`` the whole edge
    is covered every epoch and the mass collapses onto T = 1.
    """
    if not 1 <= c <= n:
        raise ValidationError(f"need 1 <= c <= n, got c={c}, n={n}")
    if T < 1:
        raise ValidationError(f"T must be >= 1, got {T}")
    p = c / n
    return (1.0 - p) ** (T - 1) * p


def expected_first_sample_epoch(n: int, c: int) -> float:
    """Mean of the first-draw epoch: n / c."""
    if not 1 <= c <= n:
        raise ValidationError(f"need 1 <= c <= n, got c={c}, n={n}")
    return n / c


def simulate_first_sample_epochs(
    n: int, c: int, trials: int, rng: np.random.Generator, max_epochs: int = 10_000
) -> np.ndarray:
    """Monte-Carlo oracle for :func:`first_sample_pmf`.

    Runs the actual step-2 draw (c distinct members of an n-member edge per
    epoch) and records when member 0 first appears.
    """
    if not 1 <= c <= n:
        raise ValidationError(f"need 1 <= c <= n, got c={c}, n={n}")
    out = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        for epoch in range(1, max_epochs + 1):
            if 0 in rng.permutation(n)[:c]:
                out[i] = epoch
                break
        else:
            raise RuntimeError(f"node not sampled within {max_epochs} epochs")
    return out


@dataclass(frozen=True)
class WaitBoundReport:
    """Upper bound on the expected epochs until a node is seen in all its edges."""

    sizes: tuple
    c: int
    bound: float
    per_edge_expectation: tuple
    monte_carlo: Optional[float] = None


def max_wait_bound(
    sizes,
    c: int,
    trials: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> WaitBoundReport:
    """Bound E[max_i T_i] for the per-edge first-draw epochs T_i ~ Geom(c/n_i).

    The bound is max_i E[T_i] + sqrt((k-1)/k * sum_i Var[T_i]) with the
    geometric variance (1-p)/p^2; for a single edge it collapses to the
    exact expectation n/c.  With ``trials`` > 0 a Monte-Carlo estimate of
    the true maximum is attached for comparison.
    """
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise ValidationError("need at least one hyperedge size")
    if c < 1 or any(s < c for s in sizes):
        raise ValidationError(f"need all sizes >= c >= 1, got sizes={sizes}, c={c}")
    k = len(sizes)
    probs = np.array([c / s for s in sizes], dtype=np.float64)
    means = 1.0 / probs
    variances = (1.0 - probs) / probs**2
    bound = float(means.max())
    if k > 1:
        bound += float(np.sqrt((k - 1) / k * variances.sum()))
    mc = None
    if trials > 0:
        if rng is None:
            rng = make_rng(0)
        draws = np.empty((trials, k), dtype=np.int64)
        for j, p in enumerate(probs):
            # rng.geometric with p == 1 is the point mass at 1.
            draws[:, j] = rng.geometric(p, size=trials)
        mc = float(draws.max(axis=1).mean())
    return WaitBoundReport(
        sizes=sizes,
        c=c,
        bound=bound,
        per_edge_expectation=tuple(float(m) for m in means),
        monte_carlo=mc,
    )


@dataclass(frozen=True)
class NodeSeenReport:
    """Probability that a node appears at least once during one epoch.

    ``exact`` multiplies per-edge miss probabilities 1 - min(L,|e|)/|e|;
    it is 1 as soon as one of the node's hyperedges fits entirely in a
    row.  ``shifted_ratio_variant`` is an alternative closed form whose
    per-edge retention factor is L/(|e|-1); it disagrees with the
    inclusion-probability derivation (and with simulation) and is kept
    only for comparison.
    """

    node: int
    degree: int
    exact: float
    shifted_ratio_variant: Optional[float]
    isolated: bool
    monte_carlo: Optional[float] = None


def node_seen_probability(
    h: Hypergraph,
    v: int,
    L: int,
    trials: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> NodeSeenReport:
    """Chance that node ``v`` is sampled in one epoch of step-2 draws."""
    if not 0 <= v < h.num_nodes:
        raise ValidationError(f"node {v} outside [0, {h.num_nodes})")
    if L < 1:
        raise ValidationError(f"L must be >= 1, got {L}")
    eids = h.memberships[v]
    if not eids:
        return NodeSeenReport(node=v, degree=0, exact=0.0, shifted_ratio_variant=None, isolated=True)
    sizes = [len(h.hyperedges[e]) for e in eids]

    miss = 1.0
    for s in sizes:
        miss *= 1.0 - min(L, s) / s
    exact = 1.0 - miss

    variant: Optional[float] = None
    if all(s > 1 for s in sizes):
        prod = 1.0
        for s in sizes:
            prod *= L / (s - 1)
        variant = 1.0 - prod
        if min(sizes) < L:
            variant = max(variant, 1.0)
        variant = min(max(variant, 0.0), 1.0)

    mc = None
    if trials > 0:
        if rng is None:
            rng = make_rng(0)
        hits = 0
        for _ in range(trials):
            seen = False
            for s in sizes:
                if s <= L or 0 in rng.permutation(s)[:L]:
                    seen = True
                    break
            if seen:
                hits += 1
        mc = hits / trials
    return NodeSeenReport(
        node=v,
        degree=len(eids),
        exact=exact,
        shifted_ratio_variant=variant,
        isolated=False,
        monte_carlo=mc,
    )
