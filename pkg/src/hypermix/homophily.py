"""Homophily measures for hypergraphs.

The central construct is a two-step message-passing score: level-0
hyperedge homophily is the per-edge class distribution; node and edge
scores at deeper levels alternate mean aggregations of each other.  On
top of the trace we derive the fraction of nodes whose score moved less
than a threshold between consecutive levels, clique-expansion node
homophily, affinity/baseline scores restricted to k-uniform slices, and
a normalized accuracy for comparing two classifiers.

All operations are pure functions of immutable inputs and reduce in a
fixed index order, so results do not depend on iteration parallelism.
A rational mode (``exact=True``) runs the trace in exact fraction
arithmetic for small instances; production mode uses 64-bit floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from hypermix.hypergraph import Hypergraph, LabelAssignment, ValidationError, clique_expand


@dataclass
class HomophilyTrace:
    """Node and hyperedge homophily scores for levels ``0..T``.

    ``node_scores[t][v]`` is the level-t score of node ``v`` (``None`` for
    isolated nodes, which have no defined score).  ``edge_scores[t][e][c]``
    is the level-t score of hyperedge ``e`` for class ``c``; a class absent
    from the edge scores 0.  Values are floats, or :class:`Fraction` when
    the trace was computed in exact mode.
    """

    levels: int
    num_classes: int
    node_scores: list = field(repr=False)
    edge_scores: list = field(repr=False)
    exact: bool = False

    def defined_mask(self) -> list[bool]:
        return [s is not None for s in self.node_scores[0]]

    def mean_node_score(self, t: int):
        """Mean level-t score over nodes with a defined score."""
        defined = [s for s in self.node_scores[t] if s is not None]
        if not defined:
            raise ValidationError("no node has a defined homophily score")
        return sum(defined) / len(defined)

    def per_class_mean(self, labels: LabelAssignment, t: int) -> list:
        """Mean level-t node score per class (None for classes with no defined node)."""
        sums = [None] * self.num_classes
        counts = [0] * self.num_classes
        for v, s in enumerate(self.node_scores[t]):
            if s is None:
                continue
            c = labels[v]
            sums[c] = s if sums[c] is None else sums[c] + s
            counts[c] += 1
        return [None if n == 0 else sums[c] / n for c, n in enumerate(counts)]


@dataclass(frozen=True)
class DeltaReport:
    """Fraction of nodes whose homophily moved less than ``mu`` at level ``t``."""

    t: int
    mu: float
    value: float
    isolated_policy: str


@dataclass
class KUniformReport:
    """Affinity, baseline and normalized-bias scores over size-k hyperedges.

    For class ``c`` and type ``t`` in ``1..k``, ``affinity[c][t-1]`` is the
    share of the class's size-k incidences that fall in hyperedges with
    exactly ``t`` members of the class; ``baseline[c][t-1]`` is the same
    share under uniformly random group formation.  Classes that touch no
    size-k hyperedge carry ``None`` rows in ``affinity``/``ratio``/``bias``.
    """

    k: int
    num_classes: int
    class_counts: list
    participating: list
    affinity: list
    baseline: list
    ratio: list
    bias: list

    @property
    def empty(self) -> bool:
        return not any(self.participating)


def edge_homophily_0(h: Hypergraph, labels: LabelAssignment, exact: bool = False) -> list:
    """Per-hyperedge class distribution of member labels.

    Row ``e`` has one entry per class, the fraction of ``e``'s members with
    that label; every row sums to 1.
    """
    one = Fraction(1) if exact else 1.0
    rows = []
    for edge in h.hyperedges:
        row = [0 * one] * labels.num_classes
        for v in edge:
            row[labels[v]] += one
        size = len(edge)
        rows.append([x / size for x in row])
    return rows


def mp_homophily(
    h: Hypergraph, labels: LabelAssignment, T: int, exact: bool = False
) -> HomophilyTrace:
    """Two-step message-passing homophily trace for levels ``0..T``.

    Level-0 edge scores are the per-edge class distributions.  Then,
    alternating mean aggregations:

    * node level t: mean over the node's hyperedges of the edge's level-t
      score for the node's own class;
    * edge level t+1, class c: mean level-t node score over the edge's
      members of class c, or 0 when the class is absent from the edge.

    Isolated nodes have no defined score at any level (``None``).
    """
    if T < 0:
        raise ValidationError(f"T must be >= 0, got {T}")
    edge_levels = [edge_homophily_0(h, labels, exact=exact)]
    node_levels = []
    memberships = h.memberships
    for t in range(T + 1):
        edge_t = edge_levels[t]
        nodes_t: list = []
        for v in range(h.num_nodes):
            eids = memberships[v]
            if not eids:
                nodes_t.append(None)
                continue
            y = labels[v]
            acc = edge_t[eids[0]][y]
            for eid in eids[1:]:
                acc = acc + edge_t[eid][y]
            nodes_t.append(acc / len(eids))
        node_levels.append(nodes_t)
        if t == T:
            break
        zero = Fraction(0) if exact else 0.0
        next_edges = []
        for edge in h.hyperedges:
            row = []
            for c in range(labels.num_classes):
                members = [u for u in edge if labels[u] == c]
                if not members:
                    row.append(zero)
                    continue
                acc = nodes_t[members[0]]
                for u in members[1:]:
                    acc = acc + nodes_t[u]
                row.append(acc / len(members))
            next_edges.append(row)
        edge_levels.append(next_edges)
    return HomophilyTrace(
        levels=T,
        num_classes=labels.num_classes,
        node_scores=node_levels,
        edge_scores=edge_levels,
        exact=exact,
    )


def delta_homophily(
    trace: HomophilyTrace, t: int = 1, mu: float = 0.1, policy: str = "count-as-stable"
) -> DeltaReport:
    """Proportion of nodes whose score changed by less than ``mu`` at level ``t``.

    Under ``count-as-stable`` (default) isolated nodes count as unchanged in
    both numerator and denominator, so the denominator is the full node
    count; under ``exclude`` they are dropped from both.
    """
    if not 1 <= t <= trace.levels:
        raise ValidationError(f"level t={t} outside 1..{trace.levels}")
    if mu <= 0:
        raise ValidationError(f"mu must be > 0, got {mu}")
    if policy not in ("count-as-stable", "exclude"):
        raise ValidationError(f"unknown isolated-node policy {policy!r}")
    num = 0
    den = 0
    for cur, prev in zip(trace.node_scores[t], trace.node_scores[t - 1]):
        if cur is None:
            if policy == "count-as-stable":
                num += 1
                den += 1
            continue
        den += 1
        if abs(cur - prev) < mu:
            num += 1
    value = num / den if den else 1.0
    return DeltaReport(t=t, mu=float(mu), value=float(value), isolated_policy=policy)


def ce_homophily(h: Hypergraph, labels: LabelAssignment) -> float:
    """Node homophily of the clique-expanded hypergraph.

    Mean over all nodes of the fraction of graph neighbours sharing the
    node's label.  Isolated nodes contribute 1 (only themselves to agree
    with), which makes the measure sensitive to isolated-node-heavy data.
    """
    adj = clique_expand(h)
    total = 0.0
    for v in range(h.num_nodes):
        neigh = adj[v]
        if not neigh:
            total += 1.0
            continue
        same = sum(1 for u in neigh if labels[u] == labels[v])
        total += same / len(neigh)
    if h.num_nodes == 0:
        raise ValidationError("hypergraph has no nodes")
    return total / h.num_nodes


def kuniform_scores(h: Hypergraph, labels: LabelAssignment, k: int) -> KUniformReport:
    """Affinity/baseline/bias scores restricted to hyperedges of size ``k``.

    The affinity of class ``c`` for type ``t`` counts, over class-c nodes,
    size-k incidences in hyperedges with exactly ``t`` class-c members,
    normalised by the class's total size-k incidences.  The baseline is the
    hypergeometric probability of ``t-1`` class-c companions among ``k-1``
    uniformly chosen others.  The bias rescales affinity minus baseline to
    [-1, 1] (divided by ``1-b`` above the baseline, by ``b`` below it).
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    C = labels.num_classes
    n = h.num_nodes
    counts = labels.class_counts()

    k_edges = [e for e in h.hyperedges if len(e) == k]
    # d_t sums per class: type_counts[c][t-1] accumulates d_t(v) over class-c
    # nodes; totals[c] accumulates the class's size-k degree.
    type_counts = [[0] * k for _ in range(C)]
    totals = [0] * C
    for edge in k_edges:
        per_class = [0] * C
        for v in edge:
            per_class[labels[v]] += 1
        for v in edge:
            c = labels[v]
            type_counts[c][per_class[c] - 1] += 1
            totals[c] += 1

    participating = [totals[c] > 0 for c in range(C)]
    affinity = [
        [type_counts[c][t] / totals[c] for t in range(k)] if participating[c] else None
        for c in range(C)
    ]

    baseline: list = []
    for c in range(C):
        nc = int(counts[c])
        if nc == 0 or k > n:
            baseline.append(None)
            continue
        denom = math.comb(n - 1, k - 1)
        row = [
            Fraction(math.comb(nc - 1, t - 1) * math.comb(n - nc, k - t), denom)
            for t in range(1, k + 1)
        ]
        baseline.append([float(b) for b in row])

    ratio: list = []
    bias: list = []
    for c in range(C):
        if affinity[c] is None or baseline[c] is None:
            ratio.append(None)
            bias.append(None)
            continue
        r_row = []
        f_row = []
        for eta, b in zip(affinity[c], baseline[c]):
            r_row.append(eta / b if b > 0 else None)
            # eta > b forces b < 1 and eta < b forces b > 0, so both branches
            # divide by a nonzero quantity; the eta == b case is exactly 0.
            if eta == b:
                f_row.append(0.0)
            elif eta > b:
                f_row.append((eta - b) / (1 - b))
            else:
                f_row.append((eta - b) / b)
        ratio.append(r_row)
        bias.append(f_row)

    return KUniformReport(
        k=k,
        num_classes=C,
        class_counts=[int(x) for x in counts],
        participating=participating,
        affinity=affinity,
        baseline=baseline,
        ratio=ratio,
        bias=bias,
    )


def normalized_accuracy(acc_a: float, acc_b: float) -> float:
    """Accuracy of model A rescaled by model B's headroom: (a - b) / (100 - b).

    Both accuracies are percentages; ``acc_b`` must be strictly below 100.
    """
    if not 0 <= acc_a <= 100:
        raise ValidationError(f"acc_a must be in [0, 100], got {acc_a}")
    if not 0 <= acc_b < 100:
        raise ValidationError(f"acc_b must be in [0, 100), got {acc_b}")
    return (acc_a - acc_b) / (100.0 - acc_b)


def delta_grid(
    trace: HomophilyTrace,
    mus: Sequence[float],
    t: int = 1,
    policy: str = "count-as-stable",
) -> list[DeltaReport]:
    """Delta reports over a grid of thresholds (helper for reporting/plots)."""
    return [delta_homophily(trace, t=t, mu=mu, policy=policy) for mu in mus]
