#!/usr/bin/env python3
"""Construct the bundled benchmark fixtures.

``zoo.json``: 101 nodes in 7 classes and 43 hyperedges with uniform node
degree 17 (hence 1717 incidences).  Starting from overlapping per-class
edge windows, a seeded local search applies degree-preserving moves (one
node swaps one of its hyperedges for another) until three reference
statistics hold simultaneously:

    clique-expansion node homophily  0.8288
    mean level-0 node homophily      0.9113
    mean level-1 node homophily      0.8579

Note the degree constraint forces mixing: every node needs 17 distinct
hyperedges, so the 7 classes need 119 class-touching edge slots out of
43 edges, and the average edge hosts about 2.8 classes.  High mean
homophily is still reachable because skewed edges (one dominant class
plus a few guests) score almost like pure ones.

The statistics here are recomputed with self-contained vectorised code
(no imports from the package under test), so the committed fixture pins
the library against an independent implementation.

``mushroom.json``: 8124 nodes in 2 classes, 5 attributes partitioning
the node set into 2/6/10/120/160 values, hence 298 hyperedges and
uniform node degree 5 (40620 incidences).

Run from the repository root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "fixtures"

ZOO_TARGETS = {"ce": 0.8288, "h0": 0.9113, "h1": 0.8579}
ZOO_TOL = 0.0015  # well inside the 0.005 acceptance window
ZOO_CLASS_SIZES = (41, 20, 5, 13, 4, 8, 10)
ZOO_EDGES = 43
ZOO_DEGREE = 17


# --------------------------------------------------------------------------
# independent metric implementations (vectorised, float64)


def metrics(M: np.ndarray, labels: np.ndarray, C: int) -> dict:
    n, m = M.shape
    sizes = M.sum(axis=0)
    Y = np.zeros((n, C))
    Y[np.arange(n), labels] = 1.0
    counts_ec = M.T @ Y                       # members of each class per edge
    h_e0 = counts_ec / sizes[:, None]
    own0 = h_e0[:, labels]                    # edge score for each node's class
    deg = M.sum(axis=1)
    h_v0 = np.einsum("vm,mv->v", M, own0) / deg
    weighted = M * h_v0[:, None]              # node scores spread to edges
    sums_ec = weighted.T @ Y                  # class-wise node-score sums per edge
    h_e1 = np.where(counts_ec > 0, sums_ec / np.where(counts_ec > 0, counts_ec, 1.0), 0.0)
    own1 = h_e1[:, labels]
    h_v1 = np.einsum("vm,mv->v", M, own1) / deg

    A = (M @ M.T) > 0                          # simple clique expansion
    np.fill_diagonal(A, False)
    same = A & (labels[:, None] == labels[None, :])
    tot = A.sum(axis=1)
    ce = float(np.where(tot > 0, same.sum(axis=1) / np.maximum(tot, 1), 1.0).mean())
    return {"ce": ce, "h0": float(h_v0.mean()), "h1": float(h_v1.mean())}


def objective(vals: dict) -> float:
    return sum(((vals[k] - ZOO_TARGETS[k]) / ZOO_TOL) ** 2 for k in ZOO_TARGETS)


# --------------------------------------------------------------------------
# zoo fixture


def _initial_incidence(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Each node starts on the 17 consecutive edges of its class window."""
    n = len(labels)
    C = labels.max() + 1
    sizes = np.bincount(labels, minlength=C)
    offsets = np.floor(ZOO_EDGES * np.cumsum(np.concatenate([[0], sizes[:-1]])) / n).astype(int)
    M = np.zeros((n, ZOO_EDGES))
    for v in range(n):
        start = offsets[labels[v]]
        M[v, (start + np.arange(ZOO_DEGREE)) % ZOO_EDGES] = 1.0
    return M


def make_zoo(seed: int = 20240229, max_steps: int = 400_000) -> dict:
    rng = np.random.default_rng(seed)
    n = sum(ZOO_CLASS_SIZES)
    C = len(ZOO_CLASS_SIZES)
    labels = np.repeat(np.arange(C), ZOO_CLASS_SIZES)
    M = _initial_incidence(labels, rng)

    current = metrics(M, labels, C)
    score = objective(current)
    for step in range(max_steps):
        if score < 1.0 and all(abs(current[k] - ZOO_TARGETS[k]) < ZOO_TOL for k in ZOO_TARGETS):
            break
        v = int(rng.integers(n))
        mine = np.flatnonzero(M[v])
        free = np.flatnonzero(M[v] == 0)
        a = int(mine[rng.integers(len(mine))])
        b = int(free[rng.integers(len(free))])
        if M[:, a].sum() <= 1:
            continue  # never empty a hyperedge
        M[v, a], M[v, b] = 0.0, 1.0
        vals = metrics(M, labels, C)
        new_score = objective(vals)
        if new_score <= score:
            current, score = vals, new_score
        else:
            M[v, a], M[v, b] = 1.0, 0.0
        if step % 20_000 == 0:
            print(f"  zoo step {step}: score {score:9.1f} " +
                  " ".join(f"{k}={current[k]:.4f}" for k in current))

    errors = {k: current[k] - ZOO_TARGETS[k] for k in ZOO_TARGETS}
    if not all(abs(e) < ZOO_TOL for e in errors.values()):
        raise SystemExit(f"zoo tuning did not converge: {current} (errors {errors})")
    print(f"zoo: converged after {step} steps: " +
          ", ".join(f"{k}={current[k]:.4f}" for k in current))

    hyperedges = [sorted(np.flatnonzero(M[:, j]).tolist()) for j in range(ZOO_EDGES)]
    assert M.shape == (101, ZOO_EDGES)
    assert int(M.sum()) == 1717
    assert np.all(M.sum(axis=1) == ZOO_DEGREE)
    assert all(len(e) >= 1 for e in hyperedges)

    # Class-informative synthetic features so that training runs on the
    # fixture are meaningful: a noisy one-hot of the class plus noise dims.
    feat_rng = np.random.default_rng(seed + 1)
    one_hot = np.zeros((n, C))
    one_hot[np.arange(n), labels] = 1.0
    features = np.concatenate(
        [one_hot + 0.15 * feat_rng.normal(size=(n, C)), 0.3 * feat_rng.normal(size=(n, 9))],
        axis=1,
    )
    return {
        "num_nodes": n,
        "hyperedges": hyperedges,
        "labels": labels.tolist(),
        "num_classes": C,
        "features": [[round(float(x), 6) for x in row] for row in features],
    }


# --------------------------------------------------------------------------
# mushroom fixture


def make_mushroom(seed: int = 7151978) -> dict:
    rng = np.random.default_rng(seed)
    n = 8124
    class_sizes = (4208, 3916)
    labels = np.repeat(np.arange(2), class_sizes)
    cardinalities = [2, 6, 10, 120, 160]
    assert sum(cardinalities) == 298

    edges: list[list[int]] = []
    for card in cardinalities:
        values = rng.integers(card, size=n)
        # Guarantee every value occurs so every hyperedge is non-empty.
        pioneers = rng.permutation(n)[:card]
        values[pioneers] = np.arange(card)
        for val in range(card):
            edges.append(sorted(np.flatnonzero(values == val).tolist()))

    total = sum(len(e) for e in edges)
    assert total == 5 * n == 40620
    assert len(edges) == 298
    print(f"mushroom: {len(edges)} hyperedges, sum of sizes {total}")
    return {
        "num_nodes": n,
        "hyperedges": edges,
        "labels": labels.tolist(),
        "num_classes": 2,
    }


def main() -> None:
    OUT.mkdir(exist_ok=True)
    for name, payload in (("zoo.json", make_zoo()), ("mushroom.json", make_mushroom())):
        path = OUT / name
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
        print(f"wrote {path} ({path.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
