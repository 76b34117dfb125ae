"""Multiset-mixer node classifier with hand-written reverse-mode gradients.

Each node keeps one hidden state per hyperedge it belongs to (an
*incidence* state).  A layer first pools every hyperedge's incidence
states into an edge state through a residual MLP-on-layer-norm block,
then updates every incidence state with its own residual block plus the
edge state; a terminal readout averages a node's incidence states into a
single vector for the classification head.  Two baselines share the
plumbing: a plain per-node MLP that ignores connectivity, and a
connectivity-batched MLP whose residual blocks apply per-hyperedge
weight dropout during training.

All reductions (edge pooling, node readout) run in a canonical order
derived from hyperedge member tuples, never from storage order, so
logits are bit-identical under any permutation of node order within
hyperedges or of the hyperedge list.  Arithmetic is float64; gradients
are checked against central finite differences in the test suite.
"""

from __future__ import annotations

import copy
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hypermix.hypergraph import FeatureMatrix, Hypergraph, LabelAssignment, ValidationError
from hypermix.sampling import MiniBatch, SamplerConfig, iterate_epoch, make_rng

_LN_EPS = 1e-5
_GELU_C = 0.7978845608028654  # sqrt(2 / pi)
_GELU_A = 0.044715


# ---------------------------------------------------------------------------
# primitives


def _gelu(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tanh-form GELU; returns (value, tanh(u)) with u cached for backward."""
    u = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), t


def _gelu_backward(dy: np.ndarray, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du)


def _layernorm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = (x - mu) * inv
    return xhat * g + b, (xhat, inv)


def _layernorm_backward(dy: np.ndarray, cache, g: np.ndarray):
    xhat, inv = cache
    dg = (dy * xhat).sum(axis=0)
    db = dy.sum(axis=0)
    dxhat = dy * g
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _mlp_forward(x: np.ndarray, W1, b1, W2, b2):
    h = x @ W1 + b1
    a, t = _gelu(h)
    return a @ W2 + b2, (x, h, a, t)


def _mlp_backward(dy: np.ndarray, cache, W1, W2):
    x, h, a, t = cache
    dW2 = a.T @ dy
    db2 = dy.sum(axis=0)
    da = dy @ W2.T
    dh = _gelu_backward(da, h, t)
    dW1 = x.T @ dh
    db1 = dh.sum(axis=0)
    dx = dh @ W1.T
    return dx, dW1, db1, dW2, db2


# ---------------------------------------------------------------------------
# incidence structure


@dataclass
class _Structure:
    """Incidence-indexed view of a hypergraph (or of one mini-batch).

    Incidences are laid out edge-major in a canonical edge order (full
    graph: hyperedges sorted by member tuple; batch: row order), members
    ascending inside each edge row.
    """

    inc_node: np.ndarray
    inc_edge: np.ndarray
    edge_ptr: np.ndarray
    edge_sizes: np.ndarray
    edge_ids: np.ndarray
    node_slices: list
    fallback_nodes: np.ndarray
    num_nodes: int


def _build_structure(h: Hypergraph) -> _Structure:
    order = sorted(range(h.num_edges), key=lambda i: h.hyperedges[i])
    inc_node: list[int] = []
    ptr = [0]
    for eid in order:
        inc_node.extend(h.hyperedges[eid])
        ptr.append(len(inc_node))
    inc_node_arr = np.array(inc_node, dtype=np.int64)
    sizes = np.diff(ptr).astype(np.int64)
    inc_edge = np.repeat(np.arange(len(order), dtype=np.int64), sizes) if order else np.empty(0, np.int64)
    node_slices: list[list[int]] = [[] for _ in range(h.num_nodes)]
    for idx, v in enumerate(inc_node):
        node_slices[v].append(idx)
    fallback = np.array([v for v in range(h.num_nodes) if not node_slices[v]], dtype=np.int64)
    return _Structure(
        inc_node=inc_node_arr,
        inc_edge=inc_edge,
        edge_ptr=np.array(ptr, dtype=np.int64),
        edge_sizes=sizes,
        edge_ids=np.array(order, dtype=np.int64),
        node_slices=[np.array(s, dtype=np.int64) for s in node_slices],
        fallback_nodes=fallback,
        num_nodes=h.num_nodes,
    )


def _build_batch_structure(h: Hypergraph, batch: MiniBatch) -> _Structure:
    inc_node: list[int] = []
    ptr = [0]
    for i in range(batch.num_rows):
        row = batch.nodes[i][batch.mask[i]]
        inc_node.extend(int(v) for v in row)
        ptr.append(len(inc_node))
    inc_node_arr = np.array(inc_node, dtype=np.int64)
    sizes = np.diff(ptr).astype(np.int64)
    inc_edge = (
        np.repeat(np.arange(batch.num_rows, dtype=np.int64), sizes)
        if batch.num_rows
        else np.empty(0, np.int64)
    )
    node_slices: list[list[int]] = [[] for _ in range(h.num_nodes)]
    for idx, v in enumerate(inc_node):
        node_slices[v].append(idx)
    fallback = np.array([v for v in range(h.num_nodes) if not node_slices[v]], dtype=np.int64)
    return _Structure(
        inc_node=inc_node_arr,
        inc_edge=inc_edge,
        edge_ptr=np.array(ptr, dtype=np.int64),
        edge_sizes=sizes,
        edge_ids=np.array(batch.edge_ids, dtype=np.int64),
        node_slices=[np.array(s, dtype=np.int64) for s in node_slices],
        fallback_nodes=fallback,
        num_nodes=h.num_nodes,
    )


def _segment_sum(x: np.ndarray, s: _Structure) -> np.ndarray:
    if len(s.edge_sizes) == 0:
        return np.zeros((0, x.shape[1]))
    return np.add.reduceat(x, s.edge_ptr[:-1], axis=0)


def _segment_mean(x: np.ndarray, s: _Structure) -> np.ndarray:
    if len(s.edge_sizes) == 0:
        return np.zeros((0, x.shape[1]))
    return _segment_sum(x, s) / s.edge_sizes[:, None]


@dataclass
class RepresentationState:
    """Hyperedge-dependent node states plus per-hyperedge states.

    Holds exactly sum(|e|) incidence vectors: ``incidence_states[i]`` is the
    state of node ``node_ids[i]`` inside hyperedge ``edge_ids[i]``.
    """

    node_ids: np.ndarray
    edge_ids: np.ndarray
    incidence_states: np.ndarray
    edge_states: Optional[np.ndarray]

    @property
    def num_incidences(self) -> int:
        return int(self.incidence_states.shape[0])


# ---------------------------------------------------------------------------
# models


@dataclass
class MixerModel:
    f_in: int
    d: int
    d_hidden: int
    T: int
    C: int
    params: dict = field(repr=False)

    kind = "multisetmixer"


@dataclass
class MlpModel:
    f_in: int
    d_hidden: int
    T: int
    C: int
    params: dict = field(repr=False)

    kind = "mlp"


@dataclass
class MlpCBModel:
    f_in: int
    d: int
    d_hidden: int
    T: int
    C: int
    dropout_rate: float
    params: dict = field(repr=False)

    kind = "mlpcb"


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _mixer_param_template(f_in, d, d_hidden, T, C):
    spec = [("proj_W", (f_in, d), f_in), ("proj_b", (d,), f_in)]
    for t in range(T):
        for side in ("edge", "node"):
            spec += [
                (f"layer{t}.{side}_ln_g", (d,), None),
                (f"layer{t}.{side}_ln_b", (d,), None),
                (f"layer{t}.{side}_W1", (d, d_hidden), d),
                (f"layer{t}.{side}_b1", (d_hidden,), d),
                (f"layer{t}.{side}_W2", (d_hidden, d), d_hidden),
                (f"layer{t}.{side}_b2", (d,), d_hidden),
            ]
    spec += [("head_W", (d, C), d), ("head_b", (C,), d)]
    return spec


def _mlp_param_template(f_in, d_hidden, T, C):
    spec = []
    width = f_in
    for t in range(T):
        spec += [(f"layer{t}.W", (width, d_hidden), width), (f"layer{t}.b", (d_hidden,), width)]
        width = d_hidden
    spec += [("head_W", (width, C), width), ("head_b", (C,), width)]
    return spec


def _mlpcb_param_template(f_in, d, d_hidden, T, C):
    spec = [("proj_W", (f_in, d), f_in), ("proj_b", (d,), f_in)]
    for t in range(T):
        spec += [
            (f"layer{t}.ln_g", (d,), None),
            (f"layer{t}.ln_b", (d,), None),
            (f"layer{t}.W1", (d, d_hidden), d),
            (f"layer{t}.b1", (d_hidden,), d),
            (f"layer{t}.W2", (d_hidden, d), d_hidden),
            (f"layer{t}.b2", (d,), d_hidden),
        ]
    spec += [("head_W", (d, C), d), ("head_b", (C,), d)]
    return spec


def _init_params(template, seed: int) -> dict:
    rng = make_rng(seed)
    params = {}
    for name, shape, fan_in in template:
        if fan_in is None:
            # Layer-norm scale starts at 1, shift at 0.
            params[name] = np.ones(shape) if name.endswith("_g") or name.endswith("ln_g") else np.zeros(shape)
        else:
            params[name] = _uniform(rng, shape, fan_in)
    return params


def init_mixer(f_in: int, d: int, d_hidden: int, T: int, C: int, seed: int = 0) -> MixerModel:
    """Seeded fan-in-uniform initialisation.

    Parameter count: f_in*d + d for the projection, per layer
    2*(2d + d*dh + dh + dh*d + d) for the two residual blocks, and
    d*C + C for the head.
    """
    if min(f_in, d, d_hidden, C) < 1 or T < 0:
        raise ValidationError("model dimensions must be positive (T >= 0)")
    return MixerModel(f_in, d, d_hidden, T, C, _init_params(_mixer_param_template(f_in, d, d_hidden, T, C), seed))


def init_mlp(f_in: int, d_hidden: int, T: int, C: int, seed: int = 0) -> MlpModel:
    if min(f_in, d_hidden, C) < 1 or T < 1:
        raise ValidationError("model dimensions must be positive (T >= 1)")
    return MlpModel(f_in, d_hidden, T, C, _init_params(_mlp_param_template(f_in, d_hidden, T, C), seed))


def init_mlp_cb(
    f_in: int, d: int, d_hidden: int, T: int, C: int, seed: int = 0, dropout_rate: float = 0.5
) -> MlpCBModel:
    if min(f_in, d, d_hidden, C) < 1 or T < 0:
        raise ValidationError("model dimensions must be positive (T >= 0)")
    if not 0.0 <= dropout_rate < 1.0:
        raise ValidationError(f"dropout rate must be in [0, 1), got {dropout_rate}")
    return MlpCBModel(
        f_in, d, d_hidden, T, C, dropout_rate, _init_params(_mlpcb_param_template(f_in, d, d_hidden, T, C), seed)
    )


def _param_template(model):
    if model.kind == "multisetmixer":
        return _mixer_param_template(model.f_in, model.d, model.d_hidden, model.T, model.C)
    if model.kind == "mlp":
        return _mlp_param_template(model.f_in, model.d_hidden, model.T, model.C)
    return _mlpcb_param_template(model.f_in, model.d, model.d_hidden, model.T, model.C)


def num_parameters(model) -> int:
    return sum(int(np.prod(p.shape)) for p in model.params.values())


# ---------------------------------------------------------------------------
# multiset-mixer forward/backward


def _check_features(model, X: FeatureMatrix, num_nodes: int) -> np.ndarray:
    if X.num_rows != num_nodes:
        raise ValidationError(f"feature rows ({X.num_rows}) != num_nodes ({num_nodes})")
    if X.num_cols != model.f_in:
        raise ValidationError(f"feature width ({X.num_cols}) != model f_in ({model.f_in})")
    return X.values


def _mixer_forward_core(model: MixerModel, X: np.ndarray, s: _Structure):
    P = model.params
    x0 = X @ P["proj_W"] + P["proj_b"]
    x = x0[s.inc_node]
    layers = []
    z = None
    for t in range(model.T):
        m = _segment_mean(x, s)
        ln1, c1 = _layernorm(m, P[f"layer{t}.edge_ln_g"], P[f"layer{t}.edge_ln_b"])
        mlp1, cm1 = _mlp_forward(
            ln1, P[f"layer{t}.edge_W1"], P[f"layer{t}.edge_b1"], P[f"layer{t}.edge_W2"], P[f"layer{t}.edge_b2"]
        )
        z = m + mlp1
        ln2, c2 = _layernorm(x, P[f"layer{t}.node_ln_g"], P[f"layer{t}.node_ln_b"])
        mlp2, cm2 = _mlp_forward(
            ln2, P[f"layer{t}.node_W1"], P[f"layer{t}.node_b1"], P[f"layer{t}.node_W2"], P[f"layer{t}.node_b2"]
        )
        x_next = x + mlp2 + z[s.inc_edge]
        layers.append((c1, cm1, c2, cm2))
        x = x_next
    if z is None:
        # No layers ran; report the pooled initial states as edge states.
        z = _segment_mean(x, s)
    readout = np.empty((s.num_nodes, model.d))
    for v in range(s.num_nodes):
        idx = s.node_slices[v]
        readout[v] = x[idx].mean(axis=0) if len(idx) else x0[v]
    logits = readout @ P["head_W"] + P["head_b"]
    cache = (x0, x, layers, readout, s, z)
    return logits, cache


def _mixer_backward_core(model: MixerModel, X: np.ndarray, dlogits: np.ndarray, cache):
    P = model.params
    x0, x_final, layers, readout, s, _ = cache
    grads = {k: np.zeros_like(v) for k, v in P.items()}
    grads["head_W"] = readout.T @ dlogits
    grads["head_b"] = dlogits.sum(axis=0)
    dreadout = dlogits @ P["head_W"].T
    dx = np.zeros((len(s.inc_node), model.d))
    dx0 = np.zeros_like(x0)
    for v in range(s.num_nodes):
        idx = s.node_slices[v]
        if len(idx):
            dx[idx] += dreadout[v] / len(idx)
        else:
            dx0[v] += dreadout[v]
    for t in reversed(range(model.T)):
        c1, cm1, c2, cm2 = layers[t]
        # z was broadcast to every incidence of its edge.
        dz = _segment_sum(dx, s)
        dmlp2 = dx
        dln2, dW1n, db1n, dW2n, db2n = _mlp_backward(
            dmlp2, cm2, P[f"layer{t}.node_W1"], P[f"layer{t}.node_W2"]
        )
        grads[f"layer{t}.node_W1"] += dW1n
        grads[f"layer{t}.node_b1"] += db1n
        grads[f"layer{t}.node_W2"] += dW2n
        grads[f"layer{t}.node_b2"] += db2n
        dx_ln, dgn, dbn = _layernorm_backward(dln2, c2, P[f"layer{t}.node_ln_g"])
        grads[f"layer{t}.node_ln_g"] += dgn
        grads[f"layer{t}.node_ln_b"] += dbn
        dm = dz.copy()
        dln1, dW1e, db1e, dW2e, db2e = _mlp_backward(
            dz, cm1, P[f"layer{t}.edge_W1"], P[f"layer{t}.edge_W2"]
        )
        grads[f"layer{t}.edge_W1"] += dW1e
        grads[f"layer{t}.edge_b1"] += db1e
        grads[f"layer{t}.edge_W2"] += dW2e
        grads[f"layer{t}.edge_b2"] += db2e
        dm_ln, dge, dbe = _layernorm_backward(dln1, c1, P[f"layer{t}.edge_ln_g"])
        grads[f"layer{t}.edge_ln_g"] += dge
        grads[f"layer{t}.edge_ln_b"] += dbe
        dm += dm_ln
        dx = dx + dx_ln + (dm / s.edge_sizes[:, None])[s.inc_edge]
    np.add.at(dx0, s.inc_node, dx)
    grads["proj_W"] = X.T @ dx0
    grads["proj_b"] = dx0.sum(axis=0)
    return grads


def mixer_forward(
    model: MixerModel,
    h: Hypergraph,
    X: FeatureMatrix,
    batch: Optional[MiniBatch] = None,
) -> tuple[np.ndarray, RepresentationState]:
    """Logits for every node plus the final hyperedge-dependent states.

    With a mini-batch the pooling and readout run only over the sampled,
    mask-true incidences; nodes with no incidence (isolated, or absent
    from the batch) read out their projected input features.
    """
    Xv = _check_features(model, X, h.num_nodes)
    s = _build_batch_structure(h, batch) if batch is not None else _build_structure(h)
    logits, cache = _mixer_forward_core(model, Xv, s)
    _, x_final, _, _, _, z = cache
    state = RepresentationState(
        node_ids=s.inc_node.copy(),
        edge_ids=s.edge_ids[s.inc_edge].copy() if len(s.inc_edge) else s.inc_edge.copy(),
        incidence_states=x_final.copy(),
        edge_states=z.copy(),
    )
    return logits, state


def mixer_logits(model: MixerModel, h, X, batch=None) -> np.ndarray:
    Xv = _check_features(model, X, h.num_nodes)
    s = _build_batch_structure(h, batch) if batch is not None else _build_structure(h)
    return _mixer_forward_core(model, Xv, s)[0]


# ---------------------------------------------------------------------------
# baselines


def _mlp_forward_core(model: MlpModel, X: np.ndarray):
    P = model.params
    x = X
    caches = []
    for t in range(model.T):
        h = x @ P[f"layer{t}.W"] + P[f"layer{t}.b"]
        a, tt = _gelu(h)
        caches.append((x, h, tt))
        x = a
    logits = x @ P["head_W"] + P["head_b"]
    return logits, (caches, x)


def mlp_baseline_forward(model: MlpModel, X: FeatureMatrix) -> np.ndarray:
    """Plain per-node MLP; connectivity is ignored entirely."""
    if X.num_cols != model.f_in:
        raise ValidationError(f"feature width ({X.num_cols}) != model f_in ({model.f_in})")
    return _mlp_forward_core(model, X.values)[0]


def _mlp_backward_core(model: MlpModel, dlogits: np.ndarray, cache):
    P = model.params
    caches, x_last = cache
    grads = {k: np.zeros_like(v) for k, v in P.items()}
    grads["head_W"] = x_last.T @ dlogits
    grads["head_b"] = dlogits.sum(axis=0)
    da = dlogits @ P["head_W"].T
    for t in reversed(range(model.T)):
        x, h, tt = caches[t]
        dh = _gelu_backward(da, h, tt)
        grads[f"layer{t}.W"] += x.T @ dh
        grads[f"layer{t}.b"] += dh.sum(axis=0)
        da = dh @ P[f"layer{t}.W"].T
    return grads


def _dropout_masks(model: MlpCBModel, num_edges: int, seed: int) -> list:
    """Per-layer, per-hyperedge keep masks over both weight matrices."""
    rng = make_rng(seed)
    rate = model.dropout_rate
    masks = []
    for t in range(model.T):
        w1 = model.params[f"layer{t}.W1"]
        w2 = model.params[f"layer{t}.W2"]
        layer = []
        for _ in range(num_edges):
            layer.append(
                (
                    (rng.random(w1.shape) >= rate).astype(np.float64),
                    (rng.random(w2.shape) >= rate).astype(np.float64),
                )
            )
        masks.append(layer)
    return masks


def _mlpcb_forward_core(
    model: MlpCBModel, X: np.ndarray, s: _Structure, training: bool, dropout_seed: int
):
    P = model.params
    x0 = X @ P["proj_W"] + P["proj_b"]
    x = x0[s.inc_node]
    use_dropout = training and model.dropout_rate > 0.0 and model.T > 0
    masks = _dropout_masks(model, len(s.edge_sizes), dropout_seed) if use_dropout else None
    keep = 1.0 - model.dropout_rate
    layers = []
    for t in range(model.T):
        ln, c = _layernorm(x, P[f"layer{t}.ln_g"], P[f"layer{t}.ln_b"])
        if masks is None:
            out, cm = _mlp_forward(ln, P[f"layer{t}.W1"], P[f"layer{t}.b1"], P[f"layer{t}.W2"], P[f"layer{t}.b2"])
            layers.append((c, cm, None))
        else:
            out = np.empty_like(x)
            cms = []
            for r in range(len(s.edge_sizes)):
                lo, hi = s.edge_ptr[r], s.edge_ptr[r + 1]
                m1, m2 = masks[t][r]
                o, cm = _mlp_forward(
                    ln[lo:hi],
                    P[f"layer{t}.W1"] * m1 / keep,
                    P[f"layer{t}.b1"],
                    P[f"layer{t}.W2"] * m2 / keep,
                    P[f"layer{t}.b2"],
                )
                out[lo:hi] = o
                cms.append(cm)
            layers.append((c, cms, masks[t]))
        x = x + out
    readout = np.empty((s.num_nodes, model.d))
    for v in range(s.num_nodes):
        idx = s.node_slices[v]
        readout[v] = x[idx].mean(axis=0) if len(idx) else x0[v]
    logits = readout @ P["head_W"] + P["head_b"]
    return logits, (x0, x, layers, readout, s, keep)


def _mlpcb_backward_core(model: MlpCBModel, X: np.ndarray, dlogits: np.ndarray, cache):
    P = model.params
    x0, x_final, layers, readout, s, keep = cache
    grads = {k: np.zeros_like(v) for k, v in P.items()}
    grads["head_W"] = readout.T @ dlogits
    grads["head_b"] = dlogits.sum(axis=0)
    dreadout = dlogits @ P["head_W"].T
    dx = np.zeros((len(s.inc_node), model.d))
    dx0 = np.zeros_like(x0)
    for v in range(s.num_nodes):
        idx = s.node_slices[v]
        if len(idx):
            dx[idx] += dreadout[v] / len(idx)
        else:
            dx0[v] += dreadout[v]
    for t in reversed(range(model.T)):
        c, cm, mask_layer = layers[t]
        if mask_layer is None:
            dln, dW1, db1, dW2, db2 = _mlp_backward(dx, cm, P[f"layer{t}.W1"], P[f"layer{t}.W2"])
            grads[f"layer{t}.W1"] += dW1
            grads[f"layer{t}.b1"] += db1
            grads[f"layer{t}.W2"] += dW2
            grads[f"layer{t}.b2"] += db2
        else:
            dln = np.empty_like(dx)
            for r in range(len(s.edge_sizes)):
                lo, hi = s.edge_ptr[r], s.edge_ptr[r + 1]
                m1, m2 = mask_layer[r]
                dl, dW1, db1, dW2, db2 = _mlp_backward(
                    dx[lo:hi], cm[r], P[f"layer{t}.W1"] * m1 / keep, P[f"layer{t}.W2"] * m2 / keep
                )
                dln[lo:hi] = dl
                grads[f"layer{t}.W1"] += dW1 * m1 / keep
                grads[f"layer{t}.b1"] += db1
                grads[f"layer{t}.W2"] += dW2 * m2 / keep
                grads[f"layer{t}.b2"] += db2
        dx_ln, dg, db = _layernorm_backward(dln, c, P[f"layer{t}.ln_g"])
        grads[f"layer{t}.ln_g"] += dg
        grads[f"layer{t}.ln_b"] += db
        dx = dx + dx_ln
    np.add.at(dx0, s.inc_node, dx)
    grads["proj_W"] = X.T @ dx0
    grads["proj_b"] = dx0.sum(axis=0)
    return grads


def mlp_cb_forward(
    model: MlpCBModel,
    h: Hypergraph,
    X: FeatureMatrix,
    batch: Optional[MiniBatch] = None,
    training: bool = False,
    dropout_seed: int = 0,
) -> np.ndarray:
    """Connectivity-batched MLP logits.

    During training an independent weight-dropout mask per hyperedge makes
    the incidence copies of a node diverge; at evaluation dropout is off,
    all copies coincide, and the readout mean is exact.
    """
    Xv = _check_features(model, X, h.num_nodes)
    s = _build_batch_structure(h, batch) if batch is not None else _build_structure(h)
    return _mlpcb_forward_core(model, Xv, s, training, dropout_seed)[0]


# ---------------------------------------------------------------------------
# loss / gradients / training


def _forward_with_cache(model, h, X, batch, training, dropout_seed):
    Xv = _check_features(model, X, h.num_nodes) if model.kind != "mlp" else X.values
    if model.kind == "mlp":
        if X.num_cols != model.f_in:
            raise ValidationError(f"feature width ({X.num_cols}) != model f_in ({model.f_in})")
        return _mlp_forward_core(model, Xv)
    s = _build_batch_structure(h, batch) if batch is not None else _build_structure(h)
    if model.kind == "multisetmixer":
        return _mixer_forward_core(model, Xv, s)
    return _mlpcb_forward_core(model, Xv, s, training, dropout_seed)


def _backward(model, X, dlogits, cache):
    if model.kind == "mlp":
        return _mlp_backward_core(model, dlogits, cache)
    if model.kind == "multisetmixer":
        return _mixer_backward_core(model, X.values, dlogits, cache)
    return _mlpcb_backward_core(model, X.values, dlogits, cache)


def forward(model, h, X, batch=None, training=False, dropout_seed=0) -> np.ndarray:
    """Model-dispatching forward pass returning per-node logits."""
    return _forward_with_cache(model, h, X, batch, training, dropout_seed)[0]


def _softmax_ce(logits: np.ndarray, y: np.ndarray, rows: np.ndarray):
    sel = logits[rows]
    shifted = sel - sel.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=1, keepdims=True)
    nll = -np.log(probs[np.arange(len(rows)), y[rows]])
    loss = float(nll.mean())
    dlogits = np.zeros_like(logits)
    dsel = probs.copy()
    dsel[np.arange(len(rows)), y[rows]] -= 1.0
    dlogits[rows] = dsel / len(rows)
    return loss, dlogits


def loss_and_grad(
    model,
    h: Hypergraph,
    X: FeatureMatrix,
    labels: LabelAssignment,
    train_mask: np.ndarray,
    batch: Optional[MiniBatch] = None,
    weight_decay: float = 0.0,
    training: bool = True,
    dropout_seed: int = 0,
):
    """Mean softmax cross-entropy over masked nodes plus an L2 penalty.

    Returns (loss, grads) with one gradient array per parameter.  With a
    mini-batch the loss is restricted to masked nodes that actually appear
    in the batch; the penalty is 0.5 * weight_decay * sum of squares over
    every parameter tensor.
    """
    train_mask = np.asarray(train_mask, dtype=bool)
    rows = np.flatnonzero(train_mask)
    if batch is not None and model.kind != "mlp":
        covered = np.unique(batch.nodes[batch.mask])
        in_batch = np.zeros(h.num_nodes, dtype=bool)
        in_batch[covered] = True
        rows = np.flatnonzero(train_mask & in_batch)
    if len(rows) == 0:
        raise ValidationError("training mask selects no (covered) node")
    logits, cache = _forward_with_cache(model, h, X, batch, training, dropout_seed)
    loss, dlogits = _softmax_ce(logits, labels.as_array(), rows)
    grads = _backward(model, X, dlogits, cache)
    if weight_decay:
        for name, p in model.params.items():
            loss += 0.5 * weight_decay * float((p**2).sum())
            grads[name] = grads[name] + weight_decay * p
    return loss, grads


def evaluate(model, h, X, labels, mask) -> float:
    """Argmax accuracy (percent) over the masked nodes; ties break to the
    lowest class id."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValidationError("evaluation mask selects no node")
    logits = forward(model, h, X)
    pred = logits.argmax(axis=1)
    y = labels.as_array()
    return 100.0 * float((pred[mask] == y[mask]).mean())


@dataclass(frozen=True)
class Split:
    """Disjoint boolean node masks for train/validation/test."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.train, dtype=bool)
        v = np.asarray(self.val, dtype=bool)
        s = np.asarray(self.test, dtype=bool)
        if (t & v).any() or (t & s).any() or (v & s).any():
            raise ValidationError("split masks must be disjoint")
        if not t.any():
            raise ValidationError("train mask is empty")
        object.__setattr__(self, "train", t)
        object.__setattr__(self, "val", v)
        object.__setattr__(self, "test", s)


def make_split(
    num_nodes: int, seed: int, train_frac: float = 0.5, val_frac: float = 0.25
) -> Split:
    """Seeded random node split: train_frac / val_frac / remainder."""
    if train_frac <= 0 or val_frac < 0 or train_frac + val_frac >= 1.0 + 1e-12:
        raise ValidationError("fractions must satisfy 0 < train, 0 <= val, train+val <= 1")
    order = make_rng(seed).permutation(num_nodes)
    n_train = max(1, int(round(train_frac * num_nodes)))
    n_val = int(round(val_frac * num_nodes))
    train = np.zeros(num_nodes, dtype=bool)
    val = np.zeros(num_nodes, dtype=bool)
    test = np.zeros(num_nodes, dtype=bool)
    train[order[:n_train]] = True
    val[order[n_train : n_train + n_val]] = True
    test[order[n_train + n_val :]] = True
    return Split(train, val, test)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    lr: float = 0.001
    weight_decay: float = 0.0
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    sampler: Optional[SamplerConfig] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ValidationError(f"learning rate must be > 0, got {self.lr}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainReport:
    loss_curve: list
    val_curve: list
    best_epoch: int
    best_val_acc: float
    test_acc: float

    def as_dict(self) -> dict:
        return {
            "loss_curve": [float(x) for x in self.loss_curve],
            "val_curve": [float(x) for x in self.val_curve],
            "best_epoch": self.best_epoch,
            "best_val_acc": self.best_val_acc,
            "test_acc": self.test_acc,
        }


class TrainingDiverged(ValidationError):
    """Loss became non-finite; carries the 1-based epoch index."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}")
        self.epoch = epoch


class _Adam:
    def __init__(self, params: dict, cfg: TrainConfig):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0
        self.cfg = cfg

    def step(self, params: dict, grads: dict):
        cfg = self.cfg
        self.t += 1
        b1t = 1.0 - cfg.beta1**self.t
        b2t = 1.0 - cfg.beta2**self.t
        for k in params:
            g = grads[k]
            self.m[k] = cfg.beta1 * self.m[k] + (1 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1 - cfg.beta2) * g**2
            params[k] -= cfg.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + cfg.eps)


class _Sgd:
    def __init__(self, params: dict, cfg: TrainConfig):
        self.cfg = cfg

    def step(self, params: dict, grads: dict):
        for k in params:
            params[k] -= self.cfg.lr * grads[k]


def train(
    model,
    h: Hypergraph,
    X: FeatureMatrix,
    labels: LabelAssignment,
    split: Split,
    cfg: TrainConfig,
) -> TrainReport:
    """Gradient training with validation-based snapshot selection.

    Without a sampler every epoch is one full-graph step; with one, each
    epoch consumes the batches of one sampler epoch (a partition of the
    hyperedge list).  The parameter snapshot with the best validation
    accuracy (earliest on ties) is restored into ``model`` at the end and
    used for the test score.  Fully deterministic for a fixed config.
    """
    opt = _Adam(model.params, cfg) if cfg.optimizer == "adam" else _Sgd(model.params, cfg)
    rng = make_rng(cfg.seed, 1)
    loss_curve: list[float] = []
    val_curve: list[float] = []
    best = (-1.0, 0, None)  # (val acc, epoch, params snapshot)
    step_idx = 0
    for epoch in range(1, cfg.epochs + 1):
        losses = []
        if cfg.sampler is None:
            batches = [None]
        else:
            batches = iterate_epoch(h, cfg.sampler, rng)
        for batch in batches:
            step_idx += 1
            try:
                loss, grads = loss_and_grad(
                    model,
                    h,
                    X,
                    labels,
                    split.train,
                    batch=batch,
                    weight_decay=cfg.weight_decay,
                    training=True,
                    dropout_seed=cfg.seed + step_idx,
                )
            except ValidationError:
                # Batch covered no training node; skip the step.
                if batch is not None:
                    continue
                raise
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, loss)
            opt.step(model.params, grads)
            losses.append(loss)
        if not losses:
            raise ValidationError(f"epoch {epoch} produced no training step")
        loss_curve.append(float(np.mean(losses)))
        val_acc = evaluate(model, h, X, labels, split.val) if split.val.any() else float("nan")
        val_curve.append(val_acc)
        if split.val.any() and val_acc > best[0]:
            best = (val_acc, epoch, copy.deepcopy(model.params))
    if best[2] is not None:
        model.params = best[2]
        best_epoch, best_val = best[1], best[0]
    else:
        best_epoch, best_val = cfg.epochs, float("nan")
    test_acc = evaluate(model, h, X, labels, split.test) if split.test.any() else float("nan")
    return TrainReport(
        loss_curve=loss_curve,
        val_curve=val_curve,
        best_epoch=best_epoch,
        best_val_acc=best_val,
        test_acc=test_acc,
    )


# ---------------------------------------------------------------------------
# checkpoints

_MAGIC = b"HMXC"
_KIND_CODES = {"multisetmixer": 0, "mlp": 1, "mlpcb": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def save_checkpoint(model, path) -> None:
    """Flat binary layout: magic, version byte, kind byte, five uint32 dims
    (f_in, d, d_hidden, T, C; d = 0 for the plain MLP), one float64 dropout
    rate, then every parameter tensor row-major float64 in canonical order."""
    d = getattr(model, "d", 0)
    rate = getattr(model, "dropout_rate", 0.0)
    header = _MAGIC + struct.pack(
        "<BB5Id", 1, _KIND_CODES[model.kind], model.f_in, d, model.d_hidden, model.T, model.C, rate
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for name, _, _ in _param_template(model):
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ValidationError(f"{path}: not a checkpoint file")
    version, kind_code, f_in, d, d_hidden, T, C, rate = struct.unpack("<BB5Id", blob[4 : 4 + 30])
    if version != 1:
        raise ValidationError(f"{path}: unsupported checkpoint version {version}")
    kind = _KIND_NAMES.get(kind_code)
    if kind is None:
        raise ValidationError(f"{path}: unknown model kind code {kind_code}")
    if kind == "multisetmixer":
        model = init_mixer(f_in, d, d_hidden, T, C, seed=0)
    elif kind == "mlp":
        model = init_mlp(f_in, d_hidden, T, C, seed=0)
    else:
        model = init_mlp_cb(f_in, d, d_hidden, T, C, seed=0, dropout_rate=rate)
    offset = 4 + 30
    for name, shape, _ in _param_template(model):
        count = int(np.prod(shape))
        raw = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        model.params[name] = raw.reshape(shape).copy()
        offset += count * 8
    if offset != len(blob):
        raise ValidationError(f"{path}: trailing bytes in checkpoint")
    return model
