"""Command-line interface.

One subcommand per analysis; every subcommand is a thin shell around the
corresponding library call.  Reports go to standard output (or ``--out``)
as JSON or CSV; ``--plot DIR`` additionally renders matplotlib figures
next to the delimited output.  Exit codes: 0 success, 1 data/validation
error, 2 usage error.  Diagnostics go to standard error only.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from hypermix import homophily as hmod
from hypermix import mixer as mmod
from hypermix import reports
from hypermix import rewiring as rmod
from hypermix import sampling as smod
from hypermix.hypergraph import (
    Hypergraph,
    HypergraphError,
    ValidationError,
    compute_stats,
    load_hypergraph,
    save_hypergraph,
)

DEFAULT_MU_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0)


def _load(args, need_labels=False, need_features=False):
    loaded = load_hypergraph(args.input, getattr(args, "fmt", None))
    if need_labels and loaded.labels is None:
        raise ValidationError(f"{args.input}: labels are required by this command")
    if need_features and loaded.features is None:
        raise ValidationError(f"{args.input}: features are required by this command")
    return loaded


def _emit_report(args, json_obj, csv_rows, csv_columns=None):
    if args.format == "json":
        reports.emit(reports.render_json(json_obj), args.out)
    else:
        reports.emit(reports.render_csv(csv_rows, csv_columns), args.out)


def _plot_dir(args):
    if args.plot is None:
        return None
    path = Path(args.plot)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_stats(args) -> int:
    loaded = _load(args)
    report = compute_stats(loaded.hypergraph, loaded.labels)
    data = report.as_dict()
    rows = []
    for key, value in data.items():
        if key == "degree_histogram":
            for bucket, count in value.items():
                rows.append({"field": f"degree_histogram[{bucket}]", "value": count})
        else:
            rows.append({"field": key, "value": value})
    _emit_report(args, data, rows, ["field", "value"])
    return 0


def cmd_homophily(args) -> int:
    loaded = _load(args, need_labels=True)
    trace = hmod.mp_homophily(loaded.hypergraph, loaded.labels, args.levels, exact=args.exact)
    node_scores = [
        [None if s is None else float(s) for s in level] for level in trace.node_scores
    ]
    data = {
        "levels": trace.levels,
        "num_classes": trace.num_classes,
        "node_scores": node_scores,
        "mean": [
            float(trace.mean_node_score(t)) for t in range(trace.levels + 1)
        ],
        "per_class_mean": [
            [None if m is None else float(m) for m in trace.per_class_mean(loaded.labels, t)]
            for t in range(trace.levels + 1)
        ],
    }
    if trace.levels >= 1:
        data["delta_grid"] = {
            "t": 1,
            "mu": list(DEFAULT_MU_GRID),
            "value": [
                hmod.delta_homophily(trace, t=1, mu=mu, policy=args.policy).value
                for mu in DEFAULT_MU_GRID
            ],
            "isolated_policy": args.policy,
        }
    rows = [
        {"node": v, "level": t, "score": node_scores[t][v]}
        for t in range(trace.levels + 1)
        for v in range(loaded.hypergraph.num_nodes)
    ]
    _emit_report(args, data, rows, ["node", "level", "score"])
    figdir = _plot_dir(args)
    if figdir is not None:
        from hypermix import plotting

        plotting.node_homophily_figure(
            {t: node_scores[t] for t in range(trace.levels + 1)}, figdir / "node_homophily.png"
        )
        if trace.levels >= 1:
            plotting.delta_grid_figure(
                data["delta_grid"]["mu"], data["delta_grid"]["value"], 1, figdir / "delta_grid.png"
            )
    return 0


def cmd_delta(args) -> int:
    loaded = _load(args, need_labels=True)
    mus = args.mu if args.mu else list(DEFAULT_MU_GRID)
    trace = hmod.mp_homophily(loaded.hypergraph, loaded.labels, args.t)
    table = [hmod.delta_homophily(trace, t=args.t, mu=mu, policy=args.policy) for mu in mus]
    data = {
        "t": args.t,
        "isolated_policy": args.policy,
        "mu": [r.mu for r in table],
        "value": [r.value for r in table],
    }
    rows = [{"t": r.t, "mu": r.mu, "value": r.value, "policy": r.isolated_policy} for r in table]
    _emit_report(args, data, rows, ["t", "mu", "value", "policy"])
    figdir = _plot_dir(args)
    if figdir is not None:
        from hypermix import plotting

        plotting.delta_grid_figure(data["mu"], data["value"], args.t, figdir / "delta_grid.png")
    return 0


def cmd_ce(args) -> int:
    loaded = _load(args, need_labels=True)
    value = hmod.ce_homophily(loaded.hypergraph, loaded.labels)
    _emit_report(args, {"ce_homophily": value}, [{"field": "ce_homophily", "value": value}], ["field", "value"])
    return 0


def cmd_kuniform(args) -> int:
    loaded = _load(args, need_labels=True)
    report = hmod.kuniform_scores(loaded.hypergraph, loaded.labels, args.k)
    data = {
        "k": report.k,
        "num_classes": report.num_classes,
        "class_counts": report.class_counts,
        "participating": report.participating,
        "affinity": report.affinity,
        "baseline": report.baseline,
        "ratio": report.ratio,
        "bias": report.bias,
    }
    rows = []
    for c in range(report.num_classes):
        if not report.participating[c]:
            continue
        for t in range(1, report.k + 1):
            rows.append(
                {
                    "class": c,
                    "t": t,
                    "affinity": report.affinity[c][t - 1],
                    "baseline": None if report.baseline[c] is None else report.baseline[c][t - 1],
                    "ratio": None if report.ratio[c] is None else report.ratio[c][t - 1],
                    "bias": None if report.bias[c] is None else report.bias[c][t - 1],
                }
            )
    _emit_report(args, data, rows, ["class", "t", "affinity", "baseline", "ratio", "bias"])
    figdir = _plot_dir(args)
    if figdir is not None and not report.empty:
        from hypermix import plotting

        plotting.kuniform_figure(report, figdir / f"kuniform_{report.k}.png")
    return 0


def cmd_sample(args) -> int:
    loaded = _load(args, need_labels=True)
    cfg = smod.SamplerConfig(B=args.B, L=args.L, mode=args.mode, seed=args.seed)
    report = smod.class_shift(loaded.hypergraph, loaded.labels, cfg, args.batches)
    data = report.as_dict()
    rows = [
        {
            "class": c,
            "original": data["original"][c],
            "step1_only": data["step1_only"][c],
            "step1_and_2": data["step1_and_2"][c],
        }
        for c in range(report.num_classes)
    ]
    _emit_report(args, data, rows, ["class", "original", "step1_only", "step1_and_2"])
    if args.batch_csv:
        rng = smod.make_rng(cfg.seed)
        cells = []
        for b in range(args.batches):
            batch = smod.sample_batch(loaded.hypergraph, cfg, rng)
            for i, eid in enumerate(batch.edge_ids):
                for j in range(batch.nodes.shape[1]):
                    cells.append(
                        {
                            "batch": b,
                            "row": i,
                            "col": j,
                            "edge": eid,
                            "node": int(batch.nodes[i, j]),
                            "real": bool(batch.mask[i, j]),
                        }
                    )
        reports.emit(reports.render_csv(cells, ["batch", "row", "col", "edge", "node", "real"]), args.batch_csv)
    figdir = _plot_dir(args)
    if figdir is not None:
        from hypermix import plotting

        plotting.class_shift_figure(report, figdir / "class_shift.png")
    return 0


def cmd_sampling_analysis(args) -> int:
    figdir = _plot_dir(args)
    if args.analysis == "pmf":
        epochs = list(range(1, args.epochs + 1))
        pmf = [smod.first_sample_pmf(args.n, args.c, T) for T in epochs]
        empirical = None
        if args.trials:
            draws = smod.simulate_first_sample_epochs(
                args.n, args.c, args.trials, smod.make_rng(args.seed)
            )
            empirical = [float((draws == T).mean()) for T in epochs]
        data = {
            "analysis": "pmf",
            "n": args.n,
            "c": args.c,
            "expected_epoch": smod.expected_first_sample_epoch(args.n, args.c),
            "epoch": epochs,
            "pmf": pmf,
            "empirical": empirical,
        }
        rows = [
            {"epoch": T, "pmf": pmf[i], "empirical": None if empirical is None else empirical[i]}
            for i, T in enumerate(epochs)
        ]
        _emit_report(args, data, rows, ["epoch", "pmf", "empirical"])
        if figdir is not None:
            from hypermix import plotting

            plotting.pmf_figure(epochs, pmf, empirical, figdir / "first_sample_pmf.png")
        return 0
    if args.analysis == "bound":
        sizes = [int(s) for s in args.sizes.split(",") if s]
        report = smod.max_wait_bound(sizes, args.c, trials=args.trials, rng=smod.make_rng(args.seed))
        data = {
            "analysis": "bound",
            "sizes": list(report.sizes),
            "c": report.c,
            "bound": report.bound,
            "per_edge_expectation": list(report.per_edge_expectation),
            "monte_carlo": report.monte_carlo,
        }
        rows = [
            {"field": "bound", "value": report.bound},
            {"field": "monte_carlo", "value": report.monte_carlo},
        ]
        _emit_report(args, data, rows, ["field", "value"])
        return 0
    # node-seen
    loaded = _load(args)
    report = smod.node_seen_probability(
        loaded.hypergraph, args.node, args.L, trials=args.trials, rng=smod.make_rng(args.seed)
    )
    data = {
        "analysis": "node-seen",
        "node": report.node,
        "degree": report.degree,
        "isolated": report.isolated,
        "exact": report.exact,
        "shifted_ratio_variant": report.shifted_ratio_variant,
        "monte_carlo": report.monte_carlo,
    }
    rows = [{"field": k, "value": v} for k, v in data.items() if k != "analysis"]
    _emit_report(args, data, rows, ["field", "value"])
    return 0


def cmd_rewire(args) -> int:
    loaded = _load(
        args,
        need_labels=args.strategy == "label-split",
        need_features=args.strategy == "kmeans-split",
    )
    h = loaded.hypergraph
    if args.strategy == "trimming":
        out = rmod.trim(h, args.fraction)
    elif args.strategy == "retention":
        out = rmod.retain(h, args.fraction)
    elif args.strategy == "random-drop":
        out = rmod.random_drop(h, args.fraction, args.seed)
    elif args.strategy == "label-split":
        out = rmod.label_split(h, loaded.labels, drop_singletons=args.drop_singletons)
    else:
        if loaded.labels is None and args.num_classes is None:
            raise ValidationError("kmeans-split needs labels or an explicit --num-classes")
        C = args.num_classes if args.num_classes is not None else loaded.labels.num_classes
        out = rmod.kmeans_split(
            h,
            loaded.features,
            C,
            params=rmod.KMeansParams(
                restarts=args.restarts, max_iters=args.max_iters, tol=args.tol
            ),
            seed=args.seed,
            min_split_size=args.min_split_size,
        )
    save_hypergraph(out, args.output, loaded.labels, loaded.features)
    sidecar = {
        "strategy": args.strategy,
        "edges_before": h.num_edges,
        "edges_after": out.num_edges,
        "sum_sizes_before": h.sum_of_sizes(),
        "sum_sizes_after": out.sum_of_sizes(),
    }
    if loaded.labels is not None:
        for tag, graph in (("before", h), ("after", out)):
            trace = hmod.mp_homophily(graph, loaded.labels, 0)
            defined = [s for s in trace.node_scores[0] if s is not None]
            sidecar[f"mean_h0_{tag}"] = (sum(defined) / len(defined)) if defined else None
            sidecar[f"ce_homophily_{tag}"] = hmod.ce_homophily(graph, loaded.labels)
    rows = [{"field": k, "value": v} for k, v in sidecar.items()]
    _emit_report(args, sidecar, rows, ["field", "value"])
    return 0


def cmd_train(args) -> int:
    loaded = _load(args, need_labels=True, need_features=True)
    h, labels, X = loaded.hypergraph, loaded.labels, loaded.features
    f_in, C = X.num_cols, labels.num_classes
    if args.model == "multisetmixer":
        model = mmod.init_mixer(f_in, args.dim, args.hidden, args.layers, C, seed=args.seed)
    elif args.model == "mlp":
        model = mmod.init_mlp(f_in, args.hidden, args.layers, C, seed=args.seed)
    else:
        model = mmod.init_mlp_cb(
            f_in, args.dim, args.hidden, args.layers, C, seed=args.seed, dropout_rate=args.dropout
        )
    sampler = None
    if args.B is not None or args.L is not None:
        if args.L is None:
            raise ValidationError("--B requires --L")
        sampler = smod.SamplerConfig(
            B=args.B if args.B is not None else 0, L=args.L, mode=args.mode, seed=args.seed
        )
    split = mmod.make_split(
        h.num_nodes,
        args.split_seed if args.split_seed is not None else args.seed,
        args.train_frac,
        args.val_frac,
    )
    cfg = mmod.TrainConfig(
        epochs=args.epochs,
        lr=args.lr,
        weight_decay=args.wd,
        optimizer=args.optimizer,
        seed=args.seed,
        sampler=sampler,
    )
    report = mmod.train(model, h, X, labels, split, cfg)
    if args.checkpoint:
        mmod.save_checkpoint(model, args.checkpoint)
    data = report.as_dict()
    data["model"] = args.model
    data["num_parameters"] = mmod.num_parameters(model)
    rows = [
        {"epoch": i + 1, "loss": report.loss_curve[i], "val_acc": report.val_curve[i]}
        for i in range(len(report.loss_curve))
    ]
    _emit_report(args, data, rows, ["epoch", "loss", "val_acc"])
    figdir = _plot_dir(args)
    if figdir is not None:
        from hypermix import plotting

        plotting.loss_curve_figure(report, figdir / "training.png")
    return 0


def cmd_eval(args) -> int:
    loaded = _load(args, need_labels=True, need_features=True)
    model = mmod.load_checkpoint(args.checkpoint)
    if args.split == "all":
        mask = np.ones(loaded.hypergraph.num_nodes, dtype=bool)
    else:
        split = mmod.make_split(
            loaded.hypergraph.num_nodes, args.split_seed, args.train_frac, args.val_frac
        )
        mask = getattr(split, args.split)
    acc = mmod.evaluate(model, loaded.hypergraph, loaded.features, loaded.labels, mask)
    data = {"accuracy": acc, "split": args.split, "num_nodes": int(mask.sum()), "model": model.kind}
    _emit_report(args, data, [{"field": k, "value": v} for k, v in data.items()], ["field", "value"])
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_io_flags(p, needs_input=True):
    if needs_input:
        p.add_argument("--in", dest="input", required=True, help="input dataset path")
        p.add_argument(
            "--in-format",
            dest="fmt",
            choices=["json", "edge-list"],
            default=None,
            help="input format (default: inferred from extension)",
        )
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--plot", default=None, metavar="DIR", help="also render figures into DIR")
    p.add_argument("--quiet", action="store_true", help="suppress progress diagnostics")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypermix",
        description="Hypergraph homophily, sampling, rewiring and mixer-training toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics report")
    _add_io_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("homophily", help="message-passing homophily trace")
    _add_io_flags(p)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.add_argument("--policy", choices=["count-as-stable", "exclude"], default="count-as-stable")
    p.set_defaults(func=cmd_homophily)

    p = sub.add_parser("delta", help="stable-node fraction over a threshold grid")
    _add_io_flags(p)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--mu", type=float, action="append", default=None)
    p.add_argument("--policy", choices=["count-as-stable", "exclude"], default="count-as-stable")
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("ce", help="clique-expansion node homophily")
    _add_io_flags(p)
    p.set_defaults(func=cmd_ce)

    p = sub.add_parser("kuniform", help="affinity/baseline scores over size-k hyperedges")
    _add_io_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_kuniform)

    p = sub.add_parser("sample", help="mini-batch class-distribution shift")
    _add_io_flags(p)
    p.add_argument("--B", type=int, required=True, help="hyperedges per batch (0 = all)")
    p.add_argument("--L", type=int, required=True, help="nodes per hyperedge row")
    p.add_argument("--mode", choices=["uniform", "size-weighted"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batches", type=int, default=1000)
    p.add_argument("--batch-csv", default=None, help="also dump every sampled cell to CSV")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sampling-analysis", help="first-draw pmf, wait bound, node-seen probability")
    p.add_argument("--analysis", choices=["pmf", "bound", "node-seen"], required=True)
    p.add_argument("--n", type=int, default=10, help="hyperedge size (pmf)")
    p.add_argument("--c", type=int, default=5, help="nodes drawn per hyperedge per epoch")
    p.add_argument("--epochs", type=int, default=10, help="table length (pmf)")
    p.add_argument("--sizes", default="", help="comma-separated hyperedge sizes (bound)")
    p.add_argument("--node", type=int, default=0, help="node id (node-seen)")
    p.add_argument("--L", type=int, default=1, help="nodes drawn per hyperedge (node-seen)")
    p.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials (0 = closed form only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="input", default=None, help="dataset path (node-seen)")
    p.add_argument("--in-format", dest="fmt", choices=["json", "edge-list"], default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.add_argument("--plot", default=None, metavar="DIR")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sampling_analysis)

    p = sub.add_parser("rewire", help="connectivity manipulation strategies")
    _add_io_flags(p)
    p.add_argument(
        "--strategy",
        choices=["trimming", "retention", "random-drop", "label-split", "kmeans-split"],
        required=True,
    )
    p.add_argument("--fraction", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="write the rewired hypergraph here")
    p.add_argument("--drop-singletons", action="store_true")
    p.add_argument("--num-classes", type=int, default=None)
    p.add_argument("--min-split-size", type=int, default=3)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_rewire)

    p = sub.add_parser("train", help="train a model and report curves")
    _add_io_flags(p)
    p.add_argument("--model", choices=["multisetmixer", "mlp", "mlpcb"], required=True)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--wd", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--dim", type=int, default=32, help="incidence-state width")
    p.add_argument("--dropout", type=float, default=0.5, help="per-hyperedge weight dropout (mlpcb)")
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--mode", choices=["uniform", "size-weighted"], default="uniform")
    p.add_argument("--train-frac", type=float, default=0.5)
    p.add_argument("--val-frac", type=float, default=0.25)
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--checkpoint", default=None, help="save the selected parameters here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy of a checkpoint on a dataset")
    _add_io_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=["all", "train", "val", "test"], default="all")
    p.add_argument("--train-frac", type=float, default=0.5)
    p.add_argument("--val-frac", type=float, default=0.25)
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HypergraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
