"""Command-line entry point for the SAMDP pipeline.

Subcommands: gridworld-gen, embed, cluster, build, select, evaluate,
eject, export-ui. Every subcommand is re-runnable: identical inputs and
seeds produce identical output bytes. Exit codes: 0 success, 2 validation
or usage error, 1 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import embedding as emb
from . import gridworld as gw
from .cluster import read_clusters, st_kmeans, write_clusters
from .errors import SamdpError
from .evaluate import (
    eject_run,
    fit_eject,
    greedy_correlation,
    greedy_policy,
    write_eject_report,
)
from .export import build_export_document, write_export_ui
from .model import infer_from_clustering, read_model, write_model
from .selection import (
    grid_search,
    null_p_value,
    read_grid_report,
    score_candidate,
    select,
    write_grid_report,
)
from .trajectory import ingest, split, write


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        outputs = args.handler(args)
    except SamdpError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if getattr(args, "manifest", None):
        _write_manifest(args, outputs or [], time.monotonic() - started)
    return 0


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(args, outputs: list[str], elapsed: float) -> None:
    flags = {
        k: v for k, v in vars(args).items() if k not in ("handler", "manifest") and v is not None
    }
    inputs = {}
    for key in ("traj", "embedding", "clusters", "model", "grid", "maze"):
        p = flags.get(key)
        if p and Path(str(p)).exists():
            inputs[str(p)] = _sha256(p)
    manifest = {
        "command": args.handler.__name__.removeprefix("cmd_"),
        "flags": {k: str(v) for k, v in flags.items()},
        "inputs": inputs,
        "outputs": {str(p): _sha256(p) for p in outputs},
        "timings": {"total_s": elapsed},
    }
    Path(args.manifest).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _resolve_maze(spec: str):
    p = Path(spec)
    if p.exists():
        return gw.load_maze(p)
    return gw.load_maze(gw.bundled_maze_path(spec))


def _load_features(args, ds):
    """2-D display/cluster coordinates: embedding file or raw dataset features."""
    if getattr(args, "embedding", None):
        coords = emb.embedding_for_dataset(args.embedding, ds)
        if coords.shape[1] != 2:
            raise SamdpError("clustering requires a 2-D embedding")
        return coords
    if ds.m != 2:
        raise SamdpError(
            f"dataset features are {ds.m}-D; run `samdp embed` first or pass --embedding"
        )
    return ds.features


def cmd_gridworld_gen(args):
    cfg = _resolve_maze(args.maze)
    if args.seed is not None:
        cfg.seed = args.seed
    ds = gw.generate(cfg, args.n_traj, corruption=args.corruption, raw_features=args.raw_xy)
    write(ds, args.out)
    rewards = ds.trajectory_rewards()
    print(f"gridworld-gen: {ds.n_trajectories} trajectories, {ds.n} records -> {args.out}")
    print(f"  mean trajectory reward {rewards.mean():.4f} (min {rewards.min():.4f}, max {rewards.max():.4f})")
    return [args.out]


def cmd_embed(args):
    ds = ingest(args.traj)
    cfg = emb.EmbeddingConfig(
        pca_dims=args.pca_dims,
        tsne_dims=args.tsne_dims,
        perplexity=args.perplexity,
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )
    coords = emb.embed_dataset(ds, cfg)
    emb.write_embedding(coords, ds, args.out)
    print(f"embed: {ds.n} records, {ds.m}-D features -> {coords.shape[1]}-D embedding at {args.out}")
    return [args.out]


def cmd_cluster(args):
    ds = ingest(args.traj)
    coords = _load_features(args, ds)
    features = emb.assemble(coords, ds)
    clustering = st_kmeans(features, ds, K=args.k, w=args.w, seed=args.seed, max_iter=args.max_iter)
    write_clusters(clustering, ds, args.out)
    print(f"cluster: K={args.k} w={args.w} seed={args.seed} inertia={clustering.inertia:.6g} -> {args.out}")
    if clustering.empty_clusters:
        print(f"  warning: empty clusters {clustering.empty_clusters}")
    return [args.out]


def cmd_build(args):
    ds = ingest(args.traj)
    clustering = read_clusters(args.clusters, ds)
    model = infer_from_clustering(
        clustering, ds, min_length=args.min_length, min_prob=args.min_prob
    )
    write_model(model, args.out, w=clustering.w)
    n_skills = int((model.counts > 0).sum())
    print(f"build: K={model.K} skills={n_skills} absorbing={model.absorbing.sum()} -> {args.out}")
    return [args.out]


def cmd_select(args):
    ds = ingest(args.traj)
    coords = _load_features(args, ds)
    features = emb.assemble(coords, ds)
    cands = grid_search(
        ds,
        features,
        k_range=(args.k_min, args.k_max),
        w_range=(args.w_min, args.w_max),
        restarts=args.restarts,
        seed=args.seed,
        min_length=args.min_length,
        min_prob=args.min_prob,
    )
    chosen = select(cands)
    outputs = []
    write_grid_report(cands, chosen, args.grid_out)
    outputs.append(args.grid_out)
    if args.clusters_out:
        write_clusters(chosen.clustering, ds, args.clusters_out)
        outputs.append(args.clusters_out)
    if args.model_out:
        write_model(chosen.model, args.model_out, w=chosen.w)
        outputs.append(args.model_out)
    n_fail = sum(1 for c in cands.candidates if c.error is not None)
    print(
        f"select: {len(cands.candidates)} candidates ({n_fail} failed), "
        f"chose K={chosen.K} w={chosen.w} seed={chosen.seed}"
    )
    s = chosen.score
    print(
        f"  vmse={s.vmse!r} inertia={s.inertia!r} intensity={s.intensity!r} entropy={s.entropy!r}"
    )
    if args.trials:
        p = null_p_value(chosen, ds, features, trials=args.trials, seed=args.null_seed)
        print(f"  null-hypothesis p-value over {args.trials} random models: {p!r}")
    return outputs


def cmd_evaluate(args):
    ds = ingest(args.traj)
    clustering = read_clusters(args.clusters, ds)
    model, _ = read_model(args.model)
    score = score_candidate(model, clustering, ds)
    print(f"VMSE {score.vmse!r}")
    print(f"inertia {score.inertia!r}")
    print(f"intensity {score.intensity!r}")
    print(f"entropy {score.entropy!r}")
    policy = greedy_policy(model)
    corr = greedy_correlation(model, policy, ds, clustering)
    defined = corr[~np.isnan(corr)]
    print(f"greedy choices: {policy.choice.tolist()}")
    if defined.size:
        print(
            f"greedy correlation: {defined.size}/{model.K} clusters defined, "
            f"positive in {(defined > 0).sum()}, mean {defined.mean():.4f}"
        )
    else:
        print("greedy correlation: undefined for every cluster")
    return []


def cmd_eject(args):
    ds = ingest(args.traj)
    train, test = split(ds, args.train_count, seed=args.seed)
    # test features must live in the training centroid space, so the
    # normalization is fitted on train and applied to test
    stacked_train = np.column_stack([_features_for(train), train.values])
    features_train, mean, std = emb.normalize_fit(stacked_train)
    clustering = st_kmeans(features_train, train, K=args.k, w=args.w, seed=args.seed)
    model = infer_from_clustering(clustering, train)
    monitor = fit_eject(train, clustering, model, top_k=args.top_k, smoothing=args.smoothing)
    features_test = emb.normalize_apply(
        np.column_stack([_features_for(test), test.values]), mean, std
    )
    report = eject_run(test, clustering, monitor, features=features_test, threshold=args.threshold)
    write_eject_report(report, args.out)
    ejected = sum(1 for e in report.ejected_at if e is not None)
    print(f"eject: {ejected}/{len(report.traj_ids)} test trajectories ejected -> {args.out}")
    print(
        f"  mean reward all={report.mean_all!r} unejected={report.mean_unejected!r} "
        f"gain={report.gain_pct!r}%"
    )
    return [args.out]


def _features_for(ds):
    if ds.m != 2:
        raise SamdpError("eject needs 2-D dataset features (gridworld logs)")
    return ds.features


def cmd_export_ui(args):
    ds = ingest(args.traj)
    coords = _load_features(args, ds)
    clustering = read_clusters(args.clusters, ds)
    model, _ = read_model(args.model)
    grid_rows = read_grid_report(args.grid) if args.grid else None
    doc = build_export_document(
        ds, coords, clustering, model, greedy_policy(model), grid_rows
    )
    write_export_ui(doc, args.out)
    print(f"export-ui: {ds.n} records, K={model.K} -> {args.out}")
    return [args.out]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samdp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--manifest", help="write a JSON run manifest to this path")
        return p

    p = add("gridworld-gen", cmd_gridworld_gen, "generate a trajectory corpus from a maze")
    p.add_argument("--maze", default="maze_a", help="maze file path or bundled name (maze_a/b/c)")
    p.add_argument("--n-traj", type=int, default=100)
    p.add_argument("--corruption", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None, help="override the maze header seed")
    p.add_argument("--raw-xy", action="store_true", help="record raw (x, y) instead of the flip-translate features")
    p.add_argument("--out", required=True)

    p = add("embed", cmd_embed, "normalize + PCA + t-SNE a trajectory log")
    p.add_argument("--traj", required=True)
    p.add_argument("--pca-dims", type=int, default=50)
    p.add_argument("--tsne-dims", type=int, default=2)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--learning-rate", type=float, default=200.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("cluster", cmd_cluster, "spatio-temporal K-means over the feature space")
    p.add_argument("--traj", required=True)
    p.add_argument("--embedding", help="embedding log (defaults to 2-D dataset features)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--out", required=True)

    p = add("build", cmd_build, "infer the SAMDP model from a clustering")
    p.add_argument("--traj", required=True)
    p.add_argument("--clusters", required=True)
    p.add_argument("--min-length", type=int, default=2)
    p.add_argument("--min-prob", type=float, default=0.1)
    p.add_argument("--out", required=True)

    p = add("select", cmd_select, "grid-search candidates and pick by prefix intersection")
    p.add_argument("--traj", required=True)
    p.add_argument("--embedding")
    p.add_argument("--k-min", type=int, default=15)
    p.add_argument("--k-max", type=int, default=25)
    p.add_argument("--w-min", type=int, default=1)
    p.add_argument("--w-max", type=int, default=7)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-length", type=int, default=2)
    p.add_argument("--min-prob", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=10000, help="random-model null trials (0 = skip)")
    p.add_argument("--null-seed", type=int, default=0)
    p.add_argument("--grid-out", required=True)
    p.add_argument("--clusters-out")
    p.add_argument("--model-out")

    p = add("evaluate", cmd_evaluate, "score a model against a dataset and clustering")
    p.add_argument("--traj", required=True)
    p.add_argument("--clusters", required=True)
    p.add_argument("--model", required=True)

    p = add("eject", cmd_eject, "train/test split, fit the monitor, report the gain")
    p.add_argument("--traj", required=True)
    p.add_argument("--train-count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--out", required=True)

    p = add("export-ui", cmd_export_ui, "bundle artifacts into the explorer document")
    p.add_argument("--traj", required=True)
    p.add_argument("--embedding")
    p.add_argument("--clusters", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--grid")
    p.add_argument("--out", required=True)

    return parser


if __name__ == "__main__":
    sys.exit(main())
