"""Command-line interface.

Exit status: 0 on success, 1 on a usage error, 2 on a data error (missing or
malformed input, failed validation).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import io as mio
from . import kernels
from .embedders import EmbedderConfig, diverse_candidates, meta_embed, default_pool
from .errors import MetavizError
from .fusion import naive_meta_distance, symmetrize
from .geometry import full_normalized_matrix
from .metrics import (
    circular_order,
    circular_tau,
    concordance_summary,
    principal_order,
    principal_tau,
    silhouette,
)
from .model import DistortionModel, Embedding, block_correlation
from .parallel import resolve_threads
from .simulation import SceneConfig, gen_distorted_candidates, generate, ground_truth
from .spectral import eigenscore_matrix, score_and_fuse, score_and_fuse_matrices

log = logging.getLogger("metaviz")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_threads(p):
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (0 = all cores; default: $MVZ_THREADS or 0)")


def _fuse(loaded, threads, naive=False, meta=True):
    """Scores and a meta-distance for either candidate representation."""
    if isinstance(loaded, tuple):
        names, mats = loaded
        scores, m = score_and_fuse_matrices(mats, naive=naive, meta_rows=meta)
        return names, scores, m
    if not meta:
        return loaded.names, eigenscore_matrix(loaded, threads), None
    scores, meta = score_and_fuse(loaded, threads)
    if naive:
        meta = naive_meta_distance(loaded, threads)
    return loaded.names, scores, meta


def _embed_cfg(args, method=None):
    method = method or args.method
    kw = dict(dim=args.dim)
    if getattr(args, "sigma", None) is not None:
        kw["sigma"] = args.sigma
    if getattr(args, "knn", None) is not None:
        kw["knn"] = args.knn
    return EmbedderConfig(method, **kw)


def cmd_score(args):
    loaded = mio.load_candidates(mio.load_manifest(args.manifest))
    names, scores, _ = _fuse(loaded, args.threads, meta=False)
    mio.save_scores(scores, names, args.out)
    nfb = int(np.count_nonzero(scores.fallback))
    log.info("scored %d samples x %d candidates (%d fallback)", scores.n, scores.K, nfb)


def cmd_combine(args):
    loaded = mio.load_candidates(mio.load_manifest(args.manifest))
    _, _, meta = _fuse(loaded, args.threads, naive=args.naive)
    if args.symmetrize:
        meta = symmetrize(meta)
    mio.save_distance(meta, args.out)


def cmd_embed(args):
    m = mio.load_distance(args.distance)
    e = meta_embed(m, _embed_cfg(args), name="meta")
    mio.save_embedding(e, args.out)


def _scene_kind(scene):
    return "clusters" if scene.labels is not None and scene.structure == "gaussian-mixture" else "manifold"


def cmd_simulate(args):
    cfg = SceneConfig(args.structure, args.n, args.p, args.r, args.theta, args.seed, args.pointcloud)
    scene = generate(cfg)
    out = args.out_dir
    os.makedirs(os.path.join(out, "candidates"), exist_ok=True)
    mio.save_embedding(Embedding("data", scene.data), os.path.join(out, "data.csv"))
    mio.save_embedding(Embedding("signals", scene.signals), os.path.join(out, "signals.csv"))
    if scene.labels is not None:
        mio.save_labels(scene.labels, os.path.join(out, "labels.csv"))
    kind = _scene_kind(scene)
    meta = dict(structure=cfg.structure, n=cfg.n, p=cfg.p, r=cfg.r, theta=cfg.theta, seed=cfg.seed,
                kind=kind, candidates=args.candidates)
    entries = []
    if args.candidates == "pool":
        cs = diverse_candidates(scene.data, dim=args.dim, seed=args.seed, pool=default_pool(args.dim, args.seed))
        for e in cs:
            rel = os.path.join("candidates", f"{e.name}.csv")
            mio.save_embedding(e, os.path.join(out, rel))
            entries.append(mio.ManifestEntry(e.name, rel, "csv"))
    elif args.candidates == "model":
        truth = ground_truth(scene)
        K = args.model_k
        rng = np.random.default_rng([args.seed, 7])
        scales = rng.uniform(0.5, 2.0, size=(cfg.n, K))
        R = block_correlation(K, args.block_size, args.block_rho)
        model = DistortionModel(args.sigma, R, scales, args.adversarial)
        dc = gen_distorted_candidates(truth, model, [args.seed, 11], clamp=args.clamp)
        for k in range(K):
            name = f"model-{k + 1:02d}"
            rel = os.path.join("candidates", f"{name}.bin")
            mio.save_distance(np.ascontiguousarray(dc.rows[:, k, :]), os.path.join(out, rel))
            entries.append(mio.ManifestEntry(name, rel, "distance"))
        meta.update(sigma=args.sigma, model_k=K, adversarial=args.adversarial, clamp=args.clamp)
    if entries:
        mio.save_manifest(os.path.join(out, "manifest.json"), entries, n=cfg.n, kind=kind)
    with open(os.path.join(out, "scene.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _inputs(args):
    """(name, Embedding or distance array) pairs named on the command line."""
    items = []
    for path in args.embedding or []:
        items.append((os.path.splitext(os.path.basename(path))[0], mio.load_embedding(path)))
    for path in args.distance or []:
        items.append((os.path.splitext(os.path.basename(path))[0], mio.load_distance_array(path)[0]))
    if args.manifest:
        man = mio.load_manifest(args.manifest)
        for e in man.candidates:
            p = man.resolve(e)
            obj = mio.load_embedding(p, name=e.name) if e.format == "csv" else mio.load_distance_array(p)[0]
            items.append((e.name, obj))
    if not items:
        raise UsageError("evaluate needs at least one --embedding, --distance or --manifest")
    return items


def _rows_of(obj, threads):
    if isinstance(obj, Embedding):
        return full_normalized_matrix(obj, threads)
    return obj


def cmd_evaluate(args):
    items = _inputs(args)
    results = {}
    if args.metric == "concordance":
        truth = ground_truth(mio.load_embedding(args.truth).coords)
        for name, obj in items:
            summ = concordance_summary(_rows_of(obj, args.threads), truth)
            results[name] = {"mean_concordance": summ.mean, "skipped": summ.skipped}
    elif args.metric == "silhouette":
        labels = mio.load_labels(args.truth)
        for name, obj in items:
            si = silhouette(_rows_of(obj, args.threads), labels)
            results[name] = {"median_silhouette": float(np.median(si)), "mean_silhouette": float(np.mean(si))}
    else:
        order = mio.load_labels(args.truth)
        for name, obj in items:
            if not isinstance(obj, Embedding):
                raise UsageError(f"{args.metric} needs embeddings, {name} is a distance matrix")
            if args.metric == "tau-circular":
                val = circular_tau(circular_order(obj), order)
            else:
                val = principal_tau(principal_order(obj), order)
            results[name] = {"kendall_tau": val}
    report = {"metric": args.metric, "results": results}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def cmd_bench(args):
    from .model import CandidateSet

    rng = np.random.default_rng(args.seed)
    base = rng.standard_normal((args.n, args.d))
    cands = CandidateSet(tuple(
        Embedding(f"c{k}", base + 0.3 * rng.standard_normal((args.n, args.d))) for k in range(args.k)
    ))
    C = cands.stacked()
    threads = resolve_threads(args.threads)
    report = {"n": args.n, "K": args.k, "d": args.d, "threads": threads, "backends": {}}
    outputs = {}
    for name in args.backend:
        try:
            be = kernels.get(name)
        except ImportError as exc:
            report["backends"][name] = {"available": False, "reason": str(exc)}
            continue
        times = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            res = be.score_samples(C, threads, True)
            times.append(time.perf_counter() - t0)
        outputs[name] = res
        report["backends"][name] = {"available": True, "seconds": min(times), "all_seconds": times}
    if len(outputs) == 2:
        a, b = outputs["compiled"], outputs["python"]
        report["bit_identical"] = bool(np.array_equal(a[0], b[0]) and np.array_equal(a[4], b[4]))
        bk = report["backends"]
        report["speedup"] = bk["python"]["seconds"] / bk["compiled"]["seconds"]
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


def cmd_pipeline(args):
    man = mio.load_manifest(args.manifest)
    loaded = mio.load_candidates(man)
    method = args.method
    if method == "auto":
        method = "laplacian-eigenmap" if man.kind == "clusters" else "gaussian-kpca"
    cfg = _embed_cfg(args, method)
    os.makedirs(args.out_dir, exist_ok=True)
    names, scores, meta = _fuse(loaded, args.threads)
    mio.save_scores(scores, names, os.path.join(args.out_dir, "scores.csv"))
    runs = [("meta", meta)]
    if args.naive:
        _, _, nv = _fuse(loaded, args.threads, naive=True)
        runs.append(("naive", nv))
    for tag, m in runs:
        if args.symmetrize:
            m = symmetrize(m)
        mio.save_distance(m, os.path.join(args.out_dir, f"{tag}.bin"))
        e = meta_embed(m, cfg, name=tag)
        mio.save_embedding(e, os.path.join(args.out_dir, f"{tag}_embedding.csv"))
    log.info("pipeline wrote %s (embedder %s)", args.out_dir, cfg.method)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="metaviz", description="Spectral assessment and fusion of candidate visualizations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("score", help="eigenscores of every candidate at every sample")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    _add_threads(s)
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("combine", help="spectral (or naive) meta-distance")
    s.add_argument("--manifest", required=True)
    s.add_argument("--naive", action="store_true", help="uniform weights instead of eigenscores")
    s.add_argument("--symmetrize", action="store_true", help="write m + m^T")
    s.add_argument("--out", required=True, help=".csv for text, anything else for MVDM binary")
    _add_threads(s)
    s.set_defaults(func=cmd_combine)

    def embed_opts(s, methods, default):
        s.add_argument("--method", choices=methods, default=default)
        s.add_argument("--dim", type=int, default=2)
        g = s.add_mutually_exclusive_group()
        g.add_argument("--sigma", type=float, default=None, help="kPCA kernel width")
        g.add_argument("--knn", type=int, default=None, help="Laplacian eigenmap neighbours")

    s = sub.add_parser("embed", help="embed a distance matrix")
    s.add_argument("--distance", required=True)
    embed_opts(s, ["kpca", "mds", "leim"], "kpca")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("simulate", help="synthetic scene plus candidates")
    s.add_argument("--structure", required=True,
                   choices=["g", "gaussian-mixture", "smiley", "cloud", "pointcloud"])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--r", type=int, default=None)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--pointcloud", default=None, help="3-column point file (default: bundled cloud)")
    s.add_argument("--candidates", choices=["pool", "model", "none"], default="pool")
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--model-k", type=int, default=16)
    s.add_argument("--sigma", type=float, default=1.0, help="model distortion scale")
    s.add_argument("--adversarial", type=int, default=0)
    s.add_argument("--block-size", type=int, default=4)
    s.add_argument("--block-rho", type=float, default=0.5)
    s.add_argument("--clamp", action="store_true", help="clip negative model distances at zero")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("evaluate", help="concordance, Silhouette or Kendall tau")
    s.add_argument("--metric", required=True,
                   choices=["concordance", "silhouette", "tau-circular", "tau-principal"])
    s.add_argument("--truth", required=True,
                   help="signals CSV (concordance), labels (silhouette) or true order (tau)")
    s.add_argument("--embedding", action="append")
    s.add_argument("--distance", action="append")
    s.add_argument("--manifest")
    s.add_argument("--out")
    _add_threads(s)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("bench", help="time the compiled and pure-Python kernels")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--repeat", type=int, default=1)
    s.add_argument("--backend", nargs="+", choices=["compiled", "python"], default=["compiled", "python"])
    _add_threads(s)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("pipeline", help="score, combine and embed in one run")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out-dir", required=True)
    embed_opts(s, ["auto", "kpca", "mds", "leim"], "auto")
    s.add_argument("--no-symmetrize", dest="symmetrize", action="store_false")
    s.add_argument("--naive", action="store_true", help="also write the naive meta-distance and embedding")
    _add_threads(s)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 0:
        print(f"metaviz: error: --threads must be >= 0, got {threads}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args)
    except UsageError as exc:
        print(f"metaviz: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MetavizError, OSError, ValueError) as exc:
        print(f"metaviz: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
