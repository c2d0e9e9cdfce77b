"""Command-line interface: run, eval, and synth subcommands."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .alignment import build_similarity_maps, compute_correlation, select_points
from .container import Tensor, write_container
from .episode import load_episode, load_manifest, manifest_defaults
from .errors import ConfigError, PipelineError, ProviderError
from .gating import GateConfig
from .overlay import emit_overlay
from .pipeline import EpisodeResult, evaluate, run_episode
from .providers import DumpProvider, ExecProvider, OracleProvider
from .reporting import write_report
from .resample import mask_to_grid
from .synthetic import (AMBIGUITIES, DIFFICULTIES, class_mask, make_episode,
                        oracle_masks)

_GROWTH_FLAG = {"grow": "mask_growth", "union": "union", "off": "off"}
_PIVOT_FLAG = {"prod": "product", "plus": "plus", "mid": "mid_only",
               "neg": "neg_only"}


def _build_provider(spec: str):
    kind, _, locator = spec.partition(":")
    if kind == "oracle":
        ambiguity = locator or "mixed"
        if ambiguity not in AMBIGUITIES:
            raise ConfigError(f"unknown oracle ambiguity {ambiguity!r}")
        return OracleProvider(ambiguity=ambiguity)
    if kind == "dump":
        if not locator:
            raise ConfigError("dump provider needs a directory: dump:<dir>")
        return DumpProvider(locator)
    if kind == "exec":
        if not locator:
            raise ConfigError("exec provider needs a command: exec:<cmd>")
        return ExecProvider(locator)
    raise ConfigError(f"unknown provider {spec!r}")


def _resolve_config(args, defaults: dict) -> GateConfig:
    """Flags > manifest defaults > built-in defaults."""

    def pick(flag_value, key, fallback):
        if flag_value is not None:
            return flag_value
        return defaults.get(key, fallback)

    try:
        return GateConfig(
            clustering_mode=pick(args.clustering, "clustering", "weak"),
            positive_strategy=pick(args.positive, "positive", "num"),
            growth_mode=_GROWTH_FLAG[pick(args.growth, "growth", "grow")],
            pivot_mode=_PIVOT_FLAG[pick(args.pivot, "pivot", "prod")],
            overshoot=pick(args.overshoot, "overshoot", "on") == "on",
        )
    except KeyError as e:
        raise ConfigError(f"bad ablation flag value {e}") from e


def _write_result(result: EpisodeResult, out_dir: str) -> None:
    write_container(
        [
            Tensor("prediction", result.prediction.data),
            Tensor("points", result.points_xy.astype(np.int32)),
            Tensor("clusters", result.clusters.astype(np.int32)),
        ],
        os.path.join(out_dir, f"{result.episode_id}.gfsb"),
    )


def cmd_run(args) -> int:
    entries, root = load_manifest(args.manifest)
    config = _resolve_config(args, manifest_defaults(args.manifest))
    provider = _build_provider(args.provider)
    os.makedirs(args.out, exist_ok=True)
    if args.overlays:
        os.makedirs(args.overlays, exist_ok=True)

    episodes = [load_episode(e, root) for e in entries]

    def process(episode):
        return run_episode(episode, provider, config)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(process, episodes))
    else:
        results = [process(ep) for ep in episodes]

    index = []
    for episode, result in zip(episodes, results):
        _write_result(result, args.out)
        if args.overlays:
            emit_overlay(episode, result,
                         os.path.join(args.overlays, f"{result.episode_id}.png"))
        index.append({
            "id": result.episode_id,
            "class_id": result.class_id,
            "fold": result.fold,
            "intersection": result.intersection,
            "union": result.union,
            "point_count": result.point_count,
            "cluster_count": result.cluster_count,
        })
    with open(os.path.join(args.out, "results.json"), "w") as f:
        json.dump({"episodes": index, "config": {
            "clustering": config.clustering_mode,
            "positive": config.positive_strategy,
            "growth": config.growth_mode,
            "pivot": config.pivot_mode,
            "overshoot": "on" if config.overshoot else "off",
            "seed": args.seed,
        }}, f, indent=2, sort_keys=True)
        f.write("\n")

    with_gt = [r for r in results if r.intersection is not None]
    if with_gt:
        report = evaluate(with_gt)
        print(f"{len(results)} episodes, mIoU {report.miou:.4f}")
    else:
        print(f"{len(results)} episodes (no ground truth)")
    return 0


def cmd_eval(args) -> int:
    index_path = os.path.join(args.results, "results.json")
    if not os.path.exists(index_path):
        raise ConfigError(f"no results.json in {args.results}")
    with open(index_path) as f:
        doc = json.load(f)
    results = []
    for e in doc["episodes"]:
        if e["intersection"] is None or e["union"] is None:
            raise ConfigError(f"episode {e['id']} has no ground truth")
        results.append(EpisodeResult(
            episode_id=e["id"], prediction=None,  # counts only
            intersection=e["intersection"], union=e["union"],
            point_count=e["point_count"], cluster_count=e["cluster_count"],
            timings={}, points_xy=np.zeros((0, 2), np.int32),
            clusters=np.zeros((0,), np.int32),
            class_id=e["class_id"], fold=e.get("fold")))
    report = evaluate(results)
    write_report(report, args.report)
    print(f"mIoU {report.miou:.4f} over {report.episode_count} episodes "
          f"-> {args.report}")
    return 0


def cmd_synth(args) -> int:
    out = args.out
    ep_dir = os.path.join(out, "episodes")
    dump_dir = os.path.join(out, "dumps")
    os.makedirs(ep_dir, exist_ok=True)
    os.makedirs(dump_dir, exist_ok=True)

    entries = []
    for i in range(args.count):
        seed = args.seed + i
        episode, scene = make_episode(
            seed, args.difficulty, noise_sigma=args.sigma, k=args.shots)
        target_rel = f"episodes/{episode.id}.target.gfsb"
        write_container(
            [Tensor("features", episode.target_features.data)],
            os.path.join(out, target_rel))
        ref_rels = []
        for j, (fm, mask) in enumerate(episode.references):
            rel = f"episodes/{episode.id}.ref{j}.gfsb"
            write_container(
                [Tensor("features", fm.data), Tensor("mask", mask.data)],
                os.path.join(out, rel))
            ref_rels.append(rel)
        gt_rel = f"episodes/{episode.id}.gt.gfsb"
        write_container(
            [Tensor("mask", class_mask(scene).data)], os.path.join(out, gt_rel))

        # Record the oracle's answers so the dump provider can replay the
        # suite without scene reconstruction.
        grid = (episode.target_features.h, episode.target_features.w)
        grid_refs = [(fm, mask_to_grid(m, (fm.h, fm.w)))
                     for fm, m in episode.references]
        maps = build_similarity_maps(
            compute_correlation(episode.target_features, grid_refs))
        points = select_points(maps, grid, episode.provider_size)
        if not points.empty:
            masks = oracle_masks(scene, points, args.ambiguity)
            write_container(
                [
                    Tensor("points", points.image_points.astype(np.int32)),
                    Tensor("masks", np.stack(
                        [m.data for m in masks.masks]).astype(np.uint8)),
                ],
                os.path.join(dump_dir, f"{episode.id}.gfsb"))

        entries.append({
            "id": episode.id,
            "class_id": episode.class_id,
            "target": target_rel,
            "references": ref_rels,
            "gt": gt_rel,
            "image_size": list(episode.image_size),
            "provider_size": list(episode.provider_size),
            "oracle": json.loads(episode.provider_hint),
        })

    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump({"episodes": entries}, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {len(entries)} episodes to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gfseg",
        description="Training-free graph-based few-shot segmentation")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the pipeline over a manifest")
    run.add_argument("--manifest", required=True)
    run.add_argument("--provider", required=True,
                     help="oracle[:ambiguity] | dump:<dir> | exec:<cmd>")
    run.add_argument("--out", required=True, help="results directory")
    run.add_argument("--overlays", help="directory for overlay PNGs")
    run.add_argument("--clustering", choices=["weak", "strong"])
    run.add_argument("--positive", choices=["num", "sum"])
    run.add_argument("--growth", choices=["grow", "union", "off"])
    run.add_argument("--pivot", choices=["prod", "plus", "mid", "neg"])
    run.add_argument("--overshoot", choices=["on", "off"])
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--jobs", type=int, default=1)
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="aggregate results into a report")
    ev.add_argument("--results", required=True)
    ev.add_argument("--report", required=True, help="report JSON path")
    ev.set_defaults(func=cmd_eval)

    sy = sub.add_parser("synth", help="generate a synthetic episode suite")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--count", type=int, default=10)
    sy.add_argument("--difficulty", choices=list(DIFFICULTIES), default="easy")
    sy.add_argument("--sigma", type=float, default=0.1)
    sy.add_argument("--shots", type=int, default=1)
    sy.add_argument("--ambiguity", choices=list(AMBIGUITIES), default="mixed")
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PipelineError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ProviderError as e:
        print(f"provider error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
