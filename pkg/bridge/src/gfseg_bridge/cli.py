"""Command-line entry points: feature extraction and mask serving."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .backends import BACKENDS, BridgeError, load_image, make_backend
from .config import BridgeConfig
from .container import ContainerError, Tensor, read_map, write_container


def _config_from(args) -> BridgeConfig:
    return BridgeConfig(
        feature_checkpoint=args.feature_checkpoint,
        mask_checkpoint=args.mask_checkpoint,
        device=args.device)


def cmd_extract(args) -> int:
    backend = make_backend(args.backend, _config_from(args))
    rgb = load_image(args.image)
    feats = backend.extract_features(rgb)
    write_container(
        [
            Tensor("features", feats),
            Tensor("image_size",
                   np.array(rgb.shape[:2], dtype=np.int32)),
        ],
        args.out)
    return 0


def cmd_serve_masks(args) -> int:
    backend = make_backend(args.backend, _config_from(args))
    doc = read_map(args.points_in)
    if "points" not in doc:
        raise BridgeError(f"{args.points_in}: no 'points' tensor")
    points = doc["points"]
    if points.ndim != 2 or points.shape[1] != 2:
        raise BridgeError(f"points tensor must be (N, 2), got {points.shape}")
    rgb = load_image(args.image)
    if len(points) == 0:
        size = backend.config.mask_size
        masks = np.zeros((0, size, size), dtype=np.uint8)
    else:
        masks = backend.predict_masks(rgb, points)
    write_container([Tensor("masks", masks.astype(np.uint8))], args.masks_out)
    return 0


def _add_backend_args(p):
    p.add_argument("--backend", choices=list(BACKENDS), default="stub")
    p.add_argument("--feature-checkpoint", default="")
    p.add_argument("--mask-checkpoint", default="")
    p.add_argument("--device", default="cpu")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bridge",
        description="Dense feature extraction and point-prompted mask serving")
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="write image features to a container")
    ex.add_argument("--image", required=True)
    ex.add_argument("--out", required=True)
    _add_backend_args(ex)
    ex.set_defaults(func=cmd_extract)

    sm = sub.add_parser(
        "serve-masks", help="answer a point-prompt file with a mask file")
    sm.add_argument("--image", required=True)
    sm.add_argument("--points-in", required=True)
    sm.add_argument("--masks-out", required=True)
    sm.add_argument("--episode", default="", help="episode id (informational)")
    _add_backend_args(sm)
    sm.set_defaults(func=cmd_serve_masks)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BridgeError, ContainerError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
