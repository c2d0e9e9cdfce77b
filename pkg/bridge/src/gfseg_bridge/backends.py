"""Feature and mask backends.

Two implementations ship:

* ``stub``: deterministic, dependency-light, derived purely from image
  content. It exists so the protocol and container plumbing can be exercised
  end to end without model checkpoints.
* ``torchscript``: loads exported TorchScript modules for the real feature
  extractor and promptable mask model. The feature module must map a
  (1, 3, 518, 518) float tensor to (1, 37*37, 1024) patch tokens; the mask
  module must map (image (1, 3, 1024, 1024), points (N, 2)) to per-point mask
  logits (N, H, 1024, 1024) plus head scores (N, H). The highest-scoring head
  is kept per point.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image

from .config import (FEATURE_DIM, FEATURE_GRID, PATCH_SIZE, BridgeConfig,
                     MASK_SIZE)


class BridgeError(Exception):
    pass


def load_image(path) -> np.ndarray:
    """Decode an image file to an (H, W, 3) uint8 RGB array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as e:
        raise BridgeError(f"cannot decode image {path}: {e}") from e


def _resize(rgb: np.ndarray, size: int) -> np.ndarray:
    im = Image.fromarray(rgb).resize((size, size), Image.BILINEAR)
    return np.asarray(im)


class StubBackend:
    """Checkpoint-free test double.

    Features: per-patch mean colors pushed through a fixed random projection,
    so identical images produce identical bytes and different content
    produces different features. Masks: a filled disk around each prompt with
    a radius seeded by image digest and point location.
    """

    def __init__(self, config: BridgeConfig = BridgeConfig()):
        self.config = config
        rng = np.random.default_rng(12345)
        self._projection = rng.standard_normal((4, FEATURE_DIM))

    def extract_features(self, rgb: np.ndarray) -> np.ndarray:
        square = _resize(rgb, self.config.feature_size).astype(np.float64)
        g = FEATURE_GRID
        patches = square.reshape(g, PATCH_SIZE, g, PATCH_SIZE, 3)
        means = patches.mean(axis=(1, 3)) / 255.0  # (g, g, 3)
        stats = np.concatenate(
            [means, np.ones((g, g, 1))], axis=2)  # (g, g, 4)
        feats = np.tanh(stats @ self._projection)
        return feats.astype(np.float32)

    def predict_masks(self, rgb: np.ndarray, points: np.ndarray) -> np.ndarray:
        size = self.config.mask_size
        digest = hashlib.sha256(rgb.tobytes()).digest()
        base = int.from_bytes(digest[:8], "little")
        masks = np.zeros((len(points), size, size), dtype=np.uint8)
        yy, xx = np.mgrid[0:size, 0:size]
        for i, (x, y) in enumerate(points):
            if not (0 <= x < size and 0 <= y < size):
                raise BridgeError(f"point ({x}, {y}) outside {size}x{size}")
            rng = np.random.default_rng([base, int(x), int(y)])
            radius = int(rng.integers(40, 121))
            masks[i] = ((xx - int(x)) ** 2 + (yy - int(y)) ** 2
                        <= radius * radius).astype(np.uint8)
        return masks


class TorchScriptBackend:
    """Runs exported TorchScript modules on the configured device."""

    def __init__(self, config: BridgeConfig):
        if not config.feature_checkpoint and not config.mask_checkpoint:
            raise BridgeError("torchscript backend needs checkpoint paths")
        self.config = config
        try:
            import torch
        except ImportError as e:
            raise BridgeError("torch is not installed") from e
        self._torch = torch
        torch.manual_seed(0)
        torch.use_deterministic_algorithms(True, warn_only=True)
        self._feature_model = None
        self._mask_model = None

    def _load(self, path, what):
        try:
            model = self._torch.jit.load(path, map_location=self.config.device)
        except (OSError, RuntimeError, ValueError) as e:
            raise BridgeError(f"cannot load {what} checkpoint {path}: {e}") from e
        model.eval()
        return model

    def extract_features(self, rgb: np.ndarray) -> np.ndarray:
        if self._feature_model is None:
            self._feature_model = self._load(
                self.config.feature_checkpoint, "feature")
        torch = self._torch
        square = _resize(rgb, self.config.feature_size).astype(np.float32) / 255.0
        x = torch.from_numpy(square).permute(2, 0, 1)[None]
        with torch.no_grad():
            tokens = self._feature_model(x.to(self.config.device))
        g = FEATURE_GRID
        feats = tokens.reshape(g, g, -1).cpu().numpy().astype(np.float32)
        if feats.shape != (g, g, FEATURE_DIM):
            raise BridgeError(
                f"feature model produced shape {feats.shape}, expected "
                f"({g}, {g}, {FEATURE_DIM})")
        return feats

    def predict_masks(self, rgb: np.ndarray, points: np.ndarray) -> np.ndarray:
        if self._mask_model is None:
            self._mask_model = self._load(self.config.mask_checkpoint, "mask")
        torch = self._torch
        size = self.config.mask_size
        square = _resize(rgb, size).astype(np.float32) / 255.0
        x = torch.from_numpy(square).permute(2, 0, 1)[None].to(self.config.device)
        pts = torch.from_numpy(points.astype(np.float32)).to(self.config.device)
        with torch.no_grad():
            logits, scores = self._mask_model(x, pts)
        # keep the highest-scoring head per point
        best = scores.argmax(dim=1)
        picked = logits[torch.arange(len(points)), best]
        return (picked > 0).cpu().numpy().astype(np.uint8)


BACKENDS = ("stub", "torchscript")


def make_backend(name: str, config: BridgeConfig = BridgeConfig()):
    if name == "stub":
        return StubBackend(config)
    if name == "torchscript":
        return TorchScriptBackend(config)
    raise BridgeError(f"unknown backend {name!r}")
