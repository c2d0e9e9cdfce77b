"""Core array types and episode manifests."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .container import read_map
from .errors import ConfigError

DEFAULT_PROVIDER_SIZE = (1024, 1024)


@dataclass(frozen=True)
class FeatureMap:
    """Dense per-pixel embedding grid, shape (h, w, c), float32."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError(f"feature map must be (h, w, c), got {self.data.shape}")
        if self.data.dtype != np.float32:
            object.__setattr__(self, "data", self.data.astype(np.float32))
        if min(self.data.shape) < 1:
            raise ValueError(f"degenerate feature map shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature map contains non-finite entries")

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def c(self) -> int:
        return self.data.shape[2]

    def flat(self) -> np.ndarray:
        """View as (h*w, c)."""
        return self.data.reshape(-1, self.c)


@dataclass(frozen=True)
class BinaryMask:
    """Binary mask, shape (H, W), uint8 values in {0, 1}."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError(f"mask must be 2-d, got shape {self.data.shape}")
        if self.data.dtype != np.uint8:
            object.__setattr__(self, "data", self.data.astype(np.uint8))
        if self.data.size and self.data.max() > 1:
            raise ValueError("mask values must be 0 or 1")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class Episode:
    """One few-shot task: target features plus K annotated references."""

    id: str
    target_features: FeatureMap
    references: list[tuple[FeatureMap, BinaryMask]]
    class_id: int
    image_size: tuple[int, int]
    target_gt: BinaryMask | None = None
    provider_size: tuple[int, int] = DEFAULT_PROVIDER_SIZE
    provider_hint: str = ""
    fold: int | None = None

    def __post_init__(self):
        if len(self.references) < 1:
            raise ConfigError(f"episode {self.id}: needs at least one reference")
        c = self.target_features.c
        for i, (fm, mask) in enumerate(self.references):
            if fm.c != c:
                raise ConfigError(
                    f"episode {self.id}: reference {i} has {fm.c} channels, "
                    f"target has {c}")
            if mask.count() == 0:
                raise ConfigError(
                    f"episode {self.id}: reference {i} mask has no foreground")


def _read_manifest_doc(path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON: {e}") from e


def load_manifest(path) -> tuple[list[dict], str]:
    """Read a manifest JSON; returns (entries, root directory)."""
    doc = _read_manifest_doc(path)
    if "episodes" not in doc:
        raise ConfigError(f"{path}: manifest has no 'episodes' key")
    return doc["episodes"], os.path.dirname(os.path.abspath(path))


def manifest_defaults(path) -> dict:
    return _read_manifest_doc(path).get("defaults", {})


def load_episode(entry: dict, root: str) -> Episode:
    """Materialize one manifest entry into an Episode."""
    try:
        eid = entry["id"]
        target_path = os.path.join(root, entry["target"])
        ref_paths = [os.path.join(root, p) for p in entry["references"]]
        image_size = tuple(int(v) for v in entry["image_size"])
    except KeyError as e:
        raise ConfigError(f"manifest entry missing key {e}") from e

    target = read_map(target_path)
    if "features" not in target:
        raise ConfigError(f"{target_path}: no 'features' tensor")
    refs = []
    for p in ref_paths:
        m = read_map(p)
        if "features" not in m or "mask" not in m:
            raise ConfigError(f"{p}: reference needs 'features' and 'mask' tensors")
        refs.append((FeatureMap(m["features"]), BinaryMask(m["mask"])))

    gt = None
    if entry.get("gt"):
        g = read_map(os.path.join(root, entry["gt"]))
        if "mask" not in g:
            raise ConfigError(f"{entry['gt']}: no 'mask' tensor")
        gt = BinaryMask(g["mask"])

    provider_size = tuple(
        int(v) for v in entry.get("provider_size", DEFAULT_PROVIDER_SIZE))
    hint = json.dumps(entry["oracle"], sort_keys=True) if "oracle" in entry else ""

    return Episode(
        id=eid,
        target_features=FeatureMap(target["features"]),
        references=refs,
        class_id=int(entry.get("class_id", 0)),
        image_size=image_size,
        target_gt=gt,
        provider_size=provider_size,
        provider_hint=hint,
        fold=entry.get("fold"),
    )
