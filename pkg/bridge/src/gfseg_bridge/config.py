"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass

# ViT-L/14 on a 518 px square input yields a 37x37 patch grid with
# 1024-dimensional tokens; masks are predicted at 1024 px.
FEATURE_SIZE = 518
PATCH_SIZE = 14
FEATURE_GRID = FEATURE_SIZE // PATCH_SIZE  # 37
FEATURE_DIM = 1024
MASK_SIZE = 1024


@dataclass(frozen=True)
class BridgeConfig:
    feature_checkpoint: str = ""
    mask_checkpoint: str = ""
    device: str = "cpu"
    feature_size: int = FEATURE_SIZE
    mask_size: int = MASK_SIZE
