"""Mask providers: replayed dumps, external processes, and the synthetic
scene oracle."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .alignment import PointSet
from .container import ContainerError, Tensor, read_map, write_container
from .episode import BinaryMask, Episode
from .errors import ConfigError, ProviderError

PROVIDER_KINDS = ("oracle", "dump", "exec")


@dataclass(frozen=True)
class MaskSet:
    """One binary mask per prompt point, all at provider resolution."""

    masks: list[BinaryMask]
    resolution: tuple[int, int]

    def __post_init__(self):
        for i, m in enumerate(self.masks):
            if m.shape != tuple(self.resolution):
                raise ValueError(
                    f"mask {i} has shape {m.shape}, expected {self.resolution}")

    def __len__(self) -> int:
        return len(self.masks)


@dataclass(frozen=True)
class ProviderSpec:
    kind: str
    locator: str = ""

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise ConfigError(f"unknown provider kind {self.kind!r}")


class MaskProvider:
    """Base provider; subclasses implement _generate. Tracks per-episode
    call counts so the one-call-per-episode contract is assertable."""

    def __init__(self):
        self.calls: dict[str, int] = {}

    def generate(self, episode: Episode, points: PointSet) -> MaskSet:
        if points.empty:
            raise ProviderError(
                f"episode {episode.id}: provider called with no points")
        self.calls[episode.id] = self.calls.get(episode.id, 0) + 1
        masks = self._generate(episode, points)
        if len(masks) != len(points):
            raise ProviderError(
                f"episode {episode.id}: provider returned {len(masks)} masks "
                f"for {len(points)} points")
        return masks

    def _generate(self, episode: Episode, points: PointSet) -> MaskSet:
        raise NotImplementedError


class DumpProvider(MaskProvider):
    """Replays recorded masks from <dir>/<episode_id>.gfsb."""

    def __init__(self, directory: str):
        super().__init__()
        self.directory = directory

    def _generate(self, episode, points):
        path = os.path.join(self.directory, f"{episode.id}.gfsb")
        if not os.path.exists(path):
            raise ProviderError(f"episode {episode.id}: no dump at {path}")
        try:
            recorded = read_map(path)
        except ContainerError as e:
            raise ProviderError(f"episode {episode.id}: bad dump: {e}") from e
        if "points" not in recorded or "masks" not in recorded:
            raise ProviderError(
                f"episode {episode.id}: dump needs 'points' and 'masks'")
        if not np.array_equal(recorded["points"],
                              points.image_points.astype(np.int32)):
            raise ProviderError(
                f"episode {episode.id}: requested points differ from the "
                f"recorded prompt set")
        arr = recorded["masks"]
        if arr.ndim != 3:
            raise ProviderError(f"episode {episode.id}: masks tensor not 3-d")
        return MaskSet(
            masks=[BinaryMask(arr[i]) for i in range(arr.shape[0])],
            resolution=(arr.shape[1], arr.shape[2]),
        )


class ExecProvider(MaskProvider):
    """Spawns an external process speaking the file-based prompt protocol:

        <command> --points-in <gfsb> --episode <id> --masks-out <gfsb>
    """

    def __init__(self, command: str):
        super().__init__()
        self.command = command

    def _generate(self, episode, points):
        with tempfile.TemporaryDirectory(prefix="gfseg-exec-") as tmp:
            points_path = os.path.join(tmp, "points.gfsb")
            masks_path = os.path.join(tmp, "masks.gfsb")
            write_container(
                [Tensor("points", points.image_points.astype(np.int32))],
                points_path)
            cmd = shlex.split(self.command) + [
                "--points-in", points_path,
                "--episode", episode.id,
                "--masks-out", masks_path,
            ]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                raise ProviderError(
                    f"episode {episode.id}: provider exited "
                    f"{proc.returncode}: {proc.stderr.strip()[:500]}")
            try:
                out = read_map(masks_path)
            except (ContainerError, OSError) as e:
                raise ProviderError(
                    f"episode {episode.id}: unreadable provider output: {e}"
                ) from e
        if "masks" not in out:
            raise ProviderError(f"episode {episode.id}: no 'masks' tensor")
        arr = out["masks"]
        if arr.ndim != 3 or arr.shape[0] != len(points):
            raise ProviderError(
                f"episode {episode.id}: masks tensor shape {arr.shape} does "
                f"not match {len(points)} points")
        return MaskSet(
            masks=[BinaryMask(arr[i]) for i in range(arr.shape[0])],
            resolution=(arr.shape[1], arr.shape[2]),
        )


class OracleProvider(MaskProvider):
    """Answers prompts from synthetic scene geometry. Scenes come either
    from an explicit store (tests) or are rebuilt from the episode's hint."""

    def __init__(self, ambiguity: str = "mixed", scenes: dict | None = None):
        super().__init__()
        self.ambiguity = ambiguity
        self.scenes = scenes or {}

    def _generate(self, episode, points):
        from .synthetic import oracle_masks, scene_from_hint

        scene = self.scenes.get(episode.id)
        if scene is None:
            if not episode.provider_hint:
                raise ProviderError(
                    f"episode {episode.id}: no scene available for the oracle")
            scene = scene_from_hint(episode.provider_hint)
            self.scenes[episode.id] = scene
        if tuple(scene.image_size) != tuple(episode.provider_size):
            raise ProviderError(
                f"episode {episode.id}: scene resolution {scene.image_size} "
                f"!= provider resolution {episode.provider_size}")
        return oracle_masks(scene, points, self.ambiguity)


def make_provider(spec: ProviderSpec) -> MaskProvider:
    if spec.kind == "dump":
        return DumpProvider(spec.locator)
    if spec.kind == "exec":
        return ExecProvider(spec.locator)
    return OracleProvider(ambiguity=spec.locator or "mixed")


def generate_masks(spec: ProviderSpec, episode: Episode, points: PointSet) -> MaskSet:
    """One-shot convenience wrapper around a fresh provider instance."""
    return make_provider(spec).generate(episode, points)
