"""Seeded synthetic scenes: shape instances with part structure and
prototype-plus-noise embeddings. Serves as a test double for the real
feature extractor and mask generator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .alignment import PointSet
from .episode import BinaryMask, Episode, FeatureMap
from .resample import grid_fractions

DIFFICULTIES = ("easy", "ambiguous", "multi-instance")
AMBIGUITIES = ("instance", "part", "mixed")

EMBED_DIM = 16
DEFAULT_IMAGE_SIZE = (256, 256)
DEFAULT_GRID = (32, 32)

TARGET_CLASS = 1
DISTRACTOR_CLASS = 2

# Prototype geometry: cos(distractor, target) and cos(distractor, bg anchor).
# Chosen so distractor cells pass neither the point-selection filter nor the
# self-consistency check of a mistakenly prompted mask.
_DIST_COS_TARGET = 0.35
_DIST_COS_BG = 0.30

# Background anchor positions in normalized (row, col) grid coordinates.
_BG_ANCHORS = ((0.25, 0.25), (0.75, 0.75))


@dataclass(frozen=True)
class Instance:
    class_id: int
    region: np.ndarray          # (H, W) uint8
    parts: list[np.ndarray]     # partition of region


@dataclass(frozen=True)
class Scene:
    image_size: tuple[int, int]
    instances: list[Instance]
    prototypes: dict[int, np.ndarray]
    background_prototypes: list[np.ndarray]
    noise_sigma: float
    seed: int


def make_prototypes(seed: int, c: int = EMBED_DIM):
    """Class and background prototypes with controlled pairwise cosines."""
    rng = np.random.default_rng([int(seed), 0x5EED])
    basis, _ = np.linalg.qr(rng.normal(size=(c, 4)))
    e0, e1, e2, e3 = basis.T
    target = e0
    b1 = e1
    b2 = (e1 + e2) / np.linalg.norm(e1 + e2)
    a, b = _DIST_COS_TARGET, _DIST_COS_BG
    distractor = a * e0 + b * e1 + np.sqrt(1.0 - a * a - b * b) * e3
    protos = {
        TARGET_CLASS: target.astype(np.float64),
        DISTRACTOR_CLASS: distractor.astype(np.float64),
    }
    return protos, [b1.astype(np.float64), b2.astype(np.float64)]


def _place_rect(rng, occupied, H, W, hmin, hmax, wmin, wmax, margin):
    """Rejection-sample a rectangle keeping `margin` pixels clear of the
    occupied map and image border. Returns (y0, y1, x0, x1) or None."""
    for _ in range(200):
        rh = int(rng.integers(hmin, hmax + 1))
        rw = int(rng.integers(wmin, wmax + 1))
        if H - margin - rh <= margin or W - margin - rw <= margin:
            continue
        y0 = int(rng.integers(margin, H - margin - rh))
        x0 = int(rng.integers(margin, W - margin - rw))
        lo_y, hi_y = max(0, y0 - margin), min(H, y0 + rh + margin)
        lo_x, hi_x = max(0, x0 - margin), min(W, x0 + rw + margin)
        if not occupied[lo_y:hi_y, lo_x:hi_x].any():
            occupied[y0:y0 + rh, x0:x0 + rw] = 1
            return y0, y0 + rh, x0, x0 + rw
    return None


def _split_parts(region, y0, y1, x0, x1, n_parts):
    """Partition a rectangle into vertical strips of equal width."""
    if n_parts <= 1:
        return [region.copy()]
    bounds = np.linspace(x0, x1, n_parts + 1).astype(int)
    parts = []
    for i in range(n_parts):
        part = np.zeros_like(region)
        part[y0:y1, bounds[i]:bounds[i + 1]] = 1
        parts.append(part)
    return parts


def generate_scene(
    seed: int,
    difficulty: str = "easy",
    prototypes=None,
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE,
    noise_sigma: float = 0.1,
) -> Scene:
    """Deterministically generate a scene for the given difficulty.

    easy: 1-2 well-separated convex target instances (>= 8 px apart).
    ambiguous: target instances with 2-4 parts.
    multi-instance: target instances, each shadowed by an adjacent
    distractor-class region placed so that one boundary feature cell is
    majority-target while its patch center falls inside the distractor
    (the coordinate-bias overshoot case).
    """
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"unknown difficulty {difficulty!r}")
    if prototypes is None:
        protos, bg_protos = make_prototypes(seed)
    else:
        protos, bg_protos = prototypes
    H, W = image_size
    rng = np.random.default_rng([int(seed), 0xD1FF])
    occupied = np.zeros((H, W), dtype=np.uint8)
    instances: list[Instance] = []

    if difficulty in ("easy", "ambiguous"):
        n_inst = int(rng.integers(1, 3))
        n_parts_lo, n_parts_hi = (2, 2) if difficulty == "easy" else (2, 4)
        for _ in range(n_inst):
            box = _place_rect(rng, occupied, H, W, 40, 88, 48, 96, 16)
            if box is None:
                continue
            y0, y1, x0, x1 = box
            region = np.zeros((H, W), dtype=np.uint8)
            region[y0:y1, x0:x1] = 1
            n_parts = int(rng.integers(n_parts_lo, n_parts_hi + 1))
            instances.append(Instance(
                TARGET_CLASS, region, _split_parts(region, y0, y1, x0, x1, n_parts)))
    else:  # multi-instance
        for _ in range(2):
            # Target rectangle; right edge snapped to 8*cc + 4 so the straddle
            # cell is exactly half target while its patch center lands just
            # outside the region.
            box = _place_rect(rng, occupied, H, W, 40, 72, 44, 68, 16)
            if box is None:
                continue
            y0, y1, x0, x1_box = box
            x1 = (x1_box // 8) * 8 + 4
            occupied[y0:y1, x0:max(x1, x1_box)] = 0
            region = np.zeros((H, W), dtype=np.uint8)
            region[y0:y1, x0:x1] = 1
            occupied |= region
            instances.append(Instance(
                TARGET_CLASS, region, _split_parts(region, y0, y1, x0, x1, 2)))

            # Distractor: thin bar poking at the straddle cell's center row,
            # attached to a larger block to the right.
            cr = ((y0 + y1) // 2) // 8
            if 8 * cr < y0 or 8 * cr + 8 > y1:
                cr = (y0 + 7) // 8
            bar_y0, bar_y1 = 8 * cr + 3, 8 * cr + 6
            bar_x0 = x1
            block_w = int(rng.integers(36, 60))
            block_h = int(rng.integers(36, 60))
            bar_len = int(rng.integers(14, 22))
            block_x0 = bar_x0 + bar_len
            block_x1 = min(block_x0 + block_w, W - 4)
            block_y0 = max(4, 8 * cr + 4 - block_h // 2)
            block_y1 = min(block_y0 + block_h, H - 4)
            dist = np.zeros((H, W), dtype=np.uint8)
            dist[bar_y0:bar_y1, bar_x0:max(block_x1, bar_x0 + bar_len)] = 1
            if block_x1 > block_x0:
                dist[block_y0:block_y1, block_x0:block_x1] = 1
            dist &= ~occupied
            dist[:, W - 4:] = 0
            if dist.any():
                occupied |= dist
                instances.append(Instance(DISTRACTOR_CLASS, dist, [dist.copy()]))

    if not any(i.class_id == TARGET_CLASS for i in instances):
        # Placement never fully fails in practice, but keep a fixed fallback.
        region = np.zeros((H, W), dtype=np.uint8)
        region[60:120, 60:124] = 1
        instances.insert(0, Instance(
            TARGET_CLASS, region, _split_parts(region, 60, 120, 60, 124, 2)))

    return Scene(
        image_size=image_size,
        instances=instances,
        prototypes=protos,
        background_prototypes=bg_protos,
        noise_sigma=noise_sigma,
        seed=int(seed),
    )


def render_features(scene: Scene, grid: tuple[int, int] = DEFAULT_GRID) -> FeatureMap:
    """Embed each grid cell as the prototype of its majority class plus
    seeded Gaussian noise, unit-normalized. Background cells use the nearest
    background anchor's prototype."""
    h, w = grid
    c = len(next(iter(scene.prototypes.values())))
    class_ids = sorted({i.class_id for i in scene.instances})
    fracs = []
    for cid in class_ids:
        acc = np.zeros(scene.image_size, dtype=np.float64)
        for inst in scene.instances:
            if inst.class_id == cid:
                acc += inst.region
        fracs.append(grid_fractions(acc, grid))
    fracs = np.stack(fracs) if fracs else np.zeros((0, h, w))
    bg_frac = 1.0 - fracs.sum(axis=0)

    # Instance classes win area ties against background.
    stacked = np.concatenate([fracs, bg_frac[None] - 1e-9], axis=0)
    winner = stacked.argmax(axis=0)

    anchors = np.array(_BG_ANCHORS) * np.array([h, w])
    rows, cols = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
    d2 = [(rows - ar) ** 2 + (cols - ac) ** 2 for ar, ac in anchors]
    nearest_anchor = np.stack(d2).argmin(axis=0)

    rng = np.random.default_rng([scene.seed, 0xFEA7])
    out = np.zeros((h, w, c), dtype=np.float64)
    for r in range(h):
        for col in range(w):
            k = winner[r, col]
            if k < len(class_ids):
                proto = scene.prototypes[class_ids[k]]
            else:
                proto = scene.background_prototypes[nearest_anchor[r, col]]
            v = proto + scene.noise_sigma * rng.normal(size=c)
            out[r, col] = v / np.linalg.norm(v)
    return FeatureMap(out.astype(np.float32))


def class_mask(scene: Scene, class_id: int = TARGET_CLASS) -> BinaryMask:
    """Union of the scene's instance regions of one class."""
    out = np.zeros(scene.image_size, dtype=np.uint8)
    for inst in scene.instances:
        if inst.class_id == class_id:
            out |= inst.region
    return BinaryMask(out)


def _background_blob(scene: Scene, x: int, y: int) -> np.ndarray:
    """Seeded random blob around a background point, clear of all instances."""
    H, W = scene.image_size
    rng = np.random.default_rng([scene.seed, 0xB10B, int(x), int(y)])
    radius = int(rng.integers(8, 16))
    yy, xx = np.ogrid[:H, :W]
    blob = ((yy - y) ** 2 + (xx - x) ** 2 <= radius ** 2).astype(np.uint8)
    for inst in scene.instances:
        blob &= ~inst.region
    blob[y, x] = 1
    return blob


def oracle_masks(scene: Scene, points: PointSet, ambiguity: str = "mixed"):
    """Answer point prompts from scene geometry: instance region, containing
    part, or a seeded choice of the two; background points get a blob."""
    from .providers import MaskSet  # local import to avoid a cycle

    if ambiguity not in AMBIGUITIES:
        raise ValueError(f"unknown ambiguity {ambiguity!r}")
    masks = []
    for x, y in points.image_points:
        hit = None
        for inst in scene.instances:
            if inst.region[y, x]:
                hit = inst
                break
        if hit is None:
            masks.append(BinaryMask(_background_blob(scene, int(x), int(y))))
            continue
        if ambiguity == "mixed":
            rng = np.random.default_rng([scene.seed, 0xA11B, int(x), int(y)])
            mode = "part" if rng.random() < 0.5 else "instance"
        else:
            mode = ambiguity
        if mode == "instance" or len(hit.parts) == 1:
            masks.append(BinaryMask(hit.region.copy()))
        else:
            part = next(p for p in hit.parts if p[y, x])
            masks.append(BinaryMask(part.copy()))
    return MaskSet(masks=masks, resolution=scene.image_size)


def make_episode(
    seed: int,
    difficulty: str = "easy",
    noise_sigma: float = 0.1,
    k: int = 1,
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE,
    grid: tuple[int, int] = DEFAULT_GRID,
) -> tuple[Episode, Scene]:
    """Build one synthetic episode (and its target scene) from a seed.

    Reference scenes are always easy-style so the reference mask is a clean
    target-class example; the target scene follows the requested difficulty.
    """
    prototypes = make_prototypes(seed)
    target_seed = 100 * seed + 1
    target_scene = generate_scene(
        target_seed, difficulty, prototypes, image_size, noise_sigma)
    refs = []
    for i in range(k):
        ref_scene = generate_scene(
            100 * seed + 2 + i, "easy", prototypes, image_size, noise_sigma)
        refs.append((render_features(ref_scene, grid), class_mask(ref_scene)))
    episode = Episode(
        id=f"ep{seed:05d}-{difficulty}",
        target_features=render_features(target_scene, grid),
        references=refs,
        class_id=TARGET_CLASS,
        image_size=image_size,
        target_gt=class_mask(target_scene),
        provider_size=image_size,
        provider_hint=json.dumps(
            {"scene_seed": target_seed, "difficulty": difficulty,
             "noise_sigma": noise_sigma}, sort_keys=True),
    )
    return episode, target_scene


def scene_from_hint(hint: str) -> Scene:
    """Rebuild the target scene an oracle provider needs from an episode's
    provider hint."""
    info = json.loads(hint)
    return generate_scene(
        info["scene_seed"], info["difficulty"],
        noise_sigma=info.get("noise_sigma", 0.1))
