"""
Patch selection — builds PatchDictionaries from training images, either by
random C1 draws (conventional BIM) or by PSGHM (salient region ∩ FAST keypoints
on OGHM processing layers), plus dictionary persistence.
"""
import json
import zlib
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import ArgumentError, ConfigError, FormatVersionError, IntegrityError
from .hmax import PATCH_SIZES, C1Stack, Patch, PatchDictionary, PatchOrigin
from .imagecore import GrayImage
from .keypoints import DEFAULT_THRESHOLD, Keypoint, multiscale_keypoints
from .pipeline import FeaturePipeline
from .saliency import salient_region, spectral_residual
from .workers import ordered_map

FORMAT_VERSION = 1
SELECTORS = ("random", "psghm")

Slot = Tuple[int, int, int, int]  # (size, band, row, col)


@dataclass(frozen=True)
class SelectorConfig:
    budget: int = 1500
    sizes: Tuple[int, ...] = PATCH_SIZES
    selector: str = "random"
    per_image_cap: int = 100
    seed: int = 0
    fast_threshold: float = DEFAULT_THRESHOLD
    saliency_multiplier: float = 2.0
    s1_mode: str = "gabor"
    keypoint_layers: str = "oghm"

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(self.sizes))
        if self.budget < 1:
            raise ConfigError(f"selector.budget must be >= 1, got {self.budget}")
        if not self.sizes or not set(self.sizes) <= set(PATCH_SIZES):
            raise ConfigError(f"selector.sizes must be a non-empty subset of {PATCH_SIZES}, got {self.sizes}")
        if self.per_image_cap < 1:
            raise ConfigError(f"selector.per_image_cap must be >= 1, got {self.per_image_cap}")
        if self.selector not in SELECTORS:
            raise ConfigError(f"Unknown selector: {self.selector}. Available: {list(SELECTORS)}")


@dataclass
class ImageSelection:
    """Patches drawn from one training image, in selection order."""
    patches: List[Patch] = field(default_factory=list)
    used: Set[Slot] = field(default_factory=set)


def round_robin_shares(budget: int, n_images: int) -> List[int]:
    return [budget // n_images + (1 if i < budget % n_images else 0) for i in range(n_images)]


def _image_id(img: GrayImage, index: int) -> str:
    return img.name or f"image{index}"


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _check_sizes(c1: C1Stack, sizes: Sequence[int], image_id: str):
    for size in sizes:
        if not any(b.hosts(size) for b in c1.bands):
            raise ConfigError(f"No valid position for patch size {size} in image '{image_id}'")


def _take(c1: C1Stack, image_id: str, slot: Slot, kind: str, x: float, y: float,
          score: float = 0.0) -> Patch:
    size, band, row, col = slot
    values = c1.bands[band].window(int(row), int(col), int(size))
    return Patch(values, PatchOrigin(image_id, int(band), int(row), int(col), kind,
                                     float(x), float(y), float(score)))


def _slot_center(c1: C1Stack, slot: Slot) -> Tuple[float, float]:
    size, band, row, col = slot
    stride = c1.bands[band].band.stride
    return (col + size / 2.0) * stride, (row + size / 2.0) * stride


def _all_slots(c1: C1Stack, sizes: Sequence[int]) -> List[Tuple[int, int, int, int]]:
    """(size, band, rows, cols) for every size/band pair that hosts the size."""
    return [(size, b, band.rows - size + 1, band.cols - size + 1)
            for size in sizes for b, band in enumerate(c1.bands) if band.hosts(size)]


def _draw_uniform_slot(rng: np.random.Generator, blocks) -> Slot:
    counts = [rows * cols for _, _, rows, cols in blocks]
    u = int(rng.integers(sum(counts)))
    for (size, band, rows, cols), count in zip(blocks, counts):
        if u < count:
            break
        u -= count
    return size, band, u // cols, u % cols


def anchor_for_point(c1: C1Stack, band: int, size: int, x: float, y: float) -> Tuple[int, int]:
    """Top-left C1 anchor of a size×size patch centered on image point (x, y)."""
    c1band = c1.bands[band]
    stride = c1band.band.stride
    row = int(np.floor(y / stride + 0.5)) - size // 2
    col = int(np.floor(x / stride + 0.5)) - size // 2
    return (min(max(row, 0), c1band.rows - size), min(max(col, 0), c1band.cols - size))


def band_of_scale(c1: C1Stack, scale_index: int) -> Optional[int]:
    for b, band in enumerate(c1.bands):
        if scale_index in band.band.scales:
            return b
    return None


def _interleave(selections: List[List[Patch]]) -> List[Patch]:
    """Rank-major merge: every image's first patch, then every image's second, ..."""
    merged = []
    for rank in range(max(len(s) for s in selections)):
        merged.extend(s[rank] for s in selections if rank < len(s))
    return merged


def _random_for_image(c1: C1Stack, image_id: str, share: int, cfg: SelectorConfig,
                      rng: np.random.Generator) -> List[Patch]:
    blocks = _all_slots(c1, cfg.sizes)
    patches = []
    for _ in range(share):
        slot = _draw_uniform_slot(rng, blocks)
        x, y = _slot_center(c1, slot)
        patches.append(_take(c1, image_id, slot, "random", x, y))
    return patches


def select_random(images: Sequence[GrayImage], cfg: SelectorConfig,
                  pipeline: Optional[FeaturePipeline] = None,
                  log: Optional[Callable] = None) -> PatchDictionary:
    """Uniform C1 draws; images visited round-robin; exactly `cfg.budget` patches."""
    if not images:
        raise ArgumentError("select_random needs at least one training image")
    pipeline = pipeline or FeaturePipeline(s1_mode=cfg.s1_mode)
    shares = round_robin_shares(cfg.budget, len(images))
    stacks = pipeline.c1_all(images)
    selections = []
    for i, (img, c1) in enumerate(zip(images, stacks)):
        image_id = _image_id(img, i)
        _check_sizes(c1, cfg.sizes, image_id)
        selections.append(_random_for_image(c1, image_id, shares[i], cfg, _rng(cfg.seed, i)))
    if log:
        log("select", f"🎲 Drew {cfg.budget} random patches from {len(images)} images")
    return PatchDictionary(tuple(_interleave(selections)), "random", cfg.seed,
                           pipeline.config_fingerprint)


@dataclass(frozen=True)
class ImageAnalysis:
    """Per-image PSGHM inputs: C1 stack, salient mask and ranked keypoints."""
    c1: C1Stack
    mask: np.ndarray
    keypoints: Tuple[Keypoint, ...]


def analyze_image(img: GrayImage, cfg: SelectorConfig, pipeline: FeaturePipeline) -> ImageAnalysis:
    """Processing layers, salient region and multi-scale keypoints of one image."""
    c1 = pipeline.c1(img)
    layers = pipeline.layers(img, cfg.keypoint_layers)
    sal = spectral_residual(img, img.width, img.height)
    mask = salient_region(sal, cfg.saliency_multiplier)
    found = multiscale_keypoints(layers, mask, cfg.fast_threshold)
    ranked = sorted(found, key=lambda kp: (-kp.score, kp.scale_index, kp.theta, kp.y, kp.x))
    return ImageAnalysis(c1, mask.mask, tuple(ranked))


def host_band(c1: C1Stack, scale_index: int, size: int) -> Optional[int]:
    """The band pooling `scale_index` if it hosts `size`, else the nearest band that does."""
    own = band_of_scale(c1, scale_index)
    if own is None:
        return None
    hosts = [b for b, band in enumerate(c1.bands) if band.hosts(size)]
    if not hosts:
        return None
    return min(hosts, key=lambda b: (abs(b - own), b))


def _keypoint_candidates(analysis: ImageAnalysis, sizes: Sequence[int]):
    """(keypoint, size, band) triples: every configured size of a keypoint before the next keypoint."""
    for kp in analysis.keypoints:
        for size in sizes:
            band = host_band(analysis.c1, kp.scale_index, size)
            if band is not None:
                yield kp, size, band


def _psghm_for_image(analysis: ImageAnalysis, image_id: str, share: int, cfg: SelectorConfig,
                     rng: np.random.Generator) -> List[Patch]:
    c1 = analysis.c1
    chosen = ImageSelection()

    def accept(slot: Slot, kind: str, x: float, y: float, score: float = 0.0) -> bool:
        if slot in chosen.used:
            return False
        chosen.used.add(slot)
        chosen.patches.append(_take(c1, image_id, slot, kind, x, y, score))
        return True

    target = min(share, cfg.per_image_cap)
    for kp, size, band in _keypoint_candidates(analysis, cfg.sizes):
        if len(chosen.patches) >= target:
            break
        accept((size, band) + anchor_for_point(c1, band, size, kp.x, kp.y),
               "keypoint", kp.x, kp.y, kp.score)

    ys, xs = np.nonzero(analysis.mask)
    attempts = 0
    while len(chosen.patches) < share and len(ys) and attempts < 50 * share:
        attempts += 1
        k = int(rng.integers(len(ys)))
        size = int(rng.choice(cfg.sizes))
        hosts = [b for b, band in enumerate(c1.bands) if band.hosts(size)]
        band = hosts[int(rng.integers(len(hosts)))]
        x, y = float(xs[k]), float(ys[k])
        accept((size, band) + anchor_for_point(c1, band, size, x, y), "salient", x, y)

    if len(chosen.patches) < share:
        free = [(size, band, r, c) for size, band, rows, cols in _all_slots(c1, cfg.sizes)
                for r in range(rows) for c in range(cols)
                if (size, band, r, c) not in chosen.used]
        missing = share - len(chosen.patches)
        if len(free) < missing:
            raise ConfigError(
                f"Image '{image_id}' has only {len(free) + len(chosen.patches)} distinct patch "
                f"positions, needs {share}"
            )
        for k in sorted(rng.choice(len(free), size=missing, replace=False)):
            slot = free[int(k)]
            accept(slot, "image", *_slot_center(c1, slot))
    return chosen.patches


def select_psghm(images: Sequence[GrayImage], cfg: SelectorConfig,
                 pipeline: Optional[FeaturePipeline] = None,
                 log: Optional[Callable] = None) -> PatchDictionary:
    """
    Patches around FAST keypoints of the processing layers inside the salient region,
    highest score first, with salient-random then whole-image fallbacks.
    """
    if not images:
        raise ArgumentError("select_psghm needs at least one training image")
    pipeline = pipeline or FeaturePipeline(s1_mode=cfg.s1_mode)
    shares = round_robin_shares(cfg.budget, len(images))
    analyses = ordered_map(lambda img: analyze_image(img, cfg, pipeline), images, pipeline.threads)
    selections = []
    for i, (img, analysis) in enumerate(zip(images, analyses)):
        image_id = _image_id(img, i)
        _check_sizes(analysis.c1, cfg.sizes, image_id)
        patches = _psghm_for_image(analysis, image_id, shares[i], cfg, _rng(cfg.seed, i))
        fallbacks = sum(1 for p in patches if p.origin.kind != "keypoint")
        if fallbacks and log:
            log("warn", f"⚠ {image_id}: {fallbacks}/{shares[i]} patches from fallback positions")
        selections.append(patches)
    dictionary = PatchDictionary(tuple(_interleave(selections)), "psghm", cfg.seed,
                                 pipeline.config_fingerprint)
    if log:
        log("select", f"🎯 PSGHM selected {len(dictionary)} patches: {dictionary.provenance_counts()}")
    return dictionary


def select_patches(images: Sequence[GrayImage], cfg: SelectorConfig,
                   pipeline: Optional[FeaturePipeline] = None,
                   log: Optional[Callable] = None) -> PatchDictionary:
    if cfg.selector == "psghm":
        return select_psghm(images, cfg, pipeline, log)
    return select_random(images, cfg, pipeline, log)


# ─────────────────────────────────────────────────────────────────────
# Persistence: JSON envelope followed by a CRC-32 line
# ─────────────────────────────────────────────────────────────────────
def _patch_record(p: Patch) -> dict:
    o = p.origin
    return {
        "side": p.side,
        "orientations": p.values.shape[0],
        "band": o.band,
        "anchor": [o.row, o.col],
        "source": o.source,
        "kind": o.kind,
        "x": o.x,
        "y": o.y,
        "score": o.score,
        "values": p.values.ravel().tolist(),
    }


def _patch_from_record(r: dict) -> Patch:
    values = np.array(r["values"], dtype=np.float64).reshape(r["orientations"], r["side"], r["side"])
    origin = PatchOrigin(r["source"], int(r["band"]), int(r["anchor"][0]), int(r["anchor"][1]),
                         r["kind"], float(r["x"]), float(r["y"]), float(r["score"]))
    return Patch(values, origin)


def dictionary_to_text(d: PatchDictionary) -> str:
    envelope = {
        "format_version": FORMAT_VERSION,
        "selector": d.selector,
        "seed": d.seed,
        "config_fingerprint": d.config_fingerprint,
        "fingerprint": d.fingerprint,
        "patches": [_patch_record(p) for p in d.patches],
    }
    body = json.dumps(envelope, sort_keys=True)
    return f"{body}\ncrc32 {zlib.crc32(body.encode('utf-8')):08x}\n"


def save_dictionary(d: PatchDictionary, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dictionary_to_text(d))


def load_dictionary(path: str) -> PatchDictionary:
    with open(path, "r", encoding="utf-8", newline="\n") as f:
        text = f.read()
    lines = text.rstrip("\n").split("\n")
    if len(lines) != 2 or not lines[1].startswith("crc32 "):
        raise IntegrityError(f"Dictionary file '{path}' is truncated or has no checksum line")
    body, checksum = lines[0], lines[1][len("crc32 "):]
    if f"{zlib.crc32(body.encode('utf-8')):08x}" != checksum:
        raise IntegrityError(f"Dictionary file '{path}' failed its CRC-32 check")
    try:
        envelope = json.loads(body)
    except json.JSONDecodeError as e:
        raise IntegrityError(f"Dictionary file '{path}' is not valid JSON: {e}") from e
    version = envelope.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(
            f"Dictionary file '{path}' has format version {version}; "
            f"this build reads version {FORMAT_VERSION}"
        )
    d = PatchDictionary(
        tuple(_patch_from_record(r) for r in envelope["patches"]),
        envelope["selector"], int(envelope["seed"]), envelope["config_fingerprint"],
    )
    if d.fingerprint != envelope.get("fingerprint"):
        raise IntegrityError(f"Dictionary file '{path}' content does not match its fingerprint")
    return d
