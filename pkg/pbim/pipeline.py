"""Feature pipeline — runs images through S1 → C1 → C2 (filter → pool → match)."""
from typing import Callable, Dict, List, Optional, Sequence

from .errors import ArgumentError
from .filterbank import (
    DEFAULT_CROSSOVER, GaborBank, LayerStack, OghmBank, processing_layers, s1_layers,
)
from .hmax import BandSpec, C1Stack, FeatureVector, MatchConfig, PatchDictionary, c1_layers, c2_features
from .imagecore import GrayImage
from .workers import ordered_map

S1_MODES = ("gabor", "oghm")


class FeaturePipeline:
    """Executes the per-image stages: filter bank → C1 pooling → C2 matching."""

    def __init__(self, s1_mode: str = "gabor", gabor_bank: Optional[GaborBank] = None,
                 oghm_bank: Optional[OghmBank] = None, band_spec: Optional[BandSpec] = None,
                 match: Optional[MatchConfig] = None, backend: str = "auto",
                 crossover: int = DEFAULT_CROSSOVER, threads: int = 1,
                 config_fingerprint: str = ""):
        if s1_mode not in S1_MODES:
            raise ArgumentError(f"Unknown s1_mode: {s1_mode}. Available: {list(S1_MODES)}")
        self.s1_mode = s1_mode
        self.gabor_bank = gabor_bank or GaborBank()
        self.oghm_bank = oghm_bank or OghmBank()
        self.band_spec = band_spec or BandSpec.default()
        self.match = match or MatchConfig()
        self.backend = backend
        self.crossover = crossover
        self.threads = threads
        self.config_fingerprint = config_fingerprint
        self._c1_cache: Dict[str, C1Stack] = {}
        self.log_fn: Optional[Callable] = None

    @classmethod
    def from_config(cls, config, s1_mode: Optional[str] = None) -> "FeaturePipeline":
        mode = s1_mode or config.s1_mode
        return cls(
            s1_mode=mode,
            gabor_bank=config.gabor_bank(),
            oghm_bank=config.oghm_bank(),
            band_spec=config.band_spec(),
            match=config.match_config(),
            backend=config.backend,
            crossover=config.spectral_crossover,
            threads=config.threads,
            config_fingerprint=config.config_fingerprint(s1_mode=mode),
        )

    def set_logger(self, fn: Callable):
        self.log_fn = fn

    def _log(self, phase: str, msg: str):
        if self.log_fn:
            self.log_fn(phase, msg)

    def layers(self, img: GrayImage, kind: Optional[str] = None) -> LayerStack:
        """Gabor S1 or OGHM processing layers; `kind` defaults to the pipeline's s1_mode."""
        kind = kind or self.s1_mode
        if kind == "gabor":
            return s1_layers(img, self.gabor_bank, self.backend, self.crossover, self.threads)
        if kind == "oghm":
            return processing_layers(img, self.oghm_bank, self.backend, self.crossover, self.threads)
        raise ArgumentError(f"Unknown layer kind: {kind}. Available: {list(S1_MODES)}")

    def c1(self, img: GrayImage) -> C1Stack:
        """C1 stack of an image, cached by content for the lifetime of the pipeline."""
        key = img.fingerprint
        cached = self._c1_cache.get(key)
        if cached is None:
            cached = c1_layers(self.layers(img), self.band_spec)
            self._c1_cache[key] = cached
        return cached

    def features(self, img: GrayImage, dictionary: PatchDictionary) -> FeatureVector:
        if self.config_fingerprint and dictionary.config_fingerprint \
                and dictionary.config_fingerprint != self.config_fingerprint:
            raise ArgumentError(
                "Dictionary was built with a different pipeline configuration "
                f"({dictionary.config_fingerprint[:12]} vs {self.config_fingerprint[:12]})"
            )
        vector = c2_features(self.c1(img), dictionary, self.match)
        if vector.skipped:
            self._log("warn", f"⚠ {img.name or 'image'}: {len(vector.skipped)} patches fit no C1 band")
        return vector

    def c1_all(self, images: Sequence[GrayImage]) -> List[C1Stack]:
        return ordered_map(self.c1, images, self.threads)

    def extract_all(self, images: Sequence[GrayImage], dictionary: PatchDictionary) -> List[FeatureVector]:
        """C2 vectors for every image, in input order."""
        self._log("extract", f"🧮 Extracting {len(dictionary)} C2 features from {len(images)} images...")
        self.c1_all(images)
        return ordered_map(lambda img: self.features(img, dictionary), images, self.threads)

    def clear_cache(self):
        self._c1_cache.clear()
