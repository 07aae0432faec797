"""Configuration management for the PBIM pipeline."""
import copy
import hashlib
import json
import os
from typing import Any, Optional

import yaml
from dotenv import load_dotenv

from .errors import ConfigError
from .filterbank import DEFAULT_CROSSOVER, DEFAULT_ORIENTATIONS, DEFAULT_SIZES, GaborBank, OghmBank
from .hmax import PATCH_SIZES, BandSpec, MatchConfig
from .keypoints import DEFAULT_THRESHOLD
from .patchselect import SELECTORS, SelectorConfig
from .pipeline import S1_MODES
from .svm import DEFAULT_EPOCHS

THREADS_ENV = "PBIM_THREADS"
BACKENDS = ("auto", "direct", "spectral")

# Every recognised key with its default; anything else in a config file is an error
DEFAULTS = {
    "filters": {
        "s1_mode": "gabor",
        "backend": "auto",
        "spectral_crossover": DEFAULT_CROSSOVER,
        "sizes": list(DEFAULT_SIZES),
        "gabor": {"gamma": 0.3},
        "oghm": {"orders": [1, 0], "sigma_ratio": 0.25},
    },
    "hmax": {
        "bands": None,
        "beta": None,
        "patch_sizes": list(PATCH_SIZES),
    },
    "saliency": {"multiplier": 2.0},
    "keypoints": {"fast_threshold": DEFAULT_THRESHOLD, "layers": "oghm"},
    "selector": {"kind": "random", "budget": 1500, "per_image_cap": 100, "seed": 0},
    "svm": {"C": 1.0, "epochs": DEFAULT_EPOCHS},
    "runtime": {"threads": 1},
}


def merge_known(base: dict, override: dict, prefix: str = "") -> dict:
    """Deep-merge `override` into a copy of `base`, rejecting keys `base` does not know."""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"Unknown config key: {dotted}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"Config key {dotted} must be a mapping")
            merged[key] = merge_known(base[key], value, dotted + ".")
        else:
            merged[key] = value
    return merged


def load_yaml(path: str) -> dict:
    """Parse a YAML (or JSON) document into a mapping."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file '{path}' is not valid YAML/JSON: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file '{path}' must contain a mapping at top level")
    return data


class Config:
    """Loads and validates PipelineConfig from config.yaml and .env files."""

    def __init__(self, config_path: Optional[str] = "config.yaml", overrides: Optional[dict] = None):
        load_dotenv()
        self.path = config_path
        self.missing = False
        raw = {}
        if config_path:
            try:
                raw = load_yaml(config_path)
            except FileNotFoundError:
                self.missing = True
        self._config = merge_known(DEFAULTS, raw)
        if overrides:
            self._config = merge_known(self._config, overrides)
        self._validate()

    def _validate(self):
        if self.s1_mode not in S1_MODES:
            raise ConfigError(f"filters.s1_mode must be one of {list(S1_MODES)}, got {self.s1_mode!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"filters.backend must be one of {list(BACKENDS)}, got {self.backend!r}")
        if self.get("keypoints.layers") not in S1_MODES:
            raise ConfigError(f"keypoints.layers must be one of {list(S1_MODES)}")
        if self.get("selector.kind") not in SELECTORS:
            raise ConfigError(f"selector.kind must be one of {list(SELECTORS)}")
        orders = self.get("filters.oghm.orders")
        if not (isinstance(orders, (list, tuple)) and len(orders) == 2):
            raise ConfigError(f"filters.oghm.orders must be a [p, q] pair, got {orders!r}")
        if not float(self.get("svm.C")) > 0:
            raise ConfigError("svm.C must be positive")
        if int(self.get("svm.epochs")) < 1:
            raise ConfigError("svm.epochs must be >= 1")
        # surfaces malformed band tables and patch sizes now rather than mid-run
        self.band_spec()
        self.selector_config()
        self.match_config()

    def get(self, key: str, default: Any = None) -> Any:
        """Get a config value using dot notation (e.g., 'hmax.beta')."""
        value = self._config
        for k in key.split("."):
            if isinstance(value, dict):
                value = value.get(k)
            else:
                return default
            if value is None:
                return default
        return value

    def set(self, key: str, value: Any):
        """Set a known dotted key (used for CLI flag overrides)."""
        parts = key.split(".")
        nested = value
        for k in reversed(parts):
            nested = {k: nested}
        self._config = merge_known(self._config, nested)
        self._validate()

    def derive(self, overrides: dict) -> "Config":
        """A copy with `overrides` merged over this config's values."""
        derived = copy.copy(self)
        derived._config = merge_known(self._config, overrides)
        derived._validate()
        return derived

    def as_dict(self) -> dict:
        return copy.deepcopy(self._config)

    @property
    def s1_mode(self) -> str:
        return self.get("filters.s1_mode", "gabor")

    @property
    def backend(self) -> str:
        return self.get("filters.backend", "auto")

    @property
    def spectral_crossover(self) -> int:
        return int(self.get("filters.spectral_crossover", DEFAULT_CROSSOVER))

    @property
    def threads(self) -> int:
        """PBIM_THREADS wins over runtime.threads; 0 = one worker per CPU."""
        env = os.getenv(THREADS_ENV)
        if env not in (None, ""):
            try:
                return max(int(env), 0)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}")
        return max(int(self.get("runtime.threads", 1)), 0)

    def gabor_bank(self) -> GaborBank:
        return GaborBank(sizes=tuple(self.get("filters.sizes")), orientations=DEFAULT_ORIENTATIONS,
                         gamma=float(self.get("filters.gabor.gamma")))

    def oghm_bank(self) -> OghmBank:
        p, q = self.get("filters.oghm.orders")
        return OghmBank(sizes=tuple(self.get("filters.sizes")), orientations=DEFAULT_ORIENTATIONS,
                        orders=(int(p), int(q)), sigma_ratio=float(self.get("filters.oghm.sigma_ratio")))

    def band_spec(self) -> BandSpec:
        rows = self.get("hmax.bands")
        if rows is None:
            return BandSpec.default()
        try:
            return BandSpec.from_list(rows)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"hmax.bands is malformed: {e}") from e

    def match_config(self) -> MatchConfig:
        beta = self.get("hmax.beta")
        try:
            return MatchConfig(None if beta is None else float(beta))
        except ValueError as e:
            raise ConfigError(f"hmax.beta: {e}") from e

    def selector_config(self, s1_mode: Optional[str] = None) -> SelectorConfig:
        return SelectorConfig(
            budget=int(self.get("selector.budget")),
            sizes=tuple(int(s) for s in self.get("hmax.patch_sizes")),
            selector=self.get("selector.kind"),
            per_image_cap=int(self.get("selector.per_image_cap")),
            seed=int(self.get("selector.seed", 0)),
            fast_threshold=float(self.get("keypoints.fast_threshold")),
            saliency_multiplier=float(self.get("saliency.multiplier")),
            s1_mode=s1_mode or self.s1_mode,
            keypoint_layers=self.get("keypoints.layers"),
        )

    def svm_params(self) -> dict:
        return {"C": float(self.get("svm.C")), "epochs": int(self.get("svm.epochs"))}

    def config_fingerprint(self, s1_mode: Optional[str] = None) -> str:
        """SHA-1 over every setting that changes C2 values (backend choice excluded)."""
        mode = s1_mode or self.s1_mode
        bank = self.get("filters.gabor") if mode == "gabor" else self.get("filters.oghm")
        settings = {
            "s1_mode": mode,
            "sizes": self.get("filters.sizes"),
            "bank": bank,
            "bands": self.get("hmax.bands"),
            "beta": self.get("hmax.beta"),
        }
        canonical = json.dumps(settings, sort_keys=True)
        return hashlib.sha1(canonical.encode("utf-8")).hexdigest()
