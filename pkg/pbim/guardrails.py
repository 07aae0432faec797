"""
Guardrails — checks that stop a run early when its inputs cannot satisfy
the requested protocol, with messages naming what is missing.
"""
from typing import Callable, Optional, Sequence

from .errors import ConfigError, ImageReadError


class Guardrails:
    """Validates datasets, sweeps and input lists before the expensive stages run."""

    def __init__(self):
        self._log_callback: Optional[Callable] = None

    def set_logger(self, logger: Callable):
        self._log_callback = logger

    def _log(self, phase: str, message: str):
        if self._log_callback:
            self._log_callback(phase, message)

    def check_counts(self, label: str, available: int, n_train: int, n_test: int):
        needed = n_train + n_test
        if available < needed:
            raise ConfigError(
                f"Class '{label}' has {available} images, needs {n_train} train + {n_test} test = "
                f"{needed} (short by {needed - available})"
            )

    def check_experiment(self, cfg, dataset):
        """Every positive class and the background hold enough images for one split."""
        for name in cfg.positive_class:
            self.check_counts(name, len(dataset.images(name)), cfg.train_counts[0], cfg.test_counts[0])
        self.check_counts("background", len(dataset.background), cfg.train_counts[1], cfg.test_counts[1])
        self.check_sweep(cfg.sweep, cfg.budget)
        self._log("init", f"✅ Dataset '{dataset.root}' satisfies the split sizes")

    def check_sweep(self, sweep: Sequence[int], budget: int):
        if not sweep:
            raise ConfigError("Feature-count sweep is empty")
        bad = [k for k in sweep if k < 1 or k > budget]
        if bad:
            raise ConfigError(f"Sweep values {bad} fall outside 1..{budget} (dictionary budget)")

    def check_inputs(self, paths: Sequence[str], loaded: Sequence, where: str):
        """No paths is a config error; paths that all fail to decode is a read error."""
        if not paths:
            raise ConfigError(f"No inputs: '{where}' contains no supported images")
        if not loaded:
            raise ImageReadError(f"All {len(paths)} images in '{where}' failed to load")
        if len(loaded) < len(paths):
            self._log("warn", f"⚠ {len(paths) - len(loaded)} of {len(paths)} images skipped")
