"""Planner — breaks an experiment into seeded per-trial train/test splits."""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class TrialSplit:
    """Image paths of one trial; train and test never share an image."""
    trial: int
    seed: int
    train_pos: Tuple[str, ...]
    train_neg: Tuple[str, ...]
    test_pos: Tuple[str, ...]
    test_neg: Tuple[str, ...]

    def train(self) -> Tuple[Tuple[str, ...], Tuple[int, ...]]:
        return self.train_pos + self.train_neg, (1,) * len(self.train_pos) + (-1,) * len(self.train_neg)

    def test(self) -> Tuple[Tuple[str, ...], Tuple[int, ...]]:
        return self.test_pos + self.test_neg, (1,) * len(self.test_pos) + (-1,) * len(self.test_neg)


class TrialPlanner:
    """Samples every trial's split without replacement from a seed derived from (master seed, trial)."""

    def __init__(self, master_seed: int, train_counts: Tuple[int, int], test_counts: Tuple[int, int]):
        self.master_seed = int(master_seed)
        self.train_counts = tuple(train_counts)
        self.test_counts = tuple(test_counts)

    def trial_seed(self, trial: int) -> int:
        return int(np.random.SeedSequence([self.master_seed, trial]).generate_state(1)[0])

    @staticmethod
    def _draw(rng: np.random.Generator, pool: Sequence[str], n_train: int, n_test: int, label: str):
        if len(pool) < n_train + n_test:
            raise ConfigError(
                f"Need {n_train} train + {n_test} test {label} images, found {len(pool)}"
            )
        order = rng.permutation(len(pool))
        picked = [pool[int(i)] for i in order[:n_train + n_test]]
        return tuple(picked[:n_train]), tuple(picked[n_train:])

    def plan(self, trial: int, positives: Sequence[str], negatives: Sequence[str]) -> TrialSplit:
        """
        Args:
            trial: 0-based trial index.
            positives: Sorted candidate paths of the positive class.
            negatives: Sorted candidate background paths.
        """
        seed = self.trial_seed(trial)
        rng = np.random.default_rng(seed)
        train_pos, test_pos = self._draw(rng, positives, self.train_counts[0], self.test_counts[0], "positive")
        train_neg, test_neg = self._draw(rng, negatives, self.train_counts[1], self.test_counts[1], "background")
        return TrialSplit(trial, seed, train_pos, train_neg, test_pos, test_neg)
