"""Linear SVM — standardized features, L2-regularized hinge loss, Pegasos subgradient steps."""
import json
from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence, Tuple

import numpy as np
from numpy.linalg import norm

from .errors import ArgumentError, FormatVersionError, TrainingError
from .hmax import FeatureVector

DEFAULT_EPOCHS = 40
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    dictionary_fingerprint: str
    seed: int = 0
    C: float = 1.0
    constant_features: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        for name in ("weights", "mean", "std"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.weights) == len(self.mean) == len(self.std)):
            raise ArgumentError("LinearModel weights and standardization stats differ in length")
        if np.any(self.std <= 0):
            raise ArgumentError("LinearModel standard deviations must be positive")

    def __len__(self):
        return len(self.weights)

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (self.bias == other.bias and self.seed == other.seed and self.C == other.C
                and self.dictionary_fingerprint == other.dictionary_fingerprint
                and self.constant_features == other.constant_features
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in ("weights", "mean", "std")))


def _stack(features: Sequence[FeatureVector]) -> Tuple[np.ndarray, str]:
    if not features:
        raise TrainingError("No training examples")
    lengths = {len(f) for f in features}
    if len(lengths) != 1:
        raise ArgumentError(f"Inconsistent feature lengths: {sorted(lengths)}")
    prints = {f.dictionary_fingerprint for f in features}
    if len(prints) != 1:
        raise ArgumentError("Training features come from different dictionaries")
    return np.stack([f.values for f in features]), prints.pop()


def train_svm(features: Sequence[FeatureVector], labels: Sequence[int], C: float = 1.0,
              seed: int = 0, epochs: int = DEFAULT_EPOCHS) -> LinearModel:
    """
    Fit a linear SVM by Pegasos: λ = 1/(C·n), step 1/(λt), one seeded permutation
    of the training set per epoch, projection onto the ‖w‖ ≤ 1/√λ ball. The bias is
    learned as the weight of a constant unit feature.
    """
    X, fingerprint = _stack(features)
    y = np.asarray(labels, dtype=np.float64)
    if len(y) != len(X):
        raise ArgumentError(f"{len(X)} feature vectors but {len(y)} labels")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ArgumentError("Labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise TrainingError("Training needs at least one example of each label")
    if not C > 0 or epochs < 1:
        raise ArgumentError(f"Need C > 0 and epochs >= 1, got C={C}, epochs={epochs}")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    flat = std <= 1e-12
    constant = tuple(int(i) for i in np.nonzero(flat)[0])
    std = np.where(flat, 1.0, std)
    Z = np.hstack([(X - mean) / std, np.ones((len(X), 1))])

    n = len(Z)
    lambda_ = 1.0 / (C * n)
    radius = 1.0 / sqrt(lambda_)
    rng = np.random.default_rng(seed)
    w = np.zeros(Z.shape[1])
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lambda_ * t)
            margin = y[i] * (w @ Z[i])
            w *= 1.0 - eta * lambda_
            if margin < 1.0:
                w += eta * y[i] * Z[i]
            size = norm(w)
            if size > radius:
                w *= radius / size
    return LinearModel(w[:-1], float(w[-1]), mean, std, fingerprint, seed, C, constant)


def standardize(model: LinearModel, f: FeatureVector) -> np.ndarray:
    if f.dictionary_fingerprint != model.dictionary_fingerprint:
        raise ArgumentError("Feature vector and model come from different dictionaries")
    if len(f) != len(model):
        raise ArgumentError(f"Feature length {len(f)} does not match model length {len(model)}")
    return (f.values - model.mean) / model.std


def decision(model: LinearModel, f: FeatureVector) -> float:
    """Signed score w·standardize(f) + b."""
    return float(model.weights @ standardize(model, f) + model.bias)


def predict(model: LinearModel, f: FeatureVector) -> int:
    """+1 or −1; a zero score counts as positive."""
    return 1 if decision(model, f) >= 0.0 else -1


def model_to_dict(model: LinearModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "dictionary_fingerprint": model.dictionary_fingerprint,
        "seed": model.seed,
        "C": model.C,
        "constant_features": list(model.constant_features),
    }


def save_model(model: LinearModel, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n")


def load_model(path: str) -> LinearModel:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise FormatVersionError(
            f"Model file '{path}' has format version {version}; "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    return LinearModel(
        np.array(data["weights"]), float(data["bias"]), np.array(data["mean"]),
        np.array(data["std"]), data["dictionary_fingerprint"], int(data["seed"]),
        float(data["C"]), tuple(data["constant_features"]),
    )
