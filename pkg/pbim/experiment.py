"""
Experiment harness — the main loop that orchestrates, per variant, class and trial:
    SPLIT → SELECT PATCHES → EXTRACT → (per sweep k) TRAIN → EVALUATE → AGGREGATE
"""
import csv
import io
import json
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import Config, load_yaml
from .errors import ConfigError
from .evaluation import ConfusionCounts, metrics, recall_precision_curve, roc
from .guardrails import Guardrails
from .memory import RunMemory
from .patchselect import SELECTORS, select_patches
from .pipeline import S1_MODES, FeaturePipeline
from .planner import TrialPlanner, TrialSplit
from .svm import decision, train_svm
from .tools.dataset import ImageLoader, scan_dataset

# variant → (s1_mode, selector)
VARIANTS = {
    "bim": ("gabor", "random"),
    "mbim": ("oghm", "random"),
    "pbim": ("oghm", "psghm"),
}
REPORT_METRICS = ("classification_rate", "recall", "one_minus_precision",
                  "one_minus_precision_gt", "auc", "eer_detection_rate")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_root: str
    positive_class: Tuple[str, ...]
    train_counts: Tuple[int, int] = (15, 15)
    test_counts: Tuple[int, int] = (50, 50)
    trials: int = 10
    sweep: Tuple[int, ...] = (5, 10, 25)
    budget: Optional[int] = None
    selector: str = "random"
    s1_mode: str = "gabor"
    variants: Tuple[str, ...] = ()
    master_seed: int = 0
    C: Optional[float] = None
    pipeline: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        classes = self.positive_class
        if isinstance(classes, str):
            classes = (classes,)
        object.__setattr__(self, "positive_class", tuple(classes))
        for name in ("train_counts", "test_counts", "sweep", "variants"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.budget is None:
            object.__setattr__(self, "budget", max(self.sweep) if self.sweep else 1)
        if not self.positive_class:
            raise ConfigError("positive_class must name at least one class")
        if len(self.train_counts) != 2 or len(self.test_counts) != 2:
            raise ConfigError("train_counts and test_counts must be [positives, negatives] pairs")
        if min(self.train_counts + self.test_counts) < 1:
            raise ConfigError(f"Image counts must be >= 1, got train {self.train_counts}, test {self.test_counts}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if not self.sweep or any(k < 1 or k > self.budget for k in self.sweep):
            raise ConfigError(f"sweep values must lie in 1..{self.budget}, got {list(self.sweep)}")
        if self.selector not in SELECTORS:
            raise ConfigError(f"Unknown selector: {self.selector}. Available: {list(SELECTORS)}")
        if self.s1_mode not in S1_MODES:
            raise ConfigError(f"Unknown s1_mode: {self.s1_mode}. Available: {list(S1_MODES)}")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ConfigError(f"Unknown variants {unknown}. Available: {sorted(VARIANTS)}")
        if self.C is not None and not self.C > 0:
            raise ConfigError(f"C must be positive, got {self.C}")

    @classmethod
    def from_dict(cls, data: dict, base_dir: str = "") -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown experiment config keys: {unknown}")
        if "dataset_root" not in data or "positive_class" not in data:
            raise ConfigError("Experiment config needs 'dataset_root' and 'positive_class'")
        values = dict(data)
        root = values["dataset_root"]
        if base_dir and not os.path.isabs(root):
            values["dataset_root"] = os.path.join(base_dir, root)
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f"Malformed experiment config: {e}") from e

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        """Read a JSON experiment config; a relative dataset_root is taken from the file's directory."""
        return cls.from_dict(load_yaml(path), os.path.dirname(os.path.abspath(path)))

    def runs(self) -> List[Tuple[str, str, str]]:
        """(label, s1_mode, selector) for every model variant to evaluate."""
        if self.variants:
            return [(v,) + VARIANTS[v] for v in self.variants]
        return [(f"{self.s1_mode}+{self.selector}", self.s1_mode, self.selector)]

    def as_dict(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        return d


def _summary(values: Sequence[Optional[float]]) -> Dict[str, Optional[float]]:
    """Mean and sample (n − 1) standard deviation over the values that are present."""
    present = [v for v in values if v is not None]
    if not present:
        return {"mean": None, "std": None, "n": 0}
    arr = np.asarray(present, dtype=np.float64)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else None
    return {"mean": float(arr.mean()), "std": std, "n": len(arr)}


class Report:
    """Structured experiment result with deterministic JSON and CSV renderings."""

    def __init__(self, data: dict):
        self.data = data

    def aggregate(self, variant: str, positive_class: str, k: int) -> dict:
        for row in self.data["aggregates"]:
            if (row["variant"], row["class"], row["k"]) == (variant, positive_class, k):
                return row
        raise KeyError(f"No aggregate for ({variant}, {positive_class}, {k})")

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["variant", "class", "sweep_k", "mean", "std"])
        for row in self.data["aggregates"]:
            rate = row["classification_rate"]
            writer.writerow([row["variant"], row["class"], row["k"],
                             "" if rate["mean"] is None else f"{rate['mean']:.6f}",
                             "" if rate["std"] is None else f"{rate['std']:.6f}"])
        return buf.getvalue()

    def save(self, path: str, csv_path: Optional[str] = None):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_json())
        if csv_path:
            with open(csv_path, "w", encoding="utf-8", newline="\n") as f:
                f.write(self.to_csv())


class ExperimentRunner:
    """
    Runs the multi-trial protocol.

    For every variant and positive class, each trial draws a seeded split,
    builds a dictionary from the training positives, extracts C2 features once,
    then trains and evaluates one SVM per sweep value on the truncated features.
    """

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config(None)
        self.memory = RunMemory()
        self.guardrails = Guardrails()
        self._log_callback: Optional[Callable] = None
        self._pipelines: Dict[str, FeaturePipeline] = {}
        self.loader = ImageLoader(log=self._log)
        self.guardrails.set_logger(self._log)

    def set_log_callback(self, callback: Optional[Callable]):
        self._log_callback = callback

    def _log(self, phase: str, message: str):
        self.memory.add_log(phase, message)
        if self._log_callback:
            self._log_callback(phase, message)

    def _pipeline(self, s1_mode: str) -> FeaturePipeline:
        if s1_mode not in self._pipelines:
            pipeline = FeaturePipeline.from_config(self.config, s1_mode=s1_mode)
            pipeline.set_logger(self._log)
            self._pipelines[s1_mode] = pipeline
        return self._pipelines[s1_mode]

    def _svm_params(self, cfg: ExperimentConfig) -> dict:
        """SVM settings for a run; an experiment's own C wins over `svm.C`."""
        params = self.config.svm_params()
        if cfg.C is not None:
            params["C"] = float(cfg.C)
        return params

    def run(self, cfg: ExperimentConfig) -> Report:
        self.memory.reset(f"{','.join(cfg.positive_class)} vs background")
        if cfg.pipeline:
            self.config = self.config.derive(cfg.pipeline)
            self._pipelines.clear()
        self._log("init", f"🚀 Experiment: {self.memory.name}")
        self._log("init", f"⚙️ Variants: {[label for label, _, _ in cfg.runs()]}, "
                          f"trials: {cfg.trials}, sweep: {list(cfg.sweep)}, budget: {cfg.budget}")

        dataset = scan_dataset(cfg.dataset_root)
        self.guardrails.check_experiment(cfg, dataset)
        planner = TrialPlanner(cfg.master_seed, cfg.train_counts, cfg.test_counts)

        trials = []
        self.memory.status = "running"
        for label, s1_mode, selector in cfg.runs():
            for name in cfg.positive_class:
                for trial in range(cfg.trials):
                    self.memory.trial = trial
                    split = planner.plan(trial, dataset.images(name), dataset.background)
                    self._log("trial", f"🔄 {label} / {name}: trial {trial + 1}/{cfg.trials}")
                    result = self._run_trial(cfg, label, s1_mode, selector, name, split)
                    self.memory.add_result(result)
                    trials.append(result)

        self.memory.status = "aggregating"
        self._log("aggregate", "📊 Aggregating trials...")
        report = Report({
            "config": cfg.as_dict(),
            "pipeline": {
                "settings": self.config.as_dict(),
                "fingerprints": {s1: self._pipeline(s1).config_fingerprint
                                 for s1 in sorted({s for _, s, _ in cfg.runs()})},
            },
            "trials": trials,
            "aggregates": self._aggregate(cfg, trials),
            "across_classes": self._across_classes(cfg, trials) if len(cfg.positive_class) > 1 else [],
        })
        self.memory.status = "complete"
        self._log("complete", f"✅ {len(trials)} trial results aggregated")
        return report

    def _run_trial(self, cfg: ExperimentConfig, label: str, s1_mode: str, selector: str,
                   name: str, split: TrialSplit) -> dict:
        pipeline = self._pipeline(s1_mode)
        train_paths, train_labels = split.train()
        test_paths, test_labels = split.test()
        train_images = self.loader.require_all(train_paths)
        test_images = self.loader.require_all(test_paths)

        sel = replace(self.config.selector_config(s1_mode), selector=selector,
                      budget=cfg.budget, seed=split.seed)
        dictionary = select_patches(train_images[:len(split.train_pos)], sel, pipeline, self._log)
        train_features = pipeline.extract_all(train_images, dictionary)
        test_features = pipeline.extract_all(test_images, dictionary)

        svm = self._svm_params(cfg)
        rows = []
        for k in cfg.sweep:
            head = dictionary.head(k)
            train_k = [f.head(head) for f in train_features]
            test_k = [f.head(head) for f in test_features]
            self._log("train", f"🧠 Training SVM on {len(train_k)} examples × {k} features")
            model = train_svm(train_k, train_labels, C=svm["C"], seed=split.seed, epochs=svm["epochs"])
            scores = [decision(model, f) for f in test_k]
            predictions = [1 if s >= 0.0 else -1 for s in scores]
            counts = ConfusionCounts.from_predictions(predictions, test_labels)
            summary = roc(scores, test_labels)
            m = metrics(counts)
            self._log("evaluate", f"   k={k}: classification rate {m.classification_rate:.4f}, "
                                  f"AUC {summary.auc:.4f}")
            rows.append({
                "k": k,
                "confusion": asdict(counts),
                "metrics": m.as_dict(),
                "roc": summary.as_dict(),
                "recall_precision": [list(p) for p in recall_precision_curve(scores, test_labels)],
                "scores": scores,
                "labels": list(test_labels),
            })
        return {
            "variant": label,
            "class": name,
            "trial": split.trial,
            "seed": split.seed,
            "dictionary": {
                "fingerprint": dictionary.fingerprint,
                "provenance": dictionary.provenance_counts(),
            },
            "sweep": rows,
        }

    @staticmethod
    def _values(rows: List[dict], key: str) -> List[Optional[float]]:
        if key in ("auc", "eer_detection_rate"):
            return [r["roc"][key] for r in rows]
        return [r["metrics"][key] for r in rows]

    def _aggregate(self, cfg: ExperimentConfig, trials: List[dict]) -> List[dict]:
        aggregates = []
        for label, _, _ in cfg.runs():
            for name in cfg.positive_class:
                group = [t for t in trials if t["variant"] == label and t["class"] == name]
                for i, k in enumerate(cfg.sweep):
                    rows = [t["sweep"][i] for t in group]
                    pooled_scores = [s for r in rows for s in r["scores"]]
                    pooled_labels = [y for r in rows for y in r["labels"]]
                    entry = {"variant": label, "class": name, "k": k, "trials": len(rows)}
                    for key in REPORT_METRICS:
                        entry[key] = _summary(self._values(rows, key))
                    entry["pooled_roc"] = roc(pooled_scores, pooled_labels).as_dict()
                    aggregates.append(entry)
        return aggregates

    def _across_classes(self, cfg: ExperimentConfig, trials: List[dict]) -> List[dict]:
        """Mean ± std of classification rate over every (class, trial) per variant and k."""
        rows = []
        for label, _, _ in cfg.runs():
            group = [t for t in trials if t["variant"] == label]
            for i, k in enumerate(cfg.sweep):
                rates = [t["sweep"][i]["metrics"]["classification_rate"] for t in group]
                rows.append({"variant": label, "k": k, "classification_rate": _summary(rates)})
        return rows


def run_experiment(cfg: ExperimentConfig, config: Optional[Config] = None,
                   log: Optional[Callable] = None) -> Report:
    runner = ExperimentRunner(config)
    runner.set_log_callback(log)
    return runner.run(cfg)
