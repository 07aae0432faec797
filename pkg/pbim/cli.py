"""CLI — subcommands for dictionaries, features, training, evaluation, experiments and saliency."""
import argparse
import csv
import json
import sys
from datetime import datetime
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .config import DEFAULTS, Config
from .errors import ArgumentError, ConfigError, PbimError
from .evaluation import ConfusionCounts, metrics, recall_precision_curve, roc
from .experiment import ExperimentConfig, ExperimentRunner
from .guardrails import Guardrails
from .hmax import FeatureVector, PatchDictionary
from .imagecore import load_image
from .patchselect import SELECTORS, load_dictionary, save_dictionary, select_patches
from .pipeline import S1_MODES, FeaturePipeline
from .saliency import salient_region, spectral_residual
from .svm import decision, load_model, save_model, train_svm
from .synthetic import make_synthetic_dataset
from .tools.dataset import ImageLoader, list_images
from .tools.netpbm import write_pbm, write_pgm


# ─────────────────────────────────────────────────────────────────────
# ANSI Color Codes for terminal output
# ─────────────────────────────────────────────────────────────────────
class Colors:
    RESET = "\033[0m"
    BOLD = "\033[1m"
    DIM = "\033[2m"

    RED = "\033[91m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    BLUE = "\033[94m"
    MAGENTA = "\033[95m"
    CYAN = "\033[96m"
    WHITE = "\033[97m"


PHASE_COLORS = {
    "init": Colors.CYAN,
    "load": Colors.DIM,
    "filter": Colors.DIM,
    "pool": Colors.DIM,
    "saliency": Colors.MAGENTA,
    "keypoints": Colors.MAGENTA,
    "select": Colors.BLUE,
    "extract": Colors.YELLOW,
    "train": Colors.MAGENTA,
    "evaluate": Colors.GREEN,
    "trial": Colors.BLUE,
    "aggregate": Colors.CYAN,
    "complete": Colors.GREEN,
    "save": Colors.GREEN,
    "warn": Colors.YELLOW,
}


def log_handler(phase: str, message: str):
    """Colored log line on stderr; stdout carries command output only."""
    color = PHASE_COLORS.get(phase, Colors.WHITE)
    timestamp = datetime.now().strftime("%H:%M:%S")
    prefix = f"{Colors.DIM}[{timestamp}]{Colors.RESET}"
    phase_tag = f"{color}[{phase.upper():>10}]{Colors.RESET}"
    print(f"  {prefix} {phase_tag} {message}", file=sys.stderr)


def _quiet(phase: str, message: str):
    pass


def _default(key: str):
    value = DEFAULTS
    for k in key.split("."):
        value = value[k]
    return value


def _cfg_help(text: str, key: str) -> str:
    return f"{text} (default: {_default(key)}, or the config file's {key})"


# flag dest → dotted config key
OVERRIDES = {
    "s1_mode": "filters.s1_mode",
    "backend": "filters.backend",
    "beta": "hmax.beta",
    "selector": "selector.kind",
    "budget": "selector.budget",
    "per_image_cap": "selector.per_image_cap",
    "seed": "selector.seed",
    "fast_threshold": "keypoints.fast_threshold",
    "saliency_multiplier": "saliency.multiplier",
    "C": "svm.C",
}


def _apply_overrides(config: Config, args: argparse.Namespace) -> Config:
    for dest, key in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            config.set(key, value)
    return config


def _write_text(path: Optional[str], text: str):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load_dir(directory: str, log, guardrails: Guardrails) -> List[Tuple[str, object]]:
    paths = list_images(directory)
    loaded = ImageLoader(log=log).load_all(paths)
    guardrails.check_inputs(paths, loaded, directory)
    return loaded


def _pipeline_for(config: Config, dictionary: PatchDictionary) -> FeaturePipeline:
    """The pipeline whose settings produced the dictionary (either S1 mode)."""
    modes = [config.s1_mode] + [m for m in S1_MODES if m != config.s1_mode]
    for mode in modes:
        if not dictionary.config_fingerprint or config.config_fingerprint(mode) == dictionary.config_fingerprint:
            return FeaturePipeline.from_config(config, s1_mode=mode)
    raise ArgumentError(
        "Dictionary was built with pipeline settings that differ from the current config"
    )


def format_value(v: float) -> str:
    """Nine significant digits, trailing zeros kept."""
    return f"{v:#.9g}"


def features_to_csv(rows: Sequence[Tuple[str, FeatureVector]]) -> str:
    lines = []
    for path, f in rows:
        lines.append(",".join([path] + [format_value(v) for v in f.values.tolist()]))
    return "\n".join(lines) + "\n"


def read_feature_csv(path: str, dictionary: PatchDictionary) -> List[FeatureVector]:
    """Feature rows written by `extract`, bound to the dictionary they were computed with."""
    vectors = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for i, row in enumerate(csv.reader(f), 1):
            if not row:
                continue
            if len(row) != len(dictionary) + 1:
                raise ArgumentError(
                    f"{path}:{i} has {len(row) - 1} features, dictionary has {len(dictionary)}"
                )
            try:
                values = [float(v) for v in row[1:]]
            except ValueError as e:
                raise ArgumentError(f"{path}:{i}: {e}") from e
            vectors.append(FeatureVector(values, dictionary.fingerprint))
    if not vectors:
        raise ArgumentError(f"No inputs: feature file '{path}' has no rows")
    return vectors


# ─────────────────────────────────────────────────────────────────────
# Commands
# ─────────────────────────────────────────────────────────────────────
def cmd_build_dictionary(args, config: Config, log) -> int:
    guardrails = Guardrails()
    guardrails.set_logger(log)
    loaded = _load_dir(args.train_dir, log, guardrails)
    pipeline = FeaturePipeline.from_config(config)
    pipeline.set_logger(log)
    sel = config.selector_config()
    log("select", f"📋 Building a {sel.budget}-patch {sel.selector} dictionary from {len(loaded)} images")
    dictionary = select_patches([img for _, img in loaded], sel, pipeline, log)
    save_dictionary(dictionary, args.out)
    log("save", f"💾 Dictionary saved to: {args.out}")
    counts = dictionary.provenance_counts()
    summary = " ".join(f"{kind}={counts[kind]}" for kind in sorted(counts))
    print(f"patches={len(dictionary)} {summary}")
    return 0


def cmd_extract(args, config: Config, log) -> int:
    dictionary = load_dictionary(args.dictionary)
    guardrails = Guardrails()
    guardrails.set_logger(log)
    loaded = _load_dir(args.image_dir, log, guardrails)
    pipeline = _pipeline_for(config, dictionary)
    pipeline.set_logger(log)
    vectors = pipeline.extract_all([img for _, img in loaded], dictionary)
    _write_text(args.out, features_to_csv([(p, f) for (p, _), f in zip(loaded, vectors)]))
    if args.out:
        log("save", f"💾 {len(vectors)} feature rows saved to: {args.out}")
    return 0


def _labelled(args, dictionary) -> Tuple[List[FeatureVector], List[int]]:
    pos = read_feature_csv(args.pos, dictionary)
    neg = read_feature_csv(args.neg, dictionary)
    return pos + neg, [1] * len(pos) + [-1] * len(neg)


def cmd_train(args, config: Config, log) -> int:
    dictionary = load_dictionary(args.dictionary)
    features, labels = _labelled(args, dictionary)
    params = config.svm_params()
    log("train", f"🧠 Training SVM on {len(features)} examples × {len(dictionary)} features (C={params['C']})")
    model = train_svm(features, labels, C=params["C"], seed=args.svm_seed, epochs=params["epochs"])
    save_model(model, args.out)
    log("save", f"💾 Model saved to: {args.out}")
    return 0


def cmd_evaluate(args, config: Config, log) -> int:
    dictionary = load_dictionary(args.dictionary)
    model = load_model(args.model)
    features, labels = _labelled(args, dictionary)
    scores = [decision(model, f) for f in features]
    predictions = [1 if s >= 0.0 else -1 for s in scores]
    counts = ConfusionCounts.from_predictions(predictions, labels)
    report = {
        "confusion": {"tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn},
        "metrics": metrics(counts).as_dict(),
        "roc": roc(scores, labels).as_dict(),
        "recall_precision": [list(p) for p in recall_precision_curve(scores, labels)],
    }
    log("evaluate", f"📊 Classification rate: {report['metrics']['classification_rate']:.4f}")
    _write_text(args.out, json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_experiment(args, config: Config, log) -> int:
    cfg = ExperimentConfig.load(args.experiment_config)
    runner = ExperimentRunner(config)
    runner.set_log_callback(log)
    report = runner.run(cfg)
    _write_text(args.out, report.to_json())
    if args.csv:
        _write_text(args.csv, report.to_csv())
    if args.out:
        log("save", f"💾 Report saved to: {args.out}")
    return 0


def cmd_saliency(args, config: Config, log) -> int:
    img = load_image(args.image)
    sal = spectral_residual(img, img.width, img.height)
    multiplier = args.saliency_multiplier
    if multiplier is None:
        multiplier = float(config.get("saliency.multiplier"))
    mask = salient_region(sal, multiplier)
    write_pgm(args.out, sal.values)
    log("saliency", f"🔎 Salient coverage {mask.coverage:.3f} at threshold {mask.threshold:.6g}")
    if args.mask_out:
        write_pbm(args.mask_out, mask.mask)
    log("save", f"💾 Saliency map saved to: {args.out}")
    return 0


def cmd_make_dataset(args, config: Config, log) -> int:
    make_synthetic_dataset(args.root, n_per_class=args.per_class, size=args.size, seed=args.seed, log=log)
    return 0


COMMANDS = {
    "build-dictionary": cmd_build_dictionary,
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "saliency": cmd_saliency,
    "make-dataset": cmd_make_dataset,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbim",
        description="PBIM — biologically inspired image features with salient-keypoint patch selection",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run.py make-dataset --root data
  python run.py build-dictionary --selector psghm --budget 50 --train-dir data/glyph --out dict.json
  python run.py extract --dictionary dict.json --image-dir data/glyph --out glyph.csv
  python run.py experiment --config exp.json --out report.json --csv table.csv
        """,
    )
    parser.add_argument("--version", action="version", version=f"pbim {__version__}")
    parser.add_argument("--settings", "-c", dest="config_path", default="config.yaml",
                        help="Pipeline config file (default: config.yaml)")
    parser.add_argument("--quiet", "-q", action="store_true", help="Suppress progress logging")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def pipeline_flags(p):
        p.add_argument("--s1-mode", choices=S1_MODES, help=_cfg_help("S1 filter bank", "filters.s1_mode"))
        p.add_argument("--backend", choices=("auto", "direct", "spectral"),
                       help=_cfg_help("Convolution backend", "filters.backend"))
        p.add_argument("--beta", type=float,
                       help="S2 sharpness (default: 1/(2·n²·4) per patch side n, or the config file's hmax.beta)")

    p = sub.add_parser("build-dictionary", help="Select patches from training images")
    p.add_argument("--train-dir", required=True, help="Directory of training images")
    p.add_argument("--out", required=True, help="Dictionary file to write")
    p.add_argument("--selector", choices=SELECTORS, help=_cfg_help("Patch selector", "selector.kind"))
    p.add_argument("--budget", type=int, help=_cfg_help("Number of patches", "selector.budget"))
    p.add_argument("--per-image-cap", type=int,
                   help=_cfg_help("Max keypoint patches per image", "selector.per_image_cap"))
    p.add_argument("--seed", type=int, help=_cfg_help("Selection seed", "selector.seed"))
    p.add_argument("--fast-threshold", type=float,
                   help=_cfg_help("FAST intensity threshold", "keypoints.fast_threshold"))
    p.add_argument("--saliency-multiplier", type=float,
                   help=_cfg_help("Salient-region threshold multiplier", "saliency.multiplier"))
    pipeline_flags(p)

    p = sub.add_parser("extract", help="Compute C2 features of every image in a directory")
    p.add_argument("--dictionary", required=True, help="Dictionary file")
    p.add_argument("--image-dir", required=True, help="Directory of images")
    p.add_argument("--out", help="CSV file to write (default: stdout)")
    pipeline_flags(p)

    for name, text in (("train", "Train a linear SVM on feature CSVs"),
                       ("evaluate", "Score feature CSVs with a trained model")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--dictionary", required=True, help="Dictionary the features were extracted with")
        p.add_argument("--pos", required=True, help="Feature CSV of positive images")
        p.add_argument("--neg", required=True, help="Feature CSV of negative images")
        if name == "train":
            p.add_argument("--out", required=True, help="Model file to write")
            p.add_argument("--C", type=float, help=_cfg_help("SVM regularization", "svm.C"))
            p.add_argument("--svm-seed", type=int, default=0, help="Training seed (default: 0)")
        else:
            p.add_argument("--model", required=True, help="Model file from `train`")
            p.add_argument("--out", help="Report JSON to write (default: stdout)")

    p = sub.add_parser("experiment", help="Run a multi-trial experiment from a JSON config")
    p.add_argument("--config", dest="experiment_config", required=True, help="Experiment JSON config")
    p.add_argument("--out", help="Report JSON to write (default: stdout)")
    p.add_argument("--csv", help="Also write the (variant, class, sweep_k, mean, std) table here")

    p = sub.add_parser("saliency", help="Dump a spectral-residual saliency map and salient mask")
    p.add_argument("--image", required=True, help="Input image")
    p.add_argument("--out", required=True, help="PGM file for the min-max scaled saliency map")
    p.add_argument("--mask-out", help="PBM file for the salient mask")
    p.add_argument("--saliency-multiplier", type=float,
                   help=_cfg_help("Salient-region threshold multiplier", "saliency.multiplier"))

    p = sub.add_parser("make-dataset", help="Write the synthetic glyph/background dataset")
    p.add_argument("--root", required=True, help="Output dataset root")
    p.add_argument("--per-class", type=int, default=65, help="Images per class (default: 65)")
    p.add_argument("--size", type=int, default=64, help="Image side in pixels (default: 64)")
    p.add_argument("--seed", type=int, default=0, help="Generation seed (default: 0)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the exit code (argparse exits 2 on usage errors)."""
    args = build_parser().parse_args(argv)
    log = _quiet if args.quiet else log_handler
    try:
        config = Config(args.config_path)
        if config.missing and args.config_path != "config.yaml":
            raise ConfigError(f"Config file '{args.config_path}' not found")
        if config.missing:
            log("warn", f"⚠ Config file '{args.config_path}' not found. Using defaults.")
        if args.command != "make-dataset":
            _apply_overrides(config, args)
        return COMMANDS[args.command](args, config, log)
    except KeyboardInterrupt:
        print("error: Interrupted: interrupted by user", file=sys.stderr)
        return 1
    except (PbimError, OSError) as e:
        message = " ".join(str(e).split())
        print(f"error: {type(e).__name__}: {message}", file=sys.stderr)
        return 1
