"""
CLI script to run the end-to-end benchmark suites.
Usage: python -m evals.run_evals
"""
import glob
import json
import os
import sys
import tempfile
import time

# Add root project dir to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from pbim.config import Config
from pbim.experiment import ExperimentConfig, ExperimentRunner
from pbim.synthetic import make_synthetic_dataset
from evals.evaluator import Evaluator


def run_suite(suite: dict) -> dict:
    """Generate the suite's dataset in a scratch directory, run it, and judge the report."""
    with tempfile.TemporaryDirectory() as root:
        data = suite["dataset"]
        make_synthetic_dataset(root, n_per_class=data["per_class"], size=data["size"], seed=data["seed"])
        cfg = ExperimentConfig.from_dict(dict(suite["experiment"], dataset_root=root))

        # single-threaded timing
        config = Config(None, overrides={"runtime": {"threads": 1}})
        runner = ExperimentRunner(config)
        start_time = time.time()
        report = runner.run(cfg)
        duration = time.time() - start_time

    judge = suite["judge"]
    evaluator = Evaluator(suite["thresholds"])
    return evaluator.benchmark_report(
        report, cfg.positive_class[0], judge["random_variant"], judge["psghm_variant"],
        judge["budget"], judge["small_budget"], duration,
    )


def main() -> int:
    print("🚀 Starting PBIM Benchmark Suites\n")

    suites = sorted(glob.glob(os.path.join(os.path.dirname(__file__), "datasets", "*.json")))
    if not suites:
        print("No benchmark suites found.")
        return 1

    results = []
    for path in suites:
        with open(path, "r", encoding="utf-8") as f:
            suite = json.load(f)
        print(f"──────────────────────────────────────────────────")
        print(f"🧪 Suite: {suite['id']}")
        print(f"   {suite['description']}")
        print("\n⏳ Running experiment... (this may take a few minutes)")
        try:
            outcome = run_suite(suite)
        except Exception as e:
            print(f"❌ Suite {suite['id']} failed: {type(e).__name__}: {e}")
            results.append({"id": suite["id"], "passed": False})
            continue
        outcome["id"] = suite["id"]
        results.append(outcome)
        print(f"   Random mean rate: {outcome['random_rate']:.4f}")
        print(f"   PSGHM mean rate:  {outcome['psghm_rate']:.4f} (small budget {outcome['psghm_small_rate']:.4f})")
        for check in outcome["checks"]:
            mark = "✅" if check["passed"] else "❌"
            print(f"   {mark} {check['name']}: {check['value']:.4f}")

    passed = sum(1 for r in results if r["passed"])
    print("\n\n📊 Benchmark Summary:")
    print("=====================")
    print(f"Suites passed: {passed}/{len(results)}")
    print("\n✅ Benchmarks complete." if passed == len(results) else "\n❌ Some benchmarks failed.")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
