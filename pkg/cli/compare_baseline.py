"""
Compare ensembling strategies against the best single detector.

Prints a small table in the spirit of an ablation: every simulated detector,
the temporal-NMS ensemble and the WBF ensemble, each averaged over the
benchmark trials configured in ``params.yaml``.

    python cli/compare_baseline.py --trials 10
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List

this_dir = os.path.dirname(__file__)
repo_root = os.path.abspath(os.path.join(this_dir, ".."))
if repo_root not in sys.path:
    sys.path.insert(0, repo_root)

from tsl.benchmark import run_benchmark
from tsl.config import load_params


def main(args: List[str]) -> None:
    parser = argparse.ArgumentParser(description="Compare WBF and NMS ensembles to single detectors.")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--params", default=None, help="Parameter file.")
    ns = parser.parse_args(args)

    params = load_params(ns.params)
    if ns.trials is not None:
        bench = params.benchmark.model_copy(update={"n_trials": ns.trials})
        params = params.model_copy(update={"benchmark": bench})
    summary = run_benchmark(params)

    rows = [(f"detector {k}", m) for k, m in enumerate(summary.mean_detector_maps)]
    rows += [("NMS ensemble", summary.mean_nms_map), ("WBF ensemble", summary.mean_wbf_map)]
    width = max(len(name) for name, _ in rows)
    print(f"{'model'.ljust(width)}  mAP")
    for name, value in rows:
        print(f"{name.ljust(width)}  {value:.4f}")
    print(f"WBF gain over best detector: {summary.mean_wbf_map - summary.mean_best_detector_map:+.4f}")


if __name__ == "__main__":
    main(sys.argv[1:])
