#!/usr/bin/env python3
"""Run the full desk-scale pipeline into a work directory.

Generates a labeled dataset, filters anomalies, trains both surrogates,
runs the requested optimizer strategies, cross-checks each optimum
against the vortex-lattice solver, and emits the report bundle. With
default settings this takes roughly 15-25 minutes on one core; most of
it is dataset labeling.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from chimera.cli import main as chimera_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="desk_run",
                        help="work directory for all artifacts")
    parser.add_argument("--samples", type=int, default=5000)
    parser.add_argument("--bounds", default="set1",
                        help="table1|set1|set2 or a JSON bounds file")
    parser.add_argument("--methods", nargs="*",
                        default=["grad", "pso", "ga", "bayes", "lipschitz"])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=1500,
                        help="regression surrogate training epochs")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    config = {
        "bounds": args.bounds,
        "dataset_size": args.samples,
        "altitude": 1200.0,
        "label_panels": [10, 20],
        "eval_panels": [10, 20],
        "lof": {"k": 200, "contamination": 1e-4},
        "aero": {"hidden_layers": 4, "width": 64, "epochs": args.epochs},
        "stab": {"hidden_layers": 4, "width": 64, "epochs": 600},
        "methods": args.methods,
        "seeds": {"dataset": args.seed, "train": args.seed,
                  "optimize": args.seed},
        "out_dir": args.out_dir,
    }
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    config_path = Path(args.out_dir) / "pipeline_config.json"
    config_path.write_text(json.dumps(config, indent=1) + "\n")
    print(f"pipeline config written to {config_path}")

    argv = ["pipeline", "--config", str(config_path)]
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    return chimera_main(argv)


if __name__ == "__main__":
    sys.exit(main())
