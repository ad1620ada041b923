"""Run the shipped NPMLE-vs-PLE comparisons and print their MSE tables.

    python scripts/run_simulation.py [--out results] [--workers 4] [--only main]
"""

import argparse
import json
import os
from pathlib import Path

from biased_npmle.bench import BenchConfig, run_comparison, summarize

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
RUNS = {
    "main": ["main.json", "main_n200.json"],
    "sensitivity": ["sensitivity.json", "sensitivity_n200.json"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--only", choices=sorted(RUNS))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for group, names in RUNS.items():
        if args.only and group != args.only:
            continue
        for name in names:
            raw = json.loads((CONFIGS / name).read_text())
            report = run_comparison(BenchConfig.from_dict(raw), workers=args.workers)
            stem = name.removesuffix(".json")
            report.write(out / f"{stem}.json", out / f"{stem}.csv")
            print(f"== {raw.get('name', stem)}  ({report.runtime:.0f} s)")
            print(summarize(report))
            print()


if __name__ == "__main__":
    main()
