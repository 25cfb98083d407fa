"""Multi-seed AFTCS vs baseline comparison for the top sensor of each period.

    python scripts/run_batch.py --seeds 20 --out results/batch.csv
"""

import argparse
import csv
import os
import sys
import time

from aftcs import load_config
from aftcs.experiment import compare_top_sensors


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="paper_s5")
    ap.add_argument("--seeds", type=int, default=20, help="use seeds 1..N")
    ap.add_argument("--first-seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", help="per-seed rows as CSV")
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    t0 = time.perf_counter()
    summary = compare_top_sensors(cfg, seeds, workers=args.workers)
    elapsed = time.perf_counter() - t0

    print(f"{cfg.name}: {len(seeds)} seeds in {elapsed:.1f}s")
    print(f"{'period':>6} {'top':>12} {'loss aftcs':>11} {'loss base':>10} {'lat aftcs':>10} {'lat base':>9}")
    for row in summary.table():
        print(
            f"{row['period']:>6} {'/'.join(row['top_sensors']):>12} {row['loss_aftcs']:>11.4f} "
            f"{row['loss_baseline']:>10.4f} {row['latency_aftcs_ms']:>10.2f} {row['latency_baseline_ms']:>9.2f}"
        )
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["seed", "period", "sensor", "loss_aftcs", "loss_baseline", "latency_aftcs_ms", "latency_baseline_ms"])
            for r in summary.rows:
                w.writerow([r.seed, r.period, r.sensor, r.loss_aftcs, r.loss_baseline, r.latency_aftcs, r.latency_baseline])
    return 0


if __name__ == "__main__":
    sys.exit(main())
