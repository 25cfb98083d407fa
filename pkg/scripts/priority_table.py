"""Print each sensor's priority at the end of every period from a run directory."""

import argparse
import csv
import json
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir", type=Path, help="output directory of `aftcs run`")
    args = ap.parse_args()

    periods = json.loads((args.run_dir / "summary.json").read_text())["periods"]
    series = {}
    with open(args.run_dir / "priority_trace.csv") as f:
        for row in csv.DictReader(f):
            series.setdefault(row["sensor"], []).append((float(row["t_s"]), int(row["priority"])))

    print("sensor".ljust(12) + "start  " + "  ".join(f"P{i + 1}" for i in range(len(periods))))
    for name, pts in series.items():
        cells = [str(pts[0][1]).rjust(5)]
        for _, end in periods:
            cells.append(str([p for t, p in pts if t < end][-1]).rjust(2))
        print(name.ljust(12) + "  ".join(cells))


if __name__ == "__main__":
    main()
