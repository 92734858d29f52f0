"""Recomputes the compare aggregate table from the per-run CSV."""

import argparse
import csv
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def recompute(runs):
    methods = list(dict.fromkeys(r["method"] for r in runs))
    reference = {r["trajectory"]: float(r["completion_time"]) for r in runs if r["method"] == methods[0]}
    table = {}
    for m in methods:
        rows = [r for r in runs if r["method"] == m]
        dist = np.array([float(r["min_ground_distance"]) for r in rows])
        time = np.array([float(r["completion_time"]) for r in rows])
        diff = np.array([reference[r["trajectory"]] - float(r["completion_time"]) for r in rows])
        entry = {
            "runs_collided": sum(int(r["collision_occurred"]) for r in rows),
            "runs_timed_out": sum(int(r["timed_out"]) for r in rows),
        }
        for name, values in (("min_distance", dist), ("completion_time", time), ("time_difference", diff)):
            q1, median, q3 = np.percentile(values, [25, 50, 75])
            entry[f"{name}_q1"] = q1
            entry[f"{name}_median"] = median
            entry[f"{name}_q3"] = q3
        table[m] = entry
    return table


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("cli", help="path to the confplan executable")
    parser.add_argument("--seeds", type=int, default=5)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        cmd = [args.cli, "compare", "--seeds", str(args.seeds), "--jobs", "2",
               "--set", "human.kind=spill_detour", "--out", str(out)]
        subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL)
        runs = read_rows(out / "runs.csv")
        written = read_rows(out / "aggregate.csv")

    expected = recompute(runs)
    failures = 0
    if [w["method"] for w in written] != list(expected):
        print("method order differs:", [w["method"] for w in written], list(expected))
        return 1
    for w in written:
        for key, value in expected[w["method"]].items():
            got = float(w[key])
            if abs(got - value) > 1e-12 * max(1.0, abs(value)):
                print(f"{w['method']} {key}: aggregate.csv has {got}, recomputed {value}")
                failures += 1
    print(f"checked {len(written)} methods over {len(runs)} runs: {'FAIL' if failures else 'PASS'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
