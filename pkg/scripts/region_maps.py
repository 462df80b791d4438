"""Write region-map CSVs for the stickiness and capacity scenarios and print
a coarse character map of each to the terminal."""
import argparse
import os
from collections import Counter

from zrsim.experiments import GridRange, SweepSpec, label_grid, sweep_region_map

SCENARIOS = {
    "t3": dict(),
    "t10": dict(t1=10.0, t2=10.0),
    "t1000": dict(t1=1000.0, t2=1000.0),
    "c1": dict(c=1.0),
    "c40": dict(c=40.0, allow_corner=True),
}
GLYPH = {"NN": ".", "SN": "s", "NS": "n", "SS": "#", "ASYM": "a", "OSC": "o", "MAX": "M"}


def show(cells, spec):
    grid = label_grid(cells, spec)
    step = max(1, spec.a1.steps // 30)
    # a1 runs up the page, a2 across
    for i in range(spec.a1.steps - 1, -1, -step):
        print("  " + "".join(GLYPH[g] for g in grid[i, ::step]))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--grid", type=int, default=60)
    ap.add_argument("--a-max", type=float, default=10.0)
    ap.add_argument("--only", choices=sorted(SCENARIOS), nargs="*")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for name in args.only or SCENARIOS:
        path = os.path.join(args.out_dir, f"region_{name}.csv")
        spec = SweepSpec(a1=GridRange.up_to(args.a_max, args.grid), out=path, **SCENARIOS[name])
        cells = sweep_region_map(spec)
        counts = Counter(c.label for c in cells)
        print(f"{name}: {dict(sorted(counts.items()))} -> {path}")
        show(cells, spec)


if __name__ == "__main__":
    main()
