"""Write surplus CSVs along (a, rho a) for the duopoly, monopoly and
no-zero-rating modes, plus the single-ISP sweep with ISP2 held at NN."""
import argparse
import os

from zrsim.experiments import GridRange, SweepSpec, rows_by_mode, sweep_single_isp, sweep_surplus_ray

RAYS = {
    "t3_rho0.1": (dict(), 0.1),
    "t3_rho0.8": (dict(), 0.8),
    "t3_t6_rho0.1": (dict(t2=6.0), 0.1),
    "t3_t6_rho0.8": (dict(t2=6.0), 0.8),
    "c90_rho0.8": (dict(c=90.0, allow_corner=True), 0.8),
}


def summary(rows):
    duo = rows_by_mode(rows, "duopoly") or rows_by_mode(rows, "single_isp")
    seq, last = [duo[0].config1], duo[0].config1
    for r in duo:
        if r.config1 != last:
            last = r.config1
            seq.append(f"{last}@{r.a:.3g}")
    return " -> ".join(seq)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--grid", type=int, default=200)
    ap.add_argument("--a-max", type=float, default=10.0)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    grid = GridRange.up_to(args.a_max, args.grid)
    for name, (kw, rho) in RAYS.items():
        path = os.path.join(args.out_dir, f"ray_{name}.csv")
        rows = sweep_surplus_ray(SweepSpec(a1=grid, out=path, **kw), rho)
        print(f"{name}: {summary(rows)} -> {path}")
    path = os.path.join(args.out_dir, "single_isp_rho0.7.csv")
    rows = sweep_single_isp(SweepSpec(a1=grid, out=path), 0.7)
    print(f"single_isp_rho0.7: {summary(rows)} -> {path}")


if __name__ == "__main__":
    main()
