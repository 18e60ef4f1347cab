"""Solve the three worked offline instances and write goldens, age CSVs and plots."""
import argparse

from relay_aoi.experiments import OFFLINE_EXAMPLES, offline_example, reproduce_offline


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/offline")
    args = ap.parse_args()
    for name, inst in OFFLINE_EXAMPLES.items():
        res = offline_example(inst)
        print(f"{name}: branch {res['branch']}, n0={res['n0']}, x* = {[round(v, 6) for v in res['x_star']]}, "
              f"area {res['area']:.4f} (greedy {res['greedy']['area']:.4f})")
    for path in reproduce_offline(args.out_dir):
        print("wrote", path)


if __name__ == "__main__":
    main()
