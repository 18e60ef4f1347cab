"""Mean AoI of the uniform and greedy online policies over d + dbar in 0.1..2.0."""
import argparse

from relay_aoi.experiments import reproduce_online_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/online")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--horizon", type=float, default=5000.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for path in reproduce_online_sweep(args.out_dir, args.reps, args.horizon, args.seed, workers=args.workers):
        print("wrote", path)


if __name__ == "__main__":
    main()
