"""Run the budgeted benchmark grid against the committed tiny classifier.

Builds an experiment config on the fly, attacks a two-hidden-layer
network on 8x8 inputs at several query budgets with both noise samplers,
and prints the summary table: median distortion per (sampler, budget),
with stratified and plain runs paired seed-for-seed.

The default scale finishes in well under a minute; --full runs the
20-point x 25-repetition grid (a few minutes).

Run:  python3 demos/mlp_benchmark.py [--full] [--output-dir bench_out]
"""

import argparse
import os

from lhsattack import parse_config, run_experiment

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_WEIGHTS = os.path.join(REPO_ROOT, "tests", "fixtures",
                               "mlp_8x8_2class.txt")

CONFIG_TEMPLATE = """\
[experiment]
name = mlp_benchmark_demo
repetitions = {reps}
base_seed = 7
budgets = {budgets}
samplers = lhs srs
statistics = median

[oracle net]
kind = mlp
weights = {weights}

[points]
source = generate
count = {count}
dim = 64
seed = 31

[attack]
initial_samples = 100
iterations = {iterations}
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--full", action="store_true",
                        help="20 originals x 25 repetitions at budgets 1K/5K/20K")
    parser.add_argument("--weights", default=DEFAULT_WEIGHTS,
                        help="classifier weights file")
    parser.add_argument("--output-dir", default="bench_out",
                        help="where traces and the summary CSV land")
    args = parser.parse_args()

    if args.full:
        scale = dict(count=20, reps=25, budgets="1000 5000 20000",
                     iterations=64)
    else:
        scale = dict(count=4, reps=5, budgets="500 2000 8000", iterations=40)

    cfg_path = os.path.join(args.output_dir, "benchmark.cfg")
    os.makedirs(args.output_dir, exist_ok=True)
    with open(cfg_path, "w", encoding="utf-8") as fh:
        fh.write(CONFIG_TEMPLATE.format(weights=args.weights, **scale))

    config = parse_config(cfg_path)
    print(f"-- {scale['count']} originals x {scale['reps']} repetitions x "
          f"2 samplers, budgets {scale['budgets']}")
    print(f"   running {scale['count'] * scale['reps'] * 2} attacks "
          "(each budget is a slice of one trace, not a rerun) ...")
    result = run_experiment(config, output_dir=args.output_dir)

    print("\n   budget   median lhs   median srs   (lhs - srs)")
    med = {(r.sampler, r.budget): r.distortion for r in result.summary_rows}
    for budget in config.budgets:
        lhs, srs = med[("lhs", budget)], med[("srs", budget)]
        print(f"   {budget:6d}   {lhs:10.5f}   {srs:10.5f}   {lhs - srs:+.5f}")
    failures = [r for r in result.runs if r.error is not None]
    print(f"\n   {len(result.runs)} runs, {len(failures)} failures")
    print(f"   summary written to {result.summary_path}")


if __name__ == "__main__":
    main()
