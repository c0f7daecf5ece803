"""Run registered experiments and write their CSV tables.

    python3 scripts/run_experiments.py                      # everything, default scale
    python3 scripts/run_experiments.py fig7_basins --replicates 5
    NMLAND_WORKERS=4 python3 scripts/run_experiments.py fig4_ruggedness_schedule
"""

import argparse
import dataclasses
import logging
import sys
import time

from nmlandscapes.experiments import EXPERIMENTS, ExperimentSpec, run_experiment

log = logging.getLogger("run_experiments")


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("ids", nargs="*", help="experiment ids (default: all)")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, help="override every experiment's replicate count")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    ids = args.ids or list(EXPERIMENTS)
    unknown = [e for e in ids if e not in EXPERIMENTS]
    if unknown:
        p.error(f"unknown experiment ids {unknown}; known: {', '.join(EXPERIMENTS)}")
    for eid in ids:
        spec = ExperimentSpec(eid, seed=args.seed, output_dir=args.out_dir)
        if args.replicates is not None:
            spec = dataclasses.replace(spec, replicates=args.replicates)
        t0 = time.perf_counter()
        paths = run_experiment(spec)
        log.info("%s: %d files in %.1f s", eid, len(paths), time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
