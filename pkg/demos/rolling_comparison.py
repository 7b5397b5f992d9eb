"""Sensor-driven plan vs the 48-52 week periodic benchmark on the desk-scale fleet.

Plans 52 weeks, freezes the first 8, simulates true degradation and re-plans,
over 78 weeks per replication.  Four replications take a few minutes.

    python demos/rolling_comparison.py [--seeds 4] [--span 78] [--hours 6] [--out metrics.csv]
"""
import argparse
import time

from mmgopt.evaluation import RollingConfig, reports_summary, reports_to_csv, run_rolling_horizon
from mmgopt.instances import desk_fleet, fleet_generator


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=4)
    ap.add_argument("--span", type=int, default=78)
    ap.add_argument("--hours", type=int, default=6)
    ap.add_argument("--out")
    args = ap.parse_args()

    system, models = desk_fleet(H=args.hours)
    cfg = RollingConfig(seeds=tuple(range(args.seeds)), span=args.span)
    t0 = time.perf_counter()
    res = run_rolling_horizon(system, models, cfg, fleet_generator(system, cfg.n_scenarios))
    print(f"{args.seeds} replications x {args.span} weeks in {time.perf_counter() - t0:.0f}s\n")
    print(reports_summary(res.reports))
    for method, reps in res.per_seed.items():
        print(method, [f"CM={r.n_cm:.0f} PM={r.n_pm:.0f} unused={r.unused_life:.0f}"
                       for r in reps])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(reports_to_csv(res.reports))


if __name__ == "__main__":
    main()
