"""Solve a bundled two-microgrid instance and show the plan and the bound trace.

    python demos/quickstart.py [demo-two-mg|demo-failed|demo-single]
"""
import sys

from mmgopt.instances import demo_instances
from mmgopt.lshaped import run_lshaped


def main(name="demo-two-mg"):
    inst = {i.name: i for i in demo_instances()}[name]
    print(f"{inst.name}: {len(inst.system.microgrids)} microgrids, {len(inst.system.ders)} DERs, "
          f"T={inst.system.T} weeks, H={inst.system.H} hours, {inst.scenarios.n} scenarios")
    print("PM deadlines from the remaining-life distributions:", inst.deadlines)

    for variant in ("week", "week-scenario"):
        res = run_lshaped(inst.system, inst.scenarios, inst.cost_curves, inst.deadlines,
                          variant=variant)
        print(f"\n[{variant}] {res.status}: objective {res.objective:.4f} "
              f"(maintenance {res.first_stage_cost:.4f}), {len(res.cuts)} optimality cuts, "
              f"{len(res.recovery_cuts)} recovery cuts")
        for rec in res.state.trace:
            print(f"  it {rec['iteration']:2d} round {rec['round']}  "
                  f"LB {rec['lb']:12.4f}  UB {rec['ub']:12.4f}")
        print(res.schedule.to_csv(), end="")


if __name__ == "__main__":
    main(*sys.argv[1:])
