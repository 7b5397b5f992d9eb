"""Total planned cost as per-microgrid storage grows from 0 to 2 to 4 units."""
from mmgopt.evaluation import periodic_windows, zero_cost_curves
from mmgopt.formulation import crew_feasible_windows
from mmgopt.instances import demo_instances, with_storage
from mmgopt.lshaped import run_lshaped

UNITS = (0, 2, 4)


def main():
    print(f"{'instance':<14}{'method':<10}" + "".join(f"{u:>12}" for u in UNITS))
    for inst in demo_instances():
        ages = {d.id: d.age for d in inst.system.ders}
        for method in ("sd-iom", "periodic"):
            row = []
            for units in UNITS:
                s = with_storage(inst.system, units)
                if method == "sd-iom":
                    res = run_lshaped(s, inst.scenarios, inst.cost_curves, inst.deadlines)
                else:
                    windows = crew_feasible_windows(s, periodic_windows(s, ages))
                    res = run_lshaped(s, inst.scenarios, zero_cost_curves(s, s.T),
                                      windows=windows)
                row.append(res.objective)
            print(f"{inst.name:<14}{method:<10}" + "".join(f"{v:12.2f}" for v in row))


if __name__ == "__main__":
    main()
