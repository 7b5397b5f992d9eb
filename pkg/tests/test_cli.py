import csv
import json
import subprocess
import sys

import pytest

from mmgopt.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_OK, main
from mmgopt.formulation import MaintenanceSchedule
from mmgopt.instances import demo_two_mg
from mmgopt.optimizer import read_lp, solve_mip
from mmgopt.prognostics import dump_degradation_library
from mmgopt.system import write_scenarios, write_system


@pytest.fixture
def files(tmp_path):
    inst = demo_two_mg()
    write_system(inst.system, tmp_path / "system.json")
    write_scenarios(inst.scenarios, inst.system, tmp_path / "scenarios.csv")
    return inst, tmp_path


def test_solve_demo_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--demo", "demo-two-mg", "--out-dir", str(out)]) == EXIT_OK
    inst = demo_two_mg()
    sched = MaintenanceSchedule.read(out / "schedule.csv")
    operational = [d.id for d in inst.system.operational]
    assert sorted(sched.pm) == sorted(operational)
    for d in operational:
        assert 1 <= sched.pm[d] <= inst.deadlines[d]
    rows = list(csv.DictReader((out / "schedule.csv").open()))
    assert {r["action"] for r in rows} <= {"PM", "CM", "visit"}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "converged"
    for line in (out / "cut_log.jsonl").read_text().splitlines():
        json.loads(line)
    assert (out / "trace.jsonl").read_text()


def test_variants_agree(tmp_path):
    objs = []
    for v in ("week", "week-scenario"):
        out = tmp_path / v
        assert main(["solve", "--demo", "demo-failed", "--variant", v, "--out-dir", str(out)]) == 0
        objs.append(json.loads((out / "summary.json").read_text())["objective"])
    assert abs(objs[0] - objs[1]) <= 2 * 1e-3 * abs(objs[0])


def test_solve_from_files_and_dump_model(files):
    inst, tmp = files
    lp_path = tmp / "model.lp"
    code = main(["solve", "--system", str(tmp / "system.json"), "--scenarios",
                 str(tmp / "scenarios.csv"), "--out-dir", str(tmp / "out"),
                 "--dump-model", str(lp_path)])
    assert code == EXIT_OK
    lp = read_lp(lp_path)
    sol = solve_mip(lp, gap=1e-9, backend="highs")
    summary = json.loads((tmp / "out" / "summary.json").read_text())
    # same inputs, no degradation library: the decomposition and the dumped model agree
    assert abs(sol.objective - summary["objective"]) <= 1e-3 * abs(sol.objective)


def test_dump_model_command(files):
    _, tmp = files
    assert main(["dump-model", "--system", str(tmp / "system.json"), "--scenarios",
                 str(tmp / "scenarios.csv"), "--out-dir", str(tmp)]) == EXIT_OK
    assert read_lp(tmp / "model.lp").n_cols > 0


def test_solve_with_degradation_library(files):
    inst, tmp = files
    lib = tmp / "lib.json"
    dump_degradation_library({"default": inst.models["WT1"]}, lib)
    assert main(["solve", "--system", str(tmp / "system.json"), "--scenarios",
                 str(tmp / "scenarios.csv"), "--degradation", str(lib),
                 "--out-dir", str(tmp / "o")]) == EXIT_OK
    sched = MaintenanceSchedule.read(tmp / "o" / "schedule.csv")
    assert sorted(sched.pm) == sorted(d.id for d in inst.system.operational)


def test_budget_stop_exits_two(tmp_path):
    assert main(["solve", "--demo", "demo-single", "--max-iterations", "1",
                 "--out-dir", str(tmp_path)]) == EXIT_BUDGET


def test_validate(files, capsys):
    inst, tmp = files
    assert main(["validate", "--system", str(tmp / "system.json"), "--scenarios",
                 str(tmp / "scenarios.csv")]) == EXIT_OK
    broken = inst.system.copy()
    broken.loss = 2.0
    write_system(broken, tmp / "bad.json")
    assert main(["validate", "--system", str(tmp / "bad.json")]) == EXIT_INPUT
    assert "loss-fraction" in capsys.readouterr().out


def test_malformed_input_exits_one(files, capsys):
    inst, tmp = files
    broken = inst.system.copy()
    broken.loss = 2.0
    write_system(broken, tmp / "bad.json")
    assert main(["solve", "--system", str(tmp / "bad.json"), "--scenarios",
                 str(tmp / "scenarios.csv"), "--out-dir", str(tmp)]) == EXIT_INPUT
    assert "loss-fraction" in capsys.readouterr().err
    assert main(["solve", "--system", str(tmp / "missing.json"), "--scenarios",
                 str(tmp / "scenarios.csv")]) == EXIT_INPUT


@pytest.mark.parametrize("argv", [["solve", "--eps-l", "0", "--demo", "demo-single"],
                                  ["solve", "--workers", "0", "--demo", "demo-single"],
                                  ["solve", "--variant", "month"], ["frobnicate"]])
def test_bad_flags_exit_one(argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == EXIT_INPUT


def test_resilience_needs_a_schedule(files):
    _, tmp = files
    assert main(["resilience", "--system", str(tmp / "system.json"), "--scenarios",
                 str(tmp / "scenarios.csv"), "--out-dir", str(tmp)]) == EXIT_INPUT


def test_resilience_table_shape_and_zero_without_disruption(files):
    inst, tmp = files
    assert main(["solve", "--demo", "demo-two-mg", "--out-dir", str(tmp / "s")]) == EXIT_OK
    sched = str(tmp / "s" / "schedule.csv")
    base = ["resilience", "--system", str(tmp / "system.json"), "--scenarios",
            str(tmp / "scenarios.csv"), "--schedule", f"sd-iom={sched}",
            "--schedule", f"periodic={sched}"]
    assert main(base + ["--out-dir", str(tmp / "r")]) == EXIT_OK
    rows = list(csv.reader((tmp / "r" / "erl.csv").open()))
    assert len(rows) == 4 and len(rows[0]) == 1 + 2 * 2
    assert [r[0] for r in rows[1:]] == ["Critical Loads", "Non-Critical Loads", "Operational Costs"]
    assert main(base + ["--mode", "grid-connected", "--out-dir", str(tmp / "z")]) == EXIT_OK
    rows = list(csv.reader((tmp / "z" / "erl.csv").open()))
    assert all(float(v) == 0.0 for r in rows[1:] for v in r[1:])


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mmgopt", "solve", "--demo", "demo-single",
                           "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("converged")
