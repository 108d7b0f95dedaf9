"""Command-line harness: outputs, file formats, exit codes, determinism."""

import os

import pytest

from mmseq.cli import (COMPARE_HEADER, RUN_HEADER, RunRecord, format_solution,
                       main, parse_solution)
from mmseq.errors import ParseError
from mmseq.evaluator import evaluate_expected
from mmseq.greedy import construct
from mmseq.instance import (Instance, Vehicle, generate, instance_digest,
                            load, preset_config, save)
from mmseq.scenario import sample

from conftest import worked_example


@pytest.fixture
def instance_file(tmp_path):
    def make(n=7, seed=100, size_class="small", name="inst.yaml"):
        path = tmp_path / name
        save(generate(preset_config(n, seed=seed, size_class=size_class)),
             str(path))
        return str(path)
    return make


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


# ---------------------------------------------------------------- records

def test_run_record_row_formats_blanks():
    rec = RunRecord(command="solve", instance="abc", seed=3, method="greedy",
                    params="workers=1", objective=1.5)
    assert rec.to_csv_row() == "solve,abc,3,greedy,workers=1,1.500000,,,,,0"


def test_solution_format_round_trip():
    worked = worked_example()
    text = format_solution(worked, (0, 2, 5, 1, 4, 3), 17)
    digest, seed, order = parse_solution(text)
    assert digest == instance_digest(worked)
    assert seed == 17
    assert order == (0, 2, 5, 1, 4, 3)
    # the no-sample marker round-trips to None
    assert parse_solution(format_solution(worked, (0, 1, 2, 3, 4, 5), None))[1] is None


def test_parse_solution_rejects_garbage():
    with pytest.raises(ParseError, match="not a recognized"):
        parse_solution("something else\ninstance x\n")
    with pytest.raises(ParseError, match="malformed"):
        parse_solution("mms-solution/1\ninstance abc\nsample-seed 1\n")
    with pytest.raises(ParseError, match="malformed"):
        parse_solution("mms-solution/1\ninstance abc\nsample-seed 1\n"
                       "sequence 0 one 2\n")


# --------------------------------------------------------------- generate

def test_generate_writes_loadable_files(tmp_path, capsys):
    out = tmp_path / "bench"
    rc, stdout, _ = run_cli(capsys, "generate", "--class", "small",
                            "--count", "2", "--seed", "5", "--out", str(out))
    assert rc == 0
    names = sorted(os.listdir(out))
    assert names == [f"small_{n:03d}_{i:02d}.yaml"
                     for n in (7, 8, 9, 10) for i in (0, 1)]
    assert stdout.strip().endswith("8 instance files")
    for name in names:
        inst = load(str(out / name))
        assert inst.n_vehicles in (7, 8, 9, 10)


def test_generate_count_zero(tmp_path, capsys):
    out = tmp_path / "empty"
    rc, stdout, _ = run_cli(capsys, "generate", "--class", "medium",
                            "--count", "0", "--out", str(out))
    assert rc == 0
    assert stdout.strip() == "0 instance files"
    assert os.listdir(out) == []


def test_generate_runs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli(capsys, "generate", "--class", "small", "--count", "1",
            "--seed", "9", "--out", str(a))
    run_cli(capsys, "generate", "--class", "small", "--count", "1",
            "--seed", "9", "--out", str(b))
    for name in sorted(os.listdir(a)):
        with open(a / name, "rb") as fa, open(b / name, "rb") as fb:
            assert fa.read() == fb.read()


def test_generate_negative_count_exits_2(tmp_path, capsys):
    rc, _, err = run_cli(capsys, "generate", "--class", "small",
                         "--count", "-1", "--out", str(tmp_path))
    assert rc == 2
    assert "error:" in err


# ------------------------------------------------------------------ solve

def test_solve_greedy_worked_example(tmp_path, capsys):
    worked = worked_example()
    inst_path = tmp_path / "worked.yaml"
    save(worked, str(inst_path))
    sol_path = tmp_path / "sol.txt"
    rc, stdout, _ = run_cli(capsys, "solve", "--instance", str(inst_path),
                            "--method", "greedy", "--out", str(sol_path))
    assert rc == 0
    lines = stdout.splitlines()
    assert lines[0] == RUN_HEADER
    fields = lines[1].split(",")
    assert fields[0] == "solve"
    assert fields[3] == "greedy"
    assert fields[5] == "3.000000"
    digest, seed, order = parse_solution(sol_path.read_text())
    assert digest == instance_digest(worked)
    assert seed is None                  # no sampling requested
    assert order == (0, 2, 5, 1, 4, 3)   # A C F B E D


def test_solve_enum_and_lshaped_agree(instance_file, capsys):
    path = instance_file(n=7, seed=100)
    common = ["--instance", path, "--sample-size", "100",
              "--sample-seed", "3", "--deterministic"]
    rc1, out1, _ = run_cli(capsys, "solve", "--method", "enum", *common)
    rc2, out2, _ = run_cli(capsys, "solve", "--method", "lshaped", *common)
    assert rc1 == rc2 == 0
    enum_fields = out1.splitlines()[1].split(",")
    ls_fields = out2.splitlines()[1].split(",")
    assert enum_fields[5] == ls_fields[5]          # same objective
    assert enum_fields[8] == "0.000000"            # enum closes its gap
    assert ls_fields[8] == "0.000000"              # so does the solver
    assert enum_fields[9] == ls_fields[9] == ""    # blank wall times


def test_solve_ts_zero_iterations_is_the_greedy_start(instance_file, tmp_path,
                                                      capsys):
    path = instance_file(n=8, seed=101)
    sol_path = tmp_path / "ts.txt"
    rc, stdout, _ = run_cli(capsys, "solve", "--instance", path,
                            "--method", "ts", "--iters", "0",
                            "--sample-size", "30", "--sample-seed", "2",
                            "--out", str(sol_path))
    assert rc == 0
    inst = load(path)
    start, _ = construct(inst, 0)
    _, _, order = parse_solution(sol_path.read_text())
    assert order == start.order
    smp = sample(inst, 30, seed=2)
    want = evaluate_expected(inst, start, smp)
    assert stdout.splitlines()[1].split(",")[5] == f"{want:.6f}"


def test_solve_deterministic_reruns_match(instance_file, tmp_path, capsys):
    path = instance_file(n=7, seed=102)
    outs = []
    for name in ("s1.txt", "s2.txt"):
        sol = tmp_path / name
        rc, stdout, _ = run_cli(capsys, "solve", "--instance", path,
                                "--method", "ts", "--iters", "200",
                                "--sample-size", "40", "--deterministic",
                                "--out", str(sol))
        assert rc == 0
        outs.append((stdout, sol.read_text()))
    assert outs[0] == outs[1]


def test_solve_wall_time_present_without_deterministic(instance_file, capsys):
    path = instance_file(n=7, seed=103)
    rc, stdout, _ = run_cli(capsys, "solve", "--instance", path,
                            "--method", "greedy")
    assert rc == 0
    wall = stdout.splitlines()[1].split(",")[9]
    assert wall != ""
    assert float(wall) >= 0.0


def test_solve_missing_instance_exits_2(capsys):
    rc, _, err = run_cli(capsys, "solve", "--instance", "no_such.yaml",
                         "--method", "greedy")
    assert rc == 2
    assert "not found" in err


def test_solve_enum_guard_exits_3(instance_file, capsys):
    path = instance_file(n=10, seed=104)
    rc, _, err = run_cli(capsys, "solve", "--instance", path,
                         "--method", "enum")
    assert rc == 3
    assert "refused" in err


def test_solve_lshaped_time_limit_exits_4(instance_file, capsys):
    path = instance_file(n=10, seed=105)
    rc, stdout, _ = run_cli(capsys, "solve", "--instance", path,
                            "--method", "lshaped", "--sample-size", "10",
                            "--time-limit", "1e-6")
    assert rc == 4
    lines = stdout.splitlines()
    assert lines[0] == RUN_HEADER
    fields = lines[1].split(",")
    assert float(fields[5]) >= float(fields[6])    # objective >= lower bound


# ------------------------------------------------------------------ assess

def test_assess_round_trip(instance_file, tmp_path, capsys):
    path = instance_file(n=6, seed=106)
    sol = tmp_path / "sol.txt"
    run_cli(capsys, "solve", "--instance", path, "--method", "enum",
            "--sample-size", "30", "--sample-seed", "4", "--out", str(sol))
    report_path = tmp_path / "report.csv"
    rc, stdout, _ = run_cli(capsys, "assess", "--instance", path,
                            "--solution", str(sol), "--method", "enum",
                            "--replications", "3", "--sample-size", "25",
                            "--out", str(report_path))
    assert rc == 0
    assert stdout.splitlines()[0] == "replication,sample_optimum,candidate_cost,gap"
    assert report_path.read_text() == stdout


def test_assess_digest_mismatch_exits_2(instance_file, tmp_path, capsys):
    path = instance_file(n=6, seed=107)
    other = instance_file(n=6, seed=108, name="other.yaml")
    sol = tmp_path / "sol.txt"
    run_cli(capsys, "solve", "--instance", path, "--method", "enum",
            "--out", str(sol))
    rc, _, err = run_cli(capsys, "assess", "--instance", other,
                         "--solution", str(sol), "--method", "enum",
                         "--replications", "2", "--sample-size", "10")
    assert rc == 2
    assert "does not match" in err


def test_assess_missing_solution_exits_2(instance_file, capsys):
    path = instance_file(n=6, seed=109)
    rc, _, err = run_cli(capsys, "assess", "--instance", path,
                         "--solution", "missing.txt")
    assert rc == 2
    assert "not found" in err


# ----------------------------------------------------------------- compare

def no_failure_instance_file(tmp_path) -> str:
    vehicles = [Vehicle.of(i, i < 2, (p, q))
                for i, (p, q) in enumerate(
                    [(9, 4), (8, 3), (2, 9), (3, 8), (5, 7), (4, 9)])]
    inst = Instance.of(7, (20, 12), vehicles)
    path = tmp_path / "sure.yaml"
    save(inst, str(path))
    return str(path)


def test_compare_without_failures_reports_zero_improvement(tmp_path, capsys):
    path = no_failure_instance_file(tmp_path)
    rc, stdout, _ = run_cli(capsys, "compare", "--instance", path,
                            "--method", "enum", "--sample-size", "40",
                            "--eval-size", "80", "--deterministic")
    assert rc == 0
    lines = stdout.splitlines()
    assert lines[0] == COMPARE_HEADER
    fields = lines[1].split(",")
    assert fields[1] == "enum"
    assert fields[2] == "40"
    assert fields[3] == "80"
    assert fields[4] == fields[5]          # identical costs
    assert fields[6] == "0.000000"


def test_compare_reruns_match(instance_file, capsys):
    path = instance_file(n=6, seed=110)
    argv = ("compare", "--instance", path, "--method", "enum",
            "--sample-size", "30", "--eval-size", "60", "--deterministic")
    rc1, out1, _ = run_cli(capsys, *argv)
    rc2, out2, _ = run_cli(capsys, *argv)
    assert rc1 == rc2 == 0
    assert out1 == out2


def test_compare_rejects_zero_sample_size(instance_file, capsys):
    path = instance_file(n=6, seed=111)
    rc, _, err = run_cli(capsys, "compare", "--instance", path,
                         "--sample-size", "0")
    assert rc == 2
    assert "sample-size" in err
