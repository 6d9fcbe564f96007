"""Problem parsing, task execution, report serialization, exit codes."""

import csv
import dataclasses
import json
import math
import pathlib

import numpy as np
import pytest

from liprec import cli


def _run_main(argv):
    return cli.main(argv)


def _strip_clock(report):
    out = json.loads(json.dumps(cli.to_jsonable(report)))
    out["metadata"].pop("runtime_ms")
    out["metadata"].pop("timestamp")
    return out


# --------------------------------------------------------------------------
# Serialization


def test_to_jsonable_floats_and_specials():
    assert cli.to_jsonable(1.5) == 1.5
    assert cli.to_jsonable(float("inf")) == "Infinity"
    assert cli.to_jsonable(float("-inf")) == "-Infinity"
    assert cli.to_jsonable(float("nan")) == "NaN"
    assert cli.to_jsonable(np.float64(0.1)) == 0.1
    assert cli.to_jsonable(np.int32(7)) == 7
    assert cli.to_jsonable(True) is True


def test_to_jsonable_containers():
    assert cli.to_jsonable(np.array([1.0, 2.0])) == [1.0, 2.0]
    assert cli.to_jsonable((1, 2)) == [1, 2]
    assert cli.to_jsonable({1: "a"}) == {"1": "a"}

    @dataclasses.dataclass
    class Payload:
        value: float
        items: tuple

    assert cli.to_jsonable(Payload(np.float64(2.0), (1,))) == {
        "value": 2.0, "items": [1]}
    with pytest.raises(TypeError):
        cli.to_jsonable(object())


def test_write_json_round_trip(tmp_path):
    path = tmp_path / "report.json"
    payload = {"b": 0.1, "a": [float("nan"), 3.0]}
    cli.write_json(payload, str(path))
    text = path.read_text()
    assert text.endswith("\n")
    # keys sorted, shortest-round-trip float spelling
    assert text.index('"a"') < text.index('"b"')
    assert "0.1" in text
    loaded = json.loads(text)
    assert loaded["a"] == ["NaN", 3.0]
    assert loaded["b"] == 0.1
    # no stray temp files left behind
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_write_trace_csv(tmp_path):
    path = tmp_path / "trace.csv"
    cli.write_trace({"err": np.array([0.25, 1e-17])}, str(path))
    with open(path) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["series", "index", "value"]
    assert rows[1] == ["err", "0", "0.25"]
    assert float(rows[2][2]) == 1e-17


# --------------------------------------------------------------------------
# Problem parsing


def test_build_operator_matrix():
    op = cli.build_operator({"type": "matrix", "data": [[1.0, 2.0]]})
    assert op.obs_dim == 1 and op.signal_dim == 2
    op = cli.build_operator({"type": "matrix", "data": [[1.0, 2.0]],
                             "rows": 1, "cols": 2})
    assert op.signal_dim == 2


def test_build_operator_rejections():
    with pytest.raises(cli.ProblemError):
        cli.build_operator("matrix")
    with pytest.raises(cli.ProblemError):
        cli.build_operator({"type": "matrix"})
    with pytest.raises(cli.ProblemError):
        cli.build_operator({"type": "matrix", "data": [[1.0], [2.0]]})  # tall
    with pytest.raises(cli.ProblemError):
        cli.build_operator({"type": "matrix", "data": [[1.0, 2.0]], "rows": 2})
    with pytest.raises(cli.ProblemError):
        cli.build_operator({"type": "fourier"})


def test_build_signals_list_variants():
    op = cli.build_operator({"type": "piecewise_example"})
    flat = cli.build_signals({"type": "list", "data": [0.1, 0.2]}, op, 0)
    assert flat.shape == (2, 1)
    alias = cli.build_signals({"type": "finite_list", "data": [[0.3]]}, op, 0)
    assert alias.shape == (1, 1)
    with pytest.raises(cli.ProblemError):
        cli.build_signals({"type": "list", "data": [[0.1, 0.2]]}, op, 0)


def test_build_signals_affine_segment():
    op = cli.build_operator({"type": "matrix", "data": [[1.0, 0.0], [0.0, 1.0]]})
    seg = cli.build_signals({"type": "affine_segment", "start": [0.0, 0.0],
                             "end": [1.0, 2.0], "count": 5}, op, 0)
    assert seg.shape == (5, 2)
    assert np.allclose(seg[0], [0.0, 0.0])
    assert np.allclose(seg[-1], [1.0, 2.0])
    assert np.allclose(seg[2], [0.5, 1.0])
    with pytest.raises(cli.ProblemError):
        cli.build_signals({"type": "affine_segment", "start": [0.0],
                           "end": [1.0, 2.0], "count": 5}, op, 0)


def test_build_signals_sparse_random():
    op = cli.build_operator({"type": "matrix", "data": np.eye(6).tolist()})
    x = cli.build_signals({"type": "sparse_random", "count": 40, "S": 2}, op, 3)
    assert x.shape == (40, 6)
    assert np.all(np.count_nonzero(x, axis=1) <= 2)
    again = cli.build_signals({"type": "sparse_random", "count": 40, "S": 2}, op, 3)
    assert np.array_equal(x, again)
    with pytest.raises(cli.ProblemError):
        cli.build_signals({"type": "sparse_random", "count": 1, "S": 9}, op, 0)
    with pytest.raises(cli.ProblemError):
        cli.build_signals({"type": "grid"}, op, 0)


def test_thread_budget(monkeypatch):
    monkeypatch.setenv("LIPREC_THREADS", "4")
    assert cli.thread_budget() == 4
    monkeypatch.setenv("LIPREC_THREADS", "abc")
    with pytest.raises(cli.ProblemError):
        cli.thread_budget()
    monkeypatch.setenv("LIPREC_THREADS", "0")
    with pytest.raises(cli.ProblemError):
        cli.thread_budget()
    monkeypatch.delenv("LIPREC_THREADS")
    assert cli.thread_budget() >= 1


# --------------------------------------------------------------------------
# Task execution through execute()


CERTIFY_PROBLEM = {
    "task": "certify",
    "operator": {"type": "matrix", "data": [[1.0, 0.5]]},
    "signals": {"type": "affine_segment", "start": [0.0, 0.0],
                "end": [1.0, 0.6], "count": 20},
    "params": {"omega": 0.9},
}


def test_execute_certify_pass():
    report, traces = cli.execute(json.loads(json.dumps(CERTIFY_PROBLEM)))
    assert report["task"] == "certify"
    names = [a["name"] for a in report["assertions"]]
    assert names == ["certified_at_omega"]
    assert report["assertions"][0]["passed"]
    assert report["results"]["verdict"] == "certified"
    assert report["results"]["tight_omega"] <= 0.9
    assert not report["metadata"]["sample_surrogate"]
    assert traces == {}


def test_execute_certify_fail_keeps_report():
    problem = json.loads(json.dumps(CERTIFY_PROBLEM))
    problem["params"]["omega"] = 0.1
    report, _ = cli.execute(problem)
    assert not report["assertions"][0]["passed"]
    assert report["results"]["verdict"] == "violated"
    assert report["results"]["witness"] is not None


def test_execute_certify_without_omega_checks_injectivity():
    problem = json.loads(json.dumps(CERTIFY_PROBLEM))
    del problem["params"]["omega"]
    report, _ = cli.execute(problem)
    assert [a["name"] for a in report["assertions"]] == ["observations_injective"]
    assert report["assertions"][0]["passed"]
    assert report["results"]["collision"] is None


def test_execute_certify_collision_reported():
    problem = {
        "task": "certify",
        "operator": {"type": "piecewise_example"},
        "signals": {"type": "list", "data": [1.0, 2.0]},
        "params": {},
    }
    report, _ = cli.execute(problem)
    assert not report["assertions"][0]["passed"]
    assert tuple(report["results"]["collision"]) == (0, 1)
    assert report["results"]["tight_omega"] is None


def test_execute_mwet():
    problem = {
        "task": "mwet",
        "operator": {"type": "matrix", "data": [[1.0, 0.0, 1.0, 0.0],
                                                [0.0, 1.0, 0.0, 1.0]]},
        "signals": {"type": "affine_segment",
                    "start": [0.0, 0.0, 0.0, 0.0],
                    "end": [1.0, 0.5, -0.25, 0.75], "count": 25},
        "params": {"num_pairs": 500, "seed": 7},
    }
    report, traces = cli.execute(problem)
    by_name = {a["name"]: a for a in report["assertions"]}
    assert by_name["training_interpolation"]["passed"]
    assert by_name["audit_within_global_bound"]["passed"]
    assert report["results"]["omega_global"] == pytest.approx(
        report["results"]["omega1"] * 2.0)  # sqrt(4)
    assert len(traces["training_residual"]) == 25


def test_execute_mwet_rejects_too_small_omega():
    problem = {
        "task": "mwet",
        "operator": {"type": "matrix", "data": [[1.0, 0.0], [0.0, 1.0]]},
        "signals": {"type": "list", "data": [[0.0, 0.0], [1.0, 1.0]]},
        "params": {"omega": 1e-6},
    }
    with pytest.raises(cli.ProblemError):
        cli.execute(problem)


THEOREM1_PROBLEM = {
    "task": "theorem1",
    "operator": {"type": "piecewise_example"},
    "signals": {"type": "affine_segment", "start": [0.0], "end": [1.0],
                "count": 201},
    "params": {"omega": 1.0, "epsilon": 0.2},
}


def test_execute_theorem1():
    report, traces = cli.execute(json.loads(json.dumps(THEOREM1_PROBLEM)))
    by_name = {a["name"]: a for a in report["assertions"]}
    assert set(by_name) == {"sample_certified", "training_interpolation",
                            "recovery_within_epsilon", "cover_within_cell_bound"}
    assert all(a["passed"] for a in report["assertions"])
    assert report["results"]["max_recovery_error"] <= 0.2
    assert report["results"]["cells_occupied"] <= report["results"]["cells_bound"]
    assert report["metadata"]["sample_surrogate"]
    assert len(traces["recovery_error"]) == 201


def test_execute_theorem1_uncertified_stops_early():
    problem = json.loads(json.dumps(THEOREM1_PROBLEM))
    problem["params"]["omega"] = 0.5
    report, _ = cli.execute(problem)
    assert [a["name"] for a in report["assertions"]] == ["sample_certified"]
    assert not report["assertions"][0]["passed"]
    assert report["results"]["witness"] is not None


def test_execute_theorem3_reduced():
    problem = {
        "task": "theorem3",
        "operator": {"type": "matrix", "data": [[1.0, 0.0, 0.0],
                                                [0.0, 1.0, 0.0]]},
        "signals": {"type": "affine_segment", "start": [0.0, 0.0, 0.0],
                    "end": [1.0, 1.0, 1.0], "count": 100},
        "params": {"omega": 1.3, "epsilon": 0.3, "seed": 11, "num_pairs": 200},
    }
    report, _ = cli.execute(problem)
    by_name = {a["name"]: a for a in report["assertions"]}
    assert all(a["passed"] for a in report["assertions"])
    assert "reduced_grid_no_coarser" in by_name
    assert report["results"]["exact_inversion"] is False
    assert report["results"]["t_reduced"] <= report["results"]["t_full"]
    assert report["results"]["effective_rank"] == 2


def test_execute_theorem3_square_exact():
    problem = {
        "task": "theorem3",
        "operator": {"type": "matrix", "data": [[2.0, 1.0], [1.0, 3.0]]},
        "signals": {"type": "affine_segment", "start": [0.0, 0.0],
                    "end": [1.0, 0.5], "count": 10},
        "params": {"omega": 0.5, "epsilon": 0.1, "seed": 3, "num_pairs": 100},
    }
    report, _ = cli.execute(problem)
    assert all(a["passed"] for a in report["assertions"])
    assert report["results"]["exact_inversion"] is True
    assert report["results"]["t_reduced"] is None
    names = [a["name"] for a in report["assertions"]]
    assert "reduced_grid_no_coarser" not in names


def test_execute_theorem3_needs_matrix():
    problem = {
        "task": "theorem3",
        "operator": {"type": "piecewise_example"},
        "signals": {"type": "list", "data": [0.0, 0.5]},
        "params": {"omega": 1.0, "epsilon": 0.1},
    }
    with pytest.raises(cli.ProblemError):
        cli.execute(problem)


def test_execute_rip_pass():
    matrix, seed = cli._rip_fixture_matrix()
    problem = {
        "task": "rip",
        "operator": {"type": "matrix", "data": matrix},
        "params": {"S": 2, "num_pairs": 500, "seed": seed},
    }
    report, _ = cli.execute(problem)
    by_name = {a["name"]: a for a in report["assertions"]}
    assert by_name["derived_constant_applicable"]["passed"]
    assert by_name["sparse_pairs_within_derived_constant"]["passed"]
    assert by_name["delta_monotone"]["passed"]
    assert report["results"]["delta"] <= report["results"]["delta_2s"]
    assert report["results"]["derived_omega"] == pytest.approx(
        1.0 / math.sqrt(1.0 - report["results"]["delta_2s"]))


def test_execute_rip_degenerate_reports_failed_assertion():
    # duplicate columns: delta_2 = 1, so the derived constant does not exist
    problem = {
        "task": "rip",
        "operator": {"type": "matrix", "data": [[1.0, 1.0, 0.0],
                                                [0.0, 0.0, 1.0]]},
        "params": {"S": 1, "num_pairs": 50},
    }
    report, _ = cli.execute(problem)
    assert [a["name"] for a in report["assertions"]] == ["derived_constant_applicable"]
    assert not report["assertions"][0]["passed"]
    assert report["results"]["derived_omega"] is None


def test_execute_example3():
    report, _ = cli.execute({"task": "example3"})
    names = [a["name"] for a in report["assertions"]]
    assert names == ["unit_interval_certified_at_1", "plateau_pair_collides",
                     "union_certified_at_2", "union_violated_at_1p99"]
    assert all(a["passed"] for a in report["assertions"])


def test_execute_rejects_unknown_task_and_bad_shapes():
    with pytest.raises(cli.ProblemError):
        cli.execute({"task": "theorem9"})
    with pytest.raises(cli.ProblemError):
        cli.execute([1, 2, 3])
    with pytest.raises(cli.ProblemError):
        cli.execute({"task": "certify", "operator": {"type": "matrix",
                                                     "data": [[1.0]]},
                     "signals": {"type": "list", "data": [0.0]},
                     "params": "omega"})


def test_execute_deterministic_modulo_clock():
    problem = json.dumps(THEOREM1_PROBLEM)
    first = _strip_clock(cli.execute(json.loads(problem))[0])
    second = _strip_clock(cli.execute(json.loads(problem))[0])
    assert first == second


def test_report_metadata_fields():
    report, _ = cli.execute({"task": "example3", "params": {"seed": 5}})
    meta = report["metadata"]
    assert meta["seed"] == 5
    assert meta["threads"] >= 1
    assert isinstance(meta["runtime_ms"], float)
    assert meta["version"]
    assert meta["timestamp"].endswith("+00:00")


# --------------------------------------------------------------------------
# Command line entry points


def _write_problem(tmp_path, problem, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(problem))
    return str(path)


def test_main_run_success(tmp_path, capsys):
    path = _write_problem(tmp_path, CERTIFY_PROBLEM)
    out = tmp_path / "report.json"
    code = _run_main(["run", path, "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["task"] == "certify"
    assert "certified_at_omega" in capsys.readouterr().out


def test_main_run_assertion_failure_still_writes_report(tmp_path):
    problem = json.loads(json.dumps(CERTIFY_PROBLEM))
    problem["params"]["omega"] = 0.01
    path = _write_problem(tmp_path, problem)
    out = tmp_path / "report.json"
    code = _run_main(["run", path, "--out", str(out)])
    assert code == 2
    report = json.loads(out.read_text())
    assert not report["assertions"][0]["passed"]


def test_main_run_malformed_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"task": "certify",')
    out = tmp_path / "report.json"
    code = _run_main(["run", str(path), "--out", str(out)])
    assert code == 1
    err = capsys.readouterr().err
    assert "line" in err and "column" in err
    assert not out.exists()


def test_main_run_missing_file(tmp_path):
    code = _run_main(["run", str(tmp_path / "absent.json"),
                      "--out", str(tmp_path / "r.json")])
    assert code == 1


def test_main_run_input_error_for_bad_dimensions(tmp_path):
    problem = {
        "task": "certify",
        "operator": {"type": "matrix", "data": [[1.0, 0.0]]},
        "signals": {"type": "list", "data": [[1.0, 2.0, 3.0]]},
        "params": {},
    }
    path = _write_problem(tmp_path, problem)
    code = _run_main(["run", path, "--out", str(tmp_path / "r.json")])
    assert code == 1


def test_main_run_with_trace_and_overrides(tmp_path):
    path = _write_problem(tmp_path, THEOREM1_PROBLEM)
    out = tmp_path / "report.json"
    trace = tmp_path / "trace.csv"
    code = _run_main(["run", path, "--out", str(out), "--trace", str(trace),
                      "--set", "params.epsilon=0.25",
                      "--set", "signals.count=101"])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["results"]["epsilon"] == 0.25
    assert report["results"]["sample_size"] == 101
    with open(trace) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["series", "index", "value"]
    assert len(rows) == 102  # header plus one recovery error per point


def test_apply_overrides_paths():
    problem = {"params": {"omega": 1.0}}
    cli.apply_overrides(problem, ["params.omega=2.5", "params.tag=fast",
                                  "extra.deep.key=[1,2]"])
    assert problem["params"]["omega"] == 2.5
    assert problem["params"]["tag"] == "fast"  # unquoted strings stay raw
    assert problem["extra"]["deep"]["key"] == [1, 2]
    with pytest.raises(cli.ProblemError):
        cli.apply_overrides(problem, ["no-equals-sign"])
    with pytest.raises(cli.ProblemError):
        cli.apply_overrides(problem, ["params.omega.inner=1"])


def test_main_run_rip_over_enumeration_cap(tmp_path, capsys):
    problem = {
        "task": "rip",
        "operator": {"type": "matrix", "data": np.eye(40).tolist()},
        "params": {"S": 8},
    }
    path = _write_problem(tmp_path, problem)
    out = tmp_path / "report.json"
    code = _run_main(["run", path, "--out", str(out)])
    assert code == 1
    assert "TooLargeError" in capsys.readouterr().err
    assert not out.exists()


def test_sample_problems_all_pass():
    for name, problem in cli.sample_problems():
        report, _ = cli.execute(problem)
        assert all(entry["passed"] for entry in report["assertions"]), name


def test_sample_problems_match_files_on_disk():
    directory = pathlib.Path(__file__).resolve().parent.parent / "problems"
    files = {path.name: json.loads(path.read_text())
             for path in directory.glob("*.json")}
    fixtures = cli.sample_problems()
    assert len(files) == len(fixtures)
    for name, problem in fixtures:
        matches = [fname for fname, content in files.items()
                   if content == cli.to_jsonable(problem)]
        assert matches, f"no problems/ file matches fixture {name!r}"


def test_selftest_runs_all_criteria(capsys):
    code = _run_main(["selftest"])
    out = capsys.readouterr().out
    assert code == 0
    for number in range(1, 9):
        assert f"criterion {number}" in out
    assert "selftest: 8/8 criteria passed" in out


def test_selftest_negative_control_fails(tmp_path):
    out = tmp_path / "selftest.json"
    code = _run_main(["selftest", "--debug-corrupt-tolerance",
                      "--out", str(out)])
    assert code == 2
    combined = json.loads(out.read_text())
    assert combined["passed"] is False
    assert len(combined["criteria"]) == 8
    flipped = [check for entry in combined["criteria"]
               for check in entry["checks"]
               if check["kind"] == "atmost" and not check["passed"]]
    assert flipped  # shrunken bounds must actually fail somewhere


def test_selftest_filter(capsys):
    code = _run_main(["selftest", "--filter", "example3"])
    out = capsys.readouterr().out
    assert code == 0
    assert "criterion 7" in out
    assert "criterion 3" not in out
    assert _run_main(["selftest", "--filter", "nosuch"]) == 1


def test_selftest_report_deterministic_modulo_runtime(tmp_path):
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    assert _run_main(["selftest", "--filter", "example3",
                      "--out", str(first)]) == 0
    assert _run_main(["selftest", "--filter", "example3",
                      "--out", str(second)]) == 0
    payloads = []
    for path in (first, second):
        payload = json.loads(path.read_text())
        for entry in payload["criteria"]:
            entry.pop("runtime_s")
        payloads.append(payload)
    assert payloads[0] == payloads[1]
