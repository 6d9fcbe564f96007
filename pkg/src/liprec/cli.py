"""Batch experiment runner: problem JSON in, report JSON out.

A problem file names an operator, a signal sample (explicit list or
generator), a task, and task parameters. ``liprec run problem.json --out
report.json`` executes the task and writes a report with one entry per
assertion; the exit code is 0 when every assertion passed, 2 when some
failed (the report is still written), and 1 for malformed or inconsistent
input. ``liprec selftest`` runs the bundled acceptance suite (the eight
fixed-seed criteria in liprec.acceptance) and prints a pass/fail table.

Tasks:
  certify    pairwise Lipschitz certification of the labeled sample
  mwet       fit the min-form extension, check interpolation and the
             global expansion bound empirically
  theorem1   grid-cover recovery with a full-dimension hypothesis
             (observations box-normalized first; the grid constant
             rescales by the normalization factor)
  theorem3   SVD-reduced recovery for a matrix operator, including the
             observation-consistency check on random signals
  rip        exact restricted isometry constants plus the sparse-pair
             Lipschitz probe at the derived constant
  example3   built-in one-dimensional ramp fixture: a certified interval,
             a colliding pair, and a union set certified at 2 but not 1.99

Reports serialize floats through Python's repr (shortest round-trip for
64-bit values), so parse-and-reserialize is lossless; non-finite values
become the strings "Infinity"/"-Infinity"/"NaN" since strict JSON has no
spelling for them. Output is written atomically (temp file, then rename).
Same problem and seed give identical reports except for the wall-clock
metadata fields (runtime_ms, timestamp).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import math
import os
import sys
import tempfile
import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from . import __version__, acceptance
from .core import (
    TOL_CERT,
    TOL_EVAL,
    LabeledSet,
    LiprecError,
    NotApplicableError,
    NotInjectiveError,
    seeded_rng,
)
from .covering import cover_pipeline
from .lipschitz import tight_omega, verify_lipschitz
from .mwet import fit
from .operators import (
    MatrixOperator,
    Operator,
    PiecewiseExampleOperator,
    normalize,
)
from .rip import (
    rip_delta,
    sparse_signals,
    spectral_balance,
    verify_sparse_lipschitz,
)
from .svdrec import fit_reduced

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_ASSERTION_FAILURE = 2

TASKS = ("certify", "mwet", "theorem1", "theorem3", "rip", "example3")

# Consistency tolerance for recovered observations, relative to 1 + |y|.
CONSISTENCY_RTOL = 1e-8


class ProblemError(ValueError):
    """Malformed or inconsistent problem input; maps to exit code 1."""


def thread_budget() -> int:
    """Parallelism cap from LIPREC_THREADS, hardware count by default.

    The package itself is single-threaded; the cap is applied to the BLAS
    pool via environment defaults at import time (see the package
    __init__) and recorded in report metadata.
    """
    raw = os.environ.get("LIPREC_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ProblemError(f"LIPREC_THREADS must be an integer, got {raw!r}")
        if value < 1:
            raise ProblemError(f"LIPREC_THREADS must be positive, got {value}")
        return value
    return os.cpu_count() or 1


def to_jsonable(obj: Any) -> Any:
    """Recursively convert reports to strict-JSON-safe structures."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        if math.isnan(obj):
            return "NaN"
        return "Infinity" if obj > 0 else "-Infinity"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return to_jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def write_json(payload: Dict[str, Any], path: str) -> None:
    """Serialize atomically: write a sibling temp file, then rename over."""
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True,
                      allow_nan=False) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".liprec-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def assertion(name: str, passed: bool, observed: Optional[float] = None,
              bound: Optional[float] = None) -> Dict[str, Any]:
    return {
        "name": name,
        "passed": bool(passed),
        "observed": None if observed is None else float(observed),
        "bound": None if bound is None else float(bound),
    }


# --------------------------------------------------------------------------
# Problem parsing


def _require(mapping: Dict[str, Any], key: str, where: str) -> Any:
    if key not in mapping:
        raise ProblemError(f"missing field '{where}.{key}'")
    return mapping[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemError(f"field '{where}' must be a number, got {value!r}")
    return float(value)


def _integer(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemError(f"field '{where}' must be an integer, got {value!r}")
    return value


def build_operator(spec: Any) -> Operator:
    if not isinstance(spec, dict):
        raise ProblemError("field 'operator' must be an object")
    kind = _require(spec, "type", "operator")
    if kind == "matrix":
        data = _require(spec, "data", "operator")
        try:
            op = MatrixOperator(data)
        except LiprecError as exc:
            raise ProblemError(f"operator.data: {exc}")
        rows = spec.get("rows")
        cols = spec.get("cols")
        if rows is not None and _integer(rows, "operator.rows") != op.obs_dim:
            raise ProblemError(
                f"operator.rows = {rows} disagrees with data ({op.obs_dim} rows)")
        if cols is not None and _integer(cols, "operator.cols") != op.signal_dim:
            raise ProblemError(
                f"operator.cols = {cols} disagrees with data ({op.signal_dim} columns)")
        return op
    if kind == "piecewise_example":
        return PiecewiseExampleOperator()
    raise ProblemError(f"unknown operator.type {kind!r} "
                       "(expected 'matrix' or 'piecewise_example')")


def build_signals(spec: Any, operator: Operator, default_seed: int) -> np.ndarray:
    if not isinstance(spec, dict):
        raise ProblemError("field 'signals' must be an object")
    kind = _require(spec, "type", "signals")
    if kind in ("list", "finite_list"):
        data = np.asarray(_require(spec, "data", "signals"), dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] != operator.signal_dim:
            raise ProblemError(
                f"signals.data must be rows of length {operator.signal_dim}, "
                f"got shape {data.shape}")
        return data
    if kind == "affine_segment":
        start = np.asarray(_require(spec, "start", "signals"), dtype=np.float64).ravel()
        end = np.asarray(_require(spec, "end", "signals"), dtype=np.float64).ravel()
        count = _integer(_require(spec, "count", "signals"), "signals.count")
        if start.shape != (operator.signal_dim,) or end.shape != (operator.signal_dim,):
            raise ProblemError(
                f"signals.start/end must have length {operator.signal_dim}")
        if count < 1:
            raise ProblemError(f"signals.count must be >= 1, got {count}")
        steps = np.linspace(0.0, 1.0, count)[:, None]
        return start[None, :] + steps * (end - start)[None, :]
    if kind == "sparse_random":
        count = _integer(_require(spec, "count", "signals"), "signals.count")
        sparsity = _integer(_require(spec, "S", "signals"), "signals.S")
        seed = _integer(spec.get("seed", default_seed), "signals.seed")
        n = operator.signal_dim
        if count < 1:
            raise ProblemError(f"signals.count must be >= 1, got {count}")
        if not 1 <= sparsity <= n:
            raise ProblemError(f"signals.S must be in [1, {n}], got {sparsity}")
        return sparse_signals(n, sparsity, count, seeded_rng(seed))
    raise ProblemError(f"unknown signals.type {kind!r} (expected 'list', "
                       "'affine_segment', or 'sparse_random')")


def _labeled(operator: Operator, signals: np.ndarray) -> LabeledSet:
    try:
        return LabeledSet.from_operator(operator, signals)
    except LiprecError as exc:
        raise ProblemError(f"labeling the sample failed: {exc}")


# --------------------------------------------------------------------------
# Task runners. Each returns (assertions, results, traces); traces map a
# name to a 1-D array for the optional CSV output.

TaskOutput = Tuple[List[Dict[str, Any]], Dict[str, Any], Dict[str, np.ndarray]]


def run_certify(operator: Operator, signals: np.ndarray,
                params: Dict[str, Any]) -> TaskOutput:
    sample = _labeled(operator, signals)
    results: Dict[str, Any] = {"sample_size": len(sample)}
    collision = None
    if len(sample) < 2:
        results["tight_omega"] = 0.0
    else:
        try:
            results["tight_omega"] = tight_omega(sample).omega
        except NotInjectiveError as exc:
            collision = exc.pair
            results["tight_omega"] = None
    results["collision"] = collision
    omega = params.get("omega")
    if omega is None:
        return ([assertion("observations_injective", collision is None)],
                results, {})
    omega = _number(omega, "params.omega")
    cert = verify_lipschitz(sample, omega)
    results["verdict"] = cert.verdict
    results["max_ratio"] = cert.max_ratio
    results["witness"] = cert.witness
    return ([assertion("certified_at_omega", cert.passed, cert.max_ratio, omega)],
            results, {})


def run_mwet(operator: Operator, signals: np.ndarray,
             params: Dict[str, Any], seed: int) -> TaskOutput:
    sample = _labeled(operator, signals)
    omega1 = params.get("omega")
    if omega1 is not None:
        omega1 = _number(omega1, "params.omega")
    try:
        hypothesis = fit(sample, omega1)
    except LiprecError as exc:
        raise ProblemError(f"fit failed: {exc}")
    residuals = hypothesis.training_residuals()
    num_pairs = _integer(params.get("num_pairs", 1000), "params.num_pairs")
    audit = hypothesis.lipschitz_audit(num_pairs, seed)
    results = {
        "sample_size": len(sample),
        "omega1": hypothesis.omega1,
        "omega_global": hypothesis.omega_global,
        "max_training_residual": float(residuals.max()),
        "audit_ratio": audit,
        "audit_pairs": num_pairs,
    }
    assertions = [
        assertion("training_interpolation", residuals.max() <= TOL_EVAL,
                  float(residuals.max()), TOL_EVAL),
        assertion("audit_within_global_bound",
                  audit <= hypothesis.omega_global + TOL_EVAL,
                  audit, hypothesis.omega_global + TOL_EVAL),
    ]
    return assertions, results, {"training_residual": residuals}


def run_theorem1(operator: Operator, signals: np.ndarray,
                 params: Dict[str, Any]) -> TaskOutput:
    omega = _number(_require(params, "omega", "params"), "params.omega")
    epsilon = _number(_require(params, "epsilon", "params"), "params.epsilon")
    norm_op, scale = normalize(operator, signals)
    sample = _labeled(norm_op, signals)
    omega_n = omega * scale
    cert = verify_lipschitz(sample, omega_n)
    results: Dict[str, Any] = {
        "sample_size": len(sample),
        "scale": scale,
        "omega_normalized": omega_n,
        "max_ratio": cert.max_ratio,
    }
    certified = assertion("sample_certified", cert.passed, cert.max_ratio, omega_n)
    if not cert.passed:
        results["witness"] = cert.witness
        return [certified], results, {}
    outcome = cover_pipeline(sample, omega_n, epsilon)
    report = outcome.report
    results.update(dataclasses.asdict(report))
    assertions = [
        certified,
        assertion("training_interpolation",
                  report.max_training_residual <= TOL_EVAL,
                  report.max_training_residual, TOL_EVAL),
        assertion("recovery_within_epsilon",
                  report.max_recovery_error <= epsilon + TOL_CERT,
                  report.max_recovery_error, epsilon + TOL_CERT),
        assertion("cover_within_cell_bound",
                  report.cells_occupied <= report.cells_bound,
                  float(report.cells_occupied), float(report.cells_bound)),
    ]
    return assertions, results, {"recovery_error": outcome.recovery_errors}


def run_theorem3(operator: Operator, signals: np.ndarray,
                 params: Dict[str, Any], seed: int) -> TaskOutput:
    omega = _number(_require(params, "omega", "params"), "params.omega")
    epsilon = _number(_require(params, "epsilon", "params"), "params.epsilon")
    if not isinstance(operator, MatrixOperator):
        raise ProblemError("task 'theorem3' needs a matrix operator")
    sample = _labeled(operator, signals)
    cert = verify_lipschitz(sample, omega)
    results: Dict[str, Any] = {
        "sample_size": len(sample),
        "max_ratio": cert.max_ratio,
    }
    certified = assertion("sample_certified", cert.passed, cert.max_ratio, omega)
    if not cert.passed:
        results["witness"] = cert.witness
        return [certified], results, {}
    outcome = fit_reduced(sample, operator, omega, epsilon)
    report = outcome.report
    results.update(dataclasses.asdict(report))
    if report.exact_inversion:
        # Square full-rank operator: Psi inverts exactly, no trained part.
        err_bound = CONSISTENCY_RTOL * (1.0 + float(
            np.linalg.norm(sample.signals, axis=1).max()))
    else:
        err_bound = epsilon + TOL_CERT
    num_draws = _integer(params.get("num_pairs", 1000), "params.num_pairs")
    rng = seeded_rng(seed)
    probes = rng.standard_normal((num_draws, operator.signal_dim))
    observations = probes @ operator.matrix.T
    residuals = outcome.recovery.consistency_residuals(probes)
    rel = residuals / (1.0 + np.linalg.norm(observations, axis=1))
    assertions = [
        certified,
        assertion("training_interpolation",
                  report.max_training_residual <= TOL_EVAL,
                  report.max_training_residual, TOL_EVAL),
        assertion("recovery_within_epsilon",
                  report.max_recovery_error <= err_bound,
                  report.max_recovery_error, err_bound),
        assertion("observation_consistency",
                  float(rel.max()) <= CONSISTENCY_RTOL,
                  float(rel.max()), CONSISTENCY_RTOL),
    ]
    if not report.exact_inversion:
        assertions.append(assertion(
            "reduced_grid_no_coarser", report.t_reduced <= report.t_full,
            float(report.t_reduced), float(report.t_full)))
    results["consistency_draws"] = num_draws
    return assertions, results, {"recovery_error": outcome.recovery_errors}


def run_rip(operator: Operator, params: Dict[str, Any], seed: int) -> TaskOutput:
    if not isinstance(operator, MatrixOperator):
        raise ProblemError("task 'rip' needs a matrix operator")
    sparsity = _integer(_require(params, "S", "params"), "params.S")
    num_pairs = _integer(params.get("num_pairs", 1000), "params.num_pairs")
    report = rip_delta(operator, sparsity)
    try:
        check = verify_sparse_lipschitz(operator, sparsity, num_pairs, seed)
    except NotApplicableError:
        # delta_2S >= 1: a data property discovered by computation, reported
        # as a failed assertion rather than rejected as bad input.
        results = {
            "S": sparsity,
            "delta": report.delta,
            "subsets_examined": report.subsets_examined,
            "extremal_subset": report.extremal_subset,
            "derived_omega": None,
        }
        return ([assertion("derived_constant_applicable", False)],
                results, {})
    results = {
        "S": sparsity,
        "delta": report.delta,
        "subsets_examined": report.subsets_examined,
        "extremal_subset": report.extremal_subset,
        "delta_2s": check.delta_2s,
        "derived_omega": check.derived_omega,
        "max_ratio": check.max_ratio,
        "num_pairs": num_pairs,
    }
    assertions = [
        assertion("derived_constant_applicable", True, check.delta_2s, 1.0),
        assertion("sparse_pairs_within_derived_constant", check.passed,
                  check.max_ratio, check.derived_omega),
        assertion("delta_monotone", report.delta <= check.delta_2s,
                  report.delta, check.delta_2s),
    ]
    return assertions, results, {}


def run_example3(params: Dict[str, Any]) -> TaskOutput:
    """Built-in ramp fixture: the three certification facts in one report."""
    ramp = PiecewiseExampleOperator()
    interval = LabeledSet.from_operator(
        ramp, np.linspace(0.0, 1.0, 201)[:, None])
    cert_interval = verify_lipschitz(interval, 1.0)

    plateau_pair = LabeledSet.from_operator(ramp, np.array([[1.0], [2.0]]))
    try:
        tight_omega(plateau_pair)
        collided = False
    except NotInjectiveError:
        collided = True

    union = LabeledSet.from_operator(ramp, np.concatenate([
        np.linspace(0.0, 0.5, 51),
        [1.5],
        np.linspace(2.5, 3.0, 51),
    ])[:, None])
    cert_union_2 = verify_lipschitz(union, 2.0)
    cert_union_199 = verify_lipschitz(union, 1.99)

    assertions = [
        assertion("unit_interval_certified_at_1", cert_interval.passed,
                  cert_interval.max_ratio, 1.0),
        assertion("plateau_pair_collides", collided),
        assertion("union_certified_at_2", cert_union_2.passed,
                  cert_union_2.max_ratio, 2.0),
        assertion("union_violated_at_1p99", not cert_union_199.passed,
                  cert_union_199.max_ratio, 1.99),
    ]
    results = {
        "interval_points": len(interval),
        "union_points": len(union),
        "union_max_ratio": cert_union_2.max_ratio,
        "union_witness": cert_union_199.witness,
    }
    return assertions, results, {}


# --------------------------------------------------------------------------
# Dispatch and I/O


def execute(problem: Dict[str, Any]) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Run one problem dict; returns (report, traces)."""
    if not isinstance(problem, dict):
        raise ProblemError("problem file must contain a JSON object")
    task = _require(problem, "task", "problem")
    if task not in TASKS:
        raise ProblemError(f"unknown task {task!r} (expected one of {', '.join(TASKS)})")
    params = problem.get("params") or {}
    if not isinstance(params, dict):
        raise ProblemError("field 'params' must be an object")
    seed = _integer(params.get("seed", 0), "params.seed")
    start = time.perf_counter()

    if task == "example3":
        assertions, results, traces = run_example3(params)
    else:
        operator = build_operator(_require(problem, "operator", "problem"))
        if task == "rip":
            assertions, results, traces = run_rip(operator, params, seed)
        else:
            signals = build_signals(_require(problem, "signals", "problem"),
                                    operator, seed)
            if task == "certify":
                assertions, results, traces = run_certify(operator, signals, params)
            elif task == "mwet":
                assertions, results, traces = run_mwet(operator, signals, params, seed)
            elif task == "theorem1":
                assertions, results, traces = run_theorem1(operator, signals, params)
            else:
                assertions, results, traces = run_theorem3(operator, signals,
                                                           params, seed)

    runtime_ms = (time.perf_counter() - start) * 1000.0
    report = {
        "task": task,
        "assertions": assertions,
        "results": results,
        "metadata": {
            "seed": seed,
            "runtime_ms": runtime_ms,
            "timestamp": datetime.datetime.now(datetime.timezone.utc)
                         .isoformat(timespec="seconds"),
            "version": __version__,
            "threads": thread_budget(),
            # Continuous signal sets are represented by their finite samples;
            # every quantified claim in the report ranges over the sample.
            "sample_surrogate": task in ("theorem1", "theorem3"),
        },
    }
    return report, traces


def write_trace(traces: Dict[str, np.ndarray], path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["series", "index", "value"])
        for name in sorted(traces):
            for i, value in enumerate(np.asarray(traces[name]).ravel()):
                writer.writerow([name, i, repr(float(value))])


def load_problem(path: str) -> Dict[str, Any]:
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        raise ProblemError(f"cannot read problem file: {exc}")
    except json.JSONDecodeError as exc:
        raise ProblemError(
            f"malformed JSON in {path}: line {exc.lineno} column {exc.colno}: {exc.msg}")


def apply_overrides(problem: Dict[str, Any], overrides: List[str]) -> None:
    """Apply --set key=value pairs; keys are dot paths, values JSON or raw."""
    for item in overrides:
        if "=" not in item:
            raise ProblemError(f"--set needs key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = problem
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = node[part] = {}
            elif not isinstance(nxt, dict):
                raise ProblemError(f"--set cannot descend into '{part}' in {key!r}")
            node = nxt
        node[parts[-1]] = value


def _report_passed(report: Dict[str, Any]) -> bool:
    return all(entry["passed"] for entry in report["assertions"])


def run_command(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    apply_overrides(problem, args.set or [])
    report, traces = execute(problem)
    write_json(report, args.out)
    if args.trace:
        write_trace(traces, args.trace)
    for entry in report["assertions"]:
        status = "pass" if entry["passed"] else "FAIL"
        print(f"{report['task']:<10} {entry['name']:<40} {status}")
    return EXIT_OK if _report_passed(report) else EXIT_ASSERTION_FAILURE


# --------------------------------------------------------------------------
# Sample problems: one deterministic fixture per task. These are the
# sources of the files in the repository's problems/ directory and give
# the tests a known-good problem per task.


def _rip_fixture_matrix() -> Tuple[List[List[float]], int]:
    """First seed whose balanced 6x8 Gaussian keeps delta_4 below 1.

    Wide unit-column Gaussians at desk scale always overshoot delta = 1
    on the lambda_max side, so the fixture applies the optimal uniform
    rescaling first; that qualifies whenever no 4-column subset is
    singular, which seed 0 already satisfies. The scan stays in place to
    keep the fixture self-repairing.
    """
    for seed in range(100):
        rng = seeded_rng(seed)
        a = rng.standard_normal((6, 8))
        a /= np.linalg.norm(a, axis=0)
        a *= spectral_balance(a, 4).scale
        if rip_delta(a, 4).delta < 1.0:
            return a.tolist(), seed
    raise RuntimeError("no qualifying restricted-isometry fixture in 100 seeds")


def sample_problems() -> List[Tuple[str, Dict[str, Any]]]:
    segment3 = {"type": "affine_segment", "start": [0.0, 0.0, 0.0],
                "end": [1.0, 1.0, 1.0], "count": 120}
    rip_matrix, rip_seed = _rip_fixture_matrix()
    return [
        ("example3", {"task": "example3"}),
        ("certify", {
            "task": "certify",
            "operator": {"type": "matrix", "data": [[1.0, 0.5]]},
            "signals": {"type": "affine_segment", "start": [0.0, 0.0],
                        "end": [1.0, 0.6], "count": 40},
            "params": {"omega": 0.9},
        }),
        ("mwet", {
            "task": "mwet",
            "operator": {"type": "matrix",
                         "data": [[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]]},
            "signals": {"type": "affine_segment",
                        "start": [0.0, 0.0, 0.0, 0.0],
                        "end": [1.0, 0.5, -0.25, 0.75], "count": 30},
            "params": {"num_pairs": 2000, "seed": 7},
        }),
        ("theorem1", {
            "task": "theorem1",
            "operator": {"type": "piecewise_example"},
            "signals": {"type": "affine_segment", "start": [0.0], "end": [1.0],
                        "count": 201},
            "params": {"omega": 1.0, "epsilon": 0.2},
        }),
        ("theorem3", {
            "task": "theorem3",
            "operator": {"type": "matrix",
                         "data": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]},
            "signals": segment3,
            "params": {"omega": 1.3, "epsilon": 0.3, "seed": 11,
                       "num_pairs": 500},
        }),
        ("theorem3_square", {
            "task": "theorem3",
            "operator": {"type": "matrix", "data": [[2.0, 1.0], [1.0, 3.0]]},
            "signals": {"type": "affine_segment", "start": [0.0, 0.0],
                        "end": [1.0, 0.5], "count": 10},
            "params": {"omega": 0.5, "epsilon": 0.1, "seed": 3,
                       "num_pairs": 500},
        }),
        ("rip", {
            "task": "rip",
            "operator": {"type": "matrix", "data": rip_matrix},
            "signals": {"type": "sparse_random", "count": 1, "S": 2,
                        "seed": rip_seed},
            "params": {"S": 2, "num_pairs": 2000, "seed": rip_seed},
        }),
    ]


# --------------------------------------------------------------------------
# Selftest: the bundled acceptance suite as a command.


def _criterion_entry(result: acceptance.CriterionResult) -> Dict[str, Any]:
    """Serialize one criterion. runtime_s is wall-clock metadata: it is
    the only field that differs between repeated runs (budgets carry wide
    margins, so within_budget stays put)."""
    return {
        "number": result.number,
        "label": result.label,
        "task": result.task,
        "passed": result.passed,
        "summary": result.summary,
        "checks": [dataclasses.asdict(c) for c in result.checks],
        "runtime_s": result.runtime_s,
        "budget_s": result.budget_s,
        "within_budget": result.within_budget,
        "details": result.details,
    }


def _corrupt(entry: Dict[str, Any], factor: float) -> None:
    """Shrink every upper bound; a healthy suite must then fail overall."""
    for check in entry["checks"]:
        if check["kind"] == "atmost":
            check["bound"] = check["bound"] * factor
            check["passed"] = check["observed"] <= check["bound"]
    entry["passed"] = (all(c["passed"] for c in entry["checks"])
                       and entry["within_budget"])


def selftest_command(args: argparse.Namespace) -> int:
    selected = [runner for task, runner in acceptance.ALL_CRITERIA
                if args.filter is None or task == args.filter]
    if not selected:
        raise ProblemError(f"--filter {args.filter!r} matches no criterion task")
    entries = []
    for runner in selected:
        entry = _criterion_entry(runner())
        if args.debug_corrupt_tolerance:
            _corrupt(entry, 1e-6)
        entries.append(entry)
        status = "pass" if entry["passed"] else "FAIL"
        print(f"criterion {entry['number']}  {entry['task']:<9} "
              f"{entry['label']:<28} {status}  "
              f"[{entry['runtime_s']:5.2f}s / {entry['budget_s']:.0f}s]  "
              f"{entry['summary']}")
    all_passed = all(e["passed"] for e in entries)
    marks = sum(1 for e in entries if e["passed"])
    print(f"selftest: {marks}/{len(entries)} criteria passed")
    if args.out:
        write_json({"task": "selftest", "passed": all_passed,
                    "criteria": entries}, args.out)
    return EXIT_OK if all_passed else EXIT_ASSERTION_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liprec",
        description="Lipschitz-recovery experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    runner = sub.add_parser("run", help="execute one problem file")
    runner.add_argument("problem", help="path to the problem JSON")
    runner.add_argument("--out", required=True, help="path for the report JSON")
    runner.add_argument("--trace", help="optional CSV with per-item series")
    runner.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a problem field (dot-path key, JSON value)")
    runner.set_defaults(handler=run_command)

    selftest = sub.add_parser("selftest", help="run the bundled acceptance suite")
    selftest.add_argument("--filter", help="only run criteria for this task")
    selftest.add_argument("--out", help="optional combined report JSON")
    selftest.add_argument("--debug-corrupt-tolerance", action="store_true",
                          help="negative control: shrink bounds so checks fail")
    selftest.set_defaults(handler=selftest_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except LiprecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
