"""Hypercube grids, representative selection, and the covering pipeline."""

import math

import numpy as np
import pytest

from liprec import (
    DimensionError,
    LabeledSet,
    MatrixOperator,
    NoNullSpaceError,
    NotLipschitzError,
    OutOfBoxError,
    ParameterError,
    PiecewiseExampleOperator,
    build_cover,
    cell_index,
    cover_pipeline,
    grid_spec,
)
from liprec.core import seeded_rng


def test_grid_spec_full_mode_hand_value():
    # N=3, M=2, omega=1, eps=0.5: ceil((1 + sqrt(3)) * sqrt(2) / 0.5) = 8
    spec = grid_spec(3, 2, 1.0, 0.5, "full")
    assert spec.t == 8
    assert spec.cell_bound == 64
    assert spec.cell_side == pytest.approx(1.0 / 8.0)


def test_grid_spec_reduced_mode_hand_value():
    # same parameters with dim factor sqrt(3 - 2) = 1: ceil(2 * sqrt(2) / 0.5) = 6
    spec = grid_spec(3, 2, 1.0, 0.5, "reduced")
    assert spec.t == 6
    assert spec.dim_factor == 1.0


def test_grid_spec_reduced_never_coarser_than_full():
    rng = seeded_rng(40)
    for _ in range(50):
        n = int(rng.integers(2, 10))
        m = int(rng.integers(1, n))
        omega = float(rng.uniform(0.1, 5.0))
        eps = float(rng.uniform(0.05, 2.0))
        full = grid_spec(n, m, omega, eps, "full")
        red = grid_spec(n, m, omega, eps, "reduced")
        assert red.t <= full.t


def test_grid_spec_single_cell_for_loose_epsilon():
    n = 4
    spec = grid_spec(n, 1, 1.0, 1.0 + math.sqrt(n), "full")
    assert spec.t == 1
    assert spec.cell_bound == 1


def test_grid_spec_cell_diameter_bound():
    spec = grid_spec(5, 3, 2.0, 0.7, "full")
    # sqrt(M)/t <= eps / (omega * (1 + dim_factor))
    assert math.sqrt(spec.obs_dim) / spec.t <= (
        spec.epsilon / (spec.omega * (1.0 + spec.dim_factor)) + 1e-12)


def test_grid_spec_guards():
    with pytest.raises(ParameterError):
        grid_spec(3, 2, 0.0, 0.5, "full")
    with pytest.raises(ParameterError):
        grid_spec(3, 2, 1.0, 0.0, "full")
    with pytest.raises(ParameterError):
        grid_spec(3, 2, 1.0, 0.5, "diagonal")
    with pytest.raises(DimensionError):
        grid_spec(2, 3, 1.0, 0.5, "full")
    with pytest.raises(NoNullSpaceError):
        grid_spec(3, 3, 1.0, 0.5, "reduced")


def test_cell_index_hand_values():
    spec = grid_spec(3, 2, 1.0, 0.5, "full")
    assert spec.t == 8
    assert cell_index(spec, [0.0, 0.0]) == (0, 0)
    assert cell_index(spec, [0.5, 0.99]) == (4, 7)
    # the top face belongs to the last cell
    assert cell_index(spec, [1.0, 1.0]) == (7, 7)


def test_cell_index_tolerance_and_out_of_box():
    spec = grid_spec(3, 2, 1.0, 0.5, "full")
    assert cell_index(spec, [-1e-10, 0.5]) == (0, 4)
    assert cell_index(spec, [1.0 + 1e-10, 0.5]) == (7, 4)
    with pytest.raises(OutOfBoxError):
        cell_index(spec, [-0.01, 0.5])
    with pytest.raises(OutOfBoxError):
        cell_index(spec, [0.5, 1.01])
    with pytest.raises(DimensionError):
        cell_index(spec, [0.5])


def test_cell_index_consistent_with_side():
    spec = grid_spec(2, 1, 1.0, 0.4, "full")
    rng = seeded_rng(41)
    for y in rng.uniform(0.0, 1.0, size=200):
        (digit,) = cell_index(spec, [y])
        assert digit == min(int(y * spec.t), spec.t - 1)


def test_same_cell_observations_are_close():
    spec = grid_spec(4, 2, 1.5, 0.8, "full")
    rng = seeded_rng(42)
    obs = rng.uniform(0.0, 1.0, size=(400, 2))
    cells = {}
    for row, y in enumerate(obs):
        cells.setdefault(cell_index(spec, y), []).append(row)
    bound = math.sqrt(2) / spec.t
    for rows in cells.values():
        for a in rows:
            for b in rows:
                assert np.linalg.norm(obs[a] - obs[b]) <= bound + 1e-12


def test_build_cover_first_wins():
    spec = grid_spec(2, 1, 1.0, 3.0, "full")
    assert spec.t == 1
    ls = LabeledSet.from_arrays([[0.0, 0.0], [1.0, 1.0]], [[0.2], [0.8]])
    cover = build_cover(ls, spec)
    assert len(cover) == 1
    assert cover.representatives[(0,)] == 0
    pair = cover.pair_for_cell((0,))
    assert np.array_equal(pair.signal, [0.0, 0.0])


def test_build_cover_every_sampled_cell_occupied():
    op = PiecewiseExampleOperator()
    rng = seeded_rng(43)
    x = np.sort(rng.uniform(0.0, 1.0, size=1000))[:, None]
    ls = LabeledSet.from_operator(op, x)
    spec = grid_spec(1, 1, 1.0, 0.2, "full")
    cover = build_cover(ls, spec)
    assert len(cover) <= spec.t
    seen = {cell_index(spec, y) for y in ls.observations}
    assert set(cover.representatives) == seen
    # each representative's observation really lies in its cell
    for cell, row in cover.representatives.items():
        assert cell_index(spec, ls.observations[row]) == cell


def test_build_cover_guards():
    spec = grid_spec(2, 2, 1.0, 0.5, "full")
    ls = LabeledSet.from_arrays([[0.0, 0.0]], [[0.5]])
    with pytest.raises(DimensionError):
        build_cover(ls, spec)
    outside = LabeledSet.from_arrays([[0.0, 0.0]], [[0.5, 1.7]])
    with pytest.raises(OutOfBoxError):
        build_cover(outside, spec)


def test_representative_set_order_matches_first_occurrence():
    spec = grid_spec(2, 1, 1.0, 1.6, "full")
    assert spec.t == 2
    ls = LabeledSet.from_arrays([[0.9, 0.0], [0.1, 0.0], [0.95, 0.0]],
                                [[0.9], [0.1], [0.95]])
    cover = build_cover(ls, spec)
    reps = cover.representative_set()
    assert np.array_equal(reps.observations[:, 0], [0.9, 0.1])


def test_cover_pipeline_ramp_recovery():
    op = PiecewiseExampleOperator()
    x = np.linspace(0.0, 1.0, 301)[:, None]
    sample = LabeledSet.from_operator(op, x)
    result = cover_pipeline(sample, omega=1.0, epsilon=0.2)
    assert result.report.max_training_residual <= 1e-9
    assert result.report.max_recovery_error <= 0.2
    assert result.report.cells_occupied <= result.report.cells_bound
    assert len(result.recovery_errors) == len(sample)
    assert result.hypothesis.omega1 == 1.0


def test_cover_pipeline_rejects_uncertified_sample():
    op = PiecewiseExampleOperator()
    x = np.linspace(0.0, 1.0, 50)[:, None]
    sample = LabeledSet.from_operator(op, x)
    with pytest.raises(NotLipschitzError) as exc:
        cover_pipeline(sample, omega=0.5, epsilon=0.2)
    assert exc.value.witness is not None


def test_cover_pipeline_linear_segment():
    rng = seeded_rng(44)
    a = MatrixOperator(rng.standard_normal((2, 3)))
    start, end = rng.standard_normal(3), rng.standard_normal(3)
    x = start + np.linspace(0.0, 1.0, 400)[:, None] * (end - start)
    raw = LabeledSet.from_operator(a, x)
    # box-normalize observations by hand; distances shrink by the scale
    lo = raw.observations.min(axis=0)
    scale = float((raw.observations.max(axis=0) - lo).max())
    unit_obs = (raw.observations - lo) / scale
    sample = LabeledSet.from_arrays(raw.signals, unit_obs)
    omega = np.linalg.norm(end - start) / np.linalg.norm(a.apply(end) - a.apply(start))
    result = cover_pipeline(sample, omega=omega * scale, epsilon=0.3)
    assert result.report.max_recovery_error <= 0.3
    assert result.report.max_training_residual <= 1e-9


def test_grid_spec_value_survives_roundtrip():
    spec = grid_spec(6, 2, 0.8, 0.33, "reduced")
    manual = math.ceil((1.0 + math.sqrt(4)) * 0.8 * math.sqrt(2) / 0.33)
    assert spec.t == manual
