"""Covering-based training-set construction and end-to-end recovery.

The unit observation hypercube [0,1]^M is partitioned into t^M axis-aligned
cells of side 1/t, with

    t = ceil((1 + dim_factor) * omega * sqrt(M) / epsilon),

where dim_factor is sqrt(N) when the hypothesis must output whole signals
("full" mode) and sqrt(N - M) when it only outputs the null-space component
of a linear operator ("reduced" mode). Any two observations in one cell are
within sqrt(M)/t <= epsilon / (omega * (1 + dim_factor)) of each other, so
training one representative per occupied cell and fitting the min-form
extension with per-coordinate constant omega recovers every certified
sample point to within epsilon.

Cells are half-open with the top face clamped into the last cell, making
the partition disjoint and the representative map deterministic
(first sample point per cell, in input order). Only occupied cells are
stored; t^M is a bound, never a work estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Literal, Tuple

import numpy as np

from .core import (
    TOL_CERT,
    DegenerateSetError,
    DimensionError,
    LabeledSet,
    NoNullSpaceError,
    NotLipschitzError,
    OutOfBoxError,
    ParameterError,
)
from .lipschitz import verify_lipschitz
from .mwet import MwetHypothesis, fit

GridMode = Literal["full", "reduced"]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of one hypercube partition of [0,1]^obs_dim."""

    t: int
    obs_dim: int
    signal_dim: int
    omega: float
    epsilon: float
    dim_factor: float

    @property
    def cell_side(self) -> float:
        return 1.0 / self.t

    @property
    def cell_bound(self) -> int:
        """Total cell count t^M (exact integer; may be astronomically large)."""
        return self.t ** self.obs_dim


def _grid(obs_dim: int, omega: float, epsilon: float, dim_factor: float,
          signal_dim: int) -> GridSpec:
    if not (np.isfinite(omega) and omega > 0.0):
        raise ParameterError(f"omega must be positive, got {omega}")
    if not (np.isfinite(epsilon) and epsilon > 0.0):
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    t = math.ceil((1.0 + dim_factor) * omega * math.sqrt(obs_dim) / epsilon)
    return GridSpec(t=max(t, 1), obs_dim=obs_dim, signal_dim=signal_dim,
                    omega=float(omega), epsilon=float(epsilon), dim_factor=float(dim_factor))


def grid_spec(signal_dim: int, obs_dim: int, omega: float, epsilon: float,
              mode: GridMode) -> GridSpec:
    """Cell count and geometry for the chosen hypothesis output mode.

    "full" uses dim_factor sqrt(N); "reduced" uses sqrt(N - M) and needs a
    nontrivial null space (M < N).
    """
    if not 1 <= obs_dim <= signal_dim:
        raise DimensionError(f"need 1 <= M <= N, got M={obs_dim}, N={signal_dim}")
    if mode == "full":
        factor = math.sqrt(signal_dim)
    elif mode == "reduced":
        if obs_dim == signal_dim:
            raise NoNullSpaceError(
                "reduced mode needs M < N; a square full-rank operator inverts exactly")
        factor = math.sqrt(signal_dim - obs_dim)
    else:
        raise ParameterError(f"unknown grid mode {mode!r}")
    return _grid(obs_dim, omega, epsilon, factor, signal_dim)


def cell_index(spec: GridSpec, y, *, tol: float = TOL_CERT) -> Tuple[int, ...]:
    """Cell digits of one observation in [0,1]^M (within tol per coordinate).

    Digit k is floor(y_k * t) clamped into [0, t-1], which assigns the
    closed top face to the last cell.
    """
    v = np.asarray(y, dtype=np.float64)
    if v.shape != (spec.obs_dim,):
        raise DimensionError(f"expected length {spec.obs_dim}, got shape {v.shape}")
    if np.any(v < -tol) or np.any(v > 1.0 + tol):
        k = int(np.argmax((v < -tol) | (v > 1.0 + tol)))
        raise OutOfBoxError(f"coordinate {k} = {v[k]:.6g} outside [0, 1] + {tol:.1e}")
    digits = np.clip(np.floor(v * spec.t).astype(np.int64), 0, spec.t - 1)
    return tuple(int(d) for d in digits)


def _cell_indices(spec: GridSpec, observations: np.ndarray, tol: float) -> np.ndarray:
    if np.any(observations < -tol) or np.any(observations > 1.0 + tol):
        row = int(np.argmax(np.any((observations < -tol) | (observations > 1.0 + tol), axis=1)))
        raise OutOfBoxError(f"observation {row} lies outside [0, 1]^M + {tol:.1e}")
    return np.clip(np.floor(observations * spec.t).astype(np.int64), 0, spec.t - 1)


@dataclass(frozen=True)
class GridCover:
    """One training representative per occupied cell of a grid.

    ``representatives`` maps cell digit tuples to row indices into
    ``source``, in first-occurrence order; the mapped pair is the earliest
    sample point whose observation falls in the cell.
    """

    spec: GridSpec
    representatives: Dict[Tuple[int, ...], int]
    source: LabeledSet

    def __len__(self) -> int:
        return len(self.representatives)

    def pair_for_cell(self, cell: Tuple[int, ...]):
        return self.source.pair(self.representatives[cell])

    def representative_indices(self) -> np.ndarray:
        return np.fromiter(self.representatives.values(), dtype=np.int64,
                           count=len(self.representatives))

    def representative_set(self) -> LabeledSet:
        """The representatives as a labeled set, in first-occurrence order."""
        return self.source.subset(self.representative_indices())


def build_cover(sample: LabeledSet, spec: GridSpec, *, tol: float = TOL_CERT) -> GridCover:
    """Select the first sample point, in input order, per occupied cell."""
    if len(sample) == 0:
        raise DegenerateSetError("cannot cover an empty sample")
    if sample.obs_dim != spec.obs_dim:
        raise DimensionError(
            f"sample obs dim {sample.obs_dim} != grid dim {spec.obs_dim}")
    digits = _cell_indices(spec, sample.observations, tol)
    reps: Dict[Tuple[int, ...], int] = {}
    for row in range(digits.shape[0]):
        key = tuple(int(d) for d in digits[row])
        if key not in reps:
            reps[key] = row
    return GridCover(spec=spec, representatives=reps, source=sample)


@dataclass(frozen=True)
class CoverReport:
    """Bookkeeping from one covering pipeline run."""

    t: int
    cells_occupied: int
    cells_bound: int
    max_training_residual: float
    max_recovery_error: float
    epsilon: float


@dataclass(frozen=True)
class CoverPipelineResult:
    cover: GridCover
    hypothesis: MwetHypothesis
    report: CoverReport
    recovery_errors: np.ndarray  # per sample point, in input order


def cover_pipeline(sample: LabeledSet, omega: float, epsilon: float, *,
                   tol_cert: float = TOL_CERT) -> CoverPipelineResult:
    """Cover, fit, and verify recovery of a certified sample.

    The sample stands in for the (possibly uncountable) Lipschitz set: it
    must certify at ``omega`` and its observations must lie in [0,1]^M.
    The fitted hypothesis uses per-coordinate constant omega, so its
    training residuals are ~0 and every sample point is recovered to
    within epsilon; both maxima are reported for assertion by the caller.
    """
    cert = verify_lipschitz(sample, omega, tol_cert=tol_cert)
    if not cert.passed:
        raise NotLipschitzError(
            f"sample is not {omega:g}-certified: pair {cert.witness} has ratio "
            f"{cert.max_ratio:.6g}", witness=cert.witness)
    spec = grid_spec(sample.signal_dim, sample.obs_dim, omega, epsilon, "full")
    cover = build_cover(sample, spec, tol=tol_cert)
    hypothesis = fit(cover.representative_set(), omega1=omega, tol_cert=tol_cert)
    training_residual = float(hypothesis.training_residuals().max())
    errors = np.linalg.norm(hypothesis.evaluate(sample.observations) - sample.signals, axis=1)
    report = CoverReport(
        t=spec.t,
        cells_occupied=len(cover),
        cells_bound=spec.cell_bound,
        max_training_residual=training_residual,
        max_recovery_error=float(errors.max()),
        epsilon=float(epsilon),
    )
    return CoverPipelineResult(cover=cover, hypothesis=hypothesis, report=report,
                               recovery_errors=errors)
