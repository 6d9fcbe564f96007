"""Certification and manipulation of Lipschitz sets.

A finite labeled set is (inverse, omega)-Lipschitz when every signal pair
satisfies ||x1 - x2|| <= omega * ||y1 - y2|| for its observations y. This
module computes the tight constant of a finite set (the exact maximum
pairwise ratio), verifies a supplied constant with a violating witness on
failure, rebuilds a set under scaling and shifting for linear operators,
and checks the relaxed inequality ||x1 - x2|| <= 2*eps + omega*||y1 - y2||
that an omega-Lipschitz recovery map with error eps forces on any set it
recovers.

All scans are exhaustive over the O(n^2) unordered pairs, row-blocked so
memory stays linear; maxima tie-break to the first pair in row-major index
order, making every result independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .core import (
    TOL_CERT,
    DegenerateScaleError,
    DegenerateSetError,
    DimensionError,
    LabeledSet,
    LipschitzCertificate,
    NotInjectiveError,
    OperatorClassError,
    ParameterError,
    as_vector,
    readonly,
)
from .operators import MatrixOperator


@dataclass(frozen=True)
class AffineTransform:
    """Signal-space map x -> scale * x + shift."""

    scale: float
    shift: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.scale):
            raise ParameterError("scale must be finite")
        object.__setattr__(self, "shift", readonly(as_vector(self.shift, "shift")))


@dataclass(frozen=True)
class RelaxedLipschitzResult:
    """Outcome of the relaxed pairwise check, with the tightest pair's slack."""

    passed: bool
    min_slack: float
    worst_pair: Tuple[int, int]


def _row_pairs(x: np.ndarray, y: np.ndarray) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
    """Yield (i, ||x_j - x_i||, ||y_j - y_i||) for all j > i, one row at a time."""
    for i in range(x.shape[0] - 1):
        dx = np.linalg.norm(x[i + 1:] - x[i], axis=1)
        dy = np.linalg.norm(y[i + 1:] - y[i], axis=1)
        yield i, dx, dy


def injectivity_tolerance(observations: np.ndarray) -> float:
    """Observation distances at or below this level count as collisions."""
    return 1e-12 * (1.0 + float(np.linalg.norm(observations, axis=1).max()))


def tight_omega(labeled_set: LabeledSet, *, tol_inj: Optional[float] = None) -> LipschitzCertificate:
    """Exact Lipschitz constant of a finite labeled set.

    Returns a certified certificate whose omega is the maximum over all
    distinct pairs of ||x1 - x2|| / ||y1 - y2||, with the maximizing pair as
    witness. Any pair whose observations are closer than the injectivity
    tolerance makes the ratio meaningless and raises NotInjectiveError.
    """
    n = len(labeled_set)
    if n < 2:
        raise DegenerateSetError("the tight constant needs at least two pairs")
    x, y = labeled_set.signals, labeled_set.observations
    if tol_inj is None:
        tol_inj = injectivity_tolerance(y)
    best = -np.inf
    witness = (0, 1)
    for i, dx, dy in _row_pairs(x, y):
        collisions = np.flatnonzero(dy <= tol_inj)
        if collisions.size:
            j = i + 1 + int(collisions[0])
            raise NotInjectiveError(
                f"signals {i} and {j} share an observation "
                f"(distance {dy[collisions[0]]:.3e} <= {tol_inj:.3e})", pair=(i, j))
        ratios = dx / dy
        k = int(np.argmax(ratios))
        if ratios[k] > best:
            best = float(ratios[k])
            witness = (i, i + 1 + k)
    return LipschitzCertificate(omega=best, verdict="certified", witness=witness, max_ratio=best)


def verify_lipschitz(labeled_set: LabeledSet, omega: float, *,
                     tol_cert: float = TOL_CERT) -> LipschitzCertificate:
    """Check ||x1 - x2|| <= omega * ||y1 - y2|| + tol_cert on every pair.

    Certifies vacuously for fewer than two pairs. On failure the witness is
    the first pair attaining the maximum ratio; observation collisions
    between distinct signals simply show up as violations (infinite ratio).
    """
    if not (np.isfinite(omega) and omega > 0.0):
        raise ParameterError(f"omega must be a positive finite number, got {omega}")
    n = len(labeled_set)
    if n < 2:
        return LipschitzCertificate(omega=float(omega), verdict="certified",
                                    witness=None, max_ratio=0.0)
    x, y = labeled_set.signals, labeled_set.observations
    best = -np.inf
    witness = (0, 1)
    violated = False
    for i, dx, dy in _row_pairs(x, y):
        violated = violated or bool(np.any(dx > omega * dy + tol_cert))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(dy > 0.0, dx / dy, np.where(dx > 0.0, np.inf, 0.0))
        k = int(np.argmax(ratios))
        if ratios[k] > best:
            best = float(ratios[k])
            witness = (i, i + 1 + k)
    return LipschitzCertificate(
        omega=float(omega),
        verdict="violated" if violated else "certified",
        witness=witness,
        max_ratio=best,
    )


def affine_transform(labeled_set: LabeledSet, operator: MatrixOperator,
                     transform: AffineTransform) -> LabeledSet:
    """Scale and shift every signal, relabeling observations under the operator.

    Only linear (matrix) operators qualify: linearity is what keeps the
    pairwise ratios, and hence the tight constant, invariant. A zero scale
    would collapse the set to a single point and is rejected.
    """
    if not isinstance(operator, MatrixOperator):
        raise OperatorClassError("affine transforms preserve certification only for "
                                 "linear operators; got " + type(operator).__name__)
    if transform.scale == 0.0:
        raise DegenerateScaleError("scale 0 collapses the set to a singleton")
    if transform.shift.shape[0] != labeled_set.signal_dim:
        raise DimensionError(
            f"shift length {transform.shift.shape[0]} != signal dim {labeled_set.signal_dim}")
    moved = transform.scale * labeled_set.signals + transform.shift
    return LabeledSet.from_operator(operator, moved)


def check_relaxed_lipschitz(labeled_set: LabeledSet, omega: float, epsilon: float, *,
                            tol_cert: float = TOL_CERT) -> RelaxedLipschitzResult:
    """Check ||x1 - x2|| <= 2*epsilon + omega*||y1 - y2|| on every pair.

    ``omega`` is the Lipschitz constant of some external recovery map and
    ``epsilon`` its measured worst-case recovery error on this set; any set
    recovered that well by that map must satisfy the inequality. Reports
    the minimum slack 2*epsilon + omega*||y1 - y2|| - ||x1 - x2|| and the
    pair attaining it; passes when that slack is >= -tol_cert.
    """
    if not (np.isfinite(omega) and omega > 0.0):
        raise ParameterError(f"omega must be a positive finite number, got {omega}")
    if not (np.isfinite(epsilon) and epsilon >= 0.0):
        raise ParameterError(f"epsilon must be a nonnegative finite number, got {epsilon}")
    if len(labeled_set) < 2:
        raise DegenerateSetError("the relaxed check needs at least two pairs")
    x, y = labeled_set.signals, labeled_set.observations
    worst = np.inf
    worst_pair = (0, 1)
    for i, dx, dy in _row_pairs(x, y):
        slack = 2.0 * epsilon + omega * dy - dx
        k = int(np.argmin(slack))
        if slack[k] < worst:
            worst = float(slack[k])
            worst_pair = (i, i + 1 + k)
    return RelaxedLipschitzResult(passed=bool(worst >= -tol_cert),
                                  min_slack=worst, worst_pair=worst_pair)
