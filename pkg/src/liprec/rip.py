"""Exact restricted isometry constants and the sparse-pair Lipschitz bridge.

delta_S is the smallest d such that every submatrix of at most S columns
satisfies (1 - d)|c|^2 <= |A_T c|^2 <= (1 + d)|c|^2, computed here by
exhaustive enumeration of column subsets and the spectra of their Gram
matrices. No sampling: estimates would defeat the point of comparing
against the exact constant. The classical sparse-recovery condition is
delta_2S + delta_3S < 1.

Differences of S-sparse signals are 2S-sparse, so delta_2S < 1 makes any
set of S-sparse signals Lipschitz-recoverable with constant
1/sqrt(1 - delta_2S); verify_sparse_lipschitz probes that bound with
random sparse pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from .core import (
    TOL_CERT,
    DimensionError,
    NotApplicableError,
    ParameterError,
    TooLargeError,
    seeded_rng,
)
from .operators import MatrixOperator

ENUMERATION_CAP = 10 ** 7
_EIG_BLOCK = 1 << 15


def _as_matrix_array(operator) -> np.ndarray:
    if isinstance(operator, MatrixOperator):
        return operator.matrix
    a = np.asarray(operator, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {a.shape}")
    return a


def colex_subsets(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    """All k-subsets of range(n) as ascending tuples, in colex order.

    Colex compares the largest differing element, so (0,1) < (0,2) < (1,2);
    ties in the extremal search break toward the first subset generated.
    """
    if k == 0:
        yield ()
        return
    for top in range(k - 1, n):
        for rest in colex_subsets(top, k - 1):
            yield rest + (top,)


@dataclass(frozen=True)
class RipReport:
    """Exact restricted isometry constant at one sparsity level."""

    S: int
    delta: float
    subsets_examined: int
    extremal_subset: Tuple[int, ...]


def rip_delta(operator, S: int, *, cap: int = ENUMERATION_CAP) -> RipReport:
    """Exact delta_S by exhausting all column subsets of size 1..S.

    Work is sum(C(N, k) for k <= S) Gram spectra; above ``cap`` subsets
    the call refuses with TooLargeError rather than falling back to an
    estimate. The extremal subset is the first one attaining delta, in
    order of increasing size then colex.
    """
    a = _as_matrix_array(operator)
    m, n = a.shape
    if not 1 <= S <= min(m, n):
        raise ParameterError(f"need 1 <= S <= min(M, N) = {min(m, n)}, got S = {S}")
    total = sum(math.comb(n, k) for k in range(1, S + 1))
    if total > cap:
        raise TooLargeError(
            f"{total} subsets exceed the enumeration cap {cap}; "
            "exact computation at this size is off the table")
    gram = a.T @ a
    best = -math.inf
    best_subset: Tuple[int, ...] = ()
    for k in range(1, S + 1):
        if k == 1:
            # 1x1 Grams are the squared column norms; no eigensolver needed.
            diag = np.diag(gram)
            dev = np.maximum(1.0 - diag, diag - 1.0)
            j = int(np.argmax(dev))
            if dev[j] > best:
                best = float(dev[j])
                best_subset = (j,)
            continue
        subs = np.fromiter(
            (i for sub in colex_subsets(n, k) for i in sub),
            dtype=np.int64, count=math.comb(n, k) * k).reshape(-1, k)
        for start in range(0, subs.shape[0], _EIG_BLOCK):
            block = subs[start:start + _EIG_BLOCK]
            grams = gram[block[:, :, None], block[:, None, :]]
            lam = np.linalg.eigvalsh(grams)
            dev = np.maximum(1.0 - lam[:, 0], lam[:, -1] - 1.0)
            j = int(np.argmax(dev))
            if dev[j] > best:
                best = float(dev[j])
                best_subset = tuple(int(i) for i in block[j])
    return RipReport(S=S, delta=max(best, 0.0), subsets_examined=total,
                     extremal_subset=best_subset)


@dataclass(frozen=True)
class BalanceResult:
    """Uniform rescaling that centers the subset spectra around 1."""

    scale: float
    lambda_min: float
    lambda_max: float
    delta: float


def spectral_balance(operator, S: int, *, cap: int = ENUMERATION_CAP) -> BalanceResult:
    """Optimal uniform column rescaling for the isometry constant.

    delta_S depends on the overall scale of A: with lam_min and lam_max
    the extreme Gram eigenvalues over all subsets of size <= S, scaling A
    by sqrt(2 / (lam_min + lam_max)) balances both deviations and yields
    delta_S = (lam_max - lam_min) / (lam_max + lam_min), the minimum any
    uniform rescaling can reach. That is below 1 exactly when no subset
    is singular, however badly the unscaled constant overshoots. The
    returned delta is the predicted constant of scale * A.
    """
    a = _as_matrix_array(operator)
    m, n = a.shape
    if not 1 <= S <= min(m, n):
        raise ParameterError(f"need 1 <= S <= min(M, N) = {min(m, n)}, got S = {S}")
    total = sum(math.comb(n, k) for k in range(1, S + 1))
    if total > cap:
        raise TooLargeError(
            f"{total} subsets exceed the enumeration cap {cap}; "
            "exact computation at this size is off the table")
    gram = a.T @ a
    lo = math.inf
    hi = 0.0
    for k in range(1, S + 1):
        if k == 1:
            diag = np.diag(gram)
            lo = min(lo, float(diag.min()))
            hi = max(hi, float(diag.max()))
            continue
        subs = np.fromiter(
            (i for sub in colex_subsets(n, k) for i in sub),
            dtype=np.int64, count=math.comb(n, k) * k).reshape(-1, k)
        for start in range(0, subs.shape[0], _EIG_BLOCK):
            block = subs[start:start + _EIG_BLOCK]
            grams = gram[block[:, :, None], block[:, None, :]]
            lam = np.linalg.eigvalsh(grams)
            lo = min(lo, float(lam[:, 0].min()))
            hi = max(hi, float(lam[:, -1].max()))
    lo = max(lo, 0.0)
    if hi <= 0.0:
        raise ParameterError("cannot balance a zero matrix")
    return BalanceResult(
        scale=math.sqrt(2.0 / (lo + hi)),
        lambda_min=lo,
        lambda_max=hi,
        delta=(hi - lo) / (hi + lo),
    )


@dataclass(frozen=True)
class RecoverabilityCheck:
    """Outcome of the delta_2S + delta_3S < 1 condition."""

    S: int
    passed: bool
    report_2s: RipReport
    report_3s: RipReport

    @property
    def total(self) -> float:
        return self.report_2s.delta + self.report_3s.delta


def check_recoverability_condition(operator, S: int, *,
                                   cap: int = ENUMERATION_CAP) -> RecoverabilityCheck:
    """Evaluate delta_2S + delta_3S < 1 with exact constants."""
    a = _as_matrix_array(operator)
    n = a.shape[1]
    if 3 * S > n:
        raise ParameterError(f"need 3S <= N, got S = {S}, N = {n}")
    r2 = rip_delta(a, 2 * S, cap=cap)
    r3 = rip_delta(a, 3 * S, cap=cap)
    return RecoverabilityCheck(S=S, passed=r2.delta + r3.delta < 1.0,
                               report_2s=r2, report_3s=r3)


def rip_to_omega(delta_2s: float) -> float:
    """Lipschitz constant 1/sqrt(1 - delta_2S) for sets of S-sparse signals."""
    d = float(delta_2s)
    if not (np.isfinite(d) and d >= 0.0):
        raise ParameterError(f"delta must be a nonnegative real, got {delta_2s}")
    if d >= 1.0:
        raise NotApplicableError(
            f"delta_2S = {d:g} >= 1; the sparse-recovery argument needs delta_2S < 1")
    return 1.0 / math.sqrt(1.0 - d)


def sparse_signals(n: int, S: int, count: int, rng) -> np.ndarray:
    """Random S-sparse signals: uniform supports, standard normal values."""
    x = np.zeros((count, n))
    support = np.argsort(rng.random((count, n)), axis=1)[:, :S]
    x[np.arange(count)[:, None], support] = rng.standard_normal((count, S))
    return x


@dataclass(frozen=True)
class SparseLipschitzCheck:
    """Empirical check that sparse pairs obey the derived constant."""

    S: int
    passed: bool
    max_ratio: float
    derived_omega: float
    delta_2s: float
    num_pairs: int
    seed: int


def verify_sparse_lipschitz(operator, S: int, num_pairs: int, seed: int, *,
                            tol_cert: float = TOL_CERT,
                            cap: int = ENUMERATION_CAP) -> SparseLipschitzCheck:
    """Probe |x1 - x2| <= omega |A x1 - A x2| + tol on random S-sparse pairs.

    omega is the exact 1/sqrt(1 - delta_2S); a difference of S-sparse
    signals is 2S-sparse, so no probe can exceed it (the check exists to
    catch implementation faults, not mathematical ones).
    """
    a = _as_matrix_array(operator)
    m, n = a.shape
    if 2 * S > min(m, n):
        raise ParameterError(f"need 2S <= min(M, N) = {min(m, n)}, got S = {S}")
    delta = rip_delta(a, 2 * S, cap=cap).delta
    omega = rip_to_omega(delta)
    rng = seeded_rng(seed)
    x1 = sparse_signals(n, S, num_pairs, rng)
    x2 = sparse_signals(n, S, num_pairs, rng)
    diff = x1 - x2
    dx = np.linalg.norm(diff, axis=1)
    dy = np.linalg.norm(diff @ a.T, axis=1)
    passed = bool(np.all(dx <= omega * dy + tol_cert))
    pos = dy > 0.0
    max_ratio = float((dx[pos] / dy[pos]).max()) if np.any(pos) else 0.0
    return SparseLipschitzCheck(S=S, passed=passed, max_ratio=max_ratio,
                                derived_omega=omega, delta_2s=delta,
                                num_pairs=num_pairs, seed=seed)
