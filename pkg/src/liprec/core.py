"""Shared numeric vocabulary: vectors, labeled signal/observation sets,
Lipschitz certificates, the error taxonomy, and deterministic RNG seeding.

Everything is float64. Containers are frozen dataclasses whose arrays are
marked read-only after construction, so objects may be shared freely across
threads; all operations on them are pure functions of their inputs.

The distance used throughout the package is the Euclidean norm. Default
tolerances:

* ``TOL_EVAL``  (1e-9)  slack when checking that a stored observation really
  is the operator applied to its signal;
* ``TOL_DUP``   (1e-12) radius below which two signals count as duplicates;
* ``TOL_CERT``  (1e-9)  absolute slack in every certification inequality.

All are far above double rounding and far below any experiment's target
precision, and every operation that uses one accepts an override.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Sequence, Tuple

import numpy as np

TOL_EVAL = 1e-9
TOL_DUP = 1e-12
TOL_CERT = 1e-9


# ---------------------------------------------------------------------------
# Error taxonomy
# ---------------------------------------------------------------------------

class LiprecError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(LiprecError):
    """Vector or matrix dimensions do not match."""


class LabelingError(LiprecError):
    """A labeled set fails validation; carries the offending pair index."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class DomainError(LiprecError):
    """Input lies outside an operator's domain."""


class CalibrationError(LiprecError):
    """Normalization was requested without calibration samples."""


class NotInjectiveError(LiprecError):
    """Two distinct signals share an observation; carries their indices."""

    def __init__(self, message: str, pair: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.pair = pair


class DegenerateSetError(LiprecError):
    """The set is too small for the requested operation."""


class DegenerateScaleError(LiprecError):
    """A scale factor of zero would collapse the set."""


class OperatorClassError(LiprecError):
    """The operation requires a different operator class (e.g. linear)."""


class ConstantTooSmallError(LiprecError):
    """A supplied Lipschitz constant is below the tight constant of the data."""


class ParameterError(LiprecError):
    """A numeric parameter is out of range."""


class OutOfBoxError(LiprecError):
    """An observation lies outside the unit hypercube (plus tolerance)."""


class NotLipschitzError(LiprecError):
    """A sample failed certification; carries the violating witness pair."""

    def __init__(self, message: str, witness: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.witness = witness


class RankZeroError(LiprecError):
    """The matrix is identically zero."""


class NoNullSpaceError(LiprecError):
    """The reduced-output construction needs a nontrivial null space (M < N)."""


class TooLargeError(LiprecError):
    """Exhaustive enumeration would exceed the configured cap."""


class NotApplicableError(LiprecError):
    """A derivation's hypothesis fails (e.g. an isometry constant >= 1)."""


# ---------------------------------------------------------------------------
# Vector / matrix coercion
# ---------------------------------------------------------------------------

def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite float64 1-D array of length >= 1."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"{name}: expected a 1-D array of length >= 1, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name}: entries must be finite")
    return v


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.size < 1:
        raise DimensionError(f"{name}: expected a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name}: entries must be finite")
    return m


def readonly(a: np.ndarray) -> np.ndarray:
    """Return a C-contiguous copy with the writeable flag cleared."""
    out = np.array(a, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic generator from an explicit integer seed."""
    if not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {type(seed).__name__}")
    return np.random.default_rng(int(seed))


def distance(a, b) -> float:
    """Euclidean distance between two equal-length vectors."""
    va = as_vector(a, "a")
    vb = as_vector(b, "b")
    if va.shape != vb.shape:
        raise DimensionError(f"length mismatch: {va.shape[0]} vs {vb.shape[0]}")
    return float(np.linalg.norm(va - vb))


# ---------------------------------------------------------------------------
# Labeled data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabeledPair:
    """One signal together with its known observation."""

    signal: np.ndarray
    observation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "signal", readonly(as_vector(self.signal, "signal")))
        object.__setattr__(self, "observation", readonly(as_vector(self.observation, "observation")))


@dataclass(frozen=True)
class LabeledSet:
    """A finite list of (signal, observation) pairs from one operator.

    Stored column-wise as two read-only arrays: ``signals`` with shape
    (count, signal_dim) and ``observations`` with shape (count, obs_dim).
    Duplicate signals (closer than ``TOL_DUP``) are rejected at
    construction unless explicitly waived, e.g. for derived training data
    whose targets may legitimately coincide.
    """

    signals: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        sig = as_matrix(self.signals, "signals")
        obs = as_matrix(self.observations, "observations")
        if sig.shape[0] != obs.shape[0]:
            raise DimensionError(
                f"signal count {sig.shape[0]} != observation count {obs.shape[0]}")
        object.__setattr__(self, "signals", readonly(sig))
        object.__setattr__(self, "observations", readonly(obs))

    @classmethod
    def from_arrays(cls, signals, observations, *, check_duplicates: bool = True,
                    tol_dup: float = TOL_DUP) -> "LabeledSet":
        out = cls(np.atleast_2d(np.asarray(signals, dtype=np.float64)),
                  np.atleast_2d(np.asarray(observations, dtype=np.float64)))
        if check_duplicates:
            dup = out._find_duplicate(tol_dup)
            if dup is not None:
                raise LabelingError(
                    f"duplicate signals at indices {dup[0]} and {dup[1]}", index=dup[1])
        return out

    @classmethod
    def from_pairs(cls, pairs: Sequence[LabeledPair], *, check_duplicates: bool = True,
                   tol_dup: float = TOL_DUP) -> "LabeledSet":
        if len(pairs) == 0:
            raise DegenerateSetError("cannot build a labeled set from zero pairs")
        sig = np.stack([p.signal for p in pairs])
        obs = np.stack([p.observation for p in pairs])
        return cls.from_arrays(sig, obs, check_duplicates=check_duplicates, tol_dup=tol_dup)

    @classmethod
    def from_operator(cls, operator, signals, *, check_duplicates: bool = True,
                      tol_dup: float = TOL_DUP) -> "LabeledSet":
        """Label the given signals by applying the operator to each."""
        sig = np.atleast_2d(np.asarray(signals, dtype=np.float64))
        obs = operator.apply(sig)
        return cls.from_arrays(sig, obs, check_duplicates=check_duplicates, tol_dup=tol_dup)

    def _find_duplicate(self, tol_dup: float) -> Optional[Tuple[int, int]]:
        x = self.signals
        for i in range(len(self) - 1):
            d = np.linalg.norm(x[i + 1:] - x[i], axis=1)
            hits = np.flatnonzero(d < tol_dup)
            if hits.size:
                return i, i + 1 + int(hits[0])
        return None

    @property
    def signal_dim(self) -> int:
        return self.signals.shape[1]

    @property
    def obs_dim(self) -> int:
        return self.observations.shape[1]

    def __len__(self) -> int:
        return self.signals.shape[0]

    def __iter__(self) -> Iterator[LabeledPair]:
        for i in range(len(self)):
            yield LabeledPair(self.signals[i], self.observations[i])

    def pair(self, i: int) -> LabeledPair:
        return LabeledPair(self.signals[i], self.observations[i])

    def subset(self, indices) -> "LabeledSet":
        """Rows selected by index, in the given order (no duplicate re-check)."""
        idx = np.asarray(indices, dtype=int)
        return LabeledSet(self.signals[idx], self.observations[idx])


def validate_labeled_set(labeled_set: LabeledSet, operator, *,
                         tol_eval: float = TOL_EVAL, tol_dup: float = TOL_DUP) -> None:
    """Check that every stored observation matches the operator's output.

    Raises LabelingError (carrying the offending index) if some pair is off
    by more than ``tol_eval`` or two signals are closer than ``tol_dup``.
    """
    if labeled_set.signal_dim != operator.signal_dim or labeled_set.obs_dim != operator.obs_dim:
        raise DimensionError(
            f"set dims ({labeled_set.signal_dim}, {labeled_set.obs_dim}) do not match "
            f"operator dims ({operator.signal_dim}, {operator.obs_dim})")
    expected = operator.apply(labeled_set.signals)
    residual = np.linalg.norm(expected - labeled_set.observations, axis=1)
    bad = np.flatnonzero(residual > tol_eval)
    if bad.size:
        i = int(bad[0])
        raise LabelingError(
            f"pair {i}: observation is off by {residual[i]:.3e} (> {tol_eval:.1e})", index=i)
    dup = labeled_set._find_duplicate(tol_dup)
    if dup is not None:
        raise LabelingError(f"duplicate signals at indices {dup[0]} and {dup[1]}", index=dup[1])


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

Verdict = Literal["certified", "violated"]


@dataclass(frozen=True)
class LipschitzCertificate:
    """Outcome of checking a finite set against a Lipschitz constant.

    ``omega`` is the constant in force (either supplied by the caller or,
    for the tight certificate, the exact maximum pairwise ratio).
    ``witness`` is the index pair attaining ``max_ratio`` (first such pair
    in row-major order); for a violated verdict its ratio exceeds omega.
    """

    omega: float
    verdict: Verdict
    witness: Optional[Tuple[int, int]]
    max_ratio: float

    @property
    def passed(self) -> bool:
        return self.verdict == "certified"
