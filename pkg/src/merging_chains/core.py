"""State spaces, measures, kernels and time-indexed environments.

Measures are plain 1-d float arrays of nonnegative weights (not necessarily
probabilities); kernels are row-stochastic 2-d float arrays.  An
:class:`Environment` bundles one kernel and one invariant measure per time
step ``t = 1..horizon`` and adopts the convention that the measure at time 0
equals the measure at time 1.

An environment is *non-decreasing* when every measure is invariant for its
kernel and the measures grow pointwise with time.  ``validate_environment``
checks both conditions and reports every violation instead of raising.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import json

import numpy as np

from .errors import DomainError, StructuralError

# Default tolerances.  Dense double-precision kernel products over horizons
# up to 1e5 accumulate roundoff of order 1e-12 per step, so row-sum and
# monotonicity slack sit at 1e-12 while invariance (a matrix-vector product)
# gets 1e-10 relative to total mass.
EPS_ROW = 1e-12
EPS_INV = 1e-10
EPS_MONO = 1e-12


@dataclass(frozen=True)
class StateSpace:
    """A finite set of states, optionally labelled."""

    size: int
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.size < 1:
            raise StructuralError("state space must contain at least one state")
        if self.labels is not None:
            if len(self.labels) != self.size:
                raise StructuralError(
                    f"{len(self.labels)} labels for {self.size} states"
                )
            if len(set(self.labels)) != len(self.labels):
                raise StructuralError("state labels must be unique")


def as_measure(weights) -> np.ndarray:
    """Validate and return a measure as a float array.

    Weights must be nonnegative with positive total mass (the all-zero
    measure is rejected).
    """
    pi = np.asarray(weights, dtype=float)
    if pi.ndim != 1:
        raise StructuralError("a measure is a 1-d array of weights")
    if not np.all(np.isfinite(pi)):
        raise DomainError("measure weights must be finite")
    if np.any(pi < 0):
        raise DomainError("measure weights must be nonnegative")
    if pi.sum() <= 0:
        raise DomainError("measure must have positive total mass")
    return pi


def total_mass(pi) -> float:
    return float(np.asarray(pi, dtype=float).sum())


def normalize(pi) -> np.ndarray:
    """Probability view of a measure: pi / pi(V).

    Vectors whose mass is already within EPS_ROW of 1 are returned as-is
    (a copy), which makes normalize exactly idempotent: one division always
    lands within pairwise-summation error of unit mass, far inside EPS_ROW.
    """
    pi = as_measure(pi)
    s = pi.sum()
    if abs(s - 1.0) <= EPS_ROW:
        return pi.copy()
    return pi / s


def as_kernel(matrix, tol: float = EPS_ROW) -> np.ndarray:
    """Validate and return a row-stochastic kernel as a float matrix."""
    K = np.asarray(matrix, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise StructuralError("a kernel is a square matrix")
    if not np.all(np.isfinite(K)):
        raise DomainError("kernel entries must be finite")
    if np.any(K < -tol) or np.any(K > 1 + tol):
        raise DomainError("kernel entries must lie in [0, 1]")
    rows = K.sum(axis=1)
    worst = np.abs(rows - 1.0).max()
    if worst > max(tol, K.shape[0] * 8 * np.finfo(float).eps):
        raise DomainError(f"kernel rows must sum to 1 (worst defect {worst:.3e})")
    return K


def is_invariant(K, pi, tol: float = EPS_INV) -> bool:
    """Whether ``pi K = pi`` within ``tol`` relative to the total mass."""
    K = np.asarray(K, dtype=float)
    pi = as_measure(pi)
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != pi.shape[0]:
        raise StructuralError("kernel and measure live on different state spaces")
    defect = np.abs(pi @ K - pi).max()
    return bool(defect <= tol * pi.sum())


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of ``validate_environment``.

    ``violations`` holds tuples ``(check_name, time_index, state_index,
    magnitude)``; ``ok`` is true exactly when the list is empty.
    """

    violations: List[Tuple[str, int, int, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "environment ok"
        lines = [f"{len(self.violations)} violation(s):"]
        for name, t, x, mag in self.violations[:20]:
            lines.append(f"  {name} at t={t}, state={x}: magnitude {mag:.3e}")
        if len(self.violations) > 20:
            lines.append(f"  ... {len(self.violations) - 20} more")
        return "\n".join(lines)


class Environment:
    """Kernels and invariant measures indexed by ``t = 1..horizon``.

    ``kernels`` is either a stacked ``(horizon, n, n)`` array or a callable
    ``t -> (n, n)`` matrix (lazy generators use the callable form so large
    state spaces are never materialised across the whole horizon).
    ``measures`` is always materialised as ``(horizon, n)``: every bound
    needs all total masses anyway.

    Time index 0 is defined by the convention ``measure(0) == measure(1)``.
    """

    def __init__(self, kernels, measures, labels=None, check: bool = True,
                 cache_size: int = 4):
        measures = np.asarray(measures, dtype=float)
        if measures.ndim != 2:
            raise StructuralError("measures must be a (horizon, n) array")
        self._measures = measures
        self.horizon = measures.shape[0]
        self.n_states = measures.shape[1]
        if self.horizon < 1:
            raise StructuralError("horizon must be at least 1")
        self.space = StateSpace(self.n_states, labels)

        if callable(kernels):
            self._kernel_fn: Optional[Callable[[int], np.ndarray]] = kernels
            self._kernels = None
        else:
            kernels = np.asarray(kernels, dtype=float)
            if kernels.shape != (self.horizon, self.n_states, self.n_states):
                raise StructuralError(
                    f"kernels shape {kernels.shape} does not match "
                    f"(horizon={self.horizon}, n={self.n_states})"
                )
            self._kernel_fn = None
            self._kernels = kernels
        self._cache: "dict[int, np.ndarray]" = {}
        self._cache_size = cache_size

        if check:
            for t in (1, self.horizon):
                as_kernel(self.kernel(t))
            for t in range(1, self.horizon + 1):
                as_measure(self._measures[t - 1])

    def _check_t(self, t: int, lowest: int):
        if not lowest <= t <= self.horizon:
            raise DomainError(
                f"time index {t} outside [{lowest}, {self.horizon}]"
            )

    def kernel(self, t: int) -> np.ndarray:
        """Transition kernel applied between times t-1 and t (t in 1..horizon)."""
        self._check_t(t, 1)
        if self._kernels is not None:
            return self._kernels[t - 1]
        if t in self._cache:
            return self._cache[t]
        K = np.asarray(self._kernel_fn(t), dtype=float)
        if len(self._cache) >= self._cache_size:
            self._cache.pop(next(iter(self._cache)))
        self._cache[t] = K
        return K

    def measure(self, t: int) -> np.ndarray:
        """Invariant measure at time t (t in 0..horizon; measure(0) = measure(1))."""
        self._check_t(t, 0)
        return self._measures[max(t, 1) - 1]

    def probability(self, t: int) -> np.ndarray:
        pi = self.measure(t)
        return pi / pi.sum()

    def mass(self, t: int) -> float:
        return float(self.measure(t).sum())

    @property
    def masses(self) -> np.ndarray:
        """Total masses pi_t(V) for t = 1..horizon."""
        return self._measures.sum(axis=1)

    def materialize(self) -> "Environment":
        """Explicit copy with all kernels stored as one stacked array."""
        if self._kernels is not None:
            return self
        kernels = np.stack([self.kernel(t) for t in range(1, self.horizon + 1)])
        return Environment(kernels, self._measures, self.space.labels, check=False)

    def truncated(self, horizon: int) -> "Environment":
        """Same environment up to a shorter horizon."""
        self._check_t(horizon, 1)
        if self._kernels is not None:
            return Environment(self._kernels[:horizon], self._measures[:horizon],
                               self.space.labels, check=False)
        return Environment(self._kernel_fn, self._measures[:horizon],
                           self.space.labels, check=False)


def validate_environment(env: Environment, eps_row: float = EPS_ROW,
                         eps_inv: float = EPS_INV,
                         eps_mono: float = EPS_MONO) -> ValidationReport:
    """Check invariance and pointwise monotonicity step by step.

    Every failure becomes a report entry ``(check, t, state, magnitude)``
    rather than an exception; kernels are materialised one at a time.
    """
    violations: List[Tuple[str, int, int, float]] = []
    for t in range(1, env.horizon + 1):
        K = env.kernel(t)
        pi = env.measure(t)
        rows = K.sum(axis=1)
        bad = np.nonzero(np.abs(rows - 1.0) > eps_row)[0]
        for x in bad:
            violations.append(("row-sum", t, int(x), float(abs(rows[x] - 1.0))))
        defect = np.abs(pi @ K - pi)
        limit = eps_inv * pi.sum()
        bad = np.nonzero(defect > limit)[0]
        for x in bad:
            violations.append(("invariance", t, int(x), float(defect[x])))
        if t < env.horizon:
            drop = env.measure(t) - env.measure(t + 1)
            bad = np.nonzero(drop > eps_mono)[0]
            for x in bad:
                violations.append(("monotonicity", t, int(x), float(drop[x])))
    return ValidationReport(violations)


def save_environment(env: Environment, path) -> None:
    """Write an environment as a JSON document.

    Layout: ``horizon``, per-step dense kernel matrices in row-major order
    and per-step measure vectors.  Floats are emitted with shortest
    round-trip repr, so load(save(env)) is bit-exact for finite doubles.
    """
    env = env.materialize()
    doc = {
        "horizon": env.horizon,
        "n_states": env.n_states,
        "labels": list(env.space.labels) if env.space.labels else None,
        "kernels": [env.kernel(t).tolist() for t in range(1, env.horizon + 1)],
        "measures": [env.measure(t).tolist() for t in range(1, env.horizon + 1)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_environment(path, check: bool = True) -> Environment:
    with open(path) as fh:
        doc = json.load(fh)
    for key in ("horizon", "kernels", "measures"):
        if key not in doc:
            raise StructuralError(f"environment file is missing field {key!r}")
    kernels = np.asarray(doc["kernels"], dtype=float)
    measures = np.asarray(doc["measures"], dtype=float)
    if kernels.shape[0] != doc["horizon"] or measures.shape[0] != doc["horizon"]:
        raise StructuralError("horizon field disagrees with per-step data")
    labels = tuple(doc["labels"]) if doc.get("labels") else None
    return Environment(kernels, measures, labels, check=check)


def constant_environment(K, pi, horizon: int, check: bool = True) -> Environment:
    """The homogeneous environment repeating one (kernel, measure) pair."""
    K = as_kernel(K)
    pi = as_measure(pi)
    kernels = np.broadcast_to(K, (horizon,) + K.shape).copy()
    measures = np.broadcast_to(pi, (horizon, pi.shape[0])).copy()
    return Environment(kernels, measures, check=check)
