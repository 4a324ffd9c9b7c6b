"""Electrical-network construction of kernels and environments.

A conductance matrix is a symmetric nonnegative matrix of edge weights
(diagonal entries are self-loops, which some examples need).  The induced
walk moves proportionally to edge weight and the row sums give a reversible
invariant measure, so a schedule of pointwise non-decreasing conductances
yields a non-decreasing environment for free.

Schedules describe each edge by an expression id and parameters:

``constant``        value
``linear-capped``   min(max(start + slope*t, floor), cap)   (floor optional)
``power-law``       min(coeff * t**exponent, cap)           (cap optional)
``custom-table``    values[t-1]

Generators cover a ring (``stick``), the two-state chain with growing
self-loops (no merging), a convex interpolation between two simple random
walks, a birth-death chain with extra hub edges, the d-dimensional torus and
the hypercube.  All of them lazify the conductance walk with weight ``a``
(default 1/2), which preserves the invariant measures.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import Environment, as_measure
from .errors import (DomainError, HypothesisViolationError, ResourceLimitError,
                     StructuralError)

EXPRESSION_IDS = ("constant", "linear-capped", "power-law", "custom-table")


def check_conductances(c) -> np.ndarray:
    """Validate a conductance matrix: symmetric, nonnegative, no dead state."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise StructuralError("conductances form a square matrix")
    if not np.all(np.isfinite(c)):
        raise DomainError("conductances must be finite")
    if np.any(c < 0):
        raise DomainError("conductances must be nonnegative")
    if not np.array_equal(c, c.T):
        raise DomainError("conductances must be exactly symmetric")
    if np.any(c.sum(axis=1) <= 0):
        dead = int(np.nonzero(c.sum(axis=1) <= 0)[0][0])
        raise DomainError(f"state {dead} has zero total conductance")
    return c


def kernel_from_conductances(c) -> Tuple[np.ndarray, np.ndarray]:
    """Walk kernel and invariant measure of an electrical network.

    P(x, y) = c(x, y) / sum_z c(x, z) and pi(x) = sum_z c(x, z); P is
    reversible with respect to pi.  Scaling c leaves P unchanged and scales
    pi by the same factor.
    """
    c = check_conductances(c)
    pi = c.sum(axis=1)
    return c / pi[:, None], pi


def lazify(K, a: float = 0.5) -> np.ndarray:
    """Mix a kernel with the identity: (1-a) I + a K.

    Any invariant measure of K stays invariant.  a = 1 returns K itself.
    """
    if not 0 < a <= 1:
        raise DomainError("laziness weight must lie in (0, 1]")
    K = np.asarray(K, dtype=float)
    out = a * K
    idx = np.arange(K.shape[0])
    out[idx, idx] += 1 - a
    return out


def _connected(c) -> bool:
    off = np.asarray(c, dtype=float).copy()
    np.fill_diagonal(off, 0.0)
    n_comp, _ = connected_components(csr_matrix(off > 0), directed=False)
    return n_comp == 1


class ConductanceSchedule:
    """t -> conductance matrix, for t in 1..horizon.

    When ``monotone`` is set, pointwise monotonicity of every edge is
    verified step by step at construction (the merging theorems are vacuous
    without it).
    """

    def __init__(self, n: int, horizon: int, fn: Callable[[int], np.ndarray],
                 monotone: bool = False, validate: bool = True):
        if horizon < 1:
            raise StructuralError("schedule horizon must be at least 1")
        self.n = n
        self.horizon = horizon
        self._fn = fn
        self.monotone = monotone
        if validate:
            prev = check_conductances(self.at(1))
            if monotone:
                for t in range(2, horizon + 1):
                    cur = self.at(t)
                    drop = prev - cur
                    if np.any(drop > 1e-12):
                        x, y = np.unravel_index(int(np.argmax(drop)), drop.shape)
                        raise DomainError(
                            f"schedule not monotone: edge ({x},{y}) drops by "
                            f"{drop[x, y]:.3e} between t={t-1} and t={t}"
                        )
                    prev = cur

    def at(self, t: int) -> np.ndarray:
        if not 1 <= t <= self.horizon:
            raise DomainError(f"schedule time {t} outside [1, {self.horizon}]")
        return self._fn(t)


def _edge_values(kind: str, params: Dict, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if kind == "constant":
        return np.broadcast_to(float(params["value"]), t.shape).copy()
    if kind == "linear-capped":
        v = params["start"] + params["slope"] * t
        if params.get("floor") is not None:
            v = np.maximum(v, params["floor"])
        return np.minimum(v, params["cap"])
    if kind == "power-law":
        v = params["coeff"] * t ** params["exponent"]
        if params.get("cap") is not None:
            v = np.minimum(v, params["cap"])
        return v
    if kind == "custom-table":
        values = np.asarray(params["values"], dtype=float)
        return values[np.asarray(t, dtype=int) - 1]
    raise DomainError(f"unknown expression id {kind!r}; expected one of "
                      f"{EXPRESSION_IDS}")


def schedule_from_edges(n: int, edges: Sequence[Tuple[int, int, str, Dict]],
                        horizon: int, monotone: bool = False,
                        validate: bool = True) -> ConductanceSchedule:
    """Build a schedule from per-edge expressions (x, y, expression-id, params)."""
    edges = list(edges)
    if not edges:
        raise StructuralError("schedule needs at least one edge")
    xs = np.array([e[0] for e in edges], dtype=int)
    ys = np.array([e[1] for e in edges], dtype=int)
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= n or ys.max() >= n:
        raise StructuralError("edge endpoint outside the state space")

    def fn(t: int) -> np.ndarray:
        c = np.zeros((n, n))
        for (x, y, kind, params) in edges:
            v = float(_edge_values(kind, params, t))
            c[x, y] += v
            if x != y:
                c[y, x] += v
        return c

    return ConductanceSchedule(n, horizon, fn, monotone, validate)


def constant_schedule(c, horizon: int) -> ConductanceSchedule:
    c = check_conductances(c)
    return ConductanceSchedule(c.shape[0], horizon, lambda t: c,
                               monotone=True, validate=False)


def random_monotone_schedule(n: int, edge_list: Sequence[Tuple[int, int]],
                             horizon: int, rng: np.random.Generator,
                             c_min: float = 1.0, c_max: float = 3.0,
                             validate: bool = True) -> ConductanceSchedule:
    """Random non-decreasing schedule: one delayed linear ramp per edge.

    Each edge ramps from a random start value to a random end value inside
    [c_min, c_max], starting at a random time with a random duration, so the
    family covers flat, early-saturating and late-moving schedules.
    """
    edges = []
    for (x, y) in edge_list:
        start = rng.uniform(c_min, c_max)
        end = rng.uniform(start, c_max)
        t0 = rng.integers(1, horizon + 1)
        length = rng.integers(1, horizon + 1)
        slope = (end - start) / length
        edges.append((x, y, "linear-capped",
                      {"start": start - slope * t0, "slope": slope,
                       "floor": start, "cap": end}))
    return schedule_from_edges(n, edges, horizon, monotone=True,
                               validate=validate)


def environment_from_schedule(schedule: ConductanceSchedule,
                              laziness: float = 0.5, scale: float = 1.0,
                              materialize: Optional[bool] = None,
                              labels=None) -> Environment:
    """Lazified conductance walk per step; measures are scaled row sums.

    Scaling conductances leaves the kernels untouched, so ``scale`` only
    rescales the invariant measures (used by the torus/hypercube mass
    normalizations).  Small problems are materialised; large ones keep a
    kernel factory so the full horizon never sits in memory at once.
    """
    if scale <= 0:
        raise DomainError("conductance scale must be positive")
    T, n = schedule.horizon, schedule.n
    measures = np.empty((T, n))
    for t in range(1, T + 1):
        measures[t - 1] = schedule.at(t).sum(axis=1) * scale

    def kernel(t: int) -> np.ndarray:
        P, _ = kernel_from_conductances(schedule.at(t))
        return lazify(P, laziness)

    if materialize is None:
        materialize = T * n * n <= 2_000_000
    if materialize:
        kernels = np.stack([kernel(t) for t in range(1, T + 1)])
        return Environment(kernels, measures, labels, check=False)
    return Environment(kernel, measures, labels, check=False)


# ---------------------------------------------------------------------------
# Edge sets of the example graphs


def cycle_edges(N: int) -> List[Tuple[int, int]]:
    if N < 2:
        raise DomainError("a cycle needs at least 2 states")
    edges = sorted({tuple(sorted((x, (x + 1) % N))) for x in range(N)})
    return [tuple(e) for e in edges]


def path_edges(L: int) -> List[Tuple[int, int]]:
    """Nearest-neighbour edges of the path 0..L (reflecting truncation)."""
    return [(x, x + 1) for x in range(L)]


def torus_edges(N: int, d: int) -> List[Tuple[int, int]]:
    if N < 2 or d < 1:
        raise DomainError("torus needs N >= 2 and d >= 1")
    shape = (N,) * d
    edges = set()
    for flat in range(N ** d):
        x = np.unravel_index(flat, shape)
        for i in range(d):
            y = list(x)
            y[i] = (y[i] + 1) % N
            other = int(np.ravel_multi_index(tuple(y), shape))
            if other != flat:
                edges.add(tuple(sorted((flat, other))))
    return sorted(edges)


def hypercube_edges(N: int) -> List[Tuple[int, int]]:
    if N < 1:
        raise DomainError("hypercube dimension must be at least 1")
    edges = set()
    for x in range(2 ** N):
        for i in range(N):
            y = x ^ (1 << i)
            edges.add(tuple(sorted((x, y))))
    return sorted(edges)


def _check_support(schedule: ConductanceSchedule, allowed: np.ndarray,
                   what: str):
    c = schedule.at(1)
    stray = (c > 0) & ~allowed
    if np.any(stray):
        x, y = map(int, np.argwhere(stray)[0])
        raise DomainError(f"schedule has support off the {what}: edge ({x},{y})")


def _check_at_least_one(schedule: ConductanceSchedule, edge_list, minimum=1.0):
    c = schedule.at(1)
    for (x, y) in edge_list:
        if c[x, y] < minimum - 1e-12:
            raise DomainError(
                f"conductance on edge ({x},{y}) is {c[x, y]:.6g} < {minimum} at t=1"
            )


def gen_stick(N: int, schedule: ConductanceSchedule,
              laziness: float = 0.5) -> Environment:
    """Lazy walk on the ring Z/NZ with non-decreasing edge conductances.

    Requires support on the ring (self-loops allowed), a monotone schedule
    and conductance >= 1 on every ring edge.
    """
    if schedule.n != N:
        raise StructuralError("schedule size differs from N")
    if not schedule.monotone:
        raise DomainError("stick schedules must be flagged monotone")
    ring = cycle_edges(N)
    allowed = np.eye(N, dtype=bool)
    for (x, y) in ring:
        allowed[x, y] = allowed[y, x] = True
    _check_support(schedule, allowed, "ring")
    _check_at_least_one(schedule, ring)
    return environment_from_schedule(schedule, laziness)


def gen_two_state_no_merging(epsilon: float, horizon: int,
                             laziness: float = 0.5) -> Environment:
    """Two states with self-loop conductances t^(1+eps) and a unit edge.

    The conductance walk has P_t(0,0) = P_t(1,1) = t^(1+eps)/(t^(1+eps)+1)
    and pi_t(0) = pi_t(1) = t^(1+eps) + 1.  The environment applies the
    lazified kernels (weight ``laziness``); with the default 1/2 the exact
    distance between the two starting points is the stay-probability product
    prod_s (1 - 1/(s^(1+eps)+1)), which stays bounded away from zero: the
    chain never merges.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    edges = [
        (0, 0, "power-law", {"coeff": 1.0, "exponent": 1.0 + epsilon}),
        (1, 1, "power-law", {"coeff": 1.0, "exponent": 1.0 + epsilon}),
        (0, 1, "constant", {"value": 1.0}),
    ]
    schedule = schedule_from_edges(2, edges, horizon, monotone=True,
                                   validate=False)
    return environment_from_schedule(schedule, laziness)


def gen_interpolation(c1, c2, horizon: int, laziness: float = 0.5) -> Environment:
    """Convex interpolation c_t = (1/t) c1 + (1 - 1/t) c2 of two walks.

    Both conductance graphs must be connected, and the second walk's degree
    measure must dominate the first pointwise (nu2 >= nu1); then
    pi_t(x) = nu2(x) + (nu1(x) - nu2(x))/t is non-decreasing in t.
    """
    c1 = check_conductances(c1)
    c2 = check_conductances(c2)
    if c1.shape != c2.shape:
        raise StructuralError("the two conductance sets differ in size")
    for name, c in (("first", c1), ("second", c2)):
        if not _connected(c):
            raise DomainError(f"the {name} conductance graph is not connected")
    nu1 = c1.sum(axis=1)
    nu2 = c2.sum(axis=1)
    bad = np.nonzero(nu2 < nu1 - 1e-12)[0]
    if bad.size:
        x = int(bad[0])
        raise HypothesisViolationError(
            f"monotonicity hypothesis fails at state {x}: "
            f"nu2({x}) = {nu2[x]:.6g} < nu1({x}) = {nu1[x]:.6g}",
            witness=x,
        )

    n = c1.shape[0]
    schedule = ConductanceSchedule(
        n, horizon, lambda t: c1 / t + (1 - 1 / t) * c2,
        monotone=False, validate=False,
    )
    return environment_from_schedule(schedule, laziness)


def gen_birth_death_hub(base_c, xs: Sequence[int], ws: Sequence[float],
                        horizon: Optional[int] = None,
                        laziness: float = 0.5) -> Environment:
    """Birth-death chain on 0..L gaining hub edges {0, x_t} over time.

    ``base_c`` holds the conductances of the base chain on the truncated
    path (nearest-neighbour support plus optional existing hub edges from 0
    and self-loops).  It is rescaled so that its row sums form the base
    invariant probability u, which must peak at the hub: u(0) = max u.  At
    step t the edge {0, x_t} gains weight u(x_t) * w_t; all other edges stay
    put, so the measures are non-decreasing.
    """
    base_c = check_conductances(base_c)
    n = base_c.shape[0]
    support_ok = np.zeros((n, n), dtype=bool)
    idx = np.arange(n)
    support_ok[idx, idx] = True
    support_ok[idx[:-1], idx[:-1] + 1] = True
    support_ok[idx[:-1] + 1, idx[:-1]] = True
    support_ok[0, :] = True
    support_ok[:, 0] = True
    if np.any((base_c > 0) & ~support_ok):
        x, y = map(int, np.argwhere((base_c > 0) & ~support_ok)[0])
        raise DomainError(f"base conductances have support off the path/hub: "
                          f"edge ({x},{y})")
    if not _connected(base_c):
        raise DomainError("base chain is not irreducible on the truncation")

    base_c = base_c / base_c.sum()
    u = base_c.sum(axis=1)
    if u[0] < u.max() - 1e-12:
        raise HypothesisViolationError(
            f"hub hypothesis fails: u(0) = {u[0]:.6g} < max u = {u.max():.6g} "
            f"at state {int(np.argmax(u))}",
            witness=int(np.argmax(u)),
        )

    xs = np.asarray(xs, dtype=int)
    ws = np.asarray(ws, dtype=float)
    if xs.shape != ws.shape:
        raise StructuralError("xs and ws must have equal length")
    if np.any(ws < 0):
        raise DomainError("hub weights must be nonnegative")
    if xs.size and (xs.min() < 1 or xs.max() >= n):
        raise DomainError("hub targets must lie in 1..L")
    if horizon is None:
        horizon = len(xs)
    if horizon > len(xs):
        raise StructuralError("horizon exceeds the number of hub additions")

    # cumulative per-target added weight, shape (targets, horizon+1)
    targets = np.unique(xs) if xs.size else np.empty(0, dtype=int)
    added = np.zeros((targets.size, horizon + 1))
    for t in range(1, horizon + 1):
        added[:, t] = added[:, t - 1]
        k = int(np.searchsorted(targets, xs[t - 1]))
        added[k, t] += u[xs[t - 1]] * ws[t - 1]

    def fn(t: int) -> np.ndarray:
        c = base_c.copy()
        for k, x in enumerate(targets):
            c[0, x] += added[k, t]
            c[x, 0] = c[0, x]
        return c

    schedule = ConductanceSchedule(n, horizon, fn, monotone=True,
                                   validate=False)
    return environment_from_schedule(schedule, laziness)


def gen_torus(N: int, d: int, schedule: ConductanceSchedule,
              laziness: float = 0.5, normalize: bool = False,
              state_cap: int = 4096) -> Environment:
    """Lazy walk on (Z/NZ)^d with a monotone nearest-neighbour schedule.

    With ``normalize`` the conductances are divided by (N+1)^d, which is the
    literal mass normalization of the source construction (kept verbatim,
    even though the torus has N^d states); it only rescales the measures.
    """
    n = N ** d
    if n > state_cap:
        raise ResourceLimitError(f"torus has {n} states > cap {state_cap}")
    if schedule.n != n:
        raise StructuralError("schedule size differs from N^d")
    if not schedule.monotone:
        raise DomainError("torus schedules must be flagged monotone")
    edge_list = torus_edges(N, d)
    allowed = np.zeros((n, n), dtype=bool)
    for (x, y) in edge_list:
        allowed[x, y] = allowed[y, x] = True
    _check_support(schedule, allowed, "torus grid")
    _check_at_least_one(schedule, edge_list)
    scale = (N + 1) ** (-d) if normalize else 1.0
    return environment_from_schedule(schedule, laziness, scale=scale)


def gen_hypercube(N: int, schedule: ConductanceSchedule,
                  laziness: float = 0.5, normalize: bool = False,
                  state_cap: int = 4096) -> Environment:
    """Lazy walk on {0,1}^N with a monotone Hamming-edge schedule.

    ``normalize`` divides the measures by 2^N (the total mass of the unit
    reference measure), implemented as a conductance rescaling.
    """
    n = 2 ** N
    if n > state_cap:
        raise ResourceLimitError(f"hypercube has {n} states > cap {state_cap}")
    if schedule.n != n:
        raise StructuralError("schedule size differs from 2^N")
    if not schedule.monotone:
        raise DomainError("hypercube schedules must be flagged monotone")
    edge_list = hypercube_edges(N)
    allowed = np.zeros((n, n), dtype=bool)
    for (x, y) in edge_list:
        allowed[x, y] = allowed[y, x] = True
    _check_support(schedule, allowed, "hypercube")
    _check_at_least_one(schedule, edge_list)
    scale = 2.0 ** (-N) if normalize else 1.0
    return environment_from_schedule(schedule, laziness, scale=scale)
