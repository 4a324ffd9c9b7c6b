"""Merging-bound evaluators, the brute-force oracle, and sweep reports.

Every theorem evaluator computes the literal right-hand side of its bound
from an environment, per-step Poincare constants (exact values or certified
lower bounds -- each formula is monotone in each gamma, so lower bounds keep
the curves sound) and the constants of the relevant functional inequality.
``exact_merging_time`` and ``exact_curves`` evolve Dirac starts step by step
and are the oracle every curve is tested against.

"not-reached" is a first-class outcome, encoded as ``None``: a
non-decreasing environment does not guarantee merging.

The homogeneous baseline curve is evaluated from the time-1 constants; it is
*not* a valid bound for genuinely time-inhomogeneous environments and is
therefore excluded from dominance accounting.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Environment
from .errors import DomainError, HypothesisViolationError, ResourceLimitError
from .functional import separation_distance, tv_distance
from .spectral import NashParams, nash_B

DOMINANCE_SLACK = 1e-9

THEOREM_IDS = ("T1", "T3", "T4-tv", "T4-sep", "T5", "T6")
PAIR_CURVES = ("T1", "T3", "T4-tv", "T5")   # dominate pairwise total variation
MAX_CURVES = ("T4-sep", "T6")               # dominate the max separation row
SOUND_PAIR_CURVES = ("T3", "T4-tv", "T5")   # T1 is a baseline, not a bound here


@dataclass(frozen=True)
class BoundCurve:
    """Values of one theorem's bound per time step (nan where undefined)."""

    theorem_id: str
    values: np.ndarray
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem_id not in THEOREM_IDS:
            raise DomainError(f"unknown theorem id {self.theorem_id!r}")
        finite = self.values[np.isfinite(self.values)]
        if finite.size and finite.min() < 0:
            raise DomainError("bound values must be nonnegative")

    def value(self, t: int) -> float:
        return float(self.values[t - 1])


@dataclass(frozen=True)
class MergingQuery:
    """A pair (or all pairs) with a target eta and a distance."""

    x: Optional[int]
    y: Optional[int]
    eta: float
    distance: str = "tv"

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise DomainError("eta must lie in (0, 1)")
        if self.distance not in ("tv", "separation"):
            raise DomainError("distance must be 'tv' or 'separation'")

    @property
    def all_pairs(self) -> bool:
        return self.x is None or self.y is None


def check_gammas(gammas, horizon: int) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    if g.ndim != 1 or g.shape[0] < horizon:
        raise DomainError(f"need one gamma per step up to t={horizon}")
    if np.any(g < -1e-12) or np.any(g > 1 + 1e-12):
        raise DomainError("gammas must lie in [0, 1]")
    return np.clip(g, 0.0, 1.0)


class _WindowProducts:
    """Products of per-step factors over windows (a, b], robust to zeros."""

    def __init__(self, factors):
        f = np.asarray(factors, dtype=float)
        self._zeros = np.concatenate([[0], np.cumsum(f <= 0.0)])
        with np.errstate(divide="ignore"):
            logs = np.where(f > 0.0, np.log(np.where(f > 0.0, f, 1.0)), 0.0)
        self._logs = np.concatenate([[0.0], np.cumsum(logs)])

    def product(self, a: int, b: int) -> float:
        """prod of factors with step index in (a, b] (1-based steps)."""
        if self._zeros[b] > self._zeros[a]:
            return 0.0
        return float(np.exp(self._logs[b] - self._logs[a]))

    def products_to(self, a_values: np.ndarray, b: int) -> np.ndarray:
        """Vector of products over (a, b] for several left endpoints."""
        out = np.exp(self._logs[b] - self._logs[a_values])
        out[self._zeros[b] > self._zeros[a_values]] = 0.0
        return out


# ---------------------------------------------------------------------------
# Homogeneous baseline


def bound_T1(gamma: float, pi_prob, x: int, y: int, t: int) -> float:
    """(1/2)(pi~(x)^(-1/2) + pi~(y)^(-1/2)) (1-gamma)^(t/2)."""
    if gamma <= 0:
        raise DomainError("the baseline bound is vacuous for gamma <= 0")
    pi_prob = np.asarray(pi_prob, dtype=float)
    pref = 0.5 * (pi_prob[x] ** -0.5 + pi_prob[y] ** -0.5)
    return float(pref * (1.0 - gamma) ** (t / 2.0))


def curve_T1(gamma: float, pi_prob, x: int, y: int, horizon: int) -> BoundCurve:
    ts = np.arange(1, horizon + 1)
    pi_prob = np.asarray(pi_prob, dtype=float)
    pref = 0.5 * (pi_prob[x] ** -0.5 + pi_prob[y] ** -0.5)
    values = pref * (1.0 - gamma) ** (ts / 2.0)
    return BoundCurve("T1", values, {"gamma": gamma, "x": x, "y": y})


# ---------------------------------------------------------------------------
# Poincare route


def bound_T3(env: Environment, gammas, x: int, y: int, t: int) -> float:
    """(1/2) sqrt(pi_t(V)/pi_1(V)) (pi~_1(x)^(-1/2)+pi~_1(y)^(-1/2))
    prod_{s<=t} sqrt(1-gamma_s)."""
    if not 1 <= t <= env.horizon:
        raise DomainError(f"time {t} outside [1, {env.horizon}]")
    g = check_gammas(gammas, t)
    p1 = env.probability(1)
    pref = 0.5 * (p1[x] ** -0.5 + p1[y] ** -0.5)
    ratio = math.sqrt(env.mass(t) / env.mass(1))
    return float(pref * ratio * np.prod(np.sqrt(1.0 - g[:t])))


def curve_T3(env: Environment, gammas, x: int, y: int) -> BoundCurve:
    g = check_gammas(gammas, env.horizon)
    p1 = env.probability(1)
    pref = 0.5 * (p1[x] ** -0.5 + p1[y] ** -0.5)
    masses = env.masses
    values = np.empty(env.horizon)
    running = 1.0
    for t in range(1, env.horizon + 1):
        running *= math.sqrt(1.0 - g[t - 1])
        values[t - 1] = pref * math.sqrt(masses[t - 1] / masses[0]) * running
    return BoundCurve("T3", values, {"x": x, "y": y})


def merging_time_T3(env: Environment, gammas, x: int, y: int,
                    eta: float) -> Optional[int]:
    """Smallest t <= horizon with the Poincare bound at most eta, else None.

    The curve need not be monotone (the mass ratio can grow faster than the
    spectral product decays), so every step is inspected.
    """
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    curve = curve_T3(env, gammas, x, y)
    hits = np.nonzero(curve.values <= eta)[0]
    return int(hits[0] + 1) if hits.size else None


# ---------------------------------------------------------------------------
# Nash route


def _require_unit_initial_mass(env: Environment):
    if env.mass(1) < 1.0 - 1e-12:
        raise HypothesisViolationError(
            f"the Nash/log-Sobolev route needs pi_1(V) >= 1, got {env.mass(1)!r}"
        )


def bound_T4_tv(env: Environment, gammas, nash: NashParams, r: int,
                t: int) -> float:
    """sqrt(pi_t(V) pi_r(V) / pi_1(V)) (4CB/(r+1))^D prod_{l=r+1}^t sqrt(1-gamma_l)."""
    _require_unit_initial_mass(env)
    if not 0 <= r <= t <= env.horizon:
        raise DomainError("need 0 <= r <= t <= horizon")
    if r > nash.T:
        raise DomainError(f"r = {r} exceeds the Nash window T = {nash.T}")
    g = check_gammas(gammas, t)
    B = nash_B(nash)
    amp = (4.0 * nash.C * B / (r + 1.0)) ** nash.D
    pref = math.sqrt(env.mass(t) * env.mass(r) / env.mass(1))
    return float(pref * amp * np.prod(np.sqrt(1.0 - g[r:t])))


def curve_T4_tv(env: Environment, gammas, nash: NashParams) -> BoundCurve:
    """Per t, the best (smallest) Nash TV bound over r in [0, min(t, T)]."""
    _require_unit_initial_mass(env)
    g = check_gammas(gammas, env.horizon)
    windows = _WindowProducts(np.sqrt(1.0 - g))
    B = nash_B(nash)
    masses = env.masses
    mass_of = lambda r: masses[max(r, 1) - 1]
    r_cap = min(env.horizon, nash.T)
    amp = np.array([math.sqrt(mass_of(r)) * (4.0 * nash.C * B / (r + 1.0)) ** nash.D
                    for r in range(r_cap + 1)])
    values = np.empty(env.horizon)
    chosen = np.empty(env.horizon, dtype=int)
    inv_root_m1 = 1.0 / math.sqrt(masses[0])
    for t in range(1, env.horizon + 1):
        rs = np.arange(0, min(t, nash.T) + 1)
        cand = amp[rs] * windows.products_to(rs, t)
        k = int(np.argmin(cand))
        chosen[t - 1] = rs[k]
        values[t - 1] = math.sqrt(masses[t - 1]) * inv_root_m1 * cand[k]
    return BoundCurve("T4-tv", values,
                      {"nash": nash, "r_by_t": chosen})


def merging_time_T4_tv(env: Environment, gammas, nash: NashParams,
                       eta: float) -> Optional[int]:
    """min{t : exists r <= min(t, T) with the Nash TV bound <= eta}."""
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    curve = curve_T4_tv(env, gammas, nash)
    hits = np.nonzero(curve.values <= eta)[0]
    return int(hits[0] + 1) if hits.size else None


def bound_T4_sep(env: Environment, gammas, nash: NashParams, r: int,
                 u: int) -> float:
    """4 pi_t(V) (4CB/(r+1))^(2D) prod_{l=r+1}^{r+u} sqrt(1-gamma_l), t = 2r+u."""
    _require_unit_initial_mass(env)
    t = 2 * r + u
    if r < 0 or u < 0 or t > env.horizon or t < 1:
        raise DomainError("need r, u >= 0 with 1 <= 2r+u <= horizon")
    if r > nash.T:
        raise DomainError(f"r = {r} exceeds the Nash window T = {nash.T}")
    g = check_gammas(gammas, r + u)
    B = nash_B(nash)
    amp = (4.0 * nash.C * B / (r + 1.0)) ** (2.0 * nash.D)
    return float(4.0 * env.mass(t) * amp * np.prod(np.sqrt(1.0 - g[r:r + u])))


def curve_T4_sep(env: Environment, gammas, nash: NashParams) -> BoundCurve:
    """Per t, the best separation bound over decompositions t = 2r + u."""
    _require_unit_initial_mass(env)
    g = check_gammas(gammas, env.horizon)
    windows = _WindowProducts(np.sqrt(1.0 - g))
    B = nash_B(nash)
    masses = env.masses
    values = np.empty(env.horizon)
    chosen = np.empty(env.horizon, dtype=int)
    for t in range(1, env.horizon + 1):
        rs = np.arange(0, min(t // 2, nash.T) + 1)
        amp = (4.0 * nash.C * B / (rs + 1.0)) ** (2.0 * nash.D)
        prods = np.array([windows.product(r, t - r) for r in rs])
        cand = amp * prods
        k = int(np.argmin(cand))
        chosen[t - 1] = rs[k]
        values[t - 1] = 4.0 * masses[t - 1] * cand[k]
    return BoundCurve("T4-sep", values, {"nash": nash, "r_by_t": chosen})


def merging_time_T4_sep(env: Environment, gammas, nash: NashParams,
                        eta: float) -> Optional[int]:
    """min{2r+u : 16 pi_{2r+u}(V) (4CB/(r+1))^(2D) prod <= eta}, eta < 1/2."""
    if not 0 < eta < 0.5:
        raise DomainError("separation merging times need eta in (0, 1/2)")
    _require_unit_initial_mass(env)
    g = check_gammas(gammas, env.horizon)
    windows = _WindowProducts(np.sqrt(1.0 - g))
    B = nash_B(nash)
    masses = env.masses
    for t in range(1, env.horizon + 1):
        rs = np.arange(0, min(t // 2, nash.T) + 1)
        amp = (4.0 * nash.C * B / (rs + 1.0)) ** (2.0 * nash.D)
        prods = np.array([windows.product(r, t - r) for r in rs])
        if np.any(16.0 * masses[t - 1] * amp * prods <= eta):
            return t
    return None


# ---------------------------------------------------------------------------
# Log-Sobolev route


@dataclass(frozen=True)
class LogSobolevSchedule:
    """Exponent growth q_s = 2 prod_{u<=s}(1+alpha_u) and entropy radii.

    ``q[s]`` holds q_s with q[0] = 2; ``r_z`` is the first s with
    log q_s >= log log(1/pi~_0(z)); ``flagged`` marks the degenerate
    convention pi~_0(z) >= 1 (r_z = 1 by fiat).
    """

    q: np.ndarray
    r_x: int
    r_y: int
    flagged: bool = False

    @property
    def r(self) -> int:
        return max(self.r_x, self.r_y)

    def __post_init__(self):
        if self.q[0] != 2.0:
            raise DomainError("exponent schedule must start at q_0 = 2")
        if np.any(np.diff(self.q) < 0):
            raise DomainError("exponent schedule must be non-decreasing")


def _entropy_radius(q: np.ndarray, p_z: float) -> Tuple[int, bool]:
    if p_z >= 1.0:
        return 1, True
    threshold = math.log(1.0 / p_z)
    if threshold <= 1.0:
        # log log (1/p) <= 0 < log q_1
        return 1, False
    target = math.log(threshold)
    hits = np.nonzero(np.log(q[1:]) >= target)[0]
    if not hits.size:
        raise DomainError(
            "alpha schedule too short: q_s never reaches the entropy "
            f"threshold log log(1/pi~_0(z)) = {target:.6g}"
        )
    return int(hits[0] + 1), False


def logsob_schedule(alphas, pi0_prob, x: int, y: int) -> LogSobolevSchedule:
    """Build q_s = 2 prod(1+alpha_u) and the radii r_x, r_y, r = max."""
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas < 0):
        raise DomainError("log-Sobolev constants must be nonnegative")
    pi0_prob = np.asarray(pi0_prob, dtype=float)
    if np.any(pi0_prob <= 0):
        raise DomainError("initial probability must be strictly positive")
    q = 2.0 * np.concatenate([[1.0], np.cumprod(1.0 + alphas)])
    r_x, flag_x = _entropy_radius(q, float(pi0_prob[x]))
    r_y, flag_y = _entropy_radius(q, float(pi0_prob[y]))
    return LogSobolevSchedule(q=q, r_x=r_x, r_y=r_y, flagged=flag_x or flag_y)


def bound_T5(env: Environment, gammas, schedule: LogSobolevSchedule,
             t: int) -> float:
    """e sqrt(pi_t(V)) / pi_0(V)^(1/q_r) prod_{l=r+1}^t sqrt(1-gamma_l), t >= r."""
    r = schedule.r
    if t < r:
        raise DomainError(f"the entropy bound starts at t = r = {r}, got t = {t}")
    if t > env.horizon:
        raise DomainError(f"time {t} beyond horizon {env.horizon}")
    g = check_gammas(gammas, t)
    q_r = float(schedule.q[r])
    pref = math.e * math.sqrt(env.mass(t)) / env.mass(0) ** (1.0 / q_r)
    return float(pref * np.prod(np.sqrt(1.0 - g[r:t])))


def curve_T5(env: Environment, gammas, schedule: LogSobolevSchedule) -> BoundCurve:
    g = check_gammas(gammas, env.horizon)
    r = schedule.r
    values = np.full(env.horizon, np.nan)
    if r <= env.horizon:
        q_r = float(schedule.q[r])
        masses = env.masses
        base = math.e / env.mass(0) ** (1.0 / q_r)
        running = 1.0
        for t in range(r, env.horizon + 1):
            if t > r:
                running *= math.sqrt(1.0 - g[t - 1])
            values[t - 1] = base * math.sqrt(masses[t - 1]) * running
    return BoundCurve("T5", values, {"r": r, "q_r": float(schedule.q[r])})


def merging_time_T5(env: Environment, gammas, schedule: LogSobolevSchedule,
                    eta: float) -> Optional[int]:
    """r + min{u >= 1 : bound at time r+u <= eta}; None when never reached.

    The minimum re-evaluates the Theorem-5 expression at t = r + u, so this
    is the literal first crossing of the curve after r.
    """
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    curve = curve_T5(env, gammas, schedule)
    r = schedule.r
    for t in range(max(r + 1, 1), env.horizon + 1):
        if curve.values[t - 1] <= eta:
            return t
    return None


def t6_radius(alpha: float, rho: float) -> Tuple[int, bool]:
    """r = floor(log(log(1/rho)/2) / log(1+alpha)) + 1, clamped to >= 0.

    The clamp fires when rho > exp(-2) (the inner log is negative); r = 0 is
    sound there since q_0 = 2 already exceeds log(1/rho).
    """
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")
    if alpha <= 0:
        raise DomainError("the uniform log-Sobolev bound must be positive")
    inner = math.log(1.0 / rho) / 2.0
    raw = math.floor(math.log(inner) / math.log(1.0 + alpha)) + 1
    return max(raw, 0), raw < 0


def _check_t6_hypotheses(env: Environment, rho: float, up_to: int):
    _require_unit_initial_mass(env)
    for t in range(1, min(up_to, env.horizon) + 1):
        p = env.probability(t)
        x = int(np.argmin(p))
        if p[x] < rho - 1e-12:
            raise HypothesisViolationError(
                f"min_x pi~_t(x) = {p[x]:.6g} < rho = {rho:.6g} at t={t}",
                witness=(t, x),
            )


def bound_T6(env: Environment, gammas, alpha: float, rho: float, r: int,
             u: int) -> float:
    """e^2 sqrt(pi_t(V) pi_{r+u}(V) prod_{l=r+1}^{r+u} (1-gamma_l)), t = 2r+u."""
    t = 2 * r + u
    if r < 0 or u < 0 or t > env.horizon or t < 1:
        raise DomainError("need r, u >= 0 with 1 <= 2r+u <= horizon")
    _check_t6_hypotheses(env, rho, t)
    g = check_gammas(gammas, r + u)
    inner = env.mass(t) * env.mass(r + u) * np.prod(1.0 - g[r:r + u])
    return float(math.e ** 2 * math.sqrt(inner))


def curve_T6(env: Environment, gammas, alpha: float, rho: float) -> BoundCurve:
    """Values at every t = 2r + u >= max(2r, 1) with r from the rho/alpha radius."""
    r, clamped = t6_radius(alpha, rho)
    _check_t6_hypotheses(env, rho, env.horizon)
    g = check_gammas(gammas, env.horizon)
    windows = _WindowProducts(1.0 - g)
    masses = env.masses
    mass_of = lambda s: masses[max(s, 1) - 1]
    values = np.full(env.horizon, np.nan)
    for t in range(max(2 * r, 1), env.horizon + 1):
        u = t - 2 * r
        inner = masses[t - 1] * mass_of(r + u) * windows.product(r, r + u)
        values[t - 1] = math.e ** 2 * math.sqrt(inner)
    return BoundCurve("T6", values,
                      {"alpha": alpha, "rho": rho, "r": r, "clamped": clamped})


def merging_time_T6(env: Environment, gammas, alpha: float, rho: float,
                    eta: float) -> Optional[int]:
    """2r + min{u >= 0 : 4 e^2 sqrt(pi_{2r+u} pi_{r+u} prod) <= eta}, eta < 1/2."""
    if not 0 < eta < 0.5:
        raise DomainError("separation merging times need eta in (0, 1/2)")
    curve = curve_T6(env, gammas, alpha, rho)
    r = curve.params["r"]
    for t in range(max(2 * r, 1), env.horizon + 1):
        if 4.0 * curve.values[t - 1] <= eta:
            return t
    return None


# ---------------------------------------------------------------------------
# Exact oracle


def exact_merging_time(env: Environment, x: int, y: int, eta: float,
                       distance: str = "tv") -> Optional[int]:
    """First t with d(mu_t^x, mu_t^y) <= eta by brute-force evolution.

    ``distance`` is "tv" or "separation" (the latter taken literally as
    s(mu^x, mu^y), which is asymmetric).  Returns None when the horizon is
    exhausted: merging is not guaranteed.
    """
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    n = env.n_states
    mu = np.zeros(n)
    nu = np.zeros(n)
    mu[x] = 1.0
    nu[y] = 1.0
    for t in range(1, env.horizon + 1):
        K = env.kernel(t)
        mu = mu @ K
        nu = nu @ K
        d = tv_distance(mu, nu) if distance == "tv" else \
            separation_distance(mu, nu)
        if d <= eta:
            return t
    return None


@dataclass(frozen=True)
class ExactCurves:
    """Exact distances per time step from the running kernel product.

    ``tv``/``sep`` are (pairs, horizon) arrays; ``max_sep`` is the
    separation of every Dirac start against the chain started from pi~_1,
    maximised over starts; ``rel_ref`` and ``rel_pairs`` are the relative
    sup distances used by the 4-eta separation lemma (``rel_pairs`` is only
    evaluated where rel_ref <= 1/2 and is nan elsewhere).
    """

    pairs: List[Tuple[int, int]]
    tv: np.ndarray
    sep: np.ndarray
    max_sep: np.ndarray
    rel_ref: np.ndarray
    rel_pairs: np.ndarray


def exact_curves(env: Environment, pairs: Sequence[Tuple[int, int]],
                 pair_cap: int = 10000) -> ExactCurves:
    """Evolve all Dirac starts at once and record every exact distance."""
    pairs = [tuple(p) for p in pairs]
    if len(pairs) > pair_cap:
        raise ResourceLimitError(f"{len(pairs)} pairs exceed cap {pair_cap}")
    n, T = env.n_states, env.horizon
    P = len(pairs)
    tv = np.empty((P, T))
    sep = np.empty((P, T))
    max_sep = np.empty(T)
    rel_ref = np.empty(T)
    rel_pairs = np.full(T, np.nan)
    left = np.eye(n)
    ref0 = env.probability(1)
    for t in range(1, T + 1):
        left = left @ env.kernel(t)
        ref = ref0 @ left
        for k, (x, y) in enumerate(pairs):
            tv[k, t - 1] = tv_distance(left[x], left[y])
            sep[k, t - 1] = separation_distance(left[x], left[y])
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = left / ref[None, :]
        # zero-reference convention mirrors separation_distance: ratio 0
        # where the start mass is positive, 1 where both vanish
        pos = ref > 0
        ratios = np.where(pos[None, :], raw, np.where(left > 0, 0.0, 1.0))
        max_sep[t - 1] = (1.0 - ratios).max()
        rel_ref[t - 1] = np.abs(ratios - 1.0).max()
        if rel_ref[t - 1] <= 0.5:
            cols_max = left.max(axis=0)
            cols_min = left.min(axis=0)
            rel_pairs[t - 1] = (cols_max / cols_min - 1.0).max()
    return ExactCurves(pairs=pairs, tv=tv, sep=sep, max_sep=max_sep,
                       rel_ref=rel_ref, rel_pairs=rel_pairs)


# ---------------------------------------------------------------------------
# Sweep report


CSV_COLUMNS = ("t", "pair-id", "exact-tv", "exact-sep", "T1", "T3", "T4-tv",
               "T4-sep", "T5", "T6", "dominance-margin-min")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and not np.isfinite(v):
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


@dataclass
class ExperimentReport:
    """Exact curves next to every requested bound curve, with margins.

    Pair rows carry the pairwise distances and the total-variation bounds;
    the synthetic "max" row carries max_x s(mu_t^x, mu_t^{pi~_1}) and the
    separation bounds.  ``dominance_min`` is the smallest bound-minus-exact
    margin across sound curves (T1 is a homogeneous baseline and excluded).
    """

    horizon: int
    exact: ExactCurves
    pair_curves: Dict[str, np.ndarray]  # id -> (pairs, T) values
    max_curves: Dict[str, np.ndarray]   # id -> (T,) values
    crossings: Dict
    params: Dict

    @property
    def pair_ids(self) -> List[str]:
        return [f"{x}-{y}" for (x, y) in self.exact.pairs]

    def margins(self) -> Dict[str, np.ndarray]:
        """Bound minus exact, per sound curve (nan where a curve is undefined)."""
        out = {}
        for tid, vals in self.pair_curves.items():
            if tid in SOUND_PAIR_CURVES:
                out[tid] = vals - self.exact.tv
        for tid, vals in self.max_curves.items():
            out[tid] = vals - self.exact.max_sep
        return out

    @property
    def dominance_min(self) -> float:
        candidates = [np.nanmin(m) for m in self.margins().values()
                      if np.any(np.isfinite(m))]
        return float(min(candidates)) if candidates else math.inf

    @property
    def dominance_ok(self) -> bool:
        return self.dominance_min >= -DOMINANCE_SLACK

    def _row_margin(self, values: List[Optional[float]], exact: float):
        margins = [v - exact for v in values if v is not None and np.isfinite(v)]
        return min(margins) if margins else None

    def to_csv(self, path) -> None:
        """Stable-order CSV; floats use shortest round-trip repr."""
        lines = [",".join(CSV_COLUMNS)]
        P = len(self.exact.pairs)
        for t in range(1, self.horizon + 1):
            i = t - 1
            for k in range(P):
                cells = [str(t), self.pair_ids[k],
                         _fmt(float(self.exact.tv[k, i])),
                         _fmt(float(self.exact.sep[k, i]))]
                sound = []
                for tid in ("T1", "T3", "T4-tv"):
                    v = self.pair_curves.get(tid)
                    val = float(v[k, i]) if v is not None else None
                    cells.append(_fmt(val))
                    if tid != "T1" and val is not None:
                        sound.append(val)
                cells.append("")  # T4-sep lives on the max row
                v = self.pair_curves.get("T5")
                val = float(v[k, i]) if v is not None else None
                cells.append(_fmt(val))
                if val is not None and np.isfinite(val):
                    sound.append(val)
                cells.append("")  # T6 lives on the max row
                margin = self._row_margin(sound, float(self.exact.tv[k, i]))
                cells.append(_fmt(margin))
                lines.append(",".join(cells))
            cells = [str(t), "max", "", _fmt(float(self.exact.max_sep[i])),
                     "", "", ""]
            sound = []
            for tid in ("T4-sep",):
                v = self.max_curves.get(tid)
                val = float(v[i]) if v is not None else None
                cells.append(_fmt(val))
                if val is not None and np.isfinite(val):
                    sound.append(val)
            cells.append("")  # T5
            v = self.max_curves.get("T6")
            val = float(v[i]) if v is not None else None
            cells.append(_fmt(val))
            if val is not None and np.isfinite(val):
                sound.append(val)
            margin = self._row_margin(sound, float(self.exact.max_sep[i]))
            cells.append(_fmt(margin))
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w", newline="") as fh:
                fh.write(text)

    def summary(self) -> Dict:
        return {
            "horizon": self.horizon,
            "pairs": self.pair_ids,
            "theorems": sorted(list(self.pair_curves) + list(self.max_curves)),
            "crossings": self.crossings,
            "dominance": {"min_margin": self.dominance_min,
                          "ok": self.dominance_ok,
                          "slack": DOMINANCE_SLACK},
            "params": self.params,
        }

    def to_json(self, path) -> None:
        text = json.dumps(self.summary(), sort_keys=True, indent=2,
                          default=_json_default)
        if hasattr(path, "write"):
            path.write(text + "\n")
        else:
            with open(path, "w") as fh:
                fh.write(text + "\n")

    def write_plot_data(self, directory) -> None:
        """Two-column (t, value) files per curve, consumable by any plotter."""
        import os

        os.makedirs(directory, exist_ok=True)
        ts = np.arange(1, self.horizon + 1)

        def dump(name, values):
            with open(os.path.join(directory, name), "w") as fh:
                for t, v in zip(ts, values):
                    if np.isfinite(v):
                        fh.write(f"{t} {v!r}\n")

        for k, pid in enumerate(self.pair_ids):
            dump(f"pair-{pid}-exact-tv.dat", self.exact.tv[k])
            dump(f"pair-{pid}-exact-sep.dat", self.exact.sep[k])
            for tid, vals in self.pair_curves.items():
                dump(f"pair-{pid}-{tid}.dat", vals[k])
        dump("max-exact-sep.dat", self.exact.max_sep)
        for tid, vals in self.max_curves.items():
            dump(f"max-{tid}.dat", vals)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, NashParams):
        return {"C": obj.C, "D": obj.D, "T": obj.T, "fitted": obj.fitted}
    raise TypeError(f"not JSON-serialisable: {type(obj)}")


def _first_crossing(values: np.ndarray, eta: float) -> Optional[int]:
    with np.errstate(invalid="ignore"):
        hits = np.nonzero(values <= eta)[0]
    return int(hits[0] + 1) if hits.size else None


def bound_vs_exact_sweep(env: Environment, pairs: Sequence[Tuple[int, int]],
                         etas: Sequence[float], theorems: Sequence[str],
                         gammas, nash: Optional[NashParams] = None,
                         alphas=None, alpha_uniform: Optional[float] = None,
                         rho: Optional[float] = None, seed: int = 0,
                         extra_params: Optional[Dict] = None) -> ExperimentReport:
    """Exact distances and every requested bound curve, plus crossing times.

    ``gammas`` feed every curve; T4 needs ``nash``, T5 needs per-step
    ``alphas``, T6 needs ``alpha_uniform`` (rho defaults to the exact
    minimum of pi~_t over the horizon).  Crossing times use each theorem's
    merging-time form (the 16- and 4e^2-displays for the separation
    routes).
    """
    theorems = list(theorems)
    for tid in theorems:
        if tid not in THEOREM_IDS:
            raise DomainError(f"unknown theorem id {tid!r}")
    gammas = check_gammas(gammas, env.horizon)
    exact = exact_curves(env, pairs)
    pair_curves: Dict[str, np.ndarray] = {}
    max_curves: Dict[str, np.ndarray] = {}
    params: Dict = {"seed": seed, "gammas": "supplied"}
    if extra_params:
        params.update(extra_params)

    if "T1" in theorems:
        pi1 = env.probability(1)
        gamma1 = float(gammas[0])
        if gamma1 > 0:
            pair_curves["T1"] = np.vstack(
                [curve_T1(gamma1, pi1, x, y, env.horizon).values
                 for (x, y) in exact.pairs])
            params["T1-gamma"] = gamma1
    if "T3" in theorems:
        pair_curves["T3"] = np.vstack(
            [curve_T3(env, gammas, x, y).values for (x, y) in exact.pairs])
    if "T4-tv" in theorems:
        if nash is None:
            raise DomainError("T4 curves need Nash parameters")
        c = curve_T4_tv(env, gammas, nash)
        pair_curves["T4-tv"] = np.broadcast_to(
            c.values, (len(exact.pairs), env.horizon)).copy()
        params["nash"] = nash
    if "T4-sep" in theorems:
        if nash is None:
            raise DomainError("T4 curves need Nash parameters")
        max_curves["T4-sep"] = curve_T4_sep(env, gammas, nash).values
        params["nash"] = nash
    if "T5" in theorems:
        if alphas is None:
            raise DomainError("the T5 curve needs per-step alphas")
        rows = []
        p0 = env.probability(0)
        for (x, y) in exact.pairs:
            sched = logsob_schedule(alphas, p0, x, y)
            rows.append(curve_T5(env, gammas, sched).values)
        pair_curves["T5"] = np.vstack(rows)
        params["alphas"] = np.asarray(alphas, dtype=float)
    if "T6" in theorems:
        if alpha_uniform is None:
            raise DomainError("the T6 curve needs a uniform alpha lower bound")
        if rho is None:
            rho = float(min(env.probability(t).min()
                            for t in range(1, env.horizon + 1)))
        max_curves["T6"] = curve_T6(env, gammas, alpha_uniform, rho).values
        params["alpha_uniform"] = alpha_uniform
        params["rho"] = rho

    crossings: Dict = {}
    for eta in etas:
        key = repr(float(eta))
        entry: Dict = {"exact-tv": {}, "exact-sep": {}}
        for k, pid in enumerate([f"{x}-{y}" for (x, y) in exact.pairs]):
            entry["exact-tv"][pid] = _not_reached(
                _first_crossing(exact.tv[k], eta))
            entry["exact-sep"][pid] = _not_reached(
                _first_crossing(exact.sep[k], eta))
        entry["exact-max-sep"] = _not_reached(
            _first_crossing(exact.max_sep, eta))
        for tid, vals in pair_curves.items():
            entry[tid] = {
                f"{x}-{y}": _not_reached(_first_crossing(vals[k], eta))
                for k, (x, y) in enumerate(exact.pairs)}
        if "T4-sep" in max_curves and 0 < eta < 0.5:
            entry["T4-sep"] = _not_reached(
                merging_time_T4_sep(env, gammas, nash, eta))
        if "T6" in max_curves and 0 < eta < 0.5:
            entry["T6"] = _not_reached(
                merging_time_T6(env, gammas, alpha_uniform, rho, eta))
        crossings[key] = entry

    return ExperimentReport(horizon=env.horizon, exact=exact,
                            pair_curves=pair_curves, max_curves=max_curves,
                            crossings=crossings, params=params)


def _not_reached(t: Optional[int]):
    return "not-reached" if t is None else t
