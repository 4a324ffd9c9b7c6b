"""Poincare, log-Sobolev and Nash machinery for reversible kernels.

Poincare constants come from a full symmetric eigendecomposition of the
measure-conjugated kernel (desk scale, deterministic).  Log-Sobolev
constants are never solved in closed form: two-state chains get an
exhaustive one-parameter grid oracle, larger chains get multi-start
projected minimisation of the Dirichlet/entropy ratio, and the report keeps
the uncertainty explicit (``certified`` plus a ``method`` tag).  Nash
inequalities are property-checked on probe families; a clean pass is
evidence, not a proof, and fitted constants are labelled as such.

All randomness (probe draws, optimizer restarts) flows from a single
64-bit seed, so identical seeds give bit-identical reports.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .core import as_measure, is_invariant, normalize
from .errors import DomainError, HypothesisViolationError, StructuralError
from .evolution import adjoint
from .functional import dirichlet_form_batch, entropy, lp_norm
from .networks import lazify  # noqa: F401  (re-exported for convenience)

REVERSIBILITY_TOL = 1e-10
NONCONSTANT_FLOOR = 1e-8


@dataclass(frozen=True)
class SpectralReport:
    """Poincare constant gamma and lam = 1 - gamma of a reversible kernel."""

    gamma: float
    lam: float
    method: str  # "exact-eigen" | "comparison-bound"

    def __post_init__(self):
        if not -1e-9 <= self.gamma <= 1 + 1e-9:
            raise DomainError(f"gamma = {self.gamma!r} outside [0, 1]")
        if self.lam != 1.0 - self.gamma:
            raise StructuralError("lam must equal 1 - gamma exactly")


@dataclass(frozen=True)
class LogSobReport:
    """Estimate and (possibly certified) lower bound for the log-Sobolev constant."""

    alpha_lower: float
    alpha_estimate: float
    certified: bool
    method: str  # "grid-oracle" | "optimization" | "comparison-bound"

    def __post_init__(self):
        if self.alpha_lower > self.alpha_estimate + 1e-12:
            raise StructuralError("alpha_lower exceeds alpha_estimate")


@dataclass(frozen=True)
class NashParams:
    """Constants (C, D, T) of a Nash inequality; ``fitted`` marks empirical C."""

    C: float
    D: float
    T: int
    fitted: bool = False

    def __post_init__(self):
        if self.C <= 0 or self.D <= 0 or self.T < 1:
            raise DomainError("Nash parameters need C > 0, D > 0, T >= 1")


@dataclass(frozen=True)
class ComparisonParams:
    """Uniform bound M and the multiplicative loss of a comparison chain."""

    M: float
    factor: float

    def __post_init__(self):
        if not 0 < self.factor <= 1:
            raise DomainError("comparison factor must lie in (0, 1]")


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of a probe-family check; a clean pass is evidence, not proof."""

    ok: bool
    worst_margin: float
    witness: Optional[int]
    n_probes: int


def check_reversible(K, pi, tol: float = REVERSIBILITY_TOL):
    """Raise unless pi(x) K(x,y) = pi(y) K(y,x) within tol * max flow."""
    K = np.asarray(K, dtype=float)
    pi = as_measure(pi)
    flow = pi[:, None] * K
    defect = np.abs(flow - flow.T).max()
    scale = max(flow.max(), 1e-300)
    if defect > tol * scale:
        raise HypothesisViolationError(
            f"kernel is not reversible (detailed-balance defect {defect:.3e})"
        )


def symmetrization(K, pi, check: bool = True) -> np.ndarray:
    """Multiplicative symmetrisation Q = K* K; reversible and row-stochastic.

    For K already reversible this is just K @ K.
    """
    K = np.asarray(K, dtype=float)
    pi = as_measure(pi)
    if check and not is_invariant(K, pi):
        raise HypothesisViolationError("measure is not invariant for the kernel")
    return adjoint(K, pi, check=False) @ K


def second_eigenvalue(Q, pi, check: bool = True) -> float:
    """Second-largest eigenvalue of a pi-reversible kernel.

    Computed from the symmetric conjugation D^(1/2) Q D^(-1/2) with
    D = diag(pi~), which shares the spectrum of Q.
    """
    Q = np.asarray(Q, dtype=float)
    pi_prob = normalize(pi)
    if check:
        check_reversible(Q, pi_prob)
    root = np.sqrt(pi_prob)
    S = root[:, None] * Q / root[None, :]
    S = 0.5 * (S + S.T)
    vals = np.linalg.eigvalsh(S)
    return float(vals[-2]) if vals.size > 1 else float(vals[-1])


def poincare_gamma(Q, pi, check: bool = True) -> SpectralReport:
    """Poincare constant gamma(Q) = 1 - second eigenvalue, exactly.

    Only reversible kernels are supported (the multiplicative
    symmetrisation path); gamma lands in [0, 1] for any symmetrisation.
    """
    lam2 = second_eigenvalue(Q, pi, check=check)
    gamma = 1.0 - lam2
    if gamma < -1e-9 or gamma > 1 + 1e-9:
        raise DomainError(
            f"gamma = {gamma:.3e} leaves [0, 1]; the input is reversible but "
            "not a multiplicative symmetrisation (negative eigenvalues)"
        )
    gamma = min(max(gamma, 0.0), 1.0)
    return SpectralReport(gamma=gamma, lam=1.0 - gamma, method="exact-eigen")


# ---------------------------------------------------------------------------
# Log-Sobolev estimation


def _entropy_ratio(f, Q, pi_prob) -> float:
    """Dirichlet/entropy ratio, evaluated cancellation-free near constants.

    The Dirichlet form kills constants, so it is computed on the centered
    part of f; the entropy uses the stable centered log1p form.  Functions
    inside the near-constant exclusion zone return inf.
    """
    g = f - np.sum(pi_prob * f)
    var = float(np.sum(pi_prob * g * g))
    if np.sqrt(var) < NONCONSTANT_FLOOR * max(1.0, float(np.abs(f).max())):
        return np.inf
    ent = entropy(f, pi_prob)
    if ent <= 0.0:
        return np.inf
    e = float(dirichlet_form_batch(g, Q, pi_prob)[0])
    return max(e, 0.0) / ent


def _ratio_and_grad(v, Q, pi_prob):
    """Dirichlet/entropy ratio and its gradient; the ratio is 0-homogeneous."""
    norm = np.sqrt(np.sum(pi_prob * v * v))
    if norm < 1e-200:
        return np.inf, np.zeros_like(v)
    f = v / norm
    c = np.sum(pi_prob * f)
    c += np.sum(pi_prob * (f - c))   # refined centering, see entropy()
    g = f - c
    pg2 = np.sum(pi_prob * g * g)
    if np.sqrt(pg2) < NONCONSTANT_FLOOR:
        return 1e6, np.zeros_like(v)
    f2 = f * f
    s = c * c + pg2
    d = 2.0 * c * g + (g * g - pg2)
    with np.errstate(divide="ignore", invalid="ignore"):
        logterm = np.where(f2 > 0, np.log1p(d / s), 0.0)
    ent = float(np.sum(pi_prob * f2 * logterm))
    if ent <= 0.0:
        return 1e6, np.zeros_like(v)
    resid = g - Q @ g                         # Dirichlet form kills constants
    e = float(np.sum(pi_prob * g * resid))
    grad_e = 2.0 * pi_prob * resid            # reversible Q
    grad_l = 2.0 * pi_prob * f * logterm
    ratio = e / ent
    grad_f = (grad_e - ratio * grad_l) / ent
    # pull back through the projection v -> v / ||v||
    grad_v = (grad_f - f * np.sum(pi_prob * f * grad_f)) / norm
    return ratio, grad_v


def _logsob_grid_two_states(Q, pi_prob, resolution: float) -> float:
    """Exhaustive scan over directions f = (cos t, sin t), t in [0, pi).

    Scale invariance of the ratio makes this one-parameter family
    exhaustive; the entropy uses the same centered log1p evaluation as
    :func:`merging_chains.functional.entropy` so that grid points close to
    the constant direction are computed at full relative accuracy.
    """
    theta = np.arange(0.0, np.pi, resolution)
    f0 = np.cos(theta)
    f1 = np.sin(theta)
    mean = pi_prob[0] * f0 + pi_prob[1] * f1
    mean = mean + (pi_prob[0] * (f0 - mean) + pi_prob[1] * (f1 - mean))
    g0 = f0 - mean
    g1 = f1 - mean
    var = pi_prob[0] * g0 ** 2 + pi_prob[1] * g1 ** 2
    admissible = np.sqrt(var) >= NONCONSTANT_FLOOR
    # reversibility pairs the two Dirichlet terms: E = (f0-f1)^2 pi0 Q01
    e = (g0 - g1) ** 2 * pi_prob[0] * Q[0, 1]
    pg2 = pi_prob[0] * g0 ** 2 + pi_prob[1] * g1 ** 2
    s = mean ** 2 + pg2
    d0 = 2.0 * mean * g0 + (g0 ** 2 - pg2)
    d1 = 2.0 * mean * g1 + (g1 ** 2 - pg2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = np.where(f0 != 0.0, f0 ** 2 * np.log1p(d0 / s), 0.0)
        t1 = np.where(f1 != 0.0, f1 ** 2 * np.log1p(d1 / s), 0.0)
    ent = pi_prob[0] * t0 + pi_prob[1] * t1
    admissible &= ent > 0.0
    ratios = np.where(admissible,
                      np.maximum(e, 0.0) / np.where(admissible, ent, 1.0),
                      np.inf)
    return float(ratios.min())


def logsob_alpha(Q, pi, seed: int = 0, restarts: int = 32,
                 max_iter: int = 10_000, grid_resolution: float = 1e-5,
                 comparison_lower: Optional[float] = None,
                 method: str = "auto") -> LogSobReport:
    """Estimate the optimal constant in alpha * L(f|pi~) <= E_{Q,pi~}(f, f).

    Two states: exhaustive grid over the one-parameter family of directions,
    certified within the grid resolution.  Larger spaces: multi-start
    projected minimisation; the spectral limit gamma/2 (the ratio limit
    along f -> 1 + eps g) is always included as a candidate, so the lemma
    2 alpha <= gamma holds for every report.  Near-constant functions
    (l2-distance below 1e-8) are excluded from the search.

    ``comparison_lower`` installs a caller-certified comparison bound as
    alpha_lower; otherwise alpha_lower is 0 and the report is uncertified.
    """
    Q = np.asarray(Q, dtype=float)
    pi_prob = normalize(pi)
    if np.any(pi_prob <= 0):
        raise DomainError("log-Sobolev estimation needs a strictly positive measure")
    check_reversible(Q, pi_prob)
    n = Q.shape[0]
    if method not in ("auto", "grid", "optimization"):
        raise DomainError(f"unknown method {method!r}")
    if method == "grid" and n != 2:
        raise DomainError("the grid oracle only covers two-state chains")

    if n == 2 and method in ("auto", "grid"):
        estimate = _logsob_grid_two_states(Q, pi_prob, grid_resolution)
        lower = estimate if comparison_lower is None else comparison_lower
        if comparison_lower is not None and comparison_lower > estimate + 1e-12:
            raise DomainError("comparison bound exceeds the grid-oracle value")
        return LogSobReport(alpha_lower=min(lower, estimate),
                            alpha_estimate=estimate, certified=True,
                            method="grid-oracle")

    gamma = poincare_gamma(Q, pi_prob, check=False).gamma
    candidates = [0.5 * gamma]

    root = np.sqrt(pi_prob)
    S = root[:, None] * Q / root[None, :]
    _, vecs = np.linalg.eigh(0.5 * (S + S.T))
    near_constant = 1.0 + 1e-3 * (vecs[:, -2] / root)

    rng = np.random.default_rng(seed)
    starts = [near_constant]
    starts += [rng.standard_normal(n) for _ in range(restarts - 1)]
    per_start = max(1, max_iter // max(1, len(starts)))
    for v0 in starts:
        res = minimize(_ratio_and_grad, v0, args=(Q, pi_prob), jac=True,
                       method="L-BFGS-B", options={"maxiter": per_start})
        f = res.x / max(lp_norm(res.x, 2, pi_prob), 1e-300)
        r = _entropy_ratio(f, Q, pi_prob)
        if np.isfinite(r):
            candidates.append(float(r))
    estimate = float(min(candidates))

    if comparison_lower is not None:
        if comparison_lower > estimate + 1e-12:
            raise DomainError("comparison bound exceeds the optimisation estimate")
        return LogSobReport(alpha_lower=min(comparison_lower, estimate),
                            alpha_estimate=estimate, certified=True,
                            method="comparison-bound")
    return LogSobReport(alpha_lower=0.0, alpha_estimate=estimate,
                        certified=False, method="optimization")


# ---------------------------------------------------------------------------
# Comparison bounds


def _probe_matrix(n: int, rng: np.random.Generator, n_random: int,
                  Q: Optional[np.ndarray] = None) -> np.ndarray:
    """Stack of probe functions: indicators, centered versions, ramps,
    smoothed bumps and random draws."""
    rows = [np.eye(n)]
    rows.append(np.eye(n) - 1.0 / n)
    ramp = np.arange(n) / max(n - 1, 1)
    rows.append(ramp[None, :])
    rows.append(ramp[::-1][None, :].copy())
    if Q is not None:
        bump = np.eye(n)[rng.choice(n, size=min(8, n), replace=False)]
        for _ in range(3):
            bump = bump @ Q
            rows.append(bump.copy())
        rows.append(np.ones((1, n)))
    if n_random:
        rows.append(rng.standard_normal((n_random, n)))
    return np.vstack(rows)


def comparison_gamma(target: Tuple[np.ndarray, np.ndarray],
                     reference: Tuple[np.ndarray, np.ndarray],
                     M: float, a: float = 2.0, n_probes: int = 64,
                     seed: int = 0, tol: float = 1e-9) -> SpectralReport:
    """Certified-style lower bound gamma(target) >= gamma(reference)/(a*M).

    Requires Dirichlet-form domination E_ref <= a * E_target and pointwise
    measure domination pi_target <= M * pi_ref.  Both are verified on a
    probe set (the measure check is exact); the analytic hypotheses remain
    the caller's responsibility.  ``a`` defaults to 2, the loss of the
    lazy-square route E_P <= 2 E_{K^2}.
    """
    Q_t, pi_t = np.asarray(target[0], dtype=float), as_measure(target[1])
    R, u = np.asarray(reference[0], dtype=float), as_measure(reference[1])
    if Q_t.shape != R.shape:
        raise StructuralError("target and reference differ in size")
    if M < 1:
        raise DomainError("uniform bound M must be at least 1")

    excess = pi_t - M * u
    if np.any(excess > tol * max(1.0, u.max())):
        x = int(np.argmax(excess))
        raise HypothesisViolationError(
            f"measure domination fails at state {x}: "
            f"pi({x}) = {pi_t[x]:.6g} > M*u({x}) = {M * u[x]:.6g}",
            witness=x,
        )

    rng = np.random.default_rng(seed)
    probes = _probe_matrix(Q_t.shape[0], rng, n_probes)
    e_ref = dirichlet_form_batch(probes, R, u)
    e_tgt = dirichlet_form_batch(probes, Q_t, pi_t)
    slack = tol * (1.0 + np.abs(e_ref))
    bad = np.nonzero(e_ref > a * e_tgt + slack)[0]
    if bad.size:
        k = int(bad[0])
        raise HypothesisViolationError(
            f"Dirichlet-form domination fails on probe {k}: "
            f"E_ref = {e_ref[k]:.6g} > {a} * E_target = {a * e_tgt[k]:.6g}",
            witness=probes[k],
        )

    gamma_ref = 1.0 - second_eigenvalue(R, u)
    params = ComparisonParams(M=M, factor=1.0 / (a * M))
    gamma = min(gamma_ref * params.factor, 1.0)
    return SpectralReport(gamma=gamma, lam=1.0 - gamma, method="comparison-bound")


def comparison_alpha(alpha_reference: float, M: float, a: float = 2.0) -> float:
    """Transfer a log-Sobolev bound through a comparison: alpha_ref / (a*M).

    Valid under pointwise measure domination pi <= M u (entropy is monotone
    in the measure) and Dirichlet-form domination E_ref <= a E_target.
    """
    if alpha_reference < 0:
        raise DomainError("reference constant must be nonnegative")
    if M < 1 or a <= 0:
        raise DomainError("need M >= 1 and a > 0")
    return alpha_reference / (a * M)


# ---------------------------------------------------------------------------
# Nash inequalities


def nash_B(params: NashParams) -> float:
    """B(D, T) = (1 + 1/T)(1 + ceil(4D))."""
    return (1.0 + 1.0 / params.T) * (1.0 + np.ceil(4.0 * params.D))


def _nash_margins(Q, pi_prob, params: NashParams, probes) -> np.ndarray:
    """LHS - RHS of the Nash inequality for each probe row."""
    F = np.atleast_2d(np.asarray(probes, dtype=float))
    l2 = np.sqrt(np.maximum(F * F @ pi_prob, 0.0))
    l1 = np.abs(F) @ pi_prob
    e = np.maximum(dirichlet_form_batch(F, Q, pi_prob), 0.0)
    lhs = l2 ** (2.0 + 1.0 / params.D)
    rhs = params.C * (e + l2 ** 2 / params.T) * l1 ** (1.0 / params.D)
    return lhs - rhs


def nash_check(Q, pi, params: NashParams, probes=None, seed: int = 0,
               tol: float = 1e-9) -> ProbeReport:
    """Probe the Nash inequality ||f||_2^(2+1/D) <= C (E + ||f||_2^2/T) ||f||_1^(1/D).

    Margins are LHS - RHS per probe; the worst one and its witness index are
    reported.  A clean pass over the family is evidence that the constants
    are adequate, not a proof over all functions.
    """
    pi_prob = normalize(pi)
    if probes is None:
        rng = np.random.default_rng(seed)
        probes = _probe_matrix(len(pi_prob), rng, 1000, Q=np.asarray(Q, float))
    margins = _nash_margins(Q, pi_prob, params, probes)
    worst = int(np.argmax(margins))
    ok = bool(margins[worst] <= tol)
    return ProbeReport(ok=ok, worst_margin=float(margins[worst]),
                       witness=None if ok else worst,
                       n_probes=margins.shape[0])


def fit_nash_C(env, D: float, T: int, seed: int = 0, n_random: int = 1000,
               times: Optional[Sequence[int]] = None) -> NashParams:
    """Empirical C: the largest constant the probe family forces, over all
    times t <= min(T, horizon).

    The result is labelled ``fitted`` (non-rigorous): it makes the N(C,D,T)
    inequality hold on the probes by construction, nothing more.  The
    constant-function probe alone forces C >= T.
    """
    if times is None:
        times = range(1, min(T, env.horizon) + 1)
    rng = np.random.default_rng(seed)
    probes = _probe_matrix(env.n_states, rng, n_random)
    l2 = None
    worst = 0.0
    for t in times:
        K = env.kernel(t)
        pi = env.measure(t)
        pi_prob = pi / pi.sum()
        Q = symmetrization(K, pi, check=False)
        F = probes
        if l2 is None:
            l2 = np.sqrt(np.maximum(F * F @ pi_prob, 0.0))
        l2_t = np.sqrt(np.maximum(F * F @ pi_prob, 0.0))
        l1_t = np.abs(F) @ pi_prob
        e_t = np.maximum(dirichlet_form_batch(F, Q, pi_prob), 0.0)
        keep = l2_t > 1e-300
        denom = (e_t[keep] + l2_t[keep] ** 2 / T) * l1_t[keep] ** (1.0 / D)
        implied = l2_t[keep] ** (2.0 + 1.0 / D) / denom
        worst = max(worst, float(implied.max()))
    return NashParams(C=worst, D=D, T=T, fitted=True)


def nash_transfer(params: NashParams, M_prime: float, d: float) -> NashParams:
    """Comparison transfer of Nash constants: C' = 2 C M'^((1+4/d)(1+2/d)).

    D and T are unchanged; validity rests on the norm and form comparisons
    between the perturbed chain and the reference walk.
    """
    if M_prime < 1 or d <= 0:
        raise DomainError("need M' >= 1 and d > 0")
    exponent = (1.0 + 4.0 / d) * (1.0 + 2.0 / d)
    return NashParams(C=params.C * 2.0 * M_prime ** exponent, D=params.D,
                      T=params.T, fitted=params.fitted)


# ---------------------------------------------------------------------------
# Hypercontractivity


def hypercontractivity_check(K, pi, alpha: float, qs: Sequence[float] = (2, 3, 4),
                             n_probes: int = 1000, seed: int = 0,
                             tol: float = 1e-9) -> ProbeReport:
    """Probe ||K f||_{q(1+alpha)} <= ||f||_q under the probability measure.

    Sound whenever alpha is at most the log-Sobolev constant of K* K; an
    inflated alpha should be caught by the probe search.  Margins are the
    relative excess ||Kf||_p / ||f||_q - 1.
    """
    K = np.asarray(K, dtype=float)
    pi_prob = normalize(pi)
    rng = np.random.default_rng(seed)
    probes = _probe_matrix(len(pi_prob), rng, n_probes)
    worst = -np.inf
    witness = None
    count = 0
    for q in qs:
        if q < 2:
            raise DomainError("hypercontractivity exponents start at q = 2")
        p = q * (1.0 + alpha)
        for k, f in enumerate(probes):
            nq = lp_norm(f, q, pi_prob)
            if nq < 1e-300:
                continue
            count += 1
            excess = lp_norm(K @ f, p, pi_prob) / nq - 1.0
            if excess > worst:
                worst = excess
                witness = k
    ok = bool(worst <= tol)
    return ProbeReport(ok=ok, worst_margin=float(worst),
                       witness=None if ok else witness, n_probes=count)


# ---------------------------------------------------------------------------
# Per-time constants of an environment


def environment_gammas(env, cache: bool = True) -> np.ndarray:
    """gamma_t = gamma(K_t* K_t) for t = 1..horizon, by exact eigensolve.

    Identical kernels (stabilised schedules) share one decomposition.
    """
    out = np.empty(env.horizon)
    seen = {}
    for t in range(1, env.horizon + 1):
        K = env.kernel(t)
        key = K.tobytes() if cache else None
        if key is not None and key in seen:
            out[t - 1] = seen[key]
            continue
        pi = env.measure(t)
        Q = symmetrization(K, pi, check=False)
        g = poincare_gamma(Q, pi, check=False).gamma
        out[t - 1] = g
        if key is not None:
            seen[key] = g
    return out
