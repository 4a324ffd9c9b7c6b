"""Exact distribution evolution, kernel products, duals and centered operators.

Distributions evolve by left multiplication, mu_t = mu_0 K_1 ... K_t, and are
never renormalised along the way: drift in the total mass beyond 1e-9 means a
defective kernel and raises instead of being hidden.

Three duals of a kernel K appear, distinguished by the measures of their
domain and codomain spaces:

* ``adjoint``: the l2(pi) self-dual K*(x,y) = pi(y) K(y,x) / pi(x),
* ``dual_forward``: K maps l2(pi_next) into l2(pi_prev); its dual carries
  entries pi_prev(y) K(y,x) / pi_next(x),
* ``dual_forward_probability``: the same with normalised measures; the two
  differ by the mass ratio pi_prev(V)/pi_next(V).

``centered_operator`` builds K_{s,t} f - pi~_s(K_{s,t} f), the object whose
operator norms quantify merging; the family is a semigroup in (s, t).
"""

from dataclasses import dataclass

import numpy as np

from .core import EPS_ROW, Environment, as_measure, is_invariant, normalize
from .errors import DomainError, HypothesisViolationError, StructuralError

MASS_DRIFT_LIMIT = 1e-9


def check_distribution(mu, tol: float = EPS_ROW) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise StructuralError("a distribution is a 1-d array")
    if np.any(mu < -tol):
        raise DomainError("distribution entries must be nonnegative")
    if abs(mu.sum() - 1.0) > max(tol, mu.size * 8 * np.finfo(float).eps):
        raise DomainError(f"distribution mass is {mu.sum()!r}, not 1")
    return mu


def dirac(n: int, z: int) -> np.ndarray:
    mu = np.zeros(n)
    mu[z] = 1.0
    return mu


def evolve(mu0, env: Environment, t: int) -> np.ndarray:
    """Law after t steps: mu0 K_1 ... K_t (t = 0 returns mu0)."""
    mu = check_distribution(mu0)
    if not 0 <= t <= env.horizon:
        raise DomainError(f"time {t} outside [0, {env.horizon}]")
    for s in range(1, t + 1):
        mu = mu @ env.kernel(s)
    drift = abs(mu.sum() - 1.0)
    if drift > MASS_DRIFT_LIMIT:
        raise DomainError(f"distribution mass drifted by {drift:.3e} at t={t}")
    return mu


def kernel_product(env: Environment, s: int, t: int) -> np.ndarray:
    """K_{s,t} = K_{s+1} ... K_t; the empty product (s = t) is the identity."""
    if not 0 <= s <= t <= env.horizon:
        raise DomainError(f"need 0 <= s <= t <= horizon, got s={s}, t={t}")
    out = np.eye(env.n_states)
    for u in range(s + 1, t + 1):
        out = out @ env.kernel(u)
    return out


def adjoint(K, pi, check: bool = True) -> np.ndarray:
    """l2(pi) adjoint K*(x,y) = pi(y) K(y,x) / pi(x); needs pi invariant."""
    K = np.asarray(K, dtype=float)
    pi = as_measure(pi)
    if check and not is_invariant(K, pi):
        raise HypothesisViolationError("measure is not invariant for the kernel")
    return K.T * pi[None, :] / pi[:, None]


def dual_forward(K, pi_prev, pi_next) -> np.ndarray:
    """Dual of K : l2(pi_next) -> l2(pi_prev) between unnormalised spaces.

    Entries pi_prev(y) K(y,x) / pi_next(x); satisfies
    <K f, g>_{pi_prev} = <f, dual g>_{pi_next} for all f, g.
    """
    K = np.asarray(K, dtype=float)
    pi_prev = as_measure(pi_prev)
    pi_next = as_measure(pi_next)
    if K.shape[0] != pi_prev.shape[0] or K.shape[0] != pi_next.shape[0]:
        raise StructuralError("kernel and measures live on different spaces")
    return K.T * pi_prev[None, :] / pi_next[:, None]


def dual_forward_probability(K, pi_prev, pi_next) -> np.ndarray:
    """Same dual taken between the normalised spaces.

    Equals dual_forward scaled by pi_next(V)/pi_prev(V): the probability
    dual is the unnormalised one times the mass ratio.
    """
    return dual_forward(K, normalize(pi_prev), normalize(pi_next))


def forward_dual_product(env: Environment, s: int, t: int) -> np.ndarray:
    """Dual of K_{s,t} between the probability spaces pi~_s -> pi~_t.

    Composed step by step: the dual of a product is the reversed product of
    the per-step duals.
    """
    if not 0 <= s <= t <= env.horizon:
        raise DomainError(f"need 0 <= s <= t <= horizon, got s={s}, t={t}")
    out = np.eye(env.n_states)
    for u in range(s + 1, t + 1):
        step = dual_forward_probability(env.kernel(u), env.measure(u - 1),
                                        env.measure(u))
        out = step @ out
    return out


@dataclass(frozen=True)
class CenteredOperator:
    """K_{s,t} with its pi~_s-average removed; rows sum to zero."""

    matrix: np.ndarray
    s: int
    t: int

    def __post_init__(self):
        worst = np.abs(self.matrix.sum(axis=1)).max()
        if worst > max(EPS_ROW, self.matrix.shape[0] * 64 * np.finfo(float).eps):
            raise StructuralError(
                f"centered operator rows must sum to 0 (worst {worst:.3e})"
            )

    def __matmul__(self, other):
        if isinstance(other, CenteredOperator):
            if self.t != other.s:
                raise StructuralError("centered operators do not compose: "
                                      f"t={self.t} but next s={other.s}")
            return CenteredOperator(self.matrix @ other.matrix, self.s, other.t)
        return self.matrix @ other


def centered_operator(env: Environment, s: int, t: int) -> CenteredOperator:
    """O_{s,t} f = K_{s,t} f - pi~_s(K_{s,t} f) 1."""
    prod = kernel_product(env, s, t)
    row = env.probability(s) @ prod
    return CenteredOperator(prod - row[None, :], s, t)


def centered_forward_dual(env: Environment, s: int, t: int) -> np.ndarray:
    """Dual of O_{s,t}: f -> K_{s,t}^dual f - (K_{s,t}^dual 1) pi~_s(f)."""
    fwd = forward_dual_product(env, s, t)
    m = fwd @ np.ones(env.n_states)
    return fwd - np.outer(m, env.probability(s))


def density(mu, pi_prob) -> np.ndarray:
    """Density h = mu / pi~ of a distribution against a strictly positive law."""
    mu = np.asarray(mu, dtype=float)
    pi_prob = np.asarray(pi_prob, dtype=float)
    if np.any(pi_prob <= 0):
        raise DomainError("reference probability must be strictly positive")
    return mu / pi_prob


def mass_vector(env: Environment, t: int) -> np.ndarray:
    """m_t = K_{0,t}^dual 1 = (pi~_0 K_{0,t}) / pi~_t; independent of any start."""
    return forward_dual_product(env, 0, t) @ np.ones(env.n_states)


def density_evolution_identity_check(env: Environment, z: int, t: int) -> float:
    """Max-abs residual of the density-evolution identities at (z, t).

    Checks h_t = K_{0,t}^dual h_0 and O_{0,t}^dual h_0 = h_t - m_t, with the
    left sides computed through duals and the right sides through direct
    evolution.  Zero at t = 0 by construction.
    """
    n = env.n_states
    h0 = density(dirac(n, z), env.probability(0))
    h_direct = density(evolve(dirac(n, z), env, t), env.probability(t))
    fwd = forward_dual_product(env, 0, t)
    h_dual = fwd @ h0
    r1 = float(np.abs(h_dual - h_direct).max())
    m = fwd @ np.ones(n)
    lhs = centered_forward_dual(env, 0, t) @ h0
    r2 = float(np.abs(lhs - (h_direct - m)).max())
    return max(r1, r2)
