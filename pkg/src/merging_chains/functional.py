"""Weighted norms, variance, entropy, Dirichlet forms and operator norms.

Measures enter the lp norms unnormalised; the sup norm ignores the measure
entirely (it is kept in the signature only for interface uniformity).
Operator norms are computed exactly for the (p, q) pairs the proof chains
use -- a domain of l1 reduces to scaled columns, a codomain of sup to dual
norms of rows, and (2, 2) to the largest singular value of the
measure-conjugated matrix.  Anything else raises instead of approximating.
"""

import numpy as np

from .core import as_measure, is_invariant, normalize
from .errors import (DomainError, HypothesisViolationError, StructuralError,
                     UnsupportedNormError)

SUPPORTED_NORMS = ((1, 1), (1, 2), (1, np.inf), (2, 2), (2, np.inf),
                   (np.inf, np.inf))


def tv_distance(mu, nu) -> float:
    """Total variation: half the l1 distance of the probability vectors."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise StructuralError("distributions live on different state spaces")
    return 0.5 * float(np.abs(mu - nu).sum())


def separation_distance(mu, nu) -> float:
    """s(mu, nu) = max_x (1 - mu(x)/nu(x)).

    Convention at zeros of nu: a state with nu(x) = 0 < mu(x) contributes 1
    (the worst case); a state with mu(x) = nu(x) = 0 contributes 0.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise StructuralError("distributions live on different state spaces")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(nu > 0, mu / np.where(nu > 0, nu, 1.0),
                         np.where(mu > 0, 0.0, 1.0))
    return float((1.0 - ratio).max())


def inner(f, g, pi) -> float:
    """<f, g>_pi = sum_x f(x) g(x) pi(x)."""
    return float(np.sum(np.asarray(f) * np.asarray(g) * np.asarray(pi)))


def lp_norm(f, p, pi) -> float:
    """Weighted p-norm (sum pi |f|^p)^(1/p); p = inf is the plain sup norm."""
    f = np.asarray(f, dtype=float)
    if np.isinf(p):
        return float(np.abs(f).max())
    if p < 1:
        raise DomainError("p must be at least 1")
    pi = as_measure(pi)
    if p == 1:
        return float(np.sum(pi * np.abs(f)))
    if p == 2:
        return float(np.sqrt(np.sum(pi * f * f)))
    return float(np.sum(pi * np.abs(f) ** p) ** (1.0 / p))


def variance(f, pi) -> float:
    """Var_pi(f) = sum_x (f(x) - pi~(f))^2 pi(x); equals pi(V) Var_pi~(f)."""
    f = np.asarray(f, dtype=float)
    pi = as_measure(pi)
    mean = np.sum(pi * f) / pi.sum()
    return float(np.sum(pi * (f - mean) ** 2))


def variance_double_sum(f, pi) -> float:
    """The pair form (1/(2 pi(V))) sum_{x,y} (f(x)-f(y))^2 pi(x) pi(y).

    Independent route to the same value as :func:`variance`; kept separate
    so the two can be cross-checked.
    """
    f = np.asarray(f, dtype=float)
    pi = as_measure(pi)
    diff = f[:, None] - f[None, :]
    return float(np.sum(diff ** 2 * np.outer(pi, pi)) / (2.0 * pi.sum()))


def entropy(f, pi_prob) -> float:
    """L(f | pi~) = sum_x f(x)^2 log(f(x)^2 / pi~(f^2)) pi~(x).

    Uses the 0 log 0 = 0 convention; rejects the all-zero function.

    Evaluated through the centered decomposition f = c + g with pi~(g) = 0:
    f^2 - pi~(f^2) = 2 c g + (g^2 - pi~(g^2)) exactly, which feeds log1p
    without the catastrophic cancellation the literal formula suffers for
    near-constant f (where the entropy is quadratically small).
    """
    f = np.asarray(f, dtype=float)
    pi_prob = np.asarray(pi_prob, dtype=float)
    f2 = f * f
    c = float(np.sum(pi_prob * f))
    # one refinement pass makes the residual mean of g second-order small,
    # otherwise the dropped cross term 2c pi~(g) pollutes tiny entropies
    c += float(np.sum(pi_prob * (f - c)))
    g = f - c
    g2 = g * g
    pg2 = float(np.sum(pi_prob * g2))
    s = c * c + pg2
    if s <= 0:
        raise DomainError("entropy needs a function that is not identically "
                          "zero on the support")
    d = 2.0 * c * g + (g2 - pg2)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(f2 > 0, f2 * np.log1p(d / s), 0.0)
    return float(np.sum(pi_prob * terms))


def dirichlet_form(f, Q, pi, check: bool = True) -> float:
    """E_{Q,pi}(f,f) = (1/2) sum_{x,y} (f(x)-f(y))^2 Q(x,y) pi(x).

    With pi invariant this equals <(I-Q) f, f>_pi; ``check`` verifies the
    invariance hypothesis (the two routes disagree without it).
    """
    f = np.asarray(f, dtype=float)
    Q = np.asarray(Q, dtype=float)
    pi = as_measure(pi)
    if check and not is_invariant(Q, pi):
        raise HypothesisViolationError("measure is not invariant for the kernel")
    diff = f[:, None] - f[None, :]
    return float(0.5 * np.sum(diff ** 2 * Q * pi[:, None]))


def dirichlet_form_operator(f, Q, pi) -> float:
    """The inner-product route <(I - Q) f, f>_pi."""
    f = np.asarray(f, dtype=float)
    Q = np.asarray(Q, dtype=float)
    pi = as_measure(pi)
    return float(np.sum(pi * f * (f - Q @ f)))


def dirichlet_form_batch(F, Q, pi) -> np.ndarray:
    """Row-wise <(I-Q) f, f>_pi for a stack of functions F (m, n)."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    pi = as_measure(pi)
    G = F - F @ np.asarray(Q, dtype=float).T
    return np.einsum("ij,ij,j->i", F, G, pi)


def _column_norms(A, q, pi_cod) -> np.ndarray:
    if q == 1:
        return np.abs(A).T @ pi_cod
    if q == 2:
        return np.sqrt((A * A).T @ pi_cod)
    return np.abs(A).max(axis=0)


def operator_norm(A, p, q, pi_dom, pi_cod) -> float:
    """Exact norm of A : lp(pi_dom) -> lq(pi_cod) acting on functions.

    Supported (p, q): (1,1), (1,2), (1,inf), (2,2), (2,inf), (inf,inf).
    l1 domains are maximised over the extreme points e_y / pi_dom(y); sup
    codomains take the dual norm of each row; (2,2) is the top singular
    value of diag(pi_cod)^(1/2) A diag(pi_dom)^(-1/2).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise StructuralError("operator must be a matrix")
    pi_dom = as_measure(pi_dom)
    pi_cod = as_measure(pi_cod)
    if A.shape[1] != pi_dom.shape[0] or A.shape[0] != pi_cod.shape[0]:
        raise StructuralError("operator shape does not match the measures")

    if p == 1 and q in (1, 2, np.inf):
        return float((_column_norms(A, q, pi_cod) / pi_dom).max())
    if p == 2 and q == 2:
        M = np.sqrt(pi_cod)[:, None] * A / np.sqrt(pi_dom)[None, :]
        return float(np.linalg.svd(M, compute_uv=False)[0])
    if p == 2 and np.isinf(q):
        return float(np.sqrt((A * A / pi_dom[None, :]).sum(axis=1)).max())
    if np.isinf(p) and np.isinf(q):
        return float(np.abs(A).sum(axis=1).max())
    raise UnsupportedNormError(
        f"operator norm for (p, q) = ({p}, {q}) is not supported; "
        f"supported pairs: {SUPPORTED_NORMS}"
    )
