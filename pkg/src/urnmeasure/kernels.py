"""Limiting Gaussian covariance kernels of the occupancy counts.

For index sets ``A1, A2`` and levels ``k1, k2`` the standardized at-least-k
counts converge jointly to a centered Gaussian vector with covariance

    K*(A1,k1,A2,k2) = theta / Gamma(1-theta) * int_0^inf u^(-theta-1)
                      cov(1(Pi(u A1) < k1), 1(Pi(u A2) < k2)) du

where ``Pi`` is a unit-rate Poisson process.  For ``k1 = k2 = 1`` this is
``(|A1| + |A2|)^theta - |A1 u A2|^theta``.  Exact-count kernels follow by
inclusion-exclusion over the levels.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import special

from .distributions import (
    _check_theta,
    karlin_rouault_values,
    poisson_at_least,
    poisson_below,
    poisson_pmf,
)
from .intervals import IntervalSet, circular_arcs
from .quadrature import QuadratureError, integrate

__all__ = [
    "CLOSED_FORM",
    "QUADRATURE",
    "INCLUSION_EXCLUSION",
    "DEFAULT_TOL",
    "KernelValue",
    "QLimitResult",
    "QuadratureError",
    "kstar",
    "kstar_closed",
    "kstar_quadrature",
    "k_exact",
    "pi_value",
    "pi_matrix",
    "forward_kernel",
    "cross_kernel",
    "u_field_kernel",
    "q_limit_cov",
]

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
INCLUSION_EXCLUSION = "inclusion_exclusion"

DEFAULT_TOL = 1e-8
MAX_EVALS = 200_000
# Regularizer in the split point 1/(|A1 u A2| + _SPLIT_EPS).
_SPLIT_EPS = 1e-9
# Floor for the error estimate of a quadrature whose integrand is zero.
_ROUNDOFF = 1e-15
_LOG_BINOM_FROM = 60


@dataclass(frozen=True)
class KernelValue:
    """A kernel value with the method used and an absolute error estimate."""

    value: float
    method: str
    est_abs_error: float = 0.0

    def __float__(self):
        return float(self.value)


def _measure(a) -> float:
    return float(a.measure) if isinstance(a, IntervalSet) else float(a)


def _pieces(A1, A2):
    """Measures of ``A1 - A2``, ``A1 & A2``, ``A2 - A1`` and the union."""
    if isinstance(A1, IntervalSet) and isinstance(A2, IntervalSet):
        b2 = float(A1.intersection(A2).measure)
        m_union = float(A1.union(A2).measure)
    else:
        raise TypeError("A1 and A2 must be IntervalSet instances")
    a1, a2 = float(A1.measure), float(A2.measure)
    b1 = max(a1 - b2, 0.0)
    b3 = max(a2 - b2, 0.0)
    return a1, a2, b1, b2, b3, m_union


def kstar_closed(A1: IntervalSet, A2: IntervalSet, theta: float) -> KernelValue:
    """``(|A1| + |A2|)^theta - |A1 u A2|^theta``, the level-one kernel."""
    _check_theta(theta)
    a1, a2, _, _, _, m_union = _pieces(A1, A2)
    value = (a1 + a2) ** theta - m_union ** theta
    return KernelValue(max(value, 0.0), CLOSED_FORM, 0.0)


def _indicator_cov(u, k1, k2, a1, a2, b1, b2, b3):
    """``cov(1(Pi(u A1) < k1), 1(Pi(u A2) < k2))`` at an array of ``u``.

    Two algebraically equal forms are evaluated: one through the events
    ``{Pi < k}`` and one through their complements.  Each node keeps the
    form whose subtracted terms are smaller, which avoids cancellation both
    for small ``u`` (complements rare) and for large ``u`` (events rare).
    """
    x1, x2 = u * b1, u * b3
    mid = u * b2
    below1, below2 = poisson_below(k1, u * a1), poisson_below(k2, u * a2)
    above1, above2 = poisson_at_least(k1, u * a1), poisson_at_least(k2, u * a2)

    joint_below = np.zeros_like(u)
    for m in range(min(k1, k2)):
        joint_below += poisson_pmf(m, mid) * poisson_below(k1 - m, x1) * poisson_below(k2 - m, x2)
    cov_below = joint_below - below1 * below2

    top = max(k1, k2)
    joint_above = poisson_at_least(top, mid)
    for m in range(top):
        joint_above = joint_above + (
            poisson_pmf(m, mid) * poisson_at_least(k1 - m, x1) * poisson_at_least(k2 - m, x2))
    cov_above = joint_above - above1 * above2

    use_above = np.minimum(above1, above2) < np.minimum(below1, below2)
    return np.where(use_above, cov_above, cov_below)


def _integrate_u(cov, theta, scales, tol):
    """``theta/Gamma(1-theta) int_0^inf u^(-theta-1) cov(u) du``.

    ``(0, u*]`` is mapped by ``u = s^(1/(1-theta))``, which turns the
    integrable ``u^(-theta)`` behaviour at zero into a bounded integrand.
    ``(u*, inf)`` is mapped by ``w = 1/u``.  ``scales`` are set measures whose
    reciprocals are seeded as breakpoints.
    """
    const = theta / math.gamma(1.0 - theta)
    power = 1.0 / (1.0 - theta)
    u_split = 1.0 / (max(scales) + _SPLIT_EPS)
    s_split = u_split ** (1.0 - theta)

    def near(s):
        u = s**power
        return const * power * cov(u) * s ** (-power * theta - 1.0)

    def far(w):
        return const * cov(1.0 / w) * w ** (theta - 1.0)

    w_split = 1.0 / u_split
    # breakpoints at the natural scales u = k/|B| of the Poisson counts
    w_breaks = sorted({x for x in scales if 0 < x < w_split})
    w_breaks += [w_split / 10.0, w_split / 100.0]
    first = integrate(near, 0.0, s_split, tol=0.5 * tol, max_evals=MAX_EVALS // 2)
    second = integrate(far, 0.0, w_split, tol=0.5 * tol, breakpoints=w_breaks,
                       max_evals=MAX_EVALS // 2)
    value = first.value + second.value
    err = max(first.abs_error + second.abs_error, _ROUNDOFF)
    return value, err


def kstar_quadrature(A1: IntervalSet, k1: int, A2: IntervalSet, k2: int, theta: float,
                     tol: float = DEFAULT_TOL) -> KernelValue:
    """Kernel ``K*(A1,k1,A2,k2)`` by adaptive Gauss-Kronrod quadrature.

    Raises
    ------
    QuadratureError
        If the absolute error target ``tol`` is not met within the
        evaluation budget.
    """
    _check_theta(theta)
    if k1 < 1 or k2 < 1:
        raise ValueError("levels must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    a1, a2, b1, b2, b3, m_union = _pieces(A1, A2)
    k1, k2 = int(k1), int(k2)

    def cov(u):
        return _indicator_cov(u, k1, k2, a1, a2, b1, b2, b3)

    scales = [m_union, a1, a2, b1, b2, b3]
    value, err = _integrate_u(cov, theta, [x for x in scales if x > 0] or [0.0], tol)
    return KernelValue(value, QUADRATURE, err)


def kstar(A1, k1, A2, k2, theta, tol: float = DEFAULT_TOL) -> KernelValue:
    """Closed form at level one, quadrature otherwise."""
    if k1 == 1 and k2 == 1:
        return kstar_closed(A1, A2, theta)
    return kstar_quadrature(A1, k1, A2, k2, theta, tol)


def k_exact(A1, i: int, A2, j: int, theta: float, tol: float = DEFAULT_TOL) -> KernelValue:
    """Exact-count kernel ``K(A1,i,A2,j)`` by inclusion-exclusion over levels.

    Each of the four ``K*`` terms is computed by quadrature; the reported
    error is ``4 * tol``.
    """
    if i < 1 or j < 1:
        raise ValueError("levels must be at least 1")
    terms = (
        kstar_quadrature(A1, i, A2, j, theta, tol).value
        - kstar_quadrature(A1, i, A2, j + 1, theta, tol).value
        - kstar_quadrature(A1, i + 1, A2, j, theta, tol).value
        + kstar_quadrature(A1, i + 1, A2, j + 1, theta, tol).value
    )
    return KernelValue(terms, INCLUSION_EXCLUSION, 4.0 * tol)


def pi_value(i: int, j: int, theta: float) -> float:
    """``pi_ij = 1(i=j) q_i - binom(i+j, i) 2^(theta-i-j) q_(i+j)``.

    This is the exact-count kernel for ``A1 = A2`` with ``|A| = 1``.
    """
    _check_theta(theta)
    if i < 1 or j < 1:
        raise ValueError("i and j must be at least 1")
    i, j = int(i), int(j)
    q = karlin_rouault_values(theta, i + j)
    if i + j > _LOG_BINOM_FROM:
        log_term = (special.gammaln(i + j + 1) - special.gammaln(i + 1) - special.gammaln(j + 1)
                    + (theta - i - j) * math.log(2.0) + math.log(q[i + j - 1]))
        cross = math.exp(log_term)
    else:
        cross = math.comb(i + j, i) * 2.0 ** (theta - i - j) * q[i + j - 1]
    diag = q[i - 1] if i == j else 0.0
    return float(diag - cross)


def pi_matrix(kmax: int, theta: float) -> np.ndarray:
    """``(kmax, kmax)`` array of ``pi_ij`` for ``1 <= i, j <= kmax``."""
    out = np.empty((kmax, kmax))
    for i in range(1, kmax + 1):
        for j in range(i, kmax + 1):
            out[i - 1, j - 1] = out[j - 1, i - 1] = pi_value(i, j, theta)
    return out


def _check_unit(*xs):
    for x in xs:
        if not (0.0 <= x <= 1.0):
            raise ValueError(f"arguments must lie in [0, 1], got {x!r}")


def forward_kernel(s: float, t: float, theta: float) -> float:
    """Covariance ``(s+t)^theta - max(s,t)^theta`` of the forward process."""
    _check_theta(theta)
    _check_unit(s, t)
    return (s + t) ** theta - max(s, t) ** theta


def cross_kernel(s: float, t: float, theta: float) -> float:
    """Forward-backward covariance ``((s+t)^theta - 1) 1(s+t > 1)``."""
    _check_theta(theta)
    _check_unit(s, t)
    return (s + t) ** theta - 1.0 if s + t > 1.0 else 0.0


def u_field_kernel(s1: float, t1: float, s2: float, t2: float, theta: float) -> float:
    """Covariance of the circular difference field at ``(s1,t1)`` and ``(s2,t2)``.

    The field is the difference of the counts over the forward and the
    backward arc of length ``t`` at ``s``, so its covariance is a four-term
    combination of level-one kernels.
    """
    _check_unit(s1, t1, s2, t2)
    fa, ba = circular_arcs(s1, t1)
    fb, bb = circular_arcs(s2, t2)
    k = lambda x, y: kstar_closed(x, y, theta).value
    return k(fa, fb) - k(fa, bb) - k(ba, fb) + k(ba, bb)


# ----------------------------------------------------------------------
# weighted limits


@dataclass(frozen=True)
class QLimitResult:
    """Limiting covariance of two weighted occupancy statistics."""

    value: float
    method: str
    est_abs_error: float
    tail_estimate: float
    warning: bool


Weights = Union[Sequence[float], np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _weights(a: Weights, k_max: int):
    """Return ``a_0..a_kmax`` and the squared weights beyond ``k_max``."""
    tail_k = np.arange(k_max + 1, 10**6 + 1, dtype=np.float64)
    if callable(a):
        head = np.asarray(a(np.arange(k_max + 1, dtype=np.float64)), dtype=np.float64)
        tail = np.asarray(a(tail_k), dtype=np.float64)
        return head, tail_k, tail
    arr = np.asarray(a, dtype=np.float64)
    head = np.zeros(k_max + 1)
    n = min(arr.size, k_max + 1)
    head[:n] = arr[:n]
    tail = arr[k_max + 1:]
    return head, tail_k[: tail.size], tail


def q_limit_cov(a: Weights, A1: IntervalSet, A2: IntervalSet, theta: float,
                k_max: int = 50, tol: float = DEFAULT_TOL) -> QLimitResult:
    """Limiting covariance ``sum_{i,j <= k_max} a_i a_j K(A1,i,A2,j)``.

    Parameters
    ----------
    a : sequence or callable
        Weights indexed from ``k = 0``; ``a[0]`` must be zero.  A callable is
        evaluated on an array of integer levels.
    k_max : int
        Truncation level.  The neglected part is estimated from the large-k
        asymptotics of the Karlin-Rouault law and reported as
        ``tail_estimate``; ``warning`` is set when it exceeds ``tol``.

    Notes
    -----
    For ``A1 = A2`` the value is ``|A|^theta sum a_i a_j pi_ij``.  Otherwise
    the double sum is folded into a single integral of
    ``cov(a(Pi(u A1)), a(Pi(u A2)))``.
    """
    _check_theta(theta)
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    head, tail_k, tail = _weights(a, k_max)
    if head[0] != 0.0:
        raise ValueError("a[0] must be zero")
    m1, m2 = _measure(A1), _measure(A2)
    env = theta * tail_k ** (-theta - 1.0) / math.gamma(1.0 - theta)
    tail_est = float(np.sum(tail**2 * env)) * max(m1, m2) ** theta
    warn = tail_est > tol
    if warn:
        warnings.warn(f"truncation tail estimate {tail_est:.3e} exceeds tol {tol:.1e}",
                      RuntimeWarning, stacklevel=2)

    if not np.any(head):
        return QLimitResult(0.0, CLOSED_FORM, 0.0, tail_est, warn)

    if A1 == A2:
        idx = np.flatnonzero(head)
        total = 0.0
        for i in idx:
            for j in idx:
                total += head[i] * head[j] * pi_value(int(i), int(j), theta)
        return QLimitResult(float(total * m1**theta), CLOSED_FORM, 0.0, tail_est, warn)

    a1, a2, b1, b2, b3, m_union = _pieces(A1, A2)
    levels = np.arange(k_max + 1)

    def pmf_table(x):
        return np.stack([poisson_pmf(int(r), x) for r in levels])

    def shifted_means(p):
        # h[m] = E a(X + m), truncated at level k_max
        h = np.empty_like(p)
        for m in levels:
            h[m] = head[m:] @ p[: k_max + 1 - m]
        return h

    def cov(u):
        p1, p2, p3 = pmf_table(u * b1), pmf_table(u * b2), pmf_table(u * b3)
        h1, h3 = shifted_means(p1), shifted_means(p3)
        joint = np.sum(p2 * h1 * h3, axis=0)
        e1 = head @ pmf_table(u * a1)
        e2 = head @ pmf_table(u * a2)
        return joint - e1 * e2

    scales = [x for x in (m_union, a1, a2, b1, b2, b3) if x > 0] or [0.0]
    value, err = _integrate_u(cov, theta, scales, tol)
    return QLimitResult(value, QUADRATURE, err, tail_est, warn)
