"""Regularly varying urn distributions and their occupancy expectations.

The urn law is the pure power law ``p_i = c * i**(-1/theta)`` with
``c = 1/zeta(1/theta)``.  Its counting function ``alpha(x)`` is
``floor((c*x)**theta)``, so the slowly varying part is the constant
``c**theta``.

Occupancy expectations are infinite series over urns.  Each series is summed
exactly up to a cutoff ``N`` and the remainder is bracketed analytically: in
the tail the summand, viewed as a function of a continuous urn index, is
convex and decreasing, which gives

    I(N) + f(N)/2  <=  sum_{i>=N} f(i)  <=  I(N - 1/2)

with ``I(x) = int_x^inf f``.  For Poisson occupancies ``I`` has a closed form in
terms of the regularized incomplete gamma function.  The returned value is the
midpoint of the bracket and ``N`` is doubled until the half-width is below
the requested tolerance.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = [
    "PowerLawPmf",
    "KarlinRouault",
    "karlin_rouault",
    "karlin_rouault_values",
    "poisson_below",
    "poisson_at_least",
    "poisson_pmf",
]

DEFAULT_EPS = 1e-9
DEFAULT_TABLE_CUTOFF = 10**6
# Increments of the cumulative table must stay resolvable next to 1.0.
_MIN_TABLE_INCREMENT = 1e-15
# Largest label produced by the sampler; draws beyond it are redrawn.
MAX_LABEL = 2**62
# Tail functions are convex once the Poisson mean t*p_i drops below this.
_CONVEX_MEAN = 0.1
_MAX_CUTOFF = 2**26
# p_1 = 1/zeta(1/theta) and x = zeta(1/theta) must register as a tie in floats.
_ALPHA_RTOL = 1e-12


def _check_theta(theta):
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must lie in (0, 1), got {theta!r}")


class PowerLawPmf:
    """Power-law urn distribution ``p_i = c i^(-1/theta)``, ``i >= 1``.

    Parameters
    ----------
    theta : float
        Regular-variation index in the open interval (0, 1).
    table_cutoff : int, optional
        Upper bound on the number of urns kept in the cumulative table used
        for inverse-CDF sampling.  The table is shortened automatically when
        the increments ``p_i`` fall below double-precision resolution.

    Notes
    -----
    Instances are immutable and may be shared between workers.  Random
    sources are passed explicitly to :meth:`sample`.
    """

    __slots__ = (
        "theta",
        "exponent",
        "normalizer",
        "table_cutoff",
        "cumulative_table",
        "tail_mass",
        "_survival",
        "_neg_survival",
        "_cache",
    )

    def __init__(self, theta: float, table_cutoff: int = DEFAULT_TABLE_CUTOFF):
        theta = float(theta)
        _check_theta(theta)
        if table_cutoff < 1:
            raise ValueError("table_cutoff must be positive")
        beta = 1.0 / theta
        c = 1.0 / float(special.zeta(beta, 1.0))
        # largest i with p_i >= _MIN_TABLE_INCREMENT
        resolvable = int((c / _MIN_TABLE_INCREMENT) ** theta)
        cutoff = max(1, min(int(table_cutoff), resolvable))
        idx = np.arange(2, cutoff + 2, dtype=np.float64)
        # 1 - CDF(i) = c * zeta(beta, i + 1), accurate without cumulative rounding
        survival = c * special.zeta(beta, idx)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "exponent", beta)
        object.__setattr__(self, "normalizer", c)
        object.__setattr__(self, "table_cutoff", cutoff)
        table = 1.0 - survival
        table.setflags(write=False)
        object.__setattr__(self, "cumulative_table", table)
        object.__setattr__(self, "tail_mass", float(survival[-1]))
        survival.setflags(write=False)
        object.__setattr__(self, "_survival", survival)
        # ascending copy for binary search on the survival function
        neg = -survival
        neg.setflags(write=False)
        object.__setattr__(self, "_neg_survival", neg)
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("PowerLawPmf is immutable")

    def __repr__(self):
        return f"PowerLawPmf(theta={self.theta!r}, table_cutoff={self.table_cutoff})"

    def __reduce__(self):
        return (PowerLawPmf, (self.theta, self.table_cutoff))

    # ------------------------------------------------------------------
    # pointwise quantities

    def pmf(self, i):
        """Probability of urn ``i`` (scalar or array of positive integers)."""
        arr = np.asarray(i)
        if np.any(arr < 1):
            raise ValueError("urn labels start at 1")
        out = self.normalizer * np.power(arr.astype(np.float64), -self.exponent)
        return float(out) if out.ndim == 0 else out

    def survival(self, i: int) -> float:
        """``P(X > i) = sum_{j > i} p_j`` computed from the Hurwitz zeta function."""
        if i < 0:
            raise ValueError("i must be nonnegative")
        if i == 0:
            return 1.0
        return self.normalizer * float(special.zeta(self.exponent, i + 1.0))

    def alpha(self, x: float) -> int:
        """Counting function ``max{i >= 1 : p_i >= 1/x}`` (0 if empty)."""
        if x < 0:
            raise ValueError("x must be nonnegative")
        if x == 0:
            return 0
        # p_i >= 1/x  <=>  i <= (c x)^theta ; ties within _ALPHA_RTOL count as hits
        guess = int(math.floor((self.normalizer * x) ** self.theta))

        def ok(i):
            return i >= 1 and self.normalizer * x * i ** (-self.exponent) >= 1.0 - _ALPHA_RTOL

        i = max(guess, 0)
        while i >= 1 and not ok(i):
            i -= 1
        while ok(i + 1):
            i += 1
        return i

    # ------------------------------------------------------------------
    # sampling

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. urn labels.

        Labels up to ``table_cutoff`` come from binary search on the
        cumulative table.  Larger labels are drawn by rejection against a
        continuous Pareto envelope on ``[N + 1, inf)`` whose floor dominates
        the discrete tail, so no truncation bias is introduced below
        ``MAX_LABEL``.
        """
        if count < 0:
            raise ValueError("count must be nonnegative")
        if count == 0:
            return np.empty(0, dtype=np.int64)
        u = rng.random(count)
        labels = np.searchsorted(self.cumulative_table, u, side="right").astype(np.int64)
        labels += 1
        tail = labels > self.table_cutoff
        n_tail = int(tail.sum())
        if n_tail:
            labels[tail] = self._sample_tail(rng, n_tail)
        return labels

    def sample_beyond(self, rng: np.random.Generator, count: int, k: int) -> np.ndarray:
        """Draw ``count`` labels from the law conditioned on ``X > k``."""
        if count == 0:
            return np.empty(0, dtype=np.int64)
        if k == 0:
            return self.sample(rng, count)
        if k >= self.table_cutoff:
            return self._sample_tail(rng, count, first=k + 1)
        sk = self.survival(k)
        w = sk * (1.0 - rng.random(count))
        # X = 1 + #{i : S(i) >= w}, S decreasing
        labels = np.searchsorted(self._neg_survival, -w, side="right").astype(np.int64) + 1
        labels = np.maximum(labels, k + 1)
        tail = labels > self.table_cutoff
        n_tail = int(tail.sum())
        if n_tail:
            labels[tail] = self._sample_tail(rng, n_tail)
        return labels

    def _sample_tail(self, rng, count, first=None):
        beta = self.exponent
        start = float(first if first is not None else self.table_cutoff + 1)
        # sup over i >= start of i^-beta / int_i^{i+1} y^-beta dy is attained at start
        bound = self._tail_ratio(np.array([start]))[0]
        out = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            need = count - filled
            batch = max(2 * need, 16)
            u = 1.0 - rng.random(batch)  # (0, 1]
            y = start * u ** (-1.0 / (beta - 1.0))
            ok = y < MAX_LABEL
            i = np.floor(y[ok])
            accept = rng.random(i.size) * bound <= self._tail_ratio(i)
            got = i[accept].astype(np.int64)[:need]
            out[filled:filled + got.size] = got
            filled += got.size
        return out

    def _tail_ratio(self, i):
        # i^-beta / int_i^{i+1} y^-beta dy, evaluated without cancellation
        beta = self.exponent
        width = -np.expm1((1.0 - beta) * np.log1p(1.0 / i)) / (beta - 1.0)
        return 1.0 / (i * width)

    # ------------------------------------------------------------------
    # Poissonized occupancy expectations

    def mean_occupied(self, t: float, eps: float = DEFAULT_EPS) -> float:
        """``M(t) = sum_i (1 - exp(-t p_i))`` with absolute error below ``eps``."""
        return self.mean_at_least_k(t, 1, eps)

    def mean_at_least_k(self, t: float, k: int, eps: float = DEFAULT_EPS) -> float:
        """Expected number of urns with at least ``k`` Poisson(t p_i) balls."""
        return self._poisson_series(t, k, "at_least", eps)[0]

    def mean_exact_k(self, t: float, k: int, eps: float = DEFAULT_EPS) -> float:
        """``M_k(t) = sum_i P(Poisson(t p_i) = k)``."""
        return self._poisson_series(t, k, "exact", eps)[0]

    def _poisson_series(self, t, k, kind, eps):
        if k < 1:
            raise ValueError("k must be at least 1")
        if t < 0:
            raise ValueError("t must be nonnegative")
        if eps <= 0:
            raise ValueError("eps must be positive")
        t = float(t)
        if t == 0.0:
            return 0.0, 0.0
        key = ("poisson", kind, t, int(k), eps)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        a = self.normalizer * t
        if kind == "exact":
            head_terms = lambda lam: poisson_pmf(k, lam)
        else:
            head_terms = lambda lam: poisson_at_least(k, lam)

        def tail(x, scale=a):
            return _poisson_tail_integral(scale, self.theta, k, kind, x)

        result = self._bracketed_sum(a, head_terms, tail, eps)
        self._cache[key] = result
        return result

    def _bracketed_sum(self, a, head_terms, tail_integral, eps):
        beta = self.exponent
        # start where t p_i <= _CONVEX_MEAN so the tail summand is convex
        n_cut = max(16, int(math.ceil((a / _CONVEX_MEAN) ** self.theta)) + 2)
        while True:
            lam_n = a * n_cut ** (-beta)
            f_n = float(head_terms(np.array([lam_n]))[0])
            lower = tail_integral(float(n_cut)) + 0.5 * f_n
            upper = tail_integral(n_cut - 0.5)
            half_width = 0.5 * (upper - lower)
            if half_width < 0.5 * eps or n_cut >= _MAX_CUTOFF:
                break
            n_cut *= 2
        head = self._head_sum(a, head_terms, n_cut)
        value = head + 0.5 * (upper + lower)
        return value, max(half_width, 0.0)

    def _head_sum(self, a, head_terms, n_cut, chunk=1 << 20):
        beta = self.exponent
        total = 0.0
        for lo in range(1, n_cut, chunk):
            hi = min(n_cut, lo + chunk)
            i = np.arange(lo, hi, dtype=np.float64)
            total += float(np.sum(head_terms(a * i ** (-beta))))
        return total

    # ------------------------------------------------------------------
    # fixed-n (binomial) expectations

    def binomial_mean_at_least(self, m: int, k: int, eps: float = DEFAULT_EPS) -> float:
        """``sum_i P(Binomial(m, p_i) >= k)``: exact mean of ``R*_{m,k}``.

        The tail beyond the cutoff is bracketed through the Poisson series:
        ``Binomial(m, p)`` is stochastically below ``Poisson(-m log(1 - p))``
        and within total variation ``m p^2`` of ``Poisson(m p)``.
        """
        return self._binomial_series(m, k, "at_least", eps)[0]

    def binomial_mean_exact_k(self, m: int, k: int, eps: float = DEFAULT_EPS) -> float:
        """``sum_i P(Binomial(m, p_i) = k)``: exact mean of ``R_{m,k}``."""
        return self._binomial_series(m, k, "exact", eps)[0]

    def _binomial_series(self, m, k, kind, eps):
        if k < 1:
            raise ValueError("k must be at least 1")
        if m < 0:
            raise ValueError("m must be nonnegative")
        m = int(m)
        if m == 0 or k > m:
            return 0.0, 0.0
        key = ("binomial", kind, m, int(k), eps)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        c, beta, theta = self.normalizer, self.exponent, self.theta
        if kind == "exact":
            head_terms = lambda p: _binom_pmf(m, k, p)
        else:
            head_terms = lambda p: special.betainc(k, m - k + 1, p)

        n_cut = max(16, int(math.ceil((m * c / _CONVEX_MEAN) ** theta)) + 2)
        while True:
            p_n = c * n_cut ** (-beta)
            lo_b, hi_b = self._binomial_tail_bracket(m, k, kind, n_cut, p_n)
            half_width = 0.5 * (hi_b - lo_b)
            if half_width < 0.5 * eps or n_cut >= _MAX_CUTOFF:
                break
            n_cut *= 2
        head = 0.0
        chunk = 1 << 20
        for lo in range(1, n_cut, chunk):
            hi = min(n_cut, lo + chunk)
            p = c * np.arange(lo, hi, dtype=np.float64) ** (-beta)
            head += float(np.sum(head_terms(p)))
        result = (head + 0.5 * (lo_b + hi_b), max(half_width, 0.0))
        self._cache[key] = result
        return result

    def _binomial_tail_bracket(self, m, k, kind, n_cut, p_n):
        """Bounds on ``sum_{i >= n_cut}`` of the binomial summand."""
        theta = self.theta
        a = m * self.normalizer
        # Poisson(m p) tail bracket at the cutoff, via the convex-tail bounds
        pdf_term = (lambda lam: special.pdtr(k, lam) - special.pdtr(k - 1, lam)) \
            if kind == "exact" else (lambda lam: special.gammainc(k, lam))

        def bracket(scale):
            lam_n = scale * n_cut ** (-self.exponent)
            f_n = float(pdf_term(np.array([lam_n]))[0])
            lo = _poisson_tail_integral(scale, theta, k, kind, float(n_cut)) + 0.5 * f_n
            hi = _poisson_tail_integral(scale, theta, k, kind, n_cut - 0.5)
            return lo, hi

        # sum_{i >= N} m p_i^2, bounded above by the convex-tail upper estimate
        sq = m * self.normalizer**2 * float(special.zeta(2 * self.exponent, float(n_cut)))
        lo_p, hi_p = bracket(a)
        if kind == "exact":
            # |P(Bin = k) - P(Poi(m p) = k)| <= m p^2 pointwise
            return lo_p - sq, hi_p + sq
        # -log(1 - p) <= p (1 + p) for p <= 1/2
        _, hi_s = bracket(a * (1.0 + p_n))
        return lo_p - sq, hi_s


def poisson_below(k: int, lam):
    """``P(Poisson(lam) < k)``; zero for ``k <= 0``."""
    lam = np.asarray(lam, dtype=np.float64)
    if k <= 0:
        return np.zeros_like(lam)
    return special.gammaincc(k, lam)


def poisson_at_least(k: int, lam):
    """``P(Poisson(lam) >= k)``; one for ``k <= 0``."""
    lam = np.asarray(lam, dtype=np.float64)
    if k <= 0:
        return np.ones_like(lam)
    return special.gammainc(k, lam)


def poisson_pmf(m: int, lam):
    """``P(Poisson(lam) = m)``, evaluated in log space."""
    lam = np.asarray(lam, dtype=np.float64)
    if m < 0:
        return np.zeros_like(lam)
    if m == 0:
        return np.exp(-lam)
    with np.errstate(divide="ignore"):
        return np.exp(m * np.log(lam) - lam - special.gammaln(m + 1))


def _binom_pmf(m, k, p):
    logc = special.gammaln(m + 1) - special.gammaln(k + 1) - special.gammaln(m - k + 1)
    return np.exp(logc + k * np.log(p) + (m - k) * np.log1p(-p))


def _poisson_tail_integral(a, theta, k, kind, x):
    """``int_x^inf g(a y^(-1/theta)) dy`` for the Poisson summand ``g``.

    Substituting ``lam = a y^(-1/theta)`` turns the integral into an
    incomplete gamma integral against ``theta a^theta lam^(-theta-1)``.
    """
    lam = a * x ** (-1.0 / theta)
    scale = a**theta
    if kind == "exact":
        # theta a^theta gamma(k - theta, lam) / k!
        return scale * theta * math.exp(
            special.gammaln(k - theta) - special.gammaln(k + 1)
        ) * float(special.gammainc(k - theta, lam))
    # at least k: a^theta [gamma(k - theta, lam)/(k-1)! - lam^-theta P(Poi(lam) >= k)]
    first = math.exp(special.gammaln(k - theta) - special.gammaln(k)) * float(
        special.gammainc(k - theta, lam))
    second = lam ** (-theta) * float(special.gammainc(k, lam))
    return scale * (first - second)


# ----------------------------------------------------------------------
# Karlin-Rouault law


def karlin_rouault(theta: float, k: int) -> float:
    """``q_k = (-1)^(k+1) binom(theta, k)`` via ``theta prod_{j<k} (j - theta)/(j + 1)``."""
    _check_theta(theta)
    if k < 1:
        raise ValueError("k must be at least 1")
    return float(karlin_rouault_values(theta, k)[-1])


def karlin_rouault_values(theta: float, kmax: int) -> np.ndarray:
    """Array ``[q_1, ..., q_kmax]``."""
    _check_theta(theta)
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    j = np.arange(1, kmax, dtype=np.float64)
    factors = np.concatenate(([theta], (j - theta) / (j + 1.0)))
    return np.cumprod(factors)


class KarlinRouault:
    """Karlin-Rouault probabilities ``q_1..q_K`` for a fixed ``theta``."""

    def __init__(self, theta: float, kmax: int):
        self.theta = float(theta)
        self.values = karlin_rouault_values(self.theta, kmax)

    def __len__(self):
        return self.values.size

    def __getitem__(self, k):
        if k < 1:
            raise IndexError("q_k is indexed from k = 1")
        return float(self.values[k - 1])

    def asymptotic(self, k):
        """Large-``k`` approximation ``theta k^(-theta-1) / Gamma(1 - theta)``."""
        return self.theta * k ** (-self.theta - 1.0) / math.gamma(1.0 - self.theta)
