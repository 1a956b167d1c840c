"""Simulation of the urn scheme and the counting statistics over index sets.

A ball with sequential index ``m`` belongs to ``nA`` when ``m/n`` lies in
the closed set ``A``; an arrival at time ``T`` belongs to ``tA`` when
``T/t`` lies in ``A``.  ``R*`` counts urns holding at least ``k`` member
balls, ``R`` counts urns holding exactly ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _backend
from .distributions import PowerLawPmf
from .intervals import Endpoints, IntervalSet, from_endpoints

__all__ = [
    "AT_LEAST",
    "EXACT",
    "BallSequence",
    "PoissonRealization",
    "PoissonCells",
    "Query",
    "CountResult",
    "simulate_fixed",
    "simulate_poisson",
    "simulate_poisson_cells",
    "count",
    "count_poisson",
    "batch_count",
    "batch_count_poisson",
    "multiplicity_counts",
    "standardize",
    "weighted_Q",
    "dump_realization_csv",
]

AT_LEAST = "at_least"
EXACT = "exact"
_MODES = (AT_LEAST, EXACT)


@dataclass(frozen=True)
class Query:
    set: IntervalSet
    k: int = 1
    mode: str = AT_LEAST

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if not isinstance(self.set, IntervalSet):
            object.__setattr__(self, "set", IntervalSet(self.set))
        bounds = self.set.bounds()
        if bounds is not None and (bounds[0] < 0 or bounds[1] > 1):
            raise ValueError(f"query set {self.set} is not contained in [0, 1]")


@dataclass(frozen=True)
class BallSequence:
    """Labels ``X_1..X_n`` of one fixed-n realization (``labels[m-1] = X_m``)."""

    n: int
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size != self.n:
            raise ValueError("labels must be a vector of length n")
        if self.n and labels.min() < 1:
            raise ValueError("urn labels start at 1")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @cached_property
    def urn_index(self) -> np.ndarray:
        """Dense urn ids in ``0..n_urns-1``, aligned with ``labels``."""
        return _dense(self.labels)

    @property
    def n_urns(self) -> int:
        return int(self.urn_index.max()) + 1 if self.n else 0

    def ranges(self, s: IntervalSet):
        """0-based half-open ``(start, stop)`` pairs of member ball positions."""
        return [(first - 1, last) for first, last in s.index_ranges(self.n)]


@dataclass(frozen=True)
class PoissonRealization:
    """Marked unit-rate Poisson stream on ``(0, horizon]``."""

    horizon: float
    arrivals: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        arrivals = np.asarray(self.arrivals, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if arrivals.shape != labels.shape or arrivals.ndim != 1:
            raise ValueError("arrivals and labels must be vectors of equal length")
        if arrivals.size and (arrivals[0] <= 0 or arrivals[-1] > self.horizon):
            raise ValueError("arrival times must lie in (0, horizon]")
        if np.any(np.diff(arrivals) <= 0):
            raise ValueError("arrival times must be strictly increasing")
        arrivals.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "arrivals", arrivals)
        object.__setattr__(self, "labels", labels)

    @cached_property
    def urn_index(self) -> np.ndarray:
        return _dense(self.labels)

    @property
    def n_urns(self) -> int:
        return int(self.urn_index.max()) + 1 if self.labels.size else 0

    def ranges(self, s: IntervalSet, t: float):
        bounds = s.bounds()
        if bounds is not None and t * bounds[1] > self.horizon * (1 + 1e-12):
            raise ValueError(f"t*A reaches {t * bounds[1]}, beyond horizon {self.horizon}")
        out = []
        for lo, hi in s.intervals:
            start = int(np.searchsorted(self.arrivals, t * float(lo), side="left"))
            stop = int(np.searchsorted(self.arrivals, t * float(hi), side="right"))
            if start < stop:
                out.append((start, stop))
        return out


@dataclass(frozen=True)
class CountResult:
    raw_count: int
    expectation: float
    standardized: float
    degenerate: bool = False


def _dense(labels):
    if labels.size == 0:
        return np.empty(0, dtype=np.int64)
    _, inverse = np.unique(labels, return_inverse=True)
    return inverse.astype(np.int64).ravel()


# ----------------------------------------------------------------------
# simulation


def simulate_fixed(model: PowerLawPmf, n: int, rng: np.random.Generator) -> BallSequence:
    if n < 1:
        raise ValueError("n must be at least 1")
    return BallSequence(n, model.sample(rng, n))


def simulate_poisson(model: PowerLawPmf, horizon: float, rng: np.random.Generator) -> PoissonRealization:
    """Unit-rate Poisson arrivals on ``(0, horizon]`` with i.i.d. urn marks."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    size = int(rng.poisson(horizon))
    while True:
        times = np.sort(horizon * (1.0 - rng.random(size)))
        if size < 2 or np.all(np.diff(times) > 0):
            break
    return PoissonRealization(float(horizon), times, model.sample(rng, size))


@dataclass(frozen=True)
class PoissonCells:
    """Poissonized occupancies on disjoint cells of the time axis.

    By Poisson splitting, urn ``i`` receives independent ``Poisson(t p_i
    |C|)`` balls in each cell ``C``.  Urns ``1..head_urns`` are stored as a
    ``(cells, head_urns)`` count matrix; the few arrivals landing in larger
    urns are kept as explicit labels per cell.  This is the same joint law
    as the marked stream restricted to the cells.
    """

    t: float
    head: np.ndarray = field(repr=False)
    tail_labels: tuple = field(repr=False)

    def at_least(self, cells: Sequence[int], k: int) -> int:
        cells = list(cells)
        if not cells:
            return 0
        occupancy = self.head[cells].sum(axis=0)
        hits = int(np.count_nonzero(occupancy >= k))
        tail = np.concatenate([self.tail_labels[c] for c in cells])
        if tail.size:
            _, mult = np.unique(tail, return_counts=True)
            hits += int(np.count_nonzero(mult >= k))
        return hits


def simulate_poisson_cells(model: PowerLawPmf, t: float, cell_measures: Sequence[float],
                           rng: np.random.Generator, head_urns: int | None = None) -> PoissonCells:
    measures = np.asarray(cell_measures, dtype=np.float64)
    if np.any(measures < 0):
        raise ValueError("cell measures must be nonnegative")
    total = float(measures.sum())
    if head_urns is None:
        # about ten expected arrivals beyond the head
        beta = model.exponent
        scale = t * max(total, 1e-300) * model.normalizer / (10.0 * (beta - 1.0))
        head_urns = int(min(max(16.0, scale ** (1.0 / (beta - 1.0))), 10**5))
    p = model.pmf(np.arange(1, head_urns + 1))
    lam = t * measures[:, None] * p[None, :]
    head = rng.poisson(lam)
    tail_rate = t * model.survival(head_urns)
    tails = []
    for mu in measures:
        size = int(rng.poisson(tail_rate * mu))
        tails.append(model.sample_beyond(rng, size, head_urns))
    return PoissonCells(float(t), head, tuple(tails))


# ----------------------------------------------------------------------
# counting


def _pack(ranges_per_query):
    starts, stops, qptr = [], [], [0]
    for ranges in ranges_per_query:
        for a, b in ranges:
            starts.append(a)
            stops.append(b)
        qptr.append(len(starts))
    as_arr = lambda v: np.asarray(v, dtype=np.int64)
    return as_arr(starts), as_arr(stops), as_arr(qptr)


def _run_queries(urn, n_urns, ranges, queries, kernels=None):
    kernels = kernels or _backend.impl
    expanded, ks = [], []
    for q, r in zip(queries, ranges):
        expanded.append(r)
        ks.append(q.k)
        if q.mode == EXACT:
            expanded.append(r)
            ks.append(q.k + 1)
    starts, stops, qptr = _pack(expanded)
    raw = kernels.at_least_counts(urn, starts, stops, qptr, np.asarray(ks, dtype=np.int64), n_urns)
    out = np.empty(len(queries), dtype=np.int64)
    j = 0
    for i, q in enumerate(queries):
        if q.mode == EXACT:
            out[i] = raw[j] - raw[j + 1]
            j += 2
        else:
            out[i] = raw[j]
            j += 1
    return out


def batch_count(seq: BallSequence, queries: Sequence[Query], kernels=None) -> np.ndarray:
    """Counts ``R*_{nA,k}`` (or ``R_{nA,k}``) for every query in one pass per query set."""
    if not queries:
        raise ValueError("queries must be nonempty")
    ranges = [seq.ranges(q.set) for q in queries]
    return _run_queries(seq.urn_index, seq.n_urns, ranges, queries, kernels)


def batch_count_poisson(real: PoissonRealization, t: float, queries: Sequence[Query],
                        kernels=None) -> np.ndarray:
    if not queries:
        raise ValueError("queries must be nonempty")
    ranges = [real.ranges(q.set, t) for q in queries]
    return _run_queries(real.urn_index, real.n_urns, ranges, queries, kernels)


def count(seq: BallSequence, q: Query) -> int:
    return int(batch_count(seq, [q])[0])


def count_poisson(real: PoissonRealization, t: float, q: Query) -> int:
    return int(batch_count_poisson(real, t, [q])[0])


def multiplicity_counts(seq: BallSequence, s: IntervalSet) -> np.ndarray:
    """``h[j]`` = number of urns holding exactly ``j`` balls from ``nA`` (``h[0]`` unused)."""
    pieces = [seq.urn_index[a:b] for a, b in seq.ranges(s)]
    if not pieces:
        return np.zeros(1, dtype=np.int64)
    members = np.concatenate(pieces)
    mult = np.bincount(members, minlength=max(seq.n_urns, 1))
    hist = np.bincount(mult)
    hist[0] = 0
    return hist


# ----------------------------------------------------------------------
# standardization


def expected_count(model: PowerLawPmf, n_or_t: float, q: Query, mode: str = "fixed",
                   eps: float = 1e-9) -> float:
    """Exact mean of the counting statistic under the fixed-n or Poissonized scheme."""
    if mode == "fixed":
        m = q.set.integer_count(int(n_or_t))
        if q.mode == EXACT:
            return model.binomial_mean_exact_k(m, q.k, eps)
        return model.binomial_mean_at_least(m, q.k, eps)
    if mode == "poissonized":
        mean_t = n_or_t * float(q.set.measure)
        if q.mode == EXACT:
            return model.mean_exact_k(mean_t, q.k, eps)
        return model.mean_at_least_k(mean_t, q.k, eps)
    raise ValueError(f"mode must be 'fixed' or 'poissonized', got {mode!r}")


def standardize(model: PowerLawPmf, raw: int, n_or_t: float, q: Query,
                mode: str = "fixed") -> CountResult:
    """Center by the exact mean and scale by ``sqrt(M(n))``."""
    expectation = expected_count(model, n_or_t, q, mode)
    scale = model.mean_occupied(n_or_t)
    if scale <= 0:
        return CountResult(int(raw), expectation, math.nan, degenerate=True)
    return CountResult(int(raw), expectation, (raw - expectation) / math.sqrt(scale))


def weighted_Q(model: PowerLawPmf, seq: BallSequence, a: Sequence[float], t) -> float:
    """Weighted small-count statistic ``M(n)^(-1/2) sum_i a_i (R_{nA,i} - E R_{nA,i})``.

    ``a[0]`` is the weight of ``k = 0`` and must be zero; weights beyond the
    given length are taken as zero.  ``t`` is an :class:`Endpoints` or an
    :class:`IntervalSet`.
    """
    weights = np.asarray(a, dtype=np.float64)
    if weights.size and weights[0] != 0:
        raise ValueError("a_0 must be zero")
    s = from_endpoints(t) if isinstance(t, Endpoints) else t
    hist = multiplicity_counts(seq, s)
    m = s.integer_count(seq.n)
    top = min(weights.size - 1, m)
    total = 0.0
    for i in range(1, top + 1):
        if weights[i] == 0:
            continue
        observed = hist[i] if i < hist.size else 0
        total += weights[i] * (observed - model.binomial_mean_exact_k(m, i))
    return total / math.sqrt(model.mean_occupied(seq.n))


def dump_realization_csv(real, path) -> None:
    """Write ``index_or_time,urn_label`` rows for audit."""
    if isinstance(real, BallSequence):
        keys = (str(m) for m in range(1, real.n + 1))
    else:
        keys = (repr(float(x)) for x in real.arrivals)
    with open(path, "w", newline="\n") as fh:
        fh.write("index_or_time,urn_label\n")
        for key, label in zip(keys, real.labels):
            fh.write(f"{key},{label}\n")
