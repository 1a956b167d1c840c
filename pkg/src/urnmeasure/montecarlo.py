"""Replication harness comparing simulated occupancy statistics with their limits.

Every replication draws from its own generator seeded by
``SeedSequence([master_seed, index])``, and results are reassembled in
replication order, so a report does not depend on the number of workers.

Rows of a report come in three kinds:

``z``
    an estimate with a standard error; passes iff ``|z| <= threshold``.
``check``
    an exact or pass/fail criterion (violation counts, KS p-values,
    coverage fractions); ``z_score`` is NaN.
``info``
    reported only, not part of the verdict.
"""
from __future__ import annotations

import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import _backend
from .distributions import PowerLawPmf
from .intervals import Endpoints, IntervalSet, from_endpoints
from .kernels import (
    DEFAULT_TOL,
    cross_kernel,
    forward_kernel,
    kstar,
    q_limit_cov,
)
from .occupancy import (
    AT_LEAST,
    EXACT,
    BallSequence,
    Query,
    batch_count,
    batch_count_poisson,
    expected_count,
    simulate_fixed,
    simulate_poisson,
    simulate_poisson_cells,
    weighted_Q,
)

__all__ = [
    "ExperimentConfig",
    "Row",
    "Report",
    "replicate",
    "replication_rng",
    "theoretical_cov",
    "lattice_ks",
    "run_clt",
    "run_fclt_grid",
    "run_slln",
    "run_bounds",
    "run_poisson_cov_identity",
    "run_weighted",
    "subadditivity_witness",
]

DEFAULT_THRESHOLD = 4.0
KS_ALPHA = 0.01
PATH_NOTE = ("finite-dimensional covariances and marginal normality are checked; "
             "tightness of the full path is not directly testable")


def _as_query(q) -> Query:
    if isinstance(q, Query):
        return q
    s, k = q[0], q[1]
    mode = q[2] if len(q) > 2 else AT_LEAST
    if isinstance(s, Endpoints):
        s = from_endpoints(s)
    return Query(s, int(k), mode)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters shared by the experiment runners.

    ``queries`` accepts :class:`Query` objects or ``(set, k[, mode])`` tuples
    where ``set`` is an :class:`IntervalSet` or :class:`Endpoints`.
    """

    theta: float
    n_or_t: float
    replications: int
    queries: tuple = ()
    master_seed: int = 0
    workers: int = 1
    mode: str = "fixed"
    threshold: float = DEFAULT_THRESHOLD
    dump_csv: Optional[str] = None

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must lie in (0, 1)")
        if self.n_or_t <= 0:
            raise ValueError("n_or_t must be positive")
        if self.replications < 2:
            raise ValueError("replications must be at least 2")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.mode not in ("fixed", "poissonized"):
            raise ValueError("mode must be 'fixed' or 'poissonized'")
        object.__setattr__(self, "queries", tuple(_as_query(q) for q in self.queries))

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "queries"}
        out["queries"] = [{"set": str(q.set), "k": q.k, "mode": q.mode} for q in self.queries]
        return out


@dataclass
class Row:
    name: str
    empirical: float
    theoretical: float
    std_error: float
    z_score: float
    passed: Optional[bool]
    kind: str = "z"
    note: str = ""


def _z_row(name, empirical, theoretical, se, threshold, note="") -> Row:
    empirical, theoretical, se = float(empirical), float(theoretical), float(se)
    if se > 0:
        z = (empirical - theoretical) / se
    else:
        z = 0.0 if empirical == theoretical else math.inf
    return Row(name, empirical, theoretical, se, z, bool(abs(z) <= threshold), "z", note)


def _check_row(name, empirical, theoretical, passed, note="", se=math.nan) -> Row:
    return Row(name, float(empirical), float(theoretical), se, math.nan, bool(passed), "check", note)


def _info_row(name, empirical, theoretical=math.nan, se=math.nan, note="") -> Row:
    return Row(name, float(empirical), float(theoretical), float(se), math.nan, None, "info", note)


@dataclass
class Report:
    """Outcome of one experiment."""

    name: str
    rows: list
    threshold: float
    metadata: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(r.passed for r in self.rows if r.passed is not None)

    def row(self, name: str) -> Row:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": "pass" if self.verdict else "fail",
            "threshold": self.threshold,
            "rows": [asdict(r) for r in self.rows],
            "metadata": self.metadata,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), default=_json_default, **kwargs)

    def to_text(self) -> str:
        header = ("name", "empirical", "theoretical", "std_error", "z", "result")
        body = []
        for r in self.rows:
            result = "info" if r.passed is None else ("pass" if r.passed else "FAIL")
            body.append((r.name, _num(r.empirical), _num(r.theoretical), _num(r.std_error),
                         _num(r.z_score), result))
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h)
                  for i, h in enumerate(header)]
        fmt = lambda cells: "  ".join(
            c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))
        lines = [f"# {self.name}: {'PASS' if self.verdict else 'FAIL'}", fmt(header)]
        lines += [fmt(b) for b in body]
        for key, value in self.metadata.items():
            if key != "config":
                lines.append(f"# {key}: {value}")
        lines.append(f"# config: {json.dumps(self.metadata.get('config', {}), default=_json_default)}")
        return "\n".join(lines)


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    return f"{x:.6g}"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, IntervalSet):
        return str(obj)
    raise TypeError(f"not serializable: {type(obj)!r}")


# ----------------------------------------------------------------------
# replication machinery


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for replication ``index``, independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def _run_chunk(task):
    fn, context, seed, start, stop = task
    return [np.asarray(fn(replication_rng(seed, i), context), dtype=np.float64)
            for i in range(start, stop)]


def replicate(fn: Callable, context, replications: int, master_seed: int,
              workers: int = 1, chunk: Optional[int] = None) -> np.ndarray:
    """Stack ``fn(rng_i, context)`` for ``i = 0..replications-1`` row by row.

    ``fn`` must be a module-level function when ``workers > 1``.
    """
    if chunk is None:
        chunk = max(1, min(500, math.ceil(replications / (4 * workers))))
    tasks = [(fn, context, master_seed, a, min(a + chunk, replications))
             for a in range(0, replications, chunk)]
    if workers == 1:
        parts = map(_run_chunk, tasks)
        rows = [r for part in parts for r in part]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [r for part in pool.map(_run_chunk, tasks) for r in part]
    return np.vstack(rows)


def _metadata(config: ExperimentConfig, started: float, **extra) -> dict:
    meta = {
        "config": config.to_dict(),
        "runtime_s": round(time.perf_counter() - started, 3),
        "backend": _backend.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    meta.update(extra)
    return meta


def _dump(path, names, data):
    if not path:
        return
    with open(path, "w", newline="\n") as fh:
        fh.write("replication," + ",".join(names) + "\n")
        for i, row in enumerate(data):
            fh.write(f"{i}," + ",".join(repr(float(x)) for x in row) + "\n")


def _cov_se(x, y):
    """Sample covariance and its standard error from centered products."""
    prod = (x - x.mean()) * (y - y.mean())
    return float(np.cov(x, y, ddof=1)[0, 1]), float(prod.std(ddof=1) / math.sqrt(x.size))


def theoretical_cov(qa: Query, qb: Query, theta: float, tol: float = DEFAULT_TOL) -> float:
    """Limiting covariance of two standardized counts.

    Exact-count queries are expanded into ``R*_k - R*_(k+1)``.
    """
    def levels(q):
        return [(q.k, 1.0)] if q.mode == AT_LEAST else [(q.k, 1.0), (q.k + 1, -1.0)]

    total = 0.0
    for ka, wa in levels(qa):
        for kb, wb in levels(qb):
            total += wa * wb * kstar(qa.set, ka, qb.set, kb, theta, tol).value
    return total


# ----------------------------------------------------------------------
# CLT


def lattice_ks(counts, center: float, scale: float):
    """KS distance and p-value of integer counts against a discretized normal.

    The reference law puts mass ``Phi((k + 1/2 - center)/scale) -
    Phi((k - 1/2 - center)/scale)`` on each integer ``k``, i.e. the matching
    normal with a continuity correction.  Both distribution functions are
    step functions jumping at the integers, so the supremum is attained on
    the integers spanned by the sample.
    """
    counts = np.sort(np.asarray(counts, dtype=np.float64))
    if np.any(counts != np.round(counts)):
        raise ValueError("counts must be integers")
    ks = np.arange(counts[0] - 1, counts[-1] + 1)
    emp = np.searchsorted(counts, ks, side="right") / counts.size
    ref = stats.norm.cdf((ks + 0.5 - center) / scale)
    dist = float(max(np.max(np.abs(emp - ref)), ref[0], 1.0 - ref[-1]))
    return dist, float(stats.kstwo.sf(dist, counts.size))


def _clt_rep(rng, ctx):
    model, queries, scale, mode, means, norm = ctx
    if mode == "fixed":
        raw = batch_count(simulate_fixed(model, int(scale), rng), queries)
    else:
        horizon = scale * max(float(q.set.bounds()[1]) if q.set else 0.0 for q in queries)
        real = simulate_poisson(model, max(horizon, 1e-12), rng)
        raw = batch_count_poisson(real, scale, queries)
    return np.concatenate([(raw - means) / norm, raw])


def run_clt(config: ExperimentConfig) -> Report:
    """Covariances and marginal laws of standardized counts versus the Gaussian limit."""
    started = time.perf_counter()
    model = PowerLawPmf(config.theta)
    notes = [PATH_NOTE]
    queries = []
    for q in config.queries:
        if float(q.set.measure) == 0.0:
            notes.append(f"query {q.set} k={q.k} excluded: zero-measure set")
        else:
            queries.append(q)
    if not queries:
        raise ValueError("no nondegenerate queries")
    means = np.array([expected_count(model, config.n_or_t, q, config.mode) for q in queries])
    norm = math.sqrt(model.mean_occupied(config.n_or_t))
    ctx = (model, queries, config.n_or_t, config.mode, means, norm)
    data = replicate(_clt_rep, ctx, config.replications, config.master_seed, config.workers)
    m = len(queries)
    y, raw = data[:, :m], data[:, m:]
    label = lambda q: f"{q.set}|k={q.k}" + ("|exact" if q.mode == EXACT else "")
    _dump(config.dump_csv, [f"Y[{label(q)}]" for q in queries], y)

    rows = []
    for a in range(m):
        for b in range(a, m):
            emp, se = _cov_se(y[:, a], y[:, b])
            theory = theoretical_cov(queries[a], queries[b], config.theta)
            name = f"var[{label(queries[a])}]" if a == b else \
                f"cov[{label(queries[a])},{label(queries[b])}]"
            rows.append(_z_row(name, emp, theory, se, config.threshold))
    for a, q in enumerate(queries):
        sd = math.sqrt(max(theoretical_cov(q, q, config.theta), 0.0))
        if sd > 0:
            p = lattice_ks(raw[:, a], means[a], sd * norm)[1]
            rows.append(_check_row(f"ks_pvalue[{label(q)}]", p, KS_ALPHA, p > KS_ALPHA,
                                   "KS against N(0, kernel variance) on the integer lattice"))
            p_raw = stats.kstest(y[:, a], "norm", args=(0.0, sd)).pvalue
            rows.append(_info_row(f"ks_pvalue_uncorrected[{label(q)}]", p_raw, KS_ALPHA,
                                  note="continuous KS ignores the lattice of the counts"))
        mean_y = y[:, a].mean()
        rows.append(_info_row(f"bias[{label(q)}]", mean_y, 0.0,
                              y[:, a].std(ddof=1) / math.sqrt(y.shape[0]),
                              "finite-n bias of the standardized count, not corrected"))
        if q.mode == AT_LEAST:
            var_raw = raw[:, a].var(ddof=1)
            centered = (raw[:, a] - raw[:, a].mean()) ** 2
            se = centered.std(ddof=1) / math.sqrt(raw.shape[0])
            rows.append(_check_row(f"var_le_mean[{label(q)}]", var_raw, means[a],
                                   var_raw <= means[a] + config.threshold * se,
                                   "Var(R) <= E R", se))
    return Report(f"clt[{config.mode}]", rows, config.threshold,
                  _metadata(config, started, notes=notes))


# ----------------------------------------------------------------------
# FCLT


def _fclt_rep(rng, ctx):
    model, n, queries, means, norm = ctx
    raw = batch_count(simulate_fixed(model, n, rng), queries)
    return (raw - means) / norm


def run_fclt_grid(config: ExperimentConfig, grid_step: float = 0.1,
                  cross_points: Sequence = ((0.75, 0.75), (0.3, 0.5))) -> Report:
    """Forward-process covariance surface and forward-backward covariances.

    The forward process at ``t`` counts distinct urns among balls
    ``1..floor(nt)``; the backward process counts them among the last
    ``floor(nt)`` balls, i.e. over ``[1-t, 1]``.
    """
    started = time.perf_counter()
    steps = round(1.0 / grid_step)
    if steps < 1 or abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must divide 1")
    model = PowerLawPmf(config.theta)
    n = int(config.n_or_t)
    grid = [Fraction(j, steps) for j in range(1, steps + 1)]
    # cross points are given as decimals; keep them exact
    cross = [(Fraction(str(s)), Fraction(str(t))) for s, t in cross_points]
    fwd_times = sorted(set(grid) | {s for s, _ in cross})
    bwd_times = sorted({t for _, t in cross})
    queries = [Query(IntervalSet([(0, t)])) for t in fwd_times]
    queries += [Query(IntervalSet([(1 - t, 1)])) for t in bwd_times]
    means = np.array([expected_count(model, n, q) for q in queries])
    norm = math.sqrt(model.mean_occupied(n))
    data = replicate(_fclt_rep, (model, n, queries, means, norm), config.replications,
                     config.master_seed, config.workers)
    nf = len(fwd_times)
    fcol = {t: i for i, t in enumerate(fwd_times)}
    bcol = {t: nf + i for i, t in enumerate(bwd_times)}
    _dump(config.dump_csv, [f"Z({float(t):g})" for t in fwd_times]
          + [f"Z'({float(t):g})" for t in bwd_times], data)

    rows, zs, devs = [], [], []
    for i, s in enumerate(grid):
        for t in grid[i:]:
            emp, se = _cov_se(data[:, fcol[s]], data[:, fcol[t]])
            theory = forward_kernel(float(s), float(t), config.theta)
            row = _z_row(f"forward[{float(s):g},{float(t):g}]", emp, theory, se, config.threshold)
            zs.append(abs(row.z_score))
            devs.append(abs(emp - theory))
            # judged collectively through the coverage fraction below
            row.passed, row.kind = None, "info"
            rows.append(row)
    frac = float(np.mean(np.asarray(zs) <= config.threshold))
    rows.append(_check_row("forward_fraction_within", frac, 0.95, frac >= 0.95,
                           f"fraction of {len(zs)} grid pairs with |z| <= {config.threshold:g}"))
    rows.append(_info_row("forward_max_abs_deviation", max(devs)))
    for s, t in cross:
        emp, se = _cov_se(data[:, fcol[s]], data[:, bcol[t]])
        theory = cross_kernel(float(s), float(t), config.theta)
        rows.append(_z_row(f"cross[{float(s):g},{float(t):g}]", emp, theory, se, config.threshold))
    return Report("fclt_grid", rows, config.threshold,
                  _metadata(config, started, grid_step=grid_step, notes=[PATH_NOTE]))


# ----------------------------------------------------------------------
# SLLN


def _slln_rep(rng, ctx):
    model, n_grid, queries = ctx
    labels = model.sample(rng, n_grid[-1])
    out = []
    for n in n_grid:
        seq = BallSequence(n, labels[:n])
        base = [Query(q.set, 1) for q in queries]
        out.append(batch_count(seq, list(queries) + base))
    return np.concatenate(out)


def run_slln(config: ExperimentConfig, n_grid: Sequence[int],
             band: float = 0.05, min_fraction: float = 0.99, warmup: int = 10**3) -> Report:
    """Single-path ratios ``R*_{nA,k} / E R*_{nA,k}`` along an increasing ``n`` grid.

    Each replication is one path.  At the final ``n`` the fraction of paths
    whose ratio lies in ``[1 - band, 1 + band]`` must reach ``min_fraction``.
    Grid points ``n <= warmup`` are reported only.
    """
    started = time.perf_counter()
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])) or not n_grid:
        raise ValueError("n_grid must be increasing")
    model = PowerLawPmf(config.theta)
    queries = list(config.queries)
    m = len(queries)
    data = replicate(_slln_rep, (model, n_grid, queries), config.replications,
                     config.master_seed, config.workers)
    data = data.reshape(config.replications, len(n_grid), 2 * m)
    rows = []
    for qi, q in enumerate(queries):
        tag = f"{q.set}|k={q.k}"
        for ni, n in enumerate(n_grid):
            mean = expected_count(model, n, q)
            ratios = data[:, ni, qi] / mean
            se = ratios.std(ddof=1) / math.sqrt(ratios.size)
            note = "warm-up, reported only" if n <= warmup else ""
            sanity = 2.5 / math.sqrt(mean)
            rows.append(_info_row(f"mean_ratio[{tag}|n={n}]", ratios.mean(), 1.0, se,
                                  note or f"Chebyshev sanity band half-width {sanity:.3g}"))
        final = data[:, -1, qi] / expected_count(model, n_grid[-1], q)
        inside = float(np.mean(np.abs(final - 1.0) <= band))
        rows.append(_check_row(f"paths_within_band[{tag}|n={n_grid[-1]}]", inside, min_fraction,
                               inside >= min_fraction,
                               f"band [{1 - band:g}, {1 + band:g}]"))
        rows.append(_info_row(f"ratio_sd[{tag}|n={n_grid[-1]}]", final.std(ddof=1)))
        violations = int(np.sum(data[:, :, qi] > data[:, :, m + qi]))
        rows.append(_check_row(f"monotone_in_k[{tag}]", violations, 0, violations == 0,
                               "R*_k <= R*_1 on every path and grid point"))
    return Report("slln", rows, config.threshold,
                  _metadata(config, started, n_grid=n_grid, band=band))


# ----------------------------------------------------------------------
# almost-sure inequalities


def subadditivity_witness() -> dict:
    """Two balls in one urn: level-two counts are not subadditive.

    The cover ``[0,1] = [0,1/2] u [1,1]`` separates the two balls (their
    positions are ``1/2`` and ``1``).
    """
    seq = BallSequence(2, np.array([1, 1]))
    whole, left, right = IntervalSet([(0, 1)]), IntervalSet([(0, Fraction(1, 2))]), \
        IntervalSet([(1, 1)])
    counts = batch_count(seq, [Query(whole, 2), Query(left, 2), Query(right, 2)])
    return {"whole": int(counts[0]), "left": int(counts[1]), "right": int(counts[2]),
            "reproduced": bool(counts[0] == 1 and counts[1] == 0 and counts[2] == 0)}


def _random_set(rng, n, max_pieces=3) -> IntervalSet:
    d = int(rng.integers(1, max_pieces + 1))
    pts = []
    for _ in range(2 * d):
        # half the endpoints sit exactly on ball positions m/n
        if rng.random() < 0.5:
            pts.append(Fraction(int(rng.integers(0, n + 1)), n))
        else:
            pts.append(float(rng.random()))
    pts.sort()
    return IntervalSet([(pts[2 * i], pts[2 * i + 1]) for i in range(d)])


def _random_endpoints(rng, d, den=64) -> Endpoints:
    lows, highs = [], []
    for _ in range(d):
        a, b = sorted(int(x) for x in rng.integers(0, den + 1, size=2))
        lows.append(Fraction(a, den))
        highs.append(Fraction(b, den))
    return Endpoints(tuple(lows), tuple(highs))


def _mask(size, ranges):
    mask = np.zeros(size, dtype=bool)
    for a, b in ranges:
        mask[a:b] = True
    return mask


def _bounds_rep(rng, ctx):
    (model,) = ctx
    v = {}

    def bad(name, cond):
        v[name] = v.get(name, 0) + int(bool(cond))

    # fixed-n realization
    n = int(rng.integers(1, 300))
    seq = simulate_fixed(model, n, rng)
    k = int(rng.integers(1, 5))
    A = _random_set(rng, n)
    C1, C2 = _random_set(rng, n), _random_set(rng, n)
    C3 = A - (C1 | C2)
    B = A | _random_set(rng, n)
    a, b = sorted(rng.random(2))
    full = IntervalSet([(0, 1)])
    qs = [Query(A, k), Query(A, k + 1), Query(full, k), Query(IntervalSet.empty(), k),
          Query(A, 1), Query(C1, 1), Query(C2, 1), Query(C3, 1), Query(B, k),
          Query(IntervalSet([(0, b)]), 1), Query(IntervalSet([(0, a)]), 1),
          Query(IntervalSet([(a, b)]), 1), Query(A, 2), Query(C1, 2), Query(C2, 2), Query(C3, 2)]
    r = batch_count(seq, qs)
    bad("nonnegative", r.min() < 0)
    bad("empty_set_zero", r[3] != 0)
    bad("level_monotone", not (r[1] <= r[0] <= r[2]) or k * r[2] > n)
    bad("set_monotone", r[0] > r[8])
    bad("subadditive_k1", r[4] > r[5] + r[6] + r[7])
    bad("increment_k1", r[9] - r[10] > r[11])
    sub2 = int(r[12] > r[13] + r[14] + r[15])
    # Jordan count: #(nA) differs from n|A| by at most the number of pieces
    bad("jordan_count", abs(A.integer_count(n) - n * float(A.measure)) > len(A) + 1e-9)

    # Poissonized realization
    t = float(rng.uniform(1.0, 300.0))
    real = simulate_poisson(model, t, rng)
    k = int(rng.integers(1, 5))
    A, B = _random_set(rng, n), _random_set(rng, n)
    C1, C2 = _random_set(rng, n), _random_set(rng, n)
    C3 = A - (C1 | C2)
    qs = [Query(A, k), Query(A, k + 1), Query(full, k), Query(B, k), Query(A ^ B, 1),
          Query(A, 1), Query(C1, 1), Query(C2, 1), Query(C3, 1), Query(IntervalSet.empty(), k)]
    r = batch_count_poisson(real, t, qs)
    size = real.labels.size
    bad("poisson_nonnegative", r.min() < 0)
    bad("poisson_empty_set_zero", r[9] != 0)
    bad("poisson_level_monotone", not (r[1] <= r[0] <= r[2]) or k * r[2] > size)
    bad("poisson_subadditive_k1", r[5] > r[6] + r[7] + r[8])
    bad("symmetric_difference_bound", abs(int(r[3]) - int(r[0])) > r[4])
    # the same bound with the exact point-set symmetric difference
    urn = real.urn_index
    ma, mb = _mask(size, real.ranges(A, t)), _mask(size, real.ranges(B, t))
    mx = ma ^ mb
    exact_delta = np.unique(urn[mx]).size
    bad("symmetric_difference_bound_exact", abs(int(r[3]) - int(r[0])) > exact_delta)
    if size:
        u = real.n_urns
        ca, cb = np.bincount(urn[ma], minlength=u), np.bincount(urn[mb], minlength=u)
        cx = np.bincount(urn[mx], minlength=u)
        lhs = np.abs((cb >= k).astype(int) - (ca >= k).astype(int))
        bad("per_urn_indicator_bound", np.any(lhs > (cx >= 1)))

    # interval-endpoint geometry
    d = int(rng.integers(1, 4))
    s, tt = _random_endpoints(rng, d), _random_endpoints(rng, d)
    delta = from_endpoints(s) ^ from_endpoints(tt)
    bad("delta_measure", delta.measure > 2 * d * s.distance(tt))
    cover = IntervalSet([tuple(sorted((x, y))) for x, y in
                         zip(s.lows + s.highs, tt.lows + tt.highs)])
    bad("delta_containment", not (delta - cover).is_empty())

    names = _BOUND_NAMES
    return [v.get(nm, 0) for nm in names] + [sub2]


_BOUND_NAMES = (
    "nonnegative", "empty_set_zero", "level_monotone", "set_monotone", "subadditive_k1",
    "increment_k1", "jordan_count", "poisson_nonnegative", "poisson_empty_set_zero",
    "poisson_level_monotone", "poisson_subadditive_k1", "symmetric_difference_bound",
    "symmetric_difference_bound_exact", "per_urn_indicator_bound", "delta_measure",
    "delta_containment",
)


def run_bounds(config: ExperimentConfig) -> Report:
    """Randomized almost-sure inequalities; any violation fails the report.

    ``config.replications`` is the number of instances; ``n_or_t`` is unused.
    """
    started = time.perf_counter()
    model = PowerLawPmf(config.theta, table_cutoff=10**4)
    data = replicate(_bounds_rep, (model,), config.replications, config.master_seed,
                     config.workers)
    totals = data.sum(axis=0)
    rows = [_check_row(f"violations[{nm}]", totals[i], 0, totals[i] == 0)
            for i, nm in enumerate(_BOUND_NAMES)]
    witness = subadditivity_witness()
    rows.append(_check_row("level_two_witness", witness["whole"],
                           witness["left"] + witness["right"], witness["reproduced"],
                           "two balls in one urn; cover [0,1/2] u [1,1]"))
    rows.append(_info_row("level_two_subadditivity_failures", totals[-1], note=(
        "level-two counts are not subadditive; failures are expected")))
    return Report("bounds", rows, config.threshold,
                  _metadata(config, started, instances=config.replications))


# ----------------------------------------------------------------------
# finite-t covariance identity


def _atoms(sets):
    """Disjoint cells from the endpoints of ``sets`` and each set's cell indices."""
    pts = sorted({0.0, 1.0, *(float(x) for s in sets for iv in s.intervals for x in iv)})
    cells = [(a, b) for a, b in zip(pts[:-1], pts[1:]) if b > a]
    members = [[i for i, (a, b) in enumerate(cells) if 0.5 * (a + b) in s] for s in sets]
    return np.array([b - a for a, b in cells]), members


def _cov_rep(rng, ctx):
    model, t, measures, members = ctx
    cells = simulate_poisson_cells(model, t, measures, rng)
    return [cells.at_least(m, 1) for m in members]


def run_poisson_cov_identity(config: ExperimentConfig) -> Report:
    """Covariance of Poissonized occupied-urn counts on two sets at fixed ``t``.

    The exact value is ``M(t(|A1|+|A2|)) - M(t|A1 u A2|)``.  Replications use
    independent Poisson counts per urn and per disjoint cell, which has the
    same joint law as the marked stream.
    """
    started = time.perf_counter()
    if len(config.queries) != 2 or any(q.k != 1 for q in config.queries):
        raise ValueError("expected two queries with k = 1")
    model = PowerLawPmf(config.theta)
    A1, A2 = config.queries[0].set, config.queries[1].set
    t = float(config.n_or_t)
    measures, members = _atoms([A1, A2])
    data = replicate(_cov_rep, (model, t, measures, members), config.replications,
                     config.master_seed, config.workers)
    _dump(config.dump_csv, ["R1", "R2"], data)
    x, y = data[:, 0], data[:, 1]
    m1, m2 = float(A1.measure), float(A2.measure)
    mu = float((A1 | A2).measure)
    M = model.mean_occupied
    rows = []
    emp, se = _cov_se(x, y)
    rows.append(_z_row("cov", emp, M(t * (m1 + m2)) - M(t * mu), se, config.threshold))
    for name, col, m in (("A1", x, m1), ("A2", y, m2)):
        rows.append(_z_row(f"mean[{name}]", col.mean(), M(t * m),
                           col.std(ddof=1) / math.sqrt(col.size), config.threshold))
        emp, se = _cov_se(col, col)
        rows.append(_z_row(f"var[{name}]", emp, M(2 * t * m) - M(t * m), se, config.threshold))
    return Report("poisson_cov_identity", rows, config.threshold, _metadata(config, started))


# ----------------------------------------------------------------------
# weighted statistic


def _weighted_rep(rng, ctx):
    model, n, a, s = ctx
    return [weighted_Q(model, simulate_fixed(model, n, rng), a, s)]


def run_weighted(config: ExperimentConfig, a: Sequence[float]) -> Report:
    """Variance of the weighted small-count statistic versus its limit.

    Uses the first query's set; its level is ignored.
    """
    started = time.perf_counter()
    model = PowerLawPmf(config.theta)
    s = config.queries[0].set
    n = int(config.n_or_t)
    data = replicate(_weighted_rep, (model, n, list(a), s), config.replications,
                     config.master_seed, config.workers)
    q = data[:, 0]
    limit = q_limit_cov(a, s, s, config.theta)
    emp, se = _cov_se(q, q)
    rows = [_z_row("var[Q]", emp, limit.value, se, config.threshold),
            _info_row("mean[Q]", q.mean(), 0.0, q.std(ddof=1) / math.sqrt(q.size)),
            _info_row("truncation_tail", limit.tail_estimate)]
    return Report("weighted", rows, config.threshold,
                  _metadata(config, started, weights=list(map(float, a))))
