"""Distinct-word processes of a text and a circular homogeneity scan.

Words are balls and dictionary entries are urns.  For a text of ``n``
words, ball ``m`` sits at position ``m/n`` in ``(0, 1]`` and every window is
a closed interval.  Consequently the forward count over ``[0, 0]`` is zero
while the backward count over ``[1, 1]`` is one (it holds the last word).

The circular field compares the distinct-word count on the forward arc of
length ``t`` starting at ``s`` with the count on the backward arc

    U_n(s, t) = R*(n A(s,t)) - R*(n B(s,t)),

and the homogeneity statistic is the midpoint Riemann sum of
``U_n(s,t)**2 / R_n`` over the unit square.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _backend
from .distributions import PowerLawPmf
from .intervals import IntervalSet, circular_arcs
from .montecarlo import replicate
from .occupancy import BallSequence, Query, batch_count

__all__ = [
    "TokenSeq",
    "ScanResult",
    "tokenize",
    "theta_hat",
    "forward_backward",
    "circular_field",
    "homogeneity_stat",
    "p_value",
    "PERMUTATION",
    "PARAMETRIC",
]

PERMUTATION = "permutation"
PARAMETRIC = "parametric"
DEFAULT_GRID = 0.01
MIN_RESAMPLES = 199
THETA_CLAMP = (1e-3, 1.0 - 1e-3)

# maximal runs of letters (any script); digits, underscores and punctuation separate
_WORD = re.compile(r"[^\W\d_]+")


@dataclass(frozen=True)
class TokenSeq:
    """Word identifiers ``1..V`` in text order together with the vocabulary.

    ``vocabulary[i - 1]`` is the word with identifier ``i``; identifiers are
    assigned in order of first appearance.
    """

    tokens: np.ndarray = field(repr=False)
    vocabulary: tuple = field(default=(), repr=False)

    def __post_init__(self):
        tokens = np.asarray(self.tokens, dtype=np.int64)
        if tokens.ndim != 1:
            raise ValueError("tokens must be a vector")
        if tokens.size and tokens.min() < 1:
            raise ValueError("token identifiers start at 1")
        tokens.setflags(write=False)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "TokenSeq":
        ids, vocab, out = {}, [], []
        for w in words:
            i = ids.get(w)
            if i is None:
                vocab.append(w)
                i = ids[w] = len(vocab)
            out.append(i)
        return cls(np.asarray(out, dtype=np.int64), tuple(vocab))

    @classmethod
    def from_labels(cls, labels) -> "TokenSeq":
        """Relabel arbitrary positive integers densely by first appearance."""
        labels = np.asarray(labels, dtype=np.int64)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(1, first.size + 1)
        return cls(rank[inverse.ravel()])

    @property
    def n(self) -> int:
        return int(self.tokens.size)

    @property
    def vocabulary_size(self) -> int:
        return int(self.tokens.max()) if self.tokens.size else 0

    @property
    def words(self) -> list:
        if not self.vocabulary:
            raise ValueError("sequence has no vocabulary")
        return [self.vocabulary[i - 1] for i in self.tokens]

    def with_tokens(self, tokens) -> "TokenSeq":
        return TokenSeq(tokens, self.vocabulary)

    def balls(self) -> BallSequence:
        return BallSequence(self.n, self.tokens)


def tokenize(text: str, lowercase: bool = True) -> TokenSeq:
    """Split text into maximal runs of alphabetic characters.

    >>> tokenize("The cat, the CAT!").words
    ['the', 'cat', 'the', 'cat']
    """
    if lowercase:
        text = text.lower()
    words = _WORD.findall(text)
    if not words:
        raise ValueError("text contains no words")
    return TokenSeq.from_words(words)


def _require_nonempty(seq: TokenSeq):
    if seq.n < 1:
        raise ValueError("empty token sequence")


def theta_hat(seq: TokenSeq, clamp: bool = True) -> float:
    """Fraction of distinct words that occur exactly once.

    With ``clamp`` the value is restricted to ``[0.001, 0.999]`` so that it
    can parametrize a power law.
    """
    _require_nonempty(seq)
    mult = np.bincount(seq.tokens)
    distinct = np.count_nonzero(mult)
    ratio = np.count_nonzero(mult == 1) / distinct
    if clamp:
        ratio = min(max(ratio, THETA_CLAMP[0]), THETA_CLAMP[1])
    return float(ratio)


def _grid_steps(grid_step: float) -> int:
    if not (0.0 < grid_step <= 1.0):
        raise ValueError("grid_step must lie in (0, 1]")
    steps = round(1.0 / grid_step)
    if abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must divide 1")
    return steps


def forward_backward(seq: TokenSeq, grid_step: float = 0.1):
    """Forward and backward distinct-word counts on ``t_j = j * grid_step``.

    ``R_n(t)`` counts words in positions ``[0, t]`` and ``R'_n(t)`` in
    ``[1 - t, 1]``; both arrays have ``1/grid_step + 1`` entries.
    """
    _require_nonempty(seq)
    steps = _grid_steps(grid_step)
    ts = [Fraction(j, steps) for j in range(steps + 1)]
    queries = [Query(IntervalSet([(0, t)])) for t in ts]
    queries += [Query(IntervalSet([(1 - t, 1)])) for t in ts]
    counts = batch_count(seq.balls(), queries)
    return counts[: steps + 1].copy(), counts[steps + 1:].copy()


def _arc_values(seq: TokenSeq, denom: int, s_idx, t_idx, kernels=None):
    """Counts on forward and backward arcs with ``s = a/denom``, ``t = l/denom``."""
    kernels = kernels or _backend.impl
    table = kernels.arc_distinct_table(np.ascontiguousarray(seq.tokens),
                                       seq.vocabulary_size + 1, denom)
    a = np.asarray(s_idx, dtype=np.int64)[:, None]
    l = np.asarray(t_idx, dtype=np.int64)[None, :]
    fwd = table[np.broadcast_to(a, (a.size, l.size)), a + l]
    # a backward arc that wraps is read one period to the right
    start = np.where(a >= l, a - l, a - l + denom)
    stop = np.where(a >= l, a, a + denom)
    bwd = table[start, np.broadcast_to(stop, start.shape)]
    return fwd, bwd


def _direct_field(seq: TokenSeq, ss, ts):
    balls = seq.balls()
    out = np.empty((len(ss), len(ts)), dtype=np.int64)
    for j, s in enumerate(ss):
        queries = []
        for t in ts:
            fwd, bwd = circular_arcs(s, t)
            queries += [Query(fwd), Query(bwd)]
        c = batch_count(balls, queries)
        out[j] = c[0::2] - c[1::2]
    return out


def circular_field(seq: TokenSeq, grid_step: float = DEFAULT_GRID, midpoint: bool = False,
                   method: str = "table", kernels=None) -> np.ndarray:
    """Matrix ``U[j, l] = U_n(s_j, t_l)``.

    Parameters
    ----------
    midpoint : bool
        Nodes ``(j + 1/2) h`` for ``j < 1/h`` instead of ``j h`` for
        ``j <= 1/h``.
    method : {"table", "direct"}
        ``"table"`` reads every arc from one distinct-count table built in
        ``O(n + (1/h)^2)``; ``"direct"`` counts each arc separately.  Both
        give identical integers.
    """
    _require_nonempty(seq)
    steps = _grid_steps(grid_step)
    if midpoint:
        denom = 2 * steps
        idx = np.arange(1, denom, 2)
    else:
        denom = steps
        idx = np.arange(0, steps + 1)
    if method == "direct":
        nodes = [Fraction(int(i), denom) for i in idx]
        return _direct_field(seq, nodes, nodes)
    if method != "table":
        raise ValueError("method must be 'table' or 'direct'")
    fwd, bwd = _arc_values(seq, denom, idx, idx, kernels)
    return fwd - bwd


def homogeneity_stat(seq: TokenSeq, grid_step: float = DEFAULT_GRID, kernels=None) -> float:
    """``(1/R_n) * sum over cell midpoints of U_n(s,t)^2 * h^2``."""
    _require_nonempty(seq)
    r_n = int(np.count_nonzero(np.bincount(seq.tokens)))
    if r_n == 0:
        raise ValueError("R_n is zero")
    u = circular_field(seq, grid_step, midpoint=True, kernels=kernels)
    h = grid_step
    return float(np.sum(u.astype(np.float64) ** 2) * h * h / r_n)


@dataclass(frozen=True)
class ScanResult:
    theta_hat: float
    R_n: int
    T_n: float
    p_value: float
    grid: float
    method: str
    resamples: int
    seed: int
    n: int = 0
    exceed: int = 0
    null_statistics: Optional[tuple] = field(default=None, repr=False)

    def to_dict(self, include_null: bool = False) -> dict:
        out = asdict(self)
        if not include_null:
            out.pop("null_statistics")
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _perm_rep(rng, ctx):
    tokens, vocab, grid = ctx
    return [homogeneity_stat(TokenSeq(rng.permutation(tokens)), grid)]


def _param_rep(rng, ctx):
    model, n, grid = ctx
    return [homogeneity_stat(TokenSeq.from_labels(model.sample(rng, n)), grid)]


def p_value(seq: TokenSeq, grid_step: float = DEFAULT_GRID, resamples: int = 499,
            method: str = PERMUTATION, seed: int = 0, workers: int = 1,
            keep_null: bool = False) -> ScanResult:
    """Resampling p-value of the homogeneity statistic.

    ``p = (1 + #{T_b >= T_obs}) / (1 + resamples)``.  The permutation null
    shuffles the observed tokens; the parametric null draws synthetic texts
    of the same length from the power law at ``theta_hat``.  Resample ``b``
    uses its own generator derived from ``(seed, b)``.
    """
    _require_nonempty(seq)
    if resamples < MIN_RESAMPLES:
        raise ValueError(f"at least {MIN_RESAMPLES} resamples are required")
    th = theta_hat(seq)
    t_obs = homogeneity_stat(seq, grid_step)
    if method == PERMUTATION:
        null = replicate(_perm_rep, (np.asarray(seq.tokens), (), grid_step), resamples, seed,
                         workers)[:, 0]
    elif method == PARAMETRIC:
        model = PowerLawPmf(th)
        null = replicate(_param_rep, (model, seq.n, grid_step), resamples, seed, workers)[:, 0]
    else:
        raise ValueError(f"method must be {PERMUTATION!r} or {PARAMETRIC!r}")
    exceed = int(np.count_nonzero(null >= t_obs))
    r_n = int(np.count_nonzero(np.bincount(seq.tokens)))
    return ScanResult(th, r_n, t_obs, (1 + exceed) / (1 + resamples), grid_step, method,
                      resamples, int(seed), seq.n, exceed,
                      tuple(map(float, null)) if keep_null else None)
