"""Finite unions of closed intervals on the half line.

All intervals are closed.  Set operations return canonical closed sets: the
difference ``A - B`` is returned as its closure, which changes nothing for
Lebesgue measure or for Poisson arrival times, and only affects integer
counting at the shared boundary points.

Endpoints may be floats or :class:`fractions.Fraction`; the type is preserved
through the set algebra.  Integer counting always compares ``m/n`` against the
exact rational value of each endpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "IntervalSet",
    "Endpoints",
    "from_endpoints",
    "circular_arcs",
    "parse_interval_set",
    "SNAP_TOL",
]

# Gaps up to this width are treated as touching when canonicalizing.
SNAP_TOL = 1e-12


def _canonical(pairs: Iterable[tuple]) -> tuple:
    items = sorted((lo, hi) for lo, hi in pairs)
    out = []
    for lo, hi in items:
        if hi < lo:
            raise ValueError(f"interval [{lo}, {hi}] has lo > hi")
        if out and lo <= out[-1][1] + SNAP_TOL:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return tuple(out)


class IntervalSet:
    """Canonical union of disjoint closed intervals ``[lo_1, hi_1] u ...``.

    Overlapping and touching inputs are merged; degenerate intervals
    ``[x, x]`` are kept and have zero measure.

    >>> IntervalSet([(0, 0.5), (0.4, 0.9)])
    IntervalSet('0:0.9')
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Sequence] = ()):
        object.__setattr__(self, "intervals", _canonical((iv[0], iv[1]) for iv in intervals))

    def __setattr__(self, name, value):
        raise AttributeError("IntervalSet is immutable")

    def __reduce__(self):
        return (IntervalSet, (self.intervals,))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def interval(cls, lo, hi) -> "IntervalSet":
        return cls([(lo, hi)])

    # -- basic protocol -------------------------------------------------

    def __repr__(self):
        return f"IntervalSet({str(self)!r})"

    def __str__(self):
        return ",".join(f"{_fmt(lo)}:{_fmt(hi)}" for lo, hi in self.intervals)

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def __contains__(self, x):
        return any(lo <= x <= hi for lo, hi in self.intervals)

    @property
    def measure(self):
        return sum((hi - lo for lo, hi in self.intervals), 0)

    def is_empty(self) -> bool:
        return not self.intervals

    def bounds(self):
        if not self.intervals:
            return None
        return self.intervals[0][0], self.intervals[-1][1]

    def isclose(self, other: "IntervalSet", tol: float = 1e-12) -> bool:
        """Endpoint-wise equality up to ``tol``."""
        if len(self) != len(other):
            return False
        return all(abs(a - c) <= tol and abs(b - d) <= tol
                   for (a, b), (c, d) in zip(self.intervals, other.intervals))

    # -- algebra ----------------------------------------------------------

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        a, b = self.intervals, other.intervals
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        """Closure of ``self - other``."""
        out = []
        b = other.intervals
        j = 0
        for lo, hi in self.intervals:
            while j < len(b) and b[j][1] < lo:
                j += 1
            cur = lo
            touched = covered = False
            k = j
            while k < len(b) and b[k][0] <= hi:
                blo, bhi = b[k]
                touched = True
                if blo > cur:
                    out.append((cur, blo))
                cur = max(cur, bhi)
                if cur >= hi:
                    covered = True
                    break
                k += 1
            if not touched:
                out.append((lo, hi))
            elif not covered:
                out.append((cur, hi))
        return IntervalSet(out)

    def symmetric_difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.difference(other).union(other.difference(self))

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __xor__ = symmetric_difference

    def scaled(self, factor) -> "IntervalSet":
        return IntervalSet((lo * factor, hi * factor) for lo, hi in self.intervals)

    def shifted(self, offset) -> "IntervalSet":
        return IntervalSet((lo + offset, hi + offset) for lo, hi in self.intervals)

    # -- integer points -----------------------------------------------------

    def index_ranges(self, n: int) -> list:
        """Inclusive ranges ``(first, last)`` of ``{m >= 1 : m/n in self}``."""
        if n < 1:
            raise ValueError("n must be positive")
        out = []
        for lo, hi in self.intervals:
            first = max(1, math.ceil(Fraction(lo) * n))
            last = math.floor(Fraction(hi) * n)
            if first <= last:
                out.append((first, last))
        return out

    def integer_count(self, n: int) -> int:
        """``#(nA)``: number of positive integers ``m`` with ``m/n`` in the set."""
        return sum(last - first + 1 for first, last in self.index_ranges(n))


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else repr(float(x))
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


@dataclass(frozen=True)
class Endpoints:
    """A point ``(lows, highs)`` of the parameter domain of ``d`` intervals."""

    lows: tuple
    highs: tuple

    def __post_init__(self):
        lows, highs = tuple(self.lows), tuple(self.highs)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        if len(lows) != len(highs) or not lows:
            raise ValueError("need d >= 1 lows and highs of equal length")
        for lo, hi in zip(lows, highs):
            if lo > hi:
                raise ValueError(f"endpoint pair ({lo}, {hi}) has low > high")
            if lo < 0 or hi > 1:
                raise ValueError(f"endpoints must lie in [0, 1], got ({lo}, {hi})")

    @property
    def d(self) -> int:
        return len(self.lows)

    def as_vector(self) -> tuple:
        return self.lows + self.highs

    def distance(self, other: "Endpoints") -> float:
        """Sup-norm distance between the endpoint vectors."""
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        return max(abs(a - b) for a, b in zip(self.as_vector(), other.as_vector()))


def from_endpoints(t: Endpoints) -> IntervalSet:
    """``A_t``: the union of ``[lows[i], highs[i]]``."""
    return IntervalSet(zip(t.lows, t.highs))


def circular_arcs(s, t):
    """Forward and backward circular arcs of length ``t`` starting at ``s``.

    Returns ``(forward, backward)`` where forward is ``[s, s+t]`` wrapped
    around ``[0, 1]`` and backward is ``[s-t, s]`` wrapped the other way.
    """
    if not (0 <= s <= 1 and 0 <= t <= 1):
        raise ValueError("s and t must lie in [0, 1]")
    if s + t <= 1:
        forward = IntervalSet([(s, s + t)])
    else:
        forward = IntervalSet([(s, 1), (0, s + t - 1)])
    if s - t >= 0:
        backward = IntervalSet([(s - t, s)])
    else:
        backward = IntervalSet([(0, s), (s - t + 1, 1)])
    return forward, backward


def parse_interval_set(text: str) -> IntervalSet:
    """Parse ``"lo1:hi1,lo2:hi2"``; an empty string is the empty set.

    Endpoints are read as exact rationals, so ``0.3`` is ``3/10`` and ball
    ``3`` of ``10`` lies in ``[0, 0.3]``.
    """
    text = text.strip()
    if not text:
        return IntervalSet.empty()
    pairs = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ValueError(f"bad interval {chunk!r}; expected lo:hi")
        try:
            lo, hi = Fraction(parts[0].strip()), Fraction(parts[1].strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"bad interval {chunk!r}: {exc}") from None
        if lo > hi:
            raise ValueError(f"bad interval {chunk!r}: lo > hi")
        pairs.append((lo, hi))
    return IntervalSet(pairs)
