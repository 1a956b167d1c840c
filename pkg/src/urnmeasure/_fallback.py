"""Pure numpy versions of the compiled counting kernels."""
import numpy as np


def at_least_counts(urn, starts, stops, qptr, ks, n_urns):
    out = np.zeros(len(ks), dtype=np.int64)
    for q in range(len(ks)):
        pieces = [urn[starts[r]:stops[r]] for r in range(qptr[q], qptr[q + 1])]
        if not pieces:
            continue
        members = np.concatenate(pieces)
        if members.size == 0:
            continue
        mult = np.bincount(members, minlength=max(n_urns, 1))
        out[q] = int(np.count_nonzero(mult >= ks[q]))
    return out


def arc_distinct_table(tokens, n_vocab, denom):
    tokens = np.asarray(tokens, dtype=np.int64)
    n = tokens.size
    size = 2 * denom + 2
    doubled = np.concatenate([tokens, tokens])
    pos = np.arange(1, 2 * n + 1, dtype=np.int64)
    order = np.argsort(doubled, kind="stable")
    ordered = doubled[order]
    prev = np.zeros(2 * n, dtype=np.int64)
    same = ordered[1:] == ordered[:-1]
    prev[order[1:][same]] = order[:-1][same] + 1
    hi = np.minimum((pos * denom) // n, 2 * denom)
    col = (pos * denom + n - 1) // n
    lo = np.where(prev > 0, (prev * denom) // n + 1, 0)
    ok = lo <= hi
    flat = np.bincount(lo[ok] * size + col[ok], minlength=size * size)
    flat = flat - np.bincount((hi[ok] + 1) * size + col[ok], minlength=size * size)
    grid = flat.reshape(size, size).cumsum(axis=0).cumsum(axis=1)
    return grid[:size - 1, :size - 1]
