from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from urnmeasure import _backend
from urnmeasure.distributions import PowerLawPmf
from urnmeasure.textscan import (
    PARAMETRIC,
    PERMUTATION,
    TokenSeq,
    circular_field,
    forward_backward,
    homogeneity_stat,
    p_value,
    theta_hat,
    tokenize,
)


def brute_field(tokens, nodes):
    """Distinct words on forward minus backward closed circular arcs, by set counting."""
    n = len(tokens)
    pos = [Fraction(m, n) for m in range(1, n + 1)]
    out = np.empty((len(nodes), len(nodes)), dtype=np.int64)
    for a, s in enumerate(nodes):
        for b, t in enumerate(nodes):
            fwd = {w for w, x in zip(tokens, pos) if _on_closed_arc(x, s, t, True)}
            bwd = {w for w, x in zip(tokens, pos) if _on_closed_arc(x, s, t, False)}
            out[a, b] = len(fwd) - len(bwd)
    return out


def _on_closed_arc(x, s, t, forward):
    """Membership of ``x`` in the unwrapped closed arc, treating 0 and 1 as distinct points."""
    if forward:
        pieces = [(s, s + t)] if s + t <= 1 else [(s, 1), (0, s + t - 1)]
    else:
        pieces = [(s - t, s)] if s - t >= 0 else [(0, s), (s - t + 1, 1)]
    return any(lo <= x <= hi for lo, hi in pieces)


@pytest.mark.parametrize("text,words", [
    ("The cat, the CAT!", ["the", "cat", "the", "cat"]),
    ("naïve café au-lait 42 x_y", ["naïve", "café", "au", "lait", "x", "y"]),
    ("don't stop", ["don", "t", "stop"]),
])
def test_tokenize_examples(text, words):
    assert tokenize(text).words == words


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet="abc XYZ,.!1é", min_size=1, max_size=80))
def test_tokenize_idempotent(text):
    try:
        seq = tokenize(text)
    except ValueError:
        assert not any(ch.isalpha() for ch in text)
        return
    assert tokenize(" ".join(seq.words)).words == seq.words
    assert seq.vocabulary_size == len(set(seq.words))


def test_tokenize_empty():
    with pytest.raises(ValueError):
        tokenize("123 ... !!")


def test_theta_hat_and_clamp():
    assert theta_hat(TokenSeq.from_words("a b a c".split())) == pytest.approx(2 / 3)
    assert theta_hat(TokenSeq.from_words("a a b b".split())) == 1e-3
    assert theta_hat(TokenSeq.from_words("a a b b".split()), clamp=False) == 0.0
    assert theta_hat(TokenSeq.from_words("a b c".split())) == 1 - 1e-3


def test_from_labels_is_dense_by_first_appearance():
    seq = TokenSeq.from_labels([50, 7, 50, 9])
    np.testing.assert_array_equal(seq.tokens, [1, 2, 1, 3])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 8), min_size=1, max_size=40), st.booleans())
def test_field_matches_brute_arcs(labels, midpoint):
    seq = TokenSeq.from_labels(labels)
    grid = 0.1
    got = circular_field(seq, grid, midpoint=midpoint)
    den = 20 if midpoint else 10
    idx = range(1, 20, 2) if midpoint else range(0, 11)
    nodes = [Fraction(i, den) for i in idx]
    np.testing.assert_array_equal(got, brute_field(list(seq.tokens), nodes))
    np.testing.assert_array_equal(got, circular_field(seq, grid, midpoint=midpoint, method="direct"))


def test_table_method_agrees_across_backends():
    rng = np.random.default_rng(1)
    seq = TokenSeq.from_labels(rng.integers(1, 200, size=3000))
    ref = circular_field(seq, 0.02, midpoint=True, kernels=_backend.get("python"))
    for name in _backend.available():
        np.testing.assert_array_equal(
            circular_field(seq, 0.02, midpoint=True, kernels=_backend.get(name)), ref)


def test_forward_backward_boundaries():
    seq = TokenSeq.from_words("a b a c d a".split())
    fwd, bwd = forward_backward(seq, 0.5)
    np.testing.assert_array_equal(fwd, [0, 2, 4])
    # the closed window [1, 1] holds the last word
    np.testing.assert_array_equal(bwd, [1, 3, 4])
    assert np.all(np.diff(fwd) >= 0) and np.all(np.diff(bwd) >= 0)


def test_field_invariant_under_relabeling():
    rng = np.random.default_rng(3)
    labels = rng.integers(1, 30, size=500)
    perm = rng.permutation(np.arange(1, 31))
    a = circular_field(TokenSeq.from_labels(labels), 0.05)
    b = circular_field(TokenSeq.from_labels(perm[labels - 1]), 0.05)
    np.testing.assert_array_equal(a, b)


def test_reversal_is_antisymmetric_up_to_boundary():
    rng = np.random.default_rng(4)
    labels = rng.integers(1, 40, size=400)
    steps = 20
    u = circular_field(TokenSeq.from_labels(labels), 1 / steps)
    r = circular_field(TokenSeq.from_labels(labels[::-1]), 1 / steps)
    # reversal maps position m/n to (n + 1 - m)/n, which moves at most one boundary ball per arc
    for a in range(steps + 1):
        for b in range(steps + 1):
            assert abs(r[steps - a, b] + u[a, b]) <= 2


def test_repeated_word_has_zero_statistic():
    seq = TokenSeq.from_words(["same"] * 1000)
    assert homogeneity_stat(seq, 0.01) == 0.0


def test_grid_refinement_is_stable():
    model = PowerLawPmf(0.5)
    rng = np.random.default_rng(5)
    seq = TokenSeq.from_labels(model.sample(rng, 10_000))
    coarse = homogeneity_stat(seq, 0.01)
    fine = homogeneity_stat(seq, 0.005)
    assert abs(fine - coarse) / coarse < 0.05


def test_p_value_permutation():
    model = PowerLawPmf(0.5)
    seq = TokenSeq.from_labels(model.sample(np.random.default_rng(6), 2000))
    res = p_value(seq, 0.05, resamples=199, seed=3, keep_null=True)
    assert 1 / 200 <= res.p_value <= 1
    assert res.p_value == (1 + res.exceed) / 200
    assert len(res.null_statistics) == 199
    assert res.method == PERMUTATION and res.n == 2000
    again = p_value(seq, 0.05, resamples=199, seed=3)
    assert again.p_value == res.p_value and again.null_statistics is None
    assert "null_statistics" not in res.to_dict()


def test_p_value_parametric_and_validation():
    model = PowerLawPmf(0.5)
    seq = TokenSeq.from_labels(model.sample(np.random.default_rng(7), 1000))
    res = p_value(seq, 0.1, resamples=199, method=PARAMETRIC, seed=1)
    assert res.method == PARAMETRIC and 0 < res.p_value <= 1
    with pytest.raises(ValueError):
        p_value(seq, 0.1, resamples=198)
    with pytest.raises(ValueError):
        p_value(seq, 0.1, resamples=199, method="bootstrap")
    with pytest.raises(ValueError):
        circular_field(seq, 0.3)


def test_concatenated_regimes_are_detected():
    rng = np.random.default_rng(8)
    low, high = PowerLawPmf(0.3), PowerLawPmf(0.7)
    labels = np.concatenate([low.sample(rng, 5000), high.sample(rng, 5000)])
    res = p_value(TokenSeq.from_labels(labels), 0.05, resamples=199, seed=2)
    assert res.p_value <= 0.01


def test_digits_split_words():
    assert tokenize("a1b").words == ["a", "b"]


def test_theta_hat_calibration():
    model = PowerLawPmf(0.5)
    hits = 0
    for seed in range(100):
        seq = TokenSeq.from_labels(model.sample(np.random.default_rng(seed), 10**5))
        hits += abs(theta_hat(seq) - 0.5) <= 0.05
    assert hits >= 95


def test_forward_backward_endpoints_and_full_circle_column():
    model = PowerLawPmf(0.5)
    seq = TokenSeq.from_labels(model.sample(np.random.default_rng(9), 3000))
    fwd, bwd = forward_backward(seq, 0.1)
    r_n = int(np.unique(seq.tokens).size)
    assert fwd[-1] == bwd[-1] == r_n
    assert fwd[0] == 0 and bwd[0] == 1
    u = circular_field(seq, 0.1)
    np.testing.assert_array_equal(u[:, -1], 0)


def test_homogeneous_field_matches_kernel_diagonal():
    from urnmeasure.kernels import u_field_kernel
    from urnmeasure.montecarlo import replicate

    model = PowerLawPmf(0.5)
    n, reps = 10**4, 300
    # midpoint nodes (j + 1/2)/10
    data = replicate(_field_rep, (model, n), reps, master_seed=12)
    scale = np.sqrt(model.mean_occupied(n))
    for a, b in ((1, 2), (4, 4), (7, 3), (2, 8)):
        s, t = (a + 0.5) / 10, (b + 0.5) / 10
        y = data[:, a * 10 + b] / scale
        var = y.var(ddof=1)
        se = ((y - y.mean()) ** 2).std(ddof=1) / np.sqrt(reps)
        assert abs(var - u_field_kernel(s, t, s, t, 0.5)) <= 4 * se
    assert np.max(np.abs(data)) / scale < 6.0


def _field_rep(rng, ctx):
    model, n = ctx
    return circular_field(TokenSeq.from_labels(model.sample(rng, n)), 0.1, midpoint=True).ravel()


def test_disjoint_halves_exceed_homogeneous_median():
    model = PowerLawPmf(0.5)
    rng = np.random.default_rng(10)
    n = 4000
    homogeneous = [homogeneity_stat(TokenSeq.from_labels(model.sample(rng, n)), 0.05)
                   for _ in range(25)]
    left = model.sample(rng, n // 2)
    right = model.sample(rng, n // 2) + 10**9
    split = homogeneity_stat(TokenSeq.from_labels(np.concatenate([left, right])), 0.05)
    assert split > np.median(homogeneous)
