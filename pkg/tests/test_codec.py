import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import hadamard

from codedopt.codec import (
    ErasedOutputs,
    UndecodableError,
    check_decodability,
    decodable_batch,
    decode,
    encode,
    first_decodable_prefix,
    input_block,
    make_direction_set,
)
from codedopt.construction import build_config

codes = st.integers(min_value=1, max_value=6).flatmap(
    lambda k: st.tuples(st.integers(min_value=1, max_value=2**k), st.just(2**k))
)


def dense_solve(directions, g, available):
    """Oracle: least squares on the received equations; None if not identifiable."""
    M = directions[available]
    if M.shape[0] == 0 or np.linalg.matrix_rank(M) < M.shape[1]:
        return None
    return np.linalg.lstsq(M, g[available], rcond=None)[0]


# --- encode -----------------------------------------------------------------

def test_single_kernel():
    cfg = build_config(1, 2)
    assert encode(cfg, [[0.0], [1.0]]).tolist() == [[1.0], [-1.0]]


def test_zero_block():
    cfg = build_config(3, 4)
    assert not encode(cfg, np.zeros((4, 3))).any()


@pytest.mark.parametrize("n_total", [1, 2, 4, 8, 16, 64])
def test_encode_is_sylvester_hadamard(n_total, rng):
    cfg = build_config(n_total, n_total)
    block = rng.standard_normal((n_total, 5))
    np.testing.assert_allclose(encode(cfg, block), hadamard(n_total) @ block, atol=1e-12)


def test_n4_example_directions():
    cfg = build_config(3, 4)
    out = encode(cfg, [np.zeros(3), *np.eye(3)])
    np.testing.assert_array_equal(out, hadamard(4) @ np.vstack([np.zeros(3), np.eye(3)]))
    np.testing.assert_array_equal(out[0], [1, 1, 1])


def test_encode_wrong_length():
    with pytest.raises(ValueError):
        encode(build_config(3, 4), np.zeros((3, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=6), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_encode_linear(log_n, alpha, beta, seed):
    n_total = 2**log_n
    cfg = build_config(n_total, n_total)
    r = np.random.default_rng(seed)
    x, y = r.standard_normal((2, n_total, 3))
    np.testing.assert_allclose(
        encode(cfg, alpha * x + beta * y), alpha * encode(cfg, x) + beta * encode(cfg, y), atol=1e-9
    )


# --- direction sets -----------------------------------------------------------

def test_rate_one_n2_directions():
    ds = make_direction_set(build_config(2, 2), [1, 1])
    assert ds.directions.tolist() == [[1, 1], [1, -1]]


def test_column_sign_flip():
    cfg = build_config(3, 4)
    plain = make_direction_set(cfg, [1, 1, 1]).directions
    flipped = make_direction_set(cfg, [-1, 1, 1]).directions
    np.testing.assert_array_equal(flipped[:, 0], -plain[:, 0])
    np.testing.assert_array_equal(flipped[:, 1:], plain[:, 1:])


@pytest.mark.parametrize("n_total", [2, 4, 8, 32, 128])
def test_rate_one_orthogonal(n_total, rng):
    ds = make_direction_set(build_config(n_total, n_total), rng.choice([-1.0, 1.0], n_total))
    np.testing.assert_array_equal(ds.directions @ ds.directions.T, n_total * np.eye(n_total))


@pytest.mark.parametrize("d,n_total", [(3, 4), (3, 8), (5, 16), (32, 64)])
def test_directions_are_signed_unit_combinations(d, n_total, rng):
    cfg = build_config(d, n_total)
    signs = rng.choice([-1.0, 1.0], d)
    ds = make_direction_set(cfg, signs)
    assert set(np.unique(ds.directions)) <= {-1.0, 0.0, 1.0}
    np.testing.assert_array_equal(ds.directions, hadamard(n_total) @ input_block(cfg, signs))


def test_direction_set_rejects_bad_signs():
    cfg = build_config(3, 4)
    with pytest.raises(ValueError):
        make_direction_set(cfg, [1, 1])
    with pytest.raises(ValueError):
        make_direction_set(cfg, [1, 0.5, 1])


# --- decodability ---------------------------------------------------------------

def test_all_available_decodable():
    for d, n_total in [(1, 1), (3, 4), (32, 64), (256, 256)]:
        assert check_decodability(build_config(d, n_total), np.ones(n_total, bool))


def test_too_few_outputs():
    cfg = build_config(5, 8)
    avail = np.zeros(8, bool)
    avail[:4] = True
    assert not check_decodability(cfg, avail)


def test_hand_traced_pattern_n4():
    # frozen {0}; x3 erased. u1: lower, u0 = 0 known, (0,1) needs x0 & x2 -> ok.
    # u2: upper, needs (2,1) [from (0,1) and x0 or x2] and (3,1) [from (1,1) and x1].
    # u3: lower, needs u2 and (3,1). Everything resolves.
    assert check_decodability(build_config(3, 4), [True, True, True, False]) is True
    # x0 and x2 both erased: u2 needs (2,1), whose pair (0,1) needs x0 & x2.
    assert check_decodability(build_config(3, 4), [False, True, False, True]) is False


def test_length_checked():
    with pytest.raises(ValueError):
        check_decodability(build_config(3, 4), [True] * 3)


@pytest.mark.parametrize("n_total", [1, 2, 4, 8])
def test_sequential_and_batch_agree_exhaustively(n_total):
    patterns = np.array(list(itertools.product([False, True], repeat=n_total)))
    for d in range(1, n_total + 1):
        cfg = build_config(d, n_total)
        seq = np.array([check_decodability(cfg, p) for p in patterns])
        np.testing.assert_array_equal(seq, decodable_batch(cfg, patterns))


@settings(max_examples=200, deadline=None)
@given(codes, st.integers(0, 2**32 - 1))
def test_sequential_and_batch_agree_random(code, seed):
    d, n_total = code
    cfg = build_config(d, n_total)
    avail = np.random.default_rng(seed).random(n_total) < 0.7
    assert check_decodability(cfg, avail) == bool(decodable_batch(cfg, avail))


@settings(max_examples=200, deadline=None)
@given(codes, st.integers(0, 2**32 - 1))
def test_monotone_and_necessary(code, seed):
    d, n_total = code
    cfg = build_config(d, n_total)
    r = np.random.default_rng(seed)
    small = r.random(n_total) < 0.6
    big = small | (r.random(n_total) < 0.5)
    if check_decodability(cfg, small):
        assert check_decodability(cfg, big)
        assert small.sum() >= d


def test_first_decodable_prefix_matches_loop(rng):
    cfg = build_config(16, 32)
    for _ in range(50):
        order = rng.permutation(32)
        avail = np.zeros(32, bool)
        for k, i in enumerate(order, start=1):
            avail[i] = True
            if check_decodability(cfg, avail):
                break
        assert first_decodable_prefix(cfg, order) == k


# --- decode -------------------------------------------------------------------------

def test_decode_n2_both():
    cfg = build_config(2, 2)
    out = decode(cfg, ErasedOutputs(np.array([3.0, 1.0]), np.array([True, True])))
    assert out.tolist() == [2.0, 1.0]


def test_decode_n2_frozen_upper():
    cfg = build_config(1, 2)
    assert cfg.frozen_set == {0}
    out = decode(cfg, ErasedOutputs(np.array([0.0, -5.0]), np.array([False, True])))
    assert out.tolist() == [5.0]


def test_decode_reports_failed_channels():
    cfg = build_config(3, 4)
    with pytest.raises(UndecodableError) as err:
        decode(cfg, ErasedOutputs(np.ones(4), np.array([False, True, False, True])))
    assert err.value.failed_channels
    assert set(err.value.failed_channels) <= set(cfg.info_channels)


def test_decode_ignores_erased_values():
    cfg = build_config(3, 4)
    ds = make_direction_set(cfg)
    g = ds.directions @ np.array([1.0, -2.0, 0.5])
    avail = np.array([True, True, True, False])
    garbage = g.copy()
    garbage[3] = np.nan
    np.testing.assert_array_equal(decode(cfg, ErasedOutputs(g, avail)), decode(cfg, ErasedOutputs(garbage, avail)))


@pytest.mark.parametrize("n_total", [2, 4, 8, 16, 32, 64, 128, 256])
def test_rate_one_roundtrip(n_total, rng):
    cfg = build_config(n_total, n_total)
    for _ in range(5):
        x = rng.standard_normal(n_total)
        out = decode(cfg, ErasedOutputs(encode(cfg, x), np.ones(n_total, bool)))
        assert np.max(np.abs(out - x)) <= 1e-12 * max(1.0, np.max(np.abs(x)))


@pytest.mark.parametrize("d,n_total", [(3, 4), (3, 8), (4, 8), (6, 8)])
def test_decode_matches_dense_solve_exhaustively(d, n_total, rng):
    cfg = build_config(d, n_total)
    ds = make_direction_set(cfg, rng.choice([-1.0, 1.0], d))
    c = rng.standard_normal(d)
    g = ds.directions @ c
    for bits in itertools.product([False, True], repeat=n_total):
        avail = np.array(bits)
        ok = check_decodability(cfg, avail)
        if ok:
            out = decode(cfg, ErasedOutputs(g, avail))
            np.testing.assert_allclose(out, ds.diag_signs * c, atol=1e-12)
            np.testing.assert_allclose(out / ds.diag_signs, dense_solve(ds.directions, g, avail), atol=1e-10)
        else:
            with pytest.raises(UndecodableError):
                decode(cfg, ErasedOutputs(g, avail))


def test_quadratic_directional_derivatives_decode_to_gradient(least_squares_instance, rng):
    A, b, theta = least_squares_instance
    cfg = build_config(32, 64)
    ds = make_direction_set(cfg, rng.choice([-1.0, 1.0], 32))
    grad = A.T @ (A @ theta - b)
    g = ds.directions @ grad
    hits = 0
    while hits < 10:
        avail = rng.random(64) < 0.75
        if not check_decodability(cfg, avail):
            continue
        hits += 1
        out = decode(cfg, ErasedOutputs(g, avail)) / ds.diag_signs
        np.testing.assert_allclose(out, grad, rtol=1e-10, atol=1e-10 * np.abs(grad).max())


@pytest.mark.slow
@pytest.mark.parametrize("d", [4, 5, 12])
def test_decode_agrees_with_indicator_and_dense_n16(d, rng):
    cfg = build_config(d, 16)
    ds = make_direction_set(cfg, rng.choice([-1.0, 1.0], d))
    c = rng.standard_normal(d)
    g = ds.directions @ c
    for bits in itertools.product([False, True], repeat=16):
        avail = np.array(bits)
        if check_decodability(cfg, avail):
            out = decode(cfg, ErasedOutputs(g, avail)) / ds.diag_signs
            np.testing.assert_allclose(out, c, atol=1e-10)
        else:
            with pytest.raises(UndecodableError):
                decode(cfg, ErasedOutputs(g, avail))
