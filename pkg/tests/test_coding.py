from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from effsnr.coding import (N_TAIL, PUNCTURE_PATTERNS, CodeSpec, conv_encode, depuncture,
                           generator_taps, puncture, punctured_length, viterbi_decode)

RATES = list(PUNCTURE_PATTERNS)
bit_arrays = st.lists(st.integers(0, 1), min_size=1, max_size=300).map(
    lambda b: np.array(b, dtype=np.uint8))


def soft(bits):
    # positive favours 0
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def test_generator_taps():
    assert generator_taps(0o133).tolist() == [1, 0, 1, 1, 0, 1, 1]
    assert generator_taps(0o171).tolist() == [1, 1, 1, 1, 0, 0, 1]


def test_code_spec():
    spec = CodeSpec(Fraction(3, 4))
    assert spec.puncture_pattern == (1, 1, 1, 0, 0, 1)
    assert spec.coded_length(100) == len(conv_encode(np.zeros(100), Fraction(3, 4)))
    with pytest.raises(ValueError):
        CodeSpec(Fraction(7, 8))
    with pytest.raises(ValueError):
        CodeSpec(generators=(0o133, 0o165))


@pytest.mark.parametrize("rate", RATES)
def test_all_zero(rate):
    assert not conv_encode(np.zeros(77, dtype=np.uint8), rate).any()


def test_impulse_response():
    out = conv_encode(np.r_[1, np.zeros(20, dtype=np.uint8)], Fraction(1, 2))
    a, b = out[0::2], out[1::2]
    assert a[:7].tolist() == [1, 0, 1, 1, 0, 1, 1]
    assert b[:7].tolist() == [1, 1, 1, 1, 0, 0, 1]
    assert not out[14:].any()


@given(bit_arrays)
def test_encoder_matches_shift_register(bits):
    assert np.array_equal(conv_encode(bits, Fraction(1, 2)), oracles.conv_encode_naive(bits))


@given(st.integers(1, 200), st.integers(0, 2 ** 32 - 1), st.sampled_from(RATES))
def test_encoder_linear(n, seed, rate):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, n, dtype=np.uint8)
    b = rng.integers(0, 2, n, dtype=np.uint8)
    assert np.array_equal(conv_encode(a ^ b, rate), conv_encode(a, rate) ^ conv_encode(b, rate))


@pytest.mark.parametrize("rate", RATES)
def test_puncture_lengths(rate):
    for n in (1, 2, 5, 37, 1500 * 8):
        mother = 2 * (n + N_TAIL)
        expect = sum(PUNCTURE_PATTERNS[rate][i % len(PUNCTURE_PATTERNS[rate])]
                     for i in range(mother))
        assert punctured_length(mother, rate) == expect
        assert len(conv_encode(np.zeros(n), rate)) == expect


@given(st.integers(1, 400), st.sampled_from(RATES))
def test_depuncture_restores_positions(n, rate):
    x = np.arange(1, n + 1, dtype=float)
    kept = puncture(x, rate)
    back = depuncture(kept, rate, n)
    pat = np.resize(np.array(PUNCTURE_PATTERNS[rate], dtype=bool), n)
    assert np.array_equal(back[pat], x[pat])
    assert not back[~pat].any()


def test_depuncture_length_check():
    with pytest.raises(ValueError):
        depuncture(np.zeros(5), Fraction(1, 2), 12)


@pytest.mark.parametrize("rate", RATES)
@pytest.mark.parametrize("n", [1, 7, 64, 333, 12000])
def test_noiseless_roundtrip(rate, n):
    bits = np.random.default_rng(n).integers(0, 2, n, dtype=np.uint8)
    coded = conv_encode(bits, rate)
    assert np.array_equal(viterbi_decode(soft(coded), rate), bits)
    assert np.array_equal(viterbi_decode(soft(coded), rate, n_bits=n), bits)


@given(bit_arrays, st.sampled_from(RATES))
def test_noiseless_roundtrip_property(bits, rate):
    assert np.array_equal(viterbi_decode(soft(conv_encode(bits, rate)), rate), bits)


def test_corrects_scattered_errors():
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, 2000, dtype=np.uint8)
    coded = conv_encode(bits, Fraction(1, 2))
    flips = np.zeros(coded.size, dtype=np.uint8)
    flips[rng.choice(coded.size, 20, replace=False)] = 1
    assert np.array_equal(viterbi_decode(soft(coded ^ flips)), bits)


def test_all_erasures_defined():
    out = viterbi_decode(np.zeros(punctured_length(2 * (50 + N_TAIL), Fraction(2, 3))),
                         Fraction(2, 3))
    assert out.shape == (50,) and set(np.unique(out)) <= {0, 1}


def test_bad_frame_length():
    with pytest.raises(ValueError):
        viterbi_decode(np.zeros(13), Fraction(1, 2))


def test_bsc_small_sample():
    # a fast slice of the 1000-frame check in the acceptance suite
    fails = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, 12000, dtype=np.uint8)
        coded = conv_encode(bits)
        flips = (rng.random(coded.size) < 1e-3).astype(np.uint8)
        fails += not np.array_equal(viterbi_decode(soft(coded ^ flips)), bits)
    assert fails == 0
