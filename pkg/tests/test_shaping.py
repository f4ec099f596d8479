import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from ffsc.bits import BitString
from ffsc.coder import quantize_channel
from ffsc.errors import ShapingError
from ffsc.model import Pmf, TestChannel, TypicalityParams, is_jointly_typical
from ffsc.shaping import PAD_PATTERN, deshape, deshape_raw, shape, shaped_length

BSC11 = quantize_channel(TestChannel.bsc(0.11), 16)
UNIFORM_ROWS = quantize_channel(
    TestChannel.from_rows([[0.5, 0.5], [0.5, 0.5]]), 16
)


def random_case(rng, m, side_factor=3.0):
    bits = BitString.from_bits(rng.integers(0, 2, size=m))
    side = rng.integers(0, 2, size=int(m * side_factor) + 512).astype(np.int64)
    return bits, side


# ---------------------------------------------------------------------------
# round trip


@settings(deadline=None, max_examples=300)
@given(st.integers(0, 2000), st.integers(0, 2**31))
def test_roundtrip_property(m, salt):
    rng = np.random.default_rng(salt)
    bits, side = random_case(rng, m)
    xhat, used = shape(bits, side, BSC11)
    assert xhat.size == used
    assert deshape(xhat, side[:used], BSC11, m) == bits


def test_roundtrip_bulk_seeded():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        m = int(rng.integers(1, 4000))
        bits, side = random_case(rng, m)
        xhat, used = shape(bits, side, BSC11)
        assert deshape(xhat, side[:used], BSC11, m) == bits


def test_roundtrip_long_input():
    rng = np.random.default_rng(77)
    bits, side = random_case(rng, 100_000, side_factor=2.5)
    xhat, used = shape(bits, side, BSC11)
    assert deshape(xhat, side[:used], BSC11, len(bits)) == bits


def test_m_zero_is_empty():
    side = np.zeros(10, dtype=np.int64)
    xhat, used = shape(BitString.empty(), side, BSC11)
    assert used == 0 and xhat.size == 0
    assert deshape(xhat, side[:0], BSC11, 0) == BitString.empty()


# ---------------------------------------------------------------------------
# length accounting


def test_sample_count_near_prediction():
    rng = np.random.default_rng(11)
    m = 5000
    predicted = shaped_length(m, Pmf.from_probs([0.5, 0.5]), TestChannel.bsc(0.11))
    assert predicted == pytest.approx(10001.68, abs=0.02)
    for _ in range(10):
        bits, side = random_case(rng, m)
        _, used = shape(bits, side, BSC11)
        assert 9500 <= used <= 10500


def test_shaped_length_edge_values():
    uniform = TestChannel.from_rows([[0.5, 0.5], [0.5, 0.5]])
    p = Pmf.from_probs([0.5, 0.5])
    assert shaped_length(0, p, uniform) == 0.0
    assert shaped_length(1234, p, uniform) == pytest.approx(1234.0)


def test_shaped_length_rejects_deterministic_rows():
    ident = TestChannel.from_rows([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ShapingError):
        shaped_length(100, Pmf.from_probs([0.5, 0.5]), ident)


def test_uniform_rows_pass_bits_through():
    """Independent fair rows make the shaper a bit-identity with a small
    settling tail, the degenerate case where one sample carries one bit."""
    rng = np.random.default_rng(4)
    for m in (1, 8, 233, 4096):
        bits, side = random_case(rng, m)
        xhat, used = shape(bits, side, UNIFORM_ROWS)
        assert m <= used <= m + 96
        assert np.array_equal(xhat[:m], bits.to_array().astype(np.int64))
        assert deshape(xhat, side[:used], UNIFORM_ROWS, m) == bits


def test_all_ones_input_still_settles():
    # trailing 0xFF bytes postpone settling; the pad pattern breaks the
    # run, so even this worst case terminates promptly
    m = 1024
    bits = BitString.from_bits([1] * m)
    side = np.zeros(4 * m, dtype=np.int64)
    xhat, used = shape(bits, side, UNIFORM_ROWS)
    assert used <= m + 96
    assert deshape(xhat, side[:used], UNIFORM_ROWS, m) == bits


# ---------------------------------------------------------------------------
# distributional behaviour


def test_crossover_fraction_matches_channel():
    rng = np.random.default_rng(15)
    bits, side = random_case(rng, 50_000, side_factor=2.5)
    xhat, used = shape(bits, side, BSC11)
    assert used >= 100_000 * 0.95
    crossover = float(np.mean(xhat != side[:used]))
    assert abs(crossover - 0.11) < 0.01


def test_joint_typicality_of_output():
    prior = Pmf.from_probs([0.5, 0.5])
    ch = TestChannel.bsc(0.11)
    params = TypicalityParams(0.02)
    rng = np.random.default_rng(31)
    passes = 0
    for _ in range(20):
        bits, side = random_case(rng, 10_000)
        xhat, used = shape(bits, side, BSC11)
        passes += is_jointly_typical(side[:used], xhat, prior, ch, params)
    assert passes >= 18


def test_shape_is_deterministic():
    rng = np.random.default_rng(9)
    bits, side = random_case(rng, 3000)
    a = shape(bits, side, BSC11)
    b = shape(bits, side.copy(), BSC11)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_shape_accepts_reversed_view():
    # the codec hands in reversed slices; no copies, same answer
    rng = np.random.default_rng(13)
    bits, side = random_case(rng, 2000)
    rev = side[::-1]
    a = shape(bits, rev, BSC11)
    b = shape(bits, rev.copy(), BSC11)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


# ---------------------------------------------------------------------------
# error paths


def test_side_exhaustion_raises():
    rng = np.random.default_rng(2)
    bits = BitString.from_bits(rng.integers(0, 2, size=4000))
    short_side = rng.integers(0, 2, size=100).astype(np.int64)
    with pytest.raises(ShapingError):
        shape(bits, short_side, BSC11)


def test_side_symbol_out_of_range_raises():
    rng = np.random.default_rng(2)
    bits = BitString.from_bits(rng.integers(0, 2, size=64))
    side = np.full(1000, 7, dtype=np.int64)  # only rows 0 and 1 exist
    with pytest.raises(ShapingError):
        shape(bits, side, BSC11)


def test_deshape_never_silently_returns_wrong_input_as_right():
    """Tampering with x-hat violates deshape's precondition; the promise
    is only that it cannot reproduce the original bits as if nothing
    happened -- it either raises (pad-tail mismatch, inconsistent
    length) or returns visibly different bits."""
    rng = np.random.default_rng(6)
    for trial in range(20):
        bits, side = random_case(rng, 4000)
        xhat, used = shape(bits, side, BSC11)
        bad = xhat.copy()
        bad[int(rng.integers(0, used // 2))] ^= 1
        try:
            got = deshape(bad, side[:used], BSC11, len(bits))
        except ShapingError:
            continue
        assert got != bits


def test_deshape_rejects_impossible_pair():
    asym = quantize_channel(
        TestChannel.from_rows([[1.0, 0.0], [0.5, 0.5]]), 16
    )
    xhat = np.array([1], dtype=np.int64)  # impossible under row 0
    x = np.array([0], dtype=np.int64)
    with pytest.raises(ShapingError):
        deshape_raw(xhat, x, asym)


def test_deshape_rejects_m_beyond_settled():
    rng = np.random.default_rng(14)
    bits, side = random_case(rng, 1000)
    xhat, used = shape(bits, side, BSC11)
    with pytest.raises(ShapingError):
        deshape(xhat, side[:used], BSC11, len(bits) + 5000)


def test_pad_pattern_shape():
    assert len(PAD_PATTERN) == 8
    assert PAD_PATTERN != b"\x00" * 8 and PAD_PATTERN != b"\xff" * 8
