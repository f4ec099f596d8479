import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from ffsc.bits import BitString
from ffsc.coder import (
    ConditionalModel,
    Frame,
    QuantizedModel,
    coded_length,
    compress,
    decode_frame_prefix,
    decompress,
    model_digest,
    quantize,
    quantize_channel,
)
from ffsc.errors import (
    CodingError,
    InconsistentFrameError,
    QuantizationError,
    TruncatedFrameError,
)
from ffsc.model import Pmf, TestChannel


# ---------------------------------------------------------------------------
# quantization


def test_quantize_benchmark_row():
    q = quantize(Pmf.from_probs([0.89, 0.11]), 16)
    assert q.freq.tolist() == [58327, 7209]
    assert q.freq.sum() == 1 << 16


def test_quantize_point_mass():
    q = quantize(Pmf.from_probs([1.0, 0.0]), 16)
    assert q.freq.tolist() == [65536, 0]


def test_quantize_preserves_true_zeros():
    q = quantize(Pmf.from_probs([0.6, 0.0, 0.4]), 10)
    assert q.freq[1] == 0
    assert q.freq.sum() == 1 << 10


def test_quantize_gives_every_support_symbol_a_slot():
    # probability 1e-9 would round to zero slots; it must get one anyway
    q = quantize(Pmf.from_probs([1 - 1e-9, 1e-9]), 8)
    assert q.freq.tolist() == [255, 1]


def test_quantize_rejects_overfull_support():
    probs = np.full(8, 1 / 8)
    with pytest.raises(QuantizationError):
        quantize(Pmf.from_probs(probs), 2)  # 8 symbols, 4 slots


@settings(deadline=None, max_examples=60)
@given(st.integers(2, 12), st.integers(2, 20), st.integers(0, 2**31))
def test_quantize_total_always_exact(precision, size, salt):
    rng = np.random.default_rng(salt)
    w = rng.random(size) + 1e-3
    p = Pmf.from_probs(w / w.sum())
    if size > (1 << precision):
        with pytest.raises(QuantizationError):
            quantize(p, precision)
        return
    q = quantize(p, precision)
    assert q.freq.sum() == 1 << precision
    assert np.all(q.freq > 0)


def test_quantized_model_validates_total():
    with pytest.raises(QuantizationError):
        QuantizedModel(np.array([100, 100], dtype=np.int64), 16)


def test_model_digest_changes_with_tables():
    m1 = quantize(Pmf.from_probs([0.89, 0.11]), 16)
    m2 = quantize(Pmf.from_probs([0.5, 0.5]), 16)
    c = quantize_channel(TestChannel.bsc(0.11), 16)
    assert model_digest(m1, c) != model_digest(m2, c)
    assert model_digest(m1, c) == model_digest(m1, c)


# ---------------------------------------------------------------------------
# frames


def test_frame_rejects_unaligned_payload():
    with pytest.raises(CodingError):
        Frame(1, BitString.from_bits([1, 0, 1]))


def test_empty_sequence_frame_is_tiny():
    m = quantize(Pmf.from_probs([0.5, 0.5]), 16)
    f = compress(np.array([], dtype=np.int64), m)
    assert f.symbol_count == 0
    assert coded_length(f) <= 64
    assert decompress(f, m).size == 0


def test_coded_length_counts_header_and_payload():
    f = Frame(4096, BitString.from_bytes(b"\x00" * 10))
    assert coded_length(f) == 8 * 2 + 80  # varint(4096) is two bytes


# ---------------------------------------------------------------------------
# round trips

models = [
    [0.5, 0.5],
    [0.89, 0.11],
    [0.97, 0.03],
    [0.4, 0.3, 0.2, 0.1],
    [1 / 16] * 16,
]


@settings(deadline=None, max_examples=250)
@given(
    st.integers(0, len(models) - 1),
    st.lists(st.integers(0, 15), min_size=0, max_size=500),
    st.integers(0, 2**31),
)
def test_roundtrip_property(model_idx, raw_symbols, salt):
    probs = models[model_idx]
    m = quantize(Pmf.from_probs(probs), 14)
    symbols = np.array([s % len(probs) for s in raw_symbols], dtype=np.int64)
    f = compress(symbols, m)
    assert f.symbol_count == symbols.size
    assert np.array_equal(decompress(f, m), symbols)
    # serialized form round-trips too
    assert np.array_equal(decompress(f.to_bytes(), m), symbols)


def test_roundtrip_large_block():
    m = quantize(Pmf.from_probs([0.89, 0.11]), 16)
    rng = np.random.default_rng(5)
    symbols = rng.choice(2, size=100_000, p=[0.89, 0.11]).astype(np.int64)
    f = compress(symbols, m)
    assert np.array_equal(decompress(f, m), symbols)


def test_compress_rejects_zero_frequency_symbol():
    m = quantize(Pmf.from_probs([0.6, 0.0, 0.4]), 10)
    with pytest.raises(CodingError):
        compress(np.array([0, 1, 2], dtype=np.int64), m)


def test_compress_rejects_out_of_range():
    m = quantize(Pmf.from_probs([0.5, 0.5]), 16)
    with pytest.raises(CodingError):
        compress(np.array([0, 2], dtype=np.int64), m)


# ---------------------------------------------------------------------------
# rate bound: payload within entropy + quantization gap + flush slack


@pytest.mark.parametrize("n", [1_000, 10_000, 100_000])
def test_rate_tracks_entropy_on_typical_input(n):
    p = 0.11
    h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    m = quantize(Pmf.from_probs([1 - p, p]), 16)
    rng = np.random.default_rng(n)  # fixed seeds, statistically comfortable
    symbols = rng.choice(2, size=n, p=[1 - p, p]).astype(np.int64)
    f = compress(symbols, m)
    # empirical entropy of the drawn sequence, not the ensemble average
    k = symbols.sum() / n
    h_emp = -(k * np.log2(k) + (1 - k) * np.log2(1 - k))
    assert f.payload.length <= n * h_emp + 0.01 * n + 64
    assert f.payload.length >= n * h_emp - 0.01 * n


# ---------------------------------------------------------------------------
# framing errors and prefix decoding


def make_frame(n=2000, seed=0):
    m = quantize(Pmf.from_probs([0.89, 0.11]), 16)
    rng = np.random.default_rng(seed)
    symbols = rng.choice(2, size=n, p=[0.89, 0.11]).astype(np.int64)
    return symbols, compress(symbols, m), m


def test_truncated_payload_detected():
    symbols, f, m = make_frame()
    cut = Frame(f.symbol_count, BitString.from_bytes(f.payload.data[:-3]))
    with pytest.raises(TruncatedFrameError):
        decompress(cut, m)


def test_oversized_payload_detected():
    symbols, f, m = make_frame()
    fat = Frame(f.symbol_count, BitString.from_bytes(f.payload.data + b"\x00\x00"))
    with pytest.raises(InconsistentFrameError):
        decompress(fat, m)


def test_absurd_symbol_count_refused():
    _, f, m = make_frame()
    huge = Frame(2**40, f.payload)
    with pytest.raises(CodingError):
        decompress(huge, m)


def test_prefix_decode_ignores_trailing_bytes():
    symbols, f, m = make_frame()
    blob = f.to_bytes() + b"\xa5" * 37
    got, used = decode_frame_prefix(blob, m)
    assert np.array_equal(got, symbols)
    assert used == len(f.to_bytes())


def test_prefix_decode_truncated_raises():
    symbols, f, m = make_frame()
    with pytest.raises(TruncatedFrameError):
        decode_frame_prefix(f.to_bytes()[:-4], m)


def test_conditional_model_row_access():
    c = quantize_channel(TestChannel.bsc(0.11), 16)
    assert c.out_size == 2
    assert c.rows[0].freq.tolist() == [58327, 7209]
    assert c.rows[1].freq.tolist() == [7209, 58327]
    assert c.cum_matrix().shape == (2, 3)
