"""Core coder engine: reference classes, jitted kernels, and the
settled-prefix property that the shaping layer depends on."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from ffsc import _kernels
from ffsc.coder import quantize
from ffsc.model import Pmf
from ffsc.rangecoder import RANGE_INIT, TOP, RangeDecoder, RangeEncoder


def encode_reference(symbols, freq, precision):
    total = 1 << precision
    cum = np.concatenate(([0], np.cumsum(freq)))
    assert cum[-1] == total
    enc = RangeEncoder(precision)
    for s in symbols:
        enc.encode(int(cum[s]), int(freq[s]))
    return bytes(enc.finish())


def decode_reference(data, count, freq, precision):
    cum = np.concatenate(([0], np.cumsum(freq)))
    dec = RangeDecoder(data, precision)
    out = []
    for _ in range(count):
        v = dec.decode_value()
        s = int(np.searchsorted(cum, v, side="right")) - 1
        out.append(s)
        dec.consume(int(cum[s]), int(freq[s]))
    return out


NO_ROWS = np.empty(0, dtype=np.int64)  # fixed-row mode: row 0 for every symbol


def kernel_encode(symbols, freq, precision):
    sym = np.asarray(symbols, dtype=np.int64)
    cum = np.zeros((1, len(freq) + 1), dtype=np.int64)
    cum[0, 1:] = np.cumsum(freq)
    buf = np.empty(sym.size * 4 + 64, dtype=np.uint8)
    nbytes, settled, status = _kernels.encode_kernel(sym, NO_ROWS, cum, precision, buf)
    assert status == _kernels.OK
    return bytes(buf[:nbytes].tobytes()), settled


def kernel_decode(data, count, freq, precision):
    cum = np.zeros((1, len(freq) + 1), dtype=np.int64)
    cum[0, 1:] = np.cumsum(freq)
    arr = np.frombuffer(data, dtype=np.uint8)
    out = np.empty(count, dtype=np.int64)
    shifts, status = _kernels.decode_kernel(arr, count, NO_ROWS, cum, precision, out)
    assert status == _kernels.OK
    return out.tolist(), shifts


FREQ_CASES = [
    [32768, 32768],
    [58327, 7209],
    [7209, 58327],
    [65535, 1],
    [1, 65535],
    [21845, 21846, 21845],
    [60000, 2768, 1536, 1232],
]


@pytest.mark.parametrize("freq", FREQ_CASES)
def test_reference_roundtrip(freq):
    rng = np.random.default_rng(hash(tuple(freq)) % 2**32)
    p = np.array(freq) / sum(freq)
    symbols = rng.choice(len(freq), size=2000, p=p).tolist()
    data = encode_reference(symbols, freq, 16)
    assert decode_reference(data, len(symbols), freq, 16) == symbols


@pytest.mark.parametrize("freq", FREQ_CASES)
def test_kernel_matches_reference_bytes(freq):
    "The jitted encoder and the reference class must emit identical bytes."
    rng = np.random.default_rng(len(freq))
    p = np.array(freq) / sum(freq)
    for trial in range(5):
        symbols = rng.choice(len(freq), size=1500, p=p).tolist()
        ref = encode_reference(symbols, freq, 16)
        got, _ = kernel_encode(symbols, freq, 16)
        assert got == ref


@pytest.mark.parametrize("freq", FREQ_CASES)
def test_kernel_roundtrip(freq):
    rng = np.random.default_rng(99 + len(freq))
    p = np.array(freq) / sum(freq)
    symbols = rng.choice(len(freq), size=3000, p=p).tolist()
    data, _ = kernel_encode(symbols, freq, 16)
    back, shifts = kernel_decode(data, len(symbols), freq, 16)
    assert back == symbols
    assert len(data) == shifts + 2  # deterministic two-byte flush


def test_flush_is_exactly_two_bytes_beyond_shifts():
    for count in (0, 1, 7, 100):
        symbols = [0] * count
        data, _ = kernel_encode(symbols, [32768, 32768], 16)
        _, shifts = kernel_decode(data, count, [32768, 32768], 16)
        assert len(data) == shifts + 2


def test_carry_propagation_stress():
    # skew model, long runs of the most likely symbol drive `low` toward
    # the carry boundary; decode must still be exact
    freq = [65535, 1]
    symbols = ([0] * 5000) + [1] + ([0] * 5000) + [1, 1] + [0] * 100
    data = encode_reference(symbols, freq, 16)
    assert decode_reference(data, len(symbols), freq, 16) == symbols
    got, _ = kernel_encode(symbols, freq, 16)
    assert got == data


@settings(deadline=None, max_examples=200)
@given(
    st.lists(st.integers(0, 3), min_size=0, max_size=400),
    st.integers(0, 2**32 - 1),
)
def test_roundtrip_property_any_symbols(symbols, salt):
    rng = np.random.default_rng(salt)
    raw = rng.integers(1, 1000, size=4)
    freq = quantize(Pmf.from_probs(raw / raw.sum()), 12).freq.tolist()
    data, _ = kernel_encode(symbols, freq, 12)
    back, _ = kernel_decode(data, len(symbols), freq, 12)
    assert back == symbols


def test_settled_prefix_is_stable_under_extension():
    """Bytes before the last non-0xFF byte never change when more
    symbols are appended -- the invariant the shaper's stop rule uses."""
    freq = [58327, 7209]
    rng = np.random.default_rng(7)
    symbols = rng.choice(2, size=4000, p=[0.89, 0.11]).tolist()
    cum = np.zeros((1, 3), dtype=np.int64)
    cum[0, 1:] = np.cumsum(freq)
    enc = RangeEncoder(16)
    snapshots = []
    for s in symbols:
        enc.encode(int(cum[0, s]), freq[s])
        settled = enc.settled_count()
        snapshots.append((settled, bytes(enc.buf[:settled])))
    final = bytes(enc.finish())
    for settled, prefix in snapshots:
        assert final[:settled] == prefix


def test_decoder_reads_exactly_payload_plus_nothing():
    """Appending arbitrary garbage after the payload cannot change the
    decoded symbols (the flush leaves a safety margin)."""
    freq = [58327, 7209]
    rng = np.random.default_rng(21)
    symbols = rng.choice(2, size=2000, p=[0.89, 0.11]).tolist()
    data, _ = kernel_encode(symbols, freq, 16)
    for junk in (b"", b"\x00\x00\x00", b"\xff\xff\xff\xff", bytes(range(64))):
        back, shifts = kernel_decode(data + junk, len(symbols), freq, 16)
        assert back == symbols
        assert shifts + 2 == len(data)


def test_constants_are_consistent():
    assert RANGE_INIT == 1 << 32
    assert TOP == 1 << 24


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="fallback already in use")
def test_pure_python_fallback_matches_jit():
    freq = [58327, 7209]
    rng = np.random.default_rng(3)
    symbols = rng.choice(2, size=800, p=[0.89, 0.11])
    sym = symbols.astype(np.int64)
    cum = np.zeros((1, 3), dtype=np.int64)
    cum[0, 1:] = np.cumsum(freq)

    buf_a = np.empty(8192, dtype=np.uint8)
    buf_b = np.empty(8192, dtype=np.uint8)
    na, sa, ra = _kernels.encode_kernel(sym, NO_ROWS, cum, 16, buf_a)
    nb, sb, rb = _kernels.encode_kernel.py_func(sym, NO_ROWS, cum, 16, buf_b)
    assert (na, sa, ra) == (nb, sb, rb)
    assert buf_a[:na].tobytes() == buf_b[:nb].tobytes()

    out_a = np.empty(sym.size, dtype=np.int64)
    out_b = np.empty(sym.size, dtype=np.int64)
    res_a = _kernels.decode_kernel(buf_a[:na], sym.size, NO_ROWS, cum, 16, out_a)
    res_b = _kernels.decode_kernel.py_func(buf_a[:na], sym.size, NO_ROWS, cum, 16, out_b)
    assert res_a == res_b
    assert np.array_equal(out_a, out_b)
