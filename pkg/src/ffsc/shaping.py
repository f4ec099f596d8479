"""Bit shaping: embed a bit string into a conditionally-distributed
symbol sequence, exactly invertibly.

``shape`` runs the range *decoder* over the input bits against a
per-position conditional model keyed by the side sequence — the same
trick as bits-back coding: uniform bits in, model-distributed symbols
out.  A mirrored encoder tracks, byte for byte, how much of the input
the decoder has irrevocably consumed; shaping stops at the first
symbol where all ``m`` payload bits are settled.  ``deshape`` is then
just a plain re-encode of the symbols (keyed by the same side samples)
truncated to ``m`` bits.

The input is padded with a fixed repeating 64-bit pattern rather than
zeros.  The pad serves two jobs: it gives the decoder bits to chew on
past the payload, and its known values make corruption detectable —
deshape verifies that every settled bit beyond position ``m`` matches
the pad.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .bits import BitString
from .coder import ConditionalModel
from .errors import ShapingError
from .model import Pmf, TestChannel, conditional_entropy

__all__ = ["PAD_PATTERN", "shape", "deshape", "deshape_raw", "shaped_length"]

PAD_PATTERN = b"\xb4\x5a\x1c\xe3\x8f\x26\xd9\x71"
_PAD_BITS = np.unpackbits(np.frombuffer(PAD_PATTERN, dtype=np.uint8))


def _padded_stream(b: BitString, nbytes: int) -> np.ndarray:
    """b's bits followed by the repeating pad pattern, packed to bytes."""
    m = len(b)
    nbits = nbytes * 8
    reps = -(-(nbits - m) // 64) if nbits > m else 0
    bits = np.concatenate([b.to_array(), np.tile(_PAD_BITS, reps)[: nbits - m]])
    return np.packbits(bits)


def _pad_bit(offset: int) -> int:
    """Pad bit value at the given offset past the payload end."""
    return int(_PAD_BITS[offset % 64])


def shape(b: BitString, side, cm: ConditionalModel) -> tuple[np.ndarray, int]:
    """Turn bits into symbols distributed per cm's rows, keyed by side.

    Returns (symbols, consumed_side_count); the two counts are equal —
    each emitted symbol consumes exactly one side sample.  Raises
    ShapingError if the side buffer runs out before all of b settles.
    """
    m = len(b)
    if m == 0:
        return np.zeros(0, dtype=np.int64), 0
    side_arr = np.asarray(side, dtype=np.int64)
    cum = cm.cum_matrix()
    q = cm.precision

    sym_cap = max(256, 2 * m + 64)
    buf_cap = m // 8 + 256
    stream_cap = m // 8 + 512
    while True:
        out_sym = np.empty(sym_cap, dtype=np.int64)
        buf = np.empty(buf_cap, dtype=np.uint8)
        stream = _padded_stream(b, stream_cap)
        nsym, _, status = _kernels.shape_kernel(
            stream, m, side_arr, cum, q, out_sym, buf
        )
        if status == _kernels.OK:
            return out_sym[:nsym].copy(), int(nsym)
        if status == _kernels.SIDE_EXHAUSTED:
            raise ShapingError(
                f"side provider exhausted after {nsym} symbols "
                f"({side_arr.size} available)"
            )
        if status == _kernels.ERR_RANGE:
            raise ShapingError("side symbol outside the conditional model")
        if status == _kernels.NEED_MORE_SYM:
            sym_cap *= 2
        elif status == _kernels.NEED_MORE_BUF:
            buf_cap *= 2
        elif status == _kernels.NEED_MORE_STREAM:
            stream_cap *= 2
        else:
            raise ShapingError(f"shaper failed with status {status}")


def deshape_raw(xhat, x, cm: ConditionalModel) -> tuple[bytes, int]:
    """Re-encode (xhat, x) and return (all flushed bytes, settled bit count).

    The first `settled` bits are exactly the bits shape() consumed; the
    caller slices its payload out of them.  Used directly by the codec,
    which discovers the payload length only while parsing it.
    """
    sym = np.asarray(xhat, dtype=np.int64)
    rows = np.asarray(x, dtype=np.int64)
    if sym.shape != rows.shape:
        raise ShapingError("xhat and x must have equal length")
    cum = cm.cum_matrix()
    cap = (sym.size * cm.precision) // 8 + 16
    while True:
        buf = np.empty(cap, dtype=np.uint8)
        nbytes, settled, status = _kernels.encode_kernel(
            sym, rows, cum, cm.precision, buf
        )
        if status == _kernels.OK:
            return buf[:nbytes].tobytes(), 8 * int(settled)
        if status == _kernels.ERR_ZERO_FREQ:
            raise ShapingError("(xhat, x) pair with zero quantized probability")
        if status == _kernels.ERR_RANGE:
            raise ShapingError("symbol outside the conditional model")
        if status == _kernels.NEED_MORE_BUF:
            cap *= 2
            continue
        raise ShapingError(f"deshaper failed with status {status}")


def deshape(xhat, x, cm: ConditionalModel, m: int) -> BitString:
    """Recover the m bits that shape() embedded into (xhat, x)."""
    if m < 0:
        raise ShapingError("negative bit count")
    if m == 0:
        return BitString.empty()
    data, settled = deshape_raw(xhat, x, cm)
    if settled < m:
        raise ShapingError(
            f"re-encoded sequence settles only {settled} bits, caller "
            f"claims m={m}: inconsistent inputs"
        )
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    for i in range(m, settled):
        if bits[i] != _pad_bit(i - m):
            raise ShapingError(
                f"pad mismatch at bit {i}: (xhat, x) does not deshape to "
                f"an m={m} bit string"
            )
    return BitString.from_bits(bits[:m])


def shaped_length(m: int, prior: Pmf, ch: TestChannel) -> float:
    """Predicted symbol count when shaping m bits: m / H(out|in).

    Planning-only accuracy (about ±10%); the codec never relies on it.
    """
    if m < 0:
        raise ShapingError("negative bit count")
    if m == 0:
        return 0.0
    h = conditional_entropy(ch, prior)
    if h <= 0:
        raise ShapingError(
            "deterministic channel: shaping would never consume its input"
        )
    return m / h
