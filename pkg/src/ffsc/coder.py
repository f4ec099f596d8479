"""Lossless entropy coding for i.i.d. models with exact framing.

A ``Frame`` is a varint symbol count followed by a byte-aligned
payload.  Thanks to the coder's deterministic flush (see
``rangecoder``), the payload length in bytes always equals the number
of renormalization shifts plus two, so the decoder can recompute it —
frames are self-delimiting without a separate length field, and both
truncation and trailing garbage are detectable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bits import BitString, fnv1a64, read_uvarint, write_uvarint
from .errors import (
    CodingError,
    InconsistentFrameError,
    QuantizationError,
    TruncatedFrameError,
)
from .model import Pmf, TestChannel

__all__ = [
    "QuantizedModel",
    "ConditionalModel",
    "Frame",
    "quantize",
    "quantize_channel",
    "compress",
    "decompress",
    "decode_frame_prefix",
    "coded_length",
    "model_digest",
]

_EMPTY_ROWS = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class QuantizedModel:
    """Integer frequency table with total 2^precision.

    Symbols whose true probability is positive always get frequency
    >= 1 (so they stay codable); true zeros stay zero (so impossible
    symbols are detected instead of silently coded).
    """

    freq: np.ndarray
    precision: int
    cum: np.ndarray = field(init=False)

    def __post_init__(self):
        f = np.ascontiguousarray(self.freq, dtype=np.int64)
        if not 2 <= self.precision <= 24:
            raise QuantizationError(f"precision {self.precision} outside [2, 24]")
        total = 1 << self.precision
        if f.sum() != total:
            raise QuantizationError(
                f"frequencies sum to {f.sum()}, expected {total}"
            )
        if np.any(f < 0):
            raise QuantizationError("negative frequency")
        f.setflags(write=False)
        cum = np.zeros(f.size + 1, dtype=np.int64)
        np.cumsum(f, out=cum[1:])
        cum.setflags(write=False)
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "cum", cum)

    @property
    def size(self) -> int:
        return int(self.freq.size)

    @property
    def total(self) -> int:
        return 1 << self.precision

    def cum_matrix(self) -> np.ndarray:
        return self.cum.reshape(1, -1)


@dataclass(frozen=True, eq=False)
class ConditionalModel:
    """One quantized row per conditioning symbol."""

    rows: tuple[QuantizedModel, ...]

    def __post_init__(self):
        if not self.rows:
            raise QuantizationError("conditional model needs at least one row")
        precisions = {r.precision for r in self.rows}
        sizes = {r.size for r in self.rows}
        if len(precisions) != 1 or len(sizes) != 1:
            raise QuantizationError("conditional rows must share shape/precision")
        cum = np.stack([r.cum for r in self.rows])
        cum.setflags(write=False)
        object.__setattr__(self, "_cum_matrix", cum)

    @property
    def precision(self) -> int:
        return self.rows[0].precision

    @property
    def out_size(self) -> int:
        return self.rows[0].size

    def cum_matrix(self) -> np.ndarray:
        return self._cum_matrix


def quantize(p: Pmf, precision: int = 16) -> QuantizedModel:
    """Largest-remainder rounding of a pmf to integer frequencies.

    Positive-probability symbols are guaranteed frequency >= 1, taking
    units from the largest entries if rounding starved any of them.
    """
    if not 2 <= precision <= 24:
        raise QuantizationError(f"precision {precision} outside [2, 24]")
    total = 1 << precision
    probs = p.probs
    support = probs > 0
    if int(support.sum()) > total:
        raise QuantizationError(
            f"alphabet support {int(support.sum())} exceeds total {total}"
        )
    raw = probs * total
    freq = np.floor(raw).astype(np.int64)
    remainder = raw - freq
    deficit = total - int(freq.sum())
    if deficit:
        order = np.argsort(-remainder, kind="stable")
        freq[order[:deficit]] += 1
    starved = np.flatnonzero(support & (freq == 0))
    for idx in starved:
        donor = int(np.argmax(freq))
        if freq[donor] <= 1:
            raise QuantizationError("cannot give every symbol a nonzero slot")
        freq[donor] -= 1
        freq[idx] += 1
    freq[~support] = 0
    if freq.sum() != total:  # pragma: no cover - accounting is exact above
        raise QuantizationError("internal rounding error")
    return QuantizedModel(freq, precision)


def quantize_channel(ch: TestChannel, precision: int = 16) -> ConditionalModel:
    rows = tuple(
        quantize(Pmf(ch.output_alphabet, row), precision) for row in ch.rows
    )
    return ConditionalModel(rows)


def model_digest(marginal: QuantizedModel, cond: ConditionalModel) -> int:
    """64-bit fingerprint of the quantized tables (FNV-1a)."""
    parts = [
        marginal.precision.to_bytes(1, "little"),
        marginal.size.to_bytes(2, "little"),
        marginal.freq.astype("<u4").tobytes(),
        len(cond.rows).to_bytes(2, "little"),
    ]
    parts.extend(r.freq.astype("<u4").tobytes() for r in cond.rows)
    return fnv1a64(b"".join(parts))


@dataclass(frozen=True, eq=False)
class Frame:
    """Self-delimiting coded block: varint symbol count + payload."""

    symbol_count: int
    payload: BitString

    def __post_init__(self):
        if self.symbol_count < 0:
            raise CodingError("negative symbol count")
        if self.payload.length % 8:
            raise CodingError("frame payload must be byte-aligned")

    def to_bytes(self) -> bytes:
        return write_uvarint(self.symbol_count) + self.payload.data


def coded_length(f: Frame) -> int:
    """Total frame size in bits (varint header + payload)."""
    return 8 * len(write_uvarint(f.symbol_count)) + f.payload.length


def compress(symbols, model: QuantizedModel) -> Frame:
    """Entropy-code an i.i.d. symbol sequence into a frame."""
    sym = np.ascontiguousarray(symbols, dtype=np.int64)
    if sym.ndim != 1:
        raise CodingError("symbols must be one-dimensional")
    if sym.size:
        if sym.min() < 0 or sym.max() >= model.size:
            raise CodingError(
                f"symbol out of range for model of size {model.size}"
            )
    cap = (sym.size * model.precision) // 8 + 16
    cum = model.cum_matrix()
    while True:
        buf = np.empty(cap, dtype=np.uint8)
        nbytes, _, status = _kernels.encode_kernel(
            sym, _EMPTY_ROWS, cum, model.precision, buf
        )
        if status == _kernels.OK:
            return Frame(int(sym.size), BitString.from_bytes(buf[:nbytes].tobytes()))
        if status == _kernels.ERR_ZERO_FREQ:
            raise CodingError("symbol with zero model frequency")
        if status == _kernels.NEED_MORE_BUF:
            cap *= 2
            continue
        raise CodingError(f"encoder failed with status {status}")


def _decode_count(data: np.ndarray, count: int, model: QuantizedModel):
    if count > 2**31:
        raise CodingError(f"frame declares {count} symbols; refusing to decode")
    out = np.empty(count, dtype=np.int64)
    shifts, status = _kernels.decode_kernel(
        data, count, _EMPTY_ROWS, model.cum_matrix(), model.precision, out
    )
    if status != _kernels.OK:  # pragma: no cover - decode_kernel cannot fail
        raise CodingError(f"decoder failed with status {status}")
    return out, int(shifts)


def decompress(f, model: QuantizedModel) -> np.ndarray:
    """Invert compress(); validates the payload length exactly.

    Accepts a Frame or its serialized bytes.
    """
    if not isinstance(f, Frame):
        raw = bytes(f)
        count, off = read_uvarint(raw)
        f = Frame(count, BitString.from_bytes(raw[off:]))
    data = np.frombuffer(f.payload.data, dtype=np.uint8)
    out, shifts = _decode_count(data, f.symbol_count, model)
    expected = shifts + 2
    if len(f.payload.data) < expected:
        raise TruncatedFrameError(
            f"payload has {len(f.payload.data)} bytes, needs {expected}"
        )
    if len(f.payload.data) > expected:
        raise InconsistentFrameError(
            f"payload has {len(f.payload.data)} bytes, expected {expected}"
        )
    return out


def decode_frame_prefix(data, model: QuantizedModel) -> tuple[np.ndarray, int]:
    """Decode a frame embedded at the start of `data`.

    Returns (symbols, total frame length in bytes).  Bytes after the
    frame are ignored, which is exactly what the feedforward decoder
    needs: a deshaped bit buffer contains one frame followed by pad
    bits.  Raises TruncatedFrameError if `data` cannot even hold the
    frame it declares.
    """
    if isinstance(data, np.ndarray):
        raw = data.tobytes()
        arr = data
    else:
        raw = bytes(data)
        arr = np.frombuffer(raw, dtype=np.uint8)
    count, off = read_uvarint(raw)
    out, shifts = _decode_count(arr[off:], count, model)
    nbytes = off + shifts + 2
    if nbytes > len(raw):
        raise TruncatedFrameError(
            f"embedded frame needs {nbytes} bytes, buffer has {len(raw)}"
        )
    return out, nbytes
