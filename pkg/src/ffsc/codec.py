"""The recursive feedforward codec.

The encoder works on a reversed view of the source.  Pass 1 turns the
first M reversed samples into a seeded "noisy" block (one draw from the
quantized test-channel row of each sample).  Every later pass
entropy-codes the previous block's reconstruction and *shapes* those
bits onto fresh source samples, so each pass's block carries the
previous one inside it.  Only the final block's frame is transmitted.

The decoder unravels this with the unit-lag side information: the final
frame decodes to the block that sits *first* in original time.  It
emits those reconstructions, is then allowed to read the matching true
samples, deshapes the pair to recover the previous frame, and repeats.
The reconstruction therefore streams out in original time order, and
every oracle read is strictly behind the emission high-water mark.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .bits import BitString, read_uvarint
from .coder import (
    ConditionalModel,
    Frame,
    QuantizedModel,
    coded_length,
    compress,
    decode_frame_prefix,
    model_digest,
    quantize,
    quantize_channel,
)
from .errors import CausalityError, CodingError, ConfigError, StreamFormatError
from .model import (
    DistortionMatrix,
    Pmf,
    TestChannel,
    blahut_arimoto,
    growth_factor,
    is_strongly_typical,
    TypicalityParams,
)
from .rng import SplitMix64
from .shaping import deshape_raw, shape, _pad_bit

__all__ = [
    "CodecConfig",
    "FeedforwardOracle",
    "EncodeResult",
    "DecodeResult",
    "MeasureReport",
    "encode",
    "decode",
    "plan_passes",
    "measure",
    "MAGIC",
    "STREAM_VERSION",
    "HEADER_LEN",
]

MAGIC = b"FFSC"
STREAM_VERSION = 1
_HEADER_FMT = "<4sBBHIQQ"
HEADER_LEN = struct.calcsize(_HEADER_FMT)  # 28 bytes


@dataclass(frozen=True, eq=False)
class CodecConfig:
    prior: Pmf
    channel: TestChannel
    distortion: DistortionMatrix
    min_block: int = 4096
    passes: int = 5
    precision: int = 16
    seed: int = 1
    seed_block_mode: str = "sampled"
    delta: float = 0.02

    def __post_init__(self):
        if self.min_block < 1:
            raise ConfigError("min_block must be >= 1")
        if self.passes < 1:
            raise ConfigError("passes must be >= 1")
        if not 2 <= self.precision <= 24:
            raise ConfigError("precision outside [2, 24]")
        if self.seed_block_mode not in ("sampled", "raw"):
            raise ConfigError(f"unknown seed_block_mode {self.seed_block_mode!r}")
        if not 0 < self.delta < 1:
            raise ConfigError("delta outside (0, 1)")
        if self.distortion.entries.shape != self.channel.rows.shape:
            raise ConfigError("distortion matrix shape must match the channel")
        growth_factor(self.prior, self.channel)  # rejects degenerate channels

    def quantized(self) -> tuple[QuantizedModel, ConditionalModel]:
        marg = quantize(self.channel.marginal(self.prior), self.precision)
        cond = quantize_channel(self.channel, self.precision)
        return marg, cond


class FeedforwardOracle:
    """Releases true source samples strictly behind the emission front.

    The decoder calls ``emit(k)`` after producing k reconstructions and
    may then ``reveal`` indices below the new high-water mark only.
    Every access is recorded so tests can audit the unit-lag discipline
    after the fact.
    """

    def __init__(self, source):
        self._src = np.ascontiguousarray(source, dtype=np.int64)
        self.emitted = 0
        self.audit_log: list[tuple[int, int, int]] = []

    def __len__(self) -> int:
        return int(self._src.size)

    def emit(self, count: int = 1):
        if count < 0:
            raise CausalityError("cannot emit a negative number of samples")
        if self.emitted + count > self._src.size:
            raise CausalityError(
                f"emitting {self.emitted + count} reconstructions but the "
                f"source has only {self._src.size} samples"
            )
        self.emitted += count

    def reveal(self, i: int) -> int:
        return int(self.reveal_range(i, i + 1)[0])

    def reveal_range(self, start: int, stop: int) -> np.ndarray:
        if start < 0 or stop < start:
            raise CausalityError(f"bad reveal range [{start}, {stop})")
        if stop > self.emitted:
            raise CausalityError(
                f"reveal of sample {stop - 1} before it is earned: only "
                f"{self.emitted} reconstructions emitted (unit lag violated)"
            )
        self.audit_log.append((self.emitted, start, stop))
        return self._src[start:stop]

    def audit_clean(self) -> bool:
        """True iff every recorded access obeyed the unit-lag rule."""
        return all(stop <= emitted for emitted, _, stop in self.audit_log)


@dataclass(frozen=True, eq=False)
class EncodeResult:
    bitstream: bytes
    xhat: np.ndarray          # encoder-internal reconstruction, original order
    n: int
    pass_lengths: list[int]
    rate: float
    total_bits: int
    atypical_blocks: list[int] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class DecodeResult:
    xhat: np.ndarray
    per_sample_distortion: np.ndarray
    mean_distortion: float
    pass_lengths: list[int]
    n: int
    total_bits: int
    rate: float


@dataclass(frozen=True, eq=False)
class MeasureReport:
    per_sample_distortion: np.ndarray
    mean_distortion: float
    rate: float
    rd_reference: float
    gap: float


def _sample_rows(rng: SplitMix64, cond: ConditionalModel, rows: np.ndarray):
    """One inverse-CDF draw from cond.rows[rows[i]] per position."""
    q = cond.precision
    u = (rng.fill_u64(rows.size) >> np.uint64(64 - q)).astype(np.int64)
    cum = cond.cum_matrix()[rows]          # (n, out_size + 1)
    return (u[:, None] >= cum[:, 1:-1]).sum(axis=1, dtype=np.int64)


def _pack_header(cfg: CodecConfig, digest: int) -> bytes:
    return struct.pack(
        _HEADER_FMT, MAGIC, STREAM_VERSION, cfg.precision,
        cfg.passes, cfg.min_block, cfg.seed & (2**64 - 1), digest,
    )


def encode(source, cfg: CodecConfig) -> EncodeResult:
    """Compress a source prefix; consumes a data-dependent n samples.

    The amount consumed is roughly min_block * (rho^K - 1)/(rho - 1)
    where rho is the growth factor; the supplied buffer must cover it
    or a ShapingError("side provider exhausted") is raised.
    """
    src = np.ascontiguousarray(source, dtype=np.int64)
    size = cfg.prior.alphabet.size
    if src.size and (src.min() < 0 or src.max() >= size):
        raise CodingError(f"source symbol outside alphabet of size {size}")
    M = cfg.min_block
    if src.size < M:
        raise CodingError(
            f"source exhausted: {src.size} samples < min_block {M}"
        )
    marg, cond = cfg.quantized()
    rev = src[::-1]

    if cfg.seed_block_mode == "sampled":
        rng = SplitMix64(cfg.seed)
        block = _sample_rows(rng, cond, rev[:M])
    else:
        block = rev[:M].copy()
    frame = compress(block, marg)
    blocks = [block]
    lengths = [M]
    pos = M
    params = TypicalityParams(cfg.delta)
    atypical = [1] if not is_strongly_typical(
        rev[:M], cfg.prior, params) else []

    for pass_idx in range(2, cfg.passes + 1):
        bits = BitString.from_bytes(frame.to_bytes())
        symbols, consumed = shape(bits, rev[pos:], cond)
        if not is_strongly_typical(rev[pos:pos + consumed], cfg.prior, params):
            atypical.append(pass_idx)
        blocks.append(symbols)
        lengths.append(consumed)
        pos += consumed
        frame = compress(symbols, marg)

    digest = model_digest(marg, cond)
    stream = _pack_header(cfg, digest) + frame.to_bytes()
    xhat = np.concatenate(blocks)[::-1].copy()
    n = pos
    total_bits = 8 * len(stream)
    return EncodeResult(
        bitstream=stream,
        xhat=xhat,
        n=n,
        pass_lengths=lengths,
        rate=total_bits / n,
        total_bits=total_bits,
        atypical_blocks=atypical,
    )


def _parse_header(stream: bytes, cfg: CodecConfig, digest: int):
    if len(stream) < HEADER_LEN:
        raise StreamFormatError("stream shorter than its header")
    magic, version, q, k, m, seed, got_digest = struct.unpack(
        _HEADER_FMT, stream[:HEADER_LEN]
    )
    if magic != MAGIC:
        raise StreamFormatError(f"bad magic {magic!r}")
    if version != STREAM_VERSION:
        raise StreamFormatError(f"unsupported stream version {version}")
    if (q, k, m) != (cfg.precision, cfg.passes, cfg.min_block):
        raise StreamFormatError(
            f"stream parameters (q={q}, K={k}, M={m}) do not match the "
            f"configuration (q={cfg.precision}, K={cfg.passes}, "
            f"M={cfg.min_block})"
        )
    if got_digest != digest:
        raise StreamFormatError(
            "model digest mismatch: stream was produced with different "
            "probability tables"
        )
    if seed != cfg.seed & (2**64 - 1):
        raise StreamFormatError("seed mismatch between stream and config")


def decode(stream: bytes, oracle: FeedforwardOracle, cfg: CodecConfig) -> DecodeResult:
    """Invert encode() using unit-lag feedforward side information."""
    marg, cond = cfg.quantized()
    _parse_header(stream, cfg, model_digest(marg, cond))
    frame_bytes = np.frombuffer(stream[HEADER_LEN:], dtype=np.uint8)

    block, used = decode_frame_prefix(frame_bytes, marg)
    if used != frame_bytes.size:
        raise StreamFormatError(
            f"final frame occupies {used} bytes but the stream carries "
            f"{frame_bytes.size}"
        )

    chunks = []
    lengths_rev = []
    base = 0
    for _ in range(cfg.passes - 1):
        lengths_rev.append(int(block.size))
        chunk = block[::-1]
        chunks.append(chunk)
        oracle.emit(chunk.size)
        x_chunk = oracle.reveal_range(base, base + chunk.size)
        base += chunk.size
        data, settled = deshape_raw(block, x_chunk[::-1], cond)
        block, used = decode_frame_prefix(data, marg)
        _check_pad_tail(data, 8 * used, settled)

    lengths_rev.append(int(block.size))
    if block.size != cfg.min_block:
        raise StreamFormatError(
            f"seed block has {block.size} symbols, expected min_block "
            f"{cfg.min_block}"
        )
    chunk = block[::-1]
    chunks.append(chunk)
    oracle.emit(chunk.size)
    base += chunk.size

    xhat = np.concatenate(chunks)
    n = int(xhat.size)
    x = oracle.reveal_range(0, n)
    per_sample = cfg.distortion.entries[x, xhat]
    total_bits = 8 * len(stream)
    return DecodeResult(
        xhat=xhat,
        per_sample_distortion=per_sample,
        mean_distortion=float(per_sample.mean()) if n else 0.0,
        pass_lengths=lengths_rev[::-1],
        n=n,
        total_bits=total_bits,
        rate=total_bits / n,
    )


def _check_pad_tail(data: bytes, m_bits: int, settled_bits: int):
    """Settled bits past the embedded frame must match the pad pattern."""
    if m_bits > settled_bits:
        raise CodingError(
            f"recovered frame spans {m_bits} bits but only {settled_bits} "
            f"are settled: corrupted stream"
        )
    arr = np.unpackbits(
        np.frombuffer(data, dtype=np.uint8),
        count=settled_bits if settled_bits else None,
    )
    for i in range(m_bits, settled_bits):
        if arr[i] != _pad_bit(i - m_bits):
            raise CodingError(f"pad mismatch at bit {i}: corrupted stream")


def plan_passes(cfg: CodecConfig, target_n: int) -> int:
    """Smallest pass count whose predicted total covers target_n samples."""
    if target_n < cfg.min_block:
        raise ConfigError(
            f"target_n {target_n} below min_block {cfg.min_block}"
        )
    rho = growth_factor(cfg.prior, cfg.channel)
    total = float(cfg.min_block)
    length = float(cfg.min_block)
    k = 1
    while total < target_n:
        k += 1
        if k > 64:
            raise ConfigError("pass count exceeds 64; check the growth factor")
        length *= rho
        total += length
    return k


def measure(x, result: DecodeResult, d: DistortionMatrix) -> MeasureReport:
    """Score a decode against the true source.

    The rate-distortion reference is computed at the *measured*
    distortion with the empirical distribution of x, so the gap column
    answers: how far is this run from the best possible rate for what
    it actually delivered?
    """
    x = np.ascontiguousarray(x, dtype=np.int64)
    if x.size != result.xhat.size:
        raise ConfigError("source length does not match the reconstruction")
    per_sample = d.entries[x, result.xhat]
    mean_d = float(per_sample.mean()) if x.size else 0.0
    counts = np.bincount(x, minlength=d.entries.shape[0]).astype(np.float64)
    prior = Pmf.from_probs(counts / max(x.size, 1))
    _, rd_ref, _ = blahut_arimoto(prior, d, mean_d)
    return MeasureReport(
        per_sample_distortion=per_sample,
        mean_distortion=mean_d,
        rate=result.rate,
        rd_reference=rd_ref,
        gap=result.rate - rd_ref,
    )
