"""Hot loops for the range coder and the shaper.

Each kernel is a plain function compiled with numba when it is
available (falling back to pure Python otherwise, ~50x slower but
bit-identical).  Kernels never raise: they return a status code so the
compiled code stays allocation-free and exception-free.  Buffers are
caller-allocated; NEED_MORE_* statuses implement a grow-and-retry
protocol (the caller doubles the buffer and reruns from scratch, which
keeps the kernels stateless).

All arithmetic is int64.  The largest intermediate is low + r*start
< 2^33, far below overflow.

``rangecoder`` holds the readable reference implementation; the test
suite checks these kernels against it byte for byte.
"""

from __future__ import annotations

import numpy as np

OK = 0
ERR_ZERO_FREQ = 1
ERR_CARRY = 2
NEED_MORE_BUF = 3
NEED_MORE_SYM = 4
NEED_MORE_STREAM = 5
SIDE_EXHAUSTED = 6
ERR_RANGE = 7

_MASK32 = 0xFFFFFFFF
_TOP = 1 << 24

try:
    from numba import njit

    _jit = njit(cache=True, nogil=True)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    def _jit(fn):
        return fn

    HAVE_NUMBA = False


@_jit
def encode_kernel(symbols, rows, cum_rows, precision, buf):
    """Range-encode symbols[t] against cum_rows[rows[t]] (row 0 if rows
    is empty).  Returns (nbytes, settled_pre_flush, status).

    nbytes includes the 2-byte terminator; settled_pre_flush is the
    count of buffer bytes already immune to carries when the last
    symbol had been coded (the shaper's deshape direction needs it).
    """
    total = np.int64(1) << precision
    low = np.int64(0)
    rng = np.int64(1) << 32
    nbuf = 0
    last_nonff = -1
    cap = buf.shape[0]
    fixed_row = rows.shape[0] == 0

    n_rows = cum_rows.shape[0]
    size = cum_rows.shape[1] - 1
    for t in range(symbols.shape[0]):
        s = symbols[t]
        if s < 0 or s >= size:
            return nbuf, max(last_nonff, 0), ERR_RANGE
        if fixed_row:
            cum = cum_rows[0]
        else:
            row = rows[t]
            if row < 0 or row >= n_rows:
                return nbuf, max(last_nonff, 0), ERR_RANGE
            cum = cum_rows[row]
        start = cum[s]
        freq = cum[s + 1] - start
        if freq <= 0:
            return nbuf, max(last_nonff, 0), ERR_ZERO_FREQ
        r = rng >> precision
        low += r * start
        if low > _MASK32:
            i = nbuf - 1
            if i < 0:
                return nbuf, 0, ERR_CARRY
            while buf[i] == 0xFF:
                buf[i] = 0
                i -= 1
                if i < 0:
                    return nbuf, 0, ERR_CARRY
            buf[i] += 1
            if buf[i] == 0xFF:
                if nbuf - 1 > i:
                    last_nonff = nbuf - 1
                else:
                    j = i - 1
                    while j >= 0 and buf[j] == 0xFF:
                        j -= 1
                    last_nonff = j
            else:
                last_nonff = nbuf - 1 if nbuf - 1 > i else i
            low &= _MASK32
        if start + freq == total:
            rng -= r * start
        else:
            rng = r * freq
        while rng < _TOP:
            if nbuf >= cap:
                return nbuf, max(last_nonff, 0), NEED_MORE_BUF
            b = (low >> 24) & 0xFF
            buf[nbuf] = b
            if b != 0xFF:
                last_nonff = nbuf
            nbuf += 1
            low = (low << 8) & _MASK32
            rng <<= 8

    settled = max(last_nonff, 0)

    # Deterministic flush: round low up to a multiple of 2^23 (still
    # inside [low, low+range) since range >= 2^24) and emit its top two
    # bytes; the remaining bits of the terminator are zero by choice.
    z = ((low + (np.int64(1) << 23) - 1) >> 23) << 23
    if z > _MASK32:
        i = nbuf - 1
        if i < 0:
            return nbuf, settled, ERR_CARRY
        while buf[i] == 0xFF:
            buf[i] = 0
            i -= 1
            if i < 0:
                return nbuf, settled, ERR_CARRY
        buf[i] += 1
        z &= _MASK32
    if nbuf + 2 > cap:
        return nbuf, settled, NEED_MORE_BUF
    buf[nbuf] = (z >> 24) & 0xFF
    buf[nbuf + 1] = (z >> 16) & 0xFF
    return nbuf + 2, settled, OK


@_jit
def decode_kernel(data, count, rows, cum_rows, precision, out):
    """Decode `count` symbols; bytes past the end of `data` read as 0.

    Returns (shifts, status).  The caller compares shifts+2 with the
    actual payload length to detect truncated or oversized frames.
    """
    total = np.int64(1) << precision
    rng = np.int64(1) << 32
    code = np.int64(0)
    pos = 0
    dlen = data.shape[0]
    shifts = 0
    size = cum_rows.shape[1] - 1
    fixed_row = rows.shape[0] == 0

    for _ in range(4):
        b = np.int64(data[pos]) if pos < dlen else np.int64(0)
        code = (code << 8) | b
        pos += 1

    n_rows = cum_rows.shape[0]
    for t in range(count):
        if fixed_row:
            cum = cum_rows[0]
        else:
            row = rows[t]
            if row < 0 or row >= n_rows:
                return shifts, ERR_RANGE
            cum = cum_rows[row]
        r = rng >> precision
        v = code // r
        if v >= total:
            v = total - 1
        lo = 0
        hi = size + 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if cum[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        s = lo - 1
        start = cum[s]
        freq = cum[s + 1] - start
        out[t] = s
        code -= r * start
        if start + freq == total:
            rng -= r * start
        else:
            rng = r * freq
        while rng < _TOP:
            b = np.int64(data[pos]) if pos < dlen else np.int64(0)
            code = ((code << 8) | b) & _MASK32
            pos += 1
            shifts += 1
            rng <<= 8
    return shifts, OK


@_jit
def shape_kernel(stream, m_bits, side, cum_rows, precision, out_sym, buf):
    """Decode symbols from `stream` against per-position rows keyed by
    `side`, mirroring every step with an encoder, until the mirror has
    settled at least `m_bits` bits of output.

    Returns (nsym, settled_bytes, status).  The mirrored encoder shares
    the decoder's range register (their trajectories are identical by
    construction), so only `low` and the byte buffer are extra state.
    """
    total = np.int64(1) << precision
    rng = np.int64(1) << 32
    code = np.int64(0)
    low = np.int64(0)
    pos = 0
    slen = stream.shape[0]
    nbuf = 0
    last_nonff = -1
    cap = buf.shape[0]
    max_sym = out_sym.shape[0]
    side_len = side.shape[0]
    size = cum_rows.shape[1] - 1

    if m_bits <= 0:
        return 0, 0, OK
    if slen < 4:
        return 0, 0, NEED_MORE_STREAM
    for _ in range(4):
        code = (code << 8) | np.int64(stream[pos])
        pos += 1

    n_rows = cum_rows.shape[0]
    t = 0
    while True:
        if t >= max_sym:
            return t, max(last_nonff, 0), NEED_MORE_SYM
        if t >= side_len:
            return t, max(last_nonff, 0), SIDE_EXHAUSTED
        x = side[t]
        if x < 0 or x >= n_rows:
            return t, max(last_nonff, 0), ERR_RANGE
        cum = cum_rows[x]
        r = rng >> precision
        v = code // r
        if v >= total:
            v = total - 1
        lo = 0
        hi = size + 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if cum[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        s = lo - 1
        start = cum[s]
        freq = cum[s + 1] - start
        code -= r * start
        low += r * start
        if low > _MASK32:
            i = nbuf - 1
            if i < 0:
                return t, 0, ERR_CARRY
            while buf[i] == 0xFF:
                buf[i] = 0
                i -= 1
                if i < 0:
                    return t, 0, ERR_CARRY
            buf[i] += 1
            if buf[i] == 0xFF:
                if nbuf - 1 > i:
                    last_nonff = nbuf - 1
                else:
                    j = i - 1
                    while j >= 0 and buf[j] == 0xFF:
                        j -= 1
                    last_nonff = j
            else:
                last_nonff = nbuf - 1 if nbuf - 1 > i else i
            low &= _MASK32
        if start + freq == total:
            rng -= r * start
        else:
            rng = r * freq
        while rng < _TOP:
            if nbuf >= cap:
                return t, max(last_nonff, 0), NEED_MORE_BUF
            b = (low >> 24) & 0xFF
            buf[nbuf] = b
            if b != 0xFF:
                last_nonff = nbuf
            nbuf += 1
            low = (low << 8) & _MASK32
            if pos >= slen:
                return t, max(last_nonff, 0), NEED_MORE_STREAM
            code = ((code << 8) | np.int64(stream[pos])) & _MASK32
            pos += 1
            rng <<= 8
        out_sym[t] = s
        t += 1
        if last_nonff >= 0 and 8 * last_nonff >= m_bits:
            return t, last_nonff, OK
