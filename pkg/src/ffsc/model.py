"""Probability models, entropies, typicality, and a rate-distortion solver.

Everything here is base-2: entropies and rates are in bits per symbol,
with the convention 0·log 0 = 0.  All containers are immutable after
construction (arrays are frozen), so they can be shared freely across
threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ModelError

__all__ = [
    "Alphabet",
    "Pmf",
    "TestChannel",
    "DistortionMatrix",
    "TypicalityParams",
    "entropy",
    "conditional_entropy",
    "mutual_information",
    "expected_distortion",
    "blahut_arimoto",
    "is_strongly_typical",
    "is_jointly_typical",
    "growth_factor",
    "binary_entropy",
    "load_model",
    "bundled_model_names",
]

_LOG2 = np.log(2.0)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Alphabet:
    """A finite symbol set {0, 1, ..., size-1}."""

    size: int

    def __post_init__(self):
        if not 2 <= self.size <= 2**16:
            raise ModelError(f"alphabet size {self.size} outside [2, 65536]")


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function over an alphabet."""

    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (self.alphabet.size,):
            raise ModelError(
                f"pmf has {p.shape} entries for alphabet of {self.alphabet.size}"
            )
        if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
            raise ModelError("pmf entries must be in [0, 1] and not NaN")
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise ModelError(f"pmf sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", _freeze(p))

    @classmethod
    def from_probs(cls, probs) -> "Pmf":
        probs = np.asarray(probs, dtype=np.float64)
        return cls(Alphabet(len(probs)), probs)

    @classmethod
    def uniform(cls, size: int) -> "Pmf":
        return cls(Alphabet(size), np.full(size, 1.0 / size))


@dataclass(frozen=True, eq=False)
class TestChannel:
    """Conditional distribution p(output | input): one pmf row per input."""

    __test__ = False  # keep pytest from collecting this as a test class

    input_alphabet: Alphabet
    output_alphabet: Alphabet
    rows: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.rows, dtype=np.float64)
        shape = (self.input_alphabet.size, self.output_alphabet.size)
        if w.shape != shape:
            raise ModelError(f"channel matrix {w.shape}, expected {shape}")
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise ModelError("channel entries must be non-negative, not NaN")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-12):
            raise ModelError("every channel row must sum to 1")
        object.__setattr__(self, "rows", _freeze(w))

    @classmethod
    def from_rows(cls, rows) -> "TestChannel":
        rows = np.asarray(rows, dtype=np.float64)
        return cls(Alphabet(rows.shape[0]), Alphabet(rows.shape[1]), rows)

    @classmethod
    def bsc(cls, crossover: float) -> "TestChannel":
        """Binary symmetric channel with the given crossover probability."""
        e = float(crossover)
        return cls.from_rows([[1 - e, e], [e, 1 - e]])

    def marginal(self, prior: Pmf) -> Pmf:
        _check_match(prior, self)
        return Pmf(self.output_alphabet, prior.probs @ self.rows)


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    """Per-pair distortion d(x, x_hat) >= 0 with a finite maximum."""

    entries: np.ndarray
    d_max: float = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.entries, dtype=np.float64)
        if d.ndim != 2:
            raise ModelError("distortion matrix must be 2-D")
        if np.any(np.isnan(d)) or np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ModelError("distortion entries must be finite and >= 0")
        object.__setattr__(self, "entries", _freeze(d))
        object.__setattr__(self, "d_max", float(d.max()) if d.size else 0.0)

    @classmethod
    def hamming(cls, size: int) -> "DistortionMatrix":
        return cls(1.0 - np.eye(size))


@dataclass(frozen=True)
class TypicalityParams:
    """Maximum allowed deviation of empirical frequencies."""

    delta: float = 0.02

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ModelError(f"delta {self.delta} outside (0, 1)")


def _check_match(prior: Pmf, ch: TestChannel):
    if prior.alphabet.size != ch.input_alphabet.size:
        raise ModelError(
            f"prior alphabet {prior.alphabet.size} != channel input "
            f"{ch.input_alphabet.size}"
        )


# -- entropic quantities ----------------------------------------------

def entropy(p: Pmf) -> float:
    """Shannon entropy in bits."""
    q = p.probs[p.probs > 0]
    return float(-(q * np.log(q)).sum() / _LOG2)


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return float(-(p * np.log(p) + (1 - p) * np.log(1 - p)) / _LOG2)


def conditional_entropy(ch: TestChannel, prior: Pmf) -> float:
    """H(output | input) under the given input distribution, in bits."""
    _check_match(prior, ch)
    w = ch.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(w > 0, w * np.log(w), 0.0)
    return float(-(prior.probs @ t.sum(axis=1)) / _LOG2)


def mutual_information(prior: Pmf, ch: TestChannel) -> float:
    """I(input; output) = H(output) - H(output | input), in bits."""
    return entropy(ch.marginal(prior)) - conditional_entropy(ch, prior)


def expected_distortion(prior: Pmf, ch: TestChannel, d: DistortionMatrix) -> float:
    _check_match(prior, ch)
    if d.entries.shape != ch.rows.shape:
        raise ModelError(
            f"distortion matrix {d.entries.shape} does not match channel "
            f"{ch.rows.shape}"
        )
    return float(prior.probs @ (ch.rows * d.entries).sum(axis=1))


def growth_factor(prior: Pmf, ch: TestChannel) -> float:
    """H(output) / H(output | input): the per-pass block expansion ratio.

    Deterministic channels make the conditional entropy zero and the
    recursion degenerate, so they are rejected rather than returning inf.
    """
    h_cond = conditional_entropy(ch, prior)
    if h_cond <= 0.0:
        raise ModelError(
            "infinite growth factor: the channel is deterministic "
            "(H(output|input)=0); use a plain lossless coder instead"
        )
    return entropy(ch.marginal(prior)) / h_cond


# -- typicality --------------------------------------------------------

def is_strongly_typical(seq, p: Pmf, params: TypicalityParams) -> bool:
    """True iff every empirical frequency is within delta of its probability
    and no zero-probability symbol occurs."""
    seq = np.asarray(seq, dtype=np.int64)
    size = p.alphabet.size
    if seq.size and (seq.min() < 0 or seq.max() >= size):
        return False
    counts = np.bincount(seq, minlength=size).astype(np.float64)
    if np.any(counts[p.probs == 0] > 0):
        return False
    n = max(seq.size, 1)
    return bool(np.all(np.abs(counts / n - p.probs) <= params.delta))


def is_jointly_typical(
    x_seq, xhat_seq, prior: Pmf, ch: TestChannel, params: TypicalityParams
) -> bool:
    """Strong typicality of the pair sequence w.r.t. p(x)·p(x_hat|x)."""
    x_seq = np.asarray(x_seq, dtype=np.int64)
    xhat_seq = np.asarray(xhat_seq, dtype=np.int64)
    if x_seq.shape != xhat_seq.shape:
        raise ModelError("paired sequences must have equal length")
    _check_match(prior, ch)
    out_size = ch.output_alphabet.size
    joint = (prior.probs[:, None] * ch.rows).ravel()
    pair_seq = x_seq * out_size + xhat_seq
    pair_pmf = Pmf(Alphabet(joint.size), joint)
    return is_strongly_typical(pair_seq, pair_pmf, params)


# -- Blahut-Arimoto ----------------------------------------------------

def _ba_solve_slope(
    prior: np.ndarray, d: np.ndarray, beta: float, q0: np.ndarray,
    tol: float, max_iter: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Inner fixed-slope iteration.  Returns (channel rows, output marginal)."""
    a = -beta * d * _LOG2        # log-domain kernel: exp(a) = 2^(-beta*d)
    q = q0.copy()
    prev_f = np.inf
    for _ in range(max_iter):
        with np.errstate(divide="ignore"):
            logq = np.where(q > 0, np.log(q), -np.inf)
        logw = logq[None, :] + a
        shift = logw.max(axis=1, keepdims=True)
        w = np.exp(logw - shift)
        z = w.sum(axis=1, keepdims=True)
        w /= z
        # Lagrangian functional at this iterate (monotone under BA updates).
        f = float(-(prior @ (np.log(z).ravel() + shift.ravel())) / _LOG2)
        q_new = prior @ w
        if abs(prev_f - f) <= tol:
            return w, q_new
        prev_f = f
        q = q_new
    raise ModelError(
        f"rate-distortion solver did not converge in {max_iter} iterations "
        f"(last functional {prev_f:.12g}, slope {beta:.6g})"
    )


def _channel_rate_distortion(
    prior: np.ndarray, w: np.ndarray, d: np.ndarray
) -> tuple[float, float]:
    qout = prior @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w > 0, w / qout[None, :], 1.0)
        t = np.where(w > 0, w * np.log(ratio), 0.0)
    rate = float((prior @ t.sum(axis=1)) / _LOG2)
    dist = float(prior @ (w * d).sum(axis=1))
    return rate, dist


def blahut_arimoto(
    prior: Pmf,
    d: DistortionMatrix,
    target_D: float,
    tol: float = 1e-9,
    max_iter: int = 10_000,
) -> tuple[TestChannel, float, float]:
    """Rate-distortion point at the requested distortion level.

    Runs the classical alternating-minimization in the Lagrangian (slope)
    parameterization and bisects the slope until the achieved distortion
    matches ``min(target_D, distortion of the zero-rate point)``.  Returns
    ``(channel, R, D)`` with R in bits/symbol.
    """
    p = prior.probs
    dm = np.asarray(d.entries, dtype=np.float64)
    if dm.shape[0] != p.size:
        raise ModelError("distortion matrix rows must match prior alphabet")
    if not 0 <= target_D <= d.d_max:
        raise ModelError(f"target distortion {target_D} outside [0, {d.d_max}]")
    n_out = dm.shape[1]
    out_alpha = Alphabet(n_out)

    # Zero-rate endpoint: the best constant reproduction.
    col_cost = p @ dm
    j_star = int(np.argmin(col_cost))
    d_zero = float(col_cost[j_star])
    if target_D >= d_zero:
        w = np.zeros((p.size, n_out))
        w[:, j_star] = 1.0
        return TestChannel(prior.alphabet, out_alpha, w), 0.0, d_zero

    # Maximum-rate endpoint: deterministic best-per-row reproduction.
    row_best = dm.argmin(axis=1)
    d_floor = float(p @ dm[np.arange(p.size), row_best])
    if target_D <= d_floor + 1e-15:
        w = np.zeros((p.size, n_out))
        w[np.arange(p.size), row_best] = 1.0
        rate, dist = _channel_rate_distortion(p, w, dm)
        return TestChannel(prior.alphabet, out_alpha, w), rate, dist

    # Bracket the slope: distortion is non-increasing in beta.  Keep the
    # nearest feasible channel on each side of the target so we can finish
    # with an exact convex combination (distortion is linear in the channel,
    # so the mixture hits target_D to rounding error; convexity of R(D)
    # keeps the mixture's rate within the bracket of the true curve).
    q0 = np.full(n_out, 1.0 / n_out)
    w_above = np.zeros((p.size, n_out))
    w_above[:, j_star] = 1.0
    d_above = d_zero
    lo = 0.0
    hi = 1.0
    w_hi, q_hi = _ba_solve_slope(p, dm, hi, q0, tol, max_iter)
    dist = _channel_rate_distortion(p, w_hi, dm)[1]
    while dist > target_D:
        w_above, d_above = w_hi, dist
        lo = hi
        hi *= 2.0
        if hi > 2.0**60:
            break
        w_hi, q_hi = _ba_solve_slope(p, dm, hi, q_hi, tol, max_iter)
        dist = _channel_rate_distortion(p, w_hi, dm)[1]
    w_below, d_below = w_hi, dist

    d_tol = max(tol, 1e-12)
    q = q_hi
    for _ in range(200):
        if d_above - d_below <= d_tol or hi - lo <= 1e-15 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        w, q = _ba_solve_slope(p, dm, mid, q, tol, max_iter)
        dist = _channel_rate_distortion(p, w, dm)[1]
        if dist > target_D:
            w_above, d_above, lo = w, dist, mid
        else:
            w_below, d_below, hi = w, dist, mid

    if d_above > d_below:
        lam = (target_D - d_below) / (d_above - d_below)
        lam = min(max(lam, 0.0), 1.0)
        w = lam * w_above + (1.0 - lam) * w_below
    else:
        w = w_below
    rate, dist = _channel_rate_distortion(p, w, dm)
    return TestChannel(prior.alphabet, out_alpha, w), rate, dist


# -- model files -------------------------------------------------------

def bundled_model_names() -> list[str]:
    files = resources.files("ffsc") / "models"
    return sorted(f.name[: -len(".json")] for f in files.iterdir()
                  if f.name.endswith(".json"))


def load_model(ref: str) -> tuple[str, Pmf, DistortionMatrix]:
    """Load a model file: a path, or the name of a bundled model.

    Schema: JSON object with fields ``name`` (string), ``alphabet_size``
    (int), ``probs`` (list of floats), ``distortion`` (list of rows).
    """
    import os

    if os.path.exists(ref):
        with open(ref, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        candidate = resources.files("ffsc") / "models" / f"{ref}.json"
        if not candidate.is_file():
            raise ModelError(
                f"model {ref!r} is neither a file nor a bundled model "
                f"(bundled: {', '.join(bundled_model_names())})"
            )
        doc = json.loads(candidate.read_text(encoding="utf-8"))

    try:
        size = int(doc["alphabet_size"])
        probs = np.asarray(doc["probs"], dtype=np.float64)
        dist = np.asarray(doc["distortion"], dtype=np.float64)
        name = str(doc.get("name", ref))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model file {ref!r}: {exc}") from exc
    if probs.shape != (size,) or dist.shape != (size, size):
        raise ModelError(
            f"model {name!r}: probs/distortion shapes do not match "
            f"alphabet_size={size}"
        )
    return name, Pmf(Alphabet(size), probs), DistortionMatrix(dist)
