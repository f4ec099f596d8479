"""Command-line interface.

Subcommands:

* ``rd``          — rate-distortion curve for a model file.
* ``encode``      — compress a symbol file into a bitstream + stats sidecar.
* ``decode``      — reconstruct from bitstream + true-source file.
* ``exp-hamming`` — seeded trials on the binary symmetric benchmark.
* ``exp-general`` — seeded trials on an arbitrary model at a target
                    distortion (test channel from the solver).
* ``exp-beq``     — the erasure-quantization worked example.
* ``exp-duality`` — the feedback-erasure-channel worked example.

Exit status: 0 on success, 1 when an experiment violates its
thresholds or a transcript check fails, 2 on usage/config errors.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys

import numpy as np

from .bits import fnv1a64
from .codec import (
    HEADER_LEN,
    CodecConfig,
    FeedforwardOracle,
    decode,
    encode,
    measure,
)
from .errors import FfscError
from .experiments import (
    ExperimentSpec,
    run_beq_example,
    run_codec_experiment,
    run_duality_example,
)
from .model import (
    DistortionMatrix,
    Pmf,
    TestChannel,
    blahut_arimoto,
    load_model,
)

_ASCII = {"0": 0, "1": 1, "*": 2}
_ASCII_REV = {0: "0", 1: "1", 2: "*"}


def _read_symbols(path: str, fmt: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if fmt == "ascii":
        text = raw.decode("ascii").strip()
        return np.array([_ASCII[c] for c in text], dtype=np.int64)
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def _write_symbols(path: str, symbols: np.ndarray, fmt: str):
    if fmt == "ascii":
        data = "".join(_ASCII_REV[int(v)] for v in symbols).encode("ascii")
    else:
        data = symbols.astype(np.uint8).tobytes()
    with open(path, "wb") as fh:
        fh.write(data)


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _resolve_channel(prior: Pmf, d: DistortionMatrix, target_d: float):
    channel, rate, dist = blahut_arimoto(prior, d, target_d)
    return channel, rate, dist


def _config_args(p: argparse.ArgumentParser, with_channel: bool = True):
    if with_channel:
        p.add_argument("--target-d", "--d0", dest="target_d", type=float,
                       default=0.11,
                       help="distortion level; the test channel is the "
                            "solver's channel at this level")
    p.add_argument("--min-block", type=int, default=4096)
    p.add_argument("--passes", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--precision", type=int, default=16)
    p.add_argument("--seed-block-mode", choices=("sampled", "raw"),
                   default="sampled")
    p.add_argument("--delta", type=float, default=0.02)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ffsc",
        description="Lossy source coding with unit-lag feedforward side "
                    "information.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("rd", help="rate-distortion table for a model")
    p.add_argument("--model", default="binary_hamming")
    p.add_argument("--grid", default=None,
                   help="D grid as lo:hi:count (e.g. 0:0.5:11)")
    p.add_argument("--target-d", "--d0", dest="target_d", type=float,
                   action="append", default=None,
                   help="single distortion level (repeatable)")
    p.add_argument("--out", default="-")

    p = sub.add_parser("encode", help="compress a symbol file")
    p.add_argument("--model", default="binary_hamming")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("bytes", "ascii"), default="bytes")
    _config_args(p)

    p = sub.add_parser("decode", help="reconstruct from a bitstream")
    p.add_argument("--model", default="binary_hamming")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--source", required=True,
                   help="true source file (feedforward side information)")
    p.add_argument("--offset", type=int, default=None,
                   help="source-file index of the first coded sample "
                        "(default: the encode stats sidecar, else 0)")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--format", choices=("bytes", "ascii"), default="bytes")
    p.add_argument("--target-d", "--d0", dest="target_d", type=float,
                   default=0.11)
    p.add_argument("--delta", type=float, default=0.02)

    p = sub.add_parser("exp-hamming",
                       help="binary symmetric benchmark (seeded trials)")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _config_args(p, with_channel=False)

    p = sub.add_parser("exp-general",
                       help="general-model benchmark at a target distortion")
    p.add_argument("--model", default="ternary_hamming")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _config_args(p)
    p.set_defaults(target_d=0.15)

    p = sub.add_parser("exp-beq", help="erasure-quantization worked example")
    p.add_argument("--source", default="0**10**1")
    p.add_argument("--out", default="-")

    p = sub.add_parser("exp-duality",
                       help="feedback erasure-channel worked example")
    p.add_argument("--message", default="0101")
    p.add_argument("--erasures", default="2,3,6,7",
                   help="comma-separated 1-based erased channel uses")
    p.add_argument("--out", default="-")
    return ap


def _cmd_rd(args) -> int:
    _, prior, d = load_model(args.model)
    if args.grid:
        lo, hi, count = args.grid.split(":")
        targets = np.linspace(float(lo), float(hi), int(count))
    elif args.target_d:
        targets = np.array(args.target_d, dtype=np.float64)
    else:
        targets = np.linspace(0.0, d.d_max, 11)
    lines = ["D,R,channel_digest"]
    for t in targets:
        channel, rate, dist = blahut_arimoto(prior, d, float(t))
        digest = fnv1a64(np.round(channel.rows, 12).tobytes())
        lines.append(f"{dist:.12g},{rate:.12g},{digest:016x}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cfg_from_args(args, prior, d, channel) -> CodecConfig:
    return CodecConfig(
        prior=prior, channel=channel, distortion=d,
        min_block=args.min_block, passes=args.passes,
        precision=args.precision, seed=args.seed,
        seed_block_mode=args.seed_block_mode, delta=args.delta,
    )


def _cmd_encode(args) -> int:
    _, prior, d = load_model(args.model)
    channel, _, _ = _resolve_channel(prior, d, args.target_d)
    cfg = _cfg_from_args(args, prior, d, channel)
    source = _read_symbols(args.infile, args.format)
    result = encode(source, cfg)
    with open(args.out, "wb") as fh:
        fh.write(result.bitstream)
    stats = {
        "n": result.n,
        "pass_lengths": result.pass_lengths,
        "rate": result.rate,
        "total_bits": result.total_bits,
        "source_length": int(source.size),
        "source_offset": int(source.size - result.n),
        "atypical_blocks": result.atypical_blocks,
    }
    with open(args.out + ".stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(
        f"encoded n={result.n} samples in {len(result.pass_lengths)} passes, "
        f"rate {result.rate:.4f} bits/sample\n"
    )
    return 0


def _peek_header(path: str) -> tuple[int, int, int, int, bytes]:
    with open(path, "rb") as fh:
        hdr = fh.read(HEADER_LEN)
        rest = fh.read()
    if len(hdr) < HEADER_LEN:
        raise FfscError("bitstream shorter than its header")
    _, _, q, k, m, seed, _ = struct.unpack("<4sBBHIQQ", hdr)
    return q, k, m, seed, hdr + rest


def _cmd_decode(args) -> int:
    _, prior, d = load_model(args.model)
    channel, _, _ = _resolve_channel(prior, d, args.target_d)
    q, k, m, seed, stream = _peek_header(args.infile)
    cfg = CodecConfig(
        prior=prior, channel=channel, distortion=d, min_block=m, passes=k,
        precision=q, seed=seed, delta=args.delta,
    )
    source = _read_symbols(args.source, args.format)
    offset = args.offset
    if offset is None:
        offset = 0
        try:
            with open(args.infile + ".stats.json", encoding="utf-8") as fh:
                offset = int(json.load(fh).get("source_offset", 0))
        except (OSError, ValueError):
            pass
    oracle = FeedforwardOracle(source[offset:])
    result = decode(stream, oracle, cfg)
    _write_symbols(args.out, result.xhat, args.format)
    rep = measure(source[offset:offset + result.n], result, d)
    report = {
        "n": result.n,
        "pass_lengths": result.pass_lengths,
        "rate": result.rate,
        "mean_distortion": result.mean_distortion,
        "rd_reference": rep.rd_reference,
        "gap": rep.gap,
        "causality_audit": "pass" if oracle.audit_clean() else "fail",
    }
    path = args.report or (args.out + ".report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(
        f"decoded n={result.n}, distortion {result.mean_distortion:.5f}, "
        f"audit {'clean' if oracle.audit_clean() else 'VIOLATED'}\n"
    )
    return 0 if oracle.audit_clean() else 1


def _cmd_exp_hamming(args) -> int:
    _, prior, d = load_model("binary_hamming")
    channel = TestChannel.bsc(0.11)
    cfg = _cfg_from_args(args, prior, d, channel)
    spec = ExperimentSpec(
        name="hamming", cfg=cfg, trials=args.trials, fmt=args.format,
        rate_bounds=(0.50, 0.56), distortion_bounds=(0.10, 0.12),
    )
    report = run_codec_experiment(spec)
    _emit(report.render(args.format), args.out)
    for v in report.violations:
        sys.stderr.write(f"violation: {v}\n")
    return 1 if report.violations else 0


def _cmd_exp_general(args) -> int:
    _, prior, d = load_model(args.model)
    channel, ref_rate, _ = _resolve_channel(prior, d, args.target_d)
    cfg = _cfg_from_args(args, prior, d, channel)
    spec = ExperimentSpec(
        name="general", cfg=cfg, trials=args.trials, fmt=args.format,
        distortion_bounds=(args.target_d - 0.015, args.target_d + 0.015),
        rate_reference=ref_rate, rate_rel_tol=0.10,
    )
    report = run_codec_experiment(spec)
    _emit(report.render(args.format), args.out)
    for v in report.violations:
        sys.stderr.write(f"violation: {v}\n")
    return 1 if report.violations else 0


def _cmd_exp_beq(args) -> int:
    res = run_beq_example(args.source)
    text = (
        f"source={res['source']} n={res['n']} e={res['e']}\n"
        f"message={res['message']} bits={res['message_bits']}\n"
        f"reconstruction={res['reconstruction']}\n"
        f"distortion={res['distortion']}\n"
        f"audit={res['audit']}\n"
    )
    _emit(text, args.out)
    return 0 if res["ok"] else 1


def _cmd_exp_duality(args) -> int:
    erasures = tuple(int(x) for x in args.erasures.split(",") if x)
    res = run_duality_example(args.message, erasures)
    text = (
        f"message={res['message']} erasures={','.join(map(str, res['erasures']))}\n"
        f"sent={res['sent']} uses={res['uses']}\n"
        f"received={res['received']}\n"
        f"recovered={res['recovered']}\n"
        f"rate={res['rate']}\n"
    )
    _emit(text, args.out)
    return 0 if res["ok"] else 1


_DISPATCH = {
    "rd": _cmd_rd,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "exp-hamming": _cmd_exp_hamming,
    "exp-general": _cmd_exp_general,
    "exp-beq": _cmd_exp_beq,
    "exp-duality": _cmd_exp_duality,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.cmd](args)
    except FfscError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
