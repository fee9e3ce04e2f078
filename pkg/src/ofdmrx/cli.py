"""Command-line entry point: frame generation, channel simulation, reception,
end-to-end runs and benchmark sweeps.

Outputs are deterministic under a fixed --seed. On failure the tool prints a
single machine-parseable line ``error: <category>: <message>`` to stderr and
exits nonzero (2 for usage errors, 1 otherwise).
"""

import argparse
import math
import os
import sys

import numpy as np

from . import io_formats
from .bench import (
    ExperimentMatrix,
    default_worker_count,
    frontend_throughput,
    run_matrix,
    speedup_table,
    write_bench_csv,
    write_speedup_csv,
)
from .channel import ChannelModel, RxCapture, apply_channel
from .errors import InputError, ReceiverError
from .receiver import (
    EngineKind,
    evm_db,
    extract_slots,
    make_engine,
    run_ring_pipeline,
    score_bits,
)
from .sync import DEFAULT_THRESHOLD, detect_packet
from .waveform import (
    DEFAULT_PILOT_SEED,
    DEFAULT_PN_SEED,
    DEFAULT_PN_TAPS,
    OfdmConfig,
    build_frame,
    default_cp,
    generate_pn,
    make_pilot,
    qam_map,
)


class UsageError(ReceiverError):
    category = "usage"


def _parse_int_list(text, what):
    """Accept '4', '1,2,4' and '1-16' (mixable with commas)."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, _, hi = part.partition("-")
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise UsageError(f"bad {what} range {part!r}") from None
            if hi < lo:
                raise UsageError(f"bad {what} range {part!r}")
            values.extend(range(lo, hi + 1))
        else:
            try:
                values.append(int(part))
            except ValueError:
                raise UsageError(f"bad {what} value {part!r}") from None
    if not values:
        raise UsageError(f"empty {what} list")
    return values


def _parse_snr(text):
    if text is None or text.lower() in ("noiseless", "none", "inf"):
        return None
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"bad --snr-db value {text!r}") from None


def _validate_cfg(fft_len, cp_len, n_antennas, qam_order):
    try:
        return OfdmConfig(fft_len, cp_len, n_antennas, qam_order)
    except ReceiverError as exc:
        raise UsageError(str(exc)) from None


def _build_model(args, n_antennas):
    gains = None
    taps = None
    if args.channel_mode == "fixed_gains":
        if not args.gains:
            raise UsageError("fixed_gains mode needs --gains")
        gains = tuple(complex(g) for g in args.gains.split(";"))
        if len(gains) != n_antennas:
            raise UsageError(f"--gains must list {n_antennas} values")
    if args.channel_mode == "multipath":
        if not args.taps:
            raise UsageError("multipath mode needs --taps")
        taps = tuple(
            tuple(complex(t) for t in antenna.split(","))
            for antenna in args.taps.split(";")
        )
        if len(taps) == 1 and n_antennas > 1:
            taps = taps * n_antennas
        if len(taps) != n_antennas:
            raise UsageError(f"--taps must list 1 or {n_antennas} profiles")
    return ChannelModel(
        mode=args.channel_mode,
        gains=gains,
        taps=taps,
        snr_db=_parse_snr(args.snr_db),
        timing_offset=args.offset,
        rng_seed=args.seed,
    )


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def _make_frame(args):
    cp = args.cp if args.cp is not None else default_cp(args.fft)
    cfg = _validate_cfg(args.fft, cp, 1, args.qam)
    pn = generate_pn(DEFAULT_PN_TAPS, DEFAULT_PN_SEED, cfg.pn_len)
    pilot = make_pilot(cfg.fft_len, args.pilot_seed)
    if getattr(args, "bits_file", None):
        bits = io_formats.read_bits_u8(args.bits_file)
        if bits.size == 0:
            raise InputError(f"{args.bits_file} holds no bits")
    else:
        rng = np.random.default_rng(args.seed)
        bits = rng.integers(
            0, 2, size=args.payload_qam * cfg.bits_per_qam_symbol, dtype=np.uint8
        )
    frame = build_frame(cfg, pilot, bits, pn)
    return cfg, pn, pilot, frame


def _tx_meta(cfg, frame, args):
    return {
        "kind": "tx",
        "fft_len": cfg.fft_len,
        "cp_len": cfg.cp_len,
        "qam_order": cfg.qam_order,
        "pn_len": cfg.pn_len,
        "pn_taps": list(DEFAULT_PN_TAPS),
        "pn_seed": DEFAULT_PN_SEED,
        "pilot_seed": args.pilot_seed,
        "sample_rate_hz": cfg.sample_rate_hz,
        "payload_qam_samples": frame.tx_qam.size,
        "n_data_symbols": frame.n_data_symbols,
        "pad_qam": frame.pad_qam,
        "seed": args.seed,
    }


def cmd_generate(args):
    cfg, _, _, frame = _make_frame(args)
    out = _outdir(args)
    try:
        io_formats.write_cf32(os.path.join(out, "tx.cf32"), frame.samples)
        io_formats.write_bits_u8(os.path.join(out, "tx_bits.u8"), frame.tx_bits)
        io_formats.write_meta(os.path.join(out, "tx_meta.txt"), _tx_meta(cfg, frame, args))
    except OSError as exc:
        raise InputError(f"cannot write to {out}: {exc}") from None
    print(
        f"wrote {frame.total_len} samples "
        f"({frame.n_data_symbols} data symbols) to {out}"
    )
    return 0


# ---------------------------------------------------------------------------
# channel
# ---------------------------------------------------------------------------

def _load_tx(in_dir):
    meta_path = os.path.join(in_dir, "tx_meta.txt")
    if not os.path.exists(meta_path):
        raise InputError(f"missing {meta_path}")
    meta = io_formats.read_meta(meta_path)
    samples = io_formats.read_cf32(os.path.join(in_dir, "tx.cf32"))
    return meta, samples


class _ReplayFrame:
    """Adapter giving apply_channel the one field it needs from disk."""

    def __init__(self, samples):
        self.samples = samples


def cmd_channel(args):
    meta, samples = _load_tx(args.in_dir)
    cfg = _validate_cfg(
        int(meta["fft_len"]), int(meta["cp_len"]), args.antennas, int(meta["qam_order"])
    )
    model = _build_model(args, cfg.n_antennas)
    capture = apply_channel(_ReplayFrame(samples), model, cfg)
    out = _outdir(args)
    for antenna in range(cfg.n_antennas):
        io_formats.write_cf32(
            os.path.join(out, f"rx_ant{antenna}.cf32"), capture.streams[antenna]
        )
    rx_meta = dict(meta)
    rx_meta.pop("format_version", None)
    rx_meta.update(
        {
            "kind": "rx",
            "n_antennas": cfg.n_antennas,
            "channel_mode": model.mode,
            "snr_db": "noiseless" if model.snr_db is None else model.snr_db,
            "timing_offset": model.timing_offset,
            "channel_seed": model.rng_seed,
            "truth_offset": capture.truth["offset"],
        }
    )
    for antenna, gain in enumerate(capture.truth["gains"]):
        rx_meta[f"truth_gain_{antenna}"] = [complex(g) for g in gain]
    io_formats.write_meta(os.path.join(out, "rx_meta.txt"), rx_meta)
    # carry the payload truth along so receive can score BER out of the box
    bits_path = os.path.join(args.in_dir, "tx_bits.u8")
    if os.path.exists(bits_path):
        io_formats.write_bits_u8(
            os.path.join(out, "tx_bits.u8"), io_formats.read_bits_u8(bits_path)
        )
    print(f"wrote {cfg.n_antennas} antenna streams to {out}")
    return 0


# ---------------------------------------------------------------------------
# receive
# ---------------------------------------------------------------------------

def _load_capture(in_dir):
    meta_path = os.path.join(in_dir, "rx_meta.txt")
    if not os.path.exists(meta_path):
        raise InputError(f"missing {meta_path}")
    meta = io_formats.read_meta(meta_path)
    n_antennas = int(meta["n_antennas"])
    cfg = OfdmConfig(
        int(meta["fft_len"]),
        int(meta["cp_len"]),
        n_antennas,
        int(meta["qam_order"]),
        pn_len=int(meta["pn_len"]),
        sample_rate_hz=float(meta["sample_rate_hz"]),
    )
    expected = [os.path.join(in_dir, f"rx_ant{k}.cf32") for k in range(n_antennas)]
    missing = [p for p in expected if not os.path.exists(p)]
    if missing:
        raise InputError("missing antenna files: " + ", ".join(missing))
    streams = [io_formats.read_cf32(p) for p in expected]
    lengths = {s.size for s in streams}
    if len(lengths) != 1:
        raise InputError(f"antenna files disagree on length: {sorted(lengths)}")
    return meta, cfg, RxCapture(streams=np.vstack(streams), cfg=cfg)


def _per_symbol_lines(result, cfg, truth_bits, truth_qam):
    bits_per = cfg.bits_per_qam_symbol
    lines = ["seq=0 kind=pilot ber=na evm_db=na"]
    totals = [0, 0]
    for sym in result.symbols:
        lo = (sym.seq_no - 1) * cfg.fft_len
        if truth_qam is not None and lo < truth_qam.size:
            qam_ref = truth_qam[lo : lo + cfg.fft_len]
            bit_ref = truth_bits[lo * bits_per : (lo + qam_ref.size) * bits_per]
            errors = int(
                np.count_nonzero(sym.bits[: bit_ref.size] != bit_ref)
            )
            totals[0] += errors
            totals[1] += bit_ref.size
            ber = errors / bit_ref.size if bit_ref.size else math.nan
            evm = evm_db(sym.equalized, qam_ref)
            lines.append(
                f"seq={sym.seq_no} kind=data ber={ber:.6g} evm_db={evm:.3f}"
            )
        else:
            decided = qam_map(sym.bits, cfg.qam_order)
            evm = evm_db(sym.equalized, decided)
            lines.append(f"seq={sym.seq_no} kind=data ber=na evm_db={evm:.3f}")
    return lines, totals


def cmd_receive(args):
    meta, cfg, capture = _load_capture(args.in_dir)
    pn = generate_pn(
        tuple(int(t) for t in meta["pn_taps"].split(";")),
        int(meta["pn_seed"]),
        cfg.pn_len,
    )
    pilot = make_pilot(cfg.fft_len, int(meta["pilot_seed"]))
    detection = detect_packet(capture, pn, args.threshold)
    if not detection.detected:
        raise InputError(
            f"no packet found (peak metric {detection.peak_metric:.3f} "
            f"< threshold {args.threshold})"
        )
    print(
        f"detected frame_start={detection.frame_start} "
        f"peak={detection.peak_metric:.4f}"
    )
    n_symbols = 1 + int(meta["n_data_symbols"])
    slots = extract_slots(capture, detection, cfg, n_symbols)
    with make_engine(EngineKind(args.engine, args.workers)) as engine:
        result = run_ring_pipeline(slots, cfg, engine, pilot=pilot)

    truth_bits = truth_qam = None
    truth_path = args.truth_bits or os.path.join(args.in_dir, "tx_bits.u8")
    if os.path.exists(truth_path):
        truth_bits = io_formats.read_bits_u8(truth_path)
        truth_qam = qam_map(truth_bits, cfg.qam_order)

    lines, totals = _per_symbol_lines(result, cfg, truth_bits, truth_qam)
    for line in lines:
        print(line)
    out = _outdir(args)
    io_formats.write_bits_u8(os.path.join(out, "demod_bits.u8"), result.bits)
    io_formats.write_cf64(
        os.path.join(out, "demod_eq.cf64"),
        np.concatenate([s.equalized for s in result.symbols])
        if result.symbols
        else np.empty(0, dtype=np.complex128),
    )
    if truth_bits is not None:
        errors, compared = score_bits(result.bits, truth_bits)
        print(f"total ber={errors / compared:.6g} errors={errors} bits={compared}")
    else:
        print(f"total ber=na bits={result.bits.size} (no truth file)")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def cmd_bench(args):
    antennas = _parse_int_list(args.antennas, "--antennas")
    ffts = _parse_int_list(args.fft_list, "--fft")
    engines = (
        ("sequential", "data_parallel") if args.engine == "both" else (args.engine,)
    )
    for fft_len in ffts:
        _validate_cfg(fft_len, default_cp(fft_len), max(antennas), args.qam)
    if args.channel_mode in ("fixed_gains", "multipath") and len(set(antennas)) > 1:
        raise UsageError(
            f"--channel-mode {args.channel_mode} needs a single antenna count "
            "(per-antenna parameters cannot span a sweep)"
        )
    matrix = ExperimentMatrix(
        antenna_counts=tuple(antennas),
        fft_lens=tuple(ffts),
        engines=engines,
        repetitions=args.reps,
        payload_qam_samples=args.payload_qam,
        workers=args.workers,
    )
    model = _build_model(args, max(antennas))
    out = _outdir(args)
    result = run_matrix(
        matrix,
        model,
        seed=args.seed,
        qam_order=args.qam,
        threshold=args.threshold,
        progress=(lambda cell: print(f"cell {cell}", flush=True))
        if args.verbose
        else None,
    )
    bench_path = os.path.join(out, "bench.csv")
    write_bench_csv(result.records, bench_path)
    print(f"wrote {len(result.records)} records to {bench_path}")
    for failure in result.failed_cells:
        print(f"failed cell: {failure}", file=sys.stderr)
    if len(engines) == 2 and result.records:
        speedup_path = os.path.join(out, "speedup.csv")
        write_speedup_csv(speedup_table(result.records), speedup_path)
        print(f"wrote speedups to {speedup_path}")
    return 0 if not result.failed_cells else 1


# ---------------------------------------------------------------------------
# e2e
# ---------------------------------------------------------------------------

def cmd_e2e(args):
    cfg, pn, pilot, frame = _make_frame(args)
    cfg = _validate_cfg(cfg.fft_len, cfg.cp_len, args.antennas, cfg.qam_order)
    model = _build_model(args, cfg.n_antennas)
    capture = apply_channel(frame, model, cfg)
    detection = detect_packet(capture, pn, args.threshold)
    if not detection.detected:
        raise InputError(
            f"no packet found (peak metric {detection.peak_metric:.3f})"
        )
    slots = extract_slots(capture, detection, cfg, 1 + frame.n_data_symbols)
    with make_engine(EngineKind(args.engine, args.workers)) as engine:
        result = run_ring_pipeline(slots, cfg, engine, pilot=pilot)
    lines, _ = _per_symbol_lines(result, cfg, frame.tx_bits, frame.tx_qam)
    for line in lines:
        print(line)
    errors, compared = score_bits(result.bits, frame.tx_bits)
    out = _outdir(args)
    io_formats.write_bits_u8(os.path.join(out, "demod_bits.u8"), result.bits)
    io_formats.write_bits_u8(os.path.join(out, "tx_bits.u8"), frame.tx_bits)
    print(f"total ber={errors / compared:.6g} errors={errors} bits={compared}")
    return 0


# ---------------------------------------------------------------------------
# throughput (front-end model helper)
# ---------------------------------------------------------------------------

def cmd_throughput(args):
    rate = frontend_throughput(args.antennas, args.bandwidth_hz, args.bytes_per_sample)
    print(f"{rate / 1e9:.6g} Gb/s ({rate:.0f} bits/s)")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_numerology(p):
    p.add_argument("--fft", type=int, default=64, help="FFT length (power of two)")
    p.add_argument("--cp", type=int, default=None, help="cyclic prefix length")
    p.add_argument("--qam", type=int, default=4, choices=(4, 16, 64))
    p.add_argument("--pilot-seed", type=int, default=DEFAULT_PILOT_SEED)


def _add_channel(p):
    p.add_argument(
        "--channel-mode",
        default="identity",
        choices=("identity", "fixed_gains", "flat_rayleigh", "multipath"),
    )
    p.add_argument("--snr-db", default="noiseless", help="per-antenna SNR or 'noiseless'")
    p.add_argument("--offset", type=int, default=0, help="noise-only samples before the frame")
    p.add_argument("--gains", default=None, help="fixed_gains: ';'-separated complex values")
    p.add_argument("--taps", default=None, help="multipath: ';'-separated per-antenna tap lists")


def _add_engine(p):
    p.add_argument("--engine", default="sequential", choices=("sequential", "data_parallel"))
    p.add_argument("--workers", type=int, default=default_worker_count())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ofdmrx",
        description="multi-antenna OFDM uplink receiver and benchmark harness",
    )
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a frame and write tx files")
    _add_numerology(p)
    p.add_argument("--payload-qam", type=int, default=100000)
    p.add_argument("--bits-file", default=None, help="payload bits (.u8) instead of random")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("channel", help="run tx files through the channel model")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--antennas", type=int, default=1)
    _add_channel(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("receive", help="demodulate rx files")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--truth-bits", default=None)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add_engine(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_receive)

    p = sub.add_parser("bench", help="sweep antennas x FFT x engine, write CSVs")
    p.add_argument("--antennas", default="1-16", help="e.g. 4 or 1,2,4 or 1-16")
    p.add_argument("--fft", dest="fft_list", default="64,1024")
    p.add_argument("--qam", type=int, default=4, choices=(4, 16, 64))
    p.add_argument("--engine", default="both", choices=("both", "sequential", "data_parallel"))
    p.add_argument("--workers", type=int, default=default_worker_count())
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--payload-qam", type=int, default=100000)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--verbose", action="store_true")
    _add_channel(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("e2e", help="generate + channel + receive in one pass")
    _add_numerology(p)
    p.add_argument("--payload-qam", type=int, default=100000)
    p.add_argument("--antennas", type=int, default=1)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add_channel(p)
    _add_engine(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_e2e)

    p = sub.add_parser("throughput", help="front-end throughput model")
    p.add_argument("--antennas", type=int, default=16)
    p.add_argument("--bandwidth-hz", type=float, default=20e6)
    p.add_argument("--bytes-per-sample", type=int, default=4)
    p.set_defaults(func=cmd_throughput)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except ReceiverError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
