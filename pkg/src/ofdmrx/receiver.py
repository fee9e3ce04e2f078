"""Per-symbol demodulation pipeline: CP drop, FFT+shift, LS channel
estimation on the pilot symbol, MRC combining + hard demapping on data
symbols.

Two interchangeable engines run the frequency-domain work. The sequential
engine executes everything on the calling thread. The data-parallel engine
fans the per-antenna FFTs and per-subcarrier LS/MRC work across a worker
pool and joins before returning, using the pairwise reduction tree for the
antenna sums; both must agree to within 1e-9. CP drop and fftshift always
run on the calling thread.
"""

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels, numerics, waveform
from .errors import (
    ConfigurationError,
    ContractError,
    FramingError,
    InputError,
    LifecycleError,
    NumericInputError,
    PipelineOrderError,
)
from .ringbuf import DATA, PILOT, SymbolRing, SymbolSlot

MRC_WEIGHT_FLOOR = 1e-12

ENGINE_VARIANTS = ("sequential", "data_parallel")


@dataclass(frozen=True)
class EngineKind:
    variant: str = "sequential"
    worker_count: int = 1

    def __post_init__(self):
        if self.variant not in ENGINE_VARIANTS:
            raise ConfigurationError(f"engine variant must be one of {ENGINE_VARIANTS}")
        if self.worker_count < 1:
            raise ConfigurationError("worker_count must be >= 1")


@dataclass
class ChannelEstimate:
    gains: np.ndarray  # (n_antennas, fft_len) complex per-subcarrier estimates
    source_seq: int


@dataclass
class CombinedSymbol:
    equalized: np.ndarray     # (fft_len,) complex estimates
    seq_no: int
    weight_norm: np.ndarray   # per-subcarrier sum of |gain|^2
    bits: np.ndarray = None   # hard-decided bits for data symbols
    erased: np.ndarray = None # subcarriers whose weight fell below the floor


@dataclass
class StageTimings:
    kind: str                 # "pilot" or "data"
    read_s: float = 0.0
    cp_drop_s: float = 0.0
    fft_s: float = 0.0
    combine_s: float = 0.0    # ls (pilot) or mrc (data)

    @property
    def combine_stage(self):
        return "ls" if self.kind == PILOT else "mrc"

    @property
    def total_s(self):
        return self.read_s + self.cp_drop_s + self.fft_s + self.combine_s


def _chunk_bounds(total, parts):
    parts = max(1, min(parts, total))
    step = -(-total // parts)
    return [(lo, min(lo + step, total)) for lo in range(0, total, step)]


class SequentialEngine:
    variant = "sequential"
    worker_count = 1

    def freq_transform(self, time_matrix):
        return numerics.fftshift(kernels.fft_rows(time_matrix))

    def ls_divide(self, freq_matrix, pilot_values):
        return freq_matrix / pilot_values[None, :]

    def mrc(self, freq_matrix, gain_matrix, eps):
        return kernels.mrc_seq(freq_matrix, gain_matrix, eps)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class DataParallelEngine:
    """Worker-pool engine mirroring a per-antenna / per-subcarrier grid
    decomposition. Numeric results are deterministic for any worker count:
    the antenna sums always follow the pairwise tree order."""

    variant = "data_parallel"

    def __init__(self, worker_count=4):
        if worker_count < 1:
            raise ConfigurationError("worker_count must be >= 1")
        self.worker_count = worker_count
        self._pool = ThreadPoolExecutor(
            max_workers=worker_count, thread_name_prefix="rx-worker"
        )

    def _run_chunks(self, total, task):
        futures = [
            self._pool.submit(task, lo, hi) for lo, hi in _chunk_bounds(total, self.worker_count)
        ]
        for f in futures:
            f.result()

    def freq_transform(self, time_matrix):
        rows = time_matrix.shape[0]
        out = np.empty_like(time_matrix, dtype=np.complex128)

        def fft_chunk(lo, hi):
            out[lo:hi] = kernels.fft_rows(time_matrix[lo:hi])

        self._run_chunks(rows, fft_chunk)
        # fftshift stays on the calling thread (cheap data movement)
        return numerics.fftshift(out)

    def ls_divide(self, freq_matrix, pilot_values):
        out = np.empty_like(freq_matrix, dtype=np.complex128)

        def ls_chunk(lo, hi):
            out[:, lo:hi] = freq_matrix[:, lo:hi] / pilot_values[None, lo:hi]

        self._run_chunks(freq_matrix.shape[1], ls_chunk)
        return out

    def mrc(self, freq_matrix, gain_matrix, eps):
        n_sub = freq_matrix.shape[1]
        combined = np.empty(n_sub, dtype=np.complex128)
        weights = np.empty(n_sub, dtype=np.float64)

        def mrc_chunk(lo, hi):
            s, w = kernels.mrc_tree(freq_matrix[:, lo:hi], gain_matrix[:, lo:hi], eps)
            combined[lo:hi] = s
            weights[lo:hi] = w

        self._run_chunks(n_sub, mrc_chunk)
        return combined, weights

    def close(self):
        self._pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_engine(kind):
    if kind.variant == "sequential":
        return SequentialEngine()
    return DataParallelEngine(kind.worker_count)


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------

def cp_drop(payload, cfg):
    """Strip the cyclic prefix from each antenna row."""
    payload = np.atleast_2d(payload)
    if payload.shape[1] != cfg.symbol_len:
        raise FramingError(
            f"symbol rows have {payload.shape[1]} samples, expected {cfg.symbol_len}"
        )
    return payload[:, cfg.cp_len :]


def to_freq(time_matrix, engine):
    """Per-row FFT followed by fftshift, dispatched to the engine."""
    time_matrix = np.atleast_2d(time_matrix)
    n = time_matrix.shape[1]
    if n < 2 or not numerics.is_power_of_two(n):
        raise ConfigurationError(f"fft length must be a power of two >= 2, got {n}")
    if not np.all(np.isfinite(time_matrix)):
        raise NumericInputError("non-finite samples entering the FFT stage")
    return engine.freq_transform(np.ascontiguousarray(time_matrix, dtype=np.complex128))


def ls_estimate(freq_matrix, pilot, engine=None, source_seq=0):
    """Per-subcarrier least-squares estimate: received pilot divided by the
    known pilot values."""
    engine = engine or SequentialEngine()
    if not np.allclose(np.abs(pilot.values), 1.0, atol=1e-12):
        raise ConfigurationError("pilot values must have unit modulus")
    if freq_matrix.shape[1] != pilot.values.shape[0]:
        raise ContractError(
            f"matrix has {freq_matrix.shape[1]} subcarriers, pilot has {pilot.values.shape[0]}"
        )
    gains = engine.ls_divide(freq_matrix, pilot.values)
    return ChannelEstimate(gains=gains, source_seq=source_seq)


def mrc_combine(freq_matrix, estimate, engine=None, seq_no=0):
    """Conjugate-weighted antenna combining normalized by the summed gain
    power (floored at MRC_WEIGHT_FLOOR)."""
    engine = engine or SequentialEngine()
    if estimate.gains.shape != freq_matrix.shape:
        raise ContractError(
            f"estimate shape {estimate.gains.shape} does not match symbol {freq_matrix.shape}"
        )
    combined, weights = engine.mrc(freq_matrix, estimate.gains, MRC_WEIGHT_FLOOR)
    return CombinedSymbol(
        equalized=combined,
        seq_no=seq_no,
        weight_norm=weights,
        erased=weights < MRC_WEIGHT_FLOOR,
    )


def process_symbol(slot, estimate, cfg, engine, pilot=None, read_seconds=0.0):
    """Run one slot through the pipeline.

    Pilot slots produce a ChannelEstimate; data slots need ``estimate`` and
    produce a CombinedSymbol with demapped bits. Returns the result plus the
    per-stage wall-clock timings (ring wait is passed in as ``read_seconds``).
    """
    timings = StageTimings(kind=slot.kind, read_s=read_seconds)
    t0 = time.perf_counter()
    trimmed = cp_drop(slot.payload, cfg)
    t1 = time.perf_counter()
    freq = to_freq(trimmed, engine)
    t2 = time.perf_counter()
    timings.cp_drop_s = t1 - t0
    timings.fft_s = t2 - t1
    if slot.kind == PILOT:
        pilot = pilot or waveform.make_pilot(cfg.fft_len)
        result = ls_estimate(freq, pilot, engine, source_seq=slot.seq_no)
        timings.combine_s = time.perf_counter() - t2
        return result, timings
    if slot.kind != DATA:
        raise ContractError(f"unknown slot kind {slot.kind!r}")
    if estimate is None:
        raise PipelineOrderError(
            f"data slot {slot.seq_no} arrived before any channel estimate"
        )
    combined = mrc_combine(freq, estimate, engine, seq_no=slot.seq_no)
    combined.bits = waveform.qam_demap(combined.equalized, cfg.qam_order)
    timings.combine_s = time.perf_counter() - t2
    return combined, timings


# ---------------------------------------------------------------------------
# Capture slicing and the ring-fed pipeline driver
# ---------------------------------------------------------------------------

def extract_slots(capture, detection, cfg, n_symbols):
    """Slice the detected frame into per-symbol slots (pilot first)."""
    streams = capture.streams
    start = detection.symbol0_offset
    needed = start + n_symbols * cfg.symbol_len
    if needed > streams.shape[1]:
        raise InputError(
            f"capture has {streams.shape[1]} samples, {needed} needed for "
            f"{n_symbols} symbols at offset {start}"
        )
    slots = []
    for seq in range(n_symbols):
        lo = start + seq * cfg.symbol_len
        payload = streams[:, lo : lo + cfg.symbol_len]
        slots.append(
            SymbolSlot(seq_no=seq, kind=PILOT if seq == 0 else DATA, payload=payload)
        )
    return slots


@dataclass
class PipelineResult:
    estimate: ChannelEstimate
    symbols: list
    timings: list
    bits: np.ndarray = field(init=False)

    def __post_init__(self):
        chunks = [s.bits for s in self.symbols if s.bits is not None]
        self.bits = (
            np.concatenate(chunks) if chunks else np.empty(0, dtype=np.uint8)
        )


def run_ring_pipeline(slots, cfg, engine, pilot=None, ring_capacity=64):
    """Feed slots through a SymbolRing from a producer thread and demodulate
    them in submission order on the calling thread."""
    ring = SymbolRing(capacity=ring_capacity)
    consumer = ring.register_consumer()

    def produce():
        try:
            for slot in slots:
                ring.write(slot)
        except LifecycleError:
            pass  # consumer bailed out and closed the ring
        finally:
            ring.close()

    producer = threading.Thread(target=produce, name="rx-producer")
    producer.start()
    estimate = None
    symbols = []
    timings = []
    try:
        while True:
            t0 = time.perf_counter()
            slot = ring.read(consumer)
            read_s = time.perf_counter() - t0
            if slot is None:
                break
            result, t = process_symbol(
                slot, estimate, cfg, engine, pilot=pilot, read_seconds=read_s
            )
            timings.append(t)
            if isinstance(result, ChannelEstimate):
                estimate = result
            else:
                symbols.append(result)
    finally:
        ring.close()
        producer.join()
    if estimate is None:
        raise PipelineOrderError("stream ended without a pilot symbol")
    return PipelineResult(estimate=estimate, symbols=symbols, timings=timings)


def score_bits(decoded_bits, truth_bits):
    """(errors, compared) over the truth length; padding beyond it is ignored."""
    truth_bits = np.asarray(truth_bits, dtype=np.uint8).ravel()
    if decoded_bits.size < truth_bits.size:
        raise ContractError(
            f"decoded {decoded_bits.size} bits, truth has {truth_bits.size}"
        )
    errors = int(np.count_nonzero(decoded_bits[: truth_bits.size] != truth_bits))
    return errors, truth_bits.size


def evm_db(equalized, reference):
    """Error-vector power relative to the reference constellation, in dB."""
    reference = np.asarray(reference)
    err = np.sum(np.abs(equalized[: reference.size] - reference) ** 2)
    ref = np.sum(np.abs(reference) ** 2)
    if ref <= 0:
        return math.nan
    if err == 0:
        return -math.inf
    return 10.0 * math.log10(err / ref)
