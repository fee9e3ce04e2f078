"""Experiment harness: sweep antennas x FFT size x engine, time every
pipeline stage per symbol, aggregate means, and derive parallel-vs-sequential
speedups. Also holds the front-end throughput model."""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import waveform
from .channel import apply_channel
from .errors import ConfigurationError, IncompleteDataError
from .receiver import EngineKind, extract_slots, make_engine, run_ring_pipeline
from .ringbuf import PILOT
from .sync import DEFAULT_THRESHOLD, detect_packet
from .waveform import OfdmConfig, build_frame, default_cp, generate_pn, make_pilot

PHASES = ("estimation", "demodulation")
STAGES = ("read", "cp_drop", "fft", "ls", "mrc", "warmup")

CSV_HEADER = (
    "fft_len,cp_len,n_antennas,engine,workers,phase,stage,mean_us,std_us,n_symbols"
)
SPEEDUP_HEADER = "fft_len,n_antennas,phase,stage,speedup"


def default_worker_count():
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class ExperimentMatrix:
    antenna_counts: tuple = tuple(range(1, 17))
    fft_lens: tuple = (64, 1024)
    engines: tuple = ("sequential", "data_parallel")
    repetitions: int = 1
    payload_qam_samples: int = 100000
    workers: int = field(default_factory=default_worker_count)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        if self.payload_qam_samples < 1:
            raise ConfigurationError("payload_qam_samples must be >= 1")
        for eng in self.engines:
            if eng not in ("sequential", "data_parallel"):
                raise ConfigurationError(f"unknown engine {eng!r}")


@dataclass(frozen=True)
class BenchRecord:
    fft_len: int
    cp_len: int
    n_antennas: int
    engine: str
    workers: int
    phase: str
    stage: str
    mean_us: float
    std_us: float
    n_symbols: int


@dataclass
class SweepResult:
    records: list
    failed_cells: list  # human-readable diagnostics for skipped cells


@dataclass(frozen=True)
class SpeedupRow:
    fft_len: int
    n_antennas: int
    phase: str
    stage: str
    speedup: float


def _stage_samples(timings):
    """Per-stage duration samples split by phase."""
    out = {
        ("estimation", "read"): [],
        ("estimation", "cp_drop"): [],
        ("estimation", "fft"): [],
        ("estimation", "ls"): [],
        ("demodulation", "read"): [],
        ("demodulation", "cp_drop"): [],
        ("demodulation", "fft"): [],
        ("demodulation", "mrc"): [],
    }
    for t in timings:
        phase = "estimation" if t.kind == PILOT else "demodulation"
        out[(phase, "read")].append(t.read_s)
        out[(phase, "cp_drop")].append(t.cp_drop_s)
        out[(phase, "fft")].append(t.fft_s)
        out[(phase, t.combine_stage)].append(t.combine_s)
    return out


def _records_for_engine(cfg, engine_name, workers, timed_timings, warmup_timings):
    records = []
    samples = _stage_samples(timed_timings)
    for (phase, stage), values in samples.items():
        if not values:
            continue
        arr = np.asarray(values)
        records.append(
            BenchRecord(
                fft_len=cfg.fft_len,
                cp_len=cfg.cp_len,
                n_antennas=cfg.n_antennas,
                engine=engine_name,
                workers=workers,
                phase=phase,
                stage=stage,
                mean_us=float(arr.mean() * 1e6),
                std_us=float(arr.std() * 1e6),
                n_symbols=len(values),
            )
        )
    # first-touch costs reported separately, split per phase
    warm_est = sum(t.total_s for t in warmup_timings if t.kind == PILOT)
    warm_dem = sum(t.total_s for t in warmup_timings if t.kind != PILOT)
    for phase, total in (("estimation", warm_est), ("demodulation", warm_dem)):
        records.append(
            BenchRecord(
                fft_len=cfg.fft_len,
                cp_len=cfg.cp_len,
                n_antennas=cfg.n_antennas,
                engine=engine_name,
                workers=workers,
                phase=phase,
                stage="warmup",
                mean_us=float(total * 1e6),
                std_us=0.0,
                n_symbols=sum(1 for t in warmup_timings if (t.kind == PILOT) == (phase == "estimation")),
            )
        )
    return records


def run_matrix(matrix, model, seed=0, qam_order=4, threshold=DEFAULT_THRESHOLD,
               ring_capacity=64, progress=None):
    """Execute the sweep. Each (fft_len, n_antennas) group runs every engine
    on identical slots; timings are kept only if all engines decode identical
    bits. Detection or cross-check failures mark the group failed and the
    sweep continues."""
    records = []
    failed = []
    pn = generate_pn()
    rng = np.random.default_rng(seed)

    frames = {}
    pilots = {}
    for fft_len in matrix.fft_lens:
        probe = OfdmConfig(fft_len, default_cp(fft_len), 1, qam_order)
        n_bits = matrix.payload_qam_samples * probe.bits_per_qam_symbol
        bits = rng.integers(0, 2, size=n_bits, dtype=np.uint8)
        pilots[fft_len] = make_pilot(fft_len)
        frames[fft_len] = build_frame(probe, pilots[fft_len], bits, pn)

    for fft_len in matrix.fft_lens:
        frame = frames[fft_len]
        pilot = pilots[fft_len]
        for n_antennas in matrix.antenna_counts:
            cfg = OfdmConfig(fft_len, default_cp(fft_len), n_antennas, qam_order)
            cell = f"fft={fft_len} antennas={n_antennas}"
            if progress:
                progress(cell)
            capture = apply_channel(frame, model, cfg)
            detection = detect_packet(capture, pn, threshold)
            if not detection.detected:
                failed.append(f"{cell}: detection failed (peak {detection.peak_metric:.3f})")
                continue
            slots = extract_slots(capture, detection, cfg, 1 + frame.n_data_symbols)

            group_records = []
            reference_bits = None
            group_ok = True
            for engine_name in matrix.engines:
                workers = matrix.workers if engine_name == "data_parallel" else 1
                kind = EngineKind(engine_name, workers)
                with make_engine(kind) as engine:
                    warmup = run_ring_pipeline(
                        slots, cfg, engine, pilot=pilot, ring_capacity=ring_capacity
                    )
                    if reference_bits is None:
                        reference_bits = warmup.bits
                    timed = []
                    runs_ok = np.array_equal(warmup.bits, reference_bits)
                    for _ in range(matrix.repetitions):
                        result = run_ring_pipeline(
                            slots, cfg, engine, pilot=pilot, ring_capacity=ring_capacity
                        )
                        runs_ok = runs_ok and np.array_equal(result.bits, reference_bits)
                        timed.extend(result.timings)
                    if not runs_ok:
                        failed.append(
                            f"{cell}: engine {engine_name} decoded different bits; "
                            "timings discarded"
                        )
                        group_ok = False
                        break
                    group_records.extend(
                        _records_for_engine(cfg, engine_name, workers, timed, warmup.timings)
                    )
            if group_ok:
                records.extend(group_records)
    return SweepResult(records=records, failed_cells=failed)


# ---------------------------------------------------------------------------
# Speedups
# ---------------------------------------------------------------------------

def speedup_table(records):
    """Sequential/parallel time ratios per stage, plus a per-phase total.
    Raises IncompleteDataError naming the cells that lack an engine pair."""
    by_cell = {}
    for r in records:
        if r.stage == "warmup":
            continue
        by_cell.setdefault(
            (r.fft_len, r.n_antennas, r.phase, r.stage), {}
        )[r.engine] = r.mean_us

    missing = sorted(
        f"fft={k[0]} antennas={k[1]} phase={k[2]} stage={k[3]}"
        for k, engines in by_cell.items()
        if not {"sequential", "data_parallel"} <= engines.keys()
    )
    if missing:
        raise IncompleteDataError(
            f"{len(missing)} cell(s) lack a sequential/data_parallel pair", missing
        )

    rows = []
    totals = {}
    for (fft_len, n_antennas, phase, stage), engines in sorted(by_cell.items()):
        seq, par = engines["sequential"], engines["data_parallel"]
        rows.append(SpeedupRow(fft_len, n_antennas, phase, stage, seq / par))
        tot = totals.setdefault((fft_len, n_antennas, phase), [0.0, 0.0])
        tot[0] += seq
        tot[1] += par
    for (fft_len, n_antennas, phase), (seq, par) in sorted(totals.items()):
        rows.append(SpeedupRow(fft_len, n_antennas, phase, "total", seq / par))
    rows.sort(key=lambda r: (r.fft_len, r.n_antennas, r.phase, r.stage))
    return rows


def frontend_throughput(n_antennas, bandwidth_hz, bytes_per_complex_sample=4):
    """Aggregate front-end to back-end bit rate: one complex sample per
    hertz of bandwidth per antenna."""
    if n_antennas < 1:
        raise ConfigurationError("n_antennas must be >= 1")
    if bandwidth_hz < 0 or bytes_per_complex_sample <= 0:
        raise ConfigurationError("bandwidth and sample size must be nonnegative/positive")
    return float(n_antennas) * float(bandwidth_hz) * float(bytes_per_complex_sample) * 8.0


# ---------------------------------------------------------------------------
# CSV round-trip
# ---------------------------------------------------------------------------

def write_bench_csv(records, path_or_file):
    _write_csv(
        path_or_file,
        CSV_HEADER.split(","),
        (
            (
                r.fft_len, r.cp_len, r.n_antennas, r.engine, r.workers,
                r.phase, r.stage, repr(r.mean_us), repr(r.std_us), r.n_symbols,
            )
            for r in records
        ),
    )


def read_bench_csv(path_or_file):
    rows = _read_csv(path_or_file, CSV_HEADER.split(","))
    return [
        BenchRecord(
            fft_len=int(row["fft_len"]),
            cp_len=int(row["cp_len"]),
            n_antennas=int(row["n_antennas"]),
            engine=row["engine"],
            workers=int(row["workers"]),
            phase=row["phase"],
            stage=row["stage"],
            mean_us=float(row["mean_us"]),
            std_us=float(row["std_us"]),
            n_symbols=int(row["n_symbols"]),
        )
        for row in rows
    ]


def write_speedup_csv(rows, path_or_file):
    _write_csv(
        path_or_file,
        SPEEDUP_HEADER.split(","),
        ((r.fft_len, r.n_antennas, r.phase, r.stage, repr(r.speedup)) for r in rows),
    )


def read_speedup_csv(path_or_file):
    rows = _read_csv(path_or_file, SPEEDUP_HEADER.split(","))
    return [
        SpeedupRow(
            fft_len=int(row["fft_len"]),
            n_antennas=int(row["n_antennas"]),
            phase=row["phase"],
            stage=row["stage"],
            speedup=float(row["speedup"]),
        )
        for row in rows
    ]


def _write_csv(path_or_file, header, rows):
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write_csv(fh, header, rows)
        return
    writer = csv.writer(path_or_file)
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def _read_csv(path_or_file, expected_header):
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "r", newline="", encoding="utf-8") as fh:
            return _read_csv(fh, expected_header)
    reader = csv.DictReader(path_or_file)
    if reader.fieldnames != expected_header:
        raise IncompleteDataError(
            f"CSV header {reader.fieldnames} does not match {expected_header}"
        )
    return list(reader)
