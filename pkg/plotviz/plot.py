#!/usr/bin/env python3
"""Figure generator for the receiver benchmark CSVs.

Three figure kinds, all driven by the CSV schemas the bench tool emits:

* ``exec_time``  - per-symbol execution time vs antenna count, one panel per
  FFT size, one line per (engine, phase); input: bench.csv
* ``speedup``    - sequential/parallel speedup vs antenna count, one line per
  (fft_len, phase); input: speedup.csv
* ``throughput`` - front-end aggregate rate vs antenna count for a few
  per-antenna bandwidths, with the 10 Gb/s link capacity marked; the antenna
  range is taken from bench.csv

Usage: plot.py --csv bench.csv --kind exec_time --out fig7.png
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("exec_time", "speedup", "throughput")

BENCH_COLUMNS = (
    "fft_len", "cp_len", "n_antennas", "engine", "workers",
    "phase", "stage", "mean_us", "std_us", "n_symbols",
)
SPEEDUP_COLUMNS = ("fft_len", "n_antennas", "phase", "stage", "speedup")

THROUGHPUT_BANDWIDTHS_MHZ = (5.0, 10.0, 20.0)
BYTES_PER_SAMPLE = 4
LINK_CAPACITY_GBPS = 10.0


class PlotError(Exception):
    pass


class SchemaError(PlotError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    csv_path: str
    kind: str
    out_path: str


def load_rows(path, required_columns):
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for column in required_columns:
                if column not in header:
                    raise SchemaError(f"{path}: missing required column '{column}'")
            rows = list(reader)
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def _exec_time_figure(rows):
    # total per-symbol time = sum of the timed stages (warmup excluded)
    totals = {}
    for row in rows:
        if row["stage"] == "warmup":
            continue
        key = (int(row["fft_len"]), row["engine"], row["phase"], int(row["n_antennas"]))
        totals[key] = totals.get(key, 0.0) + float(row["mean_us"])
    fft_lens = sorted({k[0] for k in totals})
    series_keys = sorted({(k[1], k[2]) for k in totals})
    fig, axes = plt.subplots(
        1, len(fft_lens), figsize=(6 * len(fft_lens), 4.5), squeeze=False
    )
    for ax, fft_len in zip(axes[0], fft_lens):
        for engine, phase in series_keys:
            points = sorted(
                (n, total)
                for (f, e, p, n), total in totals.items()
                if f == fft_len and e == engine and p == phase
            )
            ax.plot(
                [p[0] for p in points],
                [p[1] for p in points],
                marker="o",
                label=f"{engine} {phase}",
            )
        ax.set_title(f"{fft_len}-point FFT")
        ax.set_xlabel("receive antennas")
        ax.set_ylabel("execution time per symbol (us)")
        ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    fig.suptitle("Per-symbol execution time: sequential vs data-parallel")
    return fig


def _speedup_figure(rows):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    keys = sorted(
        {(int(r["fft_len"]), r["phase"]) for r in rows if r["stage"] == "total"}
    )
    if not keys:
        raise SchemaError("speedup CSV has no stage=total rows")
    for fft_len, phase in keys:
        points = sorted(
            (int(r["n_antennas"]), float(r["speedup"]))
            for r in rows
            if r["stage"] == "total" and int(r["fft_len"]) == fft_len and r["phase"] == phase
        )
        ax.plot(
            [p[0] for p in points],
            [p[1] for p in points],
            marker="o",
            label=f"fft {fft_len} {phase}",
        )
    ax.axhline(1.0, color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("receive antennas")
    ax.set_ylabel("speedup (sequential / parallel)")
    ax.set_title("Average speedup vs antenna count")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return fig


def _throughput_figure(rows):
    antennas = sorted({int(r["n_antennas"]) for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for bw_mhz in THROUGHPUT_BANDWIDTHS_MHZ:
        rates = [n * bw_mhz * 1e6 * BYTES_PER_SAMPLE * 8 / 1e9 for n in antennas]
        ax.plot(antennas, rates, marker="o", label=f"{bw_mhz:g} MHz per antenna")
    ax.axhline(
        LINK_CAPACITY_GBPS, color="red", linestyle="--", label="10 Gb/s link"
    )
    ax.set_xlabel("receive antennas")
    ax.set_ylabel("front-end throughput (Gb/s)")
    ax.set_title("Front-end to back-end throughput model")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return fig


def render(spec):
    """Render the requested figure and write it to spec.out_path."""
    if spec.kind not in KINDS:
        raise PlotError(f"kind must be one of {KINDS}, got {spec.kind!r}")
    if spec.kind == "speedup":
        rows = load_rows(spec.csv_path, SPEEDUP_COLUMNS)
        fig = _speedup_figure(rows)
    else:
        rows = load_rows(spec.csv_path, BENCH_COLUMNS)
        fig = _exec_time_figure(rows) if spec.kind == "exec_time" else _throughput_figure(rows)
    fig.savefig(spec.out_path, dpi=120, bbox_inches="tight")
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csv", required=True)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        fig = render(PlotSpec(csv_path=args.csv, kind=args.kind, out_path=args.out))
        plt.close(fig)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
