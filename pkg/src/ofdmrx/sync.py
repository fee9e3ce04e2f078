"""Packet detection by normalized sliding correlation against the PN preamble.

The offset decision is taken on antenna 0 (front-ends share one clock);
per-antenna peaks are kept for diagnostics.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputError

DEFAULT_THRESHOLD = 0.6


@dataclass(frozen=True)
class DetectionResult:
    detected: bool
    frame_start: int          # index of the first PN chip
    symbol0_offset: int       # index of the first OFDM symbol
    peak_metric: float        # normalized correlation magnitude in [0, 1]
    per_antenna_peaks: tuple  # (peak_index, peak_metric) per antenna


def detect_packet(capture, pn, threshold=DEFAULT_THRESHOLD):
    streams = np.atleast_2d(capture.streams)
    if streams.shape[1] < pn.length:
        raise InputError(
            f"stream length {streams.shape[1]} shorter than PN length {pn.length}"
        )
    peaks = []
    for antenna in range(streams.shape[0]):
        metrics = kernels.corr_metrics(streams[antenna], pn.chips)
        idx = int(np.argmax(metrics))
        peaks.append((idx, float(metrics[idx])))
    frame_start, peak_metric = peaks[0]
    return DetectionResult(
        detected=peak_metric >= threshold,
        frame_start=frame_start,
        symbol0_offset=frame_start + pn.length,
        peak_metric=peak_metric,
        per_antenna_peaks=tuple(peaks),
    )
