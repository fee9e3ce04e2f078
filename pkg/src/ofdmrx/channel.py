"""Multi-antenna channel simulator standing in for the over-the-air link:
per-antenna gains or FIR taps, AWGN at a target per-stream SNR, and an
optional timing offset of noise-only samples before the frame."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, MeasurementError

MODES = ("identity", "fixed_gains", "flat_rayleigh", "multipath")


@dataclass(frozen=True)
class ChannelModel:
    mode: str = "identity"
    gains: tuple = None        # fixed_gains: one complex per antenna
    taps: tuple = None         # multipath: one complex FIR per antenna
    snr_db: float = None       # None = noiseless
    timing_offset: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"channel mode must be one of {MODES}")
        if self.timing_offset < 0:
            raise ConfigurationError("timing_offset must be >= 0")
        if self.mode == "fixed_gains" and not self.gains:
            raise ConfigurationError("fixed_gains mode needs a gain list")
        if self.mode == "multipath" and not self.taps:
            raise ConfigurationError("multipath mode needs per-antenna tap lists")


@dataclass
class RxCapture:
    streams: np.ndarray  # (n_antennas, n_samples) complex
    cfg: object
    truth: dict = field(default_factory=dict)


def _antenna_rng(seed, antenna):
    # per-antenna derived stream keeps synthesis deterministic under any
    # worker decomposition
    return np.random.default_rng([int(seed), int(antenna)])


def _antenna_response(model, cfg, antenna, rng):
    if model.mode == "identity":
        return np.ones(1, dtype=np.complex128)
    if model.mode == "fixed_gains":
        if len(model.gains) != cfg.n_antennas:
            raise ConfigurationError(
                f"fixed_gains needs {cfg.n_antennas} entries, got {len(model.gains)}"
            )
        return np.array([model.gains[antenna]], dtype=np.complex128)
    if model.mode == "flat_rayleigh":
        g = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2.0)
        return np.array([g], dtype=np.complex128)
    taps = np.asarray(model.taps[antenna], dtype=np.complex128)
    if len(model.taps) != cfg.n_antennas:
        raise ConfigurationError(
            f"multipath needs {cfg.n_antennas} tap lists, got {len(model.taps)}"
        )
    if taps.size >= cfg.cp_len:
        raise ConfigurationError(
            f"multipath tap count {taps.size} must stay below cp_len {cfg.cp_len}"
        )
    return taps


def apply_channel(frame, model, cfg):
    """Push one transmitted frame through the model, producing N received
    streams. Noise variance is calibrated per antenna against the measured
    post-channel signal power so snr_db is the actual per-stream SNR."""
    tx = frame.samples
    n_samples = tx.shape[0] + model.timing_offset
    streams = np.empty((cfg.n_antennas, n_samples), dtype=np.complex128)
    truth_gains = []
    for antenna in range(cfg.n_antennas):
        rng = _antenna_rng(model.rng_seed, antenna)
        response = _antenna_response(model, cfg, antenna, rng)
        if response.size == 1:
            signal = response[0] * tx
        else:
            signal = np.convolve(tx, response)[: tx.shape[0]]
        truth_gains.append(response.copy())
        if model.snr_db is None:
            noise_scale = 0.0
        else:
            signal_power = float(np.mean(np.abs(signal) ** 2))
            noise_power = signal_power / (10.0 ** (model.snr_db / 10.0))
            noise_scale = math.sqrt(noise_power / 2.0)
        if noise_scale > 0.0:
            noise = noise_scale * (
                rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples)
            )
        else:
            noise = np.zeros(n_samples, dtype=np.complex128)
        streams[antenna, : model.timing_offset] = noise[: model.timing_offset]
        streams[antenna, model.timing_offset :] = signal + noise[model.timing_offset :]
    truth = {
        "offset": model.timing_offset,
        "gains": truth_gains,
        "snr_db": model.snr_db,
        "mode": model.mode,
    }
    return RxCapture(streams=streams, cfg=cfg, truth=truth)


def measure_snr(clean, noisy):
    """SNR in dB of ``noisy`` against the reference ``clean`` signal."""
    clean = np.asarray(clean)
    noisy = np.asarray(noisy)
    if clean.shape != noisy.shape:
        raise MeasurementError(
            f"length mismatch: clean {clean.shape} vs noisy {noisy.shape}"
        )
    signal_power = float(np.sum(np.abs(clean) ** 2))
    if signal_power <= 0.0:
        raise MeasurementError("reference signal has zero power")
    noise_power = float(np.sum(np.abs(noisy - clean) ** 2))
    if noise_power == 0.0:
        return math.inf
    return 10.0 * math.log10(signal_power / noise_power)
