import math
from types import SimpleNamespace

import numpy as np
import pytest

from ofdmrx import waveform as wf
from ofdmrx.channel import ChannelModel, apply_channel, measure_snr
from ofdmrx.errors import ConfigurationError, MeasurementError


def make_frame(fft_len=64, cp_len=16, n_antennas=1, payload_qam=200, seed=3):
    cfg = wf.OfdmConfig(fft_len, cp_len, n_antennas)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=payload_qam * 2, dtype=np.uint8)
    frame = wf.build_frame(cfg, wf.make_pilot(fft_len), bits, wf.generate_pn())
    return cfg, frame


def test_identity_noiseless_passthrough():
    cfg, frame = make_frame()
    cap = apply_channel(frame, ChannelModel(), cfg)
    assert cap.streams.shape == (1, frame.total_len)
    assert np.array_equal(cap.streams[0], frame.samples)


def test_fixed_gain_scales_exactly():
    cfg, frame = make_frame()
    cap = apply_channel(frame, ChannelModel(mode="fixed_gains", gains=(2 + 0j,)), cfg)
    assert np.array_equal(cap.streams[0], 2.0 * frame.samples)


def test_flat_rayleigh_snr_calibration():
    # >= 1e5 samples per stream, measured SNR within +-0.3 dB of target
    cfg, frame = make_frame(payload_qam=80_000, n_antennas=2)
    noisy = apply_channel(
        frame, ChannelModel(mode="flat_rayleigh", snr_db=10.0, rng_seed=9), cfg
    )
    clean = apply_channel(
        frame, ChannelModel(mode="flat_rayleigh", snr_db=None, rng_seed=9), cfg
    )
    assert frame.total_len >= 100_000
    for antenna in range(cfg.n_antennas):
        snr = measure_snr(clean.streams[antenna], noisy.streams[antenna])
        assert abs(snr - 10.0) < 0.3


def test_truth_record_populated():
    cfg, frame = make_frame(n_antennas=3)
    model = ChannelModel(mode="flat_rayleigh", snr_db=15.0, timing_offset=42, rng_seed=5)
    cap = apply_channel(frame, model, cfg)
    assert cap.truth["offset"] == 42
    assert len(cap.truth["gains"]) == 3
    assert cap.truth["snr_db"] == 15.0


def test_determinism_bit_identical():
    cfg, frame = make_frame(n_antennas=4)
    model = ChannelModel(mode="flat_rayleigh", snr_db=5.0, timing_offset=7, rng_seed=21)
    a = apply_channel(frame, model, cfg)
    b = apply_channel(frame, model, cfg)
    assert np.array_equal(a.streams, b.streams)


def test_noiseless_linearity():
    cfg, frame = make_frame(n_antennas=2)
    model = ChannelModel(mode="flat_rayleigh", rng_seed=13)
    base = apply_channel(frame, model, cfg)
    rng = np.random.default_rng(1)
    for _ in range(5):
        scale = complex(rng.standard_normal(), rng.standard_normal())
        scaled = apply_channel(SimpleNamespace(samples=scale * frame.samples), model, cfg)
        assert np.allclose(scaled.streams, scale * base.streams, rtol=1e-12, atol=1e-12)


def test_rayleigh_average_power_near_unity():
    # many independent gain draws so the antenna average concentrates
    cfg, frame = make_frame(fft_len=64, cp_len=16, n_antennas=800, payload_qam=900)
    cap = apply_channel(frame, ChannelModel(mode="flat_rayleigh", rng_seed=2), cfg)
    assert cap.streams.size >= 1_000_000
    tx_power = float(np.mean(np.abs(frame.samples) ** 2))
    rx_power = float(np.mean(np.abs(cap.streams) ** 2))
    assert abs(rx_power / tx_power - 1.0) < 0.05


def test_timing_offset_prepends_noise_not_signal():
    cfg, frame = make_frame()
    model = ChannelModel(mode="identity", snr_db=20.0, timing_offset=500, rng_seed=8)
    cap = apply_channel(frame, model, cfg)
    assert cap.streams.shape[1] == frame.total_len + 500
    prefix_power = float(np.mean(np.abs(cap.streams[0, :500]) ** 2))
    signal_power = float(np.mean(np.abs(cap.streams[0, 500:]) ** 2))
    assert prefix_power < 0.1 * signal_power
    assert prefix_power > 0.0  # noise, not silence


def test_multipath_taps_must_fit_cp():
    cfg, frame = make_frame()
    taps = (tuple(np.ones(16)),)  # == cp_len, too long
    with pytest.raises(ConfigurationError):
        apply_channel(frame, ChannelModel(mode="multipath", taps=taps), cfg)


def test_fixed_gain_count_must_match():
    cfg, frame = make_frame(n_antennas=2)
    with pytest.raises(ConfigurationError):
        apply_channel(frame, ChannelModel(mode="fixed_gains", gains=(1 + 0j,)), cfg)


def test_measure_snr_noiseless_sentinel():
    x = np.ones(100, dtype=complex)
    assert measure_snr(x, x) == math.inf


def test_measure_snr_zero_db_by_construction():
    x = np.ones(1000, dtype=complex)
    # error vector has exactly the signal's power
    assert abs(measure_snr(x, x + 1j * x)) < 1e-12


def test_measure_snr_20db_concentration():
    rng = np.random.default_rng(123)
    clean = rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)
    sigma = math.sqrt(np.mean(np.abs(clean) ** 2) / 100.0 / 2.0)
    noisy = clean + sigma * (
        rng.standard_normal(clean.size) + 1j * rng.standard_normal(clean.size)
    )
    assert abs(measure_snr(clean, noisy) - 20.0) < 0.1


def test_measure_snr_rejects_zero_power_reference():
    with pytest.raises(MeasurementError):
        measure_snr(np.zeros(10, dtype=complex), np.ones(10, dtype=complex))


def test_measure_snr_rejects_length_mismatch():
    with pytest.raises(MeasurementError):
        measure_snr(np.ones(10, dtype=complex), np.ones(11, dtype=complex))


def test_unknown_mode_rejected():
    with pytest.raises(ConfigurationError):
        ChannelModel(mode="awgn_only")
