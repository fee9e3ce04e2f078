"""Transmit-side construction: PN preamble, Gray QAM, pilot symbol and the
OFDM frame (preamble | pilot | data symbols, each with a cyclic prefix)."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import ConfigurationError, FramingError, NonPrimitiveTapsError

# x^8 + x^6 + x^5 + x^4 + 1, validated for maximum length at generation time
DEFAULT_PN_TAPS = (8, 6, 5, 4)
DEFAULT_PN_SEED = 1
DEFAULT_PILOT_SEED = 20519

# canonical cyclic prefix lengths per FFT size
CANONICAL_CP = {64: 16, 1024: 72}

QAM_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class OfdmConfig:
    fft_len: int
    cp_len: int
    n_antennas: int
    qam_order: int = 4
    pn_len: int = 255
    sample_rate_hz: float = 10e6  # metadata only

    def __post_init__(self):
        if not numerics.is_power_of_two(self.fft_len) or self.fft_len < 2:
            raise ConfigurationError(f"fft_len must be a power of two, got {self.fft_len}")
        if not 0 <= self.cp_len < self.fft_len:
            raise ConfigurationError(
                f"cp_len must satisfy 0 <= cp_len < fft_len, got {self.cp_len}"
            )
        if self.n_antennas < 1:
            raise ConfigurationError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if self.qam_order not in QAM_ORDERS:
            raise ConfigurationError(f"qam_order must be one of {QAM_ORDERS}")
        if self.pn_len < 7 or not numerics.is_power_of_two(self.pn_len + 1):
            raise ConfigurationError(
                f"pn_len must be 2^r - 1 with r >= 3, got {self.pn_len}"
            )

    @property
    def symbol_len(self):
        return self.fft_len + self.cp_len

    @property
    def bits_per_qam_symbol(self):
        return int(math.log2(self.qam_order))


def default_cp(fft_len):
    """Canonical CP length for the supported FFT sizes, else an eighth."""
    return CANONICAL_CP.get(fft_len, max(1, fft_len // 8))


# ---------------------------------------------------------------------------
# PN preamble (maximum-length LFSR sequence)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PnSequence:
    chips: np.ndarray  # bipolar +-1, float64
    taps: tuple
    seed: int

    @property
    def length(self):
        return self.chips.shape[0]


def generate_pn(taps=DEFAULT_PN_TAPS, seed=DEFAULT_PN_SEED, length=255):
    """Run a Fibonacci LFSR to produce the bipolar m-sequence.

    ``taps`` are the polynomial exponents with the degree included, e.g.
    (8, 6, 5, 4) for x^8+x^6+x^5+x^4+1. The register period is checked
    against ``length``, so non-primitive taps are rejected rather than
    trusted.
    """
    taps = tuple(sorted(set(int(t) for t in taps), reverse=True))
    if not taps or min(taps) < 1:
        raise ConfigurationError(f"invalid tap set {taps}")
    degree = taps[0]
    if length != (1 << degree) - 1:
        raise ConfigurationError(
            f"length {length} does not match 2^{degree} - 1 for degree-{degree} taps"
        )
    seed = int(seed)
    if seed == 0:
        raise ConfigurationError("LFSR seed must be nonzero")
    if not 0 < seed < (1 << degree):
        raise ConfigurationError(f"seed must fit in {degree} register bits")

    # register bit i-1 holds stage i; output taken from the last stage
    state = seed
    bits = np.empty(length, dtype=np.uint8)
    for n in range(length):
        bits[n] = (state >> (degree - 1)) & 1
        feedback = 0
        for t in taps:
            feedback ^= (state >> (t - 1)) & 1
        state = ((state << 1) & ((1 << degree) - 1)) | feedback
        if state == seed and n != length - 1:
            raise NonPrimitiveTapsError(
                f"taps {taps} repeat after {n + 1} steps, expected period {length}"
            )
    if state != seed:
        raise NonPrimitiveTapsError(
            f"taps {taps} did not return to the seed state after {length} steps"
        )
    chips = np.where(bits == 1, 1.0, -1.0)
    return PnSequence(chips=chips, taps=taps, seed=seed)


# ---------------------------------------------------------------------------
# Gray-coded square QAM
# ---------------------------------------------------------------------------

def _gray_decode(g):
    i = g
    g >>= 1
    while g:
        i ^= g
        g >>= 1
    return i


def _axis_amplitude(bits_value, levels):
    # highest amplitude at Gray rank 0, stepping down by 2 per rank
    return (levels - 1) - 2 * _gray_decode(bits_value)


def _build_constellation(order):
    bits_per = int(math.log2(order))
    axis_bits = bits_per // 2
    levels = 1 << axis_bits
    mean_axis_power = np.mean([(levels - 1 - 2 * i) ** 2 for i in range(levels)])
    scale = 1.0 / math.sqrt(2.0 * mean_axis_power)
    table = np.empty(order, dtype=np.complex128)
    for value in range(order):
        i_bits = value >> axis_bits
        q_bits = value & (levels - 1)
        table[value] = complex(
            _axis_amplitude(i_bits, levels), _axis_amplitude(q_bits, levels)
        ) * scale
    return table, scale, axis_bits, levels


_CONSTELLATIONS = {order: _build_constellation(order) for order in QAM_ORDERS}


def qam_constellation(order):
    """Unit-average-energy Gray constellation for the given order."""
    if order not in _CONSTELLATIONS:
        raise ConfigurationError(f"qam order must be one of {QAM_ORDERS}, got {order}")
    return _CONSTELLATIONS[order][0]


def qam_map(bits, order):
    """Map a bit sequence onto Gray-coded square QAM (first half of each
    symbol's bits drives I, second half Q, MSB first)."""
    table = qam_constellation(order)
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    bits_per = int(math.log2(order))
    if bits.size % bits_per != 0:
        raise FramingError(
            f"bit count {bits.size} is not a multiple of {bits_per} (order {order})"
        )
    groups = bits.reshape(-1, bits_per)
    weights = 1 << np.arange(bits_per - 1, -1, -1)
    return table[groups @ weights]


def qam_demap(symbols, order):
    """Hard minimum-distance decision back to bits (per-axis slicing, which
    is exact for square Gray constellations)."""
    if order not in _CONSTELLATIONS:
        raise ConfigurationError(f"qam order must be one of {QAM_ORDERS}, got {order}")
    _, scale, axis_bits, levels = _CONSTELLATIONS[order]
    symbols = np.asarray(symbols, dtype=np.complex128).ravel() / scale
    ranks_i = np.clip(np.round(((levels - 1) - symbols.real) / 2), 0, levels - 1)
    ranks_q = np.clip(np.round(((levels - 1) - symbols.imag) / 2), 0, levels - 1)
    ranks_i = ranks_i.astype(np.int64)
    ranks_q = ranks_q.astype(np.int64)
    code_i = ranks_i ^ (ranks_i >> 1)
    code_q = ranks_q ^ (ranks_q >> 1)
    out = np.empty((symbols.size, 2 * axis_bits), dtype=np.uint8)
    for b in range(axis_bits):
        shift = axis_bits - 1 - b
        out[:, b] = (code_i >> shift) & 1
        out[:, axis_bits + b] = (code_q >> shift) & 1
    return out.ravel()


# ---------------------------------------------------------------------------
# Pilot and frame assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PilotDefinition:
    values: np.ndarray  # one unit-modulus value per subcarrier

    def __post_init__(self):
        mags = np.abs(self.values)
        if not np.allclose(mags, 1.0, atol=1e-12):
            raise ConfigurationError("pilot values must all have unit modulus")


def make_pilot(fft_len, seed=DEFAULT_PILOT_SEED):
    """Fixed-seed BPSK pilot occupying every subcarrier."""
    rng = np.random.default_rng(seed)
    values = np.where(rng.integers(0, 2, size=fft_len) == 1, 1.0, -1.0).astype(
        np.complex128
    )
    return PilotDefinition(values=values)


@dataclass
class OfdmFrame:
    cfg: OfdmConfig
    preamble: np.ndarray        # pn_len complex samples
    pilot_symbol: np.ndarray    # (fft_len + cp_len,) complex
    data_symbols: np.ndarray    # (n_data, fft_len + cp_len) complex
    tx_bits: np.ndarray         # payload bits as transmitted
    tx_qam: np.ndarray          # mapped payload samples (without padding)
    pad_qam: int                # zero samples appended to fill the last symbol
    samples: np.ndarray = field(init=False)  # full time-domain stream

    def __post_init__(self):
        self.samples = np.concatenate(
            [self.preamble, self.pilot_symbol, self.data_symbols.ravel()]
        )

    @property
    def n_data_symbols(self):
        return self.data_symbols.shape[0]

    @property
    def total_len(self):
        return self.samples.shape[0]


def ofdm_modulate(subcarrier_rows, cp_len):
    """Turn rows of subcarrier values (centered-spectrum order) into CP-prefixed
    time-domain symbols with unit average sample power."""
    rows = np.atleast_2d(np.asarray(subcarrier_rows, dtype=np.complex128))
    fft_len = rows.shape[1]
    # undo the receive-side fftshift, then scale so E|x|^2 matches the
    # unit-amplitude preamble
    time = numerics.fft_matrix(numerics.fftshift(rows), inverse=True)
    time *= math.sqrt(fft_len)
    return np.hstack([time[:, fft_len - cp_len :], time]) if cp_len else time


def build_frame(cfg, pilot, payload_bits, pn):
    """Assemble preamble | pilot | data symbols from payload bits."""
    if pilot.values.shape[0] != cfg.fft_len:
        raise ConfigurationError(
            f"pilot has {pilot.values.shape[0]} values, config needs {cfg.fft_len}"
        )
    if pn.length != cfg.pn_len:
        raise ConfigurationError(
            f"PN length {pn.length} does not match config pn_len {cfg.pn_len}"
        )
    payload_bits = np.asarray(payload_bits, dtype=np.uint8).ravel()
    if payload_bits.size == 0:
        raise ConfigurationError("payload is empty")
    tx_qam = qam_map(payload_bits, cfg.qam_order)
    n_data = -(-tx_qam.size // cfg.fft_len)  # ceil division
    pad = n_data * cfg.fft_len - tx_qam.size
    grid = np.concatenate([tx_qam, np.zeros(pad, dtype=np.complex128)])
    grid = grid.reshape(n_data, cfg.fft_len)
    return OfdmFrame(
        cfg=cfg,
        preamble=pn.chips.astype(np.complex128),
        pilot_symbol=ofdm_modulate(pilot.values, cfg.cp_len)[0],
        data_symbols=ofdm_modulate(grid, cfg.cp_len),
        tx_bits=payload_bits.copy(),
        tx_qam=tx_qam,
        pad_qam=pad,
    )
