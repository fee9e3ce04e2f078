"""Vectorized NumPy implementations of the hot numeric kernels.

This is the fallback path used when numba is unavailable or disabled via
``OFDMRX_BACKEND=numpy``. Every function here has a numba twin in
``numba_backend`` with identical semantics (same radix-2 schedule, same
tree association order), verified against each other in the test suite.
"""

import numpy as np

NAME = "numpy"


def _bit_reverse_indices(n):
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft_rows(mat, inverse=False):
    """Radix-2 DIT transform of every row of a (rows, n) complex matrix.

    Forward is unnormalized; inverse carries the 1/n factor. n must be a
    power of two (validated by the caller).
    """
    mat = np.ascontiguousarray(mat, dtype=np.complex128)
    rows, n = mat.shape
    out = mat[:, _bit_reverse_indices(n)].copy()
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        work = out.reshape(rows, n // size, size)
        upper = work[:, :, :half].copy()
        lower = work[:, :, half:] * tw
        work[:, :, :half] = upper + lower
        work[:, :, half:] = upper - lower
        size *= 2
    if inverse:
        out /= n
    return out


def corr_metrics(stream, chips):
    """Normalized sliding correlation magnitude of ``stream`` against ``chips``.

    Returns metric[d] = |sum_i chips[i]*conj(stream[d+i])| / (||chips|| * ||window||),
    one value per window position. Windows with ~zero energy score 0.
    """
    stream = np.ascontiguousarray(stream, dtype=np.complex128)
    chips = np.asarray(chips, dtype=np.float64)
    n = stream.shape[0]
    p = chips.shape[0]
    # np.correlate conjugates its second argument; chips are real so the
    # magnitude equals the spec's |sum chips*conj(window)|.
    raw = np.correlate(stream, chips.astype(np.complex128), mode="valid")
    power = np.empty(n + 1, dtype=np.float64)
    power[0] = 0.0
    np.cumsum(stream.real**2 + stream.imag**2, out=power[1:])
    win = power[p:] - power[: n - p + 1]
    np.maximum(win, 0.0, out=win)
    denom = np.sqrt(np.sum(chips**2)) * np.sqrt(win)
    out = np.zeros(n - p + 1, dtype=np.float64)
    ok = denom > 1e-30
    out[ok] = np.abs(raw[ok]) / denom[ok]
    return out


def tree_reduce_rows(mat):
    """Pairwise tree sum over axis 0 (odd row carried to the next level)."""
    acc = np.asarray(mat, dtype=np.complex128)
    while acc.shape[0] > 1:
        cnt = acc.shape[0]
        half = cnt // 2
        merged = acc[0 : 2 * half : 2] + acc[1 : 2 * half : 2]
        if cnt % 2:
            merged = np.concatenate([merged, acc[-1:]], axis=0)
        acc = merged
    return acc[0]


def mrc_tree(ymat, hmat, eps):
    """MRC combine with the per-subcarrier pairwise tree over antennas."""
    num = np.conj(hmat) * ymat
    den = hmat.real**2 + hmat.imag**2
    num_sum = tree_reduce_rows(num)
    den_sum = tree_reduce_rows(den).real
    weights = den_sum.copy()
    np.maximum(den_sum, eps, out=den_sum)
    return num_sum / den_sum, weights


def mrc_seq(ymat, hmat, eps):
    """MRC combine accumulating antennas in index order."""
    nant, ncar = ymat.shape
    num = np.zeros(ncar, dtype=np.complex128)
    den = np.zeros(ncar, dtype=np.float64)
    for n in range(nant):
        num += np.conj(hmat[n]) * ymat[n]
        den += hmat[n].real ** 2 + hmat[n].imag ** 2
    weights = den.copy()
    np.maximum(den, eps, out=den)
    return num / den, weights
