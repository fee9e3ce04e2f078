"""numba @njit implementations of the hot numeric kernels.

These are the default kernels. All are compiled nogil so the data-parallel
engine's thread pool gets real overlap; cache=True keeps the JIT cost to the
first ever run. Semantics match ``numpy_backend`` exactly (same radix-2
schedule, same reduction tree).
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def fft_rows(mat, inverse=False):
    rows, n = mat.shape
    bits = 0
    m = n
    while m > 1:
        bits += 1
        m >>= 1
    out = np.empty((rows, n), dtype=np.complex128)
    for r in range(rows):
        for i in range(n):
            j = 0
            x = i
            for _ in range(bits):
                j = (j << 1) | (x & 1)
                x >>= 1
            out[r, j] = mat[r, i]
    sign = 1.0 if inverse else -1.0
    tw = np.empty(n // 2, dtype=np.complex128)
    size = 2
    while size <= n:
        half = size >> 1
        step = sign * 2.0 * np.pi / size
        for k in range(half):
            tw[k] = complex(np.cos(step * k), np.sin(step * k))
        for r in range(rows):
            for start in range(0, n, size):
                for k in range(half):
                    a = out[r, start + k]
                    b = out[r, start + k + half] * tw[k]
                    out[r, start + k] = a + b
                    out[r, start + k + half] = a - b
        size <<= 1
    if inverse:
        for r in range(rows):
            for i in range(n):
                out[r, i] /= n
    return out


@njit(cache=True, nogil=True)
def corr_metrics(stream, chips):
    n = stream.shape[0]
    p = chips.shape[0]
    wins = n - p + 1
    out = np.zeros(wins, dtype=np.float64)
    ref = 0.0
    for i in range(p):
        ref += chips[i] * chips[i]
    ref = np.sqrt(ref)
    energy = 0.0
    for i in range(p):
        s = stream[i]
        energy += s.real * s.real + s.imag * s.imag
    for d in range(wins):
        cr = 0.0
        ci = 0.0
        for i in range(p):
            s = stream[d + i]
            cr += chips[i] * s.real
            ci -= chips[i] * s.imag
        denom = ref * np.sqrt(energy if energy > 0.0 else 0.0)
        if denom > 1e-30:
            out[d] = np.sqrt(cr * cr + ci * ci) / denom
        # slide the window energy
        if d + 1 < wins:
            head = stream[d]
            tail = stream[d + p]
            energy += tail.real * tail.real + tail.imag * tail.imag
            energy -= head.real * head.real + head.imag * head.imag
            if energy < 0.0:
                energy = 0.0
    return out


@njit(cache=True, nogil=True)
def tree_reduce_rows(mat):
    rows, cols = mat.shape
    work = mat.copy()
    cnt = rows
    while cnt > 1:
        half = cnt // 2
        for i in range(half):
            for c in range(cols):
                work[i, c] = work[2 * i, c] + work[2 * i + 1, c]
        if cnt & 1:
            for c in range(cols):
                work[half, c] = work[cnt - 1, c]
            cnt = half + 1
        else:
            cnt = half
    return work[0]


@njit(cache=True, nogil=True)
def mrc_tree(ymat, hmat, eps):
    nant, ncar = ymat.shape
    s_hat = np.empty(ncar, dtype=np.complex128)
    weights = np.empty(ncar, dtype=np.float64)
    num = np.empty(nant, dtype=np.complex128)
    den = np.empty(nant, dtype=np.float64)
    for c in range(ncar):
        for n in range(nant):
            hv = hmat[n, c]
            yv = ymat[n, c]
            num[n] = complex(
                hv.real * yv.real + hv.imag * yv.imag,
                hv.real * yv.imag - hv.imag * yv.real,
            )
            den[n] = hv.real * hv.real + hv.imag * hv.imag
        cnt = nant
        while cnt > 1:
            half = cnt // 2
            for i in range(half):
                num[i] = num[2 * i] + num[2 * i + 1]
                den[i] = den[2 * i] + den[2 * i + 1]
            if cnt & 1:
                num[half] = num[cnt - 1]
                den[half] = den[cnt - 1]
                cnt = half + 1
            else:
                cnt = half
        weights[c] = den[0]
        d = den[0] if den[0] > eps else eps
        s_hat[c] = num[0] / d
    return s_hat, weights


@njit(cache=True, nogil=True)
def mrc_seq(ymat, hmat, eps):
    nant, ncar = ymat.shape
    s_hat = np.empty(ncar, dtype=np.complex128)
    weights = np.empty(ncar, dtype=np.float64)
    for c in range(ncar):
        nr = 0.0
        ni = 0.0
        d = 0.0
        for n in range(nant):
            hv = hmat[n, c]
            yv = ymat[n, c]
            nr += hv.real * yv.real + hv.imag * yv.imag
            ni += hv.real * yv.imag - hv.imag * yv.real
            d += hv.real * hv.real + hv.imag * hv.imag
        weights[c] = d
        if d < eps:
            d = eps
        s_hat[c] = complex(nr / d, ni / d)
    return s_hat, weights
