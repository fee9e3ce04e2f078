"""Hot-kernel backend selection.

``OFDMRX_BACKEND`` picks the implementation:

* ``auto`` (default) - numba JIT kernels when numba imports, else NumPy
* ``numba``          - require the numba kernels, fail if unavailable
* ``numpy``          - force the vectorized NumPy fallback

Both backends implement the same algorithms with the same operation order;
``benchmarks/backend_bench.py`` compares their throughput.
"""

import os

import numpy as np

from ..errors import ConfigurationError

_requested = os.environ.get("OFDMRX_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ConfigurationError(
        f"OFDMRX_BACKEND must be auto, numba or numpy, got {_requested!r}"
    )

if _requested in ("auto", "numba"):
    try:
        from . import numba_backend as _impl
    except ImportError:
        if _requested == "numba":
            raise ConfigurationError(
                "OFDMRX_BACKEND=numba but numba is not importable"
            ) from None
        from . import numpy_backend as _impl
else:
    from . import numpy_backend as _impl

BACKEND = _impl.NAME


def fft_rows(mat, inverse=False):
    mat = np.ascontiguousarray(mat, dtype=np.complex128)
    return _impl.fft_rows(mat, inverse)


def corr_metrics(stream, chips):
    stream = np.ascontiguousarray(stream, dtype=np.complex128)
    chips = np.ascontiguousarray(chips, dtype=np.float64)
    return _impl.corr_metrics(stream, chips)


def tree_reduce_rows(mat):
    return _impl.tree_reduce_rows(np.asarray(mat, dtype=np.complex128))


def mrc_tree(ymat, hmat, eps):
    return _impl.mrc_tree(
        np.asarray(ymat, dtype=np.complex128),
        np.asarray(hmat, dtype=np.complex128),
        float(eps),
    )


def mrc_seq(ymat, hmat, eps):
    return _impl.mrc_seq(
        np.asarray(ymat, dtype=np.complex128),
        np.asarray(hmat, dtype=np.complex128),
        float(eps),
    )
