"""Core numeric operations: FFT/IFFT, fftshift, the direct DFT oracle and
tree-structured summation.

Convention: the forward transform is unnormalized, the inverse carries the
1/n factor, so ``ifft(fft(x)) == x``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, ContractError, NumericInputError


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _check_transform_input(x, op):
    x = np.asarray(x)
    if x.ndim != 1:
        raise ContractError(f"{op} expects a 1-D vector, got shape {x.shape}")
    n = x.shape[0]
    if n < 2 or not is_power_of_two(n):
        raise ConfigurationError(f"{op} length must be a power of two >= 2, got {n}")
    if not np.all(np.isfinite(x)):
        raise NumericInputError(f"{op} input contains non-finite values")
    return np.ascontiguousarray(x, dtype=np.complex128)


def fft(x):
    """Unnormalized forward DFT of a power-of-two length vector."""
    x = _check_transform_input(x, "fft")
    return kernels.fft_rows(x[None, :], inverse=False)[0]


def ifft(x):
    """Inverse DFT with 1/n normalization; exact inverse of fft()."""
    x = _check_transform_input(x, "ifft")
    return kernels.fft_rows(x[None, :], inverse=True)[0]


def fft_matrix(mat, inverse=False):
    """Row-wise fft/ifft of a 2-D matrix (each row one vector)."""
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ContractError(f"fft_matrix expects a 2-D matrix, got shape {mat.shape}")
    n = mat.shape[1]
    if n < 2 or not is_power_of_two(n):
        raise ConfigurationError(f"fft length must be a power of two >= 2, got {n}")
    if not np.all(np.isfinite(mat)):
        raise NumericInputError("fft input contains non-finite values")
    return kernels.fft_rows(mat, inverse=inverse)


def fftshift(x):
    """Swap the first and second halves of the last axis (even length only)."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n % 2 != 0:
        raise ConfigurationError(f"fftshift requires an even length, got {n}")
    half = n // 2
    return np.concatenate([x[..., half:], x[..., :half]], axis=-1)


def dft_direct(x):
    """O(n^2) forward DFT by direct double-precision summation (oracle)."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    n = x.shape[0]
    k = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return basis @ x


def idft_direct(x):
    """O(n^2) inverse DFT by direct summation, with 1/n normalization."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    n = x.shape[0]
    k = np.arange(n)
    basis = np.exp(2j * np.pi * np.outer(k, k) / n)
    return (basis @ x) / n


@dataclass(frozen=True)
class ReductionPlan:
    """Pairwise summation schedule: per level, index pairs plus an optional
    carried-over odd element."""

    n_inputs: int
    depth: int
    levels: tuple  # ((pairs, carry_index_or_None), ...) over level input indices

    @classmethod
    def for_size(cls, n_inputs):
        if n_inputs < 1:
            raise ConfigurationError(f"reduction needs >= 1 input, got {n_inputs}")
        levels = []
        count = n_inputs
        while count > 1:
            half = count // 2
            pairs = tuple((2 * i, 2 * i + 1) for i in range(half))
            carry = count - 1 if count % 2 else None
            levels.append((pairs, carry))
            count = half + (1 if count % 2 else 0)
        return cls(n_inputs=n_inputs, depth=len(levels), levels=tuple(levels))


def parallel_reduce_sum(values, plan):
    """Sum all elements by the pairwise tree schedule in ``plan``."""
    values = np.asarray(values, dtype=np.complex128)
    if values.ndim != 1:
        raise ContractError("parallel_reduce_sum expects a 1-D vector")
    if plan.n_inputs != values.shape[0]:
        raise ContractError(
            f"plan covers {plan.n_inputs} inputs, got {values.shape[0]} values"
        )
    level = values
    for pairs, carry in plan.levels:
        nxt = np.empty(len(pairs) + (1 if carry is not None else 0), dtype=np.complex128)
        for i, (a, b) in enumerate(pairs):
            nxt[i] = level[a] + level[b]
        if carry is not None:
            nxt[-1] = level[carry]
        level = nxt
    return complex(level[0])
