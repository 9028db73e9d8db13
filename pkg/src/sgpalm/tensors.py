"""Dense tensor layout, matricization, and Kronecker-sum operators.

Conventions used throughout the package:

* A K-way tensor is a plain ``numpy.ndarray`` of shape ``(d_1, ..., d_K)``.
* ``vec`` flattens with the first index varying fastest (Fortran order), so
  the linear position of entry ``(i_1, ..., i_K)`` is
  ``i_1 + d_1*i_2 + d_1*d_2*i_3 + ...`` (0-based).
* The mode-k unfolding puts mode-k fibers in columns; columns run over the
  remaining modes with the earliest remaining mode varying fastest.
* A factor set is a list of symmetric ``d_k x d_k`` matrices
  ``(Psi_1, ..., Psi_K)``.  Its Kronecker sum acts on tensors through
  ``ks_apply`` and, squared, defines the precision operator applied by
  ``precision_apply``.

All functions are pure; none mutates its inputs.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

# Largest d = prod(d_k) for which dense-matrix oracles may be materialized.
DENSE_ORACLE_CAP = 4096


class SingularOperatorError(ValueError):
    """Raised when a Kronecker-sum operator has a (near-)zero eigenvalue sum."""


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return the symmetric part ``(m + m.T)/2`` of a square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return (m + m.T) / 2.0


def check_factors(factors: Sequence[np.ndarray], shape: Sequence[int] | None = None) -> None:
    """Validate a factor set: square matrices, optionally matching ``shape``."""
    if len(factors) == 0:
        raise ValueError("factor set is empty")
    for k, psi in enumerate(factors):
        if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
            raise ValueError(f"factor {k} is not square: shape {psi.shape}")
    if shape is not None:
        dims = tuple(p.shape[0] for p in factors)
        if dims != tuple(shape):
            raise ValueError(f"factor dims {dims} do not match tensor shape {tuple(shape)}")


def vec(x: np.ndarray) -> np.ndarray:
    """Flatten a tensor to a vector with the first index varying fastest."""
    return np.asarray(x).reshape(-1, order="F")


def vec_samples(samples: np.ndarray) -> np.ndarray:
    """Apply :func:`vec` to every sample of an ``(N, d_1, ..., d_K)`` array."""
    samples = np.asarray(samples)
    axes = (0,) + tuple(range(samples.ndim - 1, 0, -1))
    return samples.transpose(axes).reshape(samples.shape[0], -1)


def fold(v: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`vec`: reshape a vector back to ``shape``."""
    v = np.asarray(v)
    d = int(np.prod(shape))
    if v.size != d:
        raise ValueError(f"vector of length {v.size} cannot fold to shape {tuple(shape)}")
    return v.reshape(tuple(shape), order="F")


def mode_unfold(x: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` matricization of ``x``.

    Parameters
    ----------
    x : ndarray
        K-way tensor.
    mode : int
        0-based mode index.

    Returns
    -------
    ndarray of shape ``(d_mode, d / d_mode)``
        Mode fibers in columns; remaining modes ordered earliest-fastest.
    """
    x = np.asarray(x)
    if not 0 <= mode < x.ndim:
        raise ValueError(f"mode {mode} out of range for a {x.ndim}-way tensor")
    return np.moveaxis(x, mode, 0).reshape(x.shape[mode], -1, order="F")


def mode_fold(m: np.ndarray, mode: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`mode_unfold` for a tensor of the given ``shape``."""
    shape = tuple(shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    rest = shape[:mode] + shape[mode + 1 :]
    full = np.asarray(m).reshape((shape[mode],) + rest, order="F")
    return np.moveaxis(full, 0, mode)


def kmode_product(x: np.ndarray, a: np.ndarray, mode: int) -> np.ndarray:
    """k-mode product ``x ×_mode a``.

    ``a`` has shape ``(J, d_mode)``; the result replaces extent ``d_mode``
    with ``J``.  Equivalent to ``mode_fold(a @ mode_unfold(x, mode), ...)``.
    """
    x = np.asarray(x)
    a = np.asarray(a)
    if not 0 <= mode < x.ndim:
        raise ValueError(f"mode {mode} out of range for a {x.ndim}-way tensor")
    if a.ndim != 2 or a.shape[1] != x.shape[mode]:
        raise ValueError(
            f"matrix of shape {a.shape} cannot multiply mode {mode} of extent {x.shape[mode]}"
        )
    out = np.tensordot(a, x, axes=(1, mode))
    return np.moveaxis(out, 0, mode)


def ks_apply(factors: Sequence[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Apply the Kronecker-sum operator: ``sum_k x ×_k Psi_k``."""
    check_factors(factors, x.shape)
    out = kmode_product(x, factors[0], 0)
    for k in range(1, len(factors)):
        out += kmode_product(x, factors[k], k)
    return out


def ks_dense(factors: Sequence[np.ndarray], cap: int = DENSE_ORACLE_CAP) -> np.ndarray:
    """Materialize the Kronecker sum as a dense ``d x d`` matrix.

    Small-instance oracle only: raises if ``d = prod(d_k)`` exceeds ``cap``.
    The Kronecker ordering matches the first-index-fastest ``vec``; for K=2,
    ``ks_dense([A, B]) == kron(I_{d2}, A) + kron(B, I_{d1})``.
    """
    check_factors(factors)
    dims = [p.shape[0] for p in factors]
    d = int(np.prod(dims))
    if d > cap:
        raise ValueError(f"dense oracle capped at d <= {cap}, got d = {d}")
    out = np.zeros((d, d))
    for k, psi in enumerate(factors):
        mats = [np.asarray(psi) if j == k else np.eye(dims[j]) for j in range(len(dims))]
        # mode-1 factor must sit rightmost in the kron chain (fastest index)
        out += reduce(np.kron, reversed(mats))
    return out


def _eig_sum_grid(eigvals: Sequence[np.ndarray]) -> np.ndarray:
    """K-way grid of eigenvalue sums: grid[i_1,...,i_K] = sum_k w_k[i_k]."""
    k_total = len(eigvals)
    grid = np.zeros(tuple(len(w) for w in eigvals))
    for k, w in enumerate(eigvals):
        grid += w.reshape((1,) * k + (-1,) + (1,) * (k_total - k - 1))
    return grid


def ks_solve_batched(
    factors: Sequence[np.ndarray], rhs: np.ndarray, rtol: float = 1e-12
) -> np.ndarray:
    """Solve the Sylvester equation ``ks_apply(F, X_i) = T_i`` for a batch.

    ``rhs`` has shape ``(N, d_1, ..., d_K)``.  Each factor is taken symmetric
    and eigendecomposed once; the solve is elementwise division in the joint
    eigenbasis.
    """
    check_factors(factors, rhs.shape[1:])
    eigvals, eigvecs = [], []
    for psi in factors:
        w, u = np.linalg.eigh(psi)
        eigvals.append(w)
        eigvecs.append(u)
    grid = _eig_sum_grid(eigvals)
    scale = np.abs(grid).max()
    if np.abs(grid).min() <= rtol * max(1.0, scale):
        raise SingularOperatorError(
            "Kronecker-sum operator is singular to tolerance: "
            f"min |eigenvalue sum| = {np.abs(grid).min():.3e}"
        )
    y = np.asarray(rhs, dtype=float)
    for k, u in enumerate(eigvecs):
        y = np.moveaxis(np.tensordot(y, u, axes=(k + 1, 0)), -1, k + 1)
    y = y / grid[None, ...]
    for k, u in enumerate(eigvecs):
        y = np.moveaxis(np.tensordot(y, u, axes=(k + 1, 1)), -1, k + 1)
    return y


def ks_solve(factors: Sequence[np.ndarray], t: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Solve ``ks_apply(F, X) = t`` for a single tensor ``t``."""
    return ks_solve_batched(factors, np.asarray(t, dtype=float)[None, ...], rtol=rtol)[0]


def precision_apply(factors: Sequence[np.ndarray], v: np.ndarray) -> np.ndarray:
    """Apply the precision operator ``(⊕_k Psi_k)^2`` to a d-vector."""
    dims = tuple(p.shape[0] for p in factors)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != int(np.prod(dims)):
        raise ValueError(f"expected a vector of length {int(np.prod(dims))}, got shape {v.shape}")
    x = fold(v, dims)
    return vec(ks_apply(factors, ks_apply(factors, x)))


def precision_apply_tensor(factors: Sequence[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Tensor-shaped variant of :func:`precision_apply`."""
    return ks_apply(factors, ks_apply(factors, x))
