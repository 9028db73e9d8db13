"""Matrix-free linear forward prediction of one tensor slice.

With precision ``Omega = (⊕_k Psi_k)^2`` partitioned into a conditioned
block (all slices but the last along the time mode) and a predicted block
(the last slice), the conditional-mean predictor is

    y_hat = -Omega_22^{-1} Omega_21 y_history.

Block applications never materialize ``Omega``: vectors are embedded into
the full tensor with zero padding, pushed through ``precision_apply``, and
restricted back, and the ``Omega_22`` solve runs conjugate gradients on that
restricted operator.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensors import check_factors, precision_apply_tensor

CG_TOL = 1e-10


def cg_solve(
    apply_fn: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float = CG_TOL,
    max_iter: int | None = None,
) -> np.ndarray:
    """Conjugate gradients for a symmetric positive-definite operator.

    Stops when ``||apply(x) - b|| <= tol * ||b||``; raises if the iteration
    cap (default ``10 * len(b)``) is exhausted first.
    """
    b = np.asarray(b, dtype=float).ravel()
    n = b.size
    if max_iter is None:
        max_iter = 10 * n
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros(n)
    x = np.zeros(n)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    for _ in range(max_iter):
        ap = apply_fn(p)
        alpha = rs / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= tol * b_norm:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise RuntimeError(
        f"conjugate gradients did not reach tol {tol:g} in {max_iter} iterations"
    )


def _time_axis(n_modes: int, time_mode: int) -> int:
    axis = time_mode if time_mode >= 0 else n_modes + time_mode
    if not 0 <= axis < n_modes:
        raise ValueError(f"time mode {time_mode} out of range for {n_modes} modes")
    return axis


def forward_predict(
    factors: Sequence[np.ndarray],
    history: np.ndarray,
    time_mode: int = -1,
    tol: float = CG_TOL,
    max_iter: int | None = None,
) -> np.ndarray:
    """Predict the next slice along ``time_mode`` from the preceding ones.

    Parameters
    ----------
    factors : sequence of ndarray
        Symmetric generating factors with positive-definite Kronecker sum.
    history : ndarray
        Tensor shaped like the factor dimensions except the time mode has
        extent ``p - 1`` (the observed slices, in order).
    time_mode : int
        Which mode advances in time; the predicted slice is the next index
        along it.  Defaults to the last mode.

    Returns
    -------
    ndarray
        Predicted slice, shaped like the factor dimensions with the time
        mode removed.
    """
    check_factors(factors)
    dims = tuple(p.shape[0] for p in factors)
    axis = _time_axis(len(dims), time_mode)
    p = dims[axis]
    if p < 2:
        raise ValueError("time mode needs extent at least 2 to condition on history")
    hist_shape = dims[:axis] + (p - 1,) + dims[axis + 1 :]
    history = np.asarray(history, dtype=float)
    if history.shape != hist_shape:
        raise ValueError(f"history shape {history.shape} does not match {hist_shape}")
    if not np.all(np.isfinite(history)):
        raise ValueError("history contains non-finite values")

    slice_shape = dims[:axis] + dims[axis + 1 :]
    last = (slice(None),) * axis + (p - 1,)
    head = (slice(None),) * axis + (slice(0, p - 1),)

    def omega_21(h: np.ndarray) -> np.ndarray:
        full = np.zeros(dims)
        full[head] = h
        return precision_apply_tensor(factors, full)[last]

    def omega_22(v: np.ndarray) -> np.ndarray:
        full = np.zeros(dims)
        full[last] = v.reshape(slice_shape)
        return precision_apply_tensor(factors, full)[last].ravel()

    rhs = -omega_21(history).ravel()
    sol = cg_solve(omega_22, rhs, tol=tol, max_iter=max_iter)
    return sol.reshape(slice_shape)


def split_history(
    sample: np.ndarray, time_mode: int = -1
) -> tuple[np.ndarray, np.ndarray]:
    """Split one sample tensor into (history, actual last slice)."""
    sample = np.asarray(sample, dtype=float)
    axis = _time_axis(sample.ndim, time_mode)
    p = sample.shape[axis]
    head = (slice(None),) * axis + (slice(0, p - 1),)
    last = (slice(None),) * axis + (p - 1,)
    return sample[head], sample[last]
