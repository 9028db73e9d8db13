"""Pseudolikelihood objective, blockwise gradients, and Gram machinery.

The smooth part of the objective for factors ``(Psi_1, ..., Psi_K)`` and N
samples is

    H = -N * sum_u log(W_u) + 0.5 * sum_i ||ks_apply(Psi, X_i)||_F^2

where ``W_u = sum_k (Psi_k)_{u_k, u_k}`` ranges over the multi-index grid.
The quadratic term equals ``(N/2) tr(S Omega)`` with ``S`` the sample
covariance of ``vec(X)`` and ``Omega`` the squared Kronecker sum; it is never
evaluated through a dense ``d x d`` matrix.

:class:`GramSet` caches the per-mode Gram matrices and, when memory permits,
mode-pair moment tensors that make every objective/gradient evaluation
independent of the sample count.  The plain functions in this module compute
the same quantities directly from the samples and serve as the reference
path the cache is tested against.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .penalties import Penalty, penalty_value
from .tensors import check_factors, symmetrize

# Cap on total cached pair-moment entries (~160 MB of f64).
DEFAULT_MOMENT_BUDGET = 20_000_000


def as_dataset(samples: np.ndarray) -> np.ndarray:
    """Validate and return samples with shape ``(N, d_1, ..., d_K)``."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim < 2:
        raise ValueError("dataset must have shape (N, d_1, ..., d_K)")
    if samples.shape[0] < 1:
        raise ValueError("dataset needs at least one sample")
    return samples


def _kmode_samples(samples: np.ndarray, a: np.ndarray, mode: int) -> np.ndarray:
    """Apply ``a`` along tensor mode ``mode`` of every sample."""
    out = np.tensordot(samples, a, axes=(mode + 1, 1))
    return np.moveaxis(out, -1, mode + 1)


def _unfold_samples(samples: np.ndarray, mode: int) -> np.ndarray:
    """Per-sample mode unfolding, shape (N, d_mode, rest).

    The column order is a fixed permutation shared by every call, which is
    all Gram-type products require.
    """
    y = np.moveaxis(samples, mode + 1, 1)
    return np.ascontiguousarray(y).reshape(y.shape[0], y.shape[1], -1)


def ks_apply_samples(factors: Sequence[np.ndarray], samples: np.ndarray) -> np.ndarray:
    """Batched Kronecker-sum application: ``sum_k X_i x_k Psi_k`` per sample."""
    out = _kmode_samples(samples, factors[0], 0)
    for k in range(1, len(factors)):
        out += _kmode_samples(samples, factors[k], k)
    return out


def diag_grid(factors: Sequence[np.ndarray]) -> np.ndarray:
    """K-way grid of diagonal sums: grid[u] = sum_k (Psi_k)_{u_k, u_k}."""
    n_modes = len(factors)
    grid = np.zeros(tuple(p.shape[0] for p in factors))
    for k, psi in enumerate(factors):
        grid += np.diag(psi).reshape((1,) * k + (-1,) + (1,) * (n_modes - k - 1))
    return grid


def gram_matrices(samples: np.ndarray) -> list[np.ndarray]:
    """Per-mode Gram matrices ``S_k = (1/N) sum_i X_(k) X_(k)^T``."""
    samples = as_dataset(samples)
    n = samples.shape[0]
    out = []
    for k in range(samples.ndim - 1):
        xk = _unfold_samples(samples, k)
        s = np.einsum("nia,nja->ij", xk, xk, optimize=True) / n
        out.append(symmetrize(s))
    return out


def cross_gram(
    samples: np.ndarray, factors: Sequence[np.ndarray], j: int, k: int
) -> np.ndarray:
    """Cross Gram matrix ``S_{j,k} = (1/N) sum_i V_i X_(k)^T``.

    ``V_i`` is the mode-k unfolding of ``X_i x_j Psi_j``.  Requires
    ``j != k``; the result is ``d_k x d_k`` and in general not symmetric.
    """
    samples = as_dataset(samples)
    if j == k:
        raise ValueError("cross_gram requires distinct modes")
    n = samples.shape[0]
    v = _unfold_samples(_kmode_samples(samples, factors[j], j), k)
    xk = _unfold_samples(samples, k)
    return np.einsum("nia,nja->ij", v, xk, optimize=True) / n


def smooth_objective_H(factors: Sequence[np.ndarray], samples: np.ndarray) -> float:
    """Smooth part of the penalized pseudolikelihood (reference path).

    Returns ``+inf`` when some diagonal sum ``W_u`` is nonpositive, which the
    line search treats as insufficient descent.
    """
    samples = as_dataset(samples)
    check_factors(factors, samples.shape[1:])
    w = diag_grid(factors)
    if w.min() <= 0:
        return float("inf")
    n = samples.shape[0]
    image = ks_apply_samples(factors, samples)
    return float(-n * np.log(w).sum() + 0.5 * np.vdot(image, image))


def full_objective(
    factors: Sequence[np.ndarray],
    samples: np.ndarray,
    penalty: Penalty,
    lambdas: Sequence[float],
) -> float:
    """Penalized objective: H plus the off-diagonal penalties."""
    h = smooth_objective_H(factors, samples)
    return h + sum(
        penalty_value(penalty, float(lam), psi) for lam, psi in zip(lambdas, factors)
    )


def grad_k(
    factors: Sequence[np.ndarray],
    samples: np.ndarray,
    grams: "GramSet | None",
    k: int,
) -> np.ndarray:
    """Gradient of the smooth part with respect to factor ``k``.

    The sign and scale are anchored to finite differences of
    :func:`smooth_objective_H` along symmetric directions; the result is
    symmetrized.  Raises on an infeasible diagonal.
    """
    samples = as_dataset(samples)
    if grams is None:
        grams = GramSet(samples)
    w = diag_grid(factors)
    if w.min() <= 0:
        raise ValueError("gradient undefined: nonpositive diagonal sum in the log term")
    n = grams.n_samples
    recip = (1.0 / w).sum(axis=tuple(i for i in range(w.ndim) if i != k))
    psi = factors[k]
    g = np.diag(-n * recip) + (n / 2.0) * (grams.grams[k] @ psi + psi @ grams.grams[k])
    for j in range(len(factors)):
        if j != k:
            g = g + n * grams.cross(factors[j], j, k)
    return symmetrize(g)


class GramSet:
    """Per-mode Gram matrices plus cached machinery for cross terms.

    For every mode pair (j, l) with ``(d_j d_l)^2`` within the memory budget,
    the fourth-order moment ``M[a,c,b,e] = sum_{i,rest} X[a@j, c@l] X[b@j, e@l]``
    is precomputed, after which ``S_{j,l}`` and all objective/gradient
    evaluations cost O(d_j^2 d_l^2) independent of N.  Pairs over budget fall
    back to streaming over the samples.
    """

    def __init__(self, samples: np.ndarray, moment_budget: int = DEFAULT_MOMENT_BUDGET):
        samples = as_dataset(samples)
        self._samples = samples
        self.shape = samples.shape[1:]
        self.n_samples = samples.shape[0]
        self.grams = gram_matrices(samples)
        self._moments: dict[tuple[int, int], np.ndarray] = {}
        n_modes = len(self.shape)
        budget = int(moment_budget)
        for j in range(n_modes):
            for l in range(j + 1, n_modes):
                cost = (self.shape[j] * self.shape[l]) ** 2
                if cost <= budget:
                    self._moments[(j, l)] = self._pair_moment(j, l)
                    budget -= cost

    def _pair_moment(self, j: int, l: int) -> np.ndarray:
        dj, dl = self.shape[j], self.shape[l]
        z = np.moveaxis(self._samples, (j + 1, l + 1), (1, 2))
        z = np.ascontiguousarray(z).reshape(self.n_samples, dj * dl, -1)
        flat = z.transpose(1, 0, 2).reshape(dj * dl, -1)
        m = flat @ flat.T
        return m.reshape(dj, dl, dj, dl)

    def cross(self, psi_j: np.ndarray, j: int, l: int) -> np.ndarray:
        """``S_{j,l}`` evaluated at the given ``Psi_j`` (modes ``j != l``)."""
        if j == l:
            raise ValueError("cross term requires distinct modes")
        lo, hi = min(j, l), max(j, l)
        moment = self._moments.get((lo, hi))
        if moment is None:
            v = _unfold_samples(_kmode_samples(self._samples, psi_j, j), l)
            xl = _unfold_samples(self._samples, l)
            return np.einsum("nia,nja->ij", v, xl, optimize=True) / self.n_samples
        if j < l:
            s = np.einsum("ma,axmy->xy", psi_j, moment, optimize=True)
        else:
            s = np.einsum("ma,xaym->xy", psi_j, moment, optimize=True)
        return s / self.n_samples

    def quad_form(self, psi: np.ndarray, k: int) -> float:
        """``tr(S_k Psi^2)`` for symmetric ``Psi``."""
        return float(np.vdot(self.grams[k] @ psi, psi))

    def smooth_objective(self, factors: Sequence[np.ndarray]) -> float:
        """H computed from Grams and cross terms; matches the reference path."""
        check_factors(factors, self.shape)
        w = diag_grid(factors)
        if w.min() <= 0:
            return float("inf")
        n = self.n_samples
        total = -n * np.log(w).sum()
        for k, psi in enumerate(factors):
            total += (n / 2.0) * self.quad_form(psi, k)
        for j in range(len(factors)):
            for l in range(j + 1, len(factors)):
                total += n * float(np.vdot(self.cross(factors[j], j, l), factors[l]))
        return float(total)


class BlockObjective:
    """The smooth objective as a function of one factor block, others fixed.

    Additive terms not involving block ``k`` are dropped, except the log
    term, which couples all diagonals and is kept in full.  Used by the
    optimizer's line search, where only differences and gradients matter.
    """

    def __init__(self, grams: GramSet, factors: Sequence[np.ndarray], k: int):
        self.k = k
        self.n = grams.n_samples
        self.s_k = grams.grams[k]
        b = np.zeros_like(grams.grams[k])
        for j in range(len(factors)):
            if j != k:
                b = b + grams.cross(factors[j], j, k)
        self.b_k = b
        others = [factors[j] for j in range(len(factors)) if j != k]
        self.rest = diag_grid(others).ravel() if others else np.zeros(1)

    def _diag_sums(self, psi: np.ndarray) -> np.ndarray:
        return np.diag(psi)[:, None] + self.rest[None, :]

    def value(self, psi: np.ndarray) -> float:
        w = self._diag_sums(psi)
        if w.min() <= 0:
            return float("inf")
        n = self.n
        quad = float(np.vdot(self.s_k @ psi, psi))
        return float(
            -n * np.log(w).sum() + (n / 2.0) * quad + n * np.vdot(self.b_k, psi)
        )

    def grad(self, psi: np.ndarray) -> np.ndarray:
        w = self._diag_sums(psi)
        if w.min() <= 0:
            raise ValueError("gradient undefined: nonpositive diagonal sum in the log term")
        n = self.n
        recip = (1.0 / w).sum(axis=1)
        g = np.diag(-n * recip) + (n / 2.0) * (self.s_k @ psi + psi @ self.s_k) + n * self.b_k
        return symmetrize(g)
