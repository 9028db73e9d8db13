"""Generative simulators: random sparse factors, model sampling, PDE factors.

Sampling follows the generative equation: draw a white Gaussian source
tensor ``T`` and solve ``ks_apply(Psi, X) = T``, so the vectorized samples
have covariance ``(⊕_k Psi_k)^{-2}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tensors import ks_solve_batched


@dataclass
class GeneratorSpec:
    """Random-sparse factor-set design.

    ``density`` is the fraction of off-diagonal pairs carrying an edge;
    ``boost`` is the diagonal margin added on top of each row's absolute
    off-diagonal sum, which keeps every factor strictly diagonally dominant
    and the Kronecker sum positive definite.
    """

    dims: Sequence[int]
    density: float = 0.05
    boost: float = 0.5
    n_samples: int = 100
    seed: int = 0

    def __post_init__(self):
        if any(d < 2 for d in self.dims):
            raise ValueError("every mode extent must be at least 2")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density must lie in [0, 1], got {self.density}")
        if self.boost <= 0:
            raise ValueError(f"diagonal boost must be positive, got {self.boost}")


@dataclass
class PDESpec:
    """Convection-diffusion discretization parameters on a 1D grid."""

    d: int
    theta: float = 1.0
    eps: float = 0.0
    h: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("grid size must be at least 2")
        if self.theta <= 0:
            raise ValueError(f"diffusion coefficient must be positive, got {self.theta}")
        if self.eps < 0:
            raise ValueError(f"convection coefficient must be nonnegative, got {self.eps}")
        if self.h <= 0:
            raise ValueError(f"mesh width must be positive, got {self.h}")
        if self.sigma < 0:
            raise ValueError(f"noise level must be nonnegative, got {self.sigma}")


def random_sparse_factor(
    d: int, density: float, boost: float, rng: np.random.Generator
) -> np.ndarray:
    """Symmetric factor with a uniformly random off-diagonal support.

    Edge values are uniform on ±[0.2, 1]; the diagonal is set to ``boost``
    plus the row-wise absolute off-diagonal sum, so the smallest eigenvalue
    is at least ``boost`` by diagonal dominance.
    """
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    n_edges = int(round(density * len(pairs)))
    psi = np.zeros((d, d))
    if n_edges > 0:
        chosen = rng.choice(len(pairs), size=n_edges, replace=False)
        vals = rng.uniform(0.2, 1.0, size=n_edges) * rng.choice([-1.0, 1.0], size=n_edges)
        for idx, v in zip(chosen, vals):
            i, j = pairs[idx]
            psi[i, j] = psi[j, i] = v
    np.fill_diagonal(psi, boost + np.abs(psi).sum(axis=1))
    return psi


def random_factor_set(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """One random sparse factor per mode of ``spec.dims``."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    return [random_sparse_factor(d, spec.density, spec.boost, rng) for d in spec.dims]


def sample_tensors(
    factors: Sequence[np.ndarray], n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n_samples`` tensors from the generative model.

    Returns an array of shape ``(N, d_1, ..., d_K)`` with
    ``Cov(vec X) = (⊕_k Psi_k)^{-2}``.  Requires a positive-definite
    Kronecker sum.
    """
    dims = tuple(p.shape[0] for p in factors)
    source = rng.standard_normal((n_samples,) + dims)
    return ks_solve_batched(factors, source)


def poisson_factor(d: int) -> np.ndarray:
    """Second-difference tridiagonal matrix with stencil (-1, 2, -1)."""
    if d < 2:
        raise ValueError("grid size must be at least 2")
    a = 2.0 * np.eye(d)
    off = -np.ones(d - 1)
    a += np.diag(off, 1) + np.diag(off, -1)
    return a


def convection_diffusion_factor(spec: PDESpec) -> np.ndarray:
    """Centered-difference discretization of ``-theta u'' + eps u'`` terms.

    Tridiagonal with sub-diagonal ``-theta/h^2 - eps/(2h)``, diagonal
    ``2 theta/h^2``, super-diagonal ``-theta/h^2 + eps/(2h)``.  Nonsymmetric
    for ``eps > 0``; at ``eps = 0`` it is ``theta/h^2`` times the
    second-difference stencil.
    """
    d, theta, eps, h = spec.d, spec.theta, spec.eps, spec.h
    lower = (-theta / h**2 - eps / (2 * h)) * np.ones(d - 1)
    upper = (-theta / h**2 + eps / (2 * h)) * np.ones(d - 1)
    a = (2 * theta / h**2) * np.eye(d)
    a += np.diag(lower, -1) + np.diag(upper, 1)
    return a


def steady_state_precision(
    a: np.ndarray,
    sigma: float,
    tol: float = 1e-12,
    max_iters: int = 100_000,
) -> np.ndarray:
    """Fixed point of ``Omega = A Omega A^T + sigma^2 I``.

    Iterates from ``Omega = sigma^2 I`` until the successive change drops to
    ``tol`` (Frobenius).  The contraction requires spectral radius of ``A``
    below one, which is checked up front; sustained norm growth over ten
    consecutive iterations also raises.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    rho = np.abs(np.linalg.eigvals(a)).max() if a.size else 0.0
    if rho >= 1.0:
        raise ValueError(f"fixed-point map diverges: spectral radius {rho:.6f} >= 1")
    d = a.shape[0]
    omega = sigma**2 * np.eye(d)
    growth_streak = 0
    prev_change = np.inf
    for _ in range(max_iters):
        nxt = a @ omega @ a.T + sigma**2 * np.eye(d)
        change = np.linalg.norm(nxt - omega)
        omega = nxt
        if change <= tol:
            return omega
        # The iterate itself grows toward the fixed point, so divergence is
        # flagged by the movement per step growing instead of contracting.
        growth_streak = growth_streak + 1 if change > prev_change else 0
        if growth_streak >= 10:
            raise RuntimeError("steady-state iteration is diverging")
        prev_change = change
    raise RuntimeError(f"steady-state iteration did not settle in {max_iters} steps")
