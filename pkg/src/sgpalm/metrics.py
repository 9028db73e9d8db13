"""Structure-recovery and prediction metrics.

Edge supports are read off the upper triangle only, so each symmetric pair
counts once in the confusion table; value errors (``offdiag_error``) follow
the objective's convention and count both symmetric entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ZERO_TOL = 1e-8


@dataclass
class SupportConfusion:
    """Edge-recovery counts over off-diagonal upper-triangle pairs."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "SupportConfusion") -> "SupportConfusion":
        return SupportConfusion(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check_shapes(est: Sequence[np.ndarray], truth: Sequence[np.ndarray]) -> None:
    if len(est) != len(truth):
        raise ValueError(f"factor counts differ: {len(est)} vs {len(truth)}")
    for k, (a, b) in enumerate(zip(est, truth)):
        if a.shape != b.shape:
            raise ValueError(f"factor {k} shapes differ: {a.shape} vs {b.shape}")


def support_confusion(
    est: Sequence[np.ndarray], truth: Sequence[np.ndarray], zero_tol: float = ZERO_TOL
) -> SupportConfusion:
    """Pooled edge confusion counts; an entry is an edge iff |value| > zero_tol."""
    _check_shapes(est, truth)
    out = SupportConfusion()
    for a, b in zip(est, truth):
        iu = np.triu_indices(a.shape[0], k=1)
        est_edge = np.abs(a[iu]) > zero_tol
        true_edge = np.abs(b[iu]) > zero_tol
        out.tp += int(np.sum(est_edge & true_edge))
        out.fp += int(np.sum(est_edge & ~true_edge))
        out.tn += int(np.sum(~est_edge & ~true_edge))
        out.fn += int(np.sum(~est_edge & true_edge))
    return out


def mcc(c: SupportConfusion) -> float:
    """Matthews correlation coefficient; 0 when a denominator factor is 0."""
    denom = (
        (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    )
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def offdiag_error(est: Sequence[np.ndarray], truth: Sequence[np.ndarray]) -> float:
    """Sum over factors of Frobenius norms of off-diagonal differences."""
    _check_shapes(est, truth)
    total = 0.0
    for a, b in zip(est, truth):
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        np.fill_diagonal(diff, 0.0)
        total += float(np.linalg.norm(diff))
    return total


def sign_consistency(
    est: Sequence[np.ndarray], truth: Sequence[np.ndarray], zero_tol: float = ZERO_TOL
) -> bool:
    """True iff signs match on the true support and true zeros stay below tol."""
    _check_shapes(est, truth)
    for a, b in zip(est, truth):
        off = ~np.eye(a.shape[0], dtype=bool)
        true_edge = off & (np.abs(b) > zero_tol)
        true_zero = off & ~true_edge
        if np.any(np.sign(a[true_edge]) != np.sign(b[true_edge])):
            return False
        if np.any(np.abs(a[true_zero]) > zero_tol):
            return False
    return True


def nrmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Root-mean-square error normalized by the truth's value range."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    rng = truth.max() - truth.min()
    if rng <= 0:
        raise ValueError("truth vector is constant; NRMSE undefined")
    return float(np.sqrt(np.mean((pred - truth) ** 2)) / rng)
