"""Off-diagonal sparsity penalties: L1, SCAD, MCP, and their prox machinery.

All penalties act elementwise on off-diagonal entries only; diagonals are
never penalized and pass through proximal maps unchanged.  Non-convex
penalties (SCAD, MCP) are handled by splitting ``g = l1 + (g - l1)``: the
smooth remainder enters the gradient through :func:`q_prime` while the
proximal step stays plain soft-thresholding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCAD_DEFAULT_A = 3.7
MCP_DEFAULT_A = 2.0


@dataclass(frozen=True)
class Penalty:
    """Penalty family: ``kind`` in {"l1", "scad", "mcp"} with shape ``a``.

    SCAD requires ``a > 2``, MCP requires ``a > 0``; ``a`` is ignored for L1.
    """

    kind: str = "l1"
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in ("l1", "scad", "mcp"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "scad" and not self.a > 2:
            raise ValueError(f"scad shape parameter must exceed 2, got {self.a}")
        if self.kind == "mcp" and not self.a > 0:
            raise ValueError(f"mcp shape parameter must be positive, got {self.a}")

    @property
    def convex(self) -> bool:
        return self.kind == "l1"

    @staticmethod
    def l1() -> "Penalty":
        return Penalty("l1")

    @staticmethod
    def scad(a: float = SCAD_DEFAULT_A) -> "Penalty":
        return Penalty("scad", a)

    @staticmethod
    def mcp(a: float = MCP_DEFAULT_A) -> "Penalty":
        return Penalty("mcp", a)


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    """Elementwise ``sign(x) * max(|x| - t, 0)``."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def prox_l1_offdiag(m: np.ndarray, t: float) -> np.ndarray:
    """Soft-threshold off-diagonal entries of ``m``; keep the diagonal exact.

    This is the proximal map of ``t * ||.||_{1,off}`` with unit quadratic
    weight.  Symmetry of ``m`` is preserved exactly (the map is elementwise).
    """
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    m = np.asarray(m, dtype=float)
    out = soft_threshold(m, t)
    np.fill_diagonal(out, np.diag(m))
    return out


def _value_elementwise(penalty: Penalty, lam: float, t: np.ndarray) -> np.ndarray:
    """g_lam(t) for one penalty, vectorized over t."""
    at = np.abs(t)
    if penalty.kind == "l1":
        return lam * at
    a = penalty.a
    if penalty.kind == "scad":
        small = lam * at
        mid = -(at**2 - 2 * a * lam * at + lam**2) / (2 * (a - 1))
        big = (a + 1) * lam**2 / 2
        return np.where(at <= lam, small, np.where(at <= a * lam, mid, big))
    # mcp
    return np.where(at <= a * lam, lam * at - at**2 / (2 * a), a * lam**2 / 2)


def penalty_value(penalty: Penalty, lam: float, m: np.ndarray) -> float:
    """Total penalty ``sum_{i != j} g_lam(m_ij)`` (both symmetric entries)."""
    m = np.asarray(m, dtype=float)
    vals = _value_elementwise(penalty, lam, m)
    return float(vals.sum() - np.trace(vals))


def penalty_remainder(penalty: Penalty, lam: float, m: np.ndarray) -> float:
    """Off-diagonal sum of the smooth remainder ``g_lam(t) - lam*|t|``.

    Exactly zero for L1.  This is the term folded into the smooth part when
    running the non-convex variant of the estimator.
    """
    if penalty.kind == "l1":
        return 0.0
    m = np.asarray(m, dtype=float)
    at = np.abs(m)
    a = penalty.a
    if penalty.kind == "scad":
        mid = -(at**2 - 2 * a * lam * at + lam**2) / (2 * (a - 1)) - lam * at
        big = (a + 1) * lam**2 / 2 - lam * at
        vals = np.where(at <= lam, 0.0, np.where(at <= a * lam, mid, big))
    else:  # mcp
        vals = np.where(at <= a * lam, -(at**2) / (2 * a), a * lam**2 / 2 - lam * at)
    return float(vals.sum() - np.trace(vals))


def q_prime(penalty: Penalty, lam: float, m: np.ndarray) -> np.ndarray:
    """Elementwise derivative of the smooth remainder ``g_lam - lam*|.|``.

    Zero for L1 and on the diagonal; zero at the origin by convention.  Used
    to augment the smooth-part gradient when the penalty is non-convex.
    """
    m = np.asarray(m, dtype=float)
    if penalty.kind == "l1":
        return np.zeros_like(m)
    a = penalty.a
    t = m
    at = np.abs(t)
    s = np.sign(t)
    if penalty.kind == "scad":
        mid = (lam * s - t) / (a - 1)
        out = np.where(at <= lam, 0.0, np.where(at <= a * lam, mid, -lam * s))
    else:  # mcp
        out = np.where(at <= a * lam, -t / a, -lam * s)
    np.fill_diagonal(out, 0.0)
    return out
