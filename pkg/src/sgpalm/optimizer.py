"""Blockwise proximal-gradient estimation of Sylvester generating factors.

One outer iteration sweeps the factor blocks in order.  For each block the
smooth part is linearized at the current point and a prox-linear backtracking
line search finds a step satisfying the quadratic-majorizer descent
condition; the non-smooth off-diagonal L1 term enters only through its
proximal map.  After every sweep the starting step for the next sweep is the
minimum of the per-block Barzilai-Borwein secant steps.

Non-convex penalties (SCAD, MCP) reuse the same loop with the smooth part
augmented by the penalty's smooth remainder (see :mod:`sgpalm.penalties`),
so the proximal map stays plain soft-thresholding.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .model import BlockObjective, GramSet, as_dataset
from .penalties import (
    Penalty,
    penalty_remainder,
    penalty_value,
    prox_l1_offdiag,
    q_prime,
)


class BacktrackingError(RuntimeError):
    """Line search exhausted its backtracking budget without descent."""


def lambda_schedule(scale: float, dims: Sequence[int], n_samples: int) -> np.ndarray:
    """Per-mode penalty weights ``scale * sqrt(d_k * log(d) / N)``."""
    d = float(np.prod(dims))
    return scale * np.sqrt(np.asarray(dims, dtype=float) * np.log(d) / n_samples)


@dataclass
class SGPalmConfig:
    """Settings for :func:`fit`.

    ``lambdas`` may be a scalar (shared by all modes) or one weight per mode.
    ``step0`` seeds the very first line search; later sweeps start from the
    Barzilai-Borwein step.  ``seed`` is reserved for randomized variants and
    currently unused.  ``max_seconds``, when set, stops the loop at the first
    sweep boundary past the budget (used by the benchmark driver).
    """

    lambdas: float | Sequence[float] = 0.0
    penalty: Penalty = field(default_factory=Penalty.l1)
    backtrack_c: float = 0.5
    step0: float = 1.0
    max_iters: int = 500
    tol: float = 1e-7
    max_backtracks: int = 60
    seed: int = 0
    max_seconds: float | None = None

    def __post_init__(self):
        if not 0 < self.backtrack_c < 1:
            raise ValueError(f"backtrack_c must lie in (0, 1), got {self.backtrack_c}")
        if self.step0 <= 0:
            raise ValueError(f"step0 must be positive, got {self.step0}")
        if self.tol < 0:
            raise ValueError(f"tol must be nonnegative, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if np.any(np.asarray(self.lambdas, dtype=float) < 0):
            raise ValueError("penalty weights must be nonnegative")

    def mode_lambdas(self, n_modes: int) -> np.ndarray:
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim == 0:
            return np.full(n_modes, float(lam))
        if lam.shape != (n_modes,):
            raise ValueError(f"expected {n_modes} penalty weights, got shape {lam.shape}")
        return lam


@dataclass
class IterationTrace:
    """Per-sweep history of a fit.

    ``objectives[0]`` is the objective at the initial iterate; entry ``t``
    is the value after sweep ``t``.  The remaining lists have one entry per
    sweep.
    """

    objectives: list[float] = field(default_factory=list)
    steps: list[list[float]] = field(default_factory=list)
    backtracks: list[list[int]] = field(default_factory=list)
    millis: list[float] = field(default_factory=list)

    @property
    def n_iterations(self) -> int:
        return len(self.steps)

    def to_csv(self, path: str | Path) -> None:
        """Write one row per sweep: iteration, objective, eta_k..., backtracks, millis."""
        n_modes = len(self.steps[0]) if self.steps else 0
        header = ["iteration", "objective"]
        header += [f"eta_{k + 1}" for k in range(n_modes)]
        header += ["backtracks", "millis"]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for t in range(self.n_iterations):
                row = [str(t + 1), f"{self.objectives[t + 1]:.17g}"]
                row += [f"{eta:.17g}" for eta in self.steps[t]]
                row += [str(sum(self.backtracks[t])), f"{self.millis[t]:.3f}"]
                fh.write(",".join(row) + "\n")


@dataclass
class FitResult:
    factors: list[np.ndarray]
    trace: IterationTrace
    converged: bool
    iterations: int
    lambdas: np.ndarray
    stop_reason: str = ""


def line_search(
    value_fn: Callable[[np.ndarray], float],
    psi: np.ndarray,
    grad: np.ndarray,
    lam: float,
    eta_start: float,
    c: float,
    max_backtracks: int,
) -> tuple[float, np.ndarray, int]:
    """Prox-linear backtracking for one block.

    Tries ``eta = eta_start * c**j`` for j = 0, 1, ...; at each trial the
    candidate is the proximal step from ``psi`` and is accepted when the
    smooth value sits below its quadratic majorizer

        value(cand) <= value(psi) + <grad, cand - psi> + ||cand - psi||^2 / (2 eta).

    Infeasible candidates (infinite smooth value) count as failures.  Returns
    ``(eta, candidate, shrink_count)``.
    """
    h0 = value_fn(psi)
    if not math.isfinite(h0):
        raise ValueError("line search started at an infeasible point")
    eta = eta_start
    for j in range(max_backtracks + 1):
        cand = prox_l1_offdiag(psi - eta * grad, eta * lam)
        delta = cand - psi
        bound = h0 + float(np.vdot(grad, delta)) + float(np.vdot(delta, delta)) / (2 * eta)
        if value_fn(cand) <= bound:
            return eta, cand, j
        eta *= c
    raise BacktrackingError(
        f"no sufficient-descent step after {max_backtracks} shrinks "
        f"(start {eta_start:.3e}, final {eta / c:.3e})"
    )


def bb_step(
    psi_prev: np.ndarray,
    psi_curr: np.ndarray,
    grad_prev: np.ndarray,
    grad_curr: np.ndarray,
    fallback: float,
) -> float:
    """Barzilai-Borwein secant step ``||dPsi||_F^2 / <dPsi, dGrad>``.

    Degenerate cases (zero parameter change, nonpositive or non-finite
    curvature) return ``fallback``.
    """
    d_psi = psi_curr - psi_prev
    num = float(np.vdot(d_psi, d_psi))
    if num == 0.0:
        return fallback
    denom = float(np.vdot(d_psi, grad_curr - grad_prev))
    if not math.isfinite(denom) or denom <= 0.0:
        return fallback
    return num / denom


def convergence_check(objectives: Sequence[float], tol: float) -> bool:
    """Relative objective-change stopping rule on the last two entries."""
    if len(objectives) < 2:
        return False
    prev, curr = objectives[-2], objectives[-1]
    return abs(curr - prev) <= tol * (1.0 + abs(prev))


def fit(samples: np.ndarray, config: SGPalmConfig) -> FitResult:
    """Estimate Sylvester generating factors by blockwise proximal descent.

    Parameters
    ----------
    samples : ndarray, shape (N, d_1, ..., d_K)
        Observed tensors.
    config : SGPalmConfig

    Returns
    -------
    FitResult
        Estimated factors (symmetric, feasible diagonal), the per-sweep
        trace, and convergence status.
    """
    samples = as_dataset(samples)
    dims = samples.shape[1:]
    n_modes = len(dims)
    lambdas = config.mode_lambdas(n_modes)
    penalty = config.penalty

    grams = GramSet(samples)
    factors = [np.eye(d) for d in dims]

    def objective(curr: Sequence[np.ndarray]) -> float:
        h = grams.smooth_objective(curr)
        return h + sum(
            penalty_value(penalty, float(lam), psi) for lam, psi in zip(lambdas, curr)
        )

    trace = IterationTrace()
    trace.objectives.append(objective(factors))
    if not math.isfinite(trace.objectives[0]):
        raise ValueError("objective is not finite at the initial iterate")

    eta0 = config.step0
    converged = False
    stop_reason = "max_iters"
    t_start = time.perf_counter()

    for _ in range(config.max_iters):
        sweep_start = time.perf_counter()
        sweep_etas: list[float] = []
        sweep_bts: list[int] = []
        bb_steps: list[float] = []
        for k in range(n_modes):
            block = BlockObjective(grams, factors, k)
            lam = float(lambdas[k])
            if penalty.convex:
                value_fn = block.value
                grad_fn = block.grad
            else:
                # Non-convex penalties: fold the smooth remainder
                # g - lam*|.| of block k into the linearized part.
                def value_fn(psi, _b=block, _lam=lam):
                    return _b.value(psi) + penalty_remainder(penalty, _lam, psi)

                def grad_fn(psi, _b=block, _lam=lam):
                    return _b.grad(psi) + q_prime(penalty, _lam, psi)

            grad_curr = grad_fn(factors[k])
            eta, new_psi, n_bt = line_search(
                value_fn, factors[k], grad_curr, lam, eta0,
                config.backtrack_c, config.max_backtracks,
            )
            if np.array_equal(new_psi, factors[k]):
                bb = eta
            else:
                grad_new = grad_fn(new_psi)
                bb = bb_step(factors[k], new_psi, grad_curr, grad_new, fallback=eta)
            factors[k] = new_psi
            sweep_etas.append(eta)
            sweep_bts.append(n_bt)
            bb_steps.append(bb)

        eta0 = min(bb_steps)
        trace.objectives.append(objective(factors))
        trace.steps.append(sweep_etas)
        trace.backtracks.append(sweep_bts)
        trace.millis.append(1e3 * (time.perf_counter() - sweep_start))

        if convergence_check(trace.objectives, config.tol):
            converged = True
            stop_reason = "tol"
            break
        if config.max_seconds is not None and time.perf_counter() - t_start > config.max_seconds:
            stop_reason = "time_limit"
            break

    return FitResult(
        factors=factors,
        trace=trace,
        converged=converged,
        iterations=trace.n_iterations,
        lambdas=lambdas,
        stop_reason=stop_reason,
    )
