"""Landscape climbers: fixed-step gradient ascent and BFGS.

Both optimizers work on the amplitude vector of a piecewise-constant
control with the segment grid held fixed, record the objective and
gradient norm at every outer iterate, and terminate on one of three
reasons: the objective target was reached, the iteration cap was hit, or
(BFGS only) the gradient stalled below tolerance / the line search failed.
Runs are deterministic: identical inputs give bit-identical records.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dynamics import LambdaSystem, PiecewiseControl, objective_and_gradient

__all__ = [
    "TERMINATION_OBJECTIVE",
    "TERMINATION_ITERATION_CAP",
    "TERMINATION_GRADIENT_STALLED",
    "LineSearchFailure",
    "OptimizerConfig",
    "RunRecord",
    "grape_run",
    "bfgs_run",
    "bfgs_maximize",
]

TERMINATION_OBJECTIVE = "objective_reached"
TERMINATION_ITERATION_CAP = "iteration_cap"
TERMINATION_GRADIENT_STALLED = "gradient_stalled"

# Strong Wolfe constants: sufficient decrease and curvature.
_WOLFE_C1 = 1e-4
_WOLFE_C2 = 0.9
_CURVATURE_SKIP_TOL = 1e-12
_MAX_EXPANSIONS = 40
_MAX_ZOOM = 60


class LineSearchFailure(RuntimeError):
    """Line search could not produce a Wolfe-admissible step."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by both climbers.

    ``step`` is the fixed ascent step (gradient method only). A run counts
    as successful when the objective reaches ``1 - objective_tolerance``.
    ``gradient_tolerance`` is the infinity-norm stall threshold used by
    BFGS.
    """

    method: str = "grape"
    step: float = 0.1
    max_iterations: int = 1000
    objective_tolerance: float = 0.1
    gradient_tolerance: float = 1e-6

    def __post_init__(self):
        if self.method not in ("grape", "bfgs"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.objective_tolerance < 1.0:
            raise ValueError("objective_tolerance must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.step <= 0.0:
            raise ValueError("step must be positive")
        if self.gradient_tolerance <= 0.0:
            raise ValueError("gradient_tolerance must be positive")

    @property
    def objective_target(self) -> float:
        return 1.0 - self.objective_tolerance


@dataclass(frozen=True)
class RunRecord:
    """Full trajectory of one optimizer run.

    ``trajectory`` has one row (iteration, J, gradient l2-norm) per outer
    iterate, including the initial control; values are recorded as-is with
    no monotonicity enforced. ``succeeded`` holds iff the final objective
    reached the configured target.
    """

    initial_control: PiecewiseControl
    final_control: PiecewiseControl
    trajectory: np.ndarray
    iterations_used: int
    succeeded: bool
    termination_reason: str

    @property
    def final_objective(self) -> float:
        return float(self.trajectory[-1, 1])

    @property
    def initial_objective(self) -> float:
        return float(self.trajectory[0, 1])


def grape_run(
    system: LambdaSystem, config: OptimizerConfig, initial: PiecewiseControl
) -> RunRecord:
    """Fixed-step gradient ascent: ``c <- c + step * grad J(c)``.

    The raw (unnormalized) gradient is used with a constant step, so the
    objective trace need not be monotone for large steps. Terminates when
    the objective target is reached or after ``max_iterations`` updates.
    """
    if config.method != "grape":
        raise ValueError("config.method must be 'grape'")
    amplitudes = initial.amplitudes.copy()
    control = initial.with_amplitudes(amplitudes)
    value, grad = objective_and_gradient(system, control)
    rows = [(0.0, value, float(np.linalg.norm(grad)))]
    iterations = 0
    reason = TERMINATION_ITERATION_CAP
    while True:
        if value >= config.objective_target:
            reason = TERMINATION_OBJECTIVE
            break
        if iterations >= config.max_iterations:
            reason = TERMINATION_ITERATION_CAP
            break
        amplitudes = amplitudes + config.step * grad
        iterations += 1
        control = initial.with_amplitudes(amplitudes)
        value, grad = objective_and_gradient(system, control)
        rows.append((float(iterations), value, float(np.linalg.norm(grad))))
    return RunRecord(
        initial_control=initial,
        final_control=control,
        trajectory=np.array(rows, dtype=float),
        iterations_used=iterations,
        succeeded=value >= config.objective_target,
        termination_reason=reason,
    )


def _wolfe_line_search(
    fun_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x: np.ndarray,
    direction: np.ndarray,
    f0: float,
    g0: np.ndarray,
) -> tuple[float, float, np.ndarray]:
    """Strong-Wolfe line search (bracketing expansion, then zoom) on a
    descent direction of the minimization objective. Returns
    (step, f(x + step*d), grad(x + step*d))."""
    slope0 = float(np.dot(g0, direction))
    if slope0 >= 0.0:
        raise LineSearchFailure("search direction is not a descent direction")

    def assess(alpha: float) -> tuple[float, np.ndarray, float]:
        f, g = fun_and_grad(x + alpha * direction)
        return f, g, float(np.dot(g, direction))

    def zoom(lo, f_lo, slope_lo, hi, f_hi) -> tuple[float, float, np.ndarray]:
        for _ in range(_MAX_ZOOM):
            span = hi - lo
            if abs(span) <= 1e-16 * max(1.0, abs(lo)):
                raise LineSearchFailure("zoom interval collapsed")
            # Quadratic interpolation from (lo, f_lo, slope_lo) and (hi, f_hi),
            # guarded towards bisection when the model step is degenerate.
            denom = 2.0 * (f_hi - f_lo - slope_lo * span)
            alpha = lo - slope_lo * span * span / denom if denom != 0.0 else lo + 0.5 * span
            low, high = (lo, hi) if lo < hi else (hi, lo)
            margin = 0.1 * (high - low)
            if not (low + margin <= alpha <= high - margin):
                alpha = lo + 0.5 * span
            f_a, g_a, slope_a = assess(alpha)
            if f_a > f0 + _WOLFE_C1 * alpha * slope0 or f_a >= f_lo:
                hi, f_hi = alpha, f_a
            else:
                if abs(slope_a) <= -_WOLFE_C2 * slope0:
                    return alpha, f_a, g_a
                if slope_a * span >= 0.0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, slope_lo = alpha, f_a, slope_a
        raise LineSearchFailure("zoom failed to satisfy the Wolfe conditions")

    prev_alpha, prev_f, prev_slope = 0.0, f0, slope0
    alpha = 1.0
    for i in range(_MAX_EXPANSIONS):
        f_a, g_a, slope_a = assess(alpha)
        if f_a > f0 + _WOLFE_C1 * alpha * slope0 or (i > 0 and f_a >= prev_f):
            return zoom(prev_alpha, prev_f, prev_slope, alpha, f_a)
        if abs(slope_a) <= -_WOLFE_C2 * slope0:
            return alpha, f_a, g_a
        if slope_a >= 0.0:
            return zoom(alpha, f_a, slope_a, prev_alpha, prev_f)
        prev_alpha, prev_f, prev_slope = alpha, f_a, slope_a
        alpha *= 2.0
    raise LineSearchFailure("bracketing expansion exhausted")


def bfgs_maximize(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    max_iterations: int,
    target_value: Optional[float] = None,
    gradient_tolerance: float = 1e-6,
) -> tuple[np.ndarray, list[tuple[float, float, float]], int, str]:
    """Quasi-Newton ascent of an arbitrary smooth objective.

    Maintains an inverse-Hessian estimate of the negated objective, updated
    only when the curvature condition holds (the update is skipped when
    ``s.y <= 1e-12 * |s||y|``, keeping the estimate positive definite), and
    steps through a strong-Wolfe line search with unit initial trial. A
    failed line search terminates the run as gradient_stalled rather than
    raising. Returns (x, trajectory rows, iterations, termination reason).
    """
    x = np.asarray(x0, dtype=float).copy()

    def negated(z: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = value_and_grad(z)
        return -value, -np.asarray(grad, dtype=float)

    f, g = negated(x)
    rows = [(0.0, -f, float(np.linalg.norm(g)))]
    n = x.size
    h_inv = np.eye(n)
    iterations = 0
    while True:
        if target_value is not None and -f >= target_value:
            return x, rows, iterations, TERMINATION_OBJECTIVE
        if float(np.max(np.abs(g))) < gradient_tolerance:
            return x, rows, iterations, TERMINATION_GRADIENT_STALLED
        if iterations >= max_iterations:
            return x, rows, iterations, TERMINATION_ITERATION_CAP
        direction = -h_inv @ g
        try:
            alpha, f_new, g_new = _wolfe_line_search(negated, x, direction, f, g)
        except LineSearchFailure:
            return x, rows, iterations, TERMINATION_GRADIENT_STALLED
        step = alpha * direction
        x = x + step
        y = g_new - g
        sy = float(np.dot(step, y))
        if sy > _CURVATURE_SKIP_TOL * np.linalg.norm(step) * np.linalg.norm(y):
            rho = 1.0 / sy
            sy_outer = np.outer(step, y)
            h_inv = (np.eye(n) - rho * sy_outer) @ h_inv @ (np.eye(n) - rho * sy_outer.T)
            h_inv += rho * np.outer(step, step)
        f, g = f_new, g_new
        iterations += 1
        rows.append((float(iterations), -f, float(np.linalg.norm(g))))


def bfgs_run(
    system: LambdaSystem, config: OptimizerConfig, initial: PiecewiseControl
) -> RunRecord:
    """BFGS ascent of the control objective with the shared run semantics."""
    if config.method != "bfgs":
        raise ValueError("config.method must be 'bfgs'")

    def value_and_grad(amplitudes: np.ndarray) -> tuple[float, np.ndarray]:
        return objective_and_gradient(system, initial.with_amplitudes(amplitudes))

    x, rows, iterations, reason = bfgs_maximize(
        value_and_grad,
        initial.amplitudes,
        max_iterations=config.max_iterations,
        target_value=config.objective_target,
        gradient_tolerance=config.gradient_tolerance,
    )
    trajectory = np.array(rows, dtype=float)
    return RunRecord(
        initial_control=initial,
        final_control=initial.with_amplitudes(x),
        trajectory=trajectory,
        iterations_used=iterations,
        succeeded=float(trajectory[-1, 1]) >= config.objective_target,
        termination_reason=reason,
    )
