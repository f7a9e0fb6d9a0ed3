"""Riemannian conjugate-gradient ascent with Armijo backtracking."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import DegenerateRetractionError, FeasibilityError
from .manifolds import Manifold


class Termination(str, enum.Enum):
    GRADIENT_TOL = "gradient_tol"
    MAX_ITERS = "max_iters"
    STALLED_LINE_SEARCH = "stalled_line_search"


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 200
    grad_tol: float = 1e-6
    armijo_initial: float = 1.0
    armijo_contraction: float = 0.5
    armijo_slope: float = 1e-4
    armijo_max_backtracks: int = 50

    def __post_init__(self):
        if not (isinstance(self.max_iters, int) and self.max_iters >= 1):
            raise ValueError("max_iters must be a positive integer")
        if not self.grad_tol >= 0:
            raise ValueError("grad_tol must be nonnegative")
        if not self.armijo_initial > 0:
            raise ValueError("armijo_initial must be positive")
        if not 0 < self.armijo_contraction < 1:
            raise ValueError("armijo_contraction must lie in (0, 1)")
        if not 0 < self.armijo_slope < 1:
            raise ValueError("armijo_slope must lie in (0, 1)")
        if not (isinstance(self.armijo_max_backtracks, int) and self.armijo_max_backtracks >= 1):
            raise ValueError("armijo_max_backtracks must be a positive integer")


@dataclass
class SolveTrace:
    objective: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    iterations_used: int = 0
    termination_reason: Optional[Termination] = None


def armijo_step(
    cost: Callable[[np.ndarray], float],
    manifold: Manifold,
    x: np.ndarray,
    direction: np.ndarray,
    gradient: np.ndarray,
    opts: SolverOptions = SolverOptions(),
    fx: Optional[float] = None,
):
    """Backtracking search for a sufficient-increase step along ``direction``.

    Tries ``alpha = armijo_initial * armijo_contraction**m`` for
    ``m = 0 .. armijo_max_backtracks`` and accepts the first one with
    ``cost(R_x(alpha * d)) >= cost(x) + armijo_slope * alpha * <grad, d>``.

    Returns
    -------
    step : float
        Accepted step, or ``0.0`` if the backtracking budget ran out.
    x_new : ndarray
        Accepted point (``x`` itself when ``step == 0``).
    f_new : float
        Cost at ``x_new``.
    """
    if fx is None:
        fx = cost(x)
    slope = manifold.inner(gradient, direction)
    if not slope > 0:
        raise ValueError("direction is not an ascent direction")
    alpha = opts.armijo_initial
    for _ in range(opts.armijo_max_backtracks + 1):
        try:
            x_new = manifold.retract(x, direction, alpha)
        except DegenerateRetractionError:
            alpha *= opts.armijo_contraction
            continue
        f_new = cost(x_new)
        if f_new >= fx + opts.armijo_slope * alpha * slope:
            return alpha, x_new, f_new
        alpha *= opts.armijo_contraction
    return 0.0, x, fx


def rcg_maximize(
    cost: Callable[[np.ndarray], float],
    rgrad: Callable[[np.ndarray], np.ndarray],
    manifold: Manifold,
    x0: np.ndarray,
    opts: SolverOptions = SolverOptions(),
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
):
    """Maximize ``cost`` over ``manifold`` by Fletcher-Reeves conjugate gradient.

    ``rgrad`` must return tangent vectors (an Euclidean gradient already
    passed through ``manifold.project``). Whenever the conjugate direction
    fails to be an ascent direction it is reset to the gradient.

    ``callback(t, x)`` is invoked on the starting point (``t = 0``) and on
    every accepted iterate.

    Returns
    -------
    x : ndarray
        Final iterate.
    trace : SolveTrace
    """
    if manifold.feasibility_residual(x0) > 1e-8:
        raise FeasibilityError(f"initial point is not on {manifold!r}")
    x = x0
    f = cost(x)
    g = rgrad(x)
    gg = manifold.inner(g, g)
    eta = g
    trace = SolveTrace(objective=[f], grad_norm=[float(np.sqrt(gg))])
    if callback is not None:
        callback(0, x)

    for t in range(opts.max_iters):
        if np.sqrt(gg) <= opts.grad_tol:
            trace.termination_reason = Termination.GRADIENT_TOL
            break
        if manifold.inner(g, eta) <= 0:
            eta = g
        alpha, x_new, f_new = armijo_step(cost, manifold, x, eta, g, opts, fx=f)
        if alpha == 0.0:
            trace.termination_reason = Termination.STALLED_LINE_SEARCH
            break
        g_new = rgrad(x_new)
        gg_new = manifold.inner(g_new, g_new)
        beta = gg_new / gg
        # transport of eta along alpha*eta lands at x_new, which is already known
        eta = g_new + beta * manifold.project(x_new, eta)
        x, f, g, gg = x_new, f_new, g_new, gg_new
        trace.objective.append(f)
        trace.grad_norm.append(float(np.sqrt(gg)))
        trace.iterations_used = t + 1
        if callback is not None:
            callback(t + 1, x)
    else:
        trace.termination_reason = Termination.MAX_ITERS
    return x, trace
