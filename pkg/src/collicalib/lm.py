"""Dense Levenberg-Marquardt with robust per-point losses and a step trace.

The damped normal equations use Marquardt's diagonal (Jacobi) scaling,
(J'J + damping * diag(J'J)) step = -J'e, which balances parameter blocks of
very different magnitudes (pixels, radians, meters). A candidate step is
accepted only if it does not increase the robust cost, so the recorded
trace is monotone over accepted steps by construction. Candidates the model
cannot evaluate (e.g. a point crossing behind the camera) are rejected like
any uphill step; the solver only gives up if even vanishing steps stay
invalid.

Every candidate trial appends one trace entry and emits one structured log
line on the "collicalib.lm" logger:

    lm iteration=3 cost=1.234e+00 damping=1e-04 step_norm=2.3e-02 accepted=1
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger("collicalib.lm")

_DAMPING_FLOOR = 1e-15
_DAMPING_CEILING = 1e32


@dataclass(frozen=True)
class LMSettings:
    max_iterations: int = 100
    gradient_tolerance: float = 1e-12
    parameter_tolerance: float = 1e-12
    cost_tolerance: float = 1e-14
    initial_damping: float = 1e-3

    def __post_init__(self):
        for name in ("max_iterations", "gradient_tolerance", "parameter_tolerance",
                     "cost_tolerance", "initial_damping"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class LMTraceEntry:
    iteration: int
    cost: float  # robust cost before the trial
    cost_candidate: float  # robust cost of the trial point (inf if invalid)
    damping: float
    step_norm: float
    accepted: bool


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    initial_cost: float
    iterations: int
    converged: bool
    reason: str
    gradient_inf_norm: float
    trace: list[LMTraceEntry] = field(default_factory=list)


class LMInvalidStart(Exception):
    """The residual function rejected the initial parameters."""


class LMNoValidStep(Exception):
    """Even vanishing steps are rejected as invalid by the residual function."""

    def __init__(self, message: str, result: LMResult):
        super().__init__(message)
        self.result = result


def _robust(e: np.ndarray, loss, point_dim: int) -> tuple[np.ndarray, float]:
    """Per-point squared norms and total robust cost."""
    s = np.sum(e.reshape(-1, point_dim) ** 2, axis=1)
    if loss is None:
        return s, float(s.sum())
    return s, float(loss.rho(s).sum())


def lm_minimize(fun, x0: np.ndarray, settings: LMSettings = LMSettings(),
                loss=None, point_dim: int = 2) -> LMResult:
    """Minimize sum_i rho(|e_i|^2) where fun(x) -> (residuals, jacobian).

    `fun` returns the stacked residual vector (n * point_dim,) and its
    Jacobian, or None when x is not evaluable. `loss` provides rho(s) and
    drho(s) over per-point squared norms; None means the plain squared cost.

    Raises LMInvalidStart if x0 itself is not evaluable and LMNoValidStep if
    the trust region collapses with only invalid candidates left.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    ev = fun(x)
    if ev is None:
        raise LMInvalidStart("residual function rejected the initial parameters")
    e, J = ev
    s, cost = _robust(e, loss, point_dim)
    initial_cost = cost

    damping = settings.initial_damping
    trace: list[LMTraceEntry] = []
    converged = False
    reason = "max_iterations"
    gradient_norm = np.inf
    need_linearize = True
    g = H = dH = None

    for iteration in range(1, settings.max_iterations + 1):
        if need_linearize:
            if loss is None:
                ew, Jw = e, J
            else:
                w = np.sqrt(loss.drho(s))
                scale = np.repeat(w, point_dim)
                ew = e * scale
                Jw = J * scale[:, None]
            g = Jw.T @ ew
            gradient_norm = float(np.abs(g).max())
            H = Jw.T @ Jw
            dH = np.clip(np.diag(H).copy(), 1e-32, None)
            need_linearize = False
            if gradient_norm <= settings.gradient_tolerance:
                converged, reason = True, "gradient"
                break

        try:
            delta = np.linalg.solve(H + damping * np.diag(dH), -g)
        except np.linalg.LinAlgError:
            delta = None
        if delta is None or not np.all(np.isfinite(delta)):
            trace.append(LMTraceEntry(iteration, cost, np.inf, damping, 0.0, False))
            damping = min(damping * 10.0, _DAMPING_CEILING * 10.0)
            if damping > _DAMPING_CEILING:
                converged, reason = True, "damping"
                break
            continue

        step_norm = float(np.linalg.norm(delta))
        candidate = x + delta
        ev1 = fun(candidate)
        if ev1 is None:
            invalid, cost1 = True, np.inf
        else:
            e1, J1 = ev1
            s1, cost1 = _robust(e1, loss, point_dim)
            invalid = False
        accepted = (not invalid) and cost1 <= cost
        trace.append(LMTraceEntry(iteration, cost, cost1, damping, step_norm, accepted))
        logger.debug(
            "lm iteration=%d cost=%.17g damping=%.3g step_norm=%.3g accepted=%d",
            iteration, cost, damping, step_norm, int(accepted),
        )

        tiny_step = step_norm <= settings.parameter_tolerance * (
            float(np.linalg.norm(x)) + settings.parameter_tolerance
        )
        if accepted:
            drop = cost - cost1
            x, e, J, s, cost = candidate, e1, J1, s1, cost1
            damping = max(damping * 0.1, _DAMPING_FLOOR)
            need_linearize = True
            if tiny_step:
                converged, reason = True, "step"
                break
            if drop <= settings.cost_tolerance * max(cost, np.finfo(float).tiny):
                converged, reason = True, "cost"
                break
        else:
            damping *= 10.0
            if tiny_step or damping > _DAMPING_CEILING:
                result = LMResult(
                    x=x, cost=cost, initial_cost=initial_cost, iterations=len(trace),
                    converged=not invalid, reason="step" if tiny_step else "damping",
                    gradient_inf_norm=gradient_norm, trace=trace,
                )
                if invalid:
                    raise LMNoValidStep(
                        "no valid step exists: vanishing steps still rejected by the model",
                        result,
                    )
                return result

    return LMResult(
        x=x, cost=cost, initial_cost=initial_cost, iterations=len(trace),
        converged=converged, reason=reason, gradient_inf_norm=gradient_norm,
        trace=trace,
    )
