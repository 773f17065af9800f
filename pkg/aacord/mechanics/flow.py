# file: aacord/mechanics/flow.py
"""Flows of the R^m action generated by commuting Hamiltonian vector fields.

Integration uses scipy's Dormand-Prince 5(4) pair (``RK45``) stepped by hand
so that step counts and the escape radius are enforced on every step.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import RK45, OdeSolution

from aacord.mechanics.symplectic import FieldsLike, as_field_stack
from aacord.reports import ProbeReport
from aacord.utils.config import FlowConfig
from aacord.utils.errors import EscapeError, ExprDomainError, FlowError, StepLimitError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class FlowRun:
    y: np.ndarray
    steps: int
    max_norm: float
    solution: Optional[OdeSolution] = None


def integrate(rhs, z0: Sequence[float], t_bound: float, cfg: FlowConfig, dense: bool = False) -> FlowRun:
    """Integrate ``z' = rhs(t, z)`` from 0 to ``t_bound``."""
    y0 = np.asarray(z0, dtype=float)
    norm0 = float(np.linalg.norm(y0))
    if norm0 > cfg.escape_radius:
        raise EscapeError(f"start point already beyond escape radius {cfg.escape_radius:g}", time=0.0)
    if t_bound == 0.0:
        return FlowRun(y=y0.copy(), steps=0, max_norm=norm0)

    solver = RK45(rhs, 0.0, y0, t_bound, rtol=cfg.rtol, atol=cfg.atol)
    times: List[float] = [0.0]
    pieces = []
    steps = 0
    max_norm = norm0
    while solver.status == "running":
        if steps >= cfg.max_steps:
            raise StepLimitError(
                f"step limit {cfg.max_steps} exhausted at t={solver.t:.6g}",
                anchor="complete vector fields",
            )
        message = solver.step()
        steps += 1
        if solver.status == "failed":
            raise FlowError(f"integrator failed at t={solver.t:.6g}: {message}")
        norm = float(np.linalg.norm(solver.y))
        if not np.isfinite(norm) or norm > cfg.escape_radius:
            raise EscapeError(
                f"trajectory left the ball of radius {cfg.escape_radius:g} at t={solver.t:.6g}",
                time=float(solver.t),
                anchor="complete vector fields",
                steps=steps,
            )
        max_norm = max(max_norm, norm)
        if dense:
            times.append(float(solver.t))
            pieces.append(solver.dense_output())
    solution = OdeSolution(times, pieces) if dense else None
    return FlowRun(y=solver.y.copy(), steps=steps, max_norm=max_norm, solution=solution)


def flow_map(fields: FieldsLike, s: Sequence[float], z0: Sequence[float], cfg: FlowConfig) -> np.ndarray:
    """Phi_s(z0): the combined field sum_lambda s_lambda v_lambda over unit time."""
    stack = as_field_stack(fields)
    weights = np.atleast_1d(np.asarray(s, dtype=float))
    if weights.shape != (stack.m,):
        raise ValueError(f"expected {stack.m} flow parameters, got {weights.size}")
    if not np.all(np.isfinite(weights)):
        raise ValueError("flow parameters must be finite")
    start = np.asarray(z0, dtype=float)
    if not np.any(weights):
        return start.copy()
    return integrate(stack.combined(weights), start, 1.0, cfg).y


def flow_orbit(
    fields: FieldsLike,
    direction: Sequence[float],
    z0: Sequence[float],
    times: Sequence[float],
    cfg: FlowConfig,
) -> np.ndarray:
    """Points Phi_{tau * direction}(z0) for every tau in ``times`` (any sign), via dense output."""
    stack = as_field_stack(fields)
    rhs = stack.combined(np.atleast_1d(np.asarray(direction, dtype=float)))
    taus = np.asarray(times, dtype=float)
    start = np.asarray(z0, dtype=float)
    out = np.empty((taus.size, start.size))
    out[taus == 0.0] = start
    for mask, pick in ((taus > 0.0, np.max), (taus < 0.0, np.min)):
        if not np.any(mask):
            continue
        run = integrate(rhs, start, float(pick(taus[mask])), cfg, dense=True)
        out[mask] = run.solution(taus[mask]).T
    return out


def commutation_residual(
    v_lambda: FieldsLike,
    v_mu: FieldsLike,
    z: Sequence[float],
    s: float,
    t: float,
    cfg: FlowConfig,
) -> float:
    """||Phi^lambda_s Phi^mu_t z - Phi^mu_t Phi^lambda_s z||."""
    first = flow_map(v_lambda, [s], flow_map(v_mu, [t], z, cfg), cfg)
    second = flow_map(v_mu, [t], flow_map(v_lambda, [s], z, cfg), cfg)
    return float(np.linalg.norm(first - second))


def completeness_probe(v: FieldsLike, z: Sequence[float], T: float, cfg: FlowConfig) -> ProbeReport:
    """Integrate over [-T, T]; report ok, escape time, step exhaustion or a domain error."""
    if T <= 0:
        raise ValueError("probe window must be positive")
    stack = as_field_stack(v)
    rhs = stack.combined(np.ones(stack.m))
    steps = 0
    max_norm = float(np.linalg.norm(z))
    for bound in (T, -T):
        try:
            run = integrate(rhs, z, bound, cfg)
        except EscapeError as exc:
            logger.warning(f"[Flow] probe escaped at t={exc.time:.6g}")
            return ProbeReport(status="escape", window=T, escape_time=exc.time, max_norm=cfg.escape_radius,
                               steps=steps + exc.steps, message=exc.message)
        except StepLimitError as exc:
            logger.warning(f"[Flow] probe exhausted its step budget: {exc.message}")
            return ProbeReport(status="step_limit", window=T, max_norm=max_norm, steps=steps + cfg.max_steps,
                               message=exc.message)
        except ExprDomainError as exc:
            logger.warning(f"[Flow] probe hit a domain error: {exc.message}")
            return ProbeReport(status="domain_error", window=T, max_norm=max_norm, steps=steps,
                               message=exc.message)
        steps += run.steps
        max_norm = max(max_norm, run.max_norm)
    return ProbeReport(status="ok", window=T, max_norm=max_norm, steps=steps)


def shoot(
    fields: FieldsLike,
    s0: Sequence[float],
    start: Sequence[float],
    target: Sequence[float],
    cfg: FlowConfig,
    tol: float,
    max_iter: int = 50,
):
    """Damped Gauss-Newton for Phi_s(start) = target; Jacobian columns are v_lambda(Phi_s start).

    Returns ``(s, residual, converged)``.
    """
    stack = as_field_stack(fields)
    start = np.asarray(start, dtype=float)
    target = np.asarray(target, dtype=float)
    s = np.atleast_1d(np.asarray(s0, dtype=float)).copy()
    try:
        end = flow_map(stack, s, start, cfg)
    except (FlowError, ExprDomainError):
        return s, np.inf, False
    residual = float(np.linalg.norm(end - target))
    for _ in range(max_iter):
        if residual < tol:
            return s, residual, True
        step, *_ = np.linalg.lstsq(stack.matrix(end).T, target - end, rcond=None)
        damping = 1.0
        for _ in range(8):
            trial = s + damping * step
            try:
                trial_end = flow_map(stack, trial, start, cfg)
            except (FlowError, ExprDomainError):
                damping *= 0.5
                continue
            trial_residual = float(np.linalg.norm(trial_end - target))
            if trial_residual < residual:
                break
            damping *= 0.5
        else:
            return s, residual, residual < tol
        s, end, residual = trial, trial_end, trial_residual
    return s, residual, residual < tol
# end file
