"""Damped Gauss-Newton (Levenberg-Marquardt) solver on dense normal equations.

The residual vector may carry a robustified prefix: the first
``n_blocks * block_size`` rows are grouped into fixed-size blocks whose
norms go through a Huber loss (optionally with per-block outer weights);
all remaining rows contribute plain squared error. Steps are accepted only
if the true (robust) cost decreases, so the recorded cost history is
non-increasing by construction.

Jacobians may be dense ndarrays or scipy.sparse matrices; with
``jacobian=None`` a central-difference Jacobian is used (only sensible for
small problems).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .robust import huber_loss_many, huber_weight_many


class NonFinite(RuntimeError):
    """Residuals or parameter updates became non-finite."""


@dataclass(frozen=True)
class RobustPrefix:
    """Huber treatment of the leading n_blocks*block_size residual rows."""

    n_blocks: int
    block_size: int
    delta: float
    weights: np.ndarray | None = None  # per-block outer weights, default 1

    def rows(self) -> int:
        return self.n_blocks * self.block_size


@dataclass
class SolveResult:
    params: np.ndarray
    cost: float
    converged: bool
    iterations: int
    message: str
    cost_history: list = field(default_factory=list)


def _block_norms(r, prefix: RobustPrefix):
    blocks = r[: prefix.rows()].reshape(prefix.n_blocks, prefix.block_size)
    return np.linalg.norm(blocks, axis=1)


def robust_cost(r, prefix: RobustPrefix | None):
    """True objective: Huber over prefix blocks plus 0.5 * sum of plain rows squared."""
    r = np.asarray(r, dtype=float)
    if prefix is None or prefix.n_blocks == 0:
        return 0.5 * float(r @ r)
    norms = _block_norms(r, prefix)
    losses = huber_loss_many(norms, prefix.delta)
    if prefix.weights is not None:
        losses = losses * prefix.weights
    tail = r[prefix.rows() :]
    return float(losses.sum()) + 0.5 * float(tail @ tail)


def _row_weights(r, prefix: RobustPrefix | None):
    if prefix is None or prefix.n_blocks == 0:
        return None
    norms = _block_norms(r, prefix)
    w = huber_weight_many(norms, prefix.delta)
    if prefix.weights is not None:
        w = w * prefix.weights
    row_w = np.ones(r.shape[0])
    row_w[: prefix.rows()] = np.repeat(w, prefix.block_size)
    return row_w


def numeric_jacobian(residual_fn, x, step=1e-7):
    """Central-difference Jacobian; O(2 n_params) residual evaluations."""
    x = np.asarray(x, dtype=float)
    r0 = np.asarray(residual_fn(x), dtype=float)
    jac = np.empty((r0.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (np.asarray(residual_fn(xp)) - np.asarray(residual_fn(xm))) / (2.0 * h)
    return jac


def solve_least_squares(
    residual_fn,
    x0,
    jacobian=None,
    *,
    robust=None,
    max_iterations=100,
    rel_cost_tol=1e-10,
    damping_init=1e-4,
    damping_max=1e10,
):
    """Minimize the (optionally robustified) sum of squared residuals.

    Returns a SolveResult; ``converged`` is True when the relative cost
    decrease fell below tolerance or the problem stalled at a stationary
    point, False when the iteration budget ran out first. Raises NonFinite
    if residuals at the current iterate or a solved step are non-finite.
    """
    x = np.asarray(x0, dtype=float).copy()
    if jacobian is None:
        jac_fn = lambda p: numeric_jacobian(residual_fn, p)
    else:
        jac_fn = jacobian

    r = np.asarray(residual_fn(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise NonFinite("non-finite residuals at initial parameters")
    cost = robust_cost(r, robust)
    history = [cost]
    if cost == 0.0:
        return SolveResult(x, cost, True, 0, "zero cost at start", history)

    mu = damping_init
    iteration = 0
    message = "max iterations reached"
    converged = False

    while iteration < max_iterations:
        iteration += 1
        jac = jac_fn(x)
        row_w = _row_weights(r, robust)
        if sp.issparse(jac):
            jac = jac.tocsr()
            jw = jac if row_w is None else sp.diags(np.sqrt(row_w)) @ jac
            hess = np.asarray((jw.T @ jw).todense())
            grad = jw.T @ ((np.sqrt(row_w) if row_w is not None else 1.0) * r)
            grad = np.asarray(grad).ravel()
        else:
            jac = np.asarray(jac, dtype=float)
            sw = np.sqrt(row_w)[:, None] if row_w is not None else None
            jw = jac if sw is None else sw * jac
            rw = r if row_w is None else np.sqrt(row_w) * r
            hess = jw.T @ jw
            grad = jw.T @ rw
        if not (np.all(np.isfinite(hess)) and np.all(np.isfinite(grad))):
            raise NonFinite("non-finite normal equations")

        diag = np.diag(hess).copy()
        diag[diag <= 0.0] = 1e-12
        accepted = False
        while mu <= damping_max:
            try:
                step = np.linalg.solve(hess + mu * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            if not np.all(np.isfinite(step)):
                raise NonFinite("non-finite update step")
            x_trial = x + step
            r_trial = np.asarray(residual_fn(x_trial), dtype=float)
            if np.all(np.isfinite(r_trial)):
                cost_trial = robust_cost(r_trial, robust)
                if cost_trial < cost:
                    accepted = True
                    break
            mu *= 10.0
        if not accepted:
            # No descent at maximal damping: stationary within precision.
            converged = True
            message = "no further decrease"
            break

        decrease = cost - cost_trial
        x, r, cost = x_trial, r_trial, cost_trial
        history.append(cost)
        mu = max(mu / 3.0, 1e-12)
        if decrease <= rel_cost_tol * max(cost, 1e-300):
            converged = True
            message = "relative cost decrease below tolerance"
            break
        if cost <= 1e-18 * max(1.0, history[0]):
            # Zero-residual fixed point: relative decreases stay large in
            # floating noise, so an absolute floor ends the iteration.
            converged = True
            message = "cost negligible"
            break

    return SolveResult(x, cost, converged, iteration, message, history)
