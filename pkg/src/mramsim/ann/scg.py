"""Møller's scaled conjugate gradient for batch minimization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError


@dataclass
class ScgState:
    """Optimizer state after each iteration.

    ``lam`` is the Levenberg-style damping, ``lam_bar`` its value carried over
    a failed step, ``delta`` the (damped) curvature along ``direction``.
    """

    w: np.ndarray
    loss: float
    grad: np.ndarray
    direction: np.ndarray
    sigma: float
    lam: float
    lam_bar: float
    delta: float
    success: bool
    iteration: int
    comparison: float = 0.0


def scg(fun_and_grad, w0, max_iter=300, sigma0=1e-5, lambda0=1e-6, restart=None,
        callback=None, gtol=0.0):
    """Minimize ``fun_and_grad(w) -> (loss, grad)`` starting at ``w0``.

    ``restart`` defaults to the parameter count.  ``callback(state)`` runs
    after every iteration; returning True stops the optimization.
    """
    w = np.array(w0, dtype=np.float64)
    n_params = w.size
    restart = restart or n_params
    loss, grad = fun_and_grad(w)
    _check(loss)
    r = -grad
    p = r.copy()
    lam, lam_bar = lambda0, 0.0
    success = True
    delta = sigma = 0.0
    state = ScgState(w, loss, grad, p, sigma, lam, lam_bar, delta, success, 0)
    if max_iter <= 0:
        return state

    for k in range(1, max_iter + 1):
        p_sq = float(p @ p)
        if p_sq == 0.0:
            break
        if success:
            sigma = sigma0 / np.sqrt(p_sq)
            _, grad_probe = fun_and_grad(w + sigma * p)
            s = (grad_probe - grad) / sigma
            delta = float(p @ s)
        delta += (lam - lam_bar) * p_sq
        if delta <= 0:
            lam_bar = 2.0 * (lam - delta / p_sq)
            delta = -delta + lam * p_sq
            lam = lam_bar
        mu = float(p @ r)
        if mu * mu == 0.0:
            # gradient along p vanished (or underflowed): converged
            break
        alpha = mu / delta
        w_new = w + alpha * p
        loss_new, grad_new = fun_and_grad(w_new)
        _check(loss_new)
        comparison = 2.0 * delta * (loss - loss_new) / (mu * mu)

        if comparison >= 0:
            w, loss, grad = w_new, loss_new, grad_new
            r_new = -grad_new
            lam_bar = 0.0
            success = True
            if k % restart == 0:
                p_next = r_new
            else:
                beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                p_next = r_new + beta * p
            r = r_new
            if comparison >= 0.75:
                lam = 0.25 * lam
        else:
            lam_bar = lam
            success = False
            p_next = p
        if comparison < 0.25:
            lam = lam + delta * (1.0 - comparison) / p_sq
        p = p_next

        state = ScgState(w, loss, grad, p, sigma, lam, lam_bar, delta, success, k, comparison)
        if callback is not None and callback(state):
            break
        if float(np.abs(r).max()) <= gtol:
            break
    return state


def _check(loss):
    if not np.isfinite(loss):
        raise DivergenceError(f"loss became non-finite ({loss})")
