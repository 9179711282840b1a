"""Limited-memory BFGS with a strong Wolfe line search.

Small, self-contained implementation over flat numpy vectors: two-loop
recursion with a short history (default three pairs), scaled initial
Hessian, and a bracket/zoom line search.  Accepted steps always satisfy
sufficient decrease, so the objective is nonincreasing along the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

FG = Callable[[np.ndarray], tuple[float, np.ndarray]]


class LineSearchError(RuntimeError):
    """No step satisfying sufficient decrease could be found."""


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    n_evals: int
    converged: bool


def _zoom(fg, x, p, f0, d0, a_lo, f_lo, d_lo, a_hi, f_hi, c1, c2, max_iter=30):
    evals = 0
    for _ in range(max_iter):
        # quadratic interpolation on the lo end, safeguarded by bisection
        denom = 2.0 * (f_hi - f_lo - d_lo * (a_hi - a_lo))
        if abs(denom) > 1e-300:
            a = a_lo - d_lo * (a_hi - a_lo) ** 2 / denom
        else:
            a = 0.5 * (a_lo + a_hi)
        span = abs(a_hi - a_lo)
        lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
        if not (lo + 0.1 * span <= a <= hi - 0.1 * span):
            a = 0.5 * (a_lo + a_hi)
        f_a, g_a = fg(x + a * p)
        evals += 1
        d_a = float(g_a @ p)
        if f_a > f0 + c1 * a * d0 or f_a >= f_lo:
            a_hi, f_hi = a, f_a
        else:
            if abs(d_a) <= -c2 * d0:
                return a, f_a, g_a, evals
            if d_a * (a_hi - a_lo) >= 0:
                a_hi, f_hi = a_lo, f_lo
            a_lo, f_lo, d_lo = a, f_a, d_a
        if abs(a_hi - a_lo) < 1e-16 * max(1.0, abs(a_lo)):
            break
    f_a, g_a = fg(x + a_lo * p)
    evals += 1
    if f_a <= f0 + c1 * a_lo * d0 and a_lo > 0:
        return a_lo, f_a, g_a, evals
    raise LineSearchError("zoom failed to locate an acceptable step")


def line_search_wolfe(fg, x, p, f0, g0, c1=1e-4, c2=0.9, alpha0=1.0, max_expand=20):
    """Strong Wolfe search along p.  Returns (alpha, f, g, n_evals)."""
    d0 = float(g0 @ p)
    if d0 >= 0:
        raise LineSearchError(f"not a descent direction (directional derivative {d0:.3e})")
    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha0
    evals = 0
    for i in range(max_expand):
        f_a, g_a = fg(x + a * p)
        evals += 1
        d_a = float(g_a @ p)
        if f_a > f0 + c1 * a * d0 or (i > 0 and f_a >= f_prev):
            out = _zoom(fg, x, p, f0, d0, a_prev, f_prev, d_prev, a, f_a, c1, c2)
            return out[0], out[1], out[2], evals + out[3]
        if abs(d_a) <= -c2 * d0:
            return a, f_a, g_a, evals
        if d_a >= 0:
            out = _zoom(fg, x, p, f0, d0, a, f_a, d_a, a_prev, f_prev, c1, c2)
            return out[0], out[1], out[2], evals + out[3]
        a_prev, f_prev, d_prev = a, f_a, d_a
        a *= 2.0
    raise LineSearchError("bracketing expansion exhausted")


def _two_loop(grad, s_list, y_list, rho_list, q, tmp):
    np.copyto(q, grad)
    alphas = []
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
        a = rho * float(s @ q)
        alphas.append(a)
        np.multiply(y, -a, out=tmp)
        np.add(q, tmp, out=q)
    if s_list:
        s, y = s_list[-1], y_list[-1]
        np.multiply(q, float(s @ y) / float(y @ y), out=q)
    for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
        b = rho * float(y @ q)
        np.multiply(s, a - b, out=tmp)
        np.add(q, tmp, out=q)
    return q


def minimize_lbfgs(
    fg: FG,
    x0: np.ndarray,
    gtol: float,
    max_iterations: int,
    memory: int = 3,
    c1: float = 1e-4,
    c2: float = 0.9,
    callback: Callable[[np.ndarray, float], None] | None = None,
) -> LbfgsResult:
    """Minimize fg (value-and-gradient callable) to max-norm gradient tolerance gtol."""
    x = np.asarray(x0, dtype=float).copy()
    f, g = fg(x)
    evals = 1
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the starting point")
    if float(np.max(np.abs(g), initial=0.0)) <= gtol:
        return LbfgsResult(x=x, f=f, grad=g, iterations=0, n_evals=evals, converged=True)

    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    work_q = np.empty_like(x)
    work_tmp = np.empty_like(x)

    for it in range(1, max_iterations + 1):
        p = -_two_loop(g, s_list, y_list, rho_list, work_q, work_tmp)
        if float(g @ p) >= 0:
            # history produced a bad direction; restart from steepest descent
            s_list, y_list, rho_list = [], [], []
            p = -g
        try:
            alpha, f_new, g_new, n_ev = line_search_wolfe(fg, x, p, f, g, c1=c1, c2=c2)
        except LineSearchError:
            if s_list:
                # retry once with a fresh steepest-descent direction
                s_list, y_list, rho_list = [], [], []
                try:
                    alpha, f_new, g_new, n_ev = line_search_wolfe(fg, x, -g, f, g, c1=c1, c2=c2)
                    p = -g
                except LineSearchError:
                    return LbfgsResult(x=x, f=f, grad=g, iterations=it, n_evals=evals, converged=False)
            else:
                return LbfgsResult(x=x, f=f, grad=g, iterations=it, n_evals=evals, converged=False)
        evals += n_ev
        if not np.isfinite(f_new):
            raise FloatingPointError("objective became non-finite during the line search")
        s = alpha * p
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)
        x = x + s
        f, g = f_new, g_new
        if callback is not None:
            callback(x, f)
        if float(np.max(np.abs(g))) <= gtol:
            return LbfgsResult(x=x, f=f, grad=g, iterations=it, n_evals=evals, converged=True)

    return LbfgsResult(x=x, f=f, grad=g, iterations=max_iterations, n_evals=evals, converged=False)
