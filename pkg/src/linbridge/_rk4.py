"""Fixed-step classical Runge-Kutta marching for small matrix ODEs."""

import numpy as np

from .errors import NonFiniteResult


def rk4_march(rhs, y0, times, at_nodes, at_mids, post=None):
    """March ``y' = rhs(y, *coeffs)`` through ``times`` with one RK4 step each.

    ``at_nodes[i]`` holds the coefficient tuple at ``times[i]`` and
    ``at_mids[i]`` the tuple at the midpoint of step ``i``.  Steps may be
    negative (backward integration).  ``post`` is applied after every
    step, e.g. to symmetrize.
    """
    times = np.asarray(times, dtype=float)
    ys = np.empty((len(times),) + np.shape(y0))
    y = np.array(y0, dtype=float)
    ys[0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        _march(rhs, y, times, at_nodes, at_mids, post, ys)
    if not np.all(np.isfinite(ys)):
        raise NonFiniteResult("RK4 integration produced non-finite values")
    return ys


def _march(rhs, y, times, at_nodes, at_mids, post, ys):
    for i in range(len(times) - 1):
        h = times[i + 1] - times[i]
        c0 = at_nodes[i]
        cm = at_mids[i]
        c1 = at_nodes[i + 1]
        k1 = rhs(y, *c0)
        k2 = rhs(y + 0.5 * h * k1, *cm)
        k3 = rhs(y + 0.5 * h * k2, *cm)
        k4 = rhs(y + h * k3, *c1)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if post is not None:
            y = post(y)
        ys[i + 1] = y


def step_times(t, s, h):
    """Times from ``t`` to ``s`` spaced by ``h``; the last step is shortened to land on ``s``."""
    span = s - t
    if span == 0.0:
        return np.array([t])
    n_full = int(np.floor(abs(span) / h))
    times = t + np.sign(span) * h * np.arange(n_full + 1)
    if abs(s - times[-1]) > 1e-12 * h:
        times = np.append(times, s)
    else:
        times[-1] = s
    return times
