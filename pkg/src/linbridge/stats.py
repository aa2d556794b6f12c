"""Exact first- and second-order statistics of the pinned process.

For ``t <= s`` the conditional cross-covariance given ``xi(tf)`` is

    Q(t, s) = P(t) Phi(s, t)' - P(t) Phi(tf, t)' P(tf)^{-1} Phi(tf, s) P(s)

and the conditional mean given ``xi(t0) = xi0``, ``xi(tf) = xi1`` is

    L(t) = Phi(t, t0) xi0 + P(t) Phi(tf, t)' P(tf)^{-1} (xi1 - Phi(tf, t0) xi0).

For ``t > s`` the accessor returns ``Q(s, t)'``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import OutOfInterval, Unbridgeable
from .gramians import SOLVE_RTOL, GramianTable, gramians_at
from .system import LinearSystem, TimeGrid

__all__ = [
    "BridgeSpec",
    "BridgeStatistics",
    "pinned_cov",
    "pinned_mean",
    "bridge_statistics",
    "ou_closed_forms",
    "conditioning_oracle",
]


@dataclass(frozen=True, eq=False)
class BridgeSpec:
    """A system together with the states it is pinned to at ``t0`` and ``tf``."""

    sys: LinearSystem
    xi0: np.ndarray
    xi1: np.ndarray

    def __post_init__(self):
        n = self.sys.n
        xi0 = np.asarray(self.xi0, dtype=float).reshape(-1)
        xi1 = np.asarray(self.xi1, dtype=float).reshape(-1)
        if xi0.shape != (n,) or xi1.shape != (n,):
            raise ValueError(f"boundary states must have length {n}")
        object.__setattr__(self, "xi0", xi0)
        object.__setattr__(self, "xi1", xi1)


def _transition_between(state_s, state_t):
    # Phi(s, t) = Phi(s, t0) Phi(t, t0)^{-1}
    return np.linalg.solve(state_t.Phi.T, state_s.Phi.T).T


def pinned_cov(table: GramianTable, sys: LinearSystem, t: float, s: float) -> np.ndarray:
    """Conditional covariance ``E{(xi(t) - L(t)) (xi(s) - L(s))'}`` of the bridge."""
    if t > s:
        return pinned_cov(table, sys, s, t).T
    st = gramians_at(table, sys, t)
    ss = st if s == t else gramians_at(table, sys, s)
    phi_st = _transition_between(ss, st)
    correction = st.P @ st.Phi_end.T @ table.solve_terminal(ss.Phi_end @ ss.P)
    return st.P @ phi_st.T - correction


def pinned_mean(table: GramianTable, sys: LinearSystem, spec: BridgeSpec, t: float) -> np.ndarray:
    """Conditional mean ``L(t)`` of the bridge from ``spec.xi0`` to ``spec.xi1``."""
    st = gramians_at(table, sys, t)
    gap = spec.xi1 - table.Phi[-1] @ spec.xi0
    return st.Phi @ spec.xi0 + st.P @ st.Phi_end.T @ table.solve_terminal(gap)


@dataclass(frozen=True, eq=False)
class BridgeStatistics:
    """Bridge mean and covariance on every grid node.

    ``cross(k, j)`` gives ``Q(t_k, t_j)`` for any pair of node indices.
    """

    grid: TimeGrid
    mean: np.ndarray
    cov_diag: np.ndarray
    _table: GramianTable = field(repr=False)

    def cross(self, k: int, j: int) -> np.ndarray:
        if k > j:
            return self.cross(j, k).T
        tb = self._table
        phi_jk = np.linalg.solve(tb.Phi[k].T, tb.Phi[j].T).T
        corr = tb.P[k] @ tb.Phi_end[k].T @ tb.solve_terminal(tb.Phi_end[j] @ tb.P[j])
        return tb.P[k] @ phi_jk.T - corr


def bridge_statistics(table: GramianTable, sys: LinearSystem, spec: BridgeSpec) -> BridgeStatistics:
    """Vectorized ``L(t_k)`` and ``Q(t_k, t_k)`` over the table's grid."""
    P, E = table.P, table.Phi_end
    Pt = np.swapaxes(P, -1, -2)
    # P(tf)^{-1} Phi(tf, t_k) P(t_k), stacked along the last axis for one solve
    W = E @ P
    n = table.n
    sol = table.solve_terminal(np.concatenate(list(W), axis=1)).reshape(n, -1, n)
    sol = np.moveaxis(sol, 1, 0)
    cov = P - Pt @ np.swapaxes(E, -1, -2) @ sol
    cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    gap = spec.xi1 - table.Phi[-1] @ spec.xi0
    lam = table.solve_terminal(gap)
    mean = table.Phi @ spec.xi0 + P @ np.swapaxes(E, -1, -2) @ lam
    return BridgeStatistics(table.grid, mean, cov, table)


def ou_closed_forms(t: float, s: float) -> np.ndarray:
    """Closed-form velocity covariance of the unit double-integrator bridge.

    Returns the 2x2 matrix of ``E{v(t) v(t)}``, ``E{v(t) v(s)}``,
    ``E{v(s) v(s)}`` for ``0 <= t <= s <= 1``; pinned at zero at both ends.
    Used only as a test oracle.
    """
    if not (0.0 <= t <= s <= 1.0):
        raise OutOfInterval(f"need 0 <= t <= s <= 1, got t={t}, s={s}")
    vtt = -t * (3 * t**3 - 6 * t**2 + 4 * t - 1)
    vss = -s * (3 * s**3 - 6 * s**2 + 4 * s - 1)
    vts = -t * (s - 1) * (3 * s * t - 3 * s + 1)
    return np.array([[vtt, vts], [vts, vss]])


def conditioning_oracle(sys: LinearSystem, times, xi0=None, xi1=None, rtol=1e-11, atol=1e-13):
    """Joint mean and covariance of the bridge at ``times`` by direct Gaussian conditioning.

    Independent of the grid machinery: ``Phi(t, t0)`` and ``P(t)`` come from
    an adaptive high-order integrator, the joint covariance of
    ``(xi(t_1), ..., xi(t_q), xi(tf))`` is assembled from blocks
    ``P(t_i) Phi(t_j, t_i)'`` and the final block is conditioned away by a
    Schur complement.

    Returns ``(mean, cov)`` with shapes ``(q, n)`` and ``(q * n, q * n)``,
    state blocks ordered as ``times``.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    for t in times:
        sys.check_time(t)
    n = sys.n
    xi0 = np.zeros(n) if xi0 is None else np.asarray(xi0, dtype=float)
    xi1 = np.zeros(n) if xi1 is None else np.asarray(xi1, dtype=float)

    def rhs(t, y):
        A, B = sys.coefficients(np.array([t]))
        A, B = A[0], B[0]
        phi = y[: n * n].reshape(n, n)
        P = y[n * n :].reshape(n, n)
        dP = A @ P + P @ A.T + B @ B.T
        return np.concatenate([(A @ phi).ravel(), dP.ravel()])

    all_t = np.unique(np.append(times, sys.tf))
    y0 = np.concatenate([np.eye(n).ravel(), np.zeros(n * n)])
    t_eval = all_t if all_t[0] > sys.t0 else all_t[1:]
    sol = scipy.integrate.solve_ivp(
        rhs, (sys.t0, sys.tf), y0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    phis = {sys.t0: np.eye(n)}
    Ps = {sys.t0: np.zeros((n, n))}
    for t, y in zip(sol.t, sol.y.T):
        phis[t] = y[: n * n].reshape(n, n)
        Ps[t] = y[n * n :].reshape(n, n)

    def phi(s, t):
        return np.linalg.solve(phis[t].T, phis[s].T).T

    pts = list(times) + [sys.tf]
    q = len(pts)
    S = np.zeros((q * n, q * n))
    for i, ti in enumerate(pts):
        for j, tj in enumerate(pts):
            if ti <= tj:
                blk = Ps[ti] @ phi(tj, ti).T
            else:
                blk = (Ps[tj] @ phi(ti, tj).T).T
            S[i * n : (i + 1) * n, j * n : (j + 1) * n] = blk
    mu = np.concatenate([phis[t] @ xi0 for t in pts])
    k = (q - 1) * n
    S11, S12, S22 = S[:k, :k], S[:k, k:], S[k:, k:]
    tr = np.trace(S22)
    if not tr > 0 or np.linalg.eigvalsh(S22)[0] < SOLVE_RTOL * tr:
        raise Unbridgeable("terminal covariance is singular")
    fac = scipy.linalg.cho_factor(S22)
    cov = S11 - S12 @ scipy.linalg.cho_solve(fac, S12.T)
    mean = mu[:k] + S12 @ scipy.linalg.cho_solve(fac, xi1 - mu[k:])
    return mean.reshape(q - 1, n), 0.5 * (cov + cov.T)
