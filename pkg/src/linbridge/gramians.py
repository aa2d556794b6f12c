"""Forward and backward Gramians of a linear system on a time grid.

The forward Gramian ``P(t)`` is the covariance of the unconditioned state
started from a fixed point at ``t0``; it solves

    P' = A P + P A' + B B',   P(t0) = 0.

The backward Gramian ``Phat(t)`` is the controllability Gramian over
``[t, tf]``; it solves

    Phat' = A Phat + Phat A' - B B',   Phat(tf) = 0.

Their sum ``T = P + Phat`` obeys the undriven equation ``T' = A T + T A'``,
which gives a cheap consistency check of the two integrations.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from ._rk4 import rk4_march
from .errors import Unbridgeable
from .system import LinearSystem, TimeGrid

__all__ = [
    "GramianTable",
    "GridState",
    "BridgeabilityReport",
    "forward_gramian",
    "backward_gramian",
    "gramian_table",
    "gramians_at",
    "check_bridgeability",
]

SOLVE_RTOL = 1e-12


def _sym(X):
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def _lyap_fwd(P, A, BBt):
    AP = A @ P
    return AP + AP.T + BBt


def _lyap_bwd(P, A, BBt):
    AP = A @ P
    return AP + AP.T - BBt


def _phi_fwd(phi, A, _):
    return A @ phi


def _phi_end(phi, A, _):
    # d/dt Phi(tf, t) = -Phi(tf, t) A(t)
    return -phi @ A


def _grid_coefficients(sys, grid):
    t = grid.nodes
    A, B = sys.coefficients(t)
    Am, Bm = sys.coefficients(0.5 * (t[1:] + t[:-1]))
    BBt = B @ np.swapaxes(B, -1, -2)
    BBtm = Bm @ np.swapaxes(Bm, -1, -2)
    nodes = list(zip(A, BBt))
    mids = list(zip(Am, BBtm))
    return nodes, mids


def forward_gramian(sys: LinearSystem, grid: TimeGrid) -> np.ndarray:
    """``P(t_k)`` for every node, shape ``(N + 1, n, n)``; ``P(t0) = 0``."""
    nodes, mids = _grid_coefficients(sys, grid)
    return rk4_march(_lyap_fwd, np.zeros((sys.n, sys.n)), grid.nodes, nodes, mids, post=_sym)


def backward_gramian(sys: LinearSystem, grid: TimeGrid) -> np.ndarray:
    """``Phat(t_k)`` for every node, shape ``(N + 1, n, n)``; ``Phat(tf) = 0``."""
    nodes, mids = _grid_coefficients(sys, grid)
    rev = rk4_march(
        _lyap_bwd, np.zeros((sys.n, sys.n)), grid.nodes[::-1], nodes[::-1], mids[::-1], post=_sym
    )
    return rev[::-1].copy()


@dataclass(frozen=True, eq=False)
class GramianTable:
    """Gramians and transition matrices sampled on a grid.

    Attributes
    ----------
    P, Phat : ndarray (N + 1, n, n)
        Forward and backward Gramians.
    Phi : ndarray (N + 1, n, n)
        ``Phi(t_k, t0)``.
    Phi_end : ndarray (N + 1, n, n)
        ``Phi(tf, t_k)``.

    ``Phat[-1]`` is exactly zero and must never be inverted.
    """

    grid: TimeGrid
    P: np.ndarray
    Phat: np.ndarray
    Phi: np.ndarray
    Phi_end: np.ndarray

    def __post_init__(self):
        for a in (self.P, self.Phat, self.Phi, self.Phi_end):
            a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.P.shape[-1]

    @property
    def T(self) -> np.ndarray:
        return self.P + self.Phat

    @cached_property
    def terminal_factor(self):
        """Cholesky factor of ``P(tf)``; raises :class:`Unbridgeable` when near singular."""
        Ptf = self.P[-1]
        tr = np.trace(Ptf)
        lam = np.linalg.eigvalsh(Ptf)[0]
        if not tr > 0 or lam < SOLVE_RTOL * tr:
            raise Unbridgeable(
                f"P(tf) is singular (min eigenvalue {lam:.3e}, trace {tr:.3e})",
                check_bridgeability(self),
            )
        return scipy.linalg.cho_factor(Ptf)

    def solve_terminal(self, rhs):
        """``P(tf)^{-1} rhs`` via the cached factorization."""
        return scipy.linalg.cho_solve(self.terminal_factor, rhs)


def gramian_table(sys: LinearSystem, grid: TimeGrid) -> GramianTable:
    """Integrate ``P``, ``Phat``, ``Phi(t, t0)`` and ``Phi(tf, t)`` over ``grid``."""
    if grid.t0 != sys.t0 or grid.tf != sys.tf:
        raise ValueError("grid must span the system interval")
    nodes, mids = _grid_coefficients(sys, grid)
    t = grid.nodes
    n = sys.n
    Z = np.zeros((n, n))
    I = np.eye(n)
    P = rk4_march(_lyap_fwd, Z, t, nodes, mids, post=_sym)
    Phat = rk4_march(_lyap_bwd, Z, t[::-1], nodes[::-1], mids[::-1], post=_sym)[::-1]
    Phi = rk4_march(_phi_fwd, I, t, nodes, mids)
    Phi_end = rk4_march(_phi_end, I, t[::-1], nodes[::-1], mids[::-1])[::-1]
    return GramianTable(grid, P, Phat.copy(), Phi, Phi_end.copy())


@dataclass(frozen=True)
class GridState:
    """Gramians and transition matrices at a single time."""

    t: float
    P: np.ndarray
    Phat: np.ndarray
    Phi: np.ndarray
    Phi_end: np.ndarray


def _substep(rhs, y0, t_from, t_to, sys):
    times = np.array([t_from, t_to])
    A, B = sys.coefficients(times)
    Am, Bm = sys.coefficients(np.array([0.5 * (t_from + t_to)]))
    nodes = list(zip(A, B @ np.swapaxes(B, -1, -2)))
    mids = list(zip(Am, Bm @ np.swapaxes(Bm, -1, -2)))
    return rk4_march(rhs, y0, times, nodes, mids)[-1]


def gramians_at(table: GramianTable, sys: LinearSystem, t: float) -> GridState:
    """Values at an arbitrary time.

    Grid nodes are read from the table.  Between nodes, one short RK4
    substep is taken from the neighbouring node in each integration
    direction, which keeps the table's order of accuracy.
    """
    sys.check_time(t)
    grid = table.grid
    k, exact = grid.locate(t)
    if exact:
        return GridState(t, table.P[k], table.Phat[k], table.Phi[k], table.Phi_end[k])
    tk, tk1 = grid.nodes[k], grid.nodes[k + 1]
    P = _sym(_substep(_lyap_fwd, table.P[k], tk, t, sys))
    Phi = _substep(_phi_fwd, table.Phi[k], tk, t, sys)
    Phat = _sym(_substep(_lyap_bwd, table.Phat[k + 1], tk1, t, sys))
    Phi_end = _substep(_phi_end, table.Phi_end[k + 1], tk1, t, sys)
    return GridState(t, P, Phat, Phi, Phi_end)


@dataclass(frozen=True)
class BridgeabilityReport:
    min_eig_P_tf: float
    trace_P_tf: float
    min_eig_Phat: np.ndarray
    tol: float
    bridgeable: bool

    def __str__(self):
        status = "bridgeable" if self.bridgeable else "UNBRIDGEABLE"
        worst = float(np.min(self.min_eig_Phat)) if len(self.min_eig_Phat) else float("nan")
        return (
            f"{status}: min eig P(tf) = {self.min_eig_P_tf:.6e} "
            f"(trace {self.trace_P_tf:.6e}, relative floor {self.tol:g}); "
            f"smallest min eig Phat(t_k), k < N: {worst:.6e}"
        )


def check_bridgeability(table: GramianTable, tol: float = 1e-10) -> BridgeabilityReport:
    """Diagnose whether ``P(tf)`` is safely invertible (relative to its trace)."""
    Ptf = table.P[-1]
    tr = float(np.trace(Ptf))
    lam = float(np.linalg.eigvalsh(Ptf)[0])
    min_hat = np.linalg.eigvalsh(table.Phat[:-1])[:, 0]
    ok = tr > 0 and lam >= tol * tr
    return BridgeabilityReport(lam, tr, min_hat, tol, bool(ok))
