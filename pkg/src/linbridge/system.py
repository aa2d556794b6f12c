"""Linear time-varying systems and their state-transition matrices.

A system is the pair of matrix functions ``A(t)`` (n x n) and ``B(t)``
(n x m) of the SDE ``d xi = A(t) xi dt + B(t) dw`` on ``[t0, tf]``.
Coefficients are normally piecewise polynomials in ``t``; any callable
returning a correctly shaped array is also accepted, which is handy for
analytic test systems.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np

from ._rk4 import rk4_march, step_times
from .errors import OutOfInterval

__all__ = [
    "PiecewisePolyMatrix",
    "LinearSystem",
    "TimeGrid",
    "eval_dynamics",
    "state_transition",
    "default_step",
    "double_integrator",
    "wiener_system",
]


class PiecewisePolyMatrix:
    """Matrix whose entries are piecewise polynomials in time.

    Parameters
    ----------
    pieces : array_like, shape (n_pieces, rows, cols, degree + 1)
        Coefficients in ascending powers of absolute time ``t``.
        Entries of lower degree are zero padded.
    breakpoints : sequence of float
        Strictly increasing interior cut points, ``n_pieces - 1`` of them.
        Piece ``i`` is active on ``[breakpoints[i-1], breakpoints[i])``
        (right-continuous selection).
    """

    def __init__(self, pieces, breakpoints=()):
        coeffs = np.asarray(pieces, dtype=float)
        if coeffs.ndim != 4:
            raise ValueError("pieces must have shape (n_pieces, rows, cols, degree + 1)")
        breaks = np.asarray(breakpoints, dtype=float).reshape(-1)
        if len(breaks) != coeffs.shape[0] - 1:
            raise ValueError(
                f"{coeffs.shape[0]} pieces need {coeffs.shape[0] - 1} breakpoints, got {len(breaks)}"
            )
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        self.coeffs = coeffs
        self.breakpoints = breaks
        self.coeffs.setflags(write=False)
        self.breakpoints.setflags(write=False)

    @classmethod
    def from_nested(cls, entries, breakpoints=()):
        """Build from nested lists.

        ``entries`` is either one matrix (rows of coefficient lists) or,
        when ``breakpoints`` is non-empty, a list of such matrices, one per
        piece.  A bare number is a constant entry.
        """
        matrices = list(entries) if len(breakpoints) else [entries]
        rows = len(matrices[0])
        cols = len(matrices[0][0])
        degree = 0
        for mat in matrices:
            if len(mat) != rows or any(len(r) != cols for r in mat):
                raise ValueError("all pieces must share one matrix shape")
            for row in mat:
                for e in row:
                    degree = max(degree, len(np.atleast_1d(e)) - 1)
        out = np.zeros((len(matrices), rows, cols, degree + 1))
        for p, mat in enumerate(matrices):
            for i, row in enumerate(mat):
                for j, e in enumerate(row):
                    c = np.atleast_1d(np.asarray(e, dtype=float))
                    out[p, i, j, : len(c)] = c
        return cls(out, breakpoints)

    @classmethod
    def constant(cls, matrix):
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(m[None, :, :, None])

    @property
    def shape(self):
        return self.coeffs.shape[1:3]

    def to_nested(self):
        """Inverse of :meth:`from_nested` (trailing zero coefficients trimmed)."""
        def trim(c):
            c = list(map(float, c))
            while len(c) > 1 and c[-1] == 0.0:
                c.pop()
            return c

        mats = [
            [[trim(self.coeffs[p, i, j]) for j in range(self.shape[1])] for i in range(self.shape[0])]
            for p in range(self.coeffs.shape[0])
        ]
        return mats if len(self.breakpoints) else mats[0]

    def _piece_index(self, t, tf=None):
        idx = np.searchsorted(self.breakpoints, t, side="right")
        if tf is not None:
            # left-hand piece at the terminal time
            at_end = np.asarray(t) == tf
            idx = np.where(at_end, np.searchsorted(self.breakpoints, t, side="left"), idx)
        return idx

    def evaluate(self, t, tf=None):
        """Evaluate at scalar or array ``t``; returns ``(..., rows, cols)``."""
        t = np.asarray(t, dtype=float)
        idx = self._piece_index(t, tf)
        c = self.coeffs[idx]  # (..., rows, cols, deg+1)
        tt = t[..., None, None]
        out = c[..., -1]
        for k in range(c.shape[-1] - 2, -1, -1):
            out = out * tt + c[..., k]
        return out

    def __call__(self, t):
        return self.evaluate(t)

    def __eq__(self, other):
        if not isinstance(other, PiecewisePolyMatrix):
            return NotImplemented
        return (
            self.coeffs.shape == other.coeffs.shape
            and np.array_equal(self.coeffs, other.coeffs)
            and np.array_equal(self.breakpoints, other.breakpoints)
        )

    def __repr__(self):
        return f"PiecewisePolyMatrix(shape={self.shape}, pieces={self.coeffs.shape[0]})"


MatrixFunction = Union[PiecewisePolyMatrix, Callable[[float], np.ndarray]]


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Dynamics ``d xi = A(t) xi dt + B(t) dw`` on ``[t0, tf]``."""

    A: MatrixFunction
    B: MatrixFunction
    t0: float = 0.0
    tf: float = 1.0

    def __post_init__(self):
        if not self.t0 < self.tf:
            raise ValueError(f"need t0 < tf, got [{self.t0}, {self.tf}]")
        a = np.atleast_2d(self._eval(self.A, self.t0))
        b = np.atleast_2d(self._eval(self.B, self.t0))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"A(t) must be square, got {a.shape}")
        if b.shape[0] != n:
            raise ValueError(f"B(t) must have {n} rows, got {b.shape}")
        for f in (self.A, self.B):
            if isinstance(f, PiecewisePolyMatrix) and len(f.breakpoints):
                if f.breakpoints[0] < self.t0 or f.breakpoints[-1] > self.tf:
                    raise ValueError("breakpoints must lie within [t0, tf]")

    def _eval(self, f, t):
        if isinstance(f, PiecewisePolyMatrix):
            return f.evaluate(t, tf=self.tf)
        return np.asarray(f(t), dtype=float)

    @property
    def n(self) -> int:
        return np.atleast_2d(self._eval(self.A, self.t0)).shape[0]

    @property
    def m(self) -> int:
        return np.atleast_2d(self._eval(self.B, self.t0)).shape[1]

    def coefficients(self, times):
        """Vectorized ``(A(t), B(t))`` over an array of times, no interval check."""
        times = np.asarray(times, dtype=float)
        n, m = self.n, self.m
        if isinstance(self.A, PiecewisePolyMatrix):
            As = self.A.evaluate(times, tf=self.tf)
        else:
            As = np.array([np.reshape(self.A(t), (n, n)) for t in times.ravel()])
        if isinstance(self.B, PiecewisePolyMatrix):
            Bs = self.B.evaluate(times, tf=self.tf)
        else:
            Bs = np.array([np.reshape(self.B(t), (n, m)) for t in times.ravel()])
        return As.reshape(times.shape + (n, n)), Bs.reshape(times.shape + (n, m))

    def check_time(self, t):
        if not (self.t0 <= t <= self.tf):
            raise OutOfInterval(f"t = {t} is outside [{self.t0}, {self.tf}]")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``N + 1`` nodes on ``[t0, tf]``."""

    t0: float
    tf: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not self.t0 < self.tf:
            raise ValueError(f"need t0 < tf, got [{self.t0}, {self.tf}]")

    @classmethod
    def for_system(cls, sys: LinearSystem, N: int) -> "TimeGrid":
        return cls(sys.t0, sys.tf, N)

    @property
    def h(self) -> float:
        return (self.tf - self.t0) / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        t = self.t0 + self.h * np.arange(self.N + 1)
        t[-1] = self.tf
        t.setflags(write=False)
        return t

    def locate(self, t: float):
        """Return ``(k, exact)`` where ``t_k <= t < t_{k+1}``, or ``t_k == t`` when ``exact``."""
        if not (self.t0 <= t <= self.tf):
            raise OutOfInterval(f"t = {t} is outside [{self.t0}, {self.tf}]")
        x = (t - self.t0) / self.h
        k = int(round(x))
        if abs(x - k) <= 1e-9:
            return min(k, self.N), True
        return min(int(np.floor(x)), self.N - 1), False

    def index_of(self, t: float) -> int:
        """Index of the node nearest to ``t``."""
        if not (self.t0 <= t <= self.tf):
            raise OutOfInterval(f"t = {t} is outside [{self.t0}, {self.tf}]")
        return int(round((t - self.t0) / self.h))


def default_step(sys: LinearSystem) -> float:
    """1e-3 on a unit interval, scaled with the interval length."""
    return 1e-3 * (sys.tf - sys.t0)


def eval_dynamics(sys: LinearSystem, t: float):
    """Return ``(A(t), B(t))``; breakpoints take the right-hand piece (left at ``tf``)."""
    sys.check_time(t)
    A = np.atleast_2d(sys._eval(sys.A, t)).reshape(sys.n, sys.n)
    B = np.atleast_2d(sys._eval(sys.B, t)).reshape(sys.n, sys.m)
    return A, B


def _transition_rhs(phi, A):
    return A @ phi


def state_transition(sys: LinearSystem, s: float, t: float, h: float = None) -> np.ndarray:
    """State-transition matrix ``Phi(s, t)`` by fixed-step RK4 on ``dPhi/ds = A(s) Phi``.

    Steps have length ``h`` except possibly the last, which is shortened to
    land on ``s``.  ``s < t`` integrates backward.
    """
    sys.check_time(s)
    sys.check_time(t)
    if h is None:
        h = default_step(sys)
    if h <= 0:
        raise ValueError("step must be positive")
    times = step_times(t, s, h)
    if len(times) == 1:
        return np.eye(sys.n)
    A_nodes, _ = sys.coefficients(times)
    A_mids, _ = sys.coefficients(0.5 * (times[1:] + times[:-1]))
    phis = rk4_march(
        _transition_rhs, np.eye(sys.n), times, [(a,) for a in A_nodes], [(a,) for a in A_mids]
    )
    return phis[-1]


def double_integrator(t0: float = 0.0, tf: float = 1.0) -> LinearSystem:
    """Randomly accelerated particle: state (position, velocity), noise on velocity."""
    return LinearSystem(
        PiecewisePolyMatrix.constant([[0.0, 1.0], [0.0, 0.0]]),
        PiecewisePolyMatrix.constant([[0.0], [1.0]]),
        t0,
        tf,
    )


def wiener_system(dim: int = 1, t0: float = 0.0, tf: float = 1.0) -> LinearSystem:
    """``d xi = dw`` in ``dim`` dimensions."""
    return LinearSystem(
        PiecewisePolyMatrix.constant(np.zeros((dim, dim))),
        PiecewisePolyMatrix.constant(np.eye(dim)),
        t0,
        tf,
    )
