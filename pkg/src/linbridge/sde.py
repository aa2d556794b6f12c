"""Bridge-generating controlled SDE and its Euler-Maruyama simulation.

The bridge from ``xi0`` to ``xi1`` is realized by

    d xi = [A(t) xi - B(t) K(t) (xi - Phi(t, tf) xi1)] dt + B(t) dw,
    K(t) = B(t)' Phat(t)^{-1}.

``K`` diverges at ``tf`` because ``Phat(tf) = 0``.  The simulator therefore
integrates up to ``t_{N-1}`` and assigns ``xi(tf) = xi1`` exactly.

Each path draws its normals from its own counter-based Philox stream keyed
by the seed, with the path id in the high counter word.  Paths are
advanced with elementwise row operations only, so a path's values do not
depend on how paths are batched or distributed over workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import SingularGramian
from ._rk4 import rk4_march
from .gramians import SOLVE_RTOL, GramianTable, gramians_at
from .stats import BridgeSpec
from .system import LinearSystem, TimeGrid, eval_dynamics

__all__ = [
    "ControlledDrift",
    "SamplePath",
    "SimulationPlan",
    "feedback_gain",
    "bridge_drift",
    "path_rng",
    "simulate_bridge",
    "simulate_states",
    "noiseless_trajectory",
]

DEFAULT_CHUNK = 8192


def _gain_from(Phat, B, t):
    tr = np.trace(Phat)
    if not tr > 0 or np.linalg.eigvalsh(Phat)[0] < SOLVE_RTOL * tr:
        raise SingularGramian(f"backward Gramian is singular at t = {t}")
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(Phat), B).T


def feedback_gain(table: GramianTable, sys: LinearSystem, t: float) -> np.ndarray:
    """``K(t) = B(t)' Phat(t)^{-1}`` (m x n), computed by a Cholesky solve."""
    sys.check_time(t)
    _, B = eval_dynamics(sys, t)
    return _gain_from(gramians_at(table, sys, t).Phat, B, t)


@dataclass(frozen=True, eq=False)
class ControlledDrift:
    """Drift of the bridge SDE toward ``xi1``.

    ``gain_scale`` multiplies the feedback gain; values other than 1 give a
    deliberately wrong process and exist for negative-control runs.
    """

    table: GramianTable
    sys: LinearSystem
    xi1: np.ndarray
    gain_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xi1", np.asarray(self.xi1, dtype=float).reshape(-1))

    def target(self, t: float) -> np.ndarray:
        """``Phi(t, tf) xi1``: the noiseless state at ``t`` that reaches ``xi1``."""
        st = gramians_at(self.table, self.sys, t)
        return np.linalg.solve(st.Phi_end, self.xi1)

    @cached_property
    def tabulated(self):
        """Per-node ``(A_k, B_k, K_k, r_k)`` for ``k < N``, with ``r_k = Phi(t_k, tf) xi1``."""
        tb = self.table
        t = tb.grid.nodes[:-1]
        A, B = self.sys.coefficients(t)
        K = np.array([_gain_from(tb.Phat[k], B[k], t[k]) for k in range(len(t))])
        r = np.linalg.solve(tb.Phi_end[:-1], np.broadcast_to(self.xi1, (len(t), len(self.xi1)))[..., None])[..., 0]
        return A, B, self.gain_scale * K, r


def bridge_drift(d: ControlledDrift, t: float, xi) -> np.ndarray:
    """``A(t) xi - B(t) K(t) (xi - Phi(t, tf) xi1)``; undefined at ``tf``."""
    if t >= d.sys.tf:
        raise SingularGramian("the bridge drift is not defined at tf")
    xi = np.asarray(xi, dtype=float)
    A, B = eval_dynamics(d.sys, t)
    K = d.gain_scale * feedback_gain(d.table, d.sys, t)
    return A @ xi - B @ (K @ (xi - d.target(t)))


@dataclass(frozen=True, eq=False)
class SamplePath:
    grid: TimeGrid
    states: np.ndarray
    path_id: int
    seed: int


def path_rng(seed: int, path_id: int) -> np.random.Generator:
    """Independent counter-based stream for one path."""
    return np.random.Generator(np.random.Philox(key=seed, counter=int(path_id) << 128))


class _PathStreams:
    """Reuses one Philox generator, re-pointing its counter per path.

    Equivalent to :func:`path_rng` but avoids constructing a generator for
    every path.
    """

    def __init__(self, seed):
        self._bitgen = np.random.Philox(key=seed, counter=0)
        self._gen = np.random.Generator(self._bitgen)
        self._fresh = self._bitgen.state

    def normals(self, path_id, shape):
        st = dict(self._fresh)
        st["state"] = {
            "counter": np.array([0, 0, path_id & (2**64 - 1), path_id >> 64], dtype=np.uint64),
            "key": self._fresh["state"]["key"],
        }
        self._bitgen.state = st
        return self._gen.standard_normal(shape)


def _rowmat(X, M):
    # X @ M.T by columns; each row is computed independently of the batch
    out = X[:, 0:1] * M[:, 0]
    for j in range(1, M.shape[1]):
        out = out + X[:, j : j + 1] * M[:, j]
    return out


@dataclass(frozen=True, eq=False)
class SimulationPlan:
    """Precomputed per-step matrices shared by all paths.

    The Euler-Maruyama update for step ``k`` is

        xi <- xi + h (M_k xi + c_k) + G_k z,

    with ``M_k = A_k - B_k K_k``, ``c_k = B_k K_k r_k`` and ``G_k = sqrt(h) B_k``.
    """

    grid: TimeGrid
    xi0: np.ndarray
    xi1: np.ndarray
    M: np.ndarray
    c: np.ndarray
    G: np.ndarray
    seed: int

    @classmethod
    def build(cls, spec: BridgeSpec, table: GramianTable, seed: int, gain_scale: float = 1.0):
        grid = table.grid
        table.terminal_factor  # raises Unbridgeable
        drift = ControlledDrift(table, spec.sys, spec.xi1, gain_scale)
        A, B, K, r = drift.tabulated
        BK = B @ K
        M = A - BK
        c = (BK @ r[..., None])[..., 0]
        G = np.sqrt(grid.h) * B
        return cls(grid, spec.xi0, spec.xi1, M, c, G, int(seed))

    def run(self, path_ids, record=None) -> np.ndarray:
        """Simulate the given paths; returns ``(len(path_ids), len(record), n)``.

        ``record`` lists node indices to keep (default: all nodes).
        """
        N = self.grid.N
        n = len(self.xi0)
        m = self.G.shape[-1]
        h = self.grid.h
        record = np.arange(N + 1) if record is None else np.asarray(record, dtype=int)
        slot = {int(k): i for i, k in enumerate(record)}
        ids = list(path_ids)
        out = np.empty((len(ids), len(record), n))
        if not ids:
            return out
        # (step, path, noise) so each step reads a contiguous block
        streams = _PathStreams(self.seed)
        Z = np.stack([streams.normals(int(p), (max(N - 1, 0), m)) for p in ids], axis=1)
        X = np.tile(self.xi0, (len(ids), 1))
        for k in range(N):
            if k in slot:
                out[:, slot[k]] = X
            if k == N - 1:
                break
            drift = _rowmat(X, self.M[k])
            drift += self.c[k]
            drift *= h
            X = X + drift
            X += _rowmat(Z[k], self.G[k])
        if N in slot:
            out[:, slot[N]] = self.xi1
        return out


def _chunks(n_paths, chunk_size):
    return [range(a, min(a + chunk_size, n_paths)) for a in range(0, n_paths, chunk_size)]


def simulate_states(
    plan: SimulationPlan, n_paths: int, record=None, workers: int = 1, chunk_size: int = DEFAULT_CHUNK
):
    """Yield ``(path_ids, states)`` chunk by chunk, in path order."""
    chunks = _chunks(n_paths, chunk_size)
    if workers <= 1:
        for ids in chunks:
            yield ids, plan.run(ids, record)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from zip(chunks, pool.map(lambda ids: plan.run(ids, record), chunks))


def simulate_bridge(
    spec: BridgeSpec,
    table: GramianTable,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    workers: int = 1,
    gain_scale: float = 1.0,
    chunk_size: int = DEFAULT_CHUNK,
) -> list:
    """Simulate ``n_paths`` full bridge paths.

    Path ``p`` depends only on ``(seed, p)``; states[0] is ``xi0`` and
    states[N] is ``xi1`` exactly.  Raises :class:`SingularGramian` if the
    gain cannot be formed at some node before ``tf``.
    """
    if grid != table.grid:
        raise ValueError("grid does not match the Gramian table")
    if n_paths < 0:
        raise ValueError("n_paths must be non-negative")
    if n_paths == 0:
        return []
    plan = SimulationPlan.build(spec, table, seed, gain_scale)
    paths = []
    for ids, states in simulate_states(plan, n_paths, workers=workers, chunk_size=chunk_size):
        for p, st in zip(ids, states):
            st.setflags(write=False)
            paths.append(SamplePath(grid, st, p, int(seed)))
    return paths


def _affine_drift(table, sys, xi1, t):
    st = gramians_at(table, sys, t)
    _, B = eval_dynamics(sys, t)
    A, _ = eval_dynamics(sys, t)
    BK = B @ _gain_from(st.Phat, B, t)
    return A - BK, BK @ np.linalg.solve(st.Phi_end, xi1)


def noiseless_trajectory(spec: BridgeSpec, table: GramianTable, max_stiffness: float = 0.2) -> np.ndarray:
    """Integrate the bridge drift without noise by RK4.

    Marches from ``xi0`` through ``t_{N-1}`` (the drift is never evaluated
    at ``tf``) and sets the final node to ``xi1``.  A grid interval is
    split into equal substeps so that ``|lambda| * step <= max_stiffness``
    for the closed-loop spectral radius at its ends; this only matters in
    the last few intervals, where the gain blows up.  Starting on the
    conditional mean, the result reproduces ``L(t_k)``.
    """
    grid = table.grid
    sys = spec.sys
    t = grid.nodes
    N = grid.N
    ends = [_affine_drift(table, sys, spec.xi1, t[k]) for k in range(N)]
    rho = np.array([np.max(np.abs(np.linalg.eigvals(M))) for M, _ in ends])
    times, at_nodes, at_mids, keep = [t[0]], [ends[0]], [], [0]
    for k in range(N - 1):
        n_sub = max(1, int(np.ceil(max(rho[k], rho[k + 1]) * grid.h / max_stiffness)))
        sub = np.linspace(t[k], t[k + 1], n_sub + 1)
        for a, b in zip(sub[:-1], sub[1:]):
            at_mids.append(_affine_drift(table, sys, spec.xi1, 0.5 * (a + b)))
        for j, b in enumerate(sub[1:], 1):
            times.append(b)
            at_nodes.append(ends[k + 1] if j == n_sub else _affine_drift(table, sys, spec.xi1, b))
        keep.append(len(times) - 1)
    path = rk4_march(lambda x, M, c: M @ x + c, spec.xi0, np.array(times), at_nodes, at_mids)
    return np.vstack([path[keep], spec.xi1])
