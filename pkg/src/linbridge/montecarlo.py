"""Ensemble statistics of simulated bridges and their comparison with theory."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples, ShapeMismatch
from .gramians import GramianTable
from .sde import DEFAULT_CHUNK, SimulationPlan, simulate_states
from .stats import BridgeSpec, BridgeStatistics

__all__ = [
    "MomentAccumulator",
    "EnsembleStats",
    "ValidationEntry",
    "ValidationReport",
    "ensemble_stats",
    "run_ensemble",
    "validate",
]


class MomentAccumulator:
    """Pairwise-mergeable running mean and co-moment of a feature vector.

    Batches are reduced two-pass (center, then outer products) and merged
    with the parallel update of Chan et al., so sharded accumulation gives
    the same answer as a single pass up to rounding.
    """

    def __init__(self, dim):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros((dim, dim))

    def add_batch(self, X):
        X = np.asarray(X, dtype=float)
        if len(X) == 0:
            return self
        other = MomentAccumulator(X.shape[1])
        other.count = len(X)
        other.mean = X.mean(axis=0)
        D = X - other.mean
        other.m2 = D.T @ D
        return self.merge(other)

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / n)
        self.m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.count * other.count / n)
        self.count = n
        return self

    def covariance(self):
        if self.count < 2:
            raise InsufficientSamples(f"need at least 2 samples, have {self.count}")
        return self.m2 / (self.count - 1)


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Sample means and covariances at selected grid nodes.

    ``cross_covs[(k, j)]`` is the sample estimate of
    ``E{(xi(t_k) - mean_k)(xi(t_j) - mean_j)'}``.
    """

    query_times: tuple
    times: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    cross_covs: dict
    n_samples: int


def _finish(acc, query, pairs, times, n):
    q = len(query)
    mean = acc.mean.reshape(q, n)
    C = acc.covariance()
    pos = {k: i for i, k in enumerate(query)}
    covs = np.array([C[i * n : (i + 1) * n, i * n : (i + 1) * n] for i in range(q)])
    covs = 0.5 * (covs + np.swapaxes(covs, -1, -2))
    cross = {}
    for k, j in pairs:
        a, b = pos[k], pos[j]
        cross[(k, j)] = C[a * n : (a + 1) * n, b * n : (b + 1) * n].copy()
    return EnsembleStats(tuple(query), np.asarray(times), mean, covs, cross, acc.count)


def _query_layout(query_times, pairs):
    query = [int(k) for k in query_times]
    pairs = [(int(k), int(j)) for k, j in pairs]
    extra = [k for pr in pairs for k in pr if k not in query]
    return query + sorted(set(extra)), pairs


def ensemble_stats(paths, query_times, pairs=()) -> EnsembleStats:
    """Sample statistics (``1/(n-1)`` normalization) from a list of :class:`SamplePath`."""
    if len(paths) < 2:
        raise InsufficientSamples(f"need at least 2 paths, have {len(paths)}")
    grid = paths[0].grid
    if any(p.grid != grid for p in paths):
        raise ShapeMismatch("paths do not share one grid")
    query, pairs = _query_layout(query_times, pairs)
    for k in query:
        if not 0 <= k <= grid.N:
            raise IndexError(f"grid index {k} out of range")
    n = paths[0].states.shape[1]
    X = np.stack([p.states[query].reshape(-1) for p in paths])
    acc = MomentAccumulator(X.shape[1]).add_batch(X)
    return _finish(acc, query, pairs, grid.nodes[query], n)


def run_ensemble(
    spec: BridgeSpec,
    table: GramianTable,
    seed: int,
    n_paths: int,
    query_times,
    pairs=(),
    workers: int = 1,
    gain_scale: float = 1.0,
    chunk_size: int = DEFAULT_CHUNK,
) -> EnsembleStats:
    """Simulate and accumulate statistics chunk by chunk without storing full paths."""
    if n_paths < 2:
        raise InsufficientSamples(f"need at least 2 paths, have {n_paths}")
    query, pairs = _query_layout(query_times, pairs)
    grid = table.grid
    plan = SimulationPlan.build(spec, table, seed, gain_scale)
    n = spec.sys.n
    acc = MomentAccumulator(len(query) * n)
    for _, states in simulate_states(plan, n_paths, query, workers, chunk_size):
        acc.add_batch(states.reshape(len(states), -1))
    return _finish(acc, query, pairs, grid.nodes[query], n)


@dataclass(frozen=True)
class ValidationEntry:
    name: str
    analytic: float
    empirical: float
    se: float
    z: float


@dataclass(frozen=True)
class ValidationReport:
    entries: list
    z_threshold: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return all(abs(e.z) <= self.z_threshold for e in self.entries)

    @property
    def max_abs_z(self) -> float:
        return max((abs(e.z) for e in self.entries), default=0.0)

    def failures(self):
        return [e for e in self.entries if abs(e.z) > self.z_threshold]

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict}: {len(self.entries)} entries, n = {self.n_samples}, "
            f"max |z| = {self.max_abs_z:.3f} (threshold {self.z_threshold:g})"
        )


ABS_SE_FLOOR = 1e-12
ABS_TOL = 1e-9


def _entry(name, analytic, empirical, se):
    if se < ABS_SE_FLOOR:
        z = 0.0 if abs(empirical - analytic) <= ABS_TOL else float("inf")
    else:
        z = (empirical - analytic) / se
    return ValidationEntry(name, float(analytic), float(empirical), float(se), float(z))


def _fmt(t):
    return repr(float(t))


def validate(stats: EnsembleStats, analytic: BridgeStatistics, z_threshold: float = 4.0) -> ValidationReport:
    """z-scores of every mean, covariance and cross-covariance entry.

    Standard errors use Gaussian theory with the analytic covariance:
    ``sqrt(Q_ii / n)`` for means and ``sqrt((Q_ii Q_jj + Q_ij^2) / n)`` for
    covariance entries, which is ``Q_ii sqrt(2 / n)`` on the diagonal.
    """
    grid = analytic.grid
    if not np.array_equal(grid.nodes[list(stats.query_times)], stats.times):
        raise ShapeMismatch("query times do not lie on the analytic grid")
    n = analytic.mean.shape[1]
    if stats.means.shape[1] != n:
        raise ShapeMismatch(f"state dimension {stats.means.shape[1]} != {n}")
    N = stats.n_samples
    entries = []
    for i, k in enumerate(stats.query_times):
        t = _fmt(grid.nodes[k])
        Q = analytic.cov_diag[k]
        for a in range(n):
            se = np.sqrt(max(Q[a, a], 0.0) / N)
            entries.append(_entry(f"mean[t={t}][{a + 1}]", analytic.mean[k, a], stats.means[i, a], se))
        for a in range(n):
            for b in range(a, n):
                se = np.sqrt(max(Q[a, a] * Q[b, b] + Q[a, b] ** 2, 0.0) / N)
                entries.append(_entry(f"cov[t={t}][{a + 1},{b + 1}]", Q[a, b], stats.covs[i, a, b], se))
    for (k, j), C in stats.cross_covs.items():
        Qkj = analytic.cross(k, j)
        Qk, Qj = analytic.cov_diag[k], analytic.cov_diag[j]
        label = f"xcov[t={_fmt(grid.nodes[k])},s={_fmt(grid.nodes[j])}]"
        for a in range(n):
            for b in range(n):
                se = np.sqrt(max(Qk[a, a] * Qj[b, b] + Qkj[a, b] ** 2, 0.0) / N)
                entries.append(_entry(f"{label}[{a + 1},{b + 1}]", Qkj[a, b], C[a, b], se))
    return ValidationReport(entries, float(z_threshold), N)
