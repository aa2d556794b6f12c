# %% [markdown]
# # The Brownian bridge as a controlled SDE
#
# A scalar Wiener process pinned to zero at t = 1 has covariance
# t(1 - s) for t <= s.  The same process is generated by the SDE
# d xi = -xi / (1 - t) dt + dw.  This script computes both sides with
# linbridge and checks one against the other by simulation.

# %%
import numpy as np

from linbridge import (
    BridgeSpec,
    TimeGrid,
    bridge_statistics,
    feedback_gain,
    gramian_table,
    pinned_cov,
    run_ensemble,
    validate,
    wiener_system,
)

sys = wiener_system()
grid = TimeGrid(0.0, 1.0, 1000)
table = gramian_table(sys, grid)

# %% [markdown]
# Forward Gramian P(t) = t, backward Gramian Phat(t) = 1 - t.

# %%
for k in (0, 250, 500, 1000):
    print(f"t = {grid.nodes[k]:.2f}   P = {table.P[k, 0, 0]:.6f}   Phat = {table.Phat[k, 0, 0]:.6f}")

# %% [markdown]
# Conditional covariance against t(1 - s):

# %%
for t, s in [(0.25, 0.5), (0.5, 0.5), (0.1, 0.9)]:
    print(f"Q({t}, {s}) = {pinned_cov(table, sys, t, s)[0, 0]:.6f}   t(1-s) = {t * (1 - s):.6f}")

# %% [markdown]
# The feedback gain of the bridge SDE is 1 / (1 - t):

# %%
for t in (0.0, 0.5, 0.9, 0.99):
    print(f"K({t}) = {feedback_gain(table, sys, t)[0, 0]:.6f}   1/(1-t) = {1 / (1 - t):.6f}")

# %% [markdown]
# Simulate 20 000 paths and compare the ensemble with the exact statistics.

# %%
spec = BridgeSpec(sys, [0.0], [0.0])
stats = run_ensemble(spec, table, seed=1, n_paths=20_000, query_times=[250, 500, 750], pairs=[(250, 500)])
report = validate(stats, bridge_statistics(table, sys, spec), z_threshold=4.0)
print(report)
for e in report.entries:
    print(f"  {e.name:28s} analytic {e.analytic:+.5f}  empirical {e.empirical:+.5f}  z {e.z:+.2f}")
