# %% [markdown]
# # Bridge of a randomly accelerated particle
#
# State (position x, velocity v), white-noise acceleration, pinned to
# (0, 0) at both ends of [0, 1].  We compare the machinery with the
# closed-form velocity covariance, print the feedback gain, and write
# position, velocity and phase-plane plots of two sample paths.

# %%
from pathlib import Path

import numpy as np

from linbridge import (
    BridgeSpec,
    TimeGrid,
    bridge_statistics,
    double_integrator,
    feedback_gain,
    gramian_table,
    ou_closed_forms,
    pinned_cov,
    simulate_bridge,
)
from linbridge.svgplot import line_chart

sys = double_integrator()
grid = TimeGrid(0.0, 1.0, 1000)
table = gramian_table(sys, grid)

print("P(1) =\n", table.P[-1])
print("Phat(0) =\n", table.Phat[0])

# %% [markdown]
# Velocity covariance: numerical route vs polynomial closed forms.

# %%
for t, s in [(0.25, 0.25), (0.25, 0.5), (0.5, 0.5), (0.3, 0.8)]:
    Q = pinned_cov(table, sys, t, s)[1, 1]
    C = ou_closed_forms(t, s)[0, 1] if t != s else ou_closed_forms(t, t)[0, 0]
    print(f"E v({t}) v({s}):  {Q:+.8f}  closed form {C:+.8f}")

# %% [markdown]
# Feedback gain K(t) = [6/(1-t)^2, 4/(1-t)].

# %%
for t in (0.0, 0.5, 0.9):
    print(f"K({t}) = {feedback_gain(table, sys, t)[0]}")

# %% [markdown]
# Two sample paths, as in the usual position / velocity / phase figures.

# %%
spec = BridgeSpec(sys, [0.0, 0.0], [0.0, 0.0])
paths = simulate_bridge(spec, table, grid, seed=1, n_paths=2)
out = Path("demo-output/ou-bridge")
out.mkdir(parents=True, exist_ok=True)
t = grid.nodes
for i, name in enumerate(["position", "velocity"]):
    line_chart([{"x": t, "y": p.states[:, i], "label": f"path {p.path_id}"} for p in paths],
               out / f"{name}.svg", title=f"{name} of bridge sample paths", xlabel="t", ylabel=name)
line_chart([{"x": p.states[:, 0], "y": p.states[:, 1], "label": f"path {p.path_id}"} for p in paths],
           out / "phase.svg", title="phase plane", xlabel="x", ylabel="v")
print("wrote", sorted(str(f) for f in out.glob("*.svg")))

# %% [markdown]
# Pointwise standard deviation envelope of the velocity for reference.

# %%
stats = bridge_statistics(table, sys, spec)
sd = np.sqrt(stats.cov_diag[:, 1, 1])
print("max velocity sd", sd.max(), "at t =", t[sd.argmax()])
