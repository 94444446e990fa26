# %% [markdown]
# # Averaging on a torus grid
#
# Three ways for 144 nodes on a 12 x 12 torus to agree on the mean of their
# readings: pairwise gossip with a neighbour, pairwise gossip with a far node
# reached by a one-turn route, and averaging everything along that route.

# %%
import numpy as np

from pathavg.gossip import Protocol, auto_window, estimate_tc, initial_vector, make_rng, run_trial
from pathavg.spectral import exact_ew_grid, lambda2, time_bounds
from pathavg.topology import build_grid

grid = build_grid(12)
x0 = initial_vector(grid.n, make_rng(1))
print(f"{grid.n} nodes, initial spread {x0.std():.3f}")

# %% [markdown]
# Each run stops once the error has fallen by 10^7. The consensus time is read
# off the slope of the log error; multiplying by the mean number of one-hop
# messages per round gives the cost.

# %%
for proto in (Protocol.STANDARD, Protocol.GEOGRAPHIC, Protocol.PATH_HV):
    tr = run_trial(x0, proto, grid, 5_000_000, seed=7, record_every=8, stop_below=1e-7)
    tc = estimate_tc(tr, *auto_window(tr))
    print(f"{proto.value:>11}: T_c {tc:8.1f} rounds, {tr.mean_messages:5.2f} msgs/round, "
          f"cost {tc * tr.mean_messages:9.0f}")

# %% [markdown]
# Path averaging needs far fewer rounds, and enough fewer that its total
# message count also wins. The spectrum of the expected averaging matrix
# predicts its consensus time.

# %%
lam = lambda2(exact_ew_grid(12)).lambda2
tb = time_bounds(lam, 1e-2)
print(f"lambda2 = {lam:.6f}; T_c <= {tb.tc_upper:.1f} (loose {tb.tc_upper_loose:.1f})")

# %% [markdown]
# Repeating the path-averaging run across seeds shows how tight the bound is.

# %%
tcs = []
for s in range(10):
    tr = run_trial(x0, Protocol.PATH_HV, grid, 200_000, seed=s, stop_below=1e-7)
    tcs.append(estimate_tc(tr, *auto_window(tr)))
print(f"T_c over 10 seeds: mean {np.mean(tcs):.1f}, max {np.max(tcs):.1f}, bound {tb.tc_upper:.1f}")
