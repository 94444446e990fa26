# %% [markdown]
# # Random geometric graphs and box routing
#
# Nodes scattered uniformly on the unit torus connect within radius
# sqrt(c log n / n). Greedy routing hops toward a random target; box routing
# walks a coarse lattice of virtual boxes instead.

# %%
import math

from pathavg.experiments import find_regular_seeds
from pathavg.gossip import Protocol, auto_window, estimate_tc, initial_vector, make_rng, mean_messages, run_trial
from pathavg.poincare import box_congestion_cap, box_roadmap_congestion
from pathavg.topology import build_rgg, check_regularity, partition_boxes

# %% [markdown]
# Greedy route length grows with the number of radii needed to cross the
# torus, plus a couple of hops to get going and to finish.

# %%
for n in (500, 1000, 2000, 4000):
    g = build_rgg(n, 4.5, True, 0)
    hops = mean_messages(Protocol.PATH_GREEDY, g, 1000, seed=1) / 2
    print(f"n={n:5d}: {hops:5.2f} hops, sqrt(n/log n) = {math.sqrt(n / math.log(n)):5.2f}")

# %% [markdown]
# Box routing needs every box to hold a fair share of nodes. At this density
# that is far from guaranteed, so we look for seeds that qualify.

# %%
n, c, alpha = 1000, 25.0, 2.5
reg = sum(check_regularity(partition_boxes(build_rgg(n, c, True, s), alpha)).is_regular for s in range(50))
print(f"{reg}/50 graphs regular at n={n}")
seed = find_regular_seeds(n, c, alpha, 1)[0]
boxes = partition_boxes(build_rgg(n, c, True, seed), alpha)
rep = check_regularity(boxes)
print(f"seed {seed}: {boxes.k} boxes holding {rep.min_occupancy}..{rep.max_occupancy} nodes")

# %% [markdown]
# On a regular graph, box-path averaging converges quickly and the two-hop
# road map over boxes keeps every flight's usage below its cap.

# %%
x0 = initial_vector(n, make_rng(0))
tr = run_trial(x0, Protocol.PATH_BOX, boxes, 1_000_000, seed=3, record_every=16, stop_below=1e-7)
tc = estimate_tc(tr, *auto_window(tr))
print(f"T_c {tc:.1f}, {tr.mean_messages:.2f} msgs/round, cost {tc * tr.mean_messages:.0f}")
print(f"road-map congestion {box_roadmap_congestion(boxes)} (cap {box_congestion_cap(boxes)})")
