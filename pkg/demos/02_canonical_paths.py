# %% [markdown]
# # Bounding the second eigenvalue with canonical paths
#
# Pick one path per ordered pair of nodes, charge each path's resistance to
# the flights it uses, and the worst-loaded flight gives 1 - 1/kappa as an
# upper bound on lambda2.

# %%
from pathavg.poincare import build_direct_roadmap, build_grid_roadmap, kappa
from pathavg.spectral import exact_ew_grid, exact_ew_standard, lambda2
from pathavg.topology import build_complete

# %% [markdown]
# On the complete graph every pair flies direct and the bound is exact.

# %%
for n in (5, 10, 20):
    E = exact_ew_standard(build_complete(n))
    pr = kappa(build_direct_roadmap(n), E)
    print(f"K_{n}: kappa {pr.kappa:.3f}, bound {pr.lambda2_bound:.6f}, lambda2 {lambda2(E).lambda2:.6f}")

# %% [markdown]
# On the grid each pair stops at the lattice point halfway along its route.
# No flight carries more than eight paths. The bounded spectral gap comes out
# about ten times smaller than the true one, at every size tried.

# %%
print(f"{'side':>4} {'lambda2':>10} {'bound':>10} {'gap ratio':>9} {'max use':>7}")
for side in range(4, 13, 2):
    E = exact_ew_grid(side)
    lam = lambda2(E).lambda2
    pr = kappa(build_grid_roadmap(side, E), E)
    print(f"{side:>4} {lam:10.6f} {pr.lambda2_bound:10.6f} "
          f"{(1 - lam) / (1 - pr.lambda2_bound):9.2f} {pr.max_congestion:>7}")
