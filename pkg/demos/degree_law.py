"""Limiting degree law against a simulated tree."""
import numpy as np

from patree import WeightFunction, census, degree_dist, simulate_tree

w = WeightFunction.linear(1, 1)
theory = degree_dist(w, kmax=10)

tree = simulate_tree(w, 1_000_000, seed=1)
counts = census(tree).degree_hist
n = tree.n_vertices

print(" k   theory     simulated")
for k, p in enumerate(theory.masses):
    print(f"{k:2d}  {p:.6f}   {counts.get(k, 0) / n:.6f}")
print(f"mass above k={theory.kmax}: {theory.tail_mass:.6f}")

# For constant weights the law is geometric with ratio 1/2
geo = degree_dist(WeightFunction.constant(3), 5).masses
print(np.round(geo, 6), "vs", 0.5 ** np.arange(1, 7))
