"""The fringe: how often each small tree hangs below a random vertex."""
from patree import WeightFunction, count_histories, encode, pi_linear, pi_table
from patree.stats import compare_subtrees

w = WeightFunction.linear(1, 1)
table = pi_table(w, max_size=4)
for code, mass in table.masses.items():
    print(f"{code:10s} {mass:.6f}")
print("covered:", table.covered_mass)

# closed form for w(k) = k + beta
from patree import decode
g = decode("2,1,0,0")
print(encode(g), "orderings:", count_histories(g), "closed form:", pi_linear(g, 1.0))

report = compare_subtrees(w, n_vertices=200_000, runs=4, seed=3, max_size=4)
print(report.to_csv())
print("TV distance:", report.tv_distance, "chi-square:", report.chi_square)
