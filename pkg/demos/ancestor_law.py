"""What a random vertex sees when it looks k generations up."""
from patree import WeightFunction
from patree.stats import compare_ancestors

w = WeightFunction.linear(1, 1)
report = compare_ancestors(w, n_vertices=200_000, runs=4, seed=5, k=1, max_size=4)

# every mark of a given tree carries the same mass
print(report.to_csv())
print("uniformity over marks:", report.extra["mark_uniformity"])

# summing the marks gives the size-biased law of the parent's progeny
print(report.extra["marginal"].to_csv())
