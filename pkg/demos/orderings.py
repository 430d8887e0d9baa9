"""Birth orders of a tree where each prefix is still a tree."""
from patree import count_histories, decode, enumerate_histories, trees_of_size

g = decode("2,1,0,1,0")
for h in enumerate_histories(g):
    print(h.order)
print("count from subtree sizes:", count_histories(g))

# all ordered trees on n vertices, with the number of orderings
for n in range(1, 6):
    trees = trees_of_size(n)
    print(n, len(trees), sorted(count_histories(t) for t in trees))
