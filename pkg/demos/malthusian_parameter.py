"""Growth rate of the tree for a few weight functions."""
from patree import WeightFunction, check_condition_m, eval_rho_hat, kappa, solve_malthus

# Linear weights w(k) = k + beta grow at rate 1 + beta
for beta in (0.5, 1.0, 2.0):
    w = WeightFunction.linear(1, beta)
    res = solve_malthus(w)
    print(f"k+{beta}: lambda* = {res.lambda_star:.12f}  (1+beta = {1 + beta})")

# A hand-written start followed by a linear tail
w = WeightFunction.from_spec("table:5,0.5,3;tail=linear:0.5,1")
res = solve_malthus(w)
print(w.to_spec(), "->", res.lambda_star, "threshold", res.lambda_under)
print("rho_hat at the root:", eval_rho_hat(w, res.lambda_star))
print("mean age at childbearing:", kappa(w, res.lambda_star))

# Superlinear weights: the first vertex takes over, no Malthusian root
from patree.weightfn import UnboundedTail
print(check_condition_m(WeightFunction((), UnboundedTail(lambda k: (k + 1) ** 2))))
