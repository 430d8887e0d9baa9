"""Random growth constant: Gamma distributed for linear weights."""
import numpy as np

from patree import WeightFunction, theta_samples, xhat_second_moment
from patree.stats import gamma_theta_check

res = gamma_theta_check(alpha=1.0, beta=1.0, n_vertices=100_000, samples=2000, seed=9)
print(res)

# shape a = beta / (alpha + beta), so smaller beta means a more skewed constant
for beta in (0.25, 1.0, 4.0):
    th = theta_samples(WeightFunction.linear(1, beta), 20_000, 500, seed=2)
    a = beta / (1 + beta)
    print(f"beta={beta}: mean {th.mean():.3f}, var {th.var():.3f} (Gamma var {1 / a:.3f})")

print("E[xi_hat^2] for k+1:", xhat_second_moment(WeightFunction.linear(1, 1), 2.0))
print(np.percentile(theta_samples(WeightFunction.linear(1, 1), 10_000, 1000, 4), [5, 50, 95]))
