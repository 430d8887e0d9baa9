"""Preferential attachment trees with a general weight function.

Exact limit laws (Malthusian parameter, degree and subtree laws), a fast
simulator, and theory-versus-simulation comparisons.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .weightfn import (
    WeightFunction, check_condition_m, degree_dist, eval_rho_hat, kappa, lambda_underline,
    solve_malthus, xhat_second_moment,
)
from .treecore import (
    OrderedTree, SINGLETON, count_histories, decode, encode, enumerate_histories,
    from_parents, generation, trees_of_size, trees_up_to, validate,
)
from .analytic import (
    ancestor_subtree_mass, marked_pi, pi_linear, pi_mass, pi_table, steadiness_exact,
    steadiness_residual,
)
from .simulate import census, run_seed, simulate_tree, theta_samples
from .stats import (
    compare_ancestors, compare_degree, compare_subtrees, gamma_theta_check, tv_distance,
)
