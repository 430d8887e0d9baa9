"""Acceptance criteria, each at its stated tolerance.

Every test records one pass/fail line, printed in the terminal summary.
Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""
import math
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from patree.analytic import (
    pi_linear, pi_mass, steadiness_exact, steadiness_residual,
)
from patree.simulate import simulate_tree
from patree.stats import (
    compare_ancestors, compare_degree, compare_subtrees, gamma_theta_check, simulate_runs,
)
from patree.treecore import (
    SINGLETON, count_histories, decode, encode, enumerate_histories, from_parents,
    generation, trees_of_size, trees_up_to,
)
from patree.weightfn import (
    WeightFunction, degree_dist, eval_rho_hat, solve_malthus, xhat_second_moment,
)

K1 = WeightFunction.linear(1, 1)
SEED = 20240601


def test_01_malthusian_oracle(criterion):
    t0 = time.perf_counter()
    errs = {f"k+{b}": abs(solve_malthus(WeightFunction.linear(1, b)).lambda_star - (1 + b))
            for b in (0.5, 1.0, 2.0)}
    errs.update({f"const {c}": abs(solve_malthus(WeightFunction.constant(c)).lambda_star - c)
                 for c in (1.0, 3.0)})
    elapsed = time.perf_counter() - t0
    worst = max(errs.values())
    criterion(1, worst <= 1e-10 and elapsed < 1.0,
              f"max |lambda* - exact| = {worst:.2e}, {elapsed:.3f} s")


def test_02_rho_hat_oracle(criterion):
    worst_err, worst_bound, ok = 0.0, 0.0, True
    for beta in (0.5, 1.0, 2.0):
        # same weight function, once as a pure line, once through a table prefix
        forms = [WeightFunction.linear(1, beta),
                 WeightFunction.from_spec(f"table:{beta},{beta + 1},{beta + 2};"
                                          f"tail=linear:1,{beta}")]
        for w in forms:
            for lam in (1.5, 2.0, 3.0, 10.0):
                r = eval_rho_hat(w, lam)
                err = abs(r.value - beta / (lam - 1))
                ok &= err <= r.error_bound <= 1e-10
                worst_err = max(worst_err, err)
                worst_bound = max(worst_bound, r.error_bound)
    criterion(2, ok, f"max error {worst_err:.2e}, max reported bound {worst_bound:.2e}")


@pytest.fixture(scope="module")
def desk_runs():
    t0 = time.perf_counter()
    runs = simulate_runs(K1, 1_000_000, 8, SEED, subtree_cap=4, ancestor_ks=(1,))
    return runs, time.perf_counter() - t0


def test_03_degree_law(criterion, desk_runs):
    runs, elapsed = desk_runs
    rep = compare_degree(K1, 1_000_000, 8, SEED, kmax=20, censuses=runs)
    devs = [abs(rep.row(k)[1] - 4 / ((k + 1) * (k + 2) * (k + 3))) for k in range(11)]
    ok = max(devs) <= 0.005 and rep.tv_distance < 0.01 and elapsed < 120
    criterion(3, ok, f"max |p_hat(k) - p(k)|, k<=10: {max(devs):.2e}; "
                     f"TV {rep.tv_distance:.2e}; 8 runs x 1e6 in {elapsed:.1f} s")


def test_04_subtree_law(criterion, desk_runs):
    runs, _ = desk_runs
    rep = compare_subtrees(K1, 1_000_000, 8, SEED, max_size=4, censuses=runs)
    dev = abs(rep.row("1,0")[1] - 2 / 15)
    criterion(4, dev <= 0.005 and rep.tv_distance < 0.01,
              f"|freq{{root,1}} - 2/15| = {dev:.2e}; TV {rep.tv_distance:.2e}")


def test_05_marked_ancestor_law(criterion, desk_runs):
    runs, _ = desk_runs
    rep = compare_ancestors(K1, 1_000_000, 8, SEED, k=1, max_size=4, censuses=runs)
    min_p = min(p for _, _, p in rep.extra["mark_uniformity"].values())
    marginal = rep.extra["marginal"]
    devs = []
    for t in trees_up_to(4):
        width = len(generation(t, 1))
        if width:
            devs.append(abs(marginal.row(encode(t))[1] - pi_linear(t, 1.0) * width))
    ok = min_p > 0.001 and max(devs) <= 0.005
    criterion(5, ok, f"min mark-uniformity p = {min_p:.3g}; "
                     f"max marginal deviation {max(devs):.2e}")


def test_06_enumeration_oracles(criterion):
    mismatched = [encode(t) for n in range(1, 8) for t in trees_of_size(n)
                  if count_histories(t) != len(enumerate_histories(t))]
    checked = sum(len(trees_of_size(n)) for n in range(1, 8))
    worst = max(abs(pi_linear(t, b) - pi_mass(t, WeightFunction.linear(1, b), 1 + b))
                for b in (0.5, 1.0, 2.0) for t in trees_up_to(6))
    criterion(6, not mismatched and worst <= 1e-10,
              f"{checked} trees, {len(mismatched)} history-count mismatches; "
              f"max |pi_linear - pi_mass| = {worst:.2e}")


def test_07_exact_identities(criterion):
    lam = solve_malthus(K1).lambda_star
    d = degree_dist(K1, 1000, lambda_star=lam)
    gap0 = abs(d.masses[0] - pi_mass(SINGLETON, K1, lam))
    tele = abs(math.fsum(d.masses) + d.tail_mass - 1)
    rng = random.Random(SEED)
    trees = [from_parents([None] + [rng.randrange(i) for i in range(1, rng.randint(1, 50))])
             for _ in range(100)]
    steady = sum(steadiness_exact(t) for t in trees)
    ok = gap0 <= 1e-12 and tele <= 1e-12 and steady == 100
    criterion(7, ok, f"|p(0) - pi(singleton)| = {gap0:.1e}; telescoping error {tele:.1e}; "
                     f"steadiness exact on {steady}/100 random trees")


def test_08_steadiness_of_limit(criterion):
    sums = []
    target = None
    for extra in range(7):
        lhs, target = steadiness_residual(K1, 2.0, SINGLETON, extra)
        sums.append(lhs)
    monotone = all(a <= b for a, b in zip(sums, sums[1:]))
    frac = sums[-1] / target
    criterion(8, monotone and frac >= 0.95,
              f"monotone={monotone}; partial sums {', '.join(f'{s:.4f}' for s in sums)}; "
              f"reaches {frac:.1%} of pi = {target:.4f} at extra=6 (needs 95%)")


def test_09_theta_gamma_law(criterion):
    t0 = time.perf_counter()
    res = gamma_theta_check(1.0, 1.0, 100_000, 2000, SEED)
    elapsed = time.perf_counter() - t0
    ok = abs(res.sample_mean - 1) <= 3 * res.stderr and res.p_value > 0.001 and elapsed < 300
    criterion(9, ok, f"mean {res.sample_mean:.4f} +/- {res.stderr:.4f}; "
                     f"KS p = {res.p_value:.3g}; {elapsed:.1f} s")


def _second_moment_mc(lam, replicas, births, seed, chunk=5000):
    """Replicas of X = sum_k exp(-lam sigma_k) for w(k) = k + 1, truncated at ``births``.

    Returns the plain mean of X^2 and the control-variate estimate that uses
    E X = rho_hat(lam*) = 1.
    """
    rng = np.random.default_rng(seed)
    rates = np.arange(1, births + 1, dtype=float)
    xs = []
    for _ in range(replicas // chunk):
        sigma = np.cumsum(rng.standard_exponential((chunk, births)) / rates, axis=1)
        xs.append(np.exp(-lam * sigma).sum(axis=1))
    x = np.concatenate(xs)
    y = x * x
    c = np.cov(y, x)[0, 1] / np.var(x, ddof=1)
    return float(y.mean()), float(np.mean(y - c * (x - 1.0)))


def test_10_second_moment(criterion):
    value = xhat_second_moment(K1, 2.0)
    plain, controlled = _second_moment_mc(2.0, 100_000, 2000, SEED)
    rel = abs(value - controlled) / controlled
    criterion(10, value >= 1 and rel <= 0.01,
              f"series {value:.6f}; Monte Carlo {controlled:.4f} "
              f"(plain mean {plain:.4f}); relative gap {rel:.2%}")


def test_11_performance(criterion):
    simulate_tree(K1, 1000, 0)  # compile outside the timed region
    t0 = time.perf_counter()
    big = simulate_tree(K1, 1_000_001, SEED)
    elapsed = time.perf_counter() - t0
    small = simulate_tree(K1, 100_001, SEED)

    def footprint(s):
        arrays = (s.parent, s.child_count, s.vertex_weight, s.birth_times, s.omega, s.index.tree)
        return sum(a.nbytes for a in arrays)

    per_vertex = (footprint(big) / big.size, footprint(small) / small.size)
    linear = abs(per_vertex[0] / per_vertex[1] - 1) < 0.05
    criterion(11, elapsed <= 10 and linear,
              f"1e6 attachments in {elapsed:.2f} s; "
              f"{per_vertex[1]:.0f} vs {per_vertex[0]:.0f} bytes/vertex at 1e5 vs 1e6")


def test_12_reproducibility(criterion, tmp_path):
    commands = [
        ["simulate", "--weight", "table:2,1;tail=linear:1,1", "--vertices", "5000",
         "--runs", "2", "--seed", "77", "--continuous",
         "--census", "degrees,subtrees:4,ancestors:1,2"],
        ["compare", "ancestors", "--weight", "linear:1,1", "--vertices", "20000",
         "--runs", "2", "--seed", "77"],
        ["theta", "--weight", "linear:2,1", "--vertices", "2000", "--samples", "50",
         "--seed", "77"],
    ]
    identical, files = True, 0
    for i, argv in enumerate(commands):
        outputs = []
        for rep in ("a", "b"):
            d = tmp_path / f"{i}{rep}"
            d.mkdir()
            subprocess.run([sys.executable, "-m", "patree", *argv, "--no-timestamp",
                            "--out", str(d / "out")], check=True)
            outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        identical &= outputs[0] == outputs[1] and bool(outputs[0])
        files += len(outputs[0])
    criterion(12, identical, f"{files} output files byte-identical across repeated runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
