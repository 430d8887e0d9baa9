import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patree.errors import BracketingFailed, InvalidWeight, NonConvergent
from patree.weightfn import (
    DominatedLinearTail, UnboundedTail, WeightFunction, check_condition_m, degree_dist,
    degree_dist_linear, eval_rho_hat, kappa, lambda_underline, solve_malthus,
    xhat_second_moment,
)


def test_from_spec_forms():
    assert WeightFunction.from_spec("linear:1,1")(3) == 4.0
    assert WeightFunction.from_spec("const:3")(100) == 3.0
    w = WeightFunction.from_spec("table:1,2,4;tail=linear:3,-2")
    assert [w(k) for k in range(5)] == [1, 2, 4, 7, 10]
    w = WeightFunction.from_spec("table:5;tail=const:2")
    assert [w(k) for k in range(3)] == [5, 2, 2]


@pytest.mark.parametrize("bad", ["", "linear:1", "const:", "quad:1,2", "table:1,2",
                                 "linear:1,x", "table:1;tail=linear:1", "linear:1,-1",
                                 "const:-3", "table:0;tail=const:1", "linear:-1,5"])
def test_from_spec_rejects(bad):
    with pytest.raises(InvalidWeight):
        WeightFunction.from_spec(bad)


reals = st.integers(1, 400).map(lambda n: n / 8)


@given(a=reals, b=reals, prefix=st.lists(reals, max_size=4), const=st.booleans())
def test_spec_round_trip(a, b, prefix, const):
    tail = f"const:{b}" if const else f"linear:{a},{b}"
    spec = f"table:{','.join(map(str, prefix))};tail={tail}" if prefix else tail
    w = WeightFunction.from_spec(spec)
    again = WeightFunction.from_spec(w.to_spec())
    assert again.to_spec() == w.to_spec()
    assert [again(k) for k in range(8)] == [w(k) for k in range(8)]


def test_values_matches_call():
    w = WeightFunction.from_spec("table:0.5,7;tail=linear:2,1")
    assert np.array_equal(w.values(10), [w(k) for k in range(10)])
    assert np.array_equal(w.values(10, 3), [w(k) for k in range(3, 10)])


def test_affine_detection():
    assert WeightFunction.linear(2, 1).is_affine
    assert WeightFunction.from_spec("table:1;tail=linear:1,1").is_affine
    assert not WeightFunction.from_spec("table:2;tail=linear:1,1").is_affine
    assert not WeightFunction.constant(1).is_affine


def test_dominated_tail_bound_enforced():
    w = WeightFunction((), DominatedLinearTail(1.0, 0.0, lambda k: 2.0 * k + 1))
    with pytest.raises(InvalidWeight):
        w(5)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("lam", [1.5, 2.0, 3.0, 10.0])
def test_rho_hat_linear(beta, lam):
    r = eval_rho_hat(WeightFunction.linear(1, beta), lam)
    assert abs(r.value - beta / (lam - 1)) <= max(r.error_bound, 1e-15)


def test_rho_hat_with_prefix_matches_direct_series():
    w = WeightFunction.from_spec("table:3,0.5,2;tail=const:1.5")
    lam = 2.5
    # direct partial sum; the constant tail makes the remainder geometric
    t, total = 1.0, 0.0
    for k in range(4000):
        t *= w(k) / (lam + w(k))
        total += t
    assert eval_rho_hat(w, lam).value == pytest.approx(total, rel=1e-13)


def test_rho_hat_below_threshold():
    with pytest.raises(NonConvergent):
        eval_rho_hat(WeightFunction.linear(1, 1), 1.0)


def test_malthus_constant_and_linear():
    assert solve_malthus(WeightFunction.constant(3)).lambda_star == pytest.approx(3, abs=1e-12)
    assert solve_malthus(WeightFunction.linear(2, 1)).lambda_star == pytest.approx(3, abs=1e-12)
    assert lambda_underline(WeightFunction.linear(2, 1)) == 2.0


def test_malthus_prefix_consistent_with_tail():
    a = solve_malthus(WeightFunction.from_spec("table:1;tail=linear:1,1")).lambda_star
    assert a == pytest.approx(2.0, abs=1e-12)


@given(c=st.floats(0.1, 50))
@settings(max_examples=25, deadline=None)
def test_scale_equivariance(c):
    w = WeightFunction.from_spec("table:2,0.5;tail=linear:1,0.25")
    lam = solve_malthus(w).lambda_star
    assert solve_malthus(w.scaled(c)).lambda_star == pytest.approx(c * lam, rel=1e-10)


def test_dominated_tail_malthus():
    # w(k) = k + 1 exactly, but only declared as dominated by the line k + 1
    w = WeightFunction((), DominatedLinearTail(1.0, 1.0, lambda k: k + 1.0))
    res = solve_malthus(w, tol=1e-4)
    assert res.lambda_star == pytest.approx(2.0, abs=1e-4)
    assert not res.lambda_under_exact


def test_condition_m_linear_holds():
    assert check_condition_m(WeightFunction.linear(1, 1)).holds


def test_root_close_to_threshold():
    # w(0) = w(1) = 1e-3, then k - 0.999: rho_hat = r0 (1 + 1e-3/(lam-1)),
    # so lam* - 1 solves 1e-6/e = 1 + e
    w = WeightFunction.from_spec("table:1e-3;tail=linear:1,-0.999")
    assert check_condition_m(w).holds
    eps = (-1 + math.sqrt(1 + 4e-6)) / 2
    assert solve_malthus(w).lambda_star == pytest.approx(1 + eps, abs=1e-15)


def test_root_below_resolution():
    with pytest.raises(BracketingFailed, match="double-precision"):
        solve_malthus(WeightFunction.from_spec("table:1e-200;tail=linear:1,1"))


def test_condition_m_fails_for_dominated_tail():
    # declared under the line k + 1 but actually constant 1/2: rho_hat(1) = 1/2
    w = WeightFunction((), DominatedLinearTail(1.0, 1.0, lambda k: 0.5))
    assert not check_condition_m(w).holds
    with pytest.raises(BracketingFailed, match="condition"):
        solve_malthus(w)


def test_condition_m_superlinear():
    w = WeightFunction((), UnboundedTail(lambda k: 2.0 ** k))
    res = check_condition_m(w)
    assert not res.holds and "terms do not vanish" in res.diagnostic


def test_degree_dist_constant_geometric():
    d = degree_dist(WeightFunction.constant(3), 4)
    assert np.allclose(d.masses, [0.5, 0.25, 0.125, 0.0625, 0.03125], atol=1e-12)
    assert d.tail_mass == pytest.approx(0.03125, abs=1e-12)


@pytest.mark.parametrize("alpha,beta", [(1, 1), (1, 0.5), (2, 3)])
def test_degree_dist_linear_closed_form(alpha, beta):
    d = degree_dist(WeightFunction.linear(alpha, beta), 30)
    closed = [degree_dist_linear(alpha, beta, k) for k in range(31)]
    assert np.allclose(d.masses, closed, rtol=1e-10, atol=0)


def test_degree_dist_beta_one():
    d = degree_dist(WeightFunction.linear(1, 1), 10)
    for k, p in enumerate(d.masses):
        assert p == pytest.approx(4 / ((k + 1) * (k + 2) * (k + 3)), rel=1e-12)


def test_degree_dist_telescopes():
    w = WeightFunction.from_spec("table:4,1,0.5;tail=linear:0.5,2")
    d = degree_dist(w, 500)
    assert math.fsum(d.masses) + d.tail_mass == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_kappa_linear(beta):
    w = WeightFunction.linear(1, beta)
    assert kappa(w, 1 + beta) == pytest.approx(1 / beta, rel=1e-12)


def test_kappa_matches_finite_difference():
    w = WeightFunction.from_spec("table:2,0.3,5;tail=const:1.2")
    lam = solve_malthus(w).lambda_star
    h = 1e-5
    fd = -(eval_rho_hat(w, lam + h).value - eval_rho_hat(w, lam - h).value) / (2 * h)
    assert kappa(w, lam) == pytest.approx(fd, rel=1e-8)


def test_second_moment_constant_weight():
    # w = 1, lambda = 1: X = U(1 + X') with U uniform, so E X^2 = (3 + E X^2) / 3
    assert xhat_second_moment(WeightFunction.constant(1), 1.0) == pytest.approx(1.5, abs=1e-12)


def test_second_moment_linear():
    assert xhat_second_moment(WeightFunction.linear(1, 1), 2.0) == pytest.approx(7 / 3, abs=1e-10)


def test_condition_m_polynomial_superlinear():
    res = check_condition_m(WeightFunction((), UnboundedTail(lambda k: (k + 1.0) ** 2)))
    assert not res.holds and "superlinearly" in res.diagnostic
    res = check_condition_m(WeightFunction((), UnboundedTail(lambda k: math.sqrt(k + 1.0))))
    assert not res.holds and "cannot decide" in res.diagnostic
