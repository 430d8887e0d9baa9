"""Theory-versus-simulation comparisons."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .analytic import pi_mass
from .errors import Unnormalized
from .simulate import CensusReport, census, run_seed, simulate_tree, theta_samples
from .treecore import decode, encode, generation, trees_up_to
from .weightfn import WeightFunction, degree_dist, solve_malthus

OTHER = "OTHER"
NORM_TOL = 1e-6


def _check_normalized(table: Mapping, name: str) -> None:
    s = math.fsum(table.values())
    if abs(s - 1.0) > NORM_TOL:
        raise Unnormalized(f"{name} sums to {s!r}, not 1")


def tv_distance(p: Mapping, q: Mapping) -> float:
    """Total variation distance between two tables that each sum to 1.

    Residual tail mass must be carried explicitly, e.g. under ``"OTHER"``.
    """
    _check_normalized(p, "p")
    _check_normalized(q, "q")
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def chi_square(observed: Sequence[float], expected_probs: Sequence[float]):
    """Pearson chi-square with cells of expected count < 5 merged.

    Returns ``(statistic, dof, p_value, n_merged)``.
    """
    obs = np.asarray(observed, float)
    probs = np.asarray(expected_probs, float)
    exp = probs / probs.sum() * obs.sum()
    small = exp < 5
    if small.any():
        obs = np.append(obs[~small], obs[small].sum())
        exp = np.append(exp[~small], exp[small].sum())
        if exp[-1] == 0:
            obs, exp = obs[:-1], exp[:-1]
    dof = len(obs) - 1
    if dof < 1:
        return 0.0, 0, 1.0, int(small.sum())
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return stat, dof, float(sps.chi2.sf(stat, dof)), int(small.sum())


@dataclass
class ComparisonReport:
    outcomes: list
    theory: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    tv_distance: float
    chi_square: tuple[float, int, float]
    note: str = ""
    extra: dict = field(default_factory=dict)

    def row(self, outcome):
        i = self.outcomes.index(outcome)
        return self.theory[i], self.empirical[i], self.stderr[i]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("outcome,theory,empirical,stderr\n")
        for o, t, e, s in zip(self.outcomes, self.theory, self.empirical, self.stderr):
            buf.write(f'"{_outcome_str(o)}",{float(t)!r},{float(e)!r},{float(s)!r}\n')
        return buf.getvalue()

    def summary(self, **config) -> dict:
        stat, dof, p = self.chi_square
        out = {"tv": self.tv_distance,
               "chi_square": {"statistic": stat, "dof": dof, "p_value": p},
               "note": self.note, "config": config}
        for k, v in self.extra.items():
            if not isinstance(v, ComparisonReport):
                out[k] = v
        return out

    def summary_json(self, **config) -> str:
        return json.dumps(self.summary(**config), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(type(x))


def _outcome_str(o) -> str:
    if isinstance(o, tuple):
        return "|".join(str(x) for x in o)
    return str(o)


def pooled_report(theory: Mapping, run_counts: Sequence[Mapping],
                  run_totals: Sequence[int]) -> ComparisonReport:
    """Compare per-run count tables with a theoretical table carrying ``OTHER``.

    Outcomes observed but absent from ``theory`` count towards ``OTHER``.
    Pooled frequencies weight runs by their vertex counts; standard errors
    come from the spread of per-run frequencies.
    """
    _check_normalized(theory, "theory")
    outcomes = [o for o in theory if o != OTHER] + [OTHER]
    known = set(outcomes)
    counts = np.zeros((len(run_counts), len(outcomes)))
    pos = {o: i for i, o in enumerate(outcomes)}
    for r, table in enumerate(run_counts):
        for o, c in table.items():
            counts[r, pos[o] if o in known else pos[OTHER]] += c
    totals = np.asarray(run_totals, float)
    pooled = counts.sum(0) / totals.sum()
    per_run = counts / totals[:, None]
    runs = len(run_counts)
    if runs > 1:
        stderr = per_run.std(axis=0, ddof=1) / math.sqrt(runs)
    else:
        stderr = np.sqrt(pooled * (1 - pooled) / totals.sum())
    th = np.array([theory.get(o, 0.0) for o in outcomes])
    emp_table = dict(zip(outcomes, pooled))
    stat, dof, p, merged = chi_square(counts.sum(0), th)
    note = f"{merged} outcome(s) with expected count < 5 merged for chi-square"
    return ComparisonReport(outcomes, th, pooled, stderr, tv_distance(theory, emp_table),
                            (stat, dof, p), note)


def simulate_runs(w: WeightFunction, n_vertices: int, runs: int, seed: int,
                  subtree_cap: int = 4, ancestor_ks=(), continuous: bool = False
                  ) -> list[CensusReport]:
    """Censuses of ``runs`` independent trees, in run-index order."""
    out = []
    for i in range(runs):
        state = simulate_tree(w, n_vertices, run_seed(seed, i), continuous)
        out.append(census(state, subtree_cap, ancestor_ks))
    return out


def compare_degree(w: WeightFunction, n_vertices: int, runs: int, seed: int,
                   kmax: int = 20, censuses=None) -> ComparisonReport:
    if censuses is None:
        censuses = simulate_runs(w, n_vertices, runs, seed)
    theory = degree_dist(w, kmax).as_table()
    return pooled_report(theory, [c.degree_hist for c in censuses],
                         [c.n_vertices for c in censuses])


def compare_subtrees(w: WeightFunction, n_vertices: int, runs: int, seed: int,
                     max_size: int = 4, censuses=None) -> ComparisonReport:
    lam = solve_malthus(w).lambda_star
    if censuses is None:
        censuses = simulate_runs(w, n_vertices, runs, seed, subtree_cap=max_size)
    theory = {encode(t): pi_mass(t, w, lam) for t in trees_up_to(max_size)}
    theory[OTHER] = 1.0 - math.fsum(theory.values())
    return pooled_report(theory, [c.subtree_hist for c in censuses],
                         [c.n_vertices for c in censuses])


def compare_ancestors(w: WeightFunction, n_vertices: int, runs: int, seed: int,
                      k: int = 1, max_size: int = 4, censuses=None) -> ComparisonReport:
    """Marked ``k``-th-ancestor law against ``pi``.

    ``extra`` holds the unmarked marginal report (``"marginal"``) and, for
    every tree with several marks, a chi-square test that the mark counts are
    equal (``"mark_uniformity"``: code -> (statistic, dof, p_value)).
    """
    lam = solve_malthus(w).lambda_star
    if censuses is None:
        censuses = simulate_runs(w, n_vertices, runs, seed, subtree_cap=max_size,
                                 ancestor_ks=(k,))
    marked: dict = {}
    marginal: dict = {}
    marks_of: dict = {}
    for t in trees_up_to(max_size):
        gen = generation(t, k)
        if not gen:
            continue
        p = pi_mass(t, w, lam)
        code = encode(t)
        marks_of[code] = [".".join(map(str, u)) for u in gen]
        for m in marks_of[code]:
            marked[(code, m)] = p
        marginal[code] = p * len(gen)
    marked[OTHER] = 1.0 - math.fsum(marked.values())
    marginal[OTHER] = 1.0 - math.fsum(marginal.values())

    run_marked, run_marginal, totals = [], [], []
    for c in censuses:
        table = c.ancestor_hist[k]
        rm, rg = {}, {}
        for (code, m), cnt in table.items():
            key = OTHER if code == OTHER else (code, m)
            rm[key] = rm.get(key, 0) + cnt
            g = OTHER if code == OTHER else code
            rg[g] = rg.get(g, 0) + cnt
        run_marked.append(rm)
        run_marginal.append(rg)
        totals.append(sum(table.values()))
    report = pooled_report(marked, run_marked, totals)
    report.extra["marginal"] = pooled_report(marginal, run_marginal, totals)

    uniform = {}
    for code, marks in marks_of.items():
        if len(marks) < 2:
            continue
        obs = [sum(r.get((code, m), 0) for r in run_marked) for m in marks]
        if sum(obs) == 0:
            continue
        stat, dof, p, _ = chi_square(obs, [1.0] * len(marks))
        uniform[code] = (stat, dof, p)
    report.extra["mark_uniformity"] = uniform
    return report


@dataclass(frozen=True)
class GammaCheck:
    ks_statistic: float
    p_value: float
    sample_mean: float
    stderr: float
    shape: float


def gamma_theta_check(alpha: float, beta: float, n_vertices: int, samples: int,
                      seed: int) -> GammaCheck:
    """KS test of growth-constant draws against Gamma(shape a, rate a), a = beta/(alpha+beta)."""
    w = WeightFunction.linear(alpha, beta)
    th = theta_samples(w, n_vertices, samples, seed)
    a = beta / (alpha + beta)
    res = sps.kstest(th, sps.gamma(a, scale=1 / a).cdf)
    return GammaCheck(float(res.statistic), float(res.pvalue), float(th.mean()),
                      float(th.std(ddof=1) / math.sqrt(samples)), a)
