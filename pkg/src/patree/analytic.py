"""Limiting subtree law of the random tree and related exact identities."""
from __future__ import annotations

import io
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidMark, TooLarge
from .treecore import (
    HISTORY_CAP, SINGLETON, OrderedTree, ROOT, ancestor, decode, encode, generation, shift,
    subtree_at, trees_up_to, count_histories,
)
from .weightfn import WeightFunction, falling_factorial_log, solve_malthus


@dataclass(frozen=True)
class TreeDistribution:
    masses: dict[str, float]
    max_size: int
    covered_mass: float
    lambda_star: float

    def as_table(self) -> dict:
        table = dict(self.masses)
        table["OTHER"] = max(0.0, 1.0 - self.covered_mass)
        return table

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# covered_mass={self.covered_mass!r} lambda_star={self.lambda_star!r}\n")
        buf.write("canonical_code,mass\n")
        for code, m in self.masses.items():
            buf.write(f'"{code}",{m!r}\n')
        return buf.getvalue()


def _downset_sum(tree: OrderedTree, weights, lam: float) -> tuple[float, float]:
    """Sum over histories of prod_i 1/(lam + W(G(s,i))), i < |G|-1, and W(G).

    Dynamic programming over prefix trees, encoded as bitmasks of preorder
    positions.  Adding vertex ``x`` whose parent already holds ``j-1``
    children raises the total weight by ``w(j) - w(j-1) + w(0)``.
    """
    labels = list(tree.labels())
    index = {x: i for i, x in enumerate(labels)}
    n = len(labels)
    pred = [-1] * n
    delta = [0.0] * n
    for i, x in enumerate(labels[1:], 1):
        j = x[-1]
        pred[i] = index[x[:-1] + (j - 1,)] if j > 1 else index[x[:-1]]
        delta[i] = weights[j] - weights[j - 1] + weights[0]

    layer = {1: (1.0, weights[0])}
    for _ in range(n - 1):
        nxt: dict[int, list] = {}
        for mask, (acc, W) in layer.items():
            step = acc / (lam + W)
            for i in range(1, n):
                bit = 1 << i
                if not mask & bit and mask >> pred[i] & 1:
                    m2 = mask | bit
                    if m2 in nxt:
                        nxt[m2][0] += step
                    else:
                        nxt[m2] = [step, W + delta[i]]
        layer = {m: (v[0], v[1]) for m, v in nxt.items()}
    (acc, W), = layer.values()
    return acc, W


def _weights_for(w: WeightFunction, tree: OrderedTree) -> list[float]:
    return [float(x) for x in w.values(max(tree.code) + 2)]


def pi_mass(tree: OrderedTree, w: WeightFunction, lambda_star: float,
            cap: int = HISTORY_CAP) -> float:
    """Limiting fraction of vertices whose progeny equals ``tree``.

    The attachment-weight product is the same for every history,
    ``prod_x prod_{j<deg(x)} w(j)``, so it is factored out of the sum.
    """
    if tree.size > cap:
        raise TooLarge(f"tree of size {tree.size} exceeds cap {cap}")
    weights = _weights_for(w, tree)
    log_num = sum(math.log(weights[j]) for d in tree.code for j in range(d))
    acc, W = _downset_sum(tree, weights, lambda_star)
    return math.exp(log_num) * acc * lambda_star / (lambda_star + W)


def pi_table(w: WeightFunction, max_size: int, lambda_star: float | None = None,
             cap: int = HISTORY_CAP) -> TreeDistribution:
    if max_size > cap:
        raise TooLarge(f"max_size {max_size} exceeds cap {cap}")
    lam = solve_malthus(w).lambda_star if lambda_star is None else lambda_star
    masses = {encode(t): pi_mass(t, w, lam, cap) for t in trees_up_to(max_size)}
    return TreeDistribution(masses, max_size, math.fsum(masses.values()), lam)


def pi_linear(tree: OrderedTree, beta: float) -> float:
    """Closed form of the subtree law for ``w(k) = k + beta``."""
    n = tree.size - 1
    log_num = sum(falling_factorial_log(d - 1 + beta, d) for d in tree.code)
    log_den = n * math.log1p(beta) + falling_factorial_log(n + 2 - 1 / (1 + beta), n + 1)
    return count_histories(tree) * math.exp(log_num - log_den)


def ancestor_subtree_mass(tree: OrderedTree, k: int, w: WeightFunction,
                          lambda_star: float, cap: int = HISTORY_CAP) -> float:
    """Limiting fraction of vertices whose ``k``-th ancestor has progeny ``tree``."""
    width = len(generation(tree, k))
    if width == 0:
        return 0.0
    return pi_mass(tree, w, lambda_star, cap) * width


def marked_pi(tree: OrderedTree, u, k: int, w: WeightFunction, lambda_star: float,
              cap: int = HISTORY_CAP) -> float:
    u = tuple(u)
    if len(u) != k or u not in tree:
        raise InvalidMark(f"{u} is not a vertex in generation {k} of {encode(tree)}")
    return pi_mass(tree, w, lambda_star, cap)


def marked_projection(target: OrderedTree, v, k: int, l: int, w: WeightFunction,
                      lambda_star: float, max_size: int) -> float:
    """Truncated mass that the level-``k`` marked law puts on level-``l`` view ``(target, v)``.

    Sums ``pi(G)`` over marked trees ``(G, u)`` with ``|G| <= max_size`` whose
    ``l``-th ancestor of ``u`` carries ``target`` with ``u`` relabelled ``v``.
    Increases to ``pi(target)`` as ``max_size`` grows.
    """
    v = tuple(v)
    total = 0.0
    for g in trees_up_to(max_size):
        hits = sum(1 for u in generation(g, k)
                   if shift(u, l) == v and subtree_at(g, ancestor(u, l)) == target)
        if hits:
            total += hits * pi_mass(g, w, lambda_star)
    return total


# ---------------------------------------------------------------------------
# steadiness


def _all_subtrees(tree: OrderedTree):
    stack = [tree]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(t.children)


def steadiness_defect(g0: OrderedTree) -> dict[OrderedTree, Fraction]:
    """Exact ``sum_H mu(H) #{x in gen1(H): H_x = G} - mu(G)`` for the empirical law ``mu``.

    ``mu(G)`` is the fraction of vertices of ``g0`` whose progeny is ``G``.
    Only non-zero entries are returned.
    """
    n = g0.size
    mu = Counter(_all_subtrees(g0))
    lhs: Counter = Counter()
    for h, c in mu.items():
        for child in h.children:
            lhs[child] += c
    out = {}
    for g in set(mu) | set(lhs):
        d = Fraction(lhs[g] - mu[g], n)
        if d:
            out[g] = d
    return out


def steadiness_exact(g0: OrderedTree) -> bool:
    """Exact counting check of steadiness for the empirical subtree law of ``g0``.

    Every vertex except the root is a first-generation child of exactly one
    vertex, so the identity holds for every ``G`` except ``G = g0`` itself,
    where the root leaves a deficit of exactly ``1/|g0|``.
    """
    return steadiness_defect(g0) == {g0: Fraction(-1, g0.size)}


def steadiness_residual(w: WeightFunction, lambda_star: float, tree: OrderedTree,
                        extra: int, cap: int = HISTORY_CAP) -> tuple[float, float]:
    """Partial sum of the steadiness identity over ``|H| <= |tree| + extra``.

    Returns ``(lhs_partial, pi(tree))``; the partial sum increases with
    ``extra`` towards the target.
    """
    top = tree.size + extra
    if top > cap:
        raise TooLarge(f"|G| + extra = {top} exceeds cap {cap}")
    lhs = 0.0
    for h in trees_up_to(top):
        hits = sum(1 for c in h.children if c == tree)
        if hits:
            lhs += hits * pi_mass(h, w, lambda_star, cap)
    return lhs, pi_mass(tree, w, lambda_star, cap)


def root_degree_mass(w: WeightFunction, lambda_star: float, k: int, max_size: int) -> float:
    """Sum of ``pi(G)`` over ``|G| <= max_size`` with root degree ``k``."""
    return math.fsum(pi_mass(t, w, lambda_star) for t in trees_up_to(max_size)
                     if len(t.children) == k)


__all__ = [
    "TreeDistribution", "pi_mass", "pi_table", "pi_linear", "ancestor_subtree_mass",
    "marked_pi", "marked_projection", "steadiness_defect", "steadiness_exact",
    "steadiness_residual", "root_degree_mass", "SINGLETON", "ROOT", "decode",
]
