"""Growth of the preferential-attachment tree in discrete and continuous time.

Vertices are indexed by birth order (root = 0).  The parent of a new vertex
is drawn with probability proportional to ``w(child count)`` through a
Fenwick tree over per-vertex weights, so a step costs O(log n).

Continuous time is the same jump chain plus holding times
``T_{n+1} - T_n ~ Exp(W)``, with ``W`` the total weight before the jump.

Randomness: ``init_growth(w, seed)`` splits ``SeedSequence(seed)`` into an
attachment stream and a clock stream.  A discrete and a continuous run with
the same seed therefore build the same tree.  Per-run seeds of an experiment
come from :func:`run_seed`.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .weightfn import WeightFunction, kappa as _kappa, solve_malthus

REBUILD_EVERY = 1 << 20
CODE_BASE = 16
MAX_SUBTREE_CAP = 15


# ---------------------------------------------------------------------------
# Fenwick tree kernels (1-based storage, 0-based vertex indices)


@njit(cache=True)
def _fw_add(tree, i, delta):
    j = i + 1
    n = tree.shape[0] - 1
    while j <= n:
        tree[j] += delta
        j += j & -j


@njit(cache=True)
def _fw_prefix(tree, i):
    """Sum of entries 0..i-1."""
    s = 0.0
    j = i
    while j > 0:
        s += tree[j]
        j -= j & -j
    return s


@njit(cache=True)
def _fw_find(tree, u, size):
    """Smallest vertex index whose inclusive prefix sum exceeds ``u``."""
    n = tree.shape[0] - 1
    step = 1
    while step * 2 <= n:
        step *= 2
    pos = 0
    rem = u
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        step //= 2
    if pos >= size:
        pos = size - 1
    return pos


@njit(cache=True)
def _fw_build(tree, values, size):
    tree[:] = 0.0
    n = tree.shape[0] - 1
    for i in range(size):
        tree[i + 1] = values[i]
    for j in range(1, n + 1):
        k = j + (j & -j)
        if k <= n:
            tree[k] += tree[j]


class FenwickTree:
    """Dynamic prefix sums over a fixed-capacity array of non-negative weights."""

    def __init__(self, capacity: int):
        self.tree = np.zeros(capacity + 1)

    @property
    def capacity(self) -> int:
        return self.tree.shape[0] - 1

    def add(self, i: int, delta: float) -> None:
        _fw_add(self.tree, i, delta)

    def prefix_sum(self, i: int) -> float:
        """Sum of entries ``0 .. i-1``."""
        return _fw_prefix(self.tree, i)

    def find(self, u: float, size: int | None = None) -> int:
        return _fw_find(self.tree, u, self.capacity if size is None else size)

    def rebuild(self, values: np.ndarray) -> None:
        _fw_build(self.tree, np.asarray(values, float), len(values))


# ---------------------------------------------------------------------------
# growth


@njit(cache=True)
def _grow(tree, vweight, parent, child_count, birth_times, omega, size, total,
          uniforms, gaps, continuous, t_now, since, rebuild_every):
    for s in range(uniforms.shape[0]):
        v = _fw_find(tree, uniforms[s] * total, size)
        d = child_count[v]
        delta = omega[d + 1] - vweight[v]
        vweight[v] = omega[d + 1]
        _fw_add(tree, v, delta)
        child_count[v] = d + 1
        parent[size] = v
        child_count[size] = 0
        vweight[size] = omega[0]
        _fw_add(tree, size, omega[0])
        if continuous:
            t_now += gaps[s] / total
            birth_times[size] = t_now
        total += delta + omega[0]
        size += 1
        since += 1
        if since >= rebuild_every:
            _fw_build(tree, vweight, size)
            total = np.sum(vweight[:size])
            since = 0
    return size, total, t_now, since


def run_seed(seed: int, run_index: int) -> int:
    """64-bit seed of run ``run_index`` derived from the experiment seed."""
    ss = np.random.SeedSequence(seed, spawn_key=(run_index,))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class GrowthState:
    weight: WeightFunction
    seed: int
    omega: np.ndarray
    parent: np.ndarray
    child_count: np.ndarray
    vertex_weight: np.ndarray
    index: FenwickTree
    birth_times: np.ndarray
    rng: np.random.Generator
    clock_rng: np.random.Generator
    size: int = 1
    total_weight: float = 0.0
    t_now: float = 0.0
    since_rebuild: int = 0
    continuous: bool = field(default=False)

    @property
    def n_vertices(self) -> int:
        return self.size

    @property
    def parents(self) -> np.ndarray:
        return self.parent[: self.size]

    @property
    def degrees(self) -> np.ndarray:
        return self.child_count[: self.size]

    @property
    def times(self) -> np.ndarray:
        return self.birth_times[: self.size]

    def rebuild(self) -> None:
        """Recompute the prefix sums and the total weight from scratch."""
        self.index.rebuild(self.vertex_weight[: self.size])
        self.total_weight = float(np.sum(self.vertex_weight[: self.size]))
        self.since_rebuild = 0

    def reserve(self, extra: int) -> None:
        need = self.size + extra
        cap = self.parent.shape[0]
        if need <= cap:
            return
        cap = max(need, 2 * cap)

        def grow(a, fill):
            out = np.full(cap, fill, dtype=a.dtype)
            out[: self.size] = a[: self.size]
            return out

        self.parent = grow(self.parent, -1)
        self.child_count = grow(self.child_count, 0)
        self.vertex_weight = grow(self.vertex_weight, 0.0)
        self.birth_times = grow(self.birth_times, np.nan)
        self.omega = self.weight.values(cap + 1)
        self.index = FenwickTree(cap)
        self.index.rebuild(self.vertex_weight[: self.size])


def init_growth(w: WeightFunction, seed: int, capacity: int = 1024) -> GrowthState:
    """Single-root state with its two seeded random streams."""
    attach_ss, clock_ss = np.random.SeedSequence(seed).spawn(2)
    omega = w.values(capacity + 1)
    parent = np.full(capacity, -1, dtype=np.int64)
    child_count = np.zeros(capacity, dtype=np.int64)
    vweight = np.zeros(capacity)
    vweight[0] = omega[0]
    times = np.full(capacity, np.nan)
    times[0] = 0.0
    index = FenwickTree(capacity)
    index.add(0, omega[0])
    return GrowthState(w, int(seed), omega, parent, child_count, vweight, index, times,
                       np.random.default_rng(attach_ss), np.random.default_rng(clock_ss),
                       size=1, total_weight=float(omega[0]))


def _advance(state: GrowthState, n_steps: int, continuous: bool) -> GrowthState:
    state.reserve(n_steps)
    uniforms = state.rng.random(n_steps)
    gaps = state.clock_rng.standard_exponential(n_steps) if continuous else np.empty(0)
    state.continuous = continuous
    size, total, t_now, since = _grow(
        state.index.tree, state.vertex_weight, state.parent, state.child_count,
        state.birth_times, state.omega, state.size, state.total_weight, uniforms, gaps,
        continuous, state.t_now, state.since_rebuild, REBUILD_EVERY)
    state.size, state.total_weight = int(size), float(total)
    state.t_now, state.since_rebuild = float(t_now), int(since)
    return state


def attach_step(state: GrowthState) -> int:
    """Attach one vertex (discrete time); returns its birth index."""
    _advance(state, 1, False)
    return state.size - 1


def grow_discrete(state: GrowthState, n_steps: int) -> GrowthState:
    return _advance(state, n_steps, False)


def grow_continuous(state: GrowthState, n_steps: int) -> GrowthState:
    """Attach ``n_steps`` vertices and record their birth times."""
    return _advance(state, n_steps, True)


def simulate_tree(w: WeightFunction, n_vertices: int, seed: int,
                  continuous: bool = False) -> GrowthState:
    state = init_growth(w, seed, capacity=max(n_vertices, 2))
    return _advance(state, n_vertices - 1, continuous)


def to_json_line(state: GrowthState) -> str:
    """One-line JSON dump: seed, weight spec, parents (root null), birth times."""
    parents = state.parents.tolist()
    parents[0] = None
    record = {"seed": state.seed, "weight": state.weight.to_spec(), "parents": parents}
    if state.continuous:
        record["birth_times"] = state.times.tolist()
    return json.dumps(record, separators=(",", ":"))


# ---------------------------------------------------------------------------
# growth constant


def _affine_theta(w, lam, kap, n_vertices, seed):
    a, b = w.tail.a, w.tail.b
    m = np.arange(1, n_vertices)
    totals = a * (m - 1) + b * m
    _, clock_ss = np.random.SeedSequence(seed).spawn(2)
    gaps = np.random.default_rng(clock_ss).standard_exponential(n_vertices - 1)
    t_n = float(np.sum(gaps / totals))
    return kap * lam * np.exp(-lam * t_n) * n_vertices


def theta_sample(w: WeightFunction, lambda_star: float, n_vertices: int, seed: int,
                 kappa: float | None = None) -> float:
    """One finite-size draw of the normalised growth constant.

    ``kappa * lambda* * exp(-lambda* T) * n_vertices`` with ``T`` the birth
    time of vertex ``n_vertices - 1``; its mean tends to 1.  For affine
    weights the total weight after ``m`` births is deterministic, so only the
    clock stream is drawn (same ``T`` as a full continuous simulation).
    """
    kap = _kappa(w, lambda_star) if kappa is None else kappa
    if w.is_affine:
        return float(_affine_theta(w, lambda_star, kap, n_vertices, seed))
    state = simulate_tree(w, n_vertices, seed, continuous=True)
    return float(kap * lambda_star * np.exp(-lambda_star * state.t_now) * n_vertices)


def theta_samples(w: WeightFunction, n_vertices: int, samples: int, seed: int,
                  lambda_star: float | None = None) -> np.ndarray:
    lam = solve_malthus(w).lambda_star if lambda_star is None else lambda_star
    kap = _kappa(w, lam)
    return np.array([theta_sample(w, lam, n_vertices, run_seed(seed, i), kap)
                     for i in range(samples)])


# ---------------------------------------------------------------------------
# census


@njit(cache=True)
def _census_kernel(parent, n, cap):
    size = np.ones(n, dtype=np.int64)
    for v in range(n - 1, 0, -1):
        size[parent[v]] += size[v]
    deg = np.zeros(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    for v in range(1, n):
        p = parent[v]
        deg[p] += 1
        rank[v] = deg[p]
        depth[v] = depth[p] + 1
    # children lists in birth order (CSR)
    start = np.zeros(n + 1, dtype=np.int64)
    for v in range(1, n):
        start[parent[v] + 1] += 1
    for v in range(n):
        start[v + 1] += start[v]
    fill = start[:n].copy()
    kids = np.empty(max(n - 1, 1), dtype=np.int64)
    for v in range(1, n):
        p = parent[v]
        kids[fill[p]] = v
        fill[p] += 1
    code = np.full(n, -1, dtype=np.int64)
    for v in range(n - 1, -1, -1):
        if size[v] <= cap:
            c = deg[v]
            for j in range(start[v], start[v + 1]):
                ch = kids[j]
                c = c * (16 ** size[ch]) + code[ch]
            code[v] = c
    return size, deg, rank, depth, code


def code_to_str(code: int, size: int) -> str:
    """Canonical code string from the packed base-16 integer."""
    digits = []
    for _ in range(size):
        digits.append(code % CODE_BASE)
        code //= CODE_BASE
    return ",".join(str(d) for d in reversed(digits))


def _hist_from_rows(*cols) -> dict:
    rows, counts = np.unique(np.stack(cols, axis=1), axis=0, return_counts=True)
    return {tuple(r): int(c) for r, c in zip(rows.tolist(), counts.tolist())}


@dataclass
class CensusReport:
    n_vertices: int
    subtree_cap: int
    degree_hist: dict[int, int]
    subtree_hist: dict[str, int]
    ancestor_hist: dict[int, dict[tuple[str, str], int]]

    def degree_csv(self) -> str:
        buf = io.StringIO()
        buf.write("degree,count\n")
        for k in sorted(self.degree_hist):
            buf.write(f"{k},{self.degree_hist[k]}\n")
        return buf.getvalue()

    def subtree_csv(self) -> str:
        buf = io.StringIO()
        buf.write("canonical_code,count\n")
        for code, c in self.subtree_hist.items():
            buf.write(f'"{code}",{c}\n')
        return buf.getvalue()

    def ancestor_csv(self, k: int) -> str:
        buf = io.StringIO()
        buf.write("canonical_code,mark,count\n")
        for (code, mark), c in self.ancestor_hist[k].items():
            buf.write(f'"{code}",{mark},{c}\n')
        return buf.getvalue()


def census(state_or_parents, subtree_cap: int = 4, ancestor_ks=()) -> CensusReport:
    """Degree, subtree and marked-ancestor histograms of a finished tree.

    Subtrees larger than ``subtree_cap`` are counted under ``"OTHER"``.  For
    each ``k`` in ``ancestor_ks`` the vertices of depth ``>= k`` are keyed by
    the progeny of their ``k``-th ancestor and their relative label, written
    as dot-separated sibling ranks (``""`` for ``k = 0``).
    """
    if not 1 <= subtree_cap <= MAX_SUBTREE_CAP:
        raise ValueError(f"subtree_cap must lie in 1..{MAX_SUBTREE_CAP}")
    parent = getattr(state_or_parents, "parents", state_or_parents)
    parent = np.array([-1 if p is None else p for p in parent], dtype=np.int64) \
        if not isinstance(parent, np.ndarray) else parent.astype(np.int64)
    n = len(parent)
    size, deg, rank, depth, code = _census_kernel(parent, n, subtree_cap)

    degree_hist = {d: int(c) for d, c in enumerate(np.bincount(deg)) if c}
    small = size <= subtree_cap
    subtree_hist = {}
    for (m, c), cnt in _hist_from_rows(size[small], code[small]).items():
        subtree_hist[code_to_str(c, m)] = cnt
    lumped = int(n - small.sum())
    if lumped:
        subtree_hist["OTHER"] = lumped

    ancestor_hist = {}
    for k in ancestor_ks:
        cur = np.flatnonzero(depth >= k)
        ranks = []
        for _ in range(k):
            ranks.append(rank[cur])
            cur = parent[cur]
        ok = size[cur] <= subtree_cap
        cols = [size[cur[ok]], code[cur[ok]]] + [r[ok] for r in reversed(ranks)]
        table: dict[tuple[str, str], int] = {}
        if ok.any():
            for row, cnt in _hist_from_rows(*cols).items():
                table[(code_to_str(row[1], row[0]), ".".join(map(str, row[2:])))] = cnt
        if (~ok).any():
            table[("OTHER", "")] = int((~ok).sum())
        ancestor_hist[k] = table
    return CensusReport(n, subtree_cap, degree_hist, subtree_hist, ancestor_hist)
