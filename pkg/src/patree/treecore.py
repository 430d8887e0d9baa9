"""Finite rooted ordered trees.

Vertices are labelled the Neveu way: the root is ``()`` and the ``j``-th
child of ``x`` is ``x + (j,)``.  An :class:`OrderedTree` is stored as nested
tuples of children; its canonical code is the preorder sequence of child
counts (``(1, 1, 0)`` for the path on three vertices, ``(2, 0, 0)`` for the
cherry).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import (
    MissingLeftSibling, MissingParent, MissingRoot, TooLarge, TooShallow, TreeError,
    VertexAbsent,
)

Label = tuple[int, ...]
ROOT: Label = ()

HISTORY_CAP = 10
TREES_CAP = 12


@dataclass(frozen=True, eq=False)
class OrderedTree:
    children: tuple["OrderedTree", ...] = ()

    @cached_property
    def code(self) -> tuple[int, ...]:
        out = [len(self.children)]
        for c in self.children:
            out.extend(c.code)
        return tuple(out)

    @cached_property
    def size(self) -> int:
        return len(self.code)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other):
        return isinstance(other, OrderedTree) and self.code == other.code

    def __hash__(self):
        return hash(self.code)

    def __lt__(self, other):
        return (self.size, self.code) < (other.size, other.code)

    def __repr__(self):
        return f"OrderedTree({encode(self)!r})"

    def labels(self) -> Iterator[Label]:
        """All vertex labels in preorder."""
        stack = [(ROOT, self)]
        while stack:
            x, t = stack.pop()
            yield x
            for j in range(len(t.children), 0, -1):
                stack.append((x + (j,), t.children[j - 1]))

    def __contains__(self, x: Label) -> bool:
        t = self
        for j in x:
            if not 1 <= j <= len(t.children):
                return False
            t = t.children[j - 1]
        return True


SINGLETON = OrderedTree()


def encode(tree: OrderedTree) -> str:
    """Comma-separated canonical code, e.g. ``'2,0,0'``."""
    return ",".join(map(str, tree.code))


def decode(code: str | Sequence[int]) -> OrderedTree:
    """Inverse of :func:`encode`; also accepts the integer sequence."""
    if isinstance(code, str):
        code = [int(c) for c in code.split(",")]
    code = list(code)
    pos = 0

    def build():
        nonlocal pos
        if pos >= len(code):
            raise TreeError("truncated tree code")
        d = code[pos]
        if d < 0:
            raise TreeError("negative child count in tree code")
        pos += 1
        return OrderedTree(tuple(build() for _ in range(d)))

    tree = build()
    if pos != len(code):
        raise TreeError("trailing entries in tree code")
    return tree


def validate(labels: Iterable[Label]) -> OrderedTree:
    """Build the tree for a parent- and sibling-closed label set."""
    labels = {tuple(x) for x in labels}
    if ROOT not in labels:
        raise MissingRoot("the root () is absent")
    for x in labels:
        if any(j < 1 for j in x):
            raise TreeError(f"label {x} has a non-positive entry")
        if x and x[:-1] not in labels:
            raise MissingParent(f"{x} present but its parent {x[:-1]} is not")
        if x and x[-1] > 1 and x[:-1] + (x[-1] - 1,) not in labels:
            raise MissingLeftSibling(f"{x} present but {x[:-1] + (x[-1] - 1,)} is not")

    def build(x):
        n = 0
        while x + (n + 1,) in labels:
            n += 1
        return OrderedTree(tuple(build(x + (j,)) for j in range(1, n + 1)))

    return build(ROOT)


def from_parents(parents: Sequence[int | None]) -> OrderedTree:
    """Tree from a birth-order parent array (root entry ``None`` or ``-1``).

    Siblings are ordered by birth index.
    """
    n = len(parents)
    kids: list[list[int]] = [[] for _ in range(n)]
    for v in range(1, n):
        kids[parents[v]].append(v)

    def build(v):
        return OrderedTree(tuple(build(c) for c in kids[v]))

    return build(0)


def _node(tree: OrderedTree, x: Label) -> OrderedTree:
    t = tree
    for j in x:
        if not 1 <= j <= len(t.children):
            raise VertexAbsent(f"{x} is not a vertex of the tree")
        t = t.children[j - 1]
    return t


def subtree_at(tree: OrderedTree, x: Label) -> OrderedTree:
    """Progeny of ``x`` re-rooted at ``()``."""
    return _node(tree, tuple(x))


def ancestor(x: Label, n: int) -> Label:
    if n > len(x):
        raise TooShallow(f"{x} has no ancestor {n} generations back")
    return tuple(x[: len(x) - n])


def shift(x: Label, k: int) -> Label:
    """Label of ``x`` inside the subtree of its ``k``-th ancestor."""
    if k > len(x):
        raise TooShallow(f"{x} is shallower than {k}")
    return tuple(x[len(x) - k:])


def degree_of(tree: OrderedTree, x: Label) -> int:
    return len(_node(tree, tuple(x)).children)


def generation(tree: OrderedTree, n: int) -> list[Label]:
    """Labels at depth ``n`` in lexicographic order."""
    level = [(ROOT, tree)]
    for _ in range(n):
        level = [(x + (j,), c) for x, t in level for j, c in enumerate(t.children, 1)]
    return [x for x, _ in level]


def total_weight(tree: OrderedTree, w) -> float:
    """Sum over vertices of ``w(child count)``."""
    return sum(w(d) for d in tree.code)


# ---------------------------------------------------------------------------
# historical orderings


class History(NamedTuple):
    order: tuple[Label, ...]
    total_weights: tuple[float, ...] | None
    attach_weights: tuple[float, ...] | None


def _frontier_add(tree, frontier, x):
    child = x + (1,)
    if child in tree:
        frontier.add(child)
    if x:
        sib = x[:-1] + (x[-1] + 1,)
        if sib in tree:
            frontier.add(sib)


def enumerate_histories(tree: OrderedTree, w=None, cap: int = HISTORY_CAP) -> list[History]:
    """All birth orders of ``tree`` in which every prefix is a tree.

    With a weight function ``w`` each history also carries the total weights
    ``W(G(s,i))`` for ``i = 0..|G|-1`` and the attachment weights ``w(G,s,i)``
    for ``i = 1..|G|-1``.
    """
    if tree.size > cap:
        raise TooLarge(f"tree of size {tree.size} exceeds history cap {cap}")
    out: list[History] = []
    order: list[Label] = [ROOT]
    deg: dict[Label, int] = {ROOT: 0}

    def rec(frontier: frozenset, W: float, Ws: list, ws: list):
        if not frontier:
            out.append(History(tuple(order),
                               tuple(Ws) if w is not None else None,
                               tuple(ws) if w is not None else None))
            return
        for x in sorted(frontier):
            nxt = set(frontier)
            nxt.discard(x)
            _frontier_add(tree, nxt, x)
            p = x[:-1]
            d = deg[p]
            order.append(x)
            deg[p] = d + 1
            deg[x] = 0
            if w is not None:
                wa = w(d)
                Wn = W + w(d + 1) - wa + w(0)
                rec(frozenset(nxt), Wn, Ws + [Wn], ws + [wa])
            else:
                rec(frozenset(nxt), W, Ws, ws)
            del deg[x]
            deg[p] = d
            order.pop()

    start = set()
    _frontier_add(tree, start, ROOT)
    W0 = w(0) if w is not None else 0.0
    rec(frozenset(start), W0, [W0], [])
    return out


def count_histories(tree: OrderedTree) -> int:
    """Number of historical orderings, from subtree sizes.

    ``(|G|-2)! / prod_{x != root} a(x) b(x)`` with ``a(x) = max(|G_x| - 1, 1)``
    and ``b(x) = max(sum of |G_y| over younger siblings y of x, 1)``.
    """
    if tree.size <= 1:
        return 1
    den = 1

    def walk(t):
        nonlocal den
        sizes = [c.size for c in t.children]
        younger = sum(sizes)
        for c, s in zip(t.children, sizes):
            younger -= s
            den *= max(s - 1, 1) * max(younger, 1)
            walk(c)

    walk(tree)
    count = Fraction(factorial(tree.size - 2), den)
    if count.denominator != 1:
        raise ArithmeticError(f"non-integral history count for {encode(tree)}")
    return int(count)


# ---------------------------------------------------------------------------
# exhaustive generation


@lru_cache(maxsize=None)
def _forests(m: int) -> tuple[tuple[OrderedTree, ...], ...]:
    if m == 0:
        return ((),)
    out = []
    for k in range(1, m + 1):
        for t in _trees_of_size(k):
            for rest in _forests(m - k):
                out.append((t,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _trees_of_size(n: int) -> tuple[OrderedTree, ...]:
    return tuple(OrderedTree(f) for f in _forests(n - 1))


def trees_of_size(n: int) -> list[OrderedTree]:
    if n > TREES_CAP:
        raise TooLarge(f"size {n} exceeds generator cap {TREES_CAP}")
    return list(_trees_of_size(n))


def trees_up_to(n: int) -> list[OrderedTree]:
    """Every ordered tree with at most ``n`` vertices, sorted by size then code."""
    if n > TREES_CAP:
        raise TooLarge(f"size {n} exceeds generator cap {TREES_CAP}")
    return sorted(t for m in range(1, n + 1) for t in _trees_of_size(m))
