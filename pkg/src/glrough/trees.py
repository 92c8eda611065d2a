"""Canonical labelled rooted trees and forests.

A tree is a root label together with an unordered multiset of subtrees; a
forest is an unordered multiset of trees (the empty forest is the algebra
unit).  Values are interned and immutable, so equality is identity and the
canonical form is unique: two representations of the same unordered tree
compare equal bit-for-bit.

Total order on trees: (node count, children lexicographically, label).
Forests are ordered lexicographically on their sorted tree tuples.

Text grammar::

    tree   := LABEL | LABEL '[' tree (',' tree)* ']'
    forest := tree (WS tree)* | 'e'

so ``2[1,1[2]]`` is the tree with root label 2 and children (leaf 1,
chain 1-over-2), and ``e`` is the empty forest.
"""

from __future__ import annotations

import functools
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import DomainError, ParseError

__all__ = [
    "Tree",
    "Forest",
    "EMPTY_FOREST",
    "canonicalize",
    "single",
    "forest",
    "forest_concat",
    "enumerate_trees",
    "enumerate_forests",
    "tree_factorial",
    "symmetry_factor",
    "forest_symmetry",
    "parse_tree",
    "parse_forest",
    "format_tree",
    "format_forest",
]


class Tree:
    """A canonical labelled rooted tree.  Construct via :func:`canonicalize`."""

    __slots__ = ("label", "children", "nodes", "_key", "_hash")

    _intern: dict = {}

    label: int
    children: tuple["Tree", ...]
    nodes: int

    def __new__(cls, label: int, children: tuple["Tree", ...]):
        cache_key = (label, children)
        cached = cls._intern.get(cache_key)
        if cached is not None:
            return cached
        self = object.__new__(cls)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "nodes", 1 + sum(c.nodes for c in children))
        key = (self.nodes, tuple(c._key for c in children), label)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))
        cls._intern[cache_key] = self
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __lt__(self, other: "Tree") -> bool:
        return self._key < other._key

    def __le__(self, other: "Tree") -> bool:
        return self is other or self._key < other._key

    def __repr__(self) -> str:
        return f"Tree({format_tree(self)!r})"

    def sort_key(self):
        return self._key


class Forest:
    """A canonical forest: a sorted tuple of canonical trees."""

    __slots__ = ("trees", "nodes", "_key", "_hash")

    _intern: dict = {}

    trees: tuple[Tree, ...]
    nodes: int

    def __new__(cls, trees: tuple[Tree, ...]):
        cached = cls._intern.get(trees)
        if cached is not None:
            return cached
        self = object.__new__(cls)
        object.__setattr__(self, "trees", trees)
        object.__setattr__(self, "nodes", sum(t.nodes for t in trees))
        key = tuple(t._key for t in trees)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))
        cls._intern[trees] = self
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Forest is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __lt__(self, other: "Forest") -> bool:
        return self._key < other._key

    def __le__(self, other: "Forest") -> bool:
        return self is other or self._key < other._key

    def __repr__(self) -> str:
        return f"Forest({format_forest(self)!r})"

    def __iter__(self) -> Iterator[Tree]:
        return iter(self.trees)

    def __len__(self) -> int:
        return len(self.trees)

    def sort_key(self):
        return self._key

    @property
    def is_empty(self) -> bool:
        return not self.trees


EMPTY_FOREST = Forest(())


def canonicalize(label: int, children: Iterable[Tree] = ()) -> Tree:
    """Build the canonical tree with the given root label and child trees.

    Children may arrive in any order; the result is independent of it.
    """
    if not isinstance(label, int) or label < 1:
        raise DomainError(f"tree label must be a positive integer, got {label!r}")
    kids = tuple(sorted(children, key=Tree.sort_key))
    return Tree(label, kids)


def single(label: int) -> Tree:
    """The one-node tree with the given label."""
    return canonicalize(label, ())


def forest(trees: Iterable[Tree] = ()) -> Forest:
    """Build the canonical forest containing the given trees (any order)."""
    return Forest(tuple(sorted(trees, key=Tree.sort_key)))


def tree_as_forest(t: Tree) -> Forest:
    return Forest((t,))


def forest_concat(a: Forest, b: Forest) -> Forest:
    """Multiset union of two forests."""
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    return forest(a.trees + b.trees)


@functools.lru_cache(maxsize=None)
def enumerate_trees(n: int, d: int) -> tuple[Tree, ...]:
    """All canonical trees with exactly ``n`` nodes and labels in 1..d, sorted.

    ``n = 0`` yields the empty tuple (trees have at least one node).
    """
    if d < 1:
        raise DomainError(f"label count must be >= 1, got {d}")
    if n < 0:
        raise DomainError(f"node count must be >= 0, got {n}")
    if n == 0:
        return ()
    out = [
        Tree(label, f.trees)
        for label in range(1, d + 1)
        for f in enumerate_forests(n - 1, d)
    ]
    out.sort(key=Tree.sort_key)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def enumerate_forests(n: int, d: int) -> tuple[Forest, ...]:
    """All canonical forests with exactly ``n`` nodes and labels in 1..d, sorted.

    ``n = 0`` yields the singleton (empty forest,).
    """
    if d < 1:
        raise DomainError(f"label count must be >= 1, got {d}")
    if n < 0:
        raise DomainError(f"node count must be >= 0, got {n}")
    if n == 0:
        return (EMPTY_FOREST,)

    # Multisets of trees with total node count n: choose a non-decreasing
    # sequence of trees under the canonical order.  Trees are indexed by
    # (size, position) over enumerate_trees; recursion fixes the minimum
    # allowed tree to avoid duplicates.
    pool: list[Tree] = []
    for size in range(1, n + 1):
        pool.extend(enumerate_trees(size, d))
    pool.sort(key=Tree.sort_key)

    results: list[Forest] = []

    def extend(start: int, remaining: int, acc: list[Tree]) -> None:
        if remaining == 0:
            results.append(forest(acc))
            return
        for idx in range(start, len(pool)):
            t = pool[idx]
            if t.nodes > remaining:
                continue
            acc.append(t)
            extend(idx, remaining - t.nodes, acc)
            acc.pop()

    extend(0, n, [])
    results.sort(key=Forest.sort_key)
    return tuple(results)


def tree_factorial(t: Tree) -> int:
    """The tree factorial: |t| times the product of the children's factorials."""
    out = t.nodes
    for c in t.children:
        out *= tree_factorial(c)
    return out


def symmetry_factor(t: Tree) -> int:
    """Order of the automorphism group of the labelled rooted tree."""
    out = 1
    run = 1
    prev: Tree | None = None
    for c in t.children:
        if c is prev:
            run += 1
        else:
            run = 1
            prev = c
        out *= run  # a run of m identical children contributes m!
    for c in t.children:
        out *= symmetry_factor(c)
    return out


def forest_symmetry(f: Forest) -> int:
    """Automorphism count of a forest: permutations of identical components
    times the components' own symmetry factors."""
    out = 1
    run = 1
    prev: Tree | None = None
    for t in f.trees:
        if t is prev:
            run += 1
        else:
            run = 1
            prev = t
        out *= run
    for t in f.trees:
        out *= symmetry_factor(t)
    return out


# --- text grammar -----------------------------------------------------------


def format_tree(t: Tree) -> str:
    if not t.children:
        return str(t.label)
    inner = ",".join(format_tree(c) for c in t.children)
    return f"{t.label}[{inner}]"


def format_forest(f: Forest) -> str:
    if f.is_empty:
        return "e"
    return " ".join(format_tree(t) for t in f.trees)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.text, self.pos)
        self.pos += 1

    def read_label(self) -> int:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected a label", self.text, self.pos)
        label = int(self.text[start : self.pos])
        if label < 1:
            raise ParseError("labels start at 1", self.text, start)
        return label

    def read_tree(self, max_label: int | None = None) -> Tree:
        start = self.pos
        label = self.read_label()
        if max_label is not None and label > max_label:
            raise ParseError(f"label exceeds {max_label}", self.text, start)
        children: list[Tree] = []
        if self.peek() == "[":
            self.pos += 1
            self.skip_ws()
            children.append(self.read_tree(max_label))
            self.skip_ws()
            while self.peek() == ",":
                self.pos += 1
                self.skip_ws()
                children.append(self.read_tree(max_label))
                self.skip_ws()
            self.expect("]")
        return canonicalize(label, children)

    def read_forest(self, max_label: int | None = None) -> Forest:
        self.skip_ws()
        if self.peek() == "e":
            self.pos += 1
            return EMPTY_FOREST
        trees = [self.read_tree(max_label)]
        while True:
            mark = self.pos
            self.skip_ws()
            if self.pos < len(self.text) and self.text[self.pos].isdigit():
                trees.append(self.read_tree(max_label))
            else:
                self.pos = mark
                break
        return forest(trees)


def parse_tree(text: str, max_label: int | None = None) -> Tree:
    """Parse a tree; canonicalizes, so print(parse(s)) is the normal form."""
    sc = _Scanner(text)
    sc.skip_ws()
    t = sc.read_tree(max_label)
    sc.skip_ws()
    if sc.pos != len(text):
        raise ParseError("trailing input after tree", text, sc.pos)
    return t


def parse_forest(text: str, max_label: int | None = None) -> Forest:
    """Parse a forest (``e`` is the empty forest)."""
    sc = _Scanner(text)
    f = sc.read_forest(max_label)
    sc.skip_ws()
    if sc.pos != len(text):
        raise ParseError("trailing input after forest", text, sc.pos)
    return f


def max_label(f: Forest) -> int:
    """Largest label appearing in the forest (0 for the empty forest)."""

    def tree_max(t: Tree) -> int:
        return max([t.label] + [tree_max(c) for c in t.children])

    return max((tree_max(t) for t in f.trees), default=0)


def rational(x) -> Fraction:
    """Coerce ints, strings like ``3/2``, and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise DomainError(f"cannot interpret {x!r} as an exact rational")
