"""Grossman-Larson and Connes-Kreimer structures on the span of forests.

Conventions (fixed by the identity  n_i * n_i = 2 n_i n_i + [n_i]_i  for the
single-node trees): forests form an orthonormal basis, the coproduct
``ck_coproduct`` sums over admissible multi-cuts with the branch forest on
the left and the trunk on the right, and the product ``gl_product`` is its
transpose.  The coproduct ``gl_coproduct`` is the multiset unshuffle of a
forest's components, i.e. the transpose of forest concatenation.

A second, independent grafting-based realization of the product
(:func:`gl_product_grafting_basis`) is kept for cross-checking only.
"""

from __future__ import annotations

import functools
import itertools
from fractions import Fraction
from typing import Mapping

from .errors import DomainError
from .series import ForestSeries
from .trees import (
    EMPTY_FOREST,
    Forest,
    Tree,
    canonicalize,
    forest,
    forest_concat,
    forest_symmetry,
)

__all__ = [
    "ck_coproduct",
    "ck_coproduct_series",
    "single_cuts",
    "gl_product",
    "gl_product_basis",
    "gl_product_grafting_basis",
    "gl_coproduct",
    "pre_lie",
    "exp_star",
    "log_star",
    "inverse_grouplike",
    "grouplike_check",
    "seminorm_exp_k_gamma",
]

PairTable = dict[tuple[Forest, Forest], int]


# --- Connes-Kreimer coproduct -------------------------------------------------


@functools.lru_cache(maxsize=None)
def _ck_tree(t: Tree) -> tuple[tuple[Forest, Forest, int], ...]:
    # Delta(B+_i(sigma)) = B+_i(sigma) (x) 1  +  (id (x) B+_i) Delta(sigma)
    out: dict[tuple[Forest, Forest], int] = {(forest([t]), EMPTY_FOREST): 1}
    for branch, trunk, mult in _ck_forest(forest(t.children)):
        regrown = canonicalize(t.label, trunk.trees)
        key = (branch, forest([regrown]))
        out[key] = out.get(key, 0) + mult
    return tuple((b, tr, m) for (b, tr), m in out.items())


@functools.lru_cache(maxsize=None)
def _ck_forest(f: Forest) -> tuple[tuple[Forest, Forest, int], ...]:
    if f.is_empty:
        return ((EMPTY_FOREST, EMPTY_FOREST, 1),)
    head, rest = f.trees[0], Forest(f.trees[1:])
    out: dict[tuple[Forest, Forest], int] = {}
    for b1, t1, m1 in _ck_tree(head):
        for b2, t2, m2 in _ck_forest(rest):
            key = (forest_concat(b1, b2), forest_concat(t1, t2))
            out[key] = out.get(key, 0) + m1 * m2
    return tuple((b, tr, m) for (b, tr), m in out.items())


def ck_coproduct(f: Forest) -> PairTable:
    """Admissible-cut coproduct of a basis forest: {(branch, trunk): count}."""
    return {(b, t): m for b, t, m in _ck_forest(f)}


def ck_coproduct_series(a: ForestSeries) -> dict[tuple[Forest, Forest], Fraction]:
    out: dict[tuple[Forest, Forest], Fraction] = {}
    for f, c in a:
        for b, t, m in _ck_forest(f):
            key = (b, t)
            v = out.get(key, 0) + c * m
            if v == 0:
                out.pop(key, None)
            else:
                out[key] = v
    return out


@functools.lru_cache(maxsize=None)
def single_cuts(t: Tree) -> tuple[tuple[Forest, Tree, int], ...]:
    """Single admissible cuts of a tree: (branch forest, trunk tree, count)."""
    out: dict[tuple[Forest, Tree], int] = {}
    seen_children: set[Tree] = set()
    for j, child in enumerate(t.children):
        if child in seen_children:
            continue
        seen_children.add(child)
        mult = t.children.count(child)
        remaining = list(t.children)
        remaining.remove(child)
        # cut the edge root -> child
        key = (forest([child]), canonicalize(t.label, remaining))
        out[key] = out.get(key, 0) + mult
        # cut strictly inside the child subtree
        for branch, trunk_sub, m in single_cuts(child):
            key = (branch, canonicalize(t.label, remaining + [trunk_sub]))
            out[key] = out.get(key, 0) + mult * m
    return tuple((b, tr, m) for (b, tr), m in out.items())


# --- grafting: candidate generation and the independent product ---------------


def _attach(host: Tree, plan: Mapping[int, tuple[Tree, ...]], offset: int = 0) -> Tree:
    """Rebuild ``host`` with extra children grafted at preorder node indices."""
    pos = offset + 1
    new_children: list[Tree] = []
    for c in host.children:
        new_children.append(_attach(c, plan, pos))
        pos += c.nodes
    new_children.extend(plan.get(offset, ()))
    return canonicalize(host.label, new_children)


def _graft_assignments(u: Forest, v: Forest):
    """All placements of u's trees onto nodes of v (or left free)."""
    targets: list[tuple[int, int] | None] = [None]
    for ci, comp in enumerate(v.trees):
        for ni in range(comp.nodes):
            targets.append((ci, ni))
    return itertools.product(targets, repeat=len(u.trees))


def _graft_result(u: Forest, v: Forest, assignment) -> Forest:
    free: list[Tree] = []
    plans: list[dict[int, list[Tree]]] = [dict() for _ in v.trees]
    for t, tgt in zip(u.trees, assignment):
        if tgt is None:
            free.append(t)
        else:
            ci, ni = tgt
            plans[ci].setdefault(ni, []).append(t)
    comps = [
        _attach(comp, {k: tuple(vs) for k, vs in plan.items()})
        for comp, plan in zip(v.trees, plans)
    ]
    return forest(comps + free)


@functools.lru_cache(maxsize=None)
def _graft_counts(u: Forest, v: Forest) -> tuple[tuple[Forest, int], ...]:
    counts: dict[Forest, int] = {}
    for assignment in _graft_assignments(u, v):
        rho = _graft_result(u, v, assignment)
        counts[rho] = counts.get(rho, 0) + 1
    return tuple(counts.items())


@functools.lru_cache(maxsize=None)
def gl_product_basis(u: Forest, v: Forest) -> tuple[tuple[Forest, int], ...]:
    """Structure constants of the product on basis forests.

    Defined as the transpose of :func:`ck_coproduct`: the coefficient of rho
    in u * v is the number of admissible cuts of rho with branch u and trunk
    v.  Grafting only narrows the candidate set; every coefficient is read
    off the coproduct.
    """
    out = []
    for rho, _ in _graft_counts(u, v):
        m = 0
        for b, t, mult in _ck_forest(rho):
            if b is u and t is v:
                m = mult
                break
        if m:
            out.append((rho, m))
    return tuple(out)


def gl_product_grafting_basis(u: Forest, v: Forest) -> dict[Forest, Fraction]:
    """Independent realization of the product via grafting placement counts,
    rescaled by automorphism counts.  Cross-check only."""
    su, sv = forest_symmetry(u), forest_symmetry(v)
    out: dict[Forest, Fraction] = {}
    for rho, g in _graft_counts(u, v):
        c = Fraction(g * forest_symmetry(rho), su * sv)
        if c:
            out[rho] = c
    return out


def gl_product(a: ForestSeries, b: ForestSeries) -> ForestSeries:
    """Bilinear extension of the basis product, truncated at the finer level."""
    trunc = ForestSeries._merge_trunc(a.truncation, b.truncation)
    acc: dict[Forest, object] = {}
    for fu, cu in a:
        for fv, cv in b:
            if trunc is not None and fu.nodes + fv.nodes > trunc:
                continue
            cuv = cu * cv
            for rho, m in gl_product_basis(fu, fv):
                prev = acc.get(rho, 0)
                nxt = prev + cuv * m
                if nxt == 0:
                    acc.pop(rho, None)
                else:
                    acc[rho] = nxt
    return ForestSeries(acc, trunc)


# --- unshuffle coproduct -------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _delta_forest(f: Forest) -> tuple[tuple[Forest, Forest], ...]:
    # distinct sub-multisets of the component trees, each split once
    groups: list[tuple[Tree, int]] = []
    for t in f.trees:
        if groups and groups[-1][0] is t:
            groups[-1] = (t, groups[-1][1] + 1)
        else:
            groups.append((t, 1))
    splits: list[tuple[Forest, Forest]] = []
    for picks in itertools.product(*[range(m + 1) for _, m in groups]):
        left: list[Tree] = []
        right: list[Tree] = []
        for (t, m), k in zip(groups, picks):
            left.extend([t] * k)
            right.extend([t] * (m - k))
        splits.append((forest(left), forest(right)))
    return tuple(splits)


def gl_coproduct(a: ForestSeries) -> dict[tuple[Forest, Forest], Fraction]:
    """Unshuffle coproduct: sum over multiset splits of the component trees."""
    out: dict[tuple[Forest, Forest], Fraction] = {}
    trunc = a.truncation
    for f, c in a:
        for left, right in _delta_forest(f):
            if trunc is not None and left.nodes + right.nodes > trunc:
                continue
            key = (left, right)
            v = out.get(key, 0) + c
            if v == 0:
                out.pop(key, None)
            else:
                out[key] = v
    return out


def pre_lie(t: Tree, s: Tree) -> ForestSeries:
    """Grafting pre-Lie product: the projection of t * s onto single trees."""
    out: dict[Forest, Fraction] = {}
    for rho, m in gl_product_basis(forest([t]), forest([s])):
        if len(rho.trees) == 1:
            out[rho] = Fraction(m)
    return ForestSeries(out)


# --- exp / log / group-likes ---------------------------------------------------


def exp_star(a: ForestSeries, level: int) -> ForestSeries:
    """exp of ``a`` under the product, truncated at ``level``.

    Requires the empty-forest coefficient of ``a`` to vanish.
    """
    if a.coeff(EMPTY_FOREST) != 0:
        raise DomainError("exp_star requires a vanishing empty-forest coefficient")
    x = a.retruncate(level)
    acc = ForestSeries.unit(level)
    power = ForestSeries.unit(level)
    fact = 1
    for m in range(1, level + 1):
        power = gl_product(power, x)
        if power.is_zero():
            break
        fact *= m
        acc = acc + power.scale(Fraction(1, fact))
    return acc


def log_star(g: ForestSeries, level: int) -> ForestSeries:
    """log of ``g`` under the product, truncated at ``level``.

    Requires the empty-forest coefficient of ``g`` to equal one.
    """
    if g.coeff(EMPTY_FOREST) != 1:
        raise DomainError("log_star requires an empty-forest coefficient of 1")
    x = (g - ForestSeries.unit()).retruncate(level)
    acc = ForestSeries.zero(level)
    power = ForestSeries.unit(level)
    for m in range(1, level + 1):
        power = gl_product(power, x)
        if power.is_zero():
            break
        acc = acc + power.scale(Fraction((-1) ** (m + 1), m))
    return acc


def inverse_grouplike(g: ForestSeries, level: int) -> ForestSeries:
    """Group inverse exp(-log g) at the given truncation."""
    return exp_star(log_star(g, level).scale(-1), level)


def grouplike_check(g: ForestSeries, level: int | None = None, tol: float = 0.0) -> bool:
    """True iff delta(g) = g (x) g at the truncation and <g,1> = 1.

    The comparison is exact by default; a positive ``tol`` admits float
    roundoff (relative to the largest coefficient involved).
    """
    if level is None:
        level = g.truncation
    if level is None:
        raise DomainError("grouplike_check needs a truncation level")
    if g.coeff(EMPTY_FOREST) != 1:
        return False
    lhs = gl_coproduct(g.truncate(level))
    rhs: dict[tuple[Forest, Forest], Fraction] = {}
    for f1, c1 in g:
        if f1.nodes > level:
            continue
        for f2, c2 in g:
            if f1.nodes + f2.nodes > level:
                continue
            rhs[(f1, f2)] = c1 * c2
    if tol == 0.0:
        return lhs == rhs
    scale = 1.0 + max(
        (abs(float(c)) for c in list(lhs.values()) + list(rhs.values())), default=0.0
    )
    for key in set(lhs) | set(rhs):
        if abs(float(lhs.get(key, 0)) - float(rhs.get(key, 0))) > tol * scale:
            return False
    return True


# --- seminorms -----------------------------------------------------------------


def seminorm_exp_k_gamma(a: ForestSeries, K, k: int, basis) -> Fraction | float:
    """The sub-multiplicative seminorm sum_m K^m sum_{r_1..r_m <= k} |lambda_R|
    of ``a`` rewritten in product words of the generator basis."""
    from .freebasis import rewrite_to_words

    if a.degree() > basis.degree_bound:
        raise DomainError(
            f"series degree {a.degree()} exceeds basis bound {basis.degree_bound}"
        )
    if k < 1:
        raise DomainError("generator cutoff k must be >= 1")
    words = rewrite_to_words(a, basis)
    total = 0
    for word, c in words.terms.items():
        if any(r > k for r in word):
            continue
        total = total + (K ** len(word)) * abs(c)
    return total
