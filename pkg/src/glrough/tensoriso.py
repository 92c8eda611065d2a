"""Inhomogeneously graded truncated tensor algebra over the generator space,
the word-level isomorphism with the forest algebra, and variation metrics.

Words are tuples of 1-based generator indices.  Each generator spans a
one-dimensional component, so the projection onto a word is a single
coefficient.  A word's inhomogeneous degree is (sum of letter node-degrees)/p;
the algebra keeps words with degree at most the cap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DomainError
from .series import ForestSeries

Word = tuple[int, ...]

__all__ = [
    "Word",
    "PiScaling",
    "TensorSeries",
    "deg_pi",
    "enumerate_A_pi",
    "tensor_mul",
    "tensor_exp",
    "tensor_log",
    "tensor_inverse",
    "psi",
    "psi_inv",
    "grouplike_tensor_check",
    "TensorGridPath",
    "rho_var",
]


@dataclass(frozen=True)
class PiScaling:
    """Scaling tuple: p plus the node-degrees of the generators tau_1..tau_k.

    The j-th component carries regularity p_j = p / |tau_j|; degrees must be
    non-decreasing with |tau_k| <= p.
    """

    p: Fraction
    degrees: tuple[int, ...]

    def __post_init__(self):
        if self.p < 1:
            raise DomainError("p must be >= 1")
        if not self.degrees:
            raise DomainError("scaling needs at least one generator degree")
        if any(d < 1 for d in self.degrees):
            raise DomainError("generator degrees must be positive")
        if list(self.degrees) != sorted(self.degrees):
            raise DomainError("generator degrees must be non-decreasing")
        if self.degrees[-1] > self.p:
            raise DomainError("every generator degree must be <= p")

    @property
    def k(self) -> int:
        return len(self.degrees)

    def p_value(self, j: int) -> Fraction:
        """Regularity p_j of the j-th (1-based) component."""
        return self.p / self.degrees[j - 1]

    @staticmethod
    def from_basis(basis, p) -> "PiScaling":
        """Keep the generators of node-degree <= p (their number is k)."""
        p = Fraction(p) if not isinstance(p, Fraction) else p
        degs = [d for d in basis.degrees if d <= p]
        if not degs:
            raise DomainError("no generator has degree <= p")
        return PiScaling(p, tuple(degs))

    def word_node_degree(self, word: Word) -> int:
        total = 0
        for r in word:
            if not 1 <= r <= self.k:
                raise DomainError(f"generator index {r} outside 1..{self.k}")
            total += self.degrees[r - 1]
        return total


def deg_pi(word: Word, scaling: PiScaling) -> Fraction:
    """Inhomogeneous degree sum_j n_j(word)/p_j = (total node degree)/p."""
    return Fraction(scaling.word_node_degree(word)) / scaling.p


def enumerate_A_pi(s, scaling: PiScaling) -> list[Word]:
    """All words of inhomogeneous degree <= s, shortest-then-lexicographic."""
    s = Fraction(s) if not isinstance(s, Fraction) else s
    if s < 0:
        raise DomainError("degree cap must be >= 0")
    budget = s * scaling.p  # max total node degree
    out: list[Word] = []

    def extend(prefix: list[int], used: Fraction) -> None:
        out.append(tuple(prefix))
        for r in range(1, scaling.k + 1):
            nxt = used + scaling.degrees[r - 1]
            if nxt <= budget:
                prefix.append(r)
                extend(prefix, nxt)
                prefix.pop()

    extend([], Fraction(0))
    out.sort(key=lambda w: (len(w), w))
    return out


class TensorSeries:
    """Finitely supported map word -> coefficient.

    ``scaling``/``cap`` are optional: with both set, words beyond the cap are
    dropped on construction (membership in the truncated algebra); without
    them the value lives in the plain word algebra.
    """

    __slots__ = ("_terms", "scaling", "cap")

    def __init__(
        self,
        terms: Mapping[Word, object] | Iterable[tuple[Word, object]] = (),
        scaling: PiScaling | None = None,
        cap=None,
    ):
        if cap is not None:
            cap = Fraction(cap) if not isinstance(cap, Fraction) else cap
            if scaling is None:
                raise DomainError("a degree cap needs a scaling")
        items = terms.items() if isinstance(terms, Mapping) else terms
        data: dict[Word, object] = {}
        for w, c in items:
            w = tuple(w)
            if scaling is not None and cap is not None:
                if deg_pi(w, scaling) > cap:
                    continue
            if c == 0:
                continue
            if w in data:
                c = data[w] + c
                if c == 0:
                    del data[w]
                    continue
            data[w] = c
        object.__setattr__(self, "_terms", data)
        object.__setattr__(self, "scaling", scaling)
        object.__setattr__(self, "cap", cap)

    def __setattr__(self, name, value):
        raise AttributeError("TensorSeries is immutable")

    @staticmethod
    def unit(scaling: PiScaling | None = None, cap=None) -> "TensorSeries":
        return TensorSeries({(): Fraction(1)}, scaling, cap)

    @property
    def terms(self) -> Mapping[Word, object]:
        return self._terms

    def coeff(self, word: Word):
        return self._terms.get(tuple(word), Fraction(0))

    def __iter__(self):
        return iter(self._terms.items())

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def support(self) -> list[Word]:
        return sorted(self._terms, key=lambda w: (len(w), w))

    def __add__(self, other: "TensorSeries") -> "TensorSeries":
        self._check_compatible(other)
        data = dict(self._terms)
        for w, c in other._terms.items():
            data[w] = data.get(w, 0) + c
        return TensorSeries(data, self.scaling or other.scaling, self.cap if self.cap is not None else other.cap)

    def __sub__(self, other: "TensorSeries") -> "TensorSeries":
        return self + other.scale(-1)

    def scale(self, c) -> "TensorSeries":
        if c == 0:
            return TensorSeries((), self.scaling, self.cap)
        return TensorSeries({w: v * c for w, v in self._terms.items()}, self.scaling, self.cap)

    def with_cap(self, scaling: PiScaling, cap) -> "TensorSeries":
        return TensorSeries(self._terms, scaling, cap)

    def _check_compatible(self, other: "TensorSeries") -> None:
        if (
            self.scaling is not None
            and other.scaling is not None
            and self.scaling != other.scaling
        ):
            raise DomainError("tensor series have different scalings")
        if self.cap is not None and other.cap is not None and self.cap != other.cap:
            raise DomainError("tensor series have different degree caps")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorSeries):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        body = ", ".join(f"{w}: {c}" for w, c in sorted(self._terms.items(), key=lambda kv: (len(kv[0]), kv[0])))
        return f"TensorSeries({{{body}}})"

    def to_json(self) -> dict:
        return {
            "scaling": None
            if self.scaling is None
            else {"p": str(self.scaling.p), "degrees": list(self.scaling.degrees)},
            "cap": None if self.cap is None else str(self.cap),
            "terms": [
                {"word": list(w), "coeff": str(c) if isinstance(c, Fraction) else repr(float(c))}
                for w, c in sorted(self._terms.items(), key=lambda kv: (len(kv[0]), kv[0]))
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "TensorSeries":
        scaling = None
        if obj.get("scaling"):
            scaling = PiScaling(
                Fraction(obj["scaling"]["p"]), tuple(obj["scaling"]["degrees"])
            )
        cap = Fraction(obj["cap"]) if obj.get("cap") else None
        terms = {}
        for entry in obj["terms"]:
            text = str(entry["coeff"])
            coeff = Fraction(text) if ("/" in text or text.lstrip("+-").isdigit()) else float(text)
            terms[tuple(entry["word"])] = coeff
        return TensorSeries(terms, scaling, cap)


def tensor_mul(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    """Word concatenation, bilinear; words beyond the cap are discarded."""
    a._check_compatible(b)
    scaling = a.scaling or b.scaling
    cap = a.cap if a.cap is not None else b.cap
    budget = None if (cap is None or scaling is None) else cap * scaling.p
    acc: dict[Word, object] = {}
    for wa, ca in a:
        da = scaling.word_node_degree(wa) if budget is not None else 0
        for wb, cb in b:
            if budget is not None and da + scaling.word_node_degree(wb) > budget:
                continue
            w = wa + wb
            prev = acc.get(w, 0)
            nxt = prev + ca * cb
            if nxt == 0:
                acc.pop(w, None)
            else:
                acc[w] = nxt
    return TensorSeries(acc, scaling, cap)


def tensor_exp(x: TensorSeries, scaling: PiScaling, cap) -> TensorSeries:
    """exp under concatenation, truncated at the cap."""
    if x.coeff(()) != 0:
        raise DomainError("tensor_exp requires a vanishing empty-word coefficient")
    cap = Fraction(cap) if not isinstance(cap, Fraction) else cap
    x = x.with_cap(scaling, cap)
    acc = TensorSeries.unit(scaling, cap)
    power = TensorSeries.unit(scaling, cap)
    fact = 1
    m = 0
    while True:
        m += 1
        power = tensor_mul(power, x)
        if power.is_zero():
            break
        fact *= m
        acc = acc + power.scale(Fraction(1, fact))
    return acc


def tensor_log(g: TensorSeries, scaling: PiScaling, cap) -> TensorSeries:
    """log under concatenation, truncated at the cap."""
    if g.coeff(()) != 1:
        raise DomainError("tensor_log requires an empty-word coefficient of 1")
    cap = Fraction(cap) if not isinstance(cap, Fraction) else cap
    x = (g - TensorSeries.unit()).with_cap(scaling, cap)
    acc = TensorSeries((), scaling, cap)
    power = TensorSeries.unit(scaling, cap)
    m = 0
    while True:
        m += 1
        power = tensor_mul(power, x)
        if power.is_zero():
            break
        acc = acc + power.scale(Fraction((-1) ** (m + 1), m))
    return acc


def tensor_inverse(g: TensorSeries, scaling: PiScaling, cap) -> TensorSeries:
    return tensor_exp(tensor_log(g, scaling, cap).scale(-1), scaling, cap)


# --- the isomorphism ------------------------------------------------------------


def psi(a: ForestSeries, basis, scaling: PiScaling) -> TensorSeries:
    """Word image of a forest-algebra element of degree <= floor(p), capped at 1."""
    from .freebasis import rewrite_to_words

    if a.degree() > int(scaling.p):
        raise DomainError(
            f"degree {a.degree()} exceeds floor(p) = {int(scaling.p)}"
        )
    words = rewrite_to_words(a, basis)
    return words.with_cap(scaling, Fraction(1))


def psi_inv(w: TensorSeries, basis, scaling: PiScaling | None = None) -> ForestSeries:
    """Inverse of :func:`psi` on the covered range."""
    from .freebasis import rewrite_to_forests

    out = rewrite_to_forests(w, basis)
    if scaling is not None:
        out = out.retruncate(int(scaling.p))
    return out


# --- group-likes -----------------------------------------------------------------


def _bracket_word(word: Word) -> dict[Word, int]:
    """Left-to-right bracketing [[...[w1,w2],...],wm] expanded over words."""
    if not word:
        return {}
    acc: dict[Word, int] = {(word[0],): 1}
    for letter in word[1:]:
        nxt: dict[Word, int] = {}
        for w, c in acc.items():
            left = w + (letter,)
            right = (letter,) + w
            nxt[left] = nxt.get(left, 0) + c
            nxt[right] = nxt.get(right, 0) - c
        acc = nxt
    return acc


def grouplike_tensor_check(g: TensorSeries) -> bool:
    """True iff log(g) is a Lie element (Dynkin criterion per word length)."""
    if g.cap != 1 or g.scaling is None:
        raise DomainError("group-like test expects a series capped at degree 1")
    if g.coeff(()) == 0:
        raise DomainError("zero leading coefficient")
    if g.coeff(()) != 1:
        return False
    logg = tensor_log(g, g.scaling, g.cap)
    by_len: dict[int, dict[Word, object]] = {}
    for w, c in logg:
        by_len.setdefault(len(w), {})[w] = c
    if 0 in by_len:
        return False
    for m, comp in by_len.items():
        if m == 1:
            continue
        bracketed: dict[Word, object] = {}
        for w, c in comp.items():
            for bw, bc in _bracket_word(w).items():
                v = bracketed.get(bw, 0) + c * bc
                if v == 0:
                    bracketed.pop(bw, None)
                else:
                    bracketed[bw] = v
        expected = {w: c * m for w, c in comp.items()}
        if bracketed != expected:
            return False
    return True


# --- grid paths and variation metrics ---------------------------------------------


class TensorGridPath:
    """Grid of group-like word-level increments (the Psi image of a grid path)."""

    def __init__(self, times: Sequence, steps: Sequence[TensorSeries], scaling: PiScaling):
        if len(steps) != len(times) - 1:
            raise DomainError("need one step per grid interval")
        self.times = tuple(times)
        self.steps = tuple(steps)
        self.scaling = scaling

    def increment(self, i: int, j: int) -> TensorSeries:
        acc = TensorSeries.unit(self.scaling, Fraction(1))
        for s in self.steps[i:j]:
            acc = tensor_mul(acc, s)
        return acc


def _partition_sup(ncells: int, cost, power: float) -> float:
    """DP supremum of sum cost(i,j)^power over partitions of [0, ncells]."""
    best = [0.0] * (ncells + 1)
    for j in range(1, ncells + 1):
        best[j] = max(best[i] + cost(i, j) ** power for i in range(j))
    return best[ncells]


def rho_var(a_grid, b_grid, flavor: str = "p-var") -> float:
    """Inhomogeneous variation distance between two grid paths.

    ``p-var``: level components n = 1..floor(p) with exponents p/n, inputs
    are forest-level grids.  ``pi-var``: one component per word of the
    degree-1 word set with exponents 1/deg, inputs are word-level grids.
    The partition supremum is exact over sub-partitions of the common grid.
    """
    if tuple(a_grid.times) != tuple(b_grid.times):
        raise DomainError("grids must share the same times")
    ncells = len(a_grid.times) - 1
    # cache increments over all grid pairs
    a_inc = {}
    b_inc = {}
    for i in range(ncells + 1):
        for j in range(i + 1, ncells + 1):
            a_inc[(i, j)] = a_grid.increment(i, j)
            b_inc[(i, j)] = b_grid.increment(i, j)

    result = 0.0
    if flavor == "p-var":
        p = float(a_grid.p)
        floor_p = int(a_grid.p)
        for n in range(1, floor_p + 1):
            def cost(i, j, n=n):
                diff = a_inc[(i, j)] - b_inc[(i, j)]
                return (
                    sum(float(c) ** 2 for f, c in diff if f.nodes == n) ** 0.5
                )
            theta = n / p
            total = _partition_sup(ncells, cost, 1.0 / theta) ** theta
            result = max(result, total)
        return result
    if flavor == "pi-var":
        scaling = a_grid.scaling
        for word in enumerate_A_pi(1, scaling):
            if not word:
                continue
            theta = float(deg_pi(word, scaling))

            def cost(i, j, word=word):
                return abs(float(a_inc[(i, j)].coeff(word) - b_inc[(i, j)].coeff(word)))

            total = _partition_sup(ncells, cost, 1.0 / theta) ** theta
            result = max(result, total)
        return result
    raise DomainError(f"unknown flavor {flavor!r}")
