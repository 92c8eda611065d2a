"""Elementary differentials and Euler schemes for branched and word-level
drivers, over polynomial vector fields with exact rational coefficients.

The vector field attached to a tree is pinned by the morphism property
f_{graft(t, s)} = f_t <| f_s with f of a single node being the field itself;
the combinatorial prefactor is derived from that recursion, never
transcribed.  For a tree whose root has repeated child classes it comes out
as 1/prod(multiplicity!).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, InvariantViolation, ParseError
from .freebasis import GeneratorBasis
from .hopf import exp_star, gl_product, log_star, pre_lie
from .roughpath import GridRoughPath
from .series import ForestSeries
from .tensoriso import TensorGridPath, Word
from .trees import Forest, Tree, canonicalize, forest

__all__ = [
    "Polynomial",
    "PolyVectorField",
    "parse_polynomial",
    "elementary_differential",
    "ElementaryDifferentialTable",
    "grafting_factor",
    "vf_pre_lie",
    "directional_derivative_tensor",
    "branched_euler_solve",
    "geometric_euler_solve",
    "linear_group_rde",
]


class Polynomial:
    """Sparse multivariate polynomial over the rationals.

    Monomials are exponent tuples of a fixed arity; evaluation is exact on
    rational points and tolerates floats.
    """

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms=None):
        self.arity = arity
        data: dict[tuple[int, ...], Fraction] = {}
        for mono, c in (terms or {}).items():
            if len(mono) != arity:
                raise DomainError("monomial arity mismatch")
            if c != 0:
                data[tuple(mono)] = data.get(tuple(mono), Fraction(0)) + c
        self.terms = {m: c for m, c in data.items() if c != 0}

    @staticmethod
    def constant(arity: int, c) -> "Polynomial":
        return Polynomial(arity, {(0,) * arity: Fraction(c)})

    @staticmethod
    def variable(arity: int, i: int) -> "Polynomial":
        mono = [0] * arity
        mono[i] = 1
        return Polynomial(arity, {tuple(mono): Fraction(1)})

    def __add__(self, other: "Polynomial") -> "Polynomial":
        data = dict(self.terms)
        for m, c in other.terms.items():
            data[m] = data.get(m, Fraction(0)) + c
        return Polynomial(self.arity, data)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scale(-1)

    def scale(self, c) -> "Polynomial":
        return Polynomial(self.arity, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        data: dict[tuple[int, ...], Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                data[m] = data.get(m, Fraction(0)) + c1 * c2
        return Polynomial(self.arity, data)

    def diff(self, i: int) -> "Polynomial":
        data: dict[tuple[int, ...], Fraction] = {}
        for m, c in self.terms.items():
            if m[i] == 0:
                continue
            dm = list(m)
            dm[i] -= 1
            data[tuple(dm)] = data.get(tuple(dm), Fraction(0)) + c * m[i]
        return Polynomial(self.arity, data)

    def __call__(self, point: Sequence):
        total = 0
        for m, c in self.terms.items():
            v = c
            for e, x in zip(m, point):
                for _ in range(e):
                    v = v * x
            total = total + v
        return total

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.arity == other.arity and self.terms == other.terms

    def __hash__(self):
        return hash((self.arity, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial({format_polynomial(self)!r})"


def format_polynomial(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    chunks = []
    for m, c in sorted(p.terms.items()):
        factors = []
        if c != 1 or not any(m):
            factors.append(str(c))
        for i, e in enumerate(m):
            if e == 1:
                factors.append(f"x{i + 1}")
            elif e > 1:
                factors.append(f"x{i + 1}^{e}")
        chunks.append("*".join(factors))
    return " + ".join(chunks).replace("+ -", "- ")


def parse_polynomial(text: str, arity: int) -> Polynomial:
    """Parse ``1 + 2*x1*x2 - x2^2`` style polynomial text."""
    pos = 0
    n = len(text)

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def read_int() -> int:
        nonlocal pos
        start = pos
        while pos < n and text[pos].isdigit():
            pos += 1
        if pos == start:
            raise ParseError("expected a number", text, pos)
        return int(text[start:pos])

    def read_factor() -> tuple[Fraction, tuple[int, ...]]:
        nonlocal pos
        if pos < n and text[pos] == "x":
            pos += 1
            idx = read_int()
            if not 1 <= idx <= arity:
                raise ParseError(f"variable x{idx} outside arity {arity}", text, pos)
            power = 1
            if pos < n and text[pos] == "^":
                pos += 1
                power = read_int()
            mono = [0] * arity
            mono[idx - 1] = power
            return Fraction(1), tuple(mono)
        num = read_int()
        if pos < n and text[pos] == "/":
            pos += 1
            den = read_int()
            if den == 0:
                raise ParseError("zero denominator", text, pos)
            return Fraction(num, den), (0,) * arity
        return Fraction(num), (0,) * arity

    terms: dict[tuple[int, ...], Fraction] = {}
    skip_ws()
    if pos == n:
        raise ParseError("empty polynomial", text, 0)
    first = True
    while pos < n:
        sign = Fraction(1)
        if text[pos] in "+-":
            sign = Fraction(-1) if text[pos] == "-" else Fraction(1)
            pos += 1
            skip_ws()
        elif not first:
            raise ParseError("expected '+' or '-'", text, pos)
        coeff, mono = read_factor()
        skip_ws()
        while pos < n and text[pos] == "*":
            pos += 1
            skip_ws()
            c2, m2 = read_factor()
            coeff *= c2
            mono = tuple(a + b for a, b in zip(mono, m2))
            skip_ws()
        terms[mono] = terms.get(mono, Fraction(0)) + sign * coeff
        first = False
        skip_ws()
    return Polynomial(arity, terms)


@dataclass(frozen=True)
class PolyVectorField:
    """A vector field on R^e with polynomial components."""

    components: tuple[Polynomial, ...]

    def __post_init__(self):
        e = len(self.components)
        if e == 0:
            raise DomainError("a vector field needs at least one component")
        if any(p.arity != e for p in self.components):
            raise InvariantViolation("component arity must equal the dimension")

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, point: Sequence) -> tuple:
        return tuple(p(point) for p in self.components)

    def scale(self, c) -> "PolyVectorField":
        return PolyVectorField(tuple(p.scale(c) for p in self.components))

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(
            tuple(a + b for a, b in zip(self.components, other.components))
        )

    def __sub__(self, other: "PolyVectorField") -> "PolyVectorField":
        return self + other.scale(-1)

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.components)

    @staticmethod
    def identity(e: int) -> "PolyVectorField":
        return PolyVectorField(tuple(Polynomial.variable(e, i) for i in range(e)))

    @staticmethod
    def zero(e: int) -> "PolyVectorField":
        return PolyVectorField(tuple(Polynomial(e) for _ in range(e)))

    def to_json(self) -> dict:
        return {
            "e": self.dim,
            "components": [format_polynomial(p) for p in self.components],
        }

    @staticmethod
    def from_json(obj: dict) -> "PolyVectorField":
        try:
            e = int(obj["e"])
            comps = [parse_polynomial(t, e) for t in obj["components"]]
        except (KeyError, TypeError) as exc:
            raise InvariantViolation(f"bad fields payload: {exc}") from exc
        if len(comps) != e:
            raise InvariantViolation("fields payload must have e components")
        return PolyVectorField(tuple(comps))


def vf_pre_lie(f: PolyVectorField, g: PolyVectorField) -> PolyVectorField:
    """(f <| g)_k = sum_i f^i d_i g^k."""
    e = f.dim
    comps = []
    for k in range(e):
        acc = Polynomial(e)
        for i in range(e):
            acc = acc + f.components[i] * g.components[k].diff(i)
        comps.append(acc)
    return PolyVectorField(tuple(comps))


def directional_derivative_tensor(
    f: PolyVectorField, directions: Sequence[PolyVectorField]
) -> PolyVectorField:
    """(D^n f)(v_1,...,v_n): the n-th derivative tensor of f contracted with
    the given fields (each partial acts on f only)."""
    e = f.dim
    n = len(directions)
    comps = []
    for k in range(e):
        acc = Polynomial(e)
        for idx in itertools.product(range(e), repeat=n):
            part = f.components[k]
            for i in idx:
                part = part.diff(i)
            if part.is_zero():
                continue
            for m, v in zip(idx, directions):
                part = part * v.components[m]
            acc = acc + part
        comps.append(acc)
    return PolyVectorField(tuple(comps))


def grafting_factor(t: Tree) -> Fraction:
    """The derived prefactor of the elementary differential: the reciprocal
    of the product of multiplicity factorials over the root's child classes."""
    out = Fraction(1)
    run = 1
    prev = None
    for c in t.children:
        if c is prev:
            run += 1
        else:
            run = 1
            prev = c
        out /= run
    return out


class ElementaryDifferentialTable:
    """Memoized tree -> vector field morphism for a fixed field tuple."""

    def __init__(self, fields: Sequence[PolyVectorField]):
        if not fields:
            raise DomainError("need at least one driving field")
        dims = {f.dim for f in fields}
        if len(dims) != 1:
            raise DomainError("all fields must share one state dimension")
        self.fields = tuple(fields)
        self.dim = self.fields[0].dim
        self._memo: dict[Tree, PolyVectorField] = {}

    def __call__(self, t: Tree) -> PolyVectorField:
        cached = self._memo.get(t)
        if cached is not None:
            return cached
        if t.label > len(self.fields):
            raise DomainError(
                f"tree label {t.label} exceeds the {len(self.fields)} driving fields"
            )
        if not t.children:
            out = self.fields[t.label - 1]
        else:
            # Solve f_{s1 |> t'} = f_{s1} <| f_{t'} for f_t, where t' drops
            # one copy of the first child; every other tree in the expansion
            # has fewer root children, so the recursion terminates.
            s1 = t.children[0]
            rest = canonicalize(t.label, t.children[1:])
            lhs = vf_pre_lie(self(s1), self(rest))
            expansion = pre_lie(s1, rest)
            mult = None
            for f, c in expansion:
                tree = f.trees[0]
                if tree is t:
                    mult = c
                    continue
                lhs = lhs - self(tree).scale(c)
            if mult is None:
                raise InvariantViolation("grafting expansion lost the target tree")
            out = lhs.scale(Fraction(1) / mult)
        self._memo[t] = out
        return out

    def evaluate_series(self, a: ForestSeries, point: Sequence) -> tuple:
        """sum over single-tree terms of coeff * f_tree(point)."""
        e = self.dim
        total = [0] * e
        for f, c in a:
            if len(f.trees) != 1:
                continue
            val = self(f.trees[0])(point)
            for i in range(e):
                total[i] = total[i] + c * val[i]
        return tuple(total)


def elementary_differential(t: Tree, fields: Sequence[PolyVectorField]) -> PolyVectorField:
    """The vector field attached to a tree by the unique morphism with
    single-node trees mapped to the driving fields."""
    return ElementaryDifferentialTable(fields)(t)


def branched_euler_solve(
    rp: GridRoughPath, fields: Sequence[PolyVectorField], y0: Sequence
) -> list[tuple]:
    """Euler steps y += f_{tree part of X_step}(y) over the grid."""
    table = ElementaryDifferentialTable(fields)
    y = tuple(y0)
    out = [y]
    for step in rp.steps:
        delta = table.evaluate_series(step, y)
        y = tuple(a + b for a, b in zip(y, delta))
        out.append(y)
    return out


def geometric_euler_solve(
    tensor_path: TensorGridPath,
    fields: Sequence[PolyVectorField],
    y0: Sequence,
    basis: GeneratorBasis,
) -> list[tuple]:
    """Euler steps from the word-level driver: differential-operator words of
    the generator fields applied to the identity, weighted by word
    coefficients."""
    table = ElementaryDifferentialTable(fields)
    e = table.dim
    gen_fields: dict[int, PolyVectorField] = {}

    def gen_field(j: int) -> PolyVectorField:
        if j not in gen_fields:
            t = basis.generator_tree(j)
            if t is None:
                raise DomainError(f"generator {j} is not a single tree")
            gen_fields[j] = table(t)
        return gen_fields[j]

    word_ops: dict[Word, PolyVectorField] = {(): PolyVectorField.identity(e)}

    def word_op(word: Word) -> PolyVectorField:
        cached = word_ops.get(word)
        if cached is None:
            cached = vf_pre_lie(gen_field(word[0]), word_op(word[1:]))
            word_ops[word] = cached
        return cached

    y = tuple(y0)
    out = [y]
    for step in tensor_path.steps:
        delta = [0] * e
        for word, c in step:
            if not word:
                continue
            val = word_op(word)(y)
            for i in range(e):
                delta[i] = delta[i] + c * val[i]
        y = tuple(a + b for a, b in zip(y, delta))
        out.append(y)
    return out


def linear_group_rde(rp: GridRoughPath, level: int) -> list[ForestSeries]:
    """Grid solution of the linear equation driven by right multiplication:
    Y_{i+1} = Y_i * exp(log of the i-th increment at the given level)."""
    if level < rp.floor_p:
        raise DomainError("level must be >= floor(p)")
    y = ForestSeries.unit(level)
    out = [y]
    for step in rp.steps:
        ext = exp_star(log_star(step, rp.floor_p).retruncate(level), level)
        y = gl_product(y, ext)
        out.append(y)
    return out
