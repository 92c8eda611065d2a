"""Finitely supported series over the forest basis, with exact coefficients.

Coefficients are ``fractions.Fraction`` in the algebra core; float
coefficients are tolerated at the numerics boundary (Monte Carlo means).

Text grammar: terms joined by ``+``/``-``, each term one of
``coeff '*' forest``, a bare forest, or a bare rational (a multiple of the
empty forest), e.g. ``1 + 2*1 + 1/2*1[1]``.  Printing always emits the
explicit ``coeff*forest`` form with forests in canonical order.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import DomainError, InvariantViolation, ParseError
from .trees import (
    EMPTY_FOREST,
    Forest,
    Tree,
    forest,
    format_forest,
    parse_forest,
    _Scanner,
)

__all__ = ["ForestSeries", "parse_series", "parse_series_or_forest", "format_series"]

Coeff = Fraction  # or float at the numerics boundary


class ForestSeries:
    """Immutable finitely supported map Forest -> coefficient.

    ``truncation`` is the level N (terms of node count > N are dropped on
    construction) or None for an untruncated element.
    """

    __slots__ = ("_terms", "truncation")

    def __init__(
        self,
        terms: Mapping[Forest, Coeff] | Iterable[tuple[Forest, Coeff]] = (),
        truncation: int | None = None,
    ):
        items = terms.items() if isinstance(terms, Mapping) else terms
        data: dict[Forest, Coeff] = {}
        for f, c in items:
            if truncation is not None and f.nodes > truncation:
                continue
            if c == 0:
                continue
            if f in data:
                c = data[f] + c
                if c == 0:
                    del data[f]
                    continue
            data[f] = c
        object.__setattr__(self, "_terms", data)
        object.__setattr__(self, "truncation", truncation)

    def __setattr__(self, name, value):
        raise AttributeError("ForestSeries is immutable")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(truncation: int | None = None) -> "ForestSeries":
        return ForestSeries((), truncation)

    @staticmethod
    def unit(truncation: int | None = None) -> "ForestSeries":
        return ForestSeries({EMPTY_FOREST: Fraction(1)}, truncation)

    @staticmethod
    def of_forest(f: Forest, truncation: int | None = None) -> "ForestSeries":
        return ForestSeries({f: Fraction(1)}, truncation)

    @staticmethod
    def of_tree(t: Tree, truncation: int | None = None) -> "ForestSeries":
        return ForestSeries({forest([t]): Fraction(1)}, truncation)

    # -- access ---------------------------------------------------------------

    @property
    def terms(self) -> Mapping[Forest, Coeff]:
        return self._terms

    def coeff(self, f: Forest) -> Coeff:
        return self._terms.get(f, Fraction(0))

    def __iter__(self):
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Largest node count in the support (0 for the zero series)."""
        return max((f.nodes for f in self._terms), default=0)

    def support(self) -> list[Forest]:
        return sorted(self._terms, key=Forest.sort_key)

    def homogeneous_part(self, n: int) -> "ForestSeries":
        return ForestSeries(
            {f: c for f, c in self._terms.items() if f.nodes == n}, self.truncation
        )

    def graded_parts(self) -> dict[int, dict[Forest, Coeff]]:
        out: dict[int, dict[Forest, Coeff]] = {}
        for f, c in self._terms.items():
            out.setdefault(f.nodes, {})[f] = c
        return out

    # -- linear structure ------------------------------------------------------

    @staticmethod
    def _merge_trunc(a: int | None, b: int | None) -> int | None:
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b)

    def __add__(self, other: "ForestSeries") -> "ForestSeries":
        trunc = self._merge_trunc(self.truncation, other.truncation)
        data = dict(self._terms)
        for f, c in other._terms.items():
            data[f] = data.get(f, 0) + c
        return ForestSeries(data, trunc)

    def __sub__(self, other: "ForestSeries") -> "ForestSeries":
        return self + other.scale(-1)

    def scale(self, c) -> "ForestSeries":
        if c == 0:
            return ForestSeries.zero(self.truncation)
        return ForestSeries({f: v * c for f, v in self._terms.items()}, self.truncation)

    def map_coeffs(self, fn: Callable[[Coeff], Coeff]) -> "ForestSeries":
        return ForestSeries({f: fn(v) for f, v in self._terms.items()}, self.truncation)

    def truncate(self, level: int | None) -> "ForestSeries":
        return ForestSeries(self._terms, self._merge_trunc(self.truncation, level))

    def retruncate(self, level: int | None) -> "ForestSeries":
        """Reinterpret at a new (possibly higher) truncation level."""
        return ForestSeries(self._terms, level)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ForestSeries):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"ForestSeries({format_series(self)!r}, truncation={self.truncation})"

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "truncation": self.truncation,
            "terms": [
                {"forest": format_forest(f), "coeff": _coeff_str(c)}
                for f, c in sorted(self._terms.items(), key=lambda kv: kv[0].sort_key())
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "ForestSeries":
        if not isinstance(obj, dict) or "terms" not in obj:
            raise InvariantViolation("series JSON must be {truncation, terms}")
        trunc = obj.get("truncation")
        if trunc is not None and (not isinstance(trunc, int) or trunc < 0):
            raise InvariantViolation(f"bad truncation level {trunc!r}")
        data: dict[Forest, Coeff] = {}
        for entry in obj["terms"]:
            f = parse_forest(entry["forest"])
            c = _coeff_from_str(entry["coeff"])
            if trunc is not None and f.nodes > trunc:
                raise InvariantViolation(
                    f"term {entry['forest']} exceeds truncation {trunc}"
                )
            if f in data:
                raise InvariantViolation(f"duplicate forest {entry['forest']}")
            data[f] = c
        return ForestSeries(data, trunc)


def _coeff_str(c) -> str:
    # floats are dyadic, so the exact-rational form round-trips bit for bit
    if not isinstance(c, Fraction):
        c = Fraction(float(c))
    return str(c)


def _coeff_from_str(s) -> Coeff:
    if isinstance(s, (int, float)):
        return Fraction(s) if isinstance(s, int) else float(s)
    text = str(s)
    try:
        if "/" in text or text.lstrip("+-").isdigit():
            return Fraction(text)
        return float(text)
    except ValueError as exc:
        raise InvariantViolation(f"bad coefficient {s!r}") from exc


# --- series text grammar ------------------------------------------------------


def format_series(s: ForestSeries) -> str:
    if s.is_zero():
        return "0"
    parts: list[tuple[str, str]] = []
    for f, c in sorted(s.terms.items(), key=lambda kv: kv[0].sort_key()):
        sign = "-" if c < 0 else "+"
        mag = -c if c < 0 else c
        parts.append((sign, f"{_coeff_str(mag)}*{format_forest(f)}"))
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def parse_series_or_forest(text: str, truncation: int | None = None) -> ForestSeries:
    """Forest-first parsing for standalone inputs: a string that is a valid
    forest (e.g. ``1``, ``1 1``, ``e``) is that basis forest; anything else
    goes through the series grammar, where a bare number multiplies the
    empty forest."""
    try:
        f = parse_forest(text)
    except ParseError:
        return parse_series(text, truncation)
    return ForestSeries.of_forest(f, truncation)


def parse_series(text: str, truncation: int | None = None) -> ForestSeries:
    """Parse the series grammar; terms accumulate, result is canonical."""
    sc = _Scanner(text)
    data: dict[Forest, Fraction] = {}
    sc.skip_ws()
    if sc.pos == len(text):
        raise ParseError("empty series", text, 0)
    first = True
    while True:
        sc.skip_ws()
        if sc.pos == len(text):
            break
        sign = Fraction(1)
        ch = sc.peek()
        if ch == "+" or ch == "-":
            sign = Fraction(-1) if ch == "-" else Fraction(1)
            sc.pos += 1
            sc.skip_ws()
        elif not first:
            raise ParseError("expected '+' or '-' between terms", text, sc.pos)
        coeff, f = _parse_term(sc)
        f_key = f
        data[f_key] = data.get(f_key, Fraction(0)) + sign * coeff
        first = False
    return ForestSeries(data, truncation)


def _parse_term(sc: _Scanner) -> tuple[Fraction, Forest]:
    text = sc.text
    if sc.peek() == "e":
        f = sc.read_forest()
        return Fraction(1), f
    if not sc.peek().isdigit():
        raise ParseError("expected a term", text, sc.pos)
    # A run of digits is ambiguous until we look ahead: 'n*...' is a
    # coefficient, 'n[' or 'n <tree>' is a forest, bare 'n' (or 'p/q') is a
    # multiple of the empty forest.
    mark = sc.pos
    num = sc.read_label()
    if sc.peek() == "/":
        sc.pos += 1
        den_mark = sc.pos
        den = sc.read_label()
        if den == 0:
            raise ParseError("zero denominator", text, den_mark)
        coeff = Fraction(num, den)
        if sc.peek() == "*":
            sc.pos += 1
            sc.skip_ws()
            return coeff, sc.read_forest()
        return coeff, EMPTY_FOREST
    if sc.peek() == "*":
        sc.pos += 1
        sc.skip_ws()
        return Fraction(num), sc.read_forest()
    if sc.peek() == "[":
        sc.pos = mark
        return Fraction(1), sc.read_forest()
    # lookahead across whitespace: another tree token means this was a forest
    probe = sc.pos
    while probe < len(text) and text[probe].isspace():
        probe += 1
    if probe < len(text) and text[probe].isdigit():
        sc.pos = mark
        return Fraction(1), sc.read_forest()
    return Fraction(num), EMPTY_FOREST
