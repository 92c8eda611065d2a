"""Constructive free generator basis of the forest algebra.

For each degree n the span of all products of lower-degree generators is
extended to a basis of the degree-n slice by scanning trees in canonical
order and keeping the independent ones (exact rational elimination).  The
resulting generators are free: the number of degree-n words over them always
matches the forest count, which pins the change-of-basis tables as a square
system solved once per degree.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import DomainError, InvariantViolation
from .hopf import gl_coproduct, gl_product
from .linalg import Echelon, invert_matrix
from .series import ForestSeries, format_series, parse_series
from .tensoriso import TensorSeries, Word
from .trees import (
    EMPTY_FOREST,
    Forest,
    enumerate_forests,
    enumerate_trees,
    format_forest,
    parse_forest,
)

__all__ = [
    "GeneratorBasis",
    "compute_generators",
    "rewrite_to_words",
    "rewrite_to_forests",
    "expected_generator_counts",
    "save_basis",
    "load_basis",
]

FORMAT_VERSION = 1


@dataclass
class GeneratorBasis:
    """Ordered free generators with forward/backward change-of-basis tables.

    ``forward`` maps each forest of degree <= degree_bound to its unique word
    coefficients; ``backward`` maps each word of total degree <= degree_bound
    to its product expansion in the forest basis.
    """

    degree_bound: int
    labels: int
    generators: list[ForestSeries]
    degrees: list[int]
    forward: dict[Forest, dict[Word, Fraction]]
    backward: dict[Word, ForestSeries]
    non_tree: bool = False
    anomalies: list[str] = field(default_factory=list)

    @property
    def k_total(self) -> int:
        return len(self.generators)

    def count_up_to(self, max_degree) -> int:
        """Number of generators of node-degree <= max_degree."""
        return sum(1 for d in self.degrees if d <= max_degree)

    def generator_tree(self, j: int):
        """The single tree of generator j (1-based), if it is one."""
        gen = self.generators[j - 1]
        sup = gen.support()
        if len(sup) == 1 and len(sup[0].trees) == 1 and gen.coeff(sup[0]) == 1:
            return sup[0].trees[0]
        return None

    def index_of_tree(self, t) -> int | None:
        for j in range(1, self.k_total + 1):
            if self.generator_tree(j) is t:
                return j
        return None

    def word_degree(self, word: Word) -> int:
        total = 0
        for r in word:
            if not 1 <= r <= self.k_total:
                raise DomainError(f"unknown generator index {r}")
            total += self.degrees[r - 1]
        return total


def expected_generator_counts(max_degree: int, d: int) -> list[int]:
    """Generator counts predicted by inverting the forest counting series."""
    f = [len(enumerate_forests(n, d)) for n in range(max_degree + 1)]
    g = [0] * (max_degree + 1)
    for n in range(1, max_degree + 1):
        g[n] = f[n] - sum(g[k] * f[n - k] for k in range(1, n))
    return g[1:]


def _all_words_of_degree(degrees: list[int], n: int) -> list[Word]:
    """All index words whose letter degrees sum to n, sorted."""
    out: list[Word] = []

    def extend(prefix: list[int], remaining: int) -> None:
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for r in range(1, len(degrees) + 1):
            if degrees[r - 1] <= remaining:
                prefix.append(r)
                extend(prefix, remaining - degrees[r - 1])
                prefix.pop()

    if n > 0:
        extend([], n)
    out.sort()
    return out


def compute_generators(
    max_degree: int, d: int, cache_dir: str | os.PathLike | None = None
) -> GeneratorBasis:
    """Graded greedy construction of the free generators up to ``max_degree``.

    Deterministic: ties break by the canonical tree order (smallest first).
    With ``cache_dir`` the tables are persisted keyed by (N, d, version) and
    revalidated on load.
    """
    if max_degree < 1 or d < 1:
        raise DomainError("need max_degree >= 1 and labels >= 1")
    if cache_dir is not None:
        path = Path(cache_dir) / f"basis_N{max_degree}_d{d}_v{FORMAT_VERSION}.json"
        if path.exists():
            return load_basis(path)

    generators: list[ForestSeries] = []
    degrees: list[int] = []
    forward: dict[Forest, dict[Word, Fraction]] = {EMPTY_FOREST: {(): Fraction(1)}}
    backward: dict[Word, ForestSeries] = {(): ForestSeries.unit()}
    expansions: dict[Word, ForestSeries] = {(): ForestSeries.unit()}
    anomalies: list[str] = []
    non_tree = False
    expected = expected_generator_counts(max_degree, d)

    def expansion(word: Word) -> ForestSeries:
        cached = expansions.get(word)
        if cached is not None:
            return cached
        prefix = expansion(word[:-1])
        out = gl_product(prefix, generators[word[-1] - 1])
        expansions[word] = out
        return out

    for n in range(1, max_degree + 1):
        forests_n = list(enumerate_forests(n, d))
        index = {f: i for i, f in enumerate(forests_n)}
        dim = len(forests_n)

        def vector(series: ForestSeries) -> list[Fraction]:
            v = [Fraction(0)] * dim
            for f, c in series:
                v[index[f]] = Fraction(c)
            return v

        old_words = _all_words_of_degree(degrees, n)
        ech = Echelon(dim)
        for w in old_words:
            ech.add(vector(expansion(w)))

        new_count = 0
        for t in enumerate_trees(n, d):
            f = Forest((t,))
            v = [Fraction(0)] * dim
            v[index[f]] = Fraction(1)
            if ech.add(v):
                generators.append(ForestSeries.of_tree(t))
                degrees.append(n)
                new_count += 1
        if ech.rank < dim:
            # Completion by trees failed; fall back to the remaining forests
            # and flag the basis.  Reportable anomaly, not silent behaviour.
            non_tree = True
            for f in forests_n:
                v = [Fraction(0)] * dim
                v[index[f]] = Fraction(1)
                if ech.add(v):
                    generators.append(ForestSeries.of_forest(f))
                    degrees.append(n)
                    new_count += 1
                    anomalies.append(
                        f"degree {n}: basis completed by non-tree forest {format_forest(f)}"
                    )
        if new_count != expected[n - 1]:
            raise InvariantViolation(
                f"degree {n}: selected {new_count} generators, counting series "
                f"predicts {expected[n - 1]}"
            )

        words_n = _all_words_of_degree(degrees, n)
        if len(words_n) != dim:
            raise InvariantViolation(
                f"degree {n}: {len(words_n)} words for {dim} forests"
            )
        matrix = [vector(expansion(w)) for w in words_n]
        # lambda solving  sum_r lambda_r expansion(word_r) = forest  is a
        # column of the inverse transpose
        minv = invert_matrix([list(col) for col in zip(*matrix)])
        for i, f in enumerate(forests_n):
            coeffs = {
                words_n[r]: minv[r][i] for r in range(dim) if minv[r][i] != 0
            }
            forward[f] = coeffs
        for w in words_n:
            backward[w] = expansion(w)

    basis = GeneratorBasis(
        degree_bound=max_degree,
        labels=d,
        generators=generators,
        degrees=degrees,
        forward=forward,
        backward=backward,
        non_tree=non_tree,
        anomalies=anomalies,
    )
    if cache_dir is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_basis(basis, path)
    return basis


def rewrite_to_words(a: ForestSeries, basis: GeneratorBasis) -> TensorSeries:
    """Unique word coefficients of ``a`` in the generator basis; linear and
    degree-preserving."""
    if a.degree() > basis.degree_bound:
        raise DomainError(
            f"series degree {a.degree()} exceeds basis bound {basis.degree_bound}"
        )
    acc: dict[Word, Fraction] = {}
    for f, c in a:
        for w, lam in basis.forward[f].items():
            v = acc.get(w, 0) + c * lam
            if v == 0:
                acc.pop(w, None)
            else:
                acc[w] = v
    return TensorSeries(acc)


def rewrite_to_forests(w: TensorSeries, basis: GeneratorBasis) -> ForestSeries:
    """Exact inverse of :func:`rewrite_to_words` on the covered degree range."""
    acc = ForestSeries.zero()
    for word, c in w:
        if basis.word_degree(word) > basis.degree_bound:
            raise DomainError(
                f"word {word} has degree beyond the basis bound {basis.degree_bound}"
            )
        acc = acc + basis.backward[word].scale(c)
    return acc


# --- persistence ------------------------------------------------------------------


def _word_key(w: Word) -> str:
    return ",".join(str(r) for r in w)


def _word_from_key(s: str) -> Word:
    return tuple(int(x) for x in s.split(",")) if s else ()


def save_basis(basis: GeneratorBasis, path: str | os.PathLike) -> None:
    payload = {
        "version": FORMAT_VERSION,
        "degree_bound": basis.degree_bound,
        "labels": basis.labels,
        "non_tree": basis.non_tree,
        "anomalies": basis.anomalies,
        "generators": [format_series(g) for g in basis.generators],
        "forward": {
            format_forest(f): [[list(w), str(c)] for w, c in sorted(coeffs.items())]
            for f, coeffs in basis.forward.items()
        },
        "backward": {
            _word_key(w): format_series(s) for w, s in basis.backward.items()
        },
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_basis(path: str | os.PathLike) -> GeneratorBasis:
    """Load and fully revalidate a persisted basis."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvariantViolation(f"cannot read basis file {path}: {exc}") from exc
    if payload.get("version") != FORMAT_VERSION:
        raise InvariantViolation(
            f"basis format version {payload.get('version')} is not {FORMAT_VERSION}"
        )
    degree_bound = payload["degree_bound"]
    labels = payload["labels"]
    generators = [parse_series(text) for text in payload["generators"]]
    degrees = []
    for g in generators:
        sup = g.support()
        degs = {f.nodes for f in sup}
        if len(degs) != 1:
            raise InvariantViolation("generator is not homogeneous")
        degrees.append(degs.pop())
    if degrees != sorted(degrees):
        raise InvariantViolation("generator degrees are not non-decreasing")
    forward = {
        parse_forest(k): {tuple(w): Fraction(c) for w, c in entries}
        for k, entries in payload["forward"].items()
    }
    backward = {
        _word_from_key(k): parse_series(text)
        for k, text in payload["backward"].items()
    }
    basis = GeneratorBasis(
        degree_bound=degree_bound,
        labels=labels,
        generators=generators,
        degrees=degrees,
        forward=forward,
        backward=backward,
        non_tree=payload.get("non_tree", False),
        anomalies=list(payload.get("anomalies", [])),
    )
    validate_basis(basis)
    return basis


def validate_basis(basis: GeneratorBasis) -> None:
    """Check every table invariant; raises InvariantViolation on failure."""
    # primitivity of each generator under the unshuffle coproduct
    for g in basis.generators:
        delta = gl_coproduct(g)
        expected = {}
        for f, c in g:
            expected[(f, EMPTY_FOREST)] = c
            expected[(EMPTY_FOREST, f)] = c
        if delta != expected:
            raise InvariantViolation(f"generator {format_series(g)} is not primitive")
    # coverage and mutual inversion of the tables
    for n in range(0, basis.degree_bound + 1):
        for f in enumerate_forests(n, basis.labels):
            coeffs = basis.forward.get(f)
            if coeffs is None:
                raise InvariantViolation(f"forward table misses forest {format_forest(f)}")
            recombined = ForestSeries.zero()
            for w, lam in coeffs.items():
                entry = basis.backward.get(w)
                if entry is None:
                    raise InvariantViolation(f"backward table misses word {w}")
                recombined = recombined + entry.scale(lam)
            if recombined != ForestSeries.of_forest(f):
                raise InvariantViolation(
                    f"tables do not invert each other on {format_forest(f)}"
                )
    # backward entries really are the product expansions of their words
    for w, series in basis.backward.items():
        acc = ForestSeries.unit()
        for r in w:
            acc = gl_product(acc, basis.generators[r - 1])
        if acc != series:
            raise InvariantViolation(f"backward entry for word {w} is not its expansion")
