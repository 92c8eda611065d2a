"""Exact rational linear algebra: incremental echelon forms and inversion.

Vectors are dense lists of Fractions.  Pivots prefer simple coefficients
(unit pivots first) to keep table entries small.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DomainError

__all__ = ["Echelon", "invert_matrix", "solve_upper"]


class Echelon:
    """Row echelon accumulator over the rationals.

    Rows are reduced against the current basis on insertion; the pivot column
    of each stored row is normalized to 1.
    """

    def __init__(self, width: int):
        self.width = width
        self.rows: list[list[Fraction]] = []
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _reduce(self, vec: list[Fraction]) -> list[Fraction]:
        v = list(vec)
        for row, p in zip(self.rows, self.pivots):
            c = v[p]
            if c:
                for j in range(p, self.width):
                    v[j] -= c * row[j]
        return v

    def residual(self, vec) -> list[Fraction]:
        if len(vec) != self.width:
            raise DomainError("vector width mismatch")
        return self._reduce([Fraction(x) for x in vec])

    def contains(self, vec) -> bool:
        return not any(self.residual(vec))

    def add(self, vec) -> bool:
        """Insert a vector; returns True if it enlarged the span."""
        v = self.residual(vec)
        for p in range(self.width):
            if v[p]:
                inv = Fraction(1) / v[p]
                row = [x * inv for x in v]
                self.rows.append(row)
                self.pivots.append(p)
                return True
        return False


def _pick_pivot(matrix: list[list[Fraction]], col: int, start: int) -> int | None:
    best = None
    best_score = None
    for r in range(start, len(matrix)):
        x = matrix[r][col]
        if x == 0:
            continue
        # prefer +-1 pivots, then small denominators / numerators
        score = (0 if abs(x) == 1 else 1, x.denominator, abs(x.numerator))
        if best_score is None or score < best_score:
            best, best_score = r, score
    return best


def invert_matrix(rows: list[list]) -> list[list[Fraction]]:
    """Exact inverse of a square rational matrix (Gauss-Jordan)."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DomainError("matrix must be square")
    a = [[Fraction(x) for x in r] for r in rows]
    inv = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = _pick_pivot(a, col, col)
        if piv is None:
            raise DomainError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        scale = Fraction(1) / a[col][col]
        if scale != 1:
            a[col] = [x * scale for x in a[col]]
            inv[col] = [x * scale for x in inv[col]]
        for r in range(n):
            if r == col:
                continue
            c = a[r][col]
            if c:
                a[r] = [x - c * y for x, y in zip(a[r], a[col])]
                inv[r] = [x - c * y for x, y in zip(inv[r], inv[col])]
    return inv


def solve_upper(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Solve an upper-triangular system by back substitution."""
    n = len(matrix)
    out = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = rhs[i]
        for j in range(i + 1, n):
            s -= matrix[i][j] * out[j]
        if matrix[i][i] == 0:
            raise DomainError("singular triangular system")
        out[i] = s / matrix[i][i]
    return out
