"""Grid-based branched rough paths over sample paths.

A grid rough path stores one group-like level-floor(p) increment per grid
interval; increments over longer spans are products, so the Chen identity
holds by construction.  Sampled semimartingale data uses left-point sums on
its own grid (per-interval area terms vanish and spans telescope to the
left-point Riemann sums); piecewise-linear data uses the exact segment
integrals, i.e. the exponential lift per segment.

Signature extension is log-linear per increment: the level-floor(p)
logarithm is re-read at the target level and exponentiated, then increments
are multiplied out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantViolation
from .freebasis import GeneratorBasis, rewrite_to_words
from .hopf import (
    exp_star,
    gl_product,
    gl_product_basis,
    grouplike_check,
    inverse_grouplike,
    log_star,
)
from .series import ForestSeries
from .tensoriso import (
    PiScaling,
    TensorGridPath,
    TensorSeries,
    Word,
    psi,
    tensor_exp,
    tensor_log,
    tensor_mul,
)
from .trees import Forest, canonicalize, enumerate_forests, forest, single

__all__ = [
    "SamplePath",
    "GridRoughPath",
    "simulate_bm",
    "rationalize_path",
    "ito_lift",
    "ito_to_stratonovich",
    "ito_stratonovich_increment",
    "extend_signature",
    "tensor_grid",
    "extend_signature_tensor",
    "reverse",
    "concat_paths",
    "esig_bm_exponent",
    "esig_bm_closed_form",
    "esig_bm_monte_carlo",
    "moment_bound_check",
    "section6_generator_indices",
]


@dataclass(frozen=True)
class SamplePath:
    """A discretely observed path in R^d.

    ``scheme`` records how values between grid points are understood:
    ``"sampled"`` (raw observations of a rough signal) or ``"linear"``
    (piecewise-linear interpolation, exact integrals available).
    """

    times: tuple
    values: tuple
    scheme: str = "sampled"
    seed: int | None = None

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise InvariantViolation("times and values must have equal length")
        if len(self.times) < 2:
            raise InvariantViolation("a path needs at least two grid points")
        if self.scheme not in ("sampled", "linear"):
            raise InvariantViolation(f"unknown scheme {self.scheme!r}")
        dims = {len(v) for v in self.values}
        if len(dims) != 1:
            raise InvariantViolation("all values must share one dimension")
        for a, b in zip(self.times, self.times[1:]):
            if not b > a:
                raise InvariantViolation("times must be strictly increasing")

    @property
    def dim(self) -> int:
        return len(self.values[0])

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def increments(self) -> list[tuple]:
        return [
            tuple(b[i] - a[i] for i in range(self.dim))
            for a, b in zip(self.values, self.values[1:])
        ]

    def to_json(self) -> dict:
        def num(x):
            return str(x) if isinstance(x, Fraction) else float(x)

        return {
            "times": [num(t) for t in self.times],
            "values": [[num(x) for x in v] for v in self.values],
            "seed": self.seed,
            "scheme": self.scheme,
        }

    @staticmethod
    def from_json(obj: dict) -> "SamplePath":
        def num(x):
            if isinstance(x, str):
                return Fraction(x)
            return float(x)

        try:
            return SamplePath(
                times=tuple(num(t) for t in obj["times"]),
                values=tuple(tuple(num(x) for x in v) for v in obj["values"]),
                scheme=obj.get("scheme", "sampled"),
                seed=obj.get("seed"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvariantViolation(f"bad path payload: {exc}") from exc


def _covariance_factor(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DomainError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise DomainError("covariance must be symmetric")
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-10 * max(1.0, abs(w).max()):
        raise DomainError("covariance must be positive semi-definite")
    return v @ np.diag(np.sqrt(np.clip(w, 0.0, None)))


def simulate_bm(
    d: int, steps: int, cov, seed: int, t: float = 1.0
) -> SamplePath:
    """Brownian path with covariance ``cov``; exact Gaussian increments,
    deterministic per seed."""
    if d < 1 or steps < 1:
        raise DomainError("need d >= 1 and steps >= 1")
    factor = _covariance_factor(cov)
    if factor.shape[0] != d:
        raise DomainError(f"covariance is {factor.shape[0]}x{factor.shape[0]}, path is {d}-dimensional")
    rng = np.random.default_rng(seed)
    dt = t / steps
    incs = rng.standard_normal((steps, d)) @ factor.T * math.sqrt(dt)
    values = np.vstack([np.zeros((1, d)), np.cumsum(incs, axis=0)])
    times = tuple(i * dt for i in range(steps + 1))
    return SamplePath(
        times=times,
        values=tuple(tuple(float(x) for x in row) for row in values),
        scheme="sampled",
        seed=seed,
    )


def rationalize_path(path: SamplePath, bits: int = 20) -> SamplePath:
    """Dyadic rounding of values and times, for exact-arithmetic runs."""
    scale = 1 << bits

    def dy(x) -> Fraction:
        return Fraction(round(Fraction(x) * scale), scale)

    times = [dy(t) for t in path.times]
    for a, b in zip(times, times[1:]):
        if not b > a:
            raise DomainError("rationalization collapsed adjacent times; raise bits")
    return SamplePath(
        times=tuple(times),
        values=tuple(tuple(dy(x) for x in v) for v in path.values),
        scheme=path.scheme,
        seed=path.seed,
    )


class GridRoughPath:
    """Time grid plus group-like level-floor(p) increments per interval."""

    def __init__(self, times: Sequence, steps: Sequence[ForestSeries], p, check: bool = True):
        p = Fraction(p) if not isinstance(p, Fraction) else p
        if p < 1:
            raise DomainError("p must be >= 1")
        if len(steps) != len(times) - 1:
            raise InvariantViolation("need one increment per grid interval")
        level = int(p)
        if check:
            for s in steps:
                if s.truncation != level:
                    raise InvariantViolation(
                        f"increment truncated at {s.truncation}, expected {level}"
                    )
                if not grouplike_check(s, level):
                    raise InvariantViolation("increment is not group-like")
        self.times = tuple(times)
        self.steps = tuple(steps)
        self.p = p

    @property
    def floor_p(self) -> int:
        return int(self.p)

    def increment(self, i: int, j: int) -> ForestSeries:
        """The span increment over [times[i], times[j]] (product of steps)."""
        acc = ForestSeries.unit(self.floor_p)
        for s in self.steps[i:j]:
            acc = gl_product(acc, s)
        return acc

    def chen_holds(self) -> bool:
        """Exhaustive Chen check on all grid triples (exact)."""
        n = len(self.steps)
        spans: dict[tuple[int, int], ForestSeries] = {}
        for i in range(n + 1):
            acc = ForestSeries.unit(self.floor_p)
            spans[(i, i)] = acc
            for j in range(i + 1, n + 1):
                acc = gl_product(acc, self.steps[j - 1])
                spans[(i, j)] = acc
        for i in range(n + 1):
            for j in range(i, n + 1):
                for l in range(j, n + 1):
                    if gl_product(spans[(i, j)], spans[(j, l)]) != spans[(i, l)]:
                        return False
        return True


def ito_lift(path: SamplePath, p) -> GridRoughPath:
    """Level-2 branched lift of a sample path for p in (2,3).

    Sampled scheme: per-interval increments carry no area (left-point sums on
    the sample grid), so span increments accumulate the left-point Riemann
    sums.  Linear scheme: per-interval increments are the exponentials of the
    increment vector (exact integrals of the interpolation).
    """
    p = Fraction(p) if not isinstance(p, Fraction) else p
    if not Fraction(2) < p < Fraction(3):
        raise DomainError(f"the level-2 lift needs p in (2,3), got {p}")
    d = path.dim
    exact = all(
        isinstance(x, Fraction) for v in path.values for x in v
    )
    one = Fraction(1) if exact else 1.0
    steps: list[ForestSeries] = []
    for inc in path.increments():
        if path.scheme == "linear":
            level1 = ForestSeries(
                {forest([single(i + 1)]): inc[i] for i in range(d)}, 2
            )
            steps.append(exp_star(level1, 2))
            continue
        terms: dict[Forest, object] = {forest(): one}
        for i in range(d):
            terms[forest([single(i + 1)])] = inc[i]
        for i in range(d):
            for j in range(i, d):
                terms[forest([single(i + 1), single(j + 1)])] = inc[i] * inc[j]
        steps.append(ForestSeries(terms, 2))
    return GridRoughPath(path.times, steps, p)


def extend_signature(rp: GridRoughPath, level: int) -> ForestSeries:
    """Signature over the whole grid at the given level (>= floor(p)).

    Per increment the level-floor(p) logarithm is exponentiated at the target
    level; increments are then multiplied left to right.
    """
    if level < rp.floor_p:
        raise DomainError("extension level must be >= floor(p)")
    acc = ForestSeries.unit(level)
    for s in rp.steps:
        ell = log_star(s, rp.floor_p).retruncate(level)
        acc = gl_product(acc, exp_star(ell, level))
    return acc


def extend_signature_tensor(
    rp: GridRoughPath, level: int, basis: GeneratorBasis
) -> TensorSeries:
    """The same extension computed through the word algebra."""
    if level < rp.floor_p:
        raise DomainError("extension level must be >= floor(p)")
    scaling = PiScaling.from_basis(basis, rp.p)
    cap = Fraction(level) / scaling.p
    acc = TensorSeries.unit(scaling, cap)
    for s in rp.steps:
        w = psi(s, basis, scaling)
        ell = tensor_log(w, scaling, Fraction(1)).with_cap(scaling, cap)
        acc = tensor_mul(acc, tensor_exp(ell, scaling, cap))
    return acc


def tensor_grid(rp: GridRoughPath, basis: GeneratorBasis) -> TensorGridPath:
    """Per-step word image of a grid rough path."""
    scaling = PiScaling.from_basis(basis, rp.p)
    return TensorGridPath(
        rp.times, [psi(s, basis, scaling) for s in rp.steps], scaling
    )


def reverse(rp: GridRoughPath) -> GridRoughPath:
    """Time reversal: reflected grid, inverse increments in reverse order."""
    t0, t1 = rp.times[0], rp.times[-1]
    times = tuple(t0 + t1 - t for t in reversed(rp.times))
    steps = [inverse_grouplike(s, rp.floor_p) for s in reversed(rp.steps)]
    return GridRoughPath(times, steps, rp.p, check=False)


def concat_paths(a: GridRoughPath, b: GridRoughPath) -> GridRoughPath:
    """Run ``a`` then ``b``, reparametrized onto [0, 1]."""
    if a.p != b.p:
        raise DomainError("regularities differ")

    def rescale(times, lo, hi):
        t0, t1 = times[0], times[-1]
        span = t1 - t0
        return [lo + (t - t0) * (hi - lo) / span for t in times]

    half = Fraction(1, 2)
    times = rescale(a.times, Fraction(0), half) + rescale(b.times, half, Fraction(1))[1:]
    return GridRoughPath(times, list(a.steps) + list(b.steps), a.p, check=False)


# --- Ito-Stratonovich decomposition ------------------------------------------------


def section6_generator_indices(basis: GeneratorBasis, d: int) -> tuple[dict[int, int], dict[tuple[int, int], int]]:
    """Indices of the single-node and two-node generators; raises if the
    basis does not contain the expected degree <= 2 generator set."""
    if basis.labels != d:
        raise DomainError(f"basis is over {basis.labels} labels, path has {d}")
    if basis.degree_bound < 2:
        raise DomainError("basis must cover degree 2")
    level1: dict[int, int] = {}
    level2: dict[tuple[int, int], int] = {}
    for j in range(1, basis.k_total + 1):
        if basis.degrees[j - 1] > 2:
            break
        t = basis.generator_tree(j)
        if t is None:
            raise DomainError("basis degree <= 2 generators are not single trees")
        if t.nodes == 1:
            level1[t.label] = j
        else:
            child = t.children[0]
            level2[(child.label, t.label)] = j
    expected = {(i, j) for i in range(1, d + 1) for j in range(i, d + 1)}
    if set(level1) != set(range(1, d + 1)) or set(level2) != expected:
        raise DomainError(
            "basis does not contain the single-node generators and the "
            "chains [child <= root] at degree 2"
        )
    return level1, level2


def ito_stratonovich_increment(
    increment: ForestSeries, d: int, basis: GeneratorBasis
) -> TensorSeries:
    """Word-level decomposition of a level-2 increment: Stratonovich sums on
    length-2 words in the single-node letters, half-covariation corrections
    from the bracket terms, and covariation coefficients on the degree-2
    generators."""
    level1, level2 = section6_generator_indices(basis, d)
    a = {i: increment.coeff(forest([single(i)])) for i in range(1, d + 1)}
    ladder = {
        (i, j): increment.coeff(forest([canonicalize(j, [single(i)])]))
        for i in range(1, d + 1)
        for j in range(1, d + 1)
    }
    if increment.coeff(forest()) != 1:
        raise DomainError("increment must have unit empty-forest coefficient")

    def cov(i, j):
        if i == j:
            return a[i] * a[i] - 2 * ladder[(i, i)]
        return a[i] * a[j] - ladder[(i, j)] - ladder[(j, i)]

    def strat(i, j):
        return ladder[(i, j)] + cov(i, j) / 2

    half = Fraction(1, 2)
    terms: dict[Word, object] = {(): Fraction(1)}
    for i in range(1, d + 1):
        terms[(level1[i],)] = a[i]
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            w = (level1[i], level1[j])
            coeff = strat(i, j)
            if i < j:
                coeff = coeff + half * cov(i, j)
            elif j < i:
                coeff = coeff - half * cov(j, i)
            terms[w] = coeff
    for i in range(1, d + 1):
        for j in range(i, d + 1):
            c = cov(i, j)
            terms[(level2[(i, j)],)] = -c if i < j else -half * c
    return TensorSeries({w: c for w, c in terms.items() if c != 0})


def ito_to_stratonovich(
    lift: GridRoughPath, basis: GeneratorBasis
) -> list[TensorSeries]:
    """Per-increment word decompositions of an Ito lift (p in (2,3))."""
    if not Fraction(2) < lift.p < Fraction(3):
        raise DomainError("decomposition applies to level-2 lifts, p in (2,3)")
    from .trees import max_label

    d_lift = max(
        (max_label(f) for s in lift.steps for f, _ in s), default=1
    )
    if basis.labels < d_lift:
        raise DomainError(
            f"basis covers {basis.labels} labels but the lift uses {d_lift}"
        )
    return [
        ito_stratonovich_increment(s, basis.labels, basis) for s in lift.steps
    ]


# --- expected signatures -------------------------------------------------------------


def _cov_fractions(cov) -> list[list[Fraction]]:
    rows = [list(r) for r in cov]
    d = len(rows)
    if any(len(r) != d for r in rows):
        raise DomainError("covariance must be square")
    out = [[Fraction(x) if not isinstance(x, Fraction) else x for x in r] for r in rows]
    for i in range(d):
        for j in range(d):
            if out[i][j] != out[j][i]:
                raise DomainError("covariance must be symmetric")
    _covariance_factor(np.array([[float(x) for x in r] for r in out]))
    return out


def esig_bm_exponent(cov, t=1) -> ForestSeries:
    """The degree-2 log of the Brownian expected signature: for covariance S,
    t*( (1/2) sum_ij S^ij n_i * n_j + (1/2) sum_{i<j} S^ij [n_i, n_j]
        - sum_{i<j} S^ij [n_i]_j - (1/2) sum_i S^ii [n_i]_i )."""
    sigma = _cov_fractions(cov)
    d = len(sigma)
    t = Fraction(t) if not isinstance(t, Fraction) else t
    half = Fraction(1, 2)
    acc = ForestSeries.zero()

    def star_singles(i, j):
        return gl_product(
            ForestSeries.of_tree(single(i)), ForestSeries.of_tree(single(j))
        )

    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if sigma[i - 1][j - 1]:
                acc = acc + star_singles(i, j).scale(half * sigma[i - 1][j - 1])
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            s = sigma[i - 1][j - 1]
            if s:
                bracket = star_singles(i, j) - star_singles(j, i)
                acc = acc + bracket.scale(half * s)
                acc = acc - ForestSeries.of_tree(canonicalize(j, [single(i)])).scale(s)
    for i in range(1, d + 1):
        s = sigma[i - 1][i - 1]
        if s:
            acc = acc - ForestSeries.of_tree(canonicalize(i, [single(i)])).scale(half * s)
    return acc.scale(t)


def esig_bm_closed_form(cov, t, level: int, basis: GeneratorBasis | None = None) -> ForestSeries:
    """Expected signature of Brownian motion with covariance ``cov`` at time
    ``t``, truncated at ``level``."""
    z = esig_bm_exponent(cov, t).truncate(level)
    return exp_star(z, level)


# --- vectorized Monte Carlo ----------------------------------------------------------


class _BlockTables:
    """Dense per-degree structure constants of the forest product, as floats."""

    def __init__(self, level: int, d: int):
        self.level = level
        self.d = d
        self.forests: list[tuple[Forest, ...]] = [
            enumerate_forests(n, d) for n in range(level + 1)
        ]
        self.index: dict[Forest, tuple[int, int]] = {}
        for n, row in enumerate(self.forests):
            for i, f in enumerate(row):
                self.index[f] = (n, i)
        self.tables: dict[tuple[int, int], np.ndarray] = {}
        for a in range(1, level):
            for b in range(1, level - a + 1):
                dim_a, dim_b = len(self.forests[a]), len(self.forests[b])
                dim_out = len(self.forests[a + b])
                c = np.zeros((dim_a, dim_b, dim_out))
                for ia, fa in enumerate(self.forests[a]):
                    for ib, fb in enumerate(self.forests[b]):
                        for rho, m in gl_product_basis(fa, fb):
                            c[ia, ib, self.index[rho][1]] += float(m)
                self.tables[(a, b)] = c

    def zero_state(self, n: int) -> list[np.ndarray]:
        return [np.zeros((n, len(self.forests[g]))) for g in range(1, self.level + 1)]

    def pure_mul(self, s: list[np.ndarray], t: list[np.ndarray]) -> list[np.ndarray]:
        """s * t for per-degree blocks of augmentation-ideal elements."""
        out = [np.zeros_like(g) for g in s]
        for g in range(2, self.level + 1):
            acc = out[g - 1]
            for a in range(1, g):
                b = g - a
                acc = acc + np.einsum(
                    "na,abg,nb->ng",
                    s[a - 1],
                    self.tables[(a, b)],
                    t[b - 1],
                    optimize=True,
                )
            out[g - 1] = acc
        return out

    def mul(self, s: list[np.ndarray], t: list[np.ndarray]) -> list[np.ndarray]:
        """(1 + s)(1 + t) - 1 for per-degree coefficient blocks."""
        cross = self.pure_mul(s, t)
        return [sg + tg + cg for sg, tg, cg in zip(s, t, cross)]

    def exp(self, x: list[np.ndarray]) -> list[np.ndarray]:
        """exp(x) - 1 for an augmentation-ideal element x."""
        acc = [arr.copy() for arr in x]
        power = x
        fact = 1.0
        for m in range(2, self.level + 1):
            power = self.pure_mul(power, x)
            fact *= m
            acc = [a + p / fact for a, p in zip(acc, power)]
        return acc


_TABLE_CACHE: dict[tuple[int, int], _BlockTables] = {}


def _block_tables(level: int, d: int) -> _BlockTables:
    key = (level, d)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _BlockTables(level, d)
    return _TABLE_CACHE[key]


def esig_bm_monte_carlo(
    cov,
    t,
    level: int,
    samples: int,
    seed: int,
    steps: int = 32,
    chunk_size: int = 16384,
    workers: int = 1,
) -> tuple[ForestSeries, dict[Forest, float], dict]:
    """Coefficient-wise mean of the extended signature over independent Ito
    lifts of simulated Brownian paths, with per-coefficient standard errors.

    Samples are drawn in fixed-size chunks seeded by (seed, chunk index), so
    the result is independent of the worker count.
    """
    if samples < 2:
        raise DomainError("need at least 2 samples for standard errors")
    factor = _covariance_factor(cov)
    d = factor.shape[0]
    tables = _block_tables(level, d)
    dt = float(t) / steps
    dims = [len(row) for row in tables.forests]

    ladder_idx = np.zeros((d, d), dtype=int)
    for i in range(d):
        for j in range(d):
            f = forest([canonicalize(j + 1, [single(i + 1)])])
            ladder_idx[i, j] = tables.index[f][1]

    sums = [np.zeros(dims[g]) for g in range(1, level + 1)]
    sumsq = [np.zeros(dims[g]) for g in range(1, level + 1)]

    def run_chunk(chunk_idx: int, n: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
        rng = np.random.default_rng(np.random.SeedSequence((seed, chunk_idx)))
        incs = rng.standard_normal((n, steps, d)) @ factor.T * math.sqrt(dt)
        state = tables.zero_state(n)
        for s_i in range(steps):
            dx = incs[:, s_i, :]
            log_blocks = tables.zero_state(n)
            log_blocks[0] = dx.copy()
            lad = -0.5 * np.einsum("ni,nj->nij", dx, dx)
            l2 = np.zeros((n, dims[2]))
            l2[:, ladder_idx.reshape(-1)] = lad.reshape(n, d * d)
            log_blocks[1] = l2
            step_blocks = tables.exp(log_blocks)
            state = tables.mul(state, step_blocks)
        return (
            [blk.sum(axis=0) for blk in state],
            [(blk * blk).sum(axis=0) for blk in state],
        )

    chunks = []
    start = 0
    idx = 0
    while start < samples:
        n = min(chunk_size, samples - start)
        chunks.append((idx, n))
        start += n
        idx += 1

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: run_chunk(*c), chunks))
    else:
        results = [run_chunk(*c) for c in chunks]
    for s_part, q_part in results:
        for g in range(level):
            sums[g] += s_part[g]
            sumsq[g] += q_part[g]

    mean_terms: dict[Forest, float] = {forest(): 1.0}
    stderr: dict[Forest, float] = {forest(): 0.0}
    for g in range(1, level + 1):
        mean = sums[g - 1] / samples
        var = np.maximum(sumsq[g - 1] / samples - mean**2, 0.0) * samples / (samples - 1)
        se = np.sqrt(var / samples)
        for i, f in enumerate(tables.forests[g]):
            stderr[f] = float(se[i])
            if mean[i] != 0.0:
                mean_terms[f] = float(mean[i])
    meta = {"samples": samples, "steps": steps, "seed": seed, "chunks": len(chunks)}
    return ForestSeries(mean_terms, level), stderr, meta


# --- moment bound -----------------------------------------------------------------


def moment_bound_check(
    exponent: ForestSeries,
    K,
    k: int,
    basis: GeneratorBasis,
    max_word_len: int = 8,
) -> list[dict]:
    """Partial sums of the seminorm sum_m K^m sum_{r<=k} |lambda_R| for the
    group-like element exp of ``exponent`` (its star-logarithm), organized by
    word length with consecutive-term ratios.

    The word expansion is exact: the exponent is rewritten in generator words
    and exponentiated in the word algebra with a length cap.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    z = rewrite_to_words(exponent, basis)
    if z.coeff(()) != 0:
        raise DomainError("the exponent must have no constant term")
    # exp(z) in the free word algebra, keeping words of length <= max_word_len
    coeffs: dict[Word, Fraction] = {(): Fraction(1)}
    power: dict[Word, Fraction] = {(): Fraction(1)}
    fact = 1
    m = 0
    min_len = min((len(w) for w, _ in z), default=1)
    while m * min_len <= max_word_len and not (m > 0 and not power):
        m += 1
        nxt: dict[Word, Fraction] = {}
        for w1, c1 in power.items():
            for w2, c2 in z:
                w = w1 + w2
                if len(w) > max_word_len:
                    continue
                v = nxt.get(w, Fraction(0)) + c1 * c2
                if v == 0:
                    nxt.pop(w, None)
                else:
                    nxt[w] = v
        power = nxt
        if not power:
            break
        fact *= m
        inv = Fraction(1, fact)
        for w, c in power.items():
            v = coeffs.get(w, Fraction(0)) + c * inv
            if v == 0:
                coeffs.pop(w, None)
            else:
                coeffs[w] = v

    K = Fraction(K) if not isinstance(K, (float,)) else K
    rows: list[dict] = []
    prev_term = None
    partial = 0
    for length in range(0, max_word_len + 1):
        term = 0
        for w, c in coeffs.items():
            if len(w) == length and all(r <= k for r in w):
                term = term + (K**length) * abs(c)
        partial = partial + term
        ratio = None
        if prev_term is not None and prev_term != 0:
            ratio = term / prev_term
        rows.append(
            {
                "word_length": length,
                "term": term,
                "partial_sum": partial,
                "ratio_to_previous": ratio,
            }
        )
        prev_term = term
    return rows
