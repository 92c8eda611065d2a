"""Finite-dimensional anti-Hermitian representations of the generator space
and the non-commutative Fourier transform on sampled signatures.

A representation assigns finitely many generator indices an anti-Hermitian
matrix; it extends to an algebra morphism on word series.  Group-like
elements are evaluated through exp(M(log g)), which is exactly unitary up to
float roundoff; the term-by-term evaluation of the truncated series is kept
for reporting the truncation discrepancy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, InvariantViolation
from .freebasis import GeneratorBasis, rewrite_to_words
from .hopf import grouplike_check, log_star
from .series import ForestSeries
from .tensoriso import TensorSeries

__all__ = [
    "Representation",
    "random_representation",
    "evaluate_word_series",
    "evaluate_on_grouplike",
    "truncation_discrepancy",
    "char_function",
    "char_function_with_se",
    "distinguish",
]


@dataclass(frozen=True)
class Representation:
    """Anti-Hermitian matrix per generator index (all others map to zero)."""

    dim: int
    matrices: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise InvariantViolation("representation dimension must be >= 1")
        for j, a in self.matrices.items():
            if not isinstance(j, int) or j < 1:
                raise InvariantViolation(f"generator index {j!r} must be a positive int")
            if a.shape != (self.dim, self.dim):
                raise InvariantViolation(f"matrix for generator {j} has shape {a.shape}")
            skew = a + a.conj().T
            if np.abs(skew).max() > 1e-12 * max(1.0, np.abs(a).max()):
                raise InvariantViolation(f"matrix for generator {j} is not anti-Hermitian")

    def matrix(self, j: int) -> np.ndarray | None:
        return self.matrices.get(j)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "entries": {
                str(j): [[[float(x.real), float(x.imag)] for x in row] for row in a]
                for j, a in sorted(self.matrices.items())
            },
        }

    @staticmethod
    def from_json(obj: dict) -> "Representation":
        try:
            dim = int(obj["dim"])
            mats = {}
            for j, rows in obj.get("entries", {}).items():
                a = np.array(
                    [[complex(re, im) for re, im in row] for row in rows],
                    dtype=complex,
                )
                mats[int(j)] = a
        except (KeyError, TypeError, ValueError) as exc:
            raise InvariantViolation(f"bad representation payload: {exc}") from exc
        return Representation(dim, mats)


def random_representation(
    dim: int, indices: Sequence[int], seed: int, scale: float = 1.0
) -> Representation:
    """Gaussian matrices anti-Hermitized, deterministic per seed."""
    rng = np.random.default_rng(seed)
    mats = {}
    for j in indices:
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        mats[j] = scale * (g - g.conj().T) / 2
    return Representation(dim, mats)


def evaluate_word_series(rep: Representation, w: TensorSeries) -> np.ndarray:
    """Algebra-morphism evaluation: words map to matrix products."""
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    eye = np.eye(rep.dim, dtype=complex)
    for word, c in w:
        m = eye
        dead = False
        for r in word:
            a = rep.matrix(r)
            if a is None:
                dead = True
                break
            m = m @ a
        if not dead:
            out = out + float(c) * m
    return out


def evaluate_on_grouplike(
    rep: Representation,
    g: ForestSeries,
    basis: GeneratorBasis,
    level: int | None = None,
) -> np.ndarray:
    """Unitary value exp(M(log g)) of a group-like element."""
    if level is None:
        level = g.truncation
    if level is None:
        raise DomainError("group-like evaluation needs a truncation level")
    exact = all(isinstance(c, Fraction) for _, c in g)
    if not grouplike_check(g, level, tol=0.0 if exact else 1e-9):
        raise DomainError("input is not group-like at its truncation")
    ell = rewrite_to_words(log_star(g, level), basis)
    h = evaluate_word_series(rep, ell)
    h = (h - h.conj().T) / 2  # kill roundoff asymmetry; the Lie value is skew
    return expm(h)


def truncation_discrepancy(
    rep: Representation,
    g: ForestSeries,
    basis: GeneratorBasis,
    level: int | None = None,
) -> float:
    """Operator-norm gap between exp(M(log g)) and the term-by-term
    evaluation of the truncated series."""
    u = evaluate_on_grouplike(rep, g, basis, level)
    direct = evaluate_word_series(rep, rewrite_to_words(g, basis))
    return float(np.linalg.norm(u - direct, 2))


def char_function(
    sample: Sequence[ForestSeries], rep: Representation, basis: GeneratorBasis
) -> np.ndarray:
    """Entrywise mean of the unitary evaluations over the sample."""
    if not sample:
        raise DomainError("empty sample")
    acc = np.zeros((rep.dim, rep.dim), dtype=complex)
    for g in sample:
        acc += evaluate_on_grouplike(rep, g, basis)
    return acc / len(sample)


def char_function_with_se(
    sample: Sequence[ForestSeries], rep: Representation, basis: GeneratorBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and per-entry standard error (real/imag parts in quadrature)."""
    if len(sample) < 2:
        raise DomainError("need at least 2 samples for standard errors")
    values = np.stack(
        [evaluate_on_grouplike(rep, g, basis) for g in sample], axis=0
    )
    mean = values.mean(axis=0)
    n = len(sample)
    var = (
        values.real.var(axis=0, ddof=1) + values.imag.var(axis=0, ddof=1)
    )
    return mean, np.sqrt(var / n)


def distinguish(
    sample_a: Sequence[ForestSeries],
    sample_b: Sequence[ForestSeries],
    reps: Sequence[Representation],
    basis: GeneratorBasis,
    z_threshold: float = 4.0,
) -> dict:
    """Per-representation comparison of the empirical Fourier transforms.

    The verdict is "distinguished" iff some matrix entry differs beyond the
    z-threshold band; failing that the verdict is "not_distinguished", which
    never certifies equality (only finitely many representations are seen).
    """
    if not sample_a or not sample_b:
        raise DomainError("samples must be non-empty")
    report: dict = {"threshold": z_threshold, "representations": []}
    distinguished = False
    for idx, rep in enumerate(reps):
        mean_a, se_a = char_function_with_se(sample_a, rep, basis)
        mean_b, se_b = char_function_with_se(sample_b, rep, basis)
        diff = np.abs(mean_a - mean_b)
        se = np.sqrt(se_a**2 + se_b**2)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / se, np.where(diff > 0, np.inf, 0.0))
        worst = int(np.argmax(z))
        i, j = divmod(worst, rep.dim)
        entry_report = {
            "representation": idx,
            "max_z": float(z.max()),
            "entry": [i, j],
            "difference": float(diff[i, j]),
            "stderr": float(se[i, j]),
            "exceeds": bool(z.max() > z_threshold),
        }
        distinguished = distinguished or entry_report["exceeds"]
        report["representations"].append(entry_report)
    report["verdict"] = "distinguished" if distinguished else "not_distinguished"
    report["note"] = (
        "a not_distinguished verdict is evidence, not a certificate of equality"
    )
    return report
