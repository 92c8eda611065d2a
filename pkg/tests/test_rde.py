import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from glrough.errors import DomainError, ParseError
from glrough.hopf import exp_star, gl_product, log_star, pre_lie
from glrough.rde import (
    ElementaryDifferentialTable,
    Polynomial,
    PolyVectorField,
    branched_euler_solve,
    directional_derivative_tensor,
    elementary_differential,
    geometric_euler_solve,
    grafting_factor,
    linear_group_rde,
    parse_polynomial,
    vf_pre_lie,
)
from glrough.roughpath import (
    GridRoughPath,
    SamplePath,
    extend_signature,
    ito_lift,
    rationalize_path,
    simulate_bm,
    tensor_grid,
)
from glrough.series import ForestSeries
from glrough.tensoriso import PiScaling, TensorGridPath, psi
from glrough.trees import canonicalize, enumerate_trees, forest, single

P25 = Fraction(5, 2)


def vf(*component_texts: str) -> PolyVectorField:
    e = len(component_texts)
    return PolyVectorField(tuple(parse_polynomial(t, e) for t in component_texts))


@pytest.fixture(scope="module")
def fields2():
    # two driving fields on R^2 with mixed degrees
    return [vf("1 + x2", "x1*x2 - 2"), vf("x1^2", "1/2*x1 + x2^2")]


class TestPolynomials:
    def test_parse_example(self):
        p = parse_polynomial("1 + 2*x1*x2 - x2^2", 2)
        assert p((1, 2)) == 1 + 4 - 4
        assert p((Fraction(1, 2), Fraction(3))) == 1 + 3 - 9

    def test_parse_rational_coefficients(self):
        p = parse_polynomial("1/2*x1 - 3", 1)
        assert p((4,)) == -1

    def test_parse_errors(self):
        with pytest.raises(ParseError):
            parse_polynomial("x3", 2)
        with pytest.raises(ParseError):
            parse_polynomial("", 1)
        with pytest.raises(ParseError):
            parse_polynomial("2**x1", 1)

    def test_diff(self):
        p = parse_polynomial("x1^2*x2", 2)
        assert p.diff(0) == parse_polynomial("2*x1*x2", 2)
        assert p.diff(1) == parse_polynomial("x1^2", 2)

    def test_exact_evaluation(self):
        p = parse_polynomial("x1^3", 1)
        assert p((Fraction(1, 3),)) == Fraction(1, 27)


class TestElementaryDifferentialBase:
    def test_single_node(self, fields2):
        for i in (1, 2):
            assert elementary_differential(single(i), fields2) == fields2[i - 1]

    def test_chain_is_jacobian_action(self, fields2):
        # f_{[n_j]_i} = (Df_i)(f_j), i.e. the derivative tensor with one slot
        for i in (1, 2):
            for j in (1, 2):
                t = canonicalize(i, [single(j)])
                expected = directional_derivative_tensor(
                    fields2[i - 1], [fields2[j - 1]]
                )
                assert elementary_differential(t, fields2) == expected

    def test_cherry_carries_half(self, fields2):
        # repeated children force the 1/2 prefactor via the morphism property
        t = canonicalize(1, [single(2), single(2)])
        expected = directional_derivative_tensor(
            fields2[0], [fields2[1], fields2[1]]
        ).scale(Fraction(1, 2))
        assert elementary_differential(t, fields2) == expected

    def test_grafting_factor_values(self):
        assert grafting_factor(single(1)) == 1
        assert grafting_factor(canonicalize(1, [single(2)])) == 1
        assert grafting_factor(canonicalize(1, [single(2), single(2)])) == Fraction(1, 2)
        assert grafting_factor(
            canonicalize(1, [single(1), single(1), single(1)])
        ) == Fraction(1, 6)

    def test_closed_form_on_all_trees(self, fields2):
        table = ElementaryDifferentialTable(fields2)
        for n in (1, 2, 3, 4):
            for t in enumerate_trees(n, 2):
                direct = directional_derivative_tensor(
                    fields2[t.label - 1], [table(c) for c in t.children]
                ).scale(grafting_factor(t))
                assert table(t) == direct

    def test_label_beyond_fields(self, fields2):
        with pytest.raises(DomainError):
            elementary_differential(single(3), fields2)


class TestPreLieMorphism:
    def test_morphism_up_to_total_degree_4(self, fields2):
        table = ElementaryDifferentialTable(fields2)
        trees = [t for n in (1, 2, 3) for t in enumerate_trees(n, 2)]
        checked = 0
        for t, s in itertools.product(trees, trees):
            if t.nodes + s.nodes > 4:
                continue
            lhs = vf_pre_lie(table(t), table(s))
            rhs = PolyVectorField.zero(2)
            for f, c in pre_lie(t, s):
                rhs = rhs + table(f.trees[0]).scale(c)
            assert (lhs - rhs).is_zero()
            checked += 1
        assert checked > 50

    def test_morphism_e3(self):
        fields = [
            vf("x2", "x3", "1"),
            vf("1", "x1*x3", "x2"),
        ]
        table = ElementaryDifferentialTable(fields)
        trees = [t for n in (1, 2) for t in enumerate_trees(n, 2)]
        for t, s in itertools.product(trees, trees):
            if t.nodes + s.nodes > 4:
                continue
            lhs = vf_pre_lie(table(t), table(s))
            rhs = PolyVectorField.zero(3)
            for f, c in pre_lie(t, s):
                rhs = rhs + table(f.trees[0]).scale(c)
            assert (lhs - rhs).is_zero()


class TestBranchedEuler:
    def test_zero_fields_constant(self):
        path = rationalize_path(simulate_bm(2, 8, np.eye(2), seed=3), 10)
        rp = ito_lift(path, P25)
        zero = [PolyVectorField.zero(2), PolyVectorField.zero(2)]
        states = branched_euler_solve(rp, zero, (Fraction(1), Fraction(2)))
        assert all(s == (1, 2) for s in states)

    def test_one_step_is_tree_sum(self, fields2):
        path = rationalize_path(simulate_bm(2, 1, np.eye(2), seed=4), 10)
        rp = ito_lift(path, P25)
        y0 = (Fraction(1), Fraction(-1))
        states = branched_euler_solve(rp, fields2, y0)
        table = ElementaryDifferentialTable(fields2)
        step = rp.steps[0]
        expected = list(y0)
        for f, c in step:
            if len(f.trees) == 1:
                val = table(f.trees[0])(y0)
                expected = [a + c * v for a, v in zip(expected, val)]
        assert list(states[1]) == expected

    def test_linear_scalar_euler_convergence(self):
        # dY = Y dX along a straight segment: global error is O(h^2)
        def run(steps: int) -> float:
            pts = [(Fraction(i, steps),) for i in range(steps + 1)]
            path = SamplePath(
                times=tuple(Fraction(i, steps) for i in range(steps + 1)),
                values=tuple(pts),
                scheme="linear",
            )
            rp = ito_lift(path, P25)
            states = branched_euler_solve(rp, [vf("x1")], (Fraction(1),))
            return abs(float(states[-1][0]) - math.e)

        e16, e32 = run(16), run(32)
        assert e16 < 0.01
        assert e16 / e32 > 3.0  # halving the step divides the error by ~4


class TestGeometricEuler:
    def test_zero_fields_constant(self, basis22):
        path = rationalize_path(simulate_bm(2, 6, np.eye(2), seed=5), 10)
        rp = ito_lift(path, P25)
        tg = tensor_grid(rp, basis22)
        zero = [PolyVectorField.zero(2), PolyVectorField.zero(2)]
        states = geometric_euler_solve(tg, zero, (Fraction(0), Fraction(0)), basis22)
        assert all(s == (0, 0) for s in states)

    def test_step_identity_on_random_grouplikes(self, fields2, basis22):
        # the word-level one-step sum equals the tree-level one-step sum on
        # any group-like increment, not only Ito lifts
        from conftest import random_primitive

        rng = random.Random(6)
        scaling = PiScaling.from_basis(basis22, P25)
        table = ElementaryDifferentialTable(fields2)
        times = [Fraction(0), Fraction(1)]
        for _ in range(10):
            g = exp_star(random_primitive(rng, 2, 2, nterms=3).scale(Fraction(1, 3)), 2)
            rp = GridRoughPath(times, [g], P25)
            tg = TensorGridPath(times, [psi(g, basis22, scaling)], scaling)
            y0 = (Fraction(1, 2), Fraction(-2))
            branched = branched_euler_solve(rp, fields2, y0)
            geometric = geometric_euler_solve(tg, fields2, y0, basis22)
            assert branched == geometric

    def test_full_path_agreement(self, fields2, basis22):
        for seed in (7, 8):
            path = rationalize_path(
                simulate_bm(2, 12, [[1, 0.5], [0.5, 2]], seed=seed), 10
            )
            rp = ito_lift(path, P25)
            tg = tensor_grid(rp, basis22)
            y0 = (Fraction(1), Fraction(0))
            assert branched_euler_solve(rp, fields2, y0) == geometric_euler_solve(
                tg, fields2, y0, basis22
            )


class TestClassicalEulerReduction:
    def test_level1_driver_reduces_to_euler(self):
        # a level-1 smooth lift (p < 2) drives both schemes as classical Euler
        from glrough.freebasis import compute_generators

        basis = compute_generators(1, 2)
        p = Fraction(3, 2)
        steps = 6
        rng = random.Random(9)
        times = [Fraction(i, steps) for i in range(steps + 1)]
        incs = []
        for _ in range(steps):
            terms = {
                forest([single(i)]): Fraction(rng.randint(-3, 3), 8) for i in (1, 2)
            }
            incs.append(ForestSeries.unit(1) + ForestSeries(terms, 1))
        rp = GridRoughPath(times, incs, p)
        fields = [vf("1 + x2", "x1"), vf("x2", "2")]
        y0 = (Fraction(1), Fraction(1))
        states = branched_euler_solve(rp, fields, y0)
        expected = [y0]
        y = y0
        for inc in incs:
            dy = [Fraction(0), Fraction(0)]
            for i in (1, 2):
                c = inc.coeff(forest([single(i)]))
                val = fields[i - 1](y)
                dy = [a + c * v for a, v in zip(dy, val)]
            y = tuple(a + b for a, b in zip(y, dy))
            expected.append(y)
        assert states == expected
        scaling = PiScaling.from_basis(basis, p)
        tg = TensorGridPath(times, [psi(s, basis, scaling) for s in incs], scaling)
        assert geometric_euler_solve(tg, fields, y0, basis) == expected


class TestLinearGroupRde:
    def test_unit_driver(self):
        times = [Fraction(0), Fraction(1, 2), Fraction(1)]
        rp = GridRoughPath(times, [ForestSeries.unit(2)] * 2, P25)
        states = linear_group_rde(rp, 3)
        assert all(s == ForestSeries.unit(3) for s in states)

    def test_matches_signature_partial_products(self):
        path = rationalize_path(simulate_bm(2, 8, np.eye(2), seed=11), 10)
        rp = ito_lift(path, P25)
        states = linear_group_rde(rp, 3)
        for i in range(len(rp.steps) + 1):
            partial = GridRoughPath(rp.times[: i + 1], rp.steps[:i], rp.p, check=False)
            assert states[i] == extend_signature(partial, 3)

    def test_smooth_segment(self):
        x = Fraction(5, 4)
        path = SamplePath(
            times=(Fraction(0), Fraction(1)),
            values=((Fraction(0),), (x,)),
            scheme="linear",
        )
        rp = ito_lift(path, P25)
        states = linear_group_rde(rp, 4)
        assert states[-1] == exp_star(ForestSeries.of_tree(single(1)).scale(x), 4)

    def test_level_floor(self):
        path = rationalize_path(simulate_bm(1, 2, [[1]], seed=12), 10)
        rp = ito_lift(path, P25)
        with pytest.raises(DomainError):
            linear_group_rde(rp, 1)
