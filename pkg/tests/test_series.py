from fractions import Fraction

import pytest

from glrough.errors import InvariantViolation, ParseError
from glrough.series import (
    ForestSeries,
    format_series,
    parse_series,
    parse_series_or_forest,
)
from glrough.trees import EMPTY_FOREST, canonicalize, forest, single


def test_parse_spec_example():
    s = parse_series("1 + 2*1 + 1/2*1[1]")
    assert s.coeff(EMPTY_FOREST) == 1
    assert s.coeff(forest([single(1)])) == 2
    assert s.coeff(forest([canonicalize(1, [single(1)])])) == Fraction(1, 2)


def test_bare_number_is_unit_multiple():
    assert parse_series("3/4") == ForestSeries({EMPTY_FOREST: Fraction(3, 4)})


def test_forest_first_parsing():
    assert parse_series_or_forest("1") == ForestSeries.of_forest(forest([single(1)]))
    assert parse_series_or_forest("1 1").coeff(forest([single(1), single(1)])) == 1
    assert parse_series_or_forest("e") == ForestSeries.unit()
    assert parse_series_or_forest("2*1").coeff(forest([single(1)])) == 2


def test_signs_and_accumulation():
    s = parse_series("2*1 - 1*1 + 1/3*e")
    assert s.coeff(forest([single(1)])) == 1
    assert s.coeff(EMPTY_FOREST) == Fraction(1, 3)


def test_format_roundtrip():
    s = parse_series("-1/2*1[1] + 3*e + 2*1 2")
    assert parse_series(format_series(s)) == s


def test_zero_series_format():
    assert format_series(ForestSeries.zero()) == "0"


def test_truncation_drops_terms():
    s = ForestSeries({forest([single(1)] * 3): Fraction(1)}, truncation=2)
    assert s.is_zero()


def test_add_merges_truncations():
    a = ForestSeries({forest([single(1)]): Fraction(1)}, 3)
    b = ForestSeries({forest([single(1)] * 2): Fraction(1)}, 2)
    assert (a + b).truncation == 2


def test_json_roundtrip_rational_and_float():
    s = ForestSeries({forest([single(1)]): Fraction(5, 3), forest(): 0.125})
    back = ForestSeries.from_json(s.to_json())
    assert back.coeff(forest([single(1)])) == Fraction(5, 3)
    assert back.coeff(forest()) == Fraction(1, 8)


def test_json_rejects_duplicates():
    with pytest.raises(InvariantViolation):
        ForestSeries.from_json(
            {"truncation": None, "terms": [{"forest": "1", "coeff": "1"}, {"forest": "1", "coeff": "2"}]}
        )


def test_json_rejects_terms_beyond_truncation():
    with pytest.raises(InvariantViolation):
        ForestSeries.from_json(
            {"truncation": 1, "terms": [{"forest": "1 1", "coeff": "1"}]}
        )


def test_parse_error_reports_position():
    with pytest.raises(ParseError):
        parse_series("2**1")
    with pytest.raises(ParseError):
        parse_series("")


def test_degree_and_parts():
    s = parse_series("1 + 2*1 + 1/2*1[1]")
    assert s.degree() == 2
    assert s.homogeneous_part(1).coeff(forest([single(1)])) == 2
    assert set(s.graded_parts()) == {0, 1, 2}
