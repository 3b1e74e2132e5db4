# test_validators.py
import pytest

from validators import (
    InvalidParameter,
    ManifestError,
    ParseError,
    StatisticFailure,
    ValidationError,
    safe_float,
    safe_int,
    validate_min_int,
    validate_probability,
    validate_required_fields,
    validate_split,
    validate_stable_alpha,
)


def test_error_hierarchy():
    assert issubclass(InvalidParameter, ValidationError)
    assert issubclass(ManifestError, ValidationError)
    assert not issubclass(StatisticFailure, ValidationError)


def test_parse_error_line():
    error = ParseError("数値に変換できない値です", 12)
    assert error.line == 12
    assert str(error).startswith("12行目")


@pytest.mark.parametrize("value", [0, 1, -0.1, "x", None])
def test_probability_rejects(value):
    with pytest.raises(InvalidParameter):
        validate_probability(value)


def test_split():
    assert validate_split("0.05", 0.75) == (0.05, 0.75)
    with pytest.raises(InvalidParameter):
        validate_split(0.5, 0.5)


def test_min_int():
    assert validate_min_int(5.0, 1, "n") == 5
    for value in (0, 2.5, True, float('inf'), "abc"):
        with pytest.raises(InvalidParameter):
            validate_min_int(value, 1, "n")


def test_stable_alpha():
    assert validate_stable_alpha(2) == 2.0
    with pytest.raises(InvalidParameter):
        validate_stable_alpha(2.01)


def test_required_fields():
    validate_required_fields({'a': 1, 'b': 'x'}, ['a', 'b'])
    with pytest.raises(ManifestError, match="b"):
        validate_required_fields({'a': 1, 'b': '  '}, ['a', 'b'])


def test_safe_conversions():
    assert safe_int("12") == 12
    assert safe_int("x", default=3) == 3
    assert safe_float("0.5") == 0.5
    assert safe_float(None, default=1.0) == 1.0
