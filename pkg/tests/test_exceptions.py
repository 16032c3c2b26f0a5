"""Tests for custom exceptions."""

import pytest

from bveff.exceptions import (
    BVError,
    CapExceededError,
    ConfigError,
    ParseError,
    PreconditionError,
    PropertyFailure,
    ReportError,
    ResidualTermError,
    ValidationError,
)

ALL = [
    ValidationError,
    ParseError,
    PreconditionError,
    CapExceededError,
    ResidualTermError,
    PropertyFailure,
    ConfigError,
    ReportError,
]


def test_bv_error_is_base_exception():
    error = BVError("test message")
    assert isinstance(error, Exception)
    assert str(error) == "test message"
    assert error.exit_code == 1


@pytest.mark.parametrize("exc_class", ALL)
def test_all_exceptions_inherit_from_bv_error(exc_class):
    error = exc_class("test")
    assert isinstance(error, BVError)
    assert str(error) == "test"


def test_exit_codes():
    """Only the documented codes 1, 2 and 3 are used."""
    assert {exc.exit_code for exc in ALL} <= {1, 2, 3}
    assert ValidationError.exit_code == 2
    assert ParseError.exit_code == 2
    assert PreconditionError.exit_code == 2
    assert CapExceededError.exit_code == 3
    assert PropertyFailure.exit_code == 1


def test_parse_error_is_a_validation_error():
    with pytest.raises(ValidationError):
        raise ParseError("bad file")
