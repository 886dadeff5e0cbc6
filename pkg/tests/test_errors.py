import pytest

from keller_segel.exceptions import (
    ConfigurationError,
    DimensionError,
    InitialConditionError,
    KellerSegelError,
    MeshError,
    MeshFormatError,
    NonConvergenceError,
    SolverError,
)
from keller_segel.validators import (
    validate_enum,
    validate_max_items,
    validate_maximum,
    validate_min_items,
    validate_minimum,
    validate_type,
)


def test_mesh_format_error_message():
    error = MeshFormatError(12, "Expected 2 values, received `1`")
    assert str(error) == "line 12: Expected 2 values, received `1`"
    assert error.line == 12
    assert isinstance(error, MeshError)


def test_configuration_error_message():
    assert str(ConfigurationError("missing required key `t_end` in section [time]")) == (
        "missing required key `t_end` in section [time]"
    )
    error = ConfigurationError("unknown section [tme]", 3)
    assert str(error) == "line 3: unknown section [tme]"
    assert error.line == 3


def test_non_convergence_error_message():
    error = NonConvergenceError(3.5e-4, 200)
    assert str(error) == "Linear solver did not converge after 200 iterations (relative residual 3.500e-04)"
    assert isinstance(error, SolverError)


@pytest.mark.parametrize("error", [MeshError, SolverError, ConfigurationError, InitialConditionError, DimensionError])
def test_errors_share_a_base(error):
    assert issubclass(error, KellerSegelError)


def test_dimension_error_is_a_value_error():
    assert issubclass(DimensionError, ValueError)


class TestValidatorErrors:
    def test_validate_minimum_error(self):
        message = validate_minimum({"minimum": 2}, 0)
        assert message == "The value 0 is lower than the specified minimum of 2"

    def test_validate_exclusive_minimum_error(self):
        message = validate_minimum({"minimum": 2, "exclusiveMinimum": True}, 2)
        assert message == "The value 2 must be strictly greater than 2"

    def test_validate_maximum_error(self):
        message = validate_maximum({"maximum": 2}, 3)
        assert message == "The value 3 exceeds the maximum allowed value of 2"

    def test_validate_exclusive_maximum_error(self):
        message = validate_maximum({"maximum": 2, "exclusiveMaximum": True}, 2)
        assert message == "The value 2 must be strictly lower than 2"

    def test_validate_min_items_error(self):
        message = validate_min_items({"minItems": 3}, [[0, 0]])
        assert message == "The length of the array [[0, 0]] is shorter than the specified minimum length of 3"

    def test_validate_max_items_error(self):
        message = validate_max_items({"maxItems": 2}, [1, 2, 3])
        assert message == "The length of the array [1, 2, 3] exceeds the specified maximum length of 2"

    def test_validate_enum_error(self):
        message = validate_enum({"enum": ["none", "halving"]}, "doubling")
        assert message == "Expected: a member of the enum ['none', 'halving']\n\nReceived: \"doubling\""

    def test_validate_type_error(self):
        assert validate_type({"type": "number"}, "two") == 'Expected: a "number" type value\n\nReceived: "two"'
        assert validate_type({"type": "array"}, 1) == 'Expected: an "array" type value\n\nReceived: 1'
        assert validate_type({"type": "boolean"}, True) is None
