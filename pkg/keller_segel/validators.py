""" Configuration Value Validators """
from __future__ import annotations

import math
from typing import TYPE_CHECKING

from keller_segel.constants import (
    VALIDATE_ENUM_ERROR,
    VALIDATE_EXCLUSIVE_MAXIMUM_ERROR,
    VALIDATE_EXCLUSIVE_MINIMUM_ERROR,
    VALIDATE_MAX_ARRAY_LENGTH_ERROR,
    VALIDATE_MAXIMUM_ERROR,
    VALIDATE_MIN_ARRAY_LENGTH_ERROR,
    VALIDATE_MINIMUM_ERROR,
    VALIDATE_TYPE_ERROR,
)

if TYPE_CHECKING:
    from typing import Any, Callable


def create_validator(validation_fn: Callable, wrap_as_validator: bool = False) -> Callable[[Any], bool]:
    def wrapped(value: Any) -> bool:
        try:
            return bool(validation_fn(value)) or not wrap_as_validator
        except (ValueError, TypeError):
            return False

    return wrapped


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


VALIDATOR_MAP: dict[str, Callable] = {
    "string": create_validator(lambda x: isinstance(x, str), True),
    "boolean": create_validator(lambda x: isinstance(x, bool), True),
    "integer": create_validator(lambda x: isinstance(x, int) and not isinstance(x, bool), True),
    "number": create_validator(_is_number, True),
    "array": create_validator(lambda x: isinstance(x, list), True),
    # numbers are accepted where an expression is expected
    "expression": create_validator(lambda x: isinstance(x, str) or _is_number(x), True),
}


def validate_type(schema_section: dict[str, Any], data: Any) -> str | None:
    schema_type: str = schema_section.get("type", "string")
    if not VALIDATOR_MAP[schema_type](data):
        an_articles = ["integer", "array", "expression"]
        return VALIDATE_TYPE_ERROR.format(
            article="a" if schema_type not in an_articles else "an",
            type=schema_type,
            received=f'"{data}"' if isinstance(data, str) else data,
        )
    return None


def validate_enum(schema_section: dict[str, Any], data: Any) -> str | None:
    enum = schema_section.get("enum")
    if enum and data not in enum:
        return VALIDATE_ENUM_ERROR.format(enum=schema_section["enum"], received=f'"{data}"')
    return None


def validate_maximum(schema_section: dict[str, Any], data: int | float) -> str | None:
    maximum = schema_section.get("maximum")
    if maximum is None or not _is_number(data):
        return None
    if schema_section.get("exclusiveMaximum") and data >= maximum:
        return VALIDATE_EXCLUSIVE_MAXIMUM_ERROR.format(data=data, maximum=maximum)
    if data > maximum:
        return VALIDATE_MAXIMUM_ERROR.format(data=data, maximum=maximum)
    return None


def validate_minimum(schema_section: dict[str, Any], data: int | float) -> str | None:
    minimum = schema_section.get("minimum")
    if minimum is None or not _is_number(data):
        return None
    if schema_section.get("exclusiveMinimum") and data <= minimum:
        return VALIDATE_EXCLUSIVE_MINIMUM_ERROR.format(data=data, minimum=minimum)
    if data < minimum:
        return VALIDATE_MINIMUM_ERROR.format(data=data, minimum=minimum)
    return None


def validate_min_items(schema_section: dict[str, Any], data: list) -> str | None:
    min_length: int | None = schema_section.get("minItems")
    if min_length is not None and isinstance(data, list) and len(data) < min_length:
        return VALIDATE_MIN_ARRAY_LENGTH_ERROR.format(data=data, min_length=min_length)
    return None


def validate_max_items(schema_section: dict[str, Any], data: list) -> str | None:
    max_length: int | None = schema_section.get("maxItems")
    if max_length is not None and isinstance(data, list) and len(data) > max_length:
        return VALIDATE_MAX_ARRAY_LENGTH_ERROR.format(data=data, max_length=max_length)
    return None


def validate_items(schema_section: dict[str, Any], data: list) -> str | None:
    items = schema_section.get("items")
    if not items or not isinstance(data, list):
        return None
    for item in data:
        for validator in VALUE_VALIDATORS:
            error = validator(items, item)
            if error:
                return error
    return None


VALUE_VALIDATORS: list[Callable[[dict[str, Any], Any], str | None]] = [
    validate_type,
    validate_minimum,
    validate_maximum,
    validate_min_items,
    validate_max_items,
    validate_enum,
    validate_items,
]


def validate_value(schema_section: dict[str, Any], data: Any) -> str | None:
    """
    Run every value validator; the first error wins. ``None`` passes for nullable keys.
    """
    if data is None and schema_section.get("nullable"):
        return None
    for validator in VALUE_VALIDATORS:
        error = validator(schema_section, data)
        if error:
            return error
    return None
