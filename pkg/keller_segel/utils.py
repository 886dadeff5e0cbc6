"""
Utils Module - this file contains utility functions used in multiple places.
"""
from __future__ import annotations

from tokenize import ENDMARKER, NAME, NEWLINE, NL, NUMBER, OP, STRING, TokenError
from typing import TYPE_CHECKING

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr

from keller_segel.constants import EXPRESSION_ERROR
from keller_segel.exceptions import ConfigurationError

if TYPE_CHECKING:
    from typing import Any, Callable, Iterable, NoReturn, Sequence

EXPRESSION_FUNCTIONS: dict[str, Callable] = {
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
    "minimum": sympy.Min,
    "maximum": sympy.Max,
    "tanh": sympy.tanh,
    "sin": sympy.sin,
    "cos": sympy.cos,
}
EXPRESSION_CONSTANTS: dict[str, Any] = {"pi": sympy.pi}

_OPERATORS = {"+", "-", "*", "/", "**", "(", ")", ","}
_LAYOUT = {NEWLINE, NL, ENDMARKER}


class Expression:
    """
    Arithmetic expression over a fixed set of variables, compiled to a numpy function with sympy.

    Only numbers, the named variables, ``+ - * / **`` and the functions in EXPRESSION_FUNCTIONS are accepted.
    Literals are parsed as floats and nothing is simplified, so constant parts overflow instead of growing
    into huge integers.
    """

    def __init__(self, text: str, variables: Sequence[str]) -> None:
        self.text = str(text).strip()
        self.variables = tuple(variables)
        self.symbols = tuple(sympy.Symbol(name) for name in self.variables)
        names = {**EXPRESSION_FUNCTIONS, **EXPRESSION_CONSTANTS, **dict(zip(self.variables, self.symbols))}
        try:
            self.expr = parse_expr(self.text, local_dict=names, transformations=(self._tokens,), evaluate=False)
        except SyntaxError as e:
            self._reject(e.msg)
        except (TokenError, TypeError, ValueError) as e:
            self._reject(str(e.args[0]) if e.args else type(e).__name__)
        if not isinstance(self.expr, sympy.Expr):
            self._reject("not a scalar expression")
        unknown = sorted(str(symbol) for symbol in self.expr.free_symbols - set(self.symbols))
        if unknown:
            self._reject(f"unknown name `{unknown[0]}`")
        self._function = sympy.lambdify(self.symbols, self.expr, "numpy")
        try:
            self(*np.ones((len(self.variables), 1)))
        except ArithmeticError as e:
            self._reject(f"constant part cannot be evaluated ({e})")

    def _reject(self, reason: str) -> NoReturn:
        raise ConfigurationError(EXPRESSION_ERROR.format(expression=self.text, reason=reason))

    def _tokens(self, tokens: list, local_dict: dict, global_dict: dict) -> list:
        result: list = []
        for kind, value in tokens:
            if kind == NUMBER:
                result.extend([(NAME, "Float"), (OP, "("), (STRING, repr(value)), (OP, ")")])
            elif kind == NAME and value not in local_dict:
                raise ValueError(f"unknown name `{value}` (use {', '.join(self.variables)})")
            elif kind in _LAYOUT or kind == NAME or (kind == OP and value in _OPERATORS):
                result.append((kind, value))
            else:
                raise ValueError(f"`{value}` is not allowed")
        return result

    def __call__(self, *args: Any) -> Any:
        with np.errstate(all="ignore"):
            value = self._function(*args)
        if np.ndim(value) == 0 and args and np.ndim(args[0]) > 0:
            value = np.full(np.shape(args[0]), float(value))
        return value

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"


def sup_norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if len(values) else 0.0


def relative_change(old: Iterable[np.ndarray], new: Iterable[np.ndarray]) -> float:
    """
    Largest ``||new - old||_inf / max(||old||_inf, 1)`` over paired fields.
    """
    change = 0.0
    for before, after in zip(old, new):
        change = max(change, sup_norm(after - before) / max(sup_norm(before), 1.0))
    return change
