import numpy as np
import pytest
from faker import Faker

from keller_segel.exceptions import ConfigurationError
from keller_segel.utils import Expression, relative_change, sup_norm

faker = Faker()


def test_expression_evaluates_elementwise():
    expression = Expression("u**2 - 2*v + exp(0)", ("u", "v"))
    u = np.array([1.0, 2.0, 3.0])
    assert expression(u, np.ones(3)).tolist() == [0.0, 3.0, 8.0]


def test_expression_constant_is_broadcast():
    expression = Expression("2 * pi", ("u", "v"))
    assert np.allclose(expression(np.zeros(4), np.zeros(4)), 2 * np.pi)
    assert expression(0.0, 0.0) == pytest.approx(2 * np.pi)


@pytest.mark.parametrize("function", ["exp", "log", "sqrt", "abs", "tanh", "sin", "cos"])
def test_expression_functions(function):
    value = faker.pyfloat(min_value=0.1, max_value=2.0)
    assert Expression(f"{function}(u)", ("u",))(value) == pytest.approx(getattr(np, function)(value))


def test_expression_two_argument_functions():
    expression = Expression("maximum(u, v) - minimum(u, v)", ("u", "v"))
    assert expression(np.array([1.0, 5.0]), np.array([3.0, 2.0])).tolist() == [2.0, 3.0]


@pytest.mark.parametrize(
    "text,reason",
    [
        ("u +", "invalid syntax"),
        ("__import__('os')", "unknown name `__import__`"),
        ("u.real", "`.` is not allowed"),
        ("x * 2", "unknown name `x`"),
        ("'text'", "`'text'` is not allowed"),
        ("u if v else 1", "unknown name `if`"),
        ("[u, v]", "`[` is not allowed"),
        ("exp", "not a scalar expression"),
        ("9**9**9**9 * u", "constant part cannot be evaluated"),
        ("1 / 0 + u", "constant part cannot be evaluated"),
    ],
)
def test_expression_rejects(text, reason):
    with pytest.raises(ConfigurationError, match="Invalid expression") as error:
        Expression(text, ("u", "v"))
    assert reason in str(error.value)


def test_expression_repr():
    assert repr(Expression(" 1 + u ", ("u",))) == "Expression('1 + u')"


def test_sup_norm():
    assert sup_norm(np.array([-3.0, 2.0])) == 3.0
    assert sup_norm(np.array([])) == 0.0


def test_relative_change():
    old = [np.array([0.5, -0.5]), np.array([4.0, 0.0])]
    new = [np.array([0.75, -0.5]), np.array([4.0, 2.0])]
    # the first field has sup 0.5, so its change is measured against 1
    assert relative_change(old, new) == pytest.approx(0.5)
    assert relative_change(old, old) == 0.0
