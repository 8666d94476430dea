import numpy as np
import pytest

from perron.expressions import ExpressionError, evaluate


def test_arithmetic():
    x = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(evaluate("1 + x*2", x), [1.0, 3.0, 5.0])
    np.testing.assert_allclose(evaluate("(x - 1) / 4", x), [-0.25, 0.0, 0.25])
    np.testing.assert_allclose(evaluate("-x + 3", x), [3.0, 2.0, 1.0])


def test_functions():
    x = np.array([-1.0, 0.5])
    np.testing.assert_allclose(evaluate("exp(x)", x), np.exp(x))
    np.testing.assert_allclose(evaluate("abs(x)", x), [1.0, 0.5])
    np.testing.assert_allclose(evaluate("exp(-abs(x))", x), np.exp(-np.abs(x)))


def test_constant_broadcasts():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(evaluate("2.5", x), np.full(5, 2.5))


@pytest.mark.parametrize(
    "bad",
    [
        "__import__('os')",
        "x ** 2",
        "y + 1",
        "exp(x, 2)",
        "open('f')",
        "x if x else 1",
        "[1, 2]",
        "1; 2",
    ],
)
def test_rejects_everything_else(bad):
    with pytest.raises(ExpressionError):
        evaluate(bad, np.array([1.0]))
