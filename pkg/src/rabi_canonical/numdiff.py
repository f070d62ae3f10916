"""Numerical derivatives of complex-analytic functions."""
from __future__ import annotations

import math

import numpy as np


def derivative(f, z, order: int = 1, h: float = 1e-3) -> complex:
    """First or second derivative of ``f`` at ``z``.

    Two central differences with steps ``h`` and ``h/2`` are combined to
    cancel the ``h**2`` error term, leaving ``O(h**4)``.
    """
    if order == 1:
        def d(s):
            return (f(z + s) - f(z - s)) / (2 * s)
    elif order == 2:
        def d(s):
            return (f(z + s) - 2 * f(z) + f(z - s)) / (s * s)
    else:
        raise ValueError("only first and second derivatives are supported")
    return (4 * d(h / 2) - d(h)) / 3


def cauchy_derivative(f, z, order: int = 1, radius: float = 0.05, n: int = 32) -> complex:
    """``f^(order)(z)`` from the trapezoid rule on the circle ``|w - z| = radius``.

    Exponentially accurate for functions analytic in a disc somewhat larger
    than ``radius``; roundoff grows like ``order! / radius**order``.
    """
    k = np.arange(n)
    w = np.exp(2j * np.pi * k / n)
    vals = np.array([f(z + radius * wk) for wk in w])
    return complex(math.factorial(order) * np.sum(vals * w ** (-order)) / (n * radius ** order))
