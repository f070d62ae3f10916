"""Confluent hypergeometric series and the closed-form canonical solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, KummerUndefinedError
from .model import RabiParams, canonical_matrix
from .numdiff import derivative

MAX_TERMS = 5000


def _nonpositive_integer(c, tol=1e-12):
    c = complex(c)
    return abs(c.imag) <= tol and c.real <= tol and abs(c.real - round(c.real)) <= tol


def _series(a, c, z, tol, max_terms):
    total = 1.0 + 0j
    term = 1.0 + 0j
    for k in range(max_terms):
        term *= (a + k) / (c + k) * z / (k + 1)
        total += term
        if term == 0:
            return total, 0.0, k + 1
        # bound on the remaining tail once the term ratio is below 1/2
        ratio = abs((a + k + 1) / (c + k + 1) * z / (k + 2))
        if ratio < 0.5:
            tail = abs(term) * ratio / (1.0 - ratio)
            if tail <= tol * max(abs(total), 1e-300):
                return total, tail / max(abs(total), 1e-300), k + 1
    raise ConvergenceError(
        f"1F1({a}, {c}; {z}) did not converge in {max_terms} terms "
        f"(last term {abs(term):.3e}, partial sum {total})",
        residual=abs(term),
    )


def kummer_1f1(a, c, z, tol: float = 1e-16, full_output: bool = False,
               max_terms: int = MAX_TERMS):
    """Kummer's confluent series ``1F1(a; c; z)``.

    Summed term by term until the geometric bound on the tail drops below
    ``tol`` relative to the partial sum. For ``Re z < 0`` the series is
    evaluated as ``exp(z) 1F1(c - a; c; -z)`` to avoid cancellation between
    large alternating terms.

    With ``full_output`` a dict with the achieved relative tolerance and the
    number of terms is returned as well.
    """
    if _nonpositive_integer(c):
        raise KummerUndefinedError(f"Kummer undefined: c = {c} is a non-positive integer")
    a, c, z = complex(a), complex(c), complex(z)
    if z.real < 0:
        val, achieved, n = _series(c - a, c, -z, tol, max_terms)
        val = np.exp(z) * val
    else:
        val, achieved, n = _series(a, c, z, tol, max_terms)
    if full_output:
        return val, {"achieved_tol": achieved, "terms": n, "converged": True}
    return val


def _branch(params, A, branch):
    if branch not in ("+", "-"):
        raise ValueError("branch must be '+' or '-'")
    sign = 1.0 if branch == "+" else -1.0
    t = 1 if branch == "+" else 2
    a_k, c_k = 1.0 + sign * A, 1.0 + 2.0 * sign * A
    if _nonpositive_integer(c_k):
        raise KummerUndefinedError(
            f"Kummer undefined on the {branch} branch: c = 1 {branch} 2A = {c_k:g} "
            "(one-dimensional case, use the other branch)"
        )
    rho = params.base + sign * A
    return a_k, c_k, rho, t


def canonical_solution_pair(params: RabiParams, A: float, branch: str, z):
    """Entire-at-origin solution ``(F1, F2)`` of the canonical system.

    ``F1(z) = z**rho exp(lam z) 1F1(1 +- A; 1 +- 2A; -2 lam z)`` with
    ``rho = E + lam**2 +- A``. Writing ``F1 = z**rho g(z)``, the second
    component is ``F2 = (-1)**t z**rho g(-z)`` with ``t = 1`` on the ``+``
    branch and ``t = 2`` on the ``-`` branch; for integral ``rho`` this is
    ``(-1)**(rho + t) F1(-z)``. ``z**rho`` uses the principal branch.
    """
    a_k, c_k, rho, t = _branch(params, A, branch)
    z = complex(z)
    lam = params.lam

    def g(w):
        return np.exp(lam * w) * kummer_1f1(a_k, c_k, -2.0 * lam * w)

    zr = 1.0 + 0j if rho == 0 else z ** rho
    return zr * g(z), (-1) ** t * zr * g(-z)


def canonical_residual(params: RabiParams, A: float, F1, F2, z) -> float:
    """``max |z F' - P(z) F|`` with Richardson-extrapolated derivatives."""
    F = np.array([F1(z), F2(z)])
    dF = np.array([derivative(F1, z), derivative(F2, z)])
    return float(np.abs(z * dF - canonical_matrix(params, A, z) @ F).max())


def solution_functions(params: RabiParams, A: float, branch: str):
    """``(F1, F2)`` as callables of ``z``."""
    _branch(params, A, branch)  # fail early on the undefined branch

    def F1(z):
        return canonical_solution_pair(params, A, branch, z)[0]

    def F2(z):
        return canonical_solution_pair(params, A, branch, z)[1]

    return F1, F2


@dataclass(frozen=True)
class GrowthCheckConfig:
    """``|F(z)| <= c_bound * exp(gamma |z|**2 / 2)`` with ``0 < gamma < 1``."""

    gamma: float = 0.5
    c_bound: float = 1.0
    sample_radii: tuple = field(default=(5.0, 10.0, 20.0))

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.c_bound <= 0:
            raise ValueError("c_bound must be positive")
        object.__setattr__(self, "sample_radii", tuple(float(r) for r in self.sample_radii))


def sample_on_circles(f, radii, n_angles: int = 64, offset: float = 0.1) -> np.ndarray:
    """``|f(r e^{i phi})|`` on a regular angle grid, one row per radius."""
    phis = offset + 2 * np.pi * np.arange(n_angles) / n_angles
    return np.array([[abs(f(r * np.exp(1j * p))) for p in phis] for r in radii])


def bargmann_growth_check(values, config: GrowthCheckConfig) -> bool:
    """Whether sampled moduli respect the Bargmann-Fock growth bound.

    ``values[i]`` are the moduli sampled on the circle of radius
    ``config.sample_radii[i]``.
    """
    radii = np.asarray(config.sample_radii)
    if np.count_nonzero(radii >= 5.0) < 3:
        raise ValueError("need samples on at least three radii >= 5")
    vals = np.asarray(values, dtype=float)
    if vals.shape[0] != radii.size:
        raise ValueError("one row of samples per configured radius is required")
    with np.errstate(divide="ignore"):
        logs = np.log(vals)
    if not np.all(np.isfinite(logs) | (vals == 0)):
        return False
    bound = math.log(config.c_bound) + 0.5 * config.gamma * radii ** 2
    return bool(np.all((logs <= bound[:, None]) | (vals == 0)))
