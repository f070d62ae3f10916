"""The Rabi system in Bargmann-Fock form and its canonical (Birkhoff) partner.

After the spin rotation the eigenproblem ``H f = E f`` becomes

    f1' = ((E - lam z) f1 - mu f2) / (z + lam)
    f2' = (-mu f1 + (E + lam z) f2) / (z - lam)

with regular singularities at ``z = -lam, +lam`` and a rank-one irregular
point at infinity. The canonical form is

    z F1' = (E + lam**2 - lam z) F1 - A F2
    z F2' = -A F1 + (E + lam**2 + lam z) F2,    A = mu + 2 lam a12

where ``a12`` is the (1, 2) entry of the first transformation coefficient.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .birkhoff import CanonicalSystem, SystemDescriptor, canonical_polynomials
from .numdiff import cauchy_derivative, derivative
from .series import LaurentMatrixSeries, laurent_expand_rational

#: absolute tolerance for integer / half-integer tests
INTEGER_TOL = 1e-9

DEFAULT_DEPTH = 64


@dataclass(frozen=True)
class RabiParams:
    """Physical parameters in units of the boson frequency.

    ``lam`` is the coupling, ``mu`` half the level splitting and ``E`` a
    candidate energy. The physical range is ``lam, mu >= 0``; negative values
    are accepted because the spectrum is symmetric under either sign flip.
    """

    lam: float
    mu: float
    E: float = 0.0

    def __post_init__(self):
        for name in ("lam", "mu", "E"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.lam == 0.0 and self.mu == 0.0:
            raise ValueError("lam and mu must not vanish simultaneously")

    @property
    def base(self) -> float:
        """``E + lam**2``."""
        return self.E + self.lam ** 2

    def with_energy(self, E: float) -> RabiParams:
        return RabiParams(self.lam, self.mu, E)


class CaseTag(enum.Enum):
    NonInteger = "i"
    HalfInteger = "ii"
    IntegerA0 = "iii"
    IntegerAInt = "iv"


@dataclass(frozen=True)
class SolutionCase:
    tag: CaseTag | None
    rule: str
    degeneracy: int


@dataclass(frozen=True)
class IndicialData:
    base: float
    A: float
    roots: tuple
    case: SolutionCase

    @property
    def case_tag(self) -> CaseTag:
        return self.case.tag


def initial_system(params: RabiParams, depth: int = DEFAULT_DEPTH) -> SystemDescriptor:
    """Laurent-expanded coefficient matrix of the Bargmann-Fock system."""
    lam, mu, E = params.lam, params.mu, params.E
    entries = [
        [laurent_expand_rational([E, -lam], [lam, 1.0], depth),
         laurent_expand_rational([-mu], [lam, 1.0], depth)],
        [laurent_expand_rational([-mu], [-lam, 1.0], depth),
         laurent_expand_rational([E, lam], [-lam, 1.0], depth)],
    ]
    p = LaurentMatrixSeries.from_entries(entries)
    if p.top_degree < 0:
        # lam = 0: everything decays like 1/z, keep q = 0 bookkeeping for the engine
        p = p.raise_top(0)
    sing = (-lam, lam) if lam != 0.0 else (0.0,)
    return SystemDescriptor(p, sing)


def initial_matrix(params: RabiParams, z) -> np.ndarray:
    """Exact coefficient matrix p(z) of the initial system."""
    lam, mu, E = params.lam, params.mu, params.E
    return np.array([
        [(E - lam * z) / (z + lam), -mu / (z + lam)],
        [-mu / (z - lam), (E + lam * z) / (z - lam)],
    ], dtype=complex)


def symmetric_first_coefficient(a12: float) -> np.ndarray:
    """``a_1`` off-diagonal part obeying ``a_ij(z) = a_[i+1][j+1](-z)``."""
    return np.array([[0.0, a12], [-a12, 0.0]], dtype=complex)


def canonical_system(params: RabiParams, a12_1: float, depth: int = DEFAULT_DEPTH) -> CanonicalSystem:
    """Canonical system for a given ``a12`` (``a21 = -a12`` implied)."""
    desc = initial_system(params, depth)
    return canonical_polynomials(desc, symmetric_first_coefficient(a12_1))


def a12_for(params: RabiParams, A: float) -> float:
    """The ``a12`` that produces canonical coupling ``A``."""
    if params.lam == 0.0:
        if not np.isclose(A, params.mu):
            raise ValueError("for lam = 0 the canonical coupling is fixed at A = mu")
        return 0.0
    return (A - params.mu) / (2.0 * params.lam)


def canonical_matrix(params: RabiParams, A: float, z) -> np.ndarray:
    """``P(z)`` of the canonical system written directly in terms of ``A``."""
    b, lam = params.base, params.lam
    return np.array([[b - lam * z, -A], [-A, b + lam * z]], dtype=complex)


def indicial_roots(canon: CanonicalSystem, tol: float = INTEGER_TOL) -> IndicialData:
    """Exponents at the origin: eigenvalues ``E + lam**2 +- A`` of ``P(0)``."""
    c = canon.coefficient(0)
    base = float(np.real(c[0, 0]))
    A = float(-np.real(c[0, 1]))
    ev = np.linalg.eigvals(c)
    # order as (base + A, base - A)
    rho1, rho2 = base + A, base - A
    if not np.allclose(sorted(ev.real), sorted([rho1, rho2]), atol=1e-9 * max(1.0, abs(base) + abs(A))):
        raise ValueError("P(0) does not have the Rabi canonical shape")
    return IndicialData(base, A, (rho1, rho2), classify_solution_case(base, A, tol))


def _is_int(x, tol):
    return abs(x - round(x)) <= tol


def _is_half(x, tol):
    return _is_int(x - 0.5, tol) and not _is_int(x, tol)


def classify_solution_case(base: float, A: float, tol: float = INTEGER_TOL) -> SolutionCase:
    """Which of the four canonical solution cases ``(base, A)`` falls into.

    The rule names follow the usual Frobenius bookkeeping: ``D0`` no entire
    solution, ``D1`` exactly one analytic solution set, ``D2`` two integral
    exponents. ``degeneracy`` is the dimension of the entire solution space.
    """
    roots = (base + A, base - A)
    nonneg_int = [r for r in roots if _is_int(r, tol) and round(r) >= 0]

    if not _is_int(base, tol) and not _is_half(base, tol):
        ok = bool(nonneg_int)
        return SolutionCase(CaseTag.NonInteger, "D1" if ok else "D0", 1 if ok else 0)
    if _is_half(base, tol):
        ok = _is_half(A, tol) and bool(nonneg_int)
        return SolutionCase(CaseTag.HalfInteger, "D2" if ok else "D0", 1 if ok else 0)
    if abs(A) <= tol:
        ok = round(base) >= 0
        return SolutionCase(CaseTag.IntegerA0, "D1" if ok else "D0", 2 if ok else 0)
    if _is_int(A, tol) and nonneg_int:
        two = round(base) > 0 and abs(A) <= base + tol
        return SolutionCase(CaseTag.IntegerAInt, "D2", 2 if two else 1)
    if _is_int(A, tol):
        return SolutionCase(CaseTag.IntegerAInt, "D0", 0)
    # integer base with non-integral A: no integral exponent, outside cases (iii)/(iv)
    return SolutionCase(None, "D0", 0)


@dataclass(frozen=True)
class SecondOrderCoeffs:
    """``c2(z) F'' + c1(z) F' + c0(z) F = 0``; coefficients ascending in z."""

    c2: np.ndarray
    c1: np.ndarray
    c0: np.ndarray

    def residual(self, F, z) -> complex:
        ev = np.polynomial.polynomial.polyval
        f0 = F(z)
        f1 = cauchy_derivative(F, z, 1)
        f2 = cauchy_derivative(F, z, 2)
        return ev(z, self.c2) * f2 + ev(z, self.c1) * f1 + ev(z, self.c0) * f0


def second_order_coeffs(params: RabiParams, A: float) -> SecondOrderCoeffs:
    """Second-order equation obeyed by the first canonical component."""
    b, lam = params.base, params.lam
    return SecondOrderCoeffs(
        c2=np.array([0.0, 0.0, 1.0]),
        c1=np.array([0.0, 1.0 - 2.0 * b]),
        c0=np.array([b * b - A * A, lam, -lam * lam]),
    )


def initial_system_residual(params: RabiParams, f1, f2, z) -> float:
    """``max |f' - p(z) f|`` at ``z`` with numerically differentiated f."""
    f = np.array([f1(z), f2(z)])
    df = np.array([derivative(f1, z), derivative(f2, z)])
    return float(np.abs(df - initial_matrix(params, z) @ f).max())


def parity_image(f1, f2):
    """The pair ``(f2(-z), f1(-z))``, again a solution at the same energy."""
    return (lambda z: f2(-z)), (lambda z: f1(-z))


def regular_point_series(params: RabiParams, f1_0: complex, f2_0: complex, order: int = 80):
    """Taylor coefficients about ``z = 0`` of the local solution with given values.

    Converges for ``|z| < |lam|``; needs ``lam != 0`` so that the origin is a
    regular point of the initial system.
    """
    lam, mu, E = params.lam, params.mu, params.E
    if lam == 0.0:
        raise ValueError("z = 0 is singular when lam = 0")
    c = np.zeros(order + 1, dtype=complex)
    d = np.zeros(order + 1, dtype=complex)
    c[0], d[0] = f1_0, f2_0
    for k in range(order):
        cm = c[k - 1] if k else 0.0
        dm = d[k - 1] if k else 0.0
        c[k + 1] = (E * c[k] - lam * cm - mu * d[k] - k * c[k]) / (lam * (k + 1))
        d[k + 1] = (k * d[k] + mu * c[k] - E * d[k] - lam * dm) / (lam * (k + 1))
    return c, d
