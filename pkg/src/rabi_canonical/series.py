"""Truncated Laurent series at infinity with matrix coefficients.

A :class:`LaurentMatrixSeries` stores the coefficients of

    S(z) = sum_{k=-K}^{q} S_k z^k

as a dense array ``coeffs`` of shape ``(q + K + 1, m, m)`` where row ``j``
holds the coefficient of ``z**(q - j)``. ``q`` is the top degree and ``K`` the
truncation depth: every coefficient down to ``z**(-K)`` is exact, nothing
below is known. Operations propagate depth pessimistically so that no
coefficient is ever reported past the order at which it was validated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRationalError, NotNormalizedError

__all__ = [
    "InversePowerSeries",
    "LaurentMatrixSeries",
    "PolynomialMatrix",
    "laurent_expand_rational",
    "matrix_series_multiply",
    "matrix_series_invert",
]


def _readonly(values, ndim):
    arr = np.array(values, dtype=complex)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d coefficient array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _trim_poly(coeffs):
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return c[:0]
    return c[: nz[-1] + 1]


@dataclass(frozen=True)
class InversePowerSeries:
    """Scalar series ``sum_k c_k z**(-k)`` for ``k = 0..K``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _readonly(self.coeffs, 1))
        if self.coeffs.size == 0:
            raise ValueError("an inverse power series needs at least one coefficient")

    @property
    def truncation_order(self) -> int:
        return self.coeffs.size - 1

    def __add__(self, other: InversePowerSeries) -> InversePowerSeries:
        n = min(self.coeffs.size, other.coeffs.size)
        return InversePowerSeries(self.coeffs[:n] + other.coeffs[:n])

    def __sub__(self, other: InversePowerSeries) -> InversePowerSeries:
        n = min(self.coeffs.size, other.coeffs.size)
        return InversePowerSeries(self.coeffs[:n] - other.coeffs[:n])

    def __mul__(self, other):
        if np.isscalar(other):
            return InversePowerSeries(self.coeffs * other)
        n = min(self.coeffs.size, other.coeffs.size)
        return InversePowerSeries(np.convolve(self.coeffs[:n], other.coeffs[:n])[:n])

    __rmul__ = __mul__

    def __call__(self, z):
        w = 1.0 / np.asarray(z, dtype=complex)
        # Horner in w = 1/z
        out = np.zeros_like(w)
        for c in self.coeffs[::-1]:
            out = out * w + c
        return out

    def to_laurent(self) -> LaurentMatrixSeries:
        return LaurentMatrixSeries(self.coeffs.reshape(-1, 1, 1), 0)


@dataclass(frozen=True)
class LaurentMatrixSeries:
    """m x m matrix Laurent series in descending powers of ``z``."""

    coeffs: np.ndarray
    top_degree: int

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1, 1)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[0] == 0:
            raise ValueError(f"coefficients must have shape (n, m, m), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "top_degree", int(self.top_degree))

    # -- construction -----------------------------------------------------

    @classmethod
    def identity(cls, dim: int, depth: int) -> LaurentMatrixSeries:
        c = np.zeros((depth + 1, dim, dim), dtype=complex)
        c[0] = np.eye(dim)
        return cls(c, 0)

    @classmethod
    def from_inverse_powers(cls, mats) -> LaurentMatrixSeries:
        """Series ``sum_k mats[k] z**(-k)``."""
        return cls(np.asarray(mats, dtype=complex), 0)

    @classmethod
    def from_entries(cls, grid) -> LaurentMatrixSeries:
        """Assemble an m x m series from a grid of 1 x 1 series.

        Entries are aligned to the largest top degree by zero padding and cut
        to the smallest depth among them.
        """
        m = len(grid)
        if any(len(row) != m for row in grid):
            raise ValueError("entry grid must be square")
        top = max(e.top_degree for row in grid for e in row)
        depth = min(e.depth for row in grid for e in row)
        out = np.zeros((top + depth + 1, m, m), dtype=complex)
        for r, row in enumerate(grid):
            for s, entry in enumerate(row):
                if entry.dim != 1:
                    raise ValueError("grid entries must be scalar series")
                for power in range(-depth, entry.top_degree + 1):
                    out[top - power, r, s] = entry.coefficient(power)[0, 0]
        return cls(out, top)

    # -- basic properties -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def depth(self) -> int:
        return self.coeffs.shape[0] - 1 - self.top_degree

    @property
    def powers(self) -> np.ndarray:
        return self.top_degree - np.arange(self.coeffs.shape[0])

    def coefficient(self, power: int) -> np.ndarray:
        """Coefficient matrix of ``z**power`` (zero above the top degree)."""
        if power < -self.depth:
            raise ValueError(f"z^{power} lies below the truncation depth {self.depth}")
        if power > self.top_degree:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.coeffs[self.top_degree - power]

    def inverse_power_coeffs(self, order: int) -> np.ndarray:
        """Coefficients of ``z**0, z**-1, ..., z**-order`` stacked."""
        return np.stack([self.coefficient(-k) for k in range(order + 1)])

    def truncate(self, depth: int) -> LaurentMatrixSeries:
        if depth > self.depth:
            raise ValueError(f"cannot extend depth {self.depth} to {depth}")
        return LaurentMatrixSeries(self.coeffs[: self.top_degree + depth + 1], self.top_degree)

    def pad(self, depth: int) -> LaurentMatrixSeries:
        """Extend with zero coefficients; only valid for exactly terminating series."""
        if depth <= self.depth:
            return self.truncate(depth)
        extra = np.zeros((depth - self.depth, self.dim, self.dim), dtype=complex)
        return LaurentMatrixSeries(np.concatenate([self.coeffs, extra]), self.top_degree)

    def raise_top(self, top: int) -> LaurentMatrixSeries:
        """Same series with zero coefficients prepended up to ``z**top``."""
        if top < self.top_degree:
            raise ValueError("can only raise the top degree")
        extra = np.zeros((top - self.top_degree, self.dim, self.dim), dtype=complex)
        return LaurentMatrixSeries(np.concatenate([extra, self.coeffs]), top)

    def max_norm(self) -> float:
        return float(np.abs(self.coeffs).max())

    # -- arithmetic -------------------------------------------------------

    def _aligned(self, other):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        top = max(self.top_degree, other.top_degree)
        depth = min(self.depth, other.depth)
        a = self.raise_top(top).truncate(depth).coeffs
        b = other.raise_top(top).truncate(depth).coeffs
        return a, b, top

    def __add__(self, other: LaurentMatrixSeries) -> LaurentMatrixSeries:
        a, b, top = self._aligned(other)
        return LaurentMatrixSeries(a + b, top)

    def __sub__(self, other: LaurentMatrixSeries) -> LaurentMatrixSeries:
        a, b, top = self._aligned(other)
        return LaurentMatrixSeries(a - b, top)

    def __neg__(self) -> LaurentMatrixSeries:
        return LaurentMatrixSeries(-self.coeffs, self.top_degree)

    def scale(self, factor) -> LaurentMatrixSeries:
        return LaurentMatrixSeries(self.coeffs * factor, self.top_degree)

    def __matmul__(self, other: LaurentMatrixSeries) -> LaurentMatrixSeries:
        return matrix_series_multiply(self, other)

    def abs(self) -> LaurentMatrixSeries:
        """Entrywise modulus of every coefficient (used for rounding bounds)."""
        return LaurentMatrixSeries(np.abs(self.coeffs), self.top_degree)

    def shift(self, k: int) -> LaurentMatrixSeries:
        """Multiply by ``z**k``."""
        return LaurentMatrixSeries(self.coeffs, self.top_degree + k)

    def derivative(self) -> LaurentMatrixSeries:
        """Termwise d/dz; one order deeper, one degree lower."""
        factors = self.powers.astype(float)[:, None, None]
        return LaurentMatrixSeries(self.coeffs * factors, self.top_degree - 1)

    def __call__(self, z) -> np.ndarray:
        z = complex(z)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for coeff, power in zip(self.coeffs, self.powers):
            out += coeff * z ** int(power)
        return out


@dataclass(frozen=True)
class PolynomialMatrix:
    """m x m matrix polynomial, ``coeffs[k]`` multiplies ``z**k``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _readonly(self.coeffs, 3))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        """Nominal degree (length of the coefficient list minus one)."""
        return self.coeffs.shape[0] - 1

    def effective_degree(self, tol: float = 0.0) -> int:
        """Largest k with a coefficient above ``tol``; -1 for the zero polynomial."""
        norms = np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1).max(axis=1)
        nz = np.flatnonzero(norms > tol)
        return int(nz[-1]) if nz.size else -1

    def to_laurent(self, depth: int) -> LaurentMatrixSeries:
        d = self.degree
        out = np.zeros((d + depth + 1, self.dim, self.dim), dtype=complex)
        out[: d + 1] = self.coeffs[::-1]
        return LaurentMatrixSeries(out, d)

    def __call__(self, z) -> np.ndarray:
        z = complex(z)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out


def laurent_expand_rational(numerator, denominator, depth: int) -> LaurentMatrixSeries:
    """Expand ``numerator(z) / denominator(z)`` about infinity.

    Both polynomials are given by coefficients in ascending powers of ``z``.
    The result is a 1 x 1 series with top degree ``deg(num) - deg(den)``,
    valid for ``|z|`` beyond the largest root of the denominator, and exact
    down to ``z**(-depth)``.

    Examples
    --------
    >>> s = laurent_expand_rational([1.0, -0.5], [0.5, 1.0], 2)   # (1 - z/2)/(z + 1/2)
    >>> s.top_degree, s.coefficient(-1)[0, 0].real
    (0, 1.25)
    """
    if depth < 0:
        raise ValueError(f"depth must be non-negative, got {depth}")
    den = _trim_poly(denominator)
    if den.size == 0:
        raise DegenerateRationalError("degenerate rational: zero denominator")
    num = _trim_poly(numerator)
    if num.size == 0:
        return LaurentMatrixSeries(np.zeros((depth + 1, 1, 1)), 0)

    top = (num.size - 1) - (den.size - 1)
    n_terms = top + depth + 1
    if n_terms <= 0:
        # leading power already below the requested depth
        return LaurentMatrixSeries(np.zeros((depth + 1, 1, 1)), 0)

    # In w = 1/z the quotient is w**(-top) * N~(w) / D~(w) with D~(0) != 0.
    nt = num[::-1]
    dt = den[::-1]
    out = np.zeros(n_terms, dtype=complex)
    for j in range(n_terms):
        acc = nt[j] if j < nt.size else 0.0
        for i in range(1, min(j, dt.size - 1) + 1):
            acc -= dt[i] * out[j - i]
        out[j] = acc / dt[0]
    return LaurentMatrixSeries(out.reshape(-1, 1, 1), top)


def matrix_series_multiply(a: LaurentMatrixSeries, b: LaurentMatrixSeries) -> LaurentMatrixSeries:
    """Cauchy product, truncated where either factor runs out of terms."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    top = a.top_degree + b.top_degree
    depth = min(a.depth - b.top_degree, b.depth - a.top_degree)
    n = top + depth + 1
    if n <= 0:
        raise ValueError("product has no validated coefficients")
    out = np.zeros((a.coeffs.shape[0] + b.coeffs.shape[0] - 1, a.dim, a.dim), dtype=complex)
    for i, ai in enumerate(a.coeffs):
        out[i : i + b.coeffs.shape[0]] += np.matmul(ai, b.coeffs)
    return LaurentMatrixSeries(out[:n], top)


def matrix_series_invert(a: LaurentMatrixSeries, depth: int | None = None,
                         atol: float = 1e-12) -> LaurentMatrixSeries:
    """Inverse of ``I + a_1/z + a_2/z**2 + ...`` by order-by-order recursion.

    ``r_0 = I``, ``r_k = -sum_{j=1..k} a_j r_{k-j}``.
    """
    if depth is None:
        depth = a.depth
    depth = min(depth, a.depth)
    eye = np.eye(a.dim)
    lead = a.coeffs[: a.top_degree] if a.top_degree > 0 else a.coeffs[:0]
    if a.top_degree < 0 or np.abs(lead).max(initial=0.0) > atol:
        raise NotNormalizedError("not Birkhoff-normalized: series has positive powers")
    if np.abs(a.coefficient(0) - eye).max() > atol:
        raise NotNormalizedError("not Birkhoff-normalized: constant term is not the identity")

    ak = a.inverse_power_coeffs(depth)
    r = np.zeros_like(ak)
    r[0] = eye
    for k in range(1, depth + 1):
        # einsum over j of a_j @ r_{k-j}
        r[k] = -np.einsum("jab,jbc->ac", ak[1 : k + 1], r[k - 1 :: -1][:k])
    return LaurentMatrixSeries(r, 0)
