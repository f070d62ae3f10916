"""Birkhoff reduction of ``f' = p(z) f`` to ``z F' = P(z) F`` with polynomial P.

With ``f = a(z) F`` and ``a(z) = I + a_1/z + a_2/z**2 + ...`` the coefficients
obey, for every ``l >= 0``,

    sum_{i=0}^{l} (a_{l-i} P_{q+1-i} - p_{q-i} a_{l-i}) = (l-q-1) a_{l-q-1}

(``p_k`` multiplies ``z**k`` in the Laurent expansion of p, ``P_k`` multiplies
``z**k`` in P). Orders ``l = 0..q+1`` fix P in terms of the free matrices
``a_1..a_{q+1}``; orders ``l >= q+2`` are a recurrence for the rest of ``a``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ResonanceError
from .series import (
    InversePowerSeries,
    LaurentMatrixSeries,
    PolynomialMatrix,
    matrix_series_invert,
)

log = logging.getLogger(__name__)

#: relative size below which a singular value counts as structurally zero
PIVOT_RTOL = 1e-12
#: coefficient norm treated as zero when detecting a terminating transformation
TERMINATION_TOL = 1e-10


@dataclass(frozen=True)
class SystemDescriptor:
    """First-order system ``f' = p(z) f`` given by its expansion at infinity."""

    p_series: LaurentMatrixSeries
    singularities: tuple = ()

    def __post_init__(self):
        if self.p_series.top_degree < -1:
            raise ValueError("rank exponent q must be >= -1")

    @property
    def dim(self) -> int:
        return self.p_series.dim

    @property
    def rank_exponent(self) -> int:
        return self.p_series.top_degree

    @property
    def rank(self) -> int:
        return self.rank_exponent + 1

    def p(self, k: int) -> np.ndarray:
        """Coefficient ``p_k`` of ``z**k`` (zero above ``q``)."""
        return self.p_series.coefficient(k)


@dataclass(frozen=True)
class CanonicalSystem:
    """Polynomial coefficient matrix ``P`` of ``z F' = P(z) F``.

    ``free_params[j]`` is the matrix ``a_{j+1}`` that was used to fix ``P``.
    """

    P: PolynomialMatrix
    free_params: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))

    @property
    def dim(self) -> int:
        return self.P.dim

    def coefficient(self, k: int) -> np.ndarray:
        if 0 <= k <= self.P.degree:
            return self.P.coeffs[k]
        return np.zeros((self.dim, self.dim), dtype=complex)


@dataclass(frozen=True)
class TransformSeries:
    """Coefficients ``a_0 = I, a_1, ..., a_K`` of the transformation matrix.

    When ``terminated`` is set every coefficient past ``K`` vanishes, and
    ``window_residual`` records the largest coefficient norm seen in the
    ``m + 2`` orders following ``K`` while solving.
    """

    a_coeffs: np.ndarray
    terminated: bool = False
    window_residual: float = float("nan")
    resonant_orders: tuple = ()

    def __post_init__(self):
        arr = np.array(self.a_coeffs, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "a_coeffs", arr)

    @property
    def order(self) -> int:
        return self.a_coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.a_coeffs.shape[1]

    def coefficient(self, k: int) -> np.ndarray:
        if k <= self.order:
            return self.a_coeffs[k]
        if self.terminated:
            return np.zeros((self.dim, self.dim), dtype=complex)
        raise ValueError(f"a_{k} was not computed (order {self.order})")

    def as_series(self, depth: int | None = None) -> LaurentMatrixSeries:
        s = LaurentMatrixSeries.from_inverse_powers(self.a_coeffs)
        if depth is None:
            return s
        if depth > s.depth and not self.terminated:
            raise ValueError(f"transform is only known to order {self.order}")
        return s.pad(depth)

    def entry(self, r: int, s: int) -> InversePowerSeries:
        return InversePowerSeries(self.a_coeffs[:, r, s])

    def __call__(self, z) -> np.ndarray:
        return self.as_series()(z)


def leading_coefficient(desc: SystemDescriptor) -> np.ndarray:
    """``P_{q+1} = p_q``: the top coefficient survives the transformation unchanged."""
    return np.array(desc.p(desc.rank_exponent))


def _free_params(desc, free_a):
    q, m = desc.rank_exponent, desc.dim
    if free_a is None:
        return np.zeros((q + 1, m, m), dtype=complex)
    arr = np.asarray(free_a, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.shape != (q + 1, m, m):
        raise ValueError(f"need {q + 1} free matrices of shape ({m}, {m}), got {arr.shape}")
    return arr


def canonical_polynomials(desc: SystemDescriptor, free_a=None) -> CanonicalSystem:
    """Coefficients ``P_0..P_{q+1}`` from orders ``l = 0..q+1``.

    ``free_a`` holds ``a_1..a_{q+1}`` (ignored when ``q = -1``). ``P`` is an
    affine function of these matrices.
    """
    q, m = desc.rank_exponent, desc.dim
    free = _free_params(desc, free_a)
    a = [np.eye(m, dtype=complex)] + list(free)
    P = np.zeros((q + 2, m, m), dtype=complex)
    for l in range(q + 2):
        acc = sum(desc.p(q - i) @ a[l - i] for i in range(l + 1))
        acc = acc - sum((a[l - i] @ P[q + 1 - i] for i in range(l)), np.zeros((m, m)))
        P[q + 1 - l] = acc
    return CanonicalSystem(PolynomialMatrix(P), free)


def order_residual(desc: SystemDescriptor, canon: CanonicalSystem, a_coeffs, l: int) -> np.ndarray:
    """Left minus right side of the coefficient identity at order ``l``.

    ``a_coeffs`` lists ``a_0..a_K``; coefficients past ``K`` are taken as zero.
    """
    q, m = desc.rank_exponent, desc.dim
    K = len(a_coeffs) - 1

    def a(k):
        return a_coeffs[k] if 0 <= k <= K else np.zeros((m, m), dtype=complex)

    out = np.zeros((m, m), dtype=complex)
    for i in range(l + 1):
        ai = a(l - i)
        if not ai.any():
            continue
        out += ai @ canon.coefficient(q + 1 - i) - desc.p(q - i) @ ai
    return out - (l - q - 1) * a(l - q - 1)


def _matrix_of(op, m):
    """Dense matrix of a linear map on m x m matrices (row-major vectorisation)."""
    cols = []
    for k in range(m * m):
        e = np.zeros(m * m, dtype=complex)
        e[k] = 1.0
        cols.append(op(e.reshape(m, m)).reshape(-1))
    return np.array(cols).T


def _split_kernel(mat):
    """Orthonormal bases (as columns) of the kernel and of its complement."""
    _, s, vh = np.linalg.svd(mat)
    smax = s.max(initial=0.0)
    keep = s > PIVOT_RTOL * smax if smax > 0 else np.zeros_like(s, dtype=bool)
    return vh[~keep].conj().T, vh[keep].conj().T


def _solve_order(J, rhs, l):
    """Solve ``J u = rhs``; singular but consistent systems get the min-norm solution."""
    s = np.linalg.svd(J, compute_uv=False)
    if s.size and s.min() > PIVOT_RTOL * s.max():
        return np.linalg.solve(J, rhs), False
    u, *_ = np.linalg.lstsq(J, rhs, rcond=PIVOT_RTOL)
    miss = np.abs(J @ u - rhs).max(initial=0.0)
    if miss > 1e-10 * max(1.0, np.abs(rhs).max(initial=0.0)):
        raise ResonanceError(l, f"inconsistent equations, mismatch {miss:.3e}")
    return u, True


def recurrence_solve(desc: SystemDescriptor, canon: CanonicalSystem, depth: int) -> TransformSeries:
    """Solve the recurrence for ``a_0..a_depth``.

    For ``q = 0`` the unknown ``a_l`` enters order ``l`` only through
    ``a_l P_1 - p_0 a_l``. Its component in the kernel of that map is left
    open and fixed one order later, where it appears with the factor
    ``a P_0 - p_{-1} a - (l-1) a``. ``q = -1`` has no such kernel. Ranks above
    one are not supported.
    """
    q, m = desc.rank_exponent, desc.dim
    if q > 0:
        raise NotImplementedError("recurrence_solve supports rank <= 1 (q in {-1, 0})")
    if depth < q + 1:
        raise ValueError(f"depth must be at least {q + 1}")
    need = depth + 1 if q == 0 else depth
    if desc.p_series.depth < need:
        raise ValueError(f"p is expanded to depth {desc.p_series.depth}, need {need}")

    a = [np.eye(m, dtype=complex)]
    resonant = []
    if q == -1:
        P0 = canon.coefficient(0)
        p_1 = desc.p(-1)
        for l in range(1, depth + 1):
            a.append(np.zeros((m, m), dtype=complex))
            r0 = order_residual(desc, canon, a, l)
            J = _matrix_of(lambda X, l=l: X @ P0 - p_1 @ X - l * X, m)
            u, singular = _solve_order(J, -r0.reshape(-1), l)
            if singular:
                resonant.append(l)
            a[l] = u.reshape(m, m)
        return _finish(a, m, resonant)

    P0, P1 = canon.coefficient(0), canon.coefficient(1)
    p0, p_1 = desc.p(0), desc.p(-1)
    kernel, comp = _split_kernel(_matrix_of(lambda X: X @ P1 - p0 @ X, m))
    # a_1: complement part is the free parameter, kernel part fixed at l = 2
    a1 = canon.free_params[0].reshape(-1) if canon.free_params.size else np.zeros(m * m)
    a.append((comp @ (comp.conj().T @ a1)).reshape(m, m))

    for l in range(2, depth + 2):
        a.append(np.zeros((m, m), dtype=complex))
        r0 = order_residual(desc, canon, a, l)
        ops_new = [(c.reshape(m, m) @ P1 - p0 @ c.reshape(m, m)).reshape(-1) for c in comp.T]
        ops_old = [
            (n.reshape(m, m) @ P0 - p_1 @ n.reshape(m, m) - (l - 1) * n.reshape(m, m)).reshape(-1)
            for n in kernel.T
        ]
        J = np.array(ops_new + ops_old).T
        u, singular = _solve_order(J, -r0.reshape(-1), l)
        if singular:
            resonant.append(l)
        x, y = u[: comp.shape[1]], u[comp.shape[1]:]
        a[l - 1] = a[l - 1] + (kernel @ y).reshape(m, m)
        a[l] = (comp @ x).reshape(m, m)
    # a_{depth+1} still lacks its kernel part
    return _finish(a[: depth + 1], m, resonant)


def _finish(a, m, resonant):
    a = np.array(a)
    norms = np.abs(a).reshape(a.shape[0], -1).max(axis=1)
    window = m + 2
    for K in range(a.shape[0] - window):
        tail = norms[K + 1 : K + 1 + window]
        if tail.max() < TERMINATION_TOL:
            log.debug("transform terminates at order %d (window max %.2e)", K, tail.max())
            return TransformSeries(a[: K + 1], True, float(tail.max()), tuple(resonant))
    return TransformSeries(a, False, float("nan"), tuple(resonant))


def verify_canonicalization(desc: SystemDescriptor, transform: TransformSeries,
                            canon: CanonicalSystem, depth: int | None = None,
                            per_order: bool = False):
    """Residual of ``z P - z (a^-1 p a - a^-1 a')`` as a truncated series.

    Each coefficient of the difference is divided by ``max(1, B)``, with B the
    same expression evaluated on coefficient moduli: a bound on the size of
    the terms that cancel at that order. Generic transformations grow
    factorially with the order, so an unscaled residual would only measure
    that growth. The maximum over orders is returned (the per-order profile
    as well if ``per_order``).
    """
    if depth is None:
        depth = transform.order if not transform.terminated else desc.p_series.depth
    depth = min(depth, desc.p_series.depth)
    if not transform.terminated:
        depth = min(depth, transform.order)
    a = transform.as_series(depth)
    p = desc.p_series.truncate(min(desc.p_series.depth, depth))
    ainv = matrix_series_invert(a, depth)
    da = a.derivative()
    T = (ainv @ (p @ a)) - (ainv @ da)
    P = canon.P.to_laurent(depth)
    R = P - T.shift(1)

    eye = LaurentMatrixSeries.identity(a.dim, depth)
    abs_inv = matrix_series_invert(eye - (a - eye).abs(), depth)
    B = (abs_inv @ (p.abs() @ a.abs())) + (abs_inv @ da.abs())
    B = canon.P.to_laurent(depth).abs() + B.shift(1)

    Bc = B.truncate(R.depth).coeffs
    num = np.abs(R.coeffs).reshape(R.coeffs.shape[0], -1).max(axis=1)
    den = np.maximum(1.0, np.abs(Bc).reshape(Bc.shape[0], -1).max(axis=1))
    profile = num / den
    worst = float(profile.max())
    if per_order:
        return worst, profile
    return worst
