"""Isolated exact (Juddian / Kus) solutions from terminating transformations.

If ``a(z) = I + a_1/z + ... + a_n/z**n`` stops at order ``n`` and the
canonical coupling vanishes (``A = 0``), the canonical solutions are
``z**n exp(-+ lam z)`` and ``f = a F`` is a polynomial times an exponential,
hence in Bargmann-Fock space. Termination is only possible with
``E = n - lam**2`` and on an algebraic curve in ``(lam, mu)``.

The symmetric parametrisation ``a22_k = (-1)**k a11_k``, ``a21_k = (-1)**k a12_k``
is used throughout, with ``a12_1 = -mu / (2 lam)`` fixing ``A = 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import oracle
from .birkhoff import (
    TransformSeries,
    canonical_polynomials,
    order_residual,
    recurrence_solve,
)
from .errors import NotEntireError, NotFoundError, SpuriousRootError
from .model import RabiParams, initial_system, symmetric_first_coefficient

log = logging.getLogger(__name__)

ORACLE_GAP_TOL = 1e-6
EXTRA_ORDER_TOL = 1e-9
NEWTON_MAX_ITER = 200


@dataclass(frozen=True)
class ConstraintPolynomial:
    """Polynomial in ``x = lam**2`` and ``y = mu**2``; ``coeffs[(i, j)]`` multiplies ``x**i y**j``."""

    n: int
    coeffs: dict

    def __call__(self, lam: float, mu: float) -> float:
        x, y = lam * lam, mu * mu
        return float(sum(c * x ** i * y ** j for (i, j), c in self.coeffs.items()))

    def lam_squared_roots(self, mu: float) -> np.ndarray:
        """Real roots in ``x = lam**2`` at fixed ``mu``."""
        deg = max(i for i, _ in self.coeffs)
        poly = np.zeros(deg + 1)
        for (i, j), c in self.coeffs.items():
            poly[i] += c * mu ** (2 * j)
        roots = np.roots(poly[::-1])
        return np.sort(roots[np.abs(roots.imag) < 1e-12].real)


def constraint_polynomial(n: int) -> ConstraintPolynomial:
    """Closed-form curve on which the order-``n`` transformation terminates (n = 1, 2)."""
    if n == 1:
        return ConstraintPolynomial(1, {(1, 0): 4.0, (0, 1): 1.0, (0, 0): -1.0})
    if n == 2:
        return ConstraintPolynomial(2, {
            (2, 0): 32.0, (1, 0): -32.0, (1, 1): 12.0,
            (0, 1): -5.0, (0, 2): 1.0, (0, 0): 4.0,
        })
    raise NotImplementedError("closed-form constraint curves are available for n = 1, 2 only")


@dataclass(frozen=True)
class JuddianPoint:
    n: int
    lam: float
    mu: float
    E: float
    transform: TransformSeries
    validated: bool = False
    oracle_gap: float = float("nan")

    @property
    def params(self) -> RabiParams:
        return RabiParams(self.lam, self.mu, self.E)

    @property
    def A(self) -> float:
        return self.mu + 2.0 * self.lam * float(np.real(self.transform.coefficient(1)[0, 1]))


def symmetric_transform(n: int, a11, a12) -> TransformSeries:
    """Terminating transform from its first-row entries ``a11_k, a12_k`` (k = 1..n)."""
    a = np.zeros((n + 1, 2, 2), dtype=complex)
    a[0] = np.eye(2)
    for k in range(1, n + 1):
        s = (-1) ** k
        a[k] = [[a11[k - 1], a12[k - 1]], [s * a12[k - 1], s * a11[k - 1]]]
    return TransformSeries(a, terminated=True, window_residual=0.0)


def _check_mu(n, mu):
    if not mu > 0:
        raise ValueError("μ out of constraint range: μ must be positive (use uncoupled_point for μ = 0)")
    if mu > n:
        raise ValueError(f"μ out of constraint range: need 0 < μ <= E + λ² = {n}")


def uncoupled_point(n: int, lam: float) -> JuddianPoint:
    """``mu = 0``: diagonal binomial transform ``(1 +- lam/z)**n``."""
    a11 = [math.comb(n, k) * lam ** k for k in range(1, n + 1)]
    return JuddianPoint(n, lam, 0.0, n - lam ** 2, symmetric_transform(n, a11, [0.0] * n))


def baseline_curve_n1(mu: float) -> JuddianPoint:
    """First Kus curve ``4 lam**2 + mu**2 = 1`` with ``E = 1 - lam**2``."""
    if not 0.0 < mu < 1.0:
        raise ValueError("μ out of constraint range: no real λ for μ outside (0, 1)")
    lam = math.sqrt(1.0 - mu * mu) / 2.0
    a11 = [(1.0 + mu * mu) / (4.0 * lam)]
    a12 = [-mu / (2.0 * lam)]
    return JuddianPoint(1, lam, mu, 1.0 - lam * lam, symmetric_transform(1, a11, a12))


def _n2_transform(lam, mu):
    a11 = [2 * lam + mu ** 2 / (2 * lam), lam ** 2 + mu ** 2 + (mu ** 4 - mu ** 2) / (8 * lam ** 2)]
    a12 = [-mu / (2 * lam), mu * (6 * lam ** 2 + mu ** 2 - 1) / (4 * lam ** 2)]
    return symmetric_transform(2, a11, a12)


def baseline_curve_n2(mu: float) -> list[JuddianPoint]:
    """Second Kus curve: the positive roots in ``lam**2`` of the quartic, ascending.

    The list is empty when no positive root exists (every ``mu`` beyond 2).
    """
    if not mu > 0:
        raise ValueError("μ out of constraint range: μ must be positive")
    out = []
    for x in constraint_polynomial(2).lam_squared_roots(mu):
        if x <= 0:
            continue
        lam = math.sqrt(x)
        out.append(JuddianPoint(2, lam, mu, 2.0 - x, _n2_transform(lam, mu)))
    return out


class TerminatingEquations:
    """Coefficient identities for a transformation that stops at order ``n``.

    Unknowns, in order: ``lam, a11_1, a11_2, a12_2, ..., a11_n, a12_n``
    (``a12_1 = -mu/(2 lam)`` and ``E = n - lam**2`` are imposed). Equations:
    the first-row entries of the identity at orders ``l = 2..n+2``. Rows two
    and higher orders follow by symmetry and are kept as checks.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = n
        self.orders = tuple(range(2, n + 3))
        names = ["lam", "a11_1"]
        for k in range(2, n + 1):
            names += [f"a11_{k}", f"a12_{k}"]
        self.unknown_names = tuple(names)

    @property
    def n_unknowns(self) -> int:
        return len(self.unknown_names)

    @property
    def n_equations(self) -> int:
        return 2 * len(self.orders)

    def unpack(self, x, mu):
        lam = x[0]
        a11 = [x[1]] + [x[2 * k - 2] for k in range(2, self.n + 1)]
        a12 = [-mu / (2 * lam)] + [x[2 * k - 1] for k in range(2, self.n + 1)]
        return lam, a11, a12

    def pack(self, lam, transform: TransformSeries):
        x = [lam, transform.coefficient(1)[0, 0].real]
        for k in range(2, self.n + 1):
            c = transform.coefficient(k)
            x += [c[0, 0].real, c[0, 1].real]
        return np.array(x, dtype=float)

    def transform(self, x, mu) -> TransformSeries:
        _, a11, a12 = self.unpack(x, mu)
        return symmetric_transform(self.n, a11, a12)

    def order_residuals(self, x, mu, orders) -> np.ndarray:
        """Full 2 x 2 residual matrices at the given orders."""
        lam = x[0]
        params = RabiParams(lam, mu, self.n - lam * lam)
        desc = initial_system(params, max(orders) + 1)
        t = self.transform(x, mu)
        canon = canonical_polynomials(desc, t.coefficient(1))
        return np.array([order_residual(desc, canon, t.a_coeffs, l) for l in orders])

    def residuals(self, x, mu) -> np.ndarray:
        R = self.order_residuals(x, mu, self.orders)
        return np.real(R[:, 0, :]).reshape(-1)


def terminating_equations(n: int) -> TerminatingEquations:
    return TerminatingEquations(n)


def _jacobian(fun, x, r0):
    J = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = 1e-7 * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (fun(xp) - fun(xm)) / (2 * h)
    return J


def damped_newton(fun, x0, tol=1e-13, max_iter=NEWTON_MAX_ITER):
    """Gauss-Newton with backtracking on ``|r|``. Returns ``(x, |r|_inf, iterations)``."""
    x = np.array(x0, dtype=float)
    r = fun(x)
    norm = float(np.abs(r).max())
    for it in range(max_iter):
        if norm < tol:
            return x, norm, it
        J = _jacobian(fun, x, r)
        dx, *_ = np.linalg.lstsq(J, -r, rcond=None)
        t = 1.0
        while t > 1e-10:
            try:
                r_new = fun(x + t * dx)
            except (ValueError, ZeroDivisionError):
                r_new = None
            if r_new is not None and np.all(np.isfinite(r_new)) and np.abs(r_new).max() < norm:
                break
            t *= 0.5
        else:
            return x, norm, it
        x = x + t * dx
        r = r_new
        norm = float(np.abs(r).max())
        if np.abs(t * dx).max() < 1e-15 * (1.0 + np.abs(x).max()):
            return x, norm, it + 1
    return x, norm, max_iter


def termination_defect(n: int, lam: float, mu: float) -> float:
    """Size of ``a_{n+1}, a_{n+2}`` from the recurrence at ``A = 0``, ``E = n - lam**2``."""
    params = RabiParams(lam, mu, n - lam * lam)
    desc = initial_system(params, n + 4)
    canon = canonical_polynomials(desc, symmetric_first_coefficient(-mu / (2 * lam)))
    t = recurrence_solve(desc, canon, n + 2)
    if t.terminated and t.order <= n:
        return 0.0
    return float(np.abs(t.a_coeffs[n + 1 : n + 3]).max())


def oracle_seeds(n: int, mu: float, lam_grid=None, cutoff: int = 80) -> list[float]:
    """Couplings where an even-parity level crosses ``E = n - lam**2``.

    At a Juddian point the baseline energy is an eigenvalue of both parity
    sectors, so sign changes of ``E_i(lam) - (n - lam**2)`` inside one
    sector bracket the roots. A secant refinement runs on each bracket.
    """
    if lam_grid is None:
        lam_grid = np.linspace(0.02, 2.0, 100)
    lam_grid = np.asarray(lam_grid, dtype=float)
    Pi = oracle.parity_operator(cutoff)
    w, v = np.linalg.eigh(Pi)
    even = v[:, w > 0]
    levels = 2 * n + 4

    def h(lam):
        H = oracle.build_hamiltonian_matrix(RabiParams(lam, mu), cutoff).matrix
        e = np.linalg.eigvalsh(even.T @ H @ even)[:levels]
        return e - (n - lam * lam)

    vals = np.array([h(lam) for lam in lam_grid])
    seeds = []
    for g in range(len(lam_grid) - 1):
        for i in np.flatnonzero(np.sign(vals[g]) != np.sign(vals[g + 1])):
            lo, hi = lam_grid[g], lam_grid[g + 1]
            flo, fhi = vals[g, i], vals[g + 1, i]
            for _ in range(40):
                mid = hi - fhi * (hi - lo) / (fhi - flo)
                fm = h(mid)[i]
                if np.sign(fm) == np.sign(flo):
                    lo, flo = mid, fm
                else:
                    hi, fhi = mid, fm
                if abs(hi - lo) < 1e-9 or abs(fm) < 1e-12:
                    break
            seeds.append(float(mid))
    return sorted(seeds)


def _default_seeds(n, mu):
    if n == 1:
        return [baseline_curve_n1(mu).lam]
    if n == 2:
        return [pt.lam for pt in baseline_curve_n2(mu)]
    return oracle_seeds(n, mu)


def validate_point(pt: JuddianPoint, gap_tol: float = ORACLE_GAP_TOL) -> JuddianPoint:
    """Cross-check against the Fock oracle; raises :class:`SpuriousRootError`."""
    gap, offset, _ = oracle.pair_gap_at(pt.params, pt.E)
    if not (gap < gap_tol and offset < gap_tol):
        raise SpuriousRootError(
            f"spurious root: no degenerate pair at E={pt.E:.10f} for lam={pt.lam:.10f}, "
            f"mu={pt.mu} (gap {gap:.3e}, offset {offset:.3e})")
    return replace(pt, validated=True, oracle_gap=gap)


def solve_terminating(n: int, mu: float, seed=None, validate: bool = True,
                      tol: float = 1e-13, max_iter: int = NEWTON_MAX_ITER) -> JuddianPoint:
    """Find ``lam`` (and the transform) for which ``a`` stops at order ``n``.

    ``seed`` may be a coupling ``lam`` or a full unknown vector (see
    :class:`TerminatingEquations`). Without it the closed-form curves seed
    ``n <= 2`` and the oracle seeds larger ``n`` (smallest root first).
    """
    _check_mu(n, mu)
    eqs = terminating_equations(n)
    if seed is None:
        seeds = _default_seeds(n, mu)
        if not seeds:
            raise NotFoundError(f"no seed found for n={n}, mu={mu}")
        seed = seeds[0]
    x0 = np.atleast_1d(np.asarray(seed, dtype=float))
    if x0.size == 1:
        lam0 = float(x0[0])
        params = RabiParams(lam0, mu, n - lam0 * lam0)
        desc = initial_system(params, n + 2)
        canon = canonical_polynomials(desc, symmetric_first_coefficient(-mu / (2 * lam0)))
        x0 = eqs.pack(lam0, recurrence_solve(desc, canon, n))
    elif x0.size != eqs.n_unknowns:
        raise ValueError(f"seed must be lam or a vector of {eqs.n_unknowns} unknowns")

    x, res, iters = damped_newton(lambda v: eqs.residuals(v, mu), x0, tol, max_iter)
    if res > 1e-10:
        raise NotFoundError(f"Newton did not converge for n={n}, mu={mu}: residual {res:.3e} "
                            f"after {iters} iterations", residual=res)
    lam = float(x[0])
    if lam < 0:
        x[0] = lam = -lam  # the spectrum is even in lam; report the physical sign
        x[1:] = eqs.pack(lam, _flip(eqs.transform(x, mu)))[1:]
    extra = eqs.order_residuals(x, mu, range(n + 1, n + 5))
    extra_res = float(np.abs(extra).max())
    log.info("n=%d mu=%g: lam=%.12f after %d iterations, extra-order residual %.2e",
             n, mu, lam, iters, extra_res)
    if extra_res > EXTRA_ORDER_TOL:
        raise NotFoundError(f"higher-order identities fail (residual {extra_res:.3e})",
                            residual=extra_res)
    t = replace(eqs.transform(x, mu), window_residual=extra_res)
    pt = JuddianPoint(n, lam, mu, n - lam * lam, t)
    return validate_point(pt) if validate else pt


def _flip(t: TransformSeries) -> TransformSeries:
    # lam -> -lam maps a_k -> (-1)^k a_k
    signs = (-1.0) ** np.arange(t.a_coeffs.shape[0])
    return TransformSeries(t.a_coeffs * signs[:, None, None], t.terminated, t.window_residual)


@dataclass(frozen=True)
class Eigenfunction:
    """Two degenerate solutions of the initial system, in Taylor and Fock form.

    ``taylor[j, c]`` are the Taylor coefficients of component ``c`` of
    solution ``j``; ``fock[j]`` is the normalized state in the oracle basis.
    """

    taylor: np.ndarray
    fock: np.ndarray
    negative_leak: float


def _exp_taylor(rate, depth):
    k = np.arange(depth + 1)
    logs = np.array([math.lgamma(i + 1) for i in k])
    with np.errstate(under="ignore"):
        mag = np.exp(k * math.log(abs(rate)) - logs) if rate != 0 else (k == 0).astype(float)
    return mag * np.sign(rate) ** k if rate != 0 else mag


def reconstruct_eigenfunction(pt: JuddianPoint, depth: int) -> Eigenfunction:
    """``f = a F`` for the two decoupled canonical solutions ``z**n exp(-+ lam z)``."""
    n, lam = pt.n, pt.lam
    K = pt.transform.order
    a = pt.transform.a_coeffs
    if not pt.transform.terminated:
        raise NotEntireError("not entire: transformation does not terminate")
    taylor = np.zeros((2, 2, depth + 1), dtype=complex)
    leak = 0.0
    # column s of a multiplies canonical solution s
    for sol, rate in ((0, -lam), (1, lam)):
        e = _exp_taylor(rate, depth + K)
        for comp in range(2):
            # coefficient of z^m: sum_k a_k[comp, sol] e_{m - n + k}
            for m in range(n - K, depth + 1):
                ks = np.arange(K + 1)
                j = m - n + ks
                ok = (j >= 0) & (j <= depth + K)
                val = np.sum(a[ks[ok], comp, sol] * e[j[ok]])
                if m < 0:
                    leak = max(leak, abs(val))
                else:
                    taylor[sol, comp, m] = val
    if leak > 1e-12:
        raise NotEntireError(f"not entire: negative powers of size {leak:.3e}")
    sqrt_fact = np.exp(0.5 * np.array([math.lgamma(m + 1) for m in range(depth + 1)]))
    fock = np.zeros((2, 2 * (depth + 1)), dtype=complex)
    for sol in range(2):
        fock[sol, 0::2] = taylor[sol, 0] * sqrt_fact
        fock[sol, 1::2] = taylor[sol, 1] * sqrt_fact
        fock[sol] /= np.linalg.norm(fock[sol])
    return Eigenfunction(taylor, fock, leak)


def subspace_overlap(U, V) -> float:
    """Squared smallest principal cosine between the column spans of U and V."""
    qu, _ = np.linalg.qr(np.asarray(U))
    qv, _ = np.linalg.qr(np.asarray(V))
    s = np.linalg.svd(qu.conj().T @ qv, compute_uv=False)
    return float(s.min() ** 2)


def bargmann_norm_partial_sums(taylor_coeffs) -> np.ndarray:
    """Partial sums of ``sum_k |c_k|**2 k!`` for one component."""
    c = np.asarray(taylor_coeffs)
    k = np.arange(c.size)
    w = np.exp(np.array([math.lgamma(i + 1) for i in k]))
    return np.cumsum(np.abs(c) ** 2 * w)
