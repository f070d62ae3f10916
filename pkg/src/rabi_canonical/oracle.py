"""Truncated Fock-space diagonalization: the independent reference spectrum.

Basis ordering: index ``2 n`` is ``|n, +>`` and ``2 n + 1`` is ``|n, ->``,
where ``s = +1`` is the spin component that maps to ``f1`` and ``s = -1`` to
``f2`` in Bargmann-Fock language. In the rotated frame

    H = a^+ a + mu sigma_1 + lam sigma_3 (a^+ + a),   Pi = sigma_1 (-1)^{a^+ a}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError
from .model import RabiParams

log = logging.getLogger(__name__)

START_CUTOFF = 32
CUTOFF_MAX = 4096
#: |<Pi>| above which a level gets a definite parity label
PARITY_CLEAR = 0.99


def basis_index(n: int, s: int) -> int:
    return 2 * n + (0 if s == 1 else 1)


@dataclass(frozen=True)
class TruncatedHamiltonian:
    cutoff: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    parity: np.ndarray
    cutoff_used: int
    converged_count: int
    tol_achieved: float
    vectors: np.ndarray | None = None


@dataclass(frozen=True)
class DegeneratePair:
    index: int
    energy: float
    gap: float
    #: E + lam**2 within 1e-6 of a non-negative integer
    juddian_consistent: bool


def build_hamiltonian_matrix(params: RabiParams, cutoff: int) -> TruncatedHamiltonian:
    """Dense real symmetric matrix of H on bosons ``n = 0..cutoff``."""
    if cutoff < 2:
        raise ValueError(f"cutoff must be at least 2, got {cutoff}")
    lam, mu = params.lam, params.mu
    dim = 2 * (cutoff + 1)
    H = np.zeros((dim, dim))
    n = np.arange(cutoff + 1)
    plus, minus = 2 * n, 2 * n + 1
    H[plus, plus] = n
    H[minus, minus] = n
    H[plus, minus] = mu
    H[minus, plus] = mu
    hop = lam * np.sqrt(n[1:])
    H[plus[1:], plus[:-1]] = hop
    H[plus[:-1], plus[1:]] = hop
    H[minus[1:], minus[:-1]] = -hop
    H[minus[:-1], minus[1:]] = -hop
    return TruncatedHamiltonian(cutoff, H)


def parity_operator(cutoff: int) -> np.ndarray:
    """``|n, s> -> (-1)^n |n, -s>`` as a dense matrix."""
    dim = 2 * (cutoff + 1)
    Pi = np.zeros((dim, dim))
    n = np.arange(cutoff + 1)
    sign = (-1.0) ** n
    Pi[2 * n + 1, 2 * n] = sign
    Pi[2 * n, 2 * n + 1] = sign
    return Pi


def parity_signature(vector, cutoff: int) -> int:
    """+1 or -1 for a definite-parity state, 0 when the state is mixed."""
    v = np.asarray(vector, dtype=float)
    v = v / np.linalg.norm(v)
    expect = float(v @ parity_operator(cutoff) @ v)
    if abs(expect) > PARITY_CLEAR:
        return 1 if expect > 0 else -1
    return 0


def _lowest(H, k):
    k = min(k, H.shape[0])
    return scipy.linalg.eigh(H, subset_by_index=[0, k - 1])


def _rotate_clusters(w, v, cutoff, gap_tol):
    """Diagonalize Pi inside each cluster of (near) degenerate levels."""
    Pi = parity_operator(cutoff)
    v = v.copy()
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and w[j] - w[j - 1] < gap_tol:
            j += 1
        if j - i > 1:
            block = v[:, i:j]
            pw, pv = np.linalg.eigh(block.T @ Pi @ block)
            v[:, i:j] = block @ pv[:, ::-1]  # +1 first
        i = j
    return v


def converged_spectrum(params: RabiParams, k_levels: int, tol: float = 1e-10,
                       start_cutoff: int = START_CUTOFF, cutoff_max: int = CUTOFF_MAX,
                       gap_tol: float = 1e-6, with_vectors: bool = False) -> SpectrumResult:
    """Lowest ``k_levels`` eigenvalues, doubling the cutoff until they settle.

    Raises :class:`ConvergenceError` if the cap is reached first.
    """
    if k_levels < 1:
        raise ValueError("k_levels must be at least 1")
    extra = k_levels + 2  # to see a degenerate partner just past the last level
    cutoff = max(start_cutoff, k_levels)
    w_prev, _ = _lowest(build_hamiltonian_matrix(params, cutoff).matrix, extra)
    delta = np.inf
    while True:
        nxt = 2 * cutoff
        if nxt > cutoff_max:
            raise ConvergenceError(
                f"spectrum not converged at cutoff {cutoff} (last delta {delta:.3e})", residual=delta)
        w, v = _lowest(build_hamiltonian_matrix(params, nxt).matrix, extra)
        delta = float(np.abs(w[:k_levels] - w_prev[:k_levels]).max())
        log.debug("cutoff %d -> %d: delta %.3e", cutoff, nxt, delta)
        cutoff = nxt
        if delta < tol:
            break
        w_prev = w

    v = _rotate_clusters(w, v, cutoff, gap_tol)
    parity = np.array([parity_signature(v[:, i], cutoff) for i in range(k_levels)])
    return SpectrumResult(
        eigenvalues=w[:k_levels],
        parity=parity,
        cutoff_used=cutoff,
        converged_count=k_levels,
        tol_achieved=delta,
        vectors=v[:, :k_levels] if with_vectors else None,
    )


def degeneracy_scan(params: RabiParams, k_levels: int, gap_tol: float = 1e-6,
                    spectrum: SpectrumResult | None = None) -> list[DegeneratePair]:
    """Adjacent level pairs closer than ``gap_tol`` among the lowest levels."""
    if spectrum is None:
        spectrum = converged_spectrum(params, k_levels, tol=min(1e-10, gap_tol * 1e-2))
    w = spectrum.eigenvalues[:k_levels]
    pairs = []
    i = 0
    while i < len(w) - 1:
        gap = float(w[i + 1] - w[i])
        if gap < gap_tol:
            energy = float(0.5 * (w[i] + w[i + 1]))
            shifted = energy + params.lam ** 2
            ok = shifted > -1e-6 and abs(shifted - round(shifted)) < 1e-6
            if not ok:
                log.warning("degeneracy at E=%.10f violates the integer condition", energy)
            pairs.append(DegeneratePair(i, energy, gap, ok))
            i += 2
        else:
            i += 1
    return pairs


def pair_gap_at(params: RabiParams, energy: float, k_levels: int | None = None,
                tol: float = 1e-11) -> tuple[float, float, SpectrumResult]:
    """Gap of the two levels closest to ``energy`` and their offset from it."""
    if k_levels is None:
        k_levels = int(2 * max(energy + params.lam ** 2, 0.0) + 6)
    sres = converged_spectrum(params, k_levels, tol=tol, with_vectors=True)
    w = sres.eigenvalues
    idx = np.argsort(np.abs(w - energy))[:2]
    pair = np.sort(w[idx])
    return float(pair[1] - pair[0]), float(np.abs(pair - energy).max()), sres
