"""Acceptance criteria, one test per criterion.

``pytest tests/test_acceptance.py`` prints a PASS/FAIL line per criterion in
the terminal summary (see conftest.py). Closed forms used as references are
written out here rather than imported from the package.
"""
import cmath
import math
import time

import numpy as np
import pytest

from rabi_canonical import juddian, kummer, oracle
from rabi_canonical.birkhoff import recurrence_solve, verify_canonicalization
from rabi_canonical.model import (
    RabiParams,
    canonical_system,
    initial_system,
    initial_system_residual,
    parity_image,
    regular_point_series,
)


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def pair_indices(sres, energy):
    return np.argsort(np.abs(sres.eigenvalues - energy))[:2]


@criterion(1, "uncoupled limit: 8 lowest levels are n - 1/4, each twice")
def test_criterion_01_uncoupled_limit():
    t0 = time.perf_counter()
    sres = oracle.converged_spectrum(RabiParams(0.5, 0.0), 8)
    elapsed = time.perf_counter() - t0
    expect = np.repeat(np.arange(4) - 0.25, 2)
    assert np.abs(sres.eigenvalues - expect).max() < 1e-8
    assert elapsed < 5.0


@criterion(2, "first exact curve: degenerate opposite-parity pairs at 9 couplings")
def test_criterion_02_first_curve_degeneracies():
    t0 = time.perf_counter()
    for mu in np.round(np.arange(1, 10) * 0.1, 12):
        lam = math.sqrt(1 - mu * mu) / 2
        E = 1 - lam * lam
        gap, offset, sres = oracle.pair_gap_at(RabiParams(lam, mu), E)
        assert gap < 1e-6 and offset < 1e-6, (mu, gap, offset)
        idx = pair_indices(sres, E)
        assert sorted(sres.parity[idx]) == [-1, 1], mu
    assert time.perf_counter() - t0 < 30.0


@criterion(3, "second exact curve: both branches at mu = 0.5 degenerate")
def test_criterion_03_second_curve_branches():
    mu = 0.5
    b, c = 12 * mu**2 - 32, mu**4 - 5 * mu**2 + 4
    disc = math.sqrt(b * b - 128 * c)
    lams = sorted(math.sqrt(x) for x in ((-b - disc) / 64, (-b + disc) / 64))
    # quoted to six digits; the exact roots are 0.3323281 and 0.8920807
    assert lams == pytest.approx([0.332330, 0.892081], abs=5e-6)
    for lam in lams:
        gap, offset, _ = oracle.pair_gap_at(RabiParams(lam, mu), 2 - lam * lam)
        assert gap < 1e-6 and offset < 1e-6


@criterion(4, "negative control (0.3, 0.7): no degeneracy among 6 levels")
def test_criterion_04_negative_control():
    lam, mu = 0.3, 0.7
    assert abs(4 * lam**2 + mu**2 - 1) > 0.01
    assert abs(32 * lam**4 - 32 * lam**2 + 12 * lam**2 * mu**2 - 5 * mu**2 + mu**4 + 4) > 0.01
    # no closed curve for n = 3: the transformation must fail to terminate
    assert juddian.termination_defect(3, lam, mu) > 0.01
    assert oracle.degeneracy_scan(RabiParams(lam, mu), 6, gap_tol=1e-6) == []


@criterion(5, "canonicalization closure for 20 random parameter draws at depth 40")
def test_criterion_05_canonicalization_closure():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        lam, mu, E = rng.uniform(0.1, 1), rng.uniform(0.1, 1), rng.uniform(-1, 2)
        params = RabiParams(lam, mu, E)
        desc = initial_system(params, 41)
        canon = canonical_system(params, -mu / (2 * lam), 41)
        t = recurrence_solve(desc, canon, 40)
        worst = max(worst, verify_canonicalization(desc, t, canon))
    assert worst < 1e-10


@criterion(6, "closed-form transformation matrices regenerated by the recurrence")
def test_criterion_06_closed_form_regeneration():
    lam = 0.5
    for n in (1, 2, 3):
        params = RabiParams(lam, 0.0, n - lam**2)
        t = recurrence_solve(initial_system(params, 13), canonical_system(params, 0.0, 13), 12)
        assert t.terminated and t.order == n
        for k in range(n + 1):
            c = math.comb(n, k)
            np.testing.assert_allclose(t.coefficient(k), np.diag([c * lam**k, c * (-lam) ** k]), atol=1e-12)

    for mu in (0.3, 0.6, 0.8):
        lam = math.sqrt(1 - mu * mu) / 2
        params = RabiParams(lam, mu, 1 - lam * lam)
        t = recurrence_solve(initial_system(params, 11), canonical_system(params, -mu / (2 * lam), 11), 10)
        d, o = (1 + mu * mu) / (4 * lam), mu / (2 * lam)
        assert t.terminated and t.order == 1
        np.testing.assert_allclose(t.coefficient(1), [[d, -o], [o, -d]], atol=1e-10)

    for mu in (0.5, 0.9):
        b, c = 12 * mu**2 - 32, mu**4 - 5 * mu**2 + 4
        disc = math.sqrt(b * b - 128 * c)
        for x in ((-b - disc) / 64, (-b + disc) / 64):
            lam = math.sqrt(x)
            params = RabiParams(lam, mu, 2 - x)
            t = recurrence_solve(initial_system(params, 12), canonical_system(params, -mu / (2 * lam), 12), 11)
            assert t.terminated and t.order == 2
            a1, a2 = t.coefficient(1), t.coefficient(2)
            assert a1[0, 0] == pytest.approx(2 * lam + mu**2 / (2 * lam), abs=1e-10)
            assert a1[0, 1] == pytest.approx(-mu / (2 * lam), abs=1e-10)
            assert a2[0, 0] == pytest.approx(lam**2 + mu**2 + (mu**4 - mu**2) / (8 * lam**2), abs=1e-10)
            assert a2[0, 1] == pytest.approx(mu * (6 * lam**2 + mu**2 - 1) / (4 * lam**2), abs=1e-10)


@criterion(7, "Kummer identities and canonical ODE residual")
def test_criterion_07_kummer():
    rng = np.random.default_rng(7)
    r = 10 * np.sqrt(rng.uniform(0, 1, 20))
    zs = r * np.exp(2j * np.pi * rng.uniform(0, 1, 20))
    for z in zs:
        ez = cmath.exp(z)
        assert abs(kummer.kummer_1f1(1, 1, z) - ez) <= 1e-12 * abs(ez)
        ref = (ez - 1) / z
        assert abs(kummer.kummer_1f1(1, 2, z) - ref) <= 1e-12 * abs(ref)

    circle = np.exp(1j * (0.1 + 2 * np.pi * np.arange(20) / 20))
    for params, A, branch in ((RabiParams(0.5, 0.3, 0.4), 0.37, "+"),
                              (RabiParams(0.8, 0.2, -0.1), 0.61, "-"),
                              (RabiParams(0.4, 0.6, 0.84), 0.0, "+")):
        F1, F2 = kummer.solution_functions(params, A, branch)
        assert max(kummer.canonical_residual(params, A, F1, F2, z) for z in circle) < 1e-9


@criterion(8, "reconstructed eigenfunctions span the oracle doublet at (0.4, 0.6)")
def test_criterion_08_reconstruction():
    pt = juddian.baseline_curve_n1(0.6)
    _, _, sres = oracle.pair_gap_at(pt.params, pt.E)
    ef = juddian.reconstruct_eigenfunction(pt, sres.cutoff_used)
    overlap = juddian.subspace_overlap(ef.fock.T, sres.vectors[:, pair_indices(sres, pt.E)])
    assert overlap > 1 - 1e-6


@criterion(9, "Newton solver agrees with closed forms; n = 3 oracle-validated")
def test_criterion_09_newton():
    assert juddian.solve_terminating(1, 0.6).lam == pytest.approx(0.4, abs=1e-10)
    mu = 0.5
    b, c = 12 * mu**2 - 32, mu**4 - 5 * mu**2 + 4
    disc = math.sqrt(b * b - 128 * c)
    for x in ((-b - disc) / 64, (-b + disc) / 64):
        assert juddian.solve_terminating(2, mu, seed=math.sqrt(x) * 1.05).lam == \
            pytest.approx(math.sqrt(x), abs=1e-10)
    pt = juddian.solve_terminating(3, mu)
    gap, offset, _ = oracle.pair_gap_at(RabiParams(pt.lam, mu), 3 - pt.lam**2)
    assert pt.validated and gap < 1e-6 and offset < 1e-6


@criterion(10, "symmetries: parity commutator, sign flips, parity solution map")
def test_criterion_10_symmetries():
    for lam, mu in ((0.4, 0.6), (1.1, 0.3), (0.7, 1.4)):
        H = oracle.build_hamiltonian_matrix(RabiParams(lam, mu), 60).matrix
        Pi = oracle.parity_operator(60)
        assert np.abs(Pi @ H - H @ Pi).max() < 1e-13
        ref = oracle.converged_spectrum(RabiParams(lam, mu), 8).eigenvalues
        for l2, m2 in ((-lam, mu), (lam, -mu)):
            assert np.abs(oracle.converged_spectrum(RabiParams(l2, m2), 8).eigenvalues - ref).max() < 1e-12

    params = RabiParams(0.9, 0.4, 0.37)
    c, d = regular_point_series(params, 1.0, 0.3, order=80)

    def f1(z):
        return np.polynomial.polynomial.polyval(z, c)

    def f2(z):
        return np.polynomial.polynomial.polyval(z, d)

    g1, g2 = parity_image(f1, f2)
    for z in (0.2, 0.1 + 0.3j, -0.3j, -0.25 + 0.1j):
        assert initial_system_residual(params, f1, f2, z) < 1e-9
        assert initial_system_residual(params, g1, g2, z) < 1e-9


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
