import dataclasses
import itertools

import numpy as np
import pytest

import lzi
from lzi.errors import DegenerateSpectralError, SameSiteError


def _richardson_set(cfg, system):
    return [lzi.richardson_integral(l, cfg, system) for l in range(system.n_sites)]


def test_two_site_antisymmetry():
    system = lzi.SiteSystem.uniform(2)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0))
    h0 = lzi.gaudin_integral(0, cfg, system)
    h1 = lzi.gaudin_integral(1, cfg, system)
    assert lzi.max_abs(h0 + h1) < 1e-15
    assert lzi.max_abs(h0 - lzi.dot_coupling(0, 1, system) / (0.0 - 1.0)) == 0.0


def test_three_site_commutativity():
    system = lzi.SiteSystem.uniform(3)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0, 2.0))
    h0 = lzi.gaudin_integral(0, cfg, system)
    h1 = lzi.gaudin_integral(1, cfg, system)
    assert lzi.max_abs(lzi.commutator(h0, h1)) < 1e-12


def test_gaudin_integrals_sum_to_zero():
    rng = np.random.default_rng(11)
    system = lzi.SiteSystem.uniform(4)
    w = tuple(np.sort(rng.uniform(-2, 2, 4)))
    cfg = lzi.SpectralConfig(w=w)
    total = sum(lzi.gaudin_integral(l, cfg, system) for l in range(4))
    assert lzi.max_abs(total) < 1e-13


def test_richardson_reduces_to_gaudin_at_zero_lambda():
    system = lzi.SiteSystem.uniform(3)
    cfg = lzi.SpectralConfig(w=(0.0, 0.7, 1.9), lam=0.0)
    for l in range(3):
        assert np.array_equal(
            lzi.richardson_integral(l, cfg, system), lzi.gaudin_integral(l, cfg, system)
        )


def test_richardson_commutativity_three_sites():
    system = lzi.SiteSystem.uniform(3)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0, 2.0), lam=0.7)
    ops = _richardson_set(cfg, system)
    report = lzi.verify_commuting(ops, tol=1e-12)
    assert report.passed and report.max_defect < 1e-12


def test_richardson_two_site_sum_identity():
    # with lam = 1 the exchange parts cancel pairwise: R_0 + R_1 = Sz_0 + Sz_1
    system = lzi.SiteSystem.uniform(2)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0), lam=1.0)
    total = sum(_richardson_set(cfg, system))
    sz = lzi.spin_generators(lzi.SpinRep(0.5))[2]
    expected = lzi.embed(sz, 0, system) + lzi.embed(sz, 1, system)
    assert lzi.max_abs(total - expected) < 1e-15


def test_richardson_sum_telescopes():
    rng = np.random.default_rng(5)
    system = lzi.SiteSystem.uniform(4)
    cfg = lzi.SpectralConfig(w=tuple(np.sort(rng.uniform(-3, 3, 4))), lam=0.8)
    total = sum(_richardson_set(cfg, system))
    sz = lzi.spin_generators(lzi.SpinRep(0.5))[2]
    expected = cfg.lam * sum(lzi.embed(sz, l, system) for l in range(4))
    assert lzi.max_abs(total - expected) < 1e-13


def test_gaudin_hamiltonian_two_sites():
    system = lzi.SiteSystem.uniform(2)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0))
    h = lzi.gaudin_hamiltonian(cfg, system)
    assert lzi.max_abs(h - 2.0 * lzi.dot_coupling(0, 1, system)) < 1e-15
    # oracle: spectrum of 2 S1.S2 from the singlet/triplet split
    assert np.allclose(np.sort(np.linalg.eigvalsh(h)), [-1.5, 0.5, 0.5, 0.5], atol=1e-14)


def test_gaudin_hamiltonian_commutes_with_integrals():
    rng = np.random.default_rng(17)
    system = lzi.SiteSystem.uniform(4)
    cfg = lzi.SpectralConfig(w=tuple(np.sort(rng.uniform(-1, 4, 4))))
    h = lzi.gaudin_hamiltonian(cfg, system)
    for l in range(4):
        defect = lzi.max_abs(lzi.commutator(h, lzi.gaudin_integral(l, cfg, system)))
        assert defect < 1e-12


def test_verify_commuting_identical_operators():
    system = lzi.SiteSystem.uniform(2)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0))
    op = lzi.gaudin_integral(0, cfg, system)
    report = lzi.verify_commuting([op, op, op], tol=1e-12)
    assert report.max_defect == 0.0 and report.passed


def test_verify_commuting_detects_inconsistent_parameters():
    system = lzi.SiteSystem.uniform(3)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0, 2.0), lam=0.5)
    bad_cfg = lzi.SpectralConfig(w=(0.0, 1.3, 2.0), lam=0.5)
    ops = _richardson_set(cfg, system)
    ops[1] = lzi.richardson_integral(1, bad_cfg, system)
    report = lzi.verify_commuting(ops, tol=1e-12)
    assert report.max_defect > 1e-3
    assert not report.passed


def test_flatness_two_sites():
    system = lzi.SiteSystem.uniform(2)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0))
    assert lzi.kz_flatness_residual(cfg, system, 0, 1) < 1e-13


def test_flatness_three_sites_with_extension():
    system = lzi.SiteSystem.uniform(3)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0, 2.0), lam=0.5, level_shift=3.0)
    for la, lb in itertools.combinations(range(3), 2):
        assert lzi.kz_flatness_residual(cfg, system, la, lb) < 1e-12


def test_flatness_rejects_same_site():
    system = lzi.SiteSystem.uniform(2)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0))
    with pytest.raises(SameSiteError):
        lzi.kz_flatness_residual(cfg, system, 1, 1)


def test_derivative_matches_finite_differences_at_second_order():
    system = lzi.SiteSystem.uniform(3)
    w = [0.0, 1.0, 2.3]
    cfg = lzi.SpectralConfig(w=tuple(w), lam=0.4)
    analytic = lzi.richardson_derivative(2, cfg, system, wrt=0)

    def fd_error(h):
        wp, wm = list(w), list(w)
        wp[0] += h
        wm[0] -= h
        plus = lzi.richardson_integral(2, dataclasses.replace(cfg, w=tuple(wp)), system)
        minus = lzi.richardson_integral(2, dataclasses.replace(cfg, w=tuple(wm)), system)
        return lzi.max_abs((plus - minus) / (2 * h) - analytic)

    assert fd_error(1e-5) < 1e-8  # agreement at a small step
    # order-2 ratio measured above the roundoff floor
    e1, e2 = fd_error(2e-3), fd_error(1e-3)
    assert 3.5 < e1 / e2 < 4.5


def test_scale_covariance():
    rng = np.random.default_rng(23)
    system = lzi.SiteSystem.uniform(3)
    w = np.sort(rng.uniform(0.5, 3.0, 3))
    c = 1.7
    cfg = lzi.SpectralConfig(w=tuple(w))
    scaled = lzi.SpectralConfig(w=tuple(c * w))
    for l in range(3):
        diff = lzi.gaudin_integral(l, scaled, system) - lzi.gaudin_integral(l, cfg, system) / c
        assert lzi.max_abs(diff) < 1e-14


def test_swap_antisymmetry_under_relabeling():
    # swapping w_0 <-> w_1 together with sites 0 <-> 1 exchanges the two integrals
    system = lzi.SiteSystem.uniform(3)
    w = (0.0, 1.0, 2.5)
    w_swapped = (1.0, 0.0, 2.5)
    cfg = lzi.SpectralConfig(w=w)
    cfg_swapped = lzi.SpectralConfig(w=w_swapped)
    # permutation operator exchanging the first two spin-1/2 factors
    perm = np.zeros((8, 8))
    for idx in range(8):
        bits = [(idx >> k) & 1 for k in (2, 1, 0)]
        swapped = (bits[1] << 2) | (bits[0] << 1) | bits[2]
        perm[swapped, idx] = 1.0
    h0 = lzi.gaudin_integral(0, cfg, system)
    h1_swapped = lzi.gaudin_integral(1, cfg_swapped, system)
    assert lzi.max_abs(perm @ h0 @ perm.T - h1_swapped) < 1e-13


def test_complex_parameters_accepted():
    system = lzi.SiteSystem.uniform(2)
    cfg = lzi.SpectralConfig(w=(0.0, 1.0 + 0.5j))
    h = lzi.gaudin_integral(0, cfg, system)
    assert lzi.hermiticity_defect(h) > 1e-3  # complex parameters break Hermiticity
    assert lzi.max_abs(lzi.commutator(h, lzi.gaudin_integral(1, cfg, system))) < 1e-13


def test_degenerate_parameters_rejected():
    with pytest.raises(DegenerateSpectralError):
        lzi.SpectralConfig(w=(1.0, 1.0 + 1e-12))
    with pytest.raises(ValueError):
        lzi.SpectralConfig(w=(0.0, 1.0), level_shift=0.0)
