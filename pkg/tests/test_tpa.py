import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy import special

from bsv_tpa import tpa
from bsv_tpa.dispersion import coherent_grid, optimal_d2
from bsv_tpa.pdc import (GatedPulseParams, ValidityWarning, gain_for_photon_number, gain_functions,
                         photon_number, photon_rate, width_high, width_low)
from bsv_tpa.tpa import (GM, MoleculeParams, TpaSetup, beta_factor, broadband_total,
                         crossover_photon_number, molecule_count, mu_factor, p_analytic,
                         p_classical, p_coherent, p_incoherent, sweep)

from conftest import OMEGA0, make_crystal

LOW_GAIN_BETA = 1.2537789  # 2 int sinc^4(pi x^2) / (int sinc^2(pi x^2))^2, quadrature
HIGH_GAIN_BETA = 2 ** -0.25 / special.gamma(1.25)


def _mol(gamma_fg=1e12, sigma2=9 * GM, A0=math.pi * 1e-10, detuning=0.0):
    return MoleculeParams(sigma2, gamma_fg, 2 * OMEGA0 + detuning, A0)


@pytest.fixture(scope="module")
def sg_low(grid):
    return gain_functions(make_crystal(1e-4), grid)


@pytest.fixture(scope="module")
def sg_high(grid):
    return gain_functions(make_crystal(10.0), grid)


def test_gm_unit():
    assert GM == 1e-58


@pytest.mark.parametrize("field", ["sigma2", "gamma_fg", "omega_fg", "A0"])
def test_molecule_rejects_nonpositive(field):
    kwargs = dict(sigma2=1e-57, gamma_fg=1e12, omega_fg=1e15, A0=1e-10)
    kwargs[field] = 0.0
    with pytest.raises(ValueError):
        MoleculeParams(**kwargs)


def test_vacuum_gives_zero(grid, gate):
    sg = gain_functions(make_crystal(0.0), grid)
    assert p_coherent(sg, gate, _mol()) == 0.0
    assert p_incoherent(sg, gate, _mol(), "full") == 0.0
    assert p_incoherent(sg, gate, _mol(), "narrow-line") == 0.0
    with pytest.raises(ValueError):
        mu_factor(sg)
    with pytest.raises(ValueError):
        beta_factor(sg, _mol())


def test_low_gain_effective_bandwidth(sg_low, gate):
    mol = _mol()
    d2 = optimal_d2(sg_low).d2
    n = photon_number(sg_low, gate)
    ratio = p_coherent(sg_low, gate, mol, d2=d2) / (mol.sigma2 * n / mol.A0 ** 2)
    assert ratio == pytest.approx(0.75 * width_low(sg_low.params) / math.pi, rel=0.05)


def test_high_gain_mu_form(sg_high, gate):
    mol = _mol()
    n = photon_number(sg_high, gate)
    mu = mu_factor(sg_high)
    assert mu == pytest.approx(1.0, rel=0.02)
    expected = mol.sigma2 * n ** 2 / (mol.A0 ** 2 * gate.T) * mu ** 2
    assert p_coherent(sg_high, gate, mol) == pytest.approx(expected, rel=1e-10)


def test_no_advantage_at_high_gain(sg_high, gate):
    mol = _mol()
    n = photon_number(sg_high, gate)
    assert p_coherent(sg_high, gate, mol) / p_classical(mol, n, gate.T) == pytest.approx(1, rel=0.02)


def test_low_gain_beta_constant(sg_low):
    mol = _mol(1e10)
    beta = beta_factor(sg_low, mol) * width_low(sg_low.params) / (mol.gamma_fg * math.pi)
    assert beta == pytest.approx(LOW_GAIN_BETA, rel=0.02)
    assert beta == pytest.approx(1.26, rel=0.02)


def test_high_gain_beta_against_quadrature(sg_high):
    mol = _mol(1e10)
    beta = beta_factor(sg_high, mol) * width_high(sg_high.params) / (mol.gamma_fg * math.pi)
    assert beta == pytest.approx(HIGH_GAIN_BETA, rel=0.02)


def test_beta_small_for_narrow_molecule(grid):
    for gz in (1e-4, 1.0, 10.0):
        sg = gain_functions(make_crystal(gz), grid)
        p = sg.params
        mol = _mol(0.0099 * min(width_low(p), width_high(p)))
        assert beta_factor(sg, mol) < 0.1


@pytest.mark.parametrize("gz", [1e-4, 1.0, 10.0])
def test_full_matches_narrow_line_for_narrow_molecule(grid, gate, gz):
    sg = gain_functions(make_crystal(gz), grid)
    mol = _mol(1e-3 * width_low(sg.params))
    full = p_incoherent(sg, gate, mol, "full")
    narrow = p_incoherent(sg, gate, mol, "narrow-line")
    assert full / narrow == pytest.approx(1, rel=0.03)


def test_narrow_line_warns_for_broad_molecule(sg_low, gate):
    with warnings.catch_warnings():
        warnings.simplefilter("error", ValidityWarning)
        with pytest.raises(ValidityWarning):
            p_incoherent(sg_low, gate, _mol(0.5 * width_low(sg_low.params)), "narrow-line")


def test_incoherent_mode_validated(sg_low, gate):
    with pytest.raises(ValueError):
        p_incoherent(sg_low, gate, _mol(), "eq41")


def test_broadband_molecule_limit(sg_high, gate):
    mol = _mol(100 * width_high(sg_high.params))
    pc = p_coherent(sg_high, gate, mol)
    pi = p_incoherent(sg_high, gate, mol, "full")
    assert pi / pc == pytest.approx(2, rel=0.05)
    g2 = 2 + abs(np.sum(sg_high.fg)) ** 2 / np.sum(sg_high.spectrum) ** 2
    assert (pc + pi) / broadband_total(sg_high, gate, mol, g2) == pytest.approx(1, rel=0.03)


def test_broadband_total_statistics(sg_high, gate):
    mol = _mol()
    n = photon_number(sg_high, gate)
    cl = p_classical(mol, n, gate.T)
    assert broadband_total(sg_high, gate, mol, 3.0) == pytest.approx(3 * cl, rel=1e-12)
    assert broadband_total(sg_high, gate, mol, 1.0) == pytest.approx(cl, rel=1e-12)


def test_classical_scaling():
    mol = _mol()
    T = 1e-11
    assert p_classical(mol, 2e4, T) == pytest.approx(4 * p_classical(mol, 1e4, T), rel=1e-15)
    assert p_classical(mol, 0.0, T) == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", ValidityWarning)
        with pytest.raises(ValidityWarning):
            p_classical(mol, 1.0, 1e-13)


def test_analytic_terms_equal_at_crossover():
    mol, T, w = _mol(), 1e-11, 1e14
    n = crossover_photon_number(w, T)
    linear = p_analytic(mol, n, T, w) - mol.sigma2 * (n / (mol.A0 * T)) ** 2 * T
    assert linear == pytest.approx(p_analytic(mol, n, T, w) / 2, rel=1e-14)


def test_crossover_closed_form():
    assert crossover_photon_number(4 * math.pi / 3, 1.0) == pytest.approx(1.0)
    assert crossover_photon_number(1e14, 2e-11) == pytest.approx(2 * crossover_photon_number(1e14, 1e-11))
    with pytest.raises(ValueError):
        crossover_photon_number(0.0, 1.0)


def test_detuning_lineshape(sg_low, gate):
    mol = _mol(2e12)
    on = p_coherent(sg_low, gate, mol, detuning=0.0)
    half = p_coherent(sg_low, gate, mol, detuning=mol.gamma_fg)
    assert half / on == pytest.approx(0.5, rel=0.02)
    assert p_coherent(sg_low, gate, _mol(2e12, detuning=2e12)) == pytest.approx(half, rel=1e-12)


def test_probabilities_scale_as_sigma_over_area_squared(sg_high, gate):
    base = _mol(1e13)
    for mode in ("full", "narrow-line"):
        ref = p_incoherent(sg_high, gate, base, mode)
        assert p_incoherent(sg_high, gate, replace(base, sigma2=2 * base.sigma2), mode) == \
            pytest.approx(2 * ref, rel=1e-12)
        assert p_incoherent(sg_high, gate, replace(base, A0=2 * base.A0), mode) == \
            pytest.approx(ref / 4, rel=1e-12)
    ref = p_coherent(sg_high, gate, base)
    assert p_coherent(sg_high, gate, replace(base, A0=2 * base.A0)) == pytest.approx(ref / 4, rel=1e-12)
    assert p_coherent(sg_high, gate, replace(base, sigma2=2 * base.sigma2)) == \
        pytest.approx(2 * ref, rel=1e-12)


def test_molecule_count_fig4_geometry():
    # 10 mmol/L in a 10 um radius, 1 cm long cylinder
    n = molecule_count(0.01, 10e-6, 0.01)
    assert n == pytest.approx(10 * math.pi * 1e-10 * 0.01 * 6.02214076e23, rel=1e-12)


def _log_slope(ns, results):
    return np.polyfit(np.log(ns), np.log([r.p_coh for r in results]), 1)[0]


def test_low_and_high_flux_slopes(crystal, gate):
    mol = _mol()
    nc = crossover_photon_number(width_low(crystal), gate.T)
    setup = TpaSetup(crystal, gate, mol)
    low = np.geomspace(1e-4, 0.1, 7) * nc
    high = np.geomspace(10, 1e4, 7) * nc
    assert _log_slope(low, sweep(setup, "N", low)) == pytest.approx(1, abs=0.02)
    assert _log_slope(high, sweep(setup, "N", high)) == pytest.approx(2, abs=0.02)


def test_low_gain_branch_independent_of_gate(crystal):
    mol = _mol()
    a = sweep(TpaSetup(crystal, GatedPulseParams(5e-12), mol), "N", [0.01])[0]
    b = sweep(TpaSetup(crystal, GatedPulseParams(20e-12), mol), "N", [0.01])[0]
    assert a.p_coh == pytest.approx(b.p_coh, rel=0.01)


def test_sweep_ordering_independent_of_workers(crystal, gate):
    setup = TpaSetup(crystal, gate, _mol(), compensation="optimal")
    ns = np.geomspace(1, 1e4, 5)
    serial = sweep(setup, "N", ns, workers=1)
    threaded = sweep(setup, "N", ns, workers=3)
    assert serial == threaded


def test_sweep_records_point_failures(crystal, gate):
    out = sweep(TpaSetup(crystal, gate, _mol()), "N", [10.0, 1e40])
    assert not out[0].error
    assert out[1].error and math.isnan(out[1].p_coh)


def test_sweep_axes(crystal, gate):
    setup = TpaSetup(crystal, gate, _mol(), n_photons=100.0)
    fg = sweep(setup, "gamma_fg", [1e11, 1e12])
    assert [r.gamma_fg for r in fg] == [1e11, 1e12]
    T = sweep(setup, "T", [5e-12, 1e-11])
    assert T[1].n_photons == pytest.approx(100.0, rel=1e-9)
    ws = sweep(replace(setup, n_photons=None), "w", [8e13, 1.2e14])
    assert [r.w for r in ws] == pytest.approx([8e13, 1.2e14], rel=1e-12)
    gz = sweep(setup, "gamma_z", [0.1, 1.0])
    assert [r.gamma_z for r in gz] == pytest.approx([0.1, 1.0])
    with pytest.raises(ValueError):
        sweep(setup, "N", [3.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        sweep(setup, "z", [1.0])


def test_total_is_sum(crystal, gate):
    r = sweep(TpaSetup(crystal, gate, _mol()), "N", [125.0])[0]
    assert r.p_total == r.p_coh + r.p_incoh
    assert r.p_coh >= 0 and r.p_incoh >= 0 and r.p_classical >= 0
    assert r.regime == "intermediate"
