"""Two-photon absorption probabilities for gated squeezed vacuum.

Per molecule and per pulse:

* coherent term  ``(s2 T / A0^2) L(detuning) |int f g e^{i D2 nu^2} dnu/2pi|^2``
* incoherent term, either the full pair-frequency convolution against the
  molecular Lorentzian or its narrow-line limit
  ``((1+xi)/2)(s2 T / A0^2) gamma_fg int |g|^4 dnu/2pi``
* a quasi-monochromatic coherent-state pulse ``(s2/A0^2)(N/T)^2 T``

with ``L(x) = gamma_fg^2 / (gamma_fg^2 + x^2)``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

from . import dispersion as disp
from .numerics import DetuningGrid, integrate, lorentzian_hat_weights
from .pdc import (CrystalParams, GatedPulseParams, SpectralGain, ValidityWarning,
                  gain_for_photon_number, gain_functions, photon_number, photon_rate,
                  width_low)

GM = 1e-58  # Goeppert-Mayer unit [m^4 s]
INCOHERENT_MODES = ("full", "narrow-line")
SWEEP_AXES = ("N", "gamma_z", "gamma_fg", "w", "T")
_CONVOLUTION_POINTS = 8001


@dataclass(frozen=True)
class MoleculeParams:
    """Two-photon absorber.

    Parameters
    ----------
    sigma2 : float
        Classical TPA cross section [m^4 s].
    gamma_fg : float
        Final-state dephasing rate [rad/s].
    omega_fg : float
        Two-photon transition frequency [rad/s].
    A0 : float
        Effective beam area [m^2].
    """

    sigma2: float
    gamma_fg: float
    omega_fg: float
    A0: float

    def __post_init__(self):
        for name in ("sigma2", "gamma_fg", "omega_fg", "A0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    def lorentzian(self, x):
        return self.gamma_fg ** 2 / (self.gamma_fg ** 2 + np.asarray(x) ** 2)

    def detuning(self, omega0: float) -> float:
        """Two-photon detuning ``omega_fg - 2 omega0`` [rad/s]."""
        return self.omega_fg - 2 * omega0


@dataclass(frozen=True)
class TpaResult:
    """One sweep point.  Probabilities are per molecule per pulse."""

    axis_value: float
    n_photons: float
    gamma_z: float
    T: float
    gamma_fg: float
    w: float
    d2: float
    p_coh: float
    p_incoh: float
    p_classical: float
    p_analytic: float
    mu: float
    beta: float
    r: float
    g2: float
    regime: str
    error: str = ""

    @property
    def p_total(self) -> float:
        return self.p_coh + self.p_incoh


def _prefactor(gate: GatedPulseParams, mol: MoleculeParams) -> float:
    return mol.sigma2 * gate.T / mol.A0 ** 2


def p_coherent(sg: SpectralGain, gate: GatedPulseParams, mol: MoleculeParams,
               detuning: float | None = None, d2: float = 0.0) -> float:
    """Coherent (pair-amplitude) TPA probability."""
    gate.check(width_low(sg.params))
    if detuning is None:
        detuning = mol.detuning(sg.params.omega0)
    amp = disp.pair_amplitude(sg, d2)
    return _prefactor(gate, mol) * float(mol.lorentzian(detuning)) * abs(amp) ** 2


def _pair_spectrum(sg: SpectralGain):
    """Autoconvolution ``(S*S)(sigma) = int S(nu) S(sigma - nu) dnu/2pi`` on a
    possibly decimated copy of the grid, with its sum-frequency nodes."""
    n = sg.grid.n_points
    stride = max(1, math.ceil((n - 1) / (_CONVOLUTION_POINTS - 1)))
    while (n - 1) % stride:
        stride += 1
    s = sg.spectrum[::stride]
    h = sg.grid.spacing * stride
    m = s.size - 1
    sigma = np.arange(-m, m + 1) * h
    return sigma, np.convolve(s, s) * h / (2 * np.pi)


def p_incoherent(sg: SpectralGain, gate: GatedPulseParams, mol: MoleculeParams,
                 mode: str = "full", detuning: float | None = None) -> float:
    """Incoherent (intensity-overlap) TPA probability.

    ``mode="full"`` integrates the autoconvolved spectrum against the
    molecular Lorentzian using exact product weights, valid for any
    linewidth; ``mode="narrow-line"`` is its ``gamma_fg << w`` limit.
    """
    if mode not in INCOHERENT_MODES:
        raise ValueError(f"mode must be one of {INCOHERENT_MODES}, got {mode!r}")
    gate.check(width_low(sg.params))
    xi = sg.params.xi
    pref = _prefactor(gate, mol)
    if mode == "narrow-line":
        if mol.gamma_fg > 0.1 * width_low(sg.params):
            warnings.warn(
                f"narrow-line limit used with gamma_fg = {mol.gamma_fg:.3g} rad/s > 0.1 w",
                ValidityWarning, stacklevel=2)
        s4 = integrate(sg.spectrum ** 2, sg.grid, "dnu/2pi").value
        return 0.5 * (1 + xi) * pref * mol.gamma_fg * s4
    if detuning is None:
        detuning = mol.detuning(sg.params.omega0)
    sigma, pair = _pair_spectrum(sg)
    weights = lorentzian_hat_weights(sigma, mol.gamma_fg, detuning)
    return (1 + xi) * pref * float(np.dot(weights, pair)) / (2 * np.pi)


def p_classical(mol: MoleculeParams, n_photons: float, T: float) -> float:
    """Quasi-monochromatic coherent-state pulse of duration ``T``."""
    if T * mol.gamma_fg < 10:
        warnings.warn(f"T * gamma_fg = {T * mol.gamma_fg:.3g}; the rectangular-pulse "
                      "formula assumes T >> 1/gamma_fg", ValidityWarning, stacklevel=2)
    return mol.sigma2 / mol.A0 ** 2 * (n_photons / T) ** 2 * T


def p_analytic(mol: MoleculeParams, n_photons: float, T: float, w: float,
               A0: float | None = None) -> float:
    """Closed-form coherent probability: linear plus quadratic flux terms."""
    A0 = mol.A0 if A0 is None else A0
    flux = n_photons / (A0 * T)
    return flux * (mol.sigma2 / A0) * 0.75 * (w / math.pi) * T + mol.sigma2 * flux ** 2 * T


def crossover_photon_number(w: float, T: float) -> float:
    """Photon number at which the linear and quadratic terms are equal."""
    if not (w > 0 and T > 0):
        raise ValueError("w and T must be positive")
    return 3 * w * T / (4 * math.pi)


def mu_factor(sg: SpectralGain) -> float:
    """``|int f g| / int |g|^2``; tends to 1 at high gain."""
    if sg.params.gamma <= 0:
        raise ValueError("mu is undefined for gamma = 0")
    return abs(disp.pair_amplitude(sg)) / photon_rate(sg)


def beta_factor(sg: SpectralGain, mol: MoleculeParams) -> float:
    """``gamma_fg int |g|^4 / (int |g|^2)^2``, the incoherent-to-quadratic ratio."""
    if sg.params.gamma <= 0:
        raise ValueError("beta is undefined for gamma = 0")
    s4 = integrate(sg.spectrum ** 2, sg.grid, "dnu/2pi").value
    return mol.gamma_fg * s4 / photon_rate(sg) ** 2


def broadband_total(sg: SpectralGain, gate: GatedPulseParams, mol: MoleculeParams,
                    g2_value: float, detuning: float | None = None) -> float:
    """Total probability for a molecule much broader than the light:
    classical rate times ``g2(0)``."""
    if detuning is None:
        detuning = mol.detuning(sg.params.omega0)
    n = photon_number(sg, gate)
    return _prefactor(gate, mol) * (n / gate.T) ** 2 * float(mol.lorentzian(detuning)) * g2_value


def molecule_count(concentration: float, beam_radius: float, path_length: float) -> float:
    """Molecules in the illuminated cylinder.

    Parameters
    ----------
    concentration : float
        [mol/L].
    beam_radius, path_length : float
        [m].
    """
    return concentration * 1e3 * constants.Avogadro * math.pi * beam_radius ** 2 * path_length


@dataclass(frozen=True)
class TpaSetup:
    """Fixed parameters of a sweep.

    ``n_photons`` (when set) pins the photon number by adjusting the gain at
    every point; otherwise ``crystal.gamma`` is used.  ``compensation`` is
    ``"none"``, ``"optimal"`` or a fixed D2 in s^2.
    """

    crystal: CrystalParams
    gate: GatedPulseParams
    molecule: MoleculeParams
    n_photons: float | None = None
    incoherent_mode: str = "narrow-line"
    compensation: object = "none"
    min_grid_points: int = 20001
    options: dict = field(default_factory=dict)


def evaluate(setup: TpaSetup, axis_value: float = math.nan) -> TpaResult:
    """All probabilities and diagnostics for one parameter set."""
    p, gate, mol = setup.crystal, setup.gate, setup.molecule
    grid = disp.coherent_grid(p, min_points=setup.min_grid_points)
    if setup.n_photons is not None:
        p = gain_for_photon_number(p, gate, setup.n_photons, grid)
    sg = gain_functions(p, grid)
    w = width_low(p)
    n = photon_number(sg, gate)

    comp = setup.compensation
    if comp == "optimal":
        d2 = disp.optimal_d2(sg).d2
    elif comp in ("none", None):
        d2 = 0.0
    else:
        d2 = float(comp)
    r = disp.reduction_factor(sg, disp.DispersionParams(d2)) if p.gamma > 0 else math.nan
    g2 = ((1 + p.xi) + r * abs(disp.pair_amplitude(sg)) ** 2 / photon_rate(sg) ** 2
          if p.gamma > 0 else math.nan)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        pc = p_coherent(sg, gate, mol, d2=d2)
        pi = p_incoherent(sg, gate, mol, setup.incoherent_mode)
        pcl = p_classical(mol, n, gate.T)
    return TpaResult(
        axis_value=axis_value, n_photons=n, gamma_z=p.gain, T=gate.T,
        gamma_fg=mol.gamma_fg, w=w, d2=d2, p_coh=pc, p_incoh=pi, p_classical=pcl,
        p_analytic=p_analytic(mol, n, gate.T, w),
        mu=mu_factor(sg) if p.gamma > 0 else math.nan,
        beta=beta_factor(sg, mol) if p.gamma > 0 else math.nan,
        r=r, g2=g2, regime=sg.regime)


def _point(setup: TpaSetup, axis: str, value: float) -> TpaSetup:
    p, gate, mol = setup.crystal, setup.gate, setup.molecule
    if axis == "N":
        return replace(setup, n_photons=value)
    if axis == "gamma_z":
        return replace(setup, crystal=p.with_gain(value), n_photons=None)
    if axis == "gamma_fg":
        return replace(setup, molecule=replace(mol, gamma_fg=value))
    if axis == "T":
        return replace(setup, gate=replace(gate, T=value))
    if axis == "w":
        # w = sqrt(pi / (kappa z)): vary the crystal length, keep gamma z
        z = math.pi / (p.kappa * value ** 2)
        return replace(setup, crystal=CrystalParams(p.omega0, p.gain / z, z, p.kappa, p.xi))
    raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


def _failed(setup: TpaSetup, value: float, exc: Exception) -> TpaResult:
    nan = math.nan
    return TpaResult(value, nan, nan, setup.gate.T, setup.molecule.gamma_fg, nan, nan,
                     nan, nan, nan, nan, nan, nan, nan, nan, "", error=f"{type(exc).__name__}: {exc}")


def sweep(setup: TpaSetup, axis: str, values, workers: int = 1) -> list[TpaResult]:
    """Evaluate ``setup`` along one monotone axis.

    Points run in a thread pool when ``workers > 1``; results keep the
    order of ``values``.  A failing point yields a row with NaNs and an
    error message.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = np.asarray(values, dtype=float)
    steps = np.diff(values)
    if values.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("sweep values must be strictly monotone")

    def run(value):
        try:
            return evaluate(_point(setup, axis, float(value)), float(value))
        except (ValueError, ArithmeticError) as exc:
            return _failed(setup, float(value), exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, values))
    return [run(v) for v in values]
