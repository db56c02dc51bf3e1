"""Squeezing gain functions, down-conversion spectra and photon bookkeeping.

The two-mode squeezing transformation of a CW-pumped crystal is

    b(w) = f(w) a(w) + g(w) a^dag(2 w0 - w)

with ``f = cosh(s z) + i kappa nu^2 sinh(s z)/s`` and
``g = i gamma sinh(s z)/s``, ``s = sqrt(gamma^2 - kappa^2 nu^4)`` and the
quadratic phase mismatch ``dk = -2 kappa nu^2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize

from .numerics import DetuningGrid, integrate, sinhc_ratio

DEFAULT_GRID_POINTS = 20001
LOW_GAIN_LIMIT = 0.01
HIGH_GAIN_LIMIT = 3.0
MIN_GATE_BANDWIDTH_PRODUCT = 50.0


class ValidityWarning(UserWarning):
    """An approximation is being used outside its stated range."""


@dataclass(frozen=True)
class CrystalParams:
    """Down-conversion crystal.

    Parameters
    ----------
    omega0 : float
        Centre angular frequency of the down-converted light [rad/s].
    gamma : float
        Gain coefficient [1/m].
    z : float
        Crystal length [m].
    kappa : float
        Half the group-velocity dispersion, ``k''/2`` [s^2/m].
    xi : int
        1 for indistinguishable (collinear, co-polarised) photons, else 0.
    """

    omega0: float
    gamma: float
    z: float
    kappa: float
    xi: int = 1

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError(f"crystal length z must be positive, got {self.z}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive (normal dispersion), got {self.kappa}")
        if not self.gamma >= 0:
            raise ValueError(f"gain gamma must be non-negative, got {self.gamma}")
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.xi not in (0, 1):
            raise ValueError(f"xi must be 0 or 1, got {self.xi}")

    @property
    def gain(self) -> float:
        """Dimensionless single-pass gain ``gamma z``."""
        return self.gamma * self.z

    @property
    def kappa_z(self) -> float:
        return self.kappa * self.z

    def with_gain(self, gamma_z: float) -> "CrystalParams":
        return CrystalParams(self.omega0, gamma_z / self.z, self.z, self.kappa, self.xi)


def regime(gamma_z: float) -> str:
    if gamma_z < LOW_GAIN_LIMIT:
        return "low"
    if gamma_z > HIGH_GAIN_LIMIT:
        return "high"
    return "intermediate"


def width_low(p: CrystalParams) -> float:
    """First zero of the low-gain sinc^2 spectrum, ``sqrt(pi/(kappa z))`` [rad/s]."""
    return math.sqrt(math.pi / p.kappa_z)


def width_high(p: CrystalParams) -> float:
    """Width of the high-gain super-Gaussian, ``(gamma/(kappa^2 z))**0.25`` [rad/s]."""
    if p.gamma <= 0:
        raise ValueError("high-gain width is undefined for gamma = 0")
    return (p.gamma / (p.kappa ** 2 * p.z)) ** 0.25


def default_grid(p: CrystalParams, n_points: int = DEFAULT_GRID_POINTS) -> DetuningGrid:
    """Grid over ``|nu| <= min(10 max(w, b), omega0/2)``."""
    scale = width_low(p)
    if p.gamma > 0:
        scale = max(scale, width_high(p))
    return DetuningGrid(min(10 * scale, 0.5 * p.omega0), n_points, p.omega0)


def spectral_gain_coeff(p: CrystalParams, nu) -> np.ndarray:
    """``s = sqrt(gamma^2 - kappa^2 nu^4)`` [1/m], principal branch.

    Returned in extended precision; purely imaginary once the phase
    mismatch exceeds the gain.
    """
    nu = np.asarray(nu, dtype=np.longdouble)
    gamma = np.longdouble(p.gamma)
    kappa = np.longdouble(p.kappa)
    s2 = gamma ** 2 - (kappa * nu ** 2) ** 2
    root = np.sqrt(np.abs(s2)).astype(np.clongdouble)
    return np.where(s2 >= 0, root, 1j * root)


def gain_at(p: CrystalParams, nu):
    """Squeezing coefficients ``(f, g)`` at arbitrary detunings.

    Computed in extended precision (``np.clongdouble``) so that
    ``|f|^2 - |g|^2 = 1`` holds to ~1e-11 even at gains of ``gamma z = 10``.
    """
    nu = np.asarray(nu, dtype=np.longdouble)
    z = np.longdouble(p.z)
    s = spectral_gain_coeff(p, nu)
    sh = sinhc_ratio(s, z)
    f = np.cosh(s * z) + 1j * np.longdouble(p.kappa) * nu ** 2 * sh
    g = 1j * np.longdouble(p.gamma) * sh
    return f, g


@dataclass(frozen=True)
class SpectralGain:
    """Gain functions sampled on a grid.

    ``f`` and ``g`` are stored in extended precision; ``fg`` and
    ``spectrum`` are double-precision views used by the integrals.
    ``d2`` records any quadratic spectral phase already applied.
    """

    params: CrystalParams
    grid: DetuningGrid
    f: np.ndarray
    g: np.ndarray
    d2: float = 0.0

    @property
    def regime(self) -> str:
        return regime(self.params.gain)

    @cached_property
    def fg(self) -> np.ndarray:
        return (self.f * self.g).astype(np.complex128)

    @cached_property
    def spectrum(self) -> np.ndarray:
        return (self.g.real ** 2 + self.g.imag ** 2).astype(float)

    def unitarity_defect(self) -> float:
        """``max | |f|^2 - |g|^2 - 1 |`` over the grid."""
        ff = self.f.real ** 2 + self.f.imag ** 2
        gg = self.g.real ** 2 + self.g.imag ** 2
        return float(np.max(np.abs(ff - gg - 1)))


def gain_functions(p: CrystalParams, grid: DetuningGrid | None = None) -> SpectralGain:
    if grid is None:
        grid = default_grid(p)
    f, g = gain_at(p, grid.nodes)
    f.setflags(write=False)
    g.setflags(write=False)
    return SpectralGain(p, grid, f, g)


def spectrum(sg: SpectralGain) -> np.ndarray:
    """Photon spectral density ``S = |g|^2`` per unit ``dnu/2pi``."""
    return sg.spectrum


def photon_rate(sg: SpectralGain) -> float:
    """Total photon rate ``F = int |g|^2 dnu/2pi`` [photons/s]."""
    return integrate(sg.spectrum, sg.grid, "dnu/2pi").value


@dataclass(frozen=True)
class GatedPulseParams:
    """Rectangular time gate of duration ``T`` [s]."""

    T: float
    min_product: float = MIN_GATE_BANDWIDTH_PRODUCT

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"gate duration must be positive, got {self.T}")

    def check(self, bandwidth: float) -> bool:
        """Warn when ``T * bandwidth`` is below the validity threshold."""
        ok = self.T * bandwidth >= self.min_product
        if not ok:
            warnings.warn(
                f"gate T*w = {self.T * bandwidth:.3g} < {self.min_product:g}; "
                "the long-gate approximation is poor", ValidityWarning, stacklevel=3)
        return ok


def photon_number(sg: SpectralGain, gate: GatedPulseParams) -> float:
    """Mean photon number in the gated pulse, ``N = T F``."""
    gate.check(width_low(sg.params))
    return gate.T * photon_rate(sg)


def mode_rate(p: CrystalParams) -> float:
    """Temporal modes per second, ``3 w / 4 pi``."""
    return 3 * width_low(p) / (4 * math.pi)


def photons_per_mode(sg: SpectralGain, gate: GatedPulseParams | None = None) -> float:
    """Mean photons per temporal mode, ``F / (3 w / 4 pi)``; independent of T."""
    return photon_rate(sg) / mode_rate(sg.params)


def photons_per_mode_estimate(sg: SpectralGain) -> float:
    """Cruder estimate ``F / B`` with ``B = 1.34 w / 2 pi`` the full bandwidth in Hz."""
    return photon_rate(sg) / (1.34 * width_low(sg.params) / (2 * math.pi))


def gate_kernel(T: float, delta_nu):
    """Frequency-domain gate ``D(dnu) = T sinc(dnu T / 2)`` (unnormalised sinc)."""
    if not T > 0:
        raise ValueError("T must be positive")
    return T * np.sinc(np.asarray(delta_nu) * T / (2 * np.pi))


def spectrum_width(p: CrystalParams, level: float = 0.5, grid: DetuningGrid | None = None) -> float:
    """Half-width at which the spectrum falls to ``level`` of its peak.

    The first crossing outward from ``nu = 0`` is bracketed on the grid and
    refined by root finding on the analytic spectrum.
    """
    if p.gamma <= 0:
        raise ValueError("spectrum is identically zero for gamma = 0")
    sg = gain_functions(p, grid)
    s = sg.spectrum
    mid = sg.grid.n_points // 2
    right = s[mid:] / s[mid]
    below = np.flatnonzero(right < level)
    if below.size == 0:
        raise ValueError("spectrum does not fall to the requested level inside the grid")
    k = below[0]
    nu = sg.grid.nodes[mid:]
    peak = float(s[mid])

    def excess(x):
        g = gain_at(p, x)[1]
        return float(abs(g) ** 2) / peak - level

    return optimize.brentq(excess, nu[k - 1], nu[k], xtol=1e-14 * nu[k], rtol=1e-14)


def fwhm(p: CrystalParams, grid: DetuningGrid | None = None) -> float:
    return 2 * spectrum_width(p, 0.5, grid)


def hwhm(p: CrystalParams, grid: DetuningGrid | None = None) -> float:
    return spectrum_width(p, 0.5, grid)


def gain_for_photon_number(p: CrystalParams, gate: GatedPulseParams, n_photons: float,
                           grid: DetuningGrid | None = None) -> CrystalParams:
    """Crystal with the gain adjusted so that ``T F = n_photons``.

    ``grid`` fixes the integration window; when omitted the default grid of
    each trial gain is used.
    """
    if not n_photons > 0:
        raise ValueError(f"photon number must be positive, got {n_photons}")
    target = math.log(n_photons / gate.T)

    def mismatch(log_gz):
        trial = p.with_gain(math.exp(log_gz))
        return math.log(photon_rate(gain_functions(trial, grid))) - target

    # low-gain guess F ~ (2/3pi)(gamma z)^2 w, then widen until bracketed
    guess = 0.5 * (target - math.log(2 / (3 * math.pi) * width_low(p)))
    hi = min(guess + 2.0, math.log(40.0))
    lo = min(guess - 2.0, hi - 4.0)
    while mismatch(lo) > 0:
        lo -= 4.0
    while mismatch(hi) < 0:
        if hi >= math.log(40.0):
            raise ValueError(f"photon number {n_photons:.3g} needs gamma z > 40")
        hi = min(hi + 2.0, math.log(40.0))
    log_gz = optimize.brentq(mismatch, lo, hi, xtol=1e-13, rtol=1e-13)
    return p.with_gain(math.exp(log_gz))
