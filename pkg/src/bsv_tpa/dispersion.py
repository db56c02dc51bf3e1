"""Quadratic spectral phase, the pair-amplitude reduction factor, its
optimisation and the zero-delay intensity correlation g2(0).

Phase convention: a compensating optic with group-delay dispersion ``D2``
multiplies each field operator by ``exp(i D2 nu^2 / 2)``, so the pair
amplitude ``f g`` acquires ``exp(i D2 nu^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Union

import numpy as np

from .numerics import DetuningGrid, integrate, minimize_scalar
from .pdc import (CrystalParams, GatedPulseParams, SpectralGain, gain_functions,
                  photon_number, photons_per_mode)

PAIR_CONVENTION = "field exp(i*D2*nu^2/2); pair exp(i*D2*nu^2)"
POINTS_PER_OSCILLATION = 20
DEFAULT_BRACKET = (-4.0, 1.0)   # in units of kappa*z
D2_TOL = 1e-3                   # in units of kappa*z
PLATEAU_RTOL = 2e-3
PLATEAU_MIN_WIDTH = 0.25        # in units of kappa*z
SCAN_POINTS = 201


class ResolutionError(ValueError):
    """Grid too coarse for the oscillations of the pair amplitude."""

    def __init__(self, message: str, required_points: int):
        super().__init__(message)
        self.required_points = required_points


@dataclass(frozen=True)
class DispersionParams:
    """Group-delay dispersion ``d2`` [s^2] of a compensating optic."""

    d2: float = 0.0
    convention: str = PAIR_CONVENTION

    def __post_init__(self):
        if not math.isfinite(self.d2):
            raise ValueError(f"D2 must be finite, got {self.d2}")


class D2Optimum(NamedTuple):
    d2: float
    r_max: float
    plateau: bool


@dataclass(frozen=True)
class G2Result:
    g2_uncompensated: float
    g2_compensated: float
    g2_analytic: float
    d2_opt: float
    nbar: float
    n_photons: float = math.nan
    gamma_z: float = math.nan
    plateau: bool = False
    error: str = ""


def _phase_rate(nu_max: float, kappa_z: float, d2: float) -> float:
    # the pair amplitude splits into chirps exp(i(2kz+D2)nu^2) and exp(i D2 nu^2)
    return 2 * nu_max * max(abs(2 * kappa_z + d2), abs(d2))


def required_points(nu_max: float, kappa_z: float, d2: float = 0.0) -> int:
    """Smallest ``4k+1`` node count giving 20 nodes per oscillation."""
    rate = _phase_rate(nu_max, kappa_z, d2)
    h = 2 * math.pi / (POINTS_PER_OSCILLATION * rate)
    n = int(math.ceil(2 * nu_max / h)) + 1
    return n + (-(n - 1)) % 4


def check_resolution(sg: SpectralGain, d2: float = 0.0) -> None:
    need = required_points(sg.grid.nu_max, sg.params.kappa_z, sg.d2 + d2)
    if sg.grid.n_points < need:
        raise ResolutionError(
            f"grid of {sg.grid.n_points} points under-resolves the pair amplitude phase "
            f"(D2 = {sg.d2 + d2:.4g} s^2); need at least {need} points", need)


def coherent_grid(p: CrystalParams, bracket=DEFAULT_BRACKET, min_points: int = 20001) -> DetuningGrid:
    """Grid over ``|nu| <= omega0/2`` resolving every D2 in ``bracket`` (units of kappa z)."""
    nu_max = 0.5 * p.omega0
    kz = p.kappa_z
    need = max(required_points(nu_max, kz, b * kz) for b in bracket)
    return DetuningGrid(nu_max, max(need, min_points), p.omega0)


def apply_dispersion(sg: SpectralGain, d: DispersionParams) -> SpectralGain:
    """Return ``sg`` with each field multiplied by ``exp(i D2 nu^2 / 2)``."""
    if d.d2 == 0:
        return sg
    nu = sg.grid.nodes.astype(np.longdouble)
    phase = np.exp(1j * np.longdouble(d.d2) / 2 * nu ** 2)
    return replace(sg, f=sg.f * phase, g=sg.g * phase, d2=sg.d2 + d.d2)


def pair_amplitude(sg: SpectralGain, d2: float = 0.0) -> complex:
    """``int f g exp(i D2 nu^2) dnu/2pi`` with a resolution check."""
    check_resolution(sg, d2)
    fg = sg.fg
    if d2:
        fg = fg * np.exp(1j * d2 * sg.grid.nodes ** 2)
    return integrate(fg, sg.grid, "dnu/2pi").value


def reduction_factor(sg: SpectralGain, d: DispersionParams) -> float:
    """``r = |int f g e^{i D2 nu^2}|^2 / |int f g|^2`` on the grid of ``sg``."""
    base = abs(pair_amplitude(sg)) ** 2
    if base == 0:
        raise ValueError("reduction factor undefined: pair amplitude vanishes (gamma = 0?)")
    return abs(pair_amplitude(sg, d.d2)) ** 2 / base


def optimal_d2(sg: SpectralGain, bracket_hint=None, tol: float = D2_TOL) -> D2Optimum:
    """Dispersion maximising the reduction factor.

    A dense scan over the bracket locates the global maximum.  If the
    near-maximal region (within ``PLATEAU_RTOL``) is wider than
    ``PLATEAU_MIN_WIDTH`` the objective is treated as flat and its midpoint is
    returned with ``plateau=True``; otherwise the peak is refined by Brent's
    method to ``tol * kappa z``.  ``D2 = 0`` is always a candidate.
    """
    kz = sg.params.kappa_z
    lo, hi = (b * kz for b in (bracket_hint or DEFAULT_BRACKET))
    for edge in (lo, hi):
        check_resolution(sg, edge)
    base = abs(pair_amplitude(sg)) ** 2
    if base == 0:
        raise ValueError("optimal D2 undefined: pair amplitude vanishes (gamma = 0?)")

    fg = sg.fg
    nu2 = sg.grid.nodes ** 2

    def r(d2):
        return abs(integrate(fg * np.exp(1j * d2 * nu2), sg.grid, "dnu/2pi").value) ** 2 / base

    xs = np.linspace(lo, hi, SCAN_POINTS)
    rs = np.array([r(x) for x in xs])
    k = int(np.argmax(rs))
    near = rs >= rs[k] * (1 - PLATEAU_RTOL)
    a = k
    while a > 0 and near[a - 1]:
        a -= 1
    b = k
    while b < xs.size - 1 and near[b + 1]:
        b += 1

    if xs[b] - xs[a] >= PLATEAU_MIN_WIDTH * kz:
        d2 = 0.5 * (xs[a] + xs[b])
        best = D2Optimum(float(d2), r(d2), True)
    else:
        res = minimize_scalar(lambda x: -r(x), (xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]),
                              tol * kz)
        best = D2Optimum(res.x, -res.fun, False)
    if best.r_max < 1.0:
        best = D2Optimum(0.0, 1.0, False)
    return best


def g2_zero(sg: SpectralGain, gate: GatedPulseParams,
            d: Union[DispersionParams, str] = "optimal", xi: int | None = None) -> G2Result:
    """Zero-delay intensity correlation of the gated squeezed vacuum.

    Returns the uncompensated value (no added dispersion), the compensated
    value (with ``d`` or with the optimal D2) and the ideal single-mode form
    ``(2 + xi) + 1/nbar``.
    """
    if sg.params.gamma <= 0:
        raise ValueError("g2(0) is undefined for the vacuum (gamma = 0)")
    xi = sg.params.xi if xi is None else xi
    n = photon_number(sg, gate)
    pair = abs(pair_amplitude(sg)) ** 2
    # the gate cancels: (T/N)^2 |int f g|^2 = |int f g|^2 / F^2
    bunching = (gate.T / n) ** 2 * pair
    if isinstance(d, str):
        if d != "optimal":
            raise ValueError(f"dispersion must be DispersionParams or 'optimal', got {d!r}")
        opt = optimal_d2(sg)
        d2, r, plateau = opt.d2, opt.r_max, opt.plateau
    else:
        d2, r, plateau = d.d2, reduction_factor(sg, d), False
    nbar = photons_per_mode(sg, gate)
    return G2Result(
        g2_uncompensated=(1 + xi) + bunching,
        g2_compensated=(1 + xi) + bunching * r,
        g2_analytic=(2 + xi) + 1 / nbar,
        d2_opt=d2, nbar=nbar, n_photons=n, gamma_z=sg.params.gain, plateau=plateau)


def g2_sweep(p: CrystalParams, gamma_z_values, gate: GatedPulseParams,
             xi: int | None = None, d: Union[DispersionParams, str] = "optimal",
             grid: DetuningGrid | None = None) -> list[G2Result]:
    """g2(0) over a monotone sweep of the gain ``gamma z``.

    All points share one grid over ``|nu| <= omega0/2``.  Failures are
    recorded per point and the sweep continues.
    """
    values = np.asarray(gamma_z_values, dtype=float)
    steps = np.diff(values)
    if values.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("gain sweep must be strictly monotone")
    grid = grid or coherent_grid(p)
    out = []
    for gz in values:
        try:
            sg = gain_functions(p.with_gain(float(gz)), grid)
            out.append(g2_zero(sg, gate, d, xi))
        except (ValueError, ArithmeticError) as exc:
            nan = math.nan
            out.append(G2Result(nan, nan, nan, nan, nan, nan, float(gz), error=str(exc)))
    return out
