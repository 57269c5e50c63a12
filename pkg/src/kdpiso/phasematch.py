"""Type-II phase matching and group-velocity matching for KDP-family crystals.

Polarization scheme is fixed throughout: the pump and the idler are
extraordinary rays, the signal is an ordinary ray (e -> o + e), collinear
propagation at angle phi from the optic axis.

Phase mismatch (rad/um, wavelengths in um):

    delta_k = 2*pi * [ n_e(l_p, phi)/l_p - n_o(l_s)/l_s - n_e(l_i, phi)/l_i ]

Group-velocity matching residuals (s/m), with k' the inverse group velocity:

    GVM1:  k'_p - k'_s
    GVM2:  k'_p - k'_i
    GVM3:  2*k'_p - k'_s - k'_i

The ridge of the phase-matching function in the (omega_s, omega_i) plane is
oriented at

    tan(theta) = -(k'_p - k'_s) / (k'_p - k'_i),

which evaluates to 0, 90 and 45 degrees at GVM1, GVM2 and GVM3 points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from kdpiso.crystals import CrystalRecord
from kdpiso.errors import DispersionRangeError, NoPhaseMatchingError

#: Solver acceptance thresholds.
DELTA_K_TOL_RAD_PER_UM = 1.0e-6
GVM_TOL_S_PER_M = 1.0e-13

#: Default scan windows (um).
DEGENERATE_PUMP_RANGE_UM = (0.35, 1.0)
NONDEGENERATE_SIGNAL_RANGE_UM = (0.5, 0.9)

_PHI_EPS_DEG = 1.0e-9


class GvmType(str, Enum):
    GVM1 = "gvm1"
    GVM2 = "gvm2"
    GVM3 = "gvm3"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value

    @property
    def nominal_ridge_deg(self) -> float:
        return {GvmType.GVM1: 0.0, GvmType.GVM2: 90.0, GvmType.GVM3: 45.0}[self]


@dataclass(frozen=True)
class SpdcConfig:
    """A collinear type-II (e -> o + e) operating point.

    Wavelengths in micrometers, cut angle phi in degrees, crystal length in
    millimeters. Signal is the shorter down-converted photon.
    """

    crystal: CrystalRecord
    lambda_p_um: float
    lambda_s_um: float
    lambda_i_um: float
    phi_deg: float
    length_mm: float

    def __post_init__(self) -> None:
        lp, ls, li = self.lambda_p_um, self.lambda_s_um, self.lambda_i_um
        if not (lp > 0 and ls > 0 and li > 0):
            raise ValueError("wavelengths must be positive")
        resid = abs(1.0 / lp - 1.0 / ls - 1.0 / li) * lp
        if resid > 1.0e-12:
            raise ValueError(
                f"energy conservation violated: 1/{lp} != 1/{ls} + 1/{li} "
                f"(relative residual {resid:.2e})"
            )
        if not lp < ls <= li:
            raise ValueError(
                f"need lambda_p < lambda_s <= lambda_i, got {lp}, {ls}, {li}"
            )
        if not 0.0 < self.phi_deg < 90.0:
            raise ValueError(f"cut angle must lie in (0, 90) deg, got {self.phi_deg}")
        if not self.length_mm > 0:
            raise ValueError(f"crystal length must be positive, got {self.length_mm}")

    @classmethod
    def degenerate(
        cls, crystal: CrystalRecord, lambda_p_um: float, phi_deg: float, length_mm: float
    ) -> "SpdcConfig":
        return cls(crystal, lambda_p_um, 2.0 * lambda_p_um, 2.0 * lambda_p_um, phi_deg, length_mm)

    @classmethod
    def from_signal(
        cls,
        crystal: CrystalRecord,
        lambda_p_um: float,
        lambda_s_um: float,
        phi_deg: float,
        length_mm: float,
    ) -> "SpdcConfig":
        li = idler_wavelength(lambda_p_um, lambda_s_um)
        return cls(crystal, lambda_p_um, lambda_s_um, li, phi_deg, length_mm)

    @property
    def degenerate_point(self) -> bool:
        return math.isclose(self.lambda_s_um, self.lambda_i_um, rel_tol=1e-12)


def idler_wavelength(lambda_p_um: float, lambda_s_um: float) -> float:
    """Idler wavelength from energy conservation 1/l_p = 1/l_s + 1/l_i."""
    if lambda_s_um <= lambda_p_um:
        raise ValueError("signal wavelength must exceed the pump wavelength")
    return 1.0 / (1.0 / lambda_p_um - 1.0 / lambda_s_um)


# ---------------------------------------------------------------------------
# pointwise quantities
# ---------------------------------------------------------------------------


def phase_mismatch(crystal: CrystalRecord, lambda_p_um, lambda_s_um, lambda_i_um, phi_deg):
    """delta_k in rad/um at an explicit wavelength triple and angle."""
    return 2.0 * np.pi * (
        crystal.index_e(lambda_p_um, phi_deg) / lambda_p_um
        - crystal.index_o(lambda_s_um) / lambda_s_um
        - crystal.index_e(lambda_i_um, phi_deg) / lambda_i_um
    )


def delta_k(config: SpdcConfig):
    """Phase mismatch of a configuration, rad/um."""
    return phase_mismatch(
        config.crystal, config.lambda_p_um, config.lambda_s_um, config.lambda_i_um, config.phi_deg
    )


def _kprimes(crystal: CrystalRecord, lp, ls, li, phi_deg):
    kp = crystal.inverse_group_velocity("e", lp, phi_deg)
    ks = crystal.inverse_group_velocity("o", ls)
    ki = crystal.inverse_group_velocity("e", li, phi_deg)
    return kp, ks, ki


def gvm_residual(
    crystal: CrystalRecord,
    gvm_type: GvmType,
    lambda_p_um,
    lambda_s_um,
    lambda_i_um,
    phi_deg,
):
    """Residual of the requested GVM condition, in s/m."""
    kp, ks, ki = _kprimes(crystal, lambda_p_um, lambda_s_um, lambda_i_um, phi_deg)
    gvm_type = GvmType(gvm_type)
    if gvm_type is GvmType.GVM1:
        return kp - ks
    if gvm_type is GvmType.GVM2:
        return kp - ki
    return 2.0 * kp - ks - ki


def ridge_angle(config: SpdcConfig) -> float:
    """Orientation of the phase-matching ridge, degrees in [0, 180).

    Returns NaN for the indeterminate 0/0 case.
    """
    kp, ks, ki = _kprimes(
        config.crystal, config.lambda_p_um, config.lambda_s_um, config.lambda_i_um, config.phi_deg
    )
    num = -(kp - ks)
    den = kp - ki
    if num == 0.0 and den == 0.0:
        return math.nan
    return math.degrees(math.atan2(num, den)) % 180.0


def orientation_distance(theta_deg: float, nominal_deg: float) -> float:
    """Distance between two ridge orientations, as angles modulo 180 deg.

    A ridge at 179.99 deg and one at 0 deg point the same way; comparisons
    against the nominal 0/90/45 values must respect the wraparound.
    """
    d = abs(theta_deg - nominal_deg) % 180.0
    return min(d, 180.0 - d)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def solve_angle(
    crystal: CrystalRecord,
    lambda_p_um: float,
    lambda_s_um: float,
    lambda_i_um: float,
    xtol_deg: float = 1e-12,
) -> float:
    """Phase-matching angle phi (deg) with |delta_k| below tolerance.

    delta_k is strictly monotone in phi for these negative uniaxial crystals,
    so a single bracketed root exists whenever the endpoint signs differ.
    """

    def f(phi: float) -> float:
        return float(phase_mismatch(crystal, lambda_p_um, lambda_s_um, lambda_i_um, phi))

    lo, hi = _PHI_EPS_DEG, 90.0 - _PHI_EPS_DEG
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NoPhaseMatchingError(
            f"{crystal.id.value}: delta_k does not change sign on (0, 90) deg for "
            f"pump {lambda_p_um:.4g} um ({flo:+.3g} .. {fhi:+.3g} rad/um)"
        )
    phi = brentq(f, lo, hi, xtol=xtol_deg, rtol=8.9e-16)
    return float(phi)


@dataclass(frozen=True)
class GvmSolution:
    """A simultaneous root of the phase-matching and one GVM condition."""

    gvm_type: GvmType
    config: SpdcConfig
    residual_delta_k: float  # rad/um
    residual_gvm: float  # s/m
    ridge_angle_deg: float

    @property
    def crystal(self) -> CrystalRecord:
        return self.config.crystal


def _refine_root(f: Callable[[float], float], a: float, b: float,
                 xtol_um: float = 1e-13) -> float:
    """Bracketed root of a smooth scalar function, polished to residual floor."""
    return float(brentq(f, a, b, xtol=xtol_um, rtol=8.9e-16, maxiter=200))


def _scan_roots(
    f: Callable[[float], Optional[float]], xs: np.ndarray
) -> list[tuple[float, float]]:
    """Brackets [x1, x2] where ``f`` is defined on both ends and changes sign."""
    vals = [f(x) for x in xs]
    brackets = []
    for x1, x2, v1, v2 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if v1 is None or v2 is None:
            continue
        if v1 == 0.0:
            brackets.append((x1, x1))
        elif v1 * v2 < 0.0:
            brackets.append((x1, x2))
    if vals[-1] == 0.0:
        brackets.append((xs[-1], xs[-1]))
    return brackets


def _clip_scan_window(
    crystal: CrystalRecord, requested: tuple[float, float], downconverted_factor: float
) -> Optional[tuple[float, float]]:
    """Clip a pump scan window so pump and daughters stay strictly in range."""
    margin = 1.0e-3
    lo_o, hi_o = crystal.ordinary.range_um
    lo_e, hi_e = crystal.extraordinary.range_um
    lo = max(requested[0], lo_o + margin, lo_e + margin)
    hi = min(
        requested[1],
        (hi_o - margin) / downconverted_factor,
        (hi_e - margin) / downconverted_factor,
    )
    if not lo < hi:
        return None
    return lo, hi


def _solution_at(
    crystal: CrystalRecord,
    gvm_type: GvmType,
    lambda_p_um: float,
    lambda_s_um: float,
    lambda_i_um: float,
    length_mm: float,
    angle_xtol_deg: float = 1e-12,
) -> GvmSolution:
    phi = solve_angle(crystal, lambda_p_um, lambda_s_um, lambda_i_um, xtol_deg=angle_xtol_deg)
    config = SpdcConfig(crystal, lambda_p_um, lambda_s_um, lambda_i_um, phi, length_mm)
    return GvmSolution(
        gvm_type=GvmType(gvm_type),
        config=config,
        residual_delta_k=float(delta_k(config)),
        residual_gvm=float(
            gvm_residual(crystal, gvm_type, lambda_p_um, lambda_s_um, lambda_i_um, phi)
        ),
        ridge_angle_deg=ridge_angle(config),
    )


def solve_gvm_degenerate(
    crystal: CrystalRecord,
    gvm_type: GvmType,
    pump_range_um: tuple[float, float] = DEGENERATE_PUMP_RANGE_UM,
    scan_points: int = 131,
    length_mm: float = 15.0,
    xtol_um: float = 1e-13,
    angle_xtol_deg: float = 1e-12,
) -> list[GvmSolution]:
    """All wavelength-degenerate operating points of one GVM condition.

    Scans the pump wavelength over ``pump_range_um`` (clipped to dispersion
    validity, with lambda_s = lambda_i = 2*lambda_p), solving the
    phase-matching angle at each pump and bracketing sign changes of the GVM
    residual along the matched curve. Returns an empty list when no bracketed
    root exists.
    """
    gvm_type = GvmType(gvm_type)
    window = _clip_scan_window(crystal, pump_range_um, 2.0)
    if window is None:
        return []

    def residual(lp: float) -> Optional[float]:
        try:
            phi = solve_angle(crystal, lp, 2.0 * lp, 2.0 * lp)
        except (NoPhaseMatchingError, DispersionRangeError):
            return None
        return float(gvm_residual(crystal, gvm_type, lp, 2.0 * lp, 2.0 * lp, phi))

    xs = np.linspace(window[0], window[1], scan_points)
    solutions = []
    for a, b in _scan_roots(residual, xs):
        lp = a if a == b else _refine_root(lambda x: residual(x), a, b, xtol_um)
        solutions.append(
            _solution_at(crystal, gvm_type, lp, 2.0 * lp, 2.0 * lp, length_mm,
                         angle_xtol_deg=angle_xtol_deg)
        )
    return sorted(solutions, key=lambda s: s.config.lambda_p_um)


def solve_gvm_nondegenerate(
    crystal: CrystalRecord,
    lambda_p_um: float,
    signal_range_um: tuple[float, float] = NONDEGENERATE_SIGNAL_RANGE_UM,
    scan_points: int = 161,
    length_mm: float = 15.0,
    xtol_um: float = 1e-13,
    angle_xtol_deg: float = 1e-12,
) -> list[GvmSolution]:
    """Nondegenerate GVM1 operating points at a fixed pump wavelength.

    Scans the signal wavelength (idler following from energy conservation),
    solving the phase-matching angle at each point and bracketing roots of
    the pump-signal group-velocity mismatch.
    """
    margin = 1.0e-3
    lo_o, hi_o = crystal.ordinary.range_um
    lo_e, hi_e = crystal.extraordinary.range_um
    lo = max(signal_range_um[0], lo_o + margin, lambda_p_um * (1 + 1e-9))
    hi = min(signal_range_um[1], hi_o - margin)
    if not lo < hi:
        return []

    def residual(ls: float) -> Optional[float]:
        li = idler_wavelength(lambda_p_um, ls)
        if li < ls or not (lo_e + margin <= li <= hi_e - margin):
            return None
        try:
            phi = solve_angle(crystal, lambda_p_um, ls, li)
        except (NoPhaseMatchingError, DispersionRangeError):
            return None
        return float(
            gvm_residual(crystal, GvmType.GVM1, lambda_p_um, ls, li, phi)
        )

    xs = np.linspace(lo, hi, scan_points)
    solutions = []
    for a, b in _scan_roots(residual, xs):
        ls = a if a == b else _refine_root(lambda x: residual(x), a, b, xtol_um)
        li = idler_wavelength(lambda_p_um, ls)
        solutions.append(
            _solution_at(crystal, GvmType.GVM1, lambda_p_um, ls, li, length_mm,
                         angle_xtol_deg=angle_xtol_deg)
        )
    return sorted(solutions, key=lambda s: s.config.lambda_s_um)


# ---------------------------------------------------------------------------
# field map (curve-intersection picture)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PmGvmField:
    """Dense (pump wavelength x angle) sampling of delta_k and GVM residuals.

    Wavelength-degenerate convention: lambda_s = lambda_i = 2*lambda.
    """

    crystal: CrystalRecord
    lambda_um: np.ndarray  # shape (n_lambda,)
    phi_deg: np.ndarray  # shape (n_phi,)
    delta_k: np.ndarray  # rad/um, shape (n_lambda, n_phi)
    gvm1: np.ndarray  # s/m
    gvm2: np.ndarray  # s/m
    gvm3: np.ndarray  # s/m


def pmf_gvm_map(
    crystal: CrystalRecord,
    lambda_range_um: tuple[float, float],
    phi_range_deg: tuple[float, float] = (0.5, 89.5),
    n_lambda: int = 121,
    n_phi: int = 121,
) -> PmGvmField:
    """Sample delta_k and the three GVM residuals over (lambda_p, phi)."""
    lam = np.linspace(lambda_range_um[0], lambda_range_um[1], n_lambda)
    phi = np.linspace(phi_range_deg[0], phi_range_deg[1], n_phi)
    # range check once, loudly
    for probe in (lam[0], lam[-1], 2 * lam[0], 2 * lam[-1]):
        crystal.index_o(probe)
        crystal.index_e(probe, phi[0])

    lam2d = lam[:, None]
    phi2d = phi[None, :]
    dk = phase_mismatch(crystal, lam2d, 2 * lam2d, 2 * lam2d, phi2d)
    kp = crystal.inverse_group_velocity("e", lam2d, phi2d)
    ks = np.broadcast_to(
        crystal.inverse_group_velocity("o", 2 * lam2d), dk.shape
    )
    ki = crystal.inverse_group_velocity("e", 2 * lam2d, phi2d)
    return PmGvmField(
        crystal=crystal,
        lambda_um=lam,
        phi_deg=phi,
        delta_k=np.asarray(dk, dtype=float),
        gvm1=np.asarray(kp - ks, dtype=float),
        gvm2=np.asarray(kp - ki, dtype=float),
        gvm3=np.asarray(2 * kp - ks - ki, dtype=float),
    )
