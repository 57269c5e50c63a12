"""Joint spectral amplitudes on wavelength grids, Schmidt purity, marginals.

The two-photon amplitude is the product of a Gaussian pump envelope and the
sinc phase-matching amplitude,

    f(l_s, l_i) = alpha(l_s, l_i) * sinc(delta_k * L / 2),

evaluated on a uniform rectangular (signal x idler) wavelength grid and
normalized so that sum |f|^2 * h_s * h_i = 1 (wavelengths in micrometers).

The pump envelope in its wavelength form is

    alpha = exp[ -1/2 * ( (w_s + w_i - w_p) / sigma_p )^2 ],
    sigma_p = 2*pi*c*dl / ( l_c^2 - (dl/2)^2 ),

with l_c the pump central wavelength and dl the pump bandwidth in
wavelength. Heralded-photon purity comes from the Schmidt decomposition of
the gridded amplitude (singular value decomposition).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from kdpiso.crystals import C_M_PER_S
from kdpiso.errors import DispersionRangeError
from kdpiso.phasematch import SpdcConfig, phase_mismatch

_UNIFORMITY_RTOL = 1.0e-12
_NORM_ATOL = 1.0e-10


@dataclass(frozen=True)
class PumpSpec:
    """Pump central wavelength and bandwidth, both in micrometers."""

    lambda_center_um: float
    delta_lambda_um: float

    def __post_init__(self) -> None:
        if not 0.0 < self.delta_lambda_um < self.lambda_center_um:
            raise ValueError(
                f"need 0 < bandwidth < center wavelength, got "
                f"{self.delta_lambda_um} / {self.lambda_center_um}"
            )

    @property
    def sigma_p_rad_per_s(self) -> float:
        """1/e amplitude half-width of the envelope in angular frequency."""
        lc_m = self.lambda_center_um * 1e-6
        dl_m = self.delta_lambda_um * 1e-6
        return 2.0 * math.pi * C_M_PER_S * dl_m / (lc_m**2 - (dl_m / 2.0) ** 2)


def pump_envelope(lambda_s_um, lambda_i_um, pump: PumpSpec):
    """Gaussian pump envelope amplitude at (signal, idler) wavelengths."""
    w = 2.0 * math.pi * C_M_PER_S * 1e6  # rad/s per (1/um)
    omega_sum = w * (1.0 / np.asarray(lambda_s_um) + 1.0 / np.asarray(lambda_i_um))
    omega_p = w / pump.lambda_center_um
    x = (omega_sum - omega_p) / pump.sigma_p_rad_per_s
    return np.exp(-0.5 * x * x)


def _sinc(x):
    """sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


def phase_matching_amplitude(lambda_s_um, lambda_i_um, config: SpdcConfig):
    """sinc(delta_k L / 2) at (signal, idler), pump from energy conservation."""
    ls = np.asarray(lambda_s_um, dtype=float)
    li = np.asarray(lambda_i_um, dtype=float)
    lp = 1.0 / (1.0 / ls + 1.0 / li)
    dk = phase_mismatch(config.crystal, lp, ls, li, config.phi_deg)  # rad/um
    length_um = config.length_mm * 1000.0
    return _sinc(dk * length_um / 2.0)


@dataclass(frozen=True)
class GridSpec:
    """Axes of a rectangular (signal x idler) wavelength grid, micrometers."""

    signal_start_um: float
    signal_stop_um: float
    idler_start_um: float
    idler_stop_um: float
    n_signal: int = 201
    n_idler: int = 201

    def __post_init__(self) -> None:
        if not (self.signal_start_um < self.signal_stop_um and self.idler_start_um < self.idler_stop_um):
            raise ValueError("grid spans must be non-empty and ascending")
        if self.n_signal < 2 or self.n_idler < 2:
            raise ValueError("grids need at least 2 nodes per axis")

    def signal_axis(self) -> np.ndarray:
        return np.linspace(self.signal_start_um, self.signal_stop_um, self.n_signal)

    def idler_axis(self) -> np.ndarray:
        return np.linspace(self.idler_start_um, self.idler_stop_um, self.n_idler)

    def with_nodes(self, n_signal: int, n_idler: Optional[int] = None) -> "GridSpec":
        return GridSpec(
            self.signal_start_um,
            self.signal_stop_um,
            self.idler_start_um,
            self.idler_stop_um,
            n_signal,
            n_idler if n_idler is not None else n_signal,
        )

    def scaled(self, factor: float) -> "GridSpec":
        """Same centers, spans scaled by ``factor``."""
        sc = 0.5 * (self.signal_start_um + self.signal_stop_um)
        ic = 0.5 * (self.idler_start_um + self.idler_stop_um)
        shs = 0.5 * (self.signal_stop_um - self.signal_start_um) * factor
        ihs = 0.5 * (self.idler_stop_um - self.idler_start_um) * factor
        return GridSpec(sc - shs, sc + shs, ic - ihs, ic + ihs, self.n_signal, self.n_idler)


def _check_axis(name: str, axis: np.ndarray) -> None:
    steps = np.diff(axis)
    if np.any(steps <= 0):
        raise ValueError(f"{name} axis must be strictly ascending")
    h = axis[-1] - axis[0]
    if np.max(np.abs(steps - steps[0])) > _UNIFORMITY_RTOL * max(abs(h), 1.0):
        raise ValueError(f"{name} axis must be uniform")


@dataclass(frozen=True)
class SpectralGrid:
    """Complex joint spectral amplitude sampled on a wavelength grid.

    ``amplitude[j, k]`` belongs to ``(signal_um[j], idler_um[k])``. When
    ``normalized`` is set, sum |f|^2 * h_s * h_i = 1 (micrometer measure).
    """

    signal_um: np.ndarray
    idler_um: np.ndarray
    amplitude: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        signal = np.asarray(self.signal_um, dtype=float)
        idler = np.asarray(self.idler_um, dtype=float)
        amp = np.asarray(self.amplitude, dtype=complex)
        object.__setattr__(self, "signal_um", signal)
        object.__setattr__(self, "idler_um", idler)
        object.__setattr__(self, "amplitude", amp)
        _check_axis("signal", signal)
        _check_axis("idler", idler)
        if amp.shape != (signal.size, idler.size):
            raise ValueError(
                f"amplitude shape {amp.shape} does not match axes "
                f"({signal.size}, {idler.size})"
            )
        if self.normalized and abs(self.norm_squared() - 1.0) > _NORM_ATOL:
            raise ValueError(
                f"grid marked normalized but |f|^2 integrates to {self.norm_squared():.12g}"
            )

    @property
    def signal_step_um(self) -> float:
        return float(self.signal_um[1] - self.signal_um[0])

    @property
    def idler_step_um(self) -> float:
        return float(self.idler_um[1] - self.idler_um[0])

    def norm_squared(self) -> float:
        return float(
            np.sum(np.abs(self.amplitude) ** 2) * self.signal_step_um * self.idler_step_um
        )

    def normalize(self) -> "SpectralGrid":
        nrm = math.sqrt(self.norm_squared())
        if nrm == 0.0:
            raise ValueError("cannot normalize an all-zero grid")
        return SpectralGrid(self.signal_um, self.idler_um, self.amplitude / nrm, normalized=True)

    def transposed(self) -> "SpectralGrid":
        """Swap signal and idler roles."""
        return SpectralGrid(self.idler_um, self.signal_um, self.amplitude.T, self.normalized)


def jsa(config: SpdcConfig, pump: PumpSpec, grid_spec: GridSpec) -> SpectralGrid:
    """Normalized joint spectral amplitude on the requested grid."""
    sig = grid_spec.signal_axis()
    idl = grid_spec.idler_axis()
    ls = sig[:, None]
    li = idl[None, :]
    pef = pump_envelope(ls, li, pump)
    pmf = phase_matching_amplitude(ls, li, config)
    raw = SpectralGrid(sig, idl, (pef * pmf).astype(complex))
    return raw.normalize()


@dataclass(frozen=True)
class SchmidtResult:
    """Schmidt coefficients (descending, summing to 1), purity, mode number."""

    coefficients: np.ndarray
    purity: float
    schmidt_number: float


def schmidt(grid: SpectralGrid) -> SchmidtResult:
    """Schmidt decomposition of the gridded amplitude via SVD."""
    total = np.sum(np.abs(grid.amplitude) ** 2)
    if total == 0.0:
        raise ValueError("cannot decompose an all-zero grid")
    s = np.linalg.svd(grid.amplitude, compute_uv=False)
    coeffs = s * s
    coeffs = coeffs / np.sum(coeffs)
    purity = float(np.sum(coeffs**2))
    return SchmidtResult(coefficients=coeffs, purity=purity, schmidt_number=1.0 / purity)


def marginals(grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    """Signal and idler intensity spectra, each integrating to 1."""
    jsi = np.abs(grid.amplitude) ** 2
    signal = jsi.sum(axis=1) * grid.idler_step_um
    idler = jsi.sum(axis=0) * grid.signal_step_um
    return signal, idler


def marginal_width_um(axis_um: np.ndarray, spectrum) -> float:
    """RMS width of an intensity spectrum along its axis."""
    w = np.asarray(spectrum, dtype=float)
    total = np.sum(w)
    mean = np.sum(w * axis_um) / total
    var = np.sum(w * (axis_um - mean) ** 2) / total
    return float(math.sqrt(max(var, 0.0)))


# ---------------------------------------------------------------------------
# automatic grid sizing
# ---------------------------------------------------------------------------


def _halfwidth_to_threshold(f, center: float, step0: float, cap: float, threshold_hit) -> Optional[float]:
    """Distance from ``center`` at which ``threshold_hit(f(x))`` first holds.

    Walks outward symmetrically (worst side wins), doubling the step, then
    bisects. Returns None when the cap is reached first.
    """

    def one_side(direction: float) -> Optional[float]:
        lo, hi = 0.0, step0
        while hi <= cap:
            v = f(center + direction * hi)
            if math.isnan(v):
                return None  # left the dispersion range before any threshold
            if threshold_hit(v):
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    vm = f(center + direction * mid)
                    if not math.isnan(vm) and threshold_hit(vm):
                        hi = mid
                    else:
                        lo = mid
                return 0.5 * (lo + hi)
            lo, hi = hi, hi * 2.0
        return None

    sides = [one_side(+1.0), one_side(-1.0)]
    found = [s for s in sides if s is not None]
    if not found:
        return None
    return max(found)


def auto_grid(
    config: SpdcConfig,
    pump: PumpSpec,
    n_signal: int = 201,
    n_idler: int = 201,
    halfspan_factor: float = 4.0,
) -> GridSpec:
    """Grid centered on the operating point, sized from 1-D width scans.

    The half-span per axis is ``halfspan_factor`` times the larger of the
    pump-envelope 1/e half-width and the distance to the first
    phase-matching zero along that axis; spans are clipped to the dispersion
    validity range (with a warning) when necessary.
    """
    ls0, li0 = config.lambda_s_um, config.lambda_i_um
    crystal = config.crystal
    lo_um, hi_um = crystal.shared_range_um()
    margin = 2.0e-3

    def axis_halfspan(center: float, other: float, signal_axis: bool) -> float:
        cap = 0.45 * center  # keep scans physical (never down to zero/negative)

        def pef(x):
            args = (x, other) if signal_axis else (other, x)
            return float(pump_envelope(args[0], args[1], pump))

        def pm_phase(x):
            args = (x, other) if signal_axis else (other, x)
            ls, li = args
            lp = 1.0 / (1.0 / ls + 1.0 / li)
            try:
                dk = float(phase_mismatch(crystal, lp, ls, li, config.phi_deg))
            except DispersionRangeError:
                return math.nan
            return abs(dk) * config.length_mm * 1000.0 / 2.0

        w_pump = _halfwidth_to_threshold(
            pef, center, 1e-5, cap, lambda v: v < math.exp(-0.5)
        )
        w_pm = _halfwidth_to_threshold(
            pm_phase, center, 1e-5, cap, lambda v: v >= math.pi
        )
        if w_pump is None and w_pm is None:
            raise ValueError("could not estimate any spectral width for the grid")
        if w_pump is not None and w_pm is not None:
            # a phase-matching lobe much wider than the pump envelope never
            # carries amplitude: the product has decayed to e^-8 by 4 pump
            # widths, so wider sinc zeros must not dilute the grid
            w_pm = min(w_pm, 4.0 * w_pump)
        widths = [w for w in (w_pump, w_pm) if w is not None]
        return halfspan_factor * max(widths)

    hs = axis_halfspan(ls0, li0, signal_axis=True)
    hi = axis_halfspan(li0, ls0, signal_axis=False)

    def clip_halfspan(center, halfspan, label):
        # symmetric clip keeps the operating point at the exact grid center;
        # the extra epsilon keeps rounded grid endpoints strictly inside
        allowed = min(
            halfspan,
            center - (lo_um + margin) - 1e-9,
            (hi_um - margin) - center - 1e-9,
        )
        if allowed <= 0:
            raise ValueError(f"{label} center {center:.4g} um too close to dispersion edge")
        if allowed < halfspan:
            warnings.warn(
                f"{label} half-span clipped from {halfspan:.4g} to {allowed:.4g} um "
                "by the dispersion validity range",
                stacklevel=3,
            )
        return allowed

    hs = clip_halfspan(ls0, hs, "signal")
    hi = clip_halfspan(li0, hi, "idler")
    return GridSpec(ls0 - hs, ls0 + hs, li0 - hi, li0 + hi, n_signal, n_idler)
