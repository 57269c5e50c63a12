"""Dispersion database for the KDP crystal family.

Fourteen isomorphs of KH2PO4 (point group 4-bar 2m, negative uniaxial) are
described by Sellmeier coefficient sets for the ordinary and the principal
extraordinary index. All wavelengths are in micrometers; propagation angles
are measured from the optic axis in degrees.

Three Sellmeier functional forms are registered:

    uv-ir:     n^2 = A + B/(L - C) + D*L/(L - E)        (L = lambda^2)
    two-pole:  n^2 = A + B/(L - C) + D/(L - E)
    rational:  n^2 = A + sum_j (B_j + C_j*L)/(L - D_j)   (up to 3 terms)

Every form is reduced internally to the rational representation, for which
the wavelength derivative is analytic:

    d(n^2)/dlambda = sum_j -2*lambda*(B_j + C_j*D_j)/(L - D_j)^2
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import yaml

from kdpiso.errors import (
    DatabaseParseError,
    DatabaseValidationError,
    DispersionRangeError,
    MissingDispersionError,
)

#: Speed of light in vacuum, m/s.
C_M_PER_S = 299_792_458.0

#: Safety margin kept clear of the validity-range edges when differentiating,
#: matched to the width of the finite-difference stencil used in tests (um).
DERIVATIVE_EDGE_MARGIN_UM = 2.0e-4

FLAG_NO_DISPERSION_DATA = "no_dispersion_data"
FLAG_NO_GVM_SOLUTION = "no_gvm_solution"
_KNOWN_FLAGS = {FLAG_NO_DISPERSION_DATA, FLAG_NO_GVM_SOLUTION}


class CrystalId(str, Enum):
    """The fourteen members of the KDP family."""

    KDP = "KDP"
    DKDP = "DKDP"
    ADP = "ADP"
    DADP = "DADP"
    ADA = "ADA"
    DADA = "DADA"
    RDA = "RDA"
    DRDA = "DRDA"
    RDP = "RDP"
    DRDP = "DRDP"
    KDA = "KDA"
    DKDA = "DKDA"
    CDA = "CDA"
    DCDA = "DCDA"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: Crystals whose Sellmeier data has never been published.
_REQUIRED_NO_DISPERSION = {CrystalId.DKDA}
#: Crystals that do not admit a simultaneous phase-matching + GVM solution.
_REQUIRED_NO_GVM = {CrystalId.CDA, CrystalId.DCDA}

_FORMS = ("uv-ir", "two-pole", "rational")


def _canonical_terms(form: str, coeffs: Sequence[float]) -> tuple[float, tuple[tuple[float, float, float], ...]]:
    """Reduce a registered form to (A, ((B, C, D), ...)) rational terms."""
    c = [float(x) for x in coeffs]
    if form == "uv-ir":
        if len(c) != 5:
            raise DatabaseValidationError(f"form 'uv-ir' needs 5 coefficients, got {len(c)}")
        a, b, cc, d, e = c
        return a, ((b, 0.0, cc), (0.0, d, e))
    if form == "two-pole":
        if len(c) != 5:
            raise DatabaseValidationError(f"form 'two-pole' needs 5 coefficients, got {len(c)}")
        a, b, cc, d, e = c
        return a, ((b, 0.0, cc), (d, 0.0, e))
    if form == "rational":
        if len(c) < 4 or (len(c) - 1) % 3 != 0 or (len(c) - 1) // 3 > 3:
            raise DatabaseValidationError(
                "form 'rational' needs 1 + 3*k coefficients with 1 <= k <= 3, "
                f"got {len(c)}"
            )
        a = c[0]
        terms = tuple((c[i], c[i + 1], c[i + 2]) for i in range(1, len(c), 3))
        return a, terms
    raise DatabaseValidationError(f"unknown Sellmeier form {form!r}")


@dataclass(frozen=True)
class SellmeierEntry:
    """One Sellmeier coefficient set with its validity range and provenance.

    Parameters
    ----------
    polarization:
        "o" for the ordinary index, "e" for the principal extraordinary index.
    form:
        One of the registered functional forms.
    coefficients:
        Coefficients in the order defined by ``form`` (micrometer units).
    range_um:
        Validity range ``(lambda_min, lambda_max)`` in micrometers.
    source:
        Free-text citation for the coefficient set.
    """

    polarization: str
    form: str
    coefficients: tuple[float, ...]
    range_um: tuple[float, float]
    source: str = ""
    _a: float = field(init=False, repr=False, compare=False, default=0.0)
    _terms: tuple[tuple[float, float, float], ...] = field(
        init=False, repr=False, compare=False, default=()
    )

    def __post_init__(self) -> None:
        if self.polarization not in ("o", "e"):
            raise DatabaseValidationError(
                f"polarization must be 'o' or 'e', got {self.polarization!r}"
            )
        lo, hi = self.range_um
        if not (0.0 < lo < hi):
            raise DatabaseValidationError(
                f"invalid validity range [{lo}, {hi}] (need 0 < min < max)"
            )
        a, terms = _canonical_terms(self.form, self.coefficients)
        object.__setattr__(self, "coefficients", tuple(float(x) for x in self.coefficients))
        object.__setattr__(self, "range_um", (float(lo), float(hi)))
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_terms", terms)

    # -- evaluation -------------------------------------------------------

    def contains(self, lam_um) -> bool:
        lo, hi = self.range_um
        return bool(np.all((lam_um >= lo) & (lam_um <= hi)))

    def n_squared(self, lam_um):
        """n^2 at wavelength(s) ``lam_um``; no range checking."""
        l2 = lam_um * lam_um
        out = self._a
        for b, c, d in self._terms:
            out = out + (b + c * l2) / (l2 - d)
        return out

    def dn_squared_dlam(self, lam_um):
        """d(n^2)/dlambda, analytic, in 1/um."""
        l2 = lam_um * lam_um
        out = 0.0
        for b, c, d in self._terms:
            out = out - 2.0 * lam_um * (b + c * d) / (l2 - d) ** 2
        return out

    def index(self, lam_um):
        """Refractive index; raises if outside the validity range."""
        self._check_range(lam_um)
        return np.sqrt(self.n_squared(lam_um))

    def dindex_dlam(self, lam_um):
        """dn/dlambda in 1/um; requires an interior wavelength."""
        self._check_range(lam_um, margin=DERIVATIVE_EDGE_MARGIN_UM)
        return self.dn_squared_dlam(lam_um) / (2.0 * np.sqrt(self.n_squared(lam_um)))

    def group_index(self, lam_um):
        """Group index n - lambda * dn/dlambda (dimensionless)."""
        return self.index(lam_um) - lam_um * self.dindex_dlam(lam_um)

    def _check_range(self, lam_um, margin: float = 0.0) -> None:
        lo, hi = self.range_um
        lo, hi = lo + margin, hi - margin
        if not np.all((lam_um >= lo) & (lam_um <= hi)):
            raise DispersionRangeError(
                f"wavelength outside validity range [{lo:.4g}, {hi:.4g}] um "
                f"for polarization {self.polarization!r}"
            )


@dataclass(frozen=True)
class CrystalRecord:
    """One crystal of the family: identity, flags, and dispersion data.

    ``d_eff_pm_per_v`` is optional metadata (effective nonlinearity per GVM
    operating point, from external software); it takes no part in any
    computation here.
    """

    id: CrystalId
    formula: str = ""
    flags: frozenset[str] = frozenset()
    ordinary: Optional[SellmeierEntry] = None
    extraordinary: Optional[SellmeierEntry] = None
    d_eff_pm_per_v: Mapping[str, float] = field(default_factory=dict)

    @property
    def has_dispersion(self) -> bool:
        return self.ordinary is not None and self.extraordinary is not None

    @property
    def gvm_candidate(self) -> bool:
        """True when the crystal is worth searching for GVM solutions."""
        return self.has_dispersion and FLAG_NO_GVM_SOLUTION not in self.flags

    def shared_range_um(self) -> tuple[float, float]:
        """Intersection of the o and e validity ranges."""
        self._require_dispersion()
        lo = max(self.ordinary.range_um[0], self.extraordinary.range_um[0])
        hi = min(self.ordinary.range_um[1], self.extraordinary.range_um[1])
        return lo, hi

    # -- refractive indices -------------------------------------------------

    def index_o(self, lam_um):
        """Ordinary refractive index n_o(lambda)."""
        self._require_dispersion()
        return self.ordinary.index(lam_um)

    def index_e(self, lam_um, phi_deg):
        """Extraordinary index n_e(lambda, phi) for propagation at angle phi.

        phi is the angle between the optic axis and the propagation
        direction; the standard uniaxial index ellipsoid applies:

            1/n^2(phi) = cos^2(phi)/n_o^2 + sin^2(phi)/n_e^2
        """
        self._require_dispersion()
        if not np.all((np.asarray(phi_deg) >= 0.0) & (np.asarray(phi_deg) <= 90.0)):
            raise ValueError(f"angle {phi_deg!r} outside [0, 90] degrees")
        no2 = self.ordinary.n_squared(lam_um)
        ne2 = self.extraordinary.n_squared(lam_um)
        self.ordinary._check_range(lam_um)
        self.extraordinary._check_range(lam_um)
        phi = np.radians(phi_deg)
        s2 = np.sin(phi) ** 2
        return 1.0 / np.sqrt((1.0 - s2) / no2 + s2 / ne2)

    def dindex_e_dlam(self, lam_um, phi_deg):
        """d n_e(lambda, phi) / d lambda at fixed phi, in 1/um."""
        self._require_dispersion()
        n = self.index_e(lam_um, phi_deg)
        self.ordinary._check_range(lam_um, margin=DERIVATIVE_EDGE_MARGIN_UM)
        self.extraordinary._check_range(lam_um, margin=DERIVATIVE_EDGE_MARGIN_UM)
        no2 = self.ordinary.n_squared(lam_um)
        ne2 = self.extraordinary.n_squared(lam_um)
        phi = np.radians(phi_deg)
        s2 = np.sin(phi) ** 2
        # n = f^(-1/2) with f = cos^2/no^2 + sin^2/ne^2:
        # dn/dl = n^3/2 * [cos^2 * d(no^2)/dl / no^4 + sin^2 * d(ne^2)/dl / ne^4]
        dno2 = self.ordinary.dn_squared_dlam(lam_um)
        dne2 = self.extraordinary.dn_squared_dlam(lam_um)
        return 0.5 * n**3 * ((1.0 - s2) * dno2 / no2**2 + s2 * dne2 / ne2**2)

    def inverse_group_velocity(self, polarization: str, lam_um, phi_deg=None):
        """Inverse group velocity k'(omega) = n_g / c in seconds per meter.

        For the ordinary ray ``phi_deg`` is ignored; for the extraordinary
        ray the angle is held fixed while differentiating.
        """
        self._require_dispersion()
        if polarization == "o":
            ng = self.ordinary.group_index(lam_um)
        elif polarization == "e":
            if phi_deg is None:
                raise ValueError("extraordinary ray needs a propagation angle")
            ng = self.index_e(lam_um, phi_deg) - lam_um * self.dindex_e_dlam(lam_um, phi_deg)
        else:
            raise ValueError(f"polarization must be 'o' or 'e', got {polarization!r}")
        return ng / C_M_PER_S

    def _require_dispersion(self) -> None:
        if not self.has_dispersion:
            raise MissingDispersionError(
                f"{self.id.value}: no usable Sellmeier data ({FLAG_NO_DISPERSION_DATA})"
            )


class CrystalDatabase:
    """Immutable collection of validated :class:`CrystalRecord` objects."""

    def __init__(self, records: Iterable[CrystalRecord], version: str = "unversioned"):
        self._records = {r.id: r for r in records}
        self.version = version
        _validate_collection(self._records)

    def __iter__(self):
        return iter(sorted(self._records.values(), key=lambda r: list(CrystalId).index(r.id)))

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key) -> bool:
        try:
            self._coerce(key)
            return True
        except KeyError:
            return False

    def get(self, key: Union[str, CrystalId]) -> CrystalRecord:
        return self._records[self._coerce(key)]

    def _coerce(self, key) -> CrystalId:
        if isinstance(key, CrystalId):
            return key
        try:
            return CrystalId(str(key).upper())
        except ValueError:
            raise KeyError(f"unknown crystal {key!r}") from None

    def content_hash(self) -> str:
        """SHA-256 over the canonical serialized content (for manifests)."""
        return hashlib.sha256(dump_database(self).encode()).hexdigest()


# ---------------------------------------------------------------------------
# loading / validation / serialization
# ---------------------------------------------------------------------------


def _parse_entry(crystal: str, pol: str, node: Mapping) -> SellmeierEntry:
    where = f"{crystal}.{'ordinary' if pol == 'o' else 'extraordinary'}"
    try:
        form = node["form"]
        coeffs = node["coefficients"]
        rng = node["range_um"]
        source = node.get("source", "")
    except (KeyError, TypeError) as exc:
        raise DatabaseParseError(f"{where}: missing field {exc}") from exc
    if not isinstance(rng, (list, tuple)) or len(rng) != 2:
        raise DatabaseValidationError(f"{where}: range_um must be [min, max]")
    lo, hi = float(rng[0]), float(rng[1])
    if not lo < hi:
        raise DatabaseValidationError(
            f"{where}: inverted validity range [{lo}, {hi}]"
        )
    try:
        entry = SellmeierEntry(
            polarization=pol,
            form=str(form),
            coefficients=tuple(float(x) for x in coeffs),
            range_um=(lo, hi),
            source=str(source),
        )
    except DatabaseValidationError as exc:
        raise DatabaseValidationError(f"{where}: {exc}") from exc
    _validate_entry(where, entry)
    return entry


def _validate_entry(where: str, entry: SellmeierEntry, samples: int = 257) -> None:
    lam = np.linspace(entry.range_um[0], entry.range_um[1], samples)
    n2 = entry.n_squared(lam)
    if not np.all(np.isfinite(n2)):
        raise DatabaseValidationError(f"{where}: n^2 not finite on validity range")
    if not np.all(n2 > 1.0):
        bad = lam[np.argmin(n2)]
        raise DatabaseValidationError(
            f"{where}: n^2 <= 1 at {bad:.4g} um (min {np.min(n2):.4g})"
        )


def _validate_collection(records: Mapping[CrystalId, CrystalRecord]) -> None:
    present = set(records)
    expected = set(CrystalId)
    if present != expected:
        missing = sorted(c.value for c in expected - present)
        extra = sorted(c.value for c in present - expected)
        raise DatabaseValidationError(
            f"database must contain exactly the 14 family members; "
            f"missing={missing} extra={extra}"
        )
    for cid in _REQUIRED_NO_DISPERSION:
        if FLAG_NO_DISPERSION_DATA not in records[cid].flags:
            raise DatabaseValidationError(
                f"{cid.value}: must be flagged {FLAG_NO_DISPERSION_DATA}"
            )
    for cid in _REQUIRED_NO_GVM:
        if FLAG_NO_GVM_SOLUTION not in records[cid].flags:
            raise DatabaseValidationError(
                f"{cid.value}: must be flagged {FLAG_NO_GVM_SOLUTION}"
            )
    for rec in records.values():
        unknown = set(rec.flags) - _KNOWN_FLAGS
        if unknown:
            raise DatabaseValidationError(
                f"{rec.id.value}: unknown flags {sorted(unknown)}"
            )
        if FLAG_NO_DISPERSION_DATA in rec.flags:
            if rec.has_dispersion:
                raise DatabaseValidationError(
                    f"{rec.id.value}: flagged {FLAG_NO_DISPERSION_DATA} but carries data"
                )
            continue
        if not rec.has_dispersion:
            raise DatabaseValidationError(
                f"{rec.id.value}: missing Sellmeier data without "
                f"{FLAG_NO_DISPERSION_DATA} flag"
            )
        # negative uniaxial on the shared range
        lo, hi = rec.shared_range_um()
        lam = np.linspace(lo, hi, 257)
        no = np.sqrt(rec.ordinary.n_squared(lam))
        ne = np.sqrt(rec.extraordinary.n_squared(lam))
        if not np.all(no > ne):
            bad = lam[int(np.argmin(no - ne))]
            raise DatabaseValidationError(
                f"{rec.id.value}: not negative uniaxial at {bad:.4g} um "
                f"(n_o - n_e = {np.min(no - ne):.3g})"
            )


def _parse_record(name: str, node: Mapping) -> CrystalRecord:
    try:
        cid = CrystalId(name)
    except ValueError:
        raise DatabaseValidationError(f"unknown crystal name {name!r}") from None
    flags = frozenset(node.get("flags", ()) or ())
    ordinary = extraordinary = None
    if "ordinary" in node:
        ordinary = _parse_entry(name, "o", node["ordinary"])
    if "extraordinary" in node:
        extraordinary = _parse_entry(name, "e", node["extraordinary"])
    d_eff = {str(k): float(v) for k, v in (node.get("d_eff_pm_per_v") or {}).items()}
    return CrystalRecord(
        id=cid,
        formula=str(node.get("formula", "")),
        flags=flags,
        ordinary=ordinary,
        extraordinary=extraordinary,
        d_eff_pm_per_v=d_eff,
    )


def parse_database(text: str) -> CrystalDatabase:
    """Parse and validate a database from YAML text."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DatabaseParseError(f"malformed database file: {exc}") from exc
    if not isinstance(doc, Mapping) or "crystals" not in doc:
        raise DatabaseParseError("database file must contain a 'crystals' table")
    version = str(doc.get("version", "unversioned"))
    records = [_parse_record(name, node) for name, node in doc["crystals"].items()]
    return CrystalDatabase(records, version=version)


def load_database(path: Union[str, Path]) -> CrystalDatabase:
    """Load and validate the crystal database from ``path``."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"crystal database not found: {p}")
    return parse_database(p.read_text())


def dump_database(db: CrystalDatabase) -> str:
    """Serialize a database back to canonical YAML text."""

    def entry_node(e: SellmeierEntry) -> dict:
        return {
            "form": e.form,
            "coefficients": [float(x) for x in e.coefficients],
            "range_um": [float(e.range_um[0]), float(e.range_um[1])],
            "source": e.source,
        }

    crystals = {}
    for rec in db:
        node: dict = {"formula": rec.formula}
        if rec.flags:
            node["flags"] = sorted(rec.flags)
        if rec.ordinary is not None:
            node["ordinary"] = entry_node(rec.ordinary)
        if rec.extraordinary is not None:
            node["extraordinary"] = entry_node(rec.extraordinary)
        if rec.d_eff_pm_per_v:
            node["d_eff_pm_per_v"] = {k: float(v) for k, v in sorted(rec.d_eff_pm_per_v.items())}
        crystals[rec.id.value] = node
    return yaml.safe_dump(
        {"version": db.version, "crystals": crystals},
        sort_keys=False,
        default_flow_style=None,
        width=100,
    )


#: Environment variable that overrides the bundled database asset.
DATABASE_ENV_VAR = "KDPISO_CRYSTAL_DB"

_default_db: Optional[CrystalDatabase] = None


def default_database_path() -> Path:
    override = os.environ.get(DATABASE_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).parent / "data" / "crystals.yaml"


def default_database(refresh: bool = False) -> CrystalDatabase:
    """The bundled database (or the env-var override), cached."""
    global _default_db
    if refresh or _default_db is None:
        _default_db = load_database(default_database_path())
    return _default_db
