"""Text file formats for grids, interference curves, and field maps.

All files are plain text with `#`-prefixed header lines carrying units and
the manifest hash, so they stay diff-able and loadable from any plotting
stack. Wavelengths are written in nanometers, delays in femtoseconds;
amplitudes are rescaled so the discrete L2 normalization holds in the file's
own units. Every artifact gets a JSON manifest sidecar; the hash embedded in
the data file covers the manifest minus its timestamp, which keeps repeated
runs byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from kdpiso import __version__
from kdpiso.hom import HomCurve
from kdpiso.spectral import SpectralGrid

_FLOAT = "%.17g"


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


def build_manifest(command: str, parameters: Mapping, database_version: str,
                   database_sha256: str) -> dict:
    return {
        "tool": "kdpiso",
        "version": __version__,
        "command": command,
        "parameters": dict(parameters),
        "database_version": database_version,
        "database_sha256": database_sha256,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def manifest_hash(manifest: Mapping) -> str:
    """SHA-256 over the canonical manifest, timestamp excluded.

    Excluding the timestamp keeps data files byte-identical across re-runs
    of the same command against the same database.
    """
    stable = {k: v for k, v in manifest.items() if k != "created_utc"}
    return hashlib.sha256(
        json.dumps(stable, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def write_manifest(path: Union[str, Path], manifest: Mapping) -> Path:
    p = Path(str(path) + ".manifest.json")
    p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return p


# ---------------------------------------------------------------------------
# grid files
# ---------------------------------------------------------------------------


def write_grid(path: Union[str, Path], grid: SpectralGrid,
               metadata: Optional[Mapping] = None,
               manifest_sha256: str = "") -> None:
    """Write a spectral grid: header, idler axis, one row per signal node."""
    p = Path(path)
    signal_nm = grid.signal_um * 1000.0
    idler_nm = grid.idler_um * 1000.0
    amp_per_nm = grid.amplitude / 1000.0  # 1/um -> 1/nm with nm axes

    lines = ["# kdpiso jsa grid v1"]
    lines.append("# units: wavelength=nm amplitude=1/nm")
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"# normalized: {'true' if grid.normalized else 'false'}")
    lines.append(f"# signal_nodes: {signal_nm.size}")
    lines.append(f"# idler_nodes: {idler_nm.size}")
    if manifest_sha256:
        lines.append(f"# manifest_sha256: {manifest_sha256}")
    lines.append("# idler_nm: " + " ".join(_FLOAT % v for v in idler_nm))
    lines.append("# columns: signal_nm then re,im amplitude pairs per idler node")

    with p.open("w") as fh:
        fh.write("\n".join(lines) + "\n")
        for j in range(signal_nm.size):
            row = [signal_nm[j]]
            for k in range(idler_nm.size):
                a = amp_per_nm[j, k]
                row.append(a.real)
                row.append(a.imag)
            fh.write(" ".join(_FLOAT % v for v in row) + "\n")


def _read_headers(path: Path) -> dict:
    headers = {}
    with path.open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                headers[key.strip()] = value.strip()
    return headers


def read_grid(path: Union[str, Path]) -> tuple[SpectralGrid, dict]:
    """Read a grid file back into micrometer units; returns (grid, headers)."""
    p = Path(path)
    headers = _read_headers(p)
    if "idler_nm" not in headers:
        raise ValueError(f"{p}: missing idler_nm header")
    if headers.get("units", "") != "wavelength=nm amplitude=1/nm":
        raise ValueError(f"{p}: missing or unsupported units header")
    idler_nm = np.array([float(v) for v in headers["idler_nm"].split()])
    data = np.loadtxt(p, ndmin=2)
    signal_nm = data[:, 0]
    expected = 1 + 2 * idler_nm.size
    if data.shape[1] != expected:
        raise ValueError(
            f"{p}: row width {data.shape[1]} does not match idler axis "
            f"({expected} columns expected)"
        )
    amp_per_nm = data[:, 1::2] + 1j * data[:, 2::2]
    normalized = headers.get("normalized", "false") == "true"
    grid = SpectralGrid(
        signal_um=signal_nm / 1000.0,
        idler_um=idler_nm / 1000.0,
        amplitude=amp_per_nm * 1000.0,
        normalized=normalized,
    )
    return grid, headers


# ---------------------------------------------------------------------------
# curve files
# ---------------------------------------------------------------------------


def write_curve(path: Union[str, Path], curve: HomCurve,
                metadata: Optional[Mapping] = None,
                manifest_sha256: str = "") -> None:
    p = Path(path)
    lines = ["# kdpiso hom curve v1", "# units: delay=fs probability=1"]
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"# baseline: {_FLOAT % curve.baseline}")
    lines.append(f"# visibility: {_FLOAT % curve.visibility}")
    if manifest_sha256:
        lines.append(f"# manifest_sha256: {manifest_sha256}")
    lines.append("# columns: delay_fs probability")
    with p.open("w") as fh:
        fh.write("\n".join(lines) + "\n")
        for tau, prob in zip(curve.delays_s, curve.probability):
            fh.write((_FLOAT + " " + _FLOAT + "\n") % (tau * 1e15, prob))


def read_curve(path: Union[str, Path]) -> tuple[HomCurve, dict]:
    p = Path(path)
    headers = _read_headers(p)
    if headers.get("units", "") != "delay=fs probability=1":
        raise ValueError(f"{p}: missing or unsupported units header")
    data = np.loadtxt(p, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{p}: expected two columns (delay_fs, probability)")
    curve = HomCurve(
        delays_s=data[:, 0] * 1e-15,
        probability=data[:, 1],
        baseline=float(headers.get("baseline", "nan")),
        visibility=float(headers.get("visibility", "nan")),
    )
    return curve, headers


# ---------------------------------------------------------------------------
# field files (phase-matching / GVM maps)
# ---------------------------------------------------------------------------


def write_field(path: Union[str, Path], field, crossings=None,
                metadata: Optional[Mapping] = None,
                manifest_sha256: str = "") -> None:
    """Write a PmGvmField; rows are lambda-major over the (lambda, phi) grid.

    ``crossings`` is an optional list of (label, lambda_um, phi_deg) tuples
    from the degenerate solver, recorded in the header for plot annotation.
    """
    p = Path(path)
    lines = ["# kdpiso pm-gvm field v1"]
    lines.append("# units: wavelength=nm angle=deg delta_k=rad/um gvm=s/m")
    lines.append(f"# crystal: {field.crystal.id.value}")
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"# lambda_nodes: {field.lambda_um.size}")
    lines.append(f"# phi_nodes: {field.phi_deg.size}")
    if crossings:
        rendered = " ; ".join(
            f"{label} {_FLOAT % (lam * 1000.0)} {_FLOAT % phi}"
            for label, lam, phi in crossings
        )
        lines.append(f"# crossings: {rendered}")
    if manifest_sha256:
        lines.append(f"# manifest_sha256: {manifest_sha256}")
    lines.append("# columns: lambda_nm phi_deg delta_k gvm1 gvm2 gvm3")
    with p.open("w") as fh:
        fh.write("\n".join(lines) + "\n")
        for i, lam in enumerate(field.lambda_um):
            for j, phi in enumerate(field.phi_deg):
                fh.write(
                    " ".join(
                        _FLOAT % v
                        for v in (
                            lam * 1000.0,
                            phi,
                            field.delta_k[i, j],
                            field.gvm1[i, j],
                            field.gvm2[i, j],
                            field.gvm3[i, j],
                        )
                    )
                    + "\n"
                )


def read_field(path: Union[str, Path]) -> tuple[dict, dict]:
    """Read a field file; returns (arrays dict, headers dict)."""
    p = Path(path)
    headers = _read_headers(p)
    n_lam = int(headers.get("lambda_nodes", 0))
    n_phi = int(headers.get("phi_nodes", 0))
    data = np.loadtxt(p, ndmin=2)
    if n_lam * n_phi != data.shape[0] or data.shape[1] != 6:
        raise ValueError(f"{p}: field shape mismatch")
    arrays = {
        "lambda_nm": data[:, 0].reshape(n_lam, n_phi)[:, 0],
        "phi_deg": data[:, 1].reshape(n_lam, n_phi)[0, :],
        "delta_k": data[:, 2].reshape(n_lam, n_phi),
        "gvm1": data[:, 3].reshape(n_lam, n_phi),
        "gvm2": data[:, 4].reshape(n_lam, n_phi),
        "gvm3": data[:, 5].reshape(n_lam, n_phi),
    }
    return arrays, headers
