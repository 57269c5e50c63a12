"""Command-line front end.

Subcommands: crystals, gvm, jsa, purity, hom, map. Wavelengths are given in
nanometers, crystal lengths in millimeters, angles in degrees; file outputs
carry their units in `#` headers and get a JSON manifest sidecar.

Exit codes: 0 on success, 1 when a demanded computation has no solution,
2 on input or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from kdpiso import __version__
from kdpiso.crystals import (
    DATABASE_ENV_VAR,
    CrystalDatabase,
    FLAG_NO_DISPERSION_DATA,
    load_database,
    default_database_path,
)
from kdpiso.errors import KdpisoError, NoPhaseMatchingError
from kdpiso.fileio import (
    build_manifest,
    manifest_hash,
    read_curve,
    read_grid,
    write_curve,
    write_field,
    write_grid,
    write_manifest,
)
from kdpiso.hom import default_delays, hom_fourfold, resample_signal_axis
from kdpiso.phasematch import (
    GvmType,
    SpdcConfig,
    orientation_distance,
    pmf_gvm_map,
    solve_angle,
    solve_gvm_degenerate,
    solve_gvm_nondegenerate,
)
from kdpiso.spectral import PumpSpec, auto_grid, jsa, schmidt

NOT_SATISFIED = "not satisfied"


def _fold_display_angle(theta_deg: float) -> float:
    """Fold a ridge orientation into (-90, 90] for compact table display."""
    if math.isnan(theta_deg):
        return theta_deg
    return ((theta_deg + 90.0) % 180.0) - 90.0


def _solution_row(sol) -> dict:
    cfg = sol.config
    return {
        "crystal": cfg.crystal.id.value,
        "gvm": sol.gvm_type.value,
        "lambda_p_nm": cfg.lambda_p_um * 1e3,
        "lambda_s_nm": cfg.lambda_s_um * 1e3,
        "lambda_i_nm": cfg.lambda_i_um * 1e3,
        "phi_deg": cfg.phi_deg,
        "theta_deg": _fold_display_angle(sol.ridge_angle_deg),
        "residual_delta_k_rad_per_um": sol.residual_delta_k,
        "residual_gvm_s_per_m": sol.residual_gvm,
    }


def _print_gvm_rows(rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(rows, indent=2))
        return
    header = (
        f"{'crystal':8s} {'gvm':5s} {'pump/nm':>9s} {'signal/nm':>10s} "
        f"{'idler/nm':>10s} {'phi/deg':>8s} {'theta/deg':>9s} "
        f"{'|dk|':>9s} {'|gvm|':>9s}"
    )
    print(header)
    for r in rows:
        if r.get("status") == NOT_SATISFIED:
            print(f"{r['crystal']:8s} {r['gvm']:5s} {NOT_SATISFIED}")
        elif r.get("status"):
            print(f"{r['crystal']:8s} {r['gvm']:5s} {r['status']}")
        else:
            print(
                f"{r['crystal']:8s} {r['gvm']:5s} {r['lambda_p_nm']:9.1f} "
                f"{r['lambda_s_nm']:10.1f} {r['lambda_i_nm']:10.1f} "
                f"{r['phi_deg']:8.2f} {r['theta_deg']:9.2f} "
                f"{abs(r['residual_delta_k_rad_per_um']):9.2e} "
                f"{abs(r['residual_gvm_s_per_m']):9.2e}"
            )


def _load_db(args) -> CrystalDatabase:
    path = Path(args.database) if args.database else default_database_path()
    return load_database(path)


def _db_manifest_fields(db: CrystalDatabase) -> tuple[str, str]:
    return db.version, db.content_hash()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_crystals(args) -> int:
    db = _load_db(args)
    rows = []
    for rec in db:
        row = {
            "name": rec.id.value,
            "formula": rec.formula,
            "flags": sorted(rec.flags),
        }
        if rec.has_dispersion:
            lo, hi = rec.shared_range_um()
            row["range_nm"] = [lo * 1e3, hi * 1e3]
        if rec.d_eff_pm_per_v:
            row["d_eff_pm_per_v"] = dict(rec.d_eff_pm_per_v)
        rows.append(row)
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'name':6s} {'formula':12s} {'valid range/nm':>18s}  flags")
        for row in rows:
            rng = (
                f"{row['range_nm'][0]:7.1f} - {row['range_nm'][1]:7.1f}"
                if "range_nm" in row
                else f"{'-':>17s}"
            )
            flags = ", ".join(row["flags"]) if row["flags"] else "-"
            print(f"{row['name']:6s} {row['formula']:12s} {rng:>18s}  {flags}")
    return 0


def cmd_gvm(args) -> int:
    db = _load_db(args)
    if args.degenerate == (args.pump is not None):
        print("error: choose exactly one of --degenerate or --pump", file=sys.stderr)
        return 2
    names = [c.id.value for c in db] if args.all else [args.crystal]
    if names == [None]:
        print("error: provide --crystal NAME or --all", file=sys.stderr)
        return 2
    types = [GvmType(args.type)] if args.type else list(GvmType)

    rows = []
    for name in names:
        rec = db.get(name)
        if not rec.has_dispersion:
            for gvm in types if args.degenerate else [GvmType.GVM1]:
                rows.append({"crystal": rec.id.value, "gvm": gvm.value,
                             "status": FLAG_NO_DISPERSION_DATA})
            continue
        if args.degenerate:
            for gvm in types:
                sols = solve_gvm_degenerate(rec, gvm, length_mm=args.length)
                if not sols:
                    rows.append({"crystal": rec.id.value, "gvm": gvm.value,
                                 "status": NOT_SATISFIED})
                for sol in sols:
                    rows.append(_solution_row(sol))
        else:
            sols = solve_gvm_nondegenerate(rec, args.pump * 1e-3, length_mm=args.length)
            if not sols:
                rows.append({"crystal": rec.id.value, "gvm": GvmType.GVM1.value,
                             "status": NOT_SATISFIED})
            for sol in sols:
                rows.append(_solution_row(sol))
    # "not satisfied" rows are an answer, not a failure: exit 0 either way
    _print_gvm_rows(rows, args.format)
    return 0


def cmd_jsa(args) -> int:
    db = _load_db(args)
    rec = db.get(args.crystal)
    lp = args.pump * 1e-3
    ls = args.signal * 1e-3 if args.signal else 2.0 * lp
    try:
        if args.angle is None:
            li = 1.0 / (1.0 / lp - 1.0 / ls)
            phi = solve_angle(rec, lp, ls, li)
        else:
            phi = args.angle
    except NoPhaseMatchingError as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return 1
    config = SpdcConfig.from_signal(rec, lp, ls, phi, args.length)
    pump = PumpSpec(lp, args.bandwidth * 1e-3)
    spec = auto_grid(config, pump, n_signal=args.nodes, n_idler=args.nodes,
                     halfspan_factor=args.span_factor)
    grid = jsa(config, pump, spec)
    result = schmidt(grid)
    print(f"purity P = {result.purity:.6f}")
    print(f"schmidt number K = {result.schmidt_number:.6f}")

    if args.output:
        manifest = build_manifest(
            "jsa",
            {
                "crystal": rec.id.value,
                "pump_nm": args.pump,
                "signal_nm": args.signal,
                "bandwidth_nm": args.bandwidth,
                "length_mm": args.length,
                "angle_deg": args.angle,
                "nodes": args.nodes,
                "span_factor": args.span_factor,
            },
            *_db_manifest_fields(db),
        )
        metadata = {
            "crystal": rec.id.value,
            "pump_nm": "%.17g" % (config.lambda_p_um * 1e3),
            "bandwidth_nm": "%.17g" % args.bandwidth,
            "length_mm": "%.17g" % args.length,
            "phi_deg": "%.17g" % config.phi_deg,
            "purity": "%.17g" % result.purity,
            "schmidt_number": "%.17g" % result.schmidt_number,
        }
        write_grid(args.output, grid, metadata=metadata,
                   manifest_sha256=manifest_hash(manifest))
        write_manifest(args.output, manifest)
        print(f"grid written to {args.output}")
    return 0


def cmd_purity(args) -> int:
    grid, _headers = read_grid(args.gridfile)
    if not grid.normalized:
        grid = grid.normalize()
    result = schmidt(grid)
    coeffs = result.coefficients[:10]
    if args.format == "json":
        print(json.dumps({
            "purity": result.purity,
            "schmidt_number": result.schmidt_number,
            "coefficients_top10": [float(c) for c in coeffs],
            "coefficients_sum": float(np.sum(result.coefficients)),
        }, indent=2))
    else:
        print(f"purity P = {result.purity:.12f}")
        print(f"schmidt number K = {result.schmidt_number:.12f}")
        print("largest Schmidt coefficients:")
        for k, c in enumerate(coeffs):
            print(f"  {k + 1:2d}: {c:.12f}")
        print(f"coefficient sum = {np.sum(result.coefficients):.12f}")
    return 0


def cmd_hom(args) -> int:
    db = _load_db(args)
    f1, _ = read_grid(args.gridfile1)
    f2, _ = read_grid(args.gridfile2)
    if not f1.normalized:
        f1 = f1.normalize()
    if not f2.normalized:
        f2 = f2.normalize()
    if args.photon == "idler":
        f1, f2 = f1.transposed(), f2.transposed()
    if f1.signal_um.size != f2.signal_um.size or not np.allclose(
        f1.signal_um, f2.signal_um, rtol=1e-12, atol=0.0
    ):
        overlap_lo = max(f1.signal_um[0], f2.signal_um[0])
        overlap_hi = min(f1.signal_um[-1], f2.signal_um[-1])
        if overlap_lo >= overlap_hi:
            print("error: signal axes do not overlap; cannot resample",
                  file=sys.stderr)
            return 2
        warnings.warn("resampling second grid onto the first grid's signal axis")
        f2 = resample_signal_axis(f2, f1.signal_um)
    delays = default_delays(f1, n=args.delays, span_factor=args.span_factor)
    curve = hom_fourfold(f1, f2, delays)
    print(f"visibility V = {curve.visibility:.6f}")
    print(f"baseline = {curve.baseline:.6f}")
    if args.output:
        manifest = build_manifest(
            "hom",
            {
                "gridfile1": str(args.gridfile1),
                "gridfile2": str(args.gridfile2),
                "photon": args.photon,
                "delays": args.delays,
                "span_factor": args.span_factor,
            },
            *_db_manifest_fields(db),
        )
        write_curve(args.output, curve,
                    metadata={"photon": args.photon},
                    manifest_sha256=manifest_hash(manifest))
        write_manifest(args.output, manifest)
        print(f"curve written to {args.output}")
    return 0


def cmd_map(args) -> int:
    db = _load_db(args)
    rec = db.get(args.crystal)
    lo, hi = rec.shared_range_um()
    margin = 2.0e-3
    lam_lo = args.lambda_min * 1e-3 if args.lambda_min else max(0.38, lo + margin)
    lam_hi = args.lambda_max * 1e-3 if args.lambda_max else min(0.70, (hi - margin) / 2.0)
    if not lam_lo < lam_hi:
        print("error: empty wavelength range after clipping to dispersion validity",
              file=sys.stderr)
        return 2
    field = pmf_gvm_map(
        rec,
        (lam_lo, lam_hi),
        (args.phi_min, args.phi_max),
        n_lambda=args.nodes,
        n_phi=args.nodes,
    )
    crossings = []
    for gvm in GvmType:
        for sol in solve_gvm_degenerate(rec, gvm, pump_range_um=(lam_lo, lam_hi)):
            crossings.append((gvm.value, sol.config.lambda_p_um, sol.config.phi_deg))
    manifest = build_manifest(
        "map",
        {
            "crystal": rec.id.value,
            "lambda_min_nm": lam_lo * 1e3,
            "lambda_max_nm": lam_hi * 1e3,
            "phi_min_deg": args.phi_min,
            "phi_max_deg": args.phi_max,
            "nodes": args.nodes,
            "crossings": [
                {"gvm": g, "lambda_p_nm": l * 1e3, "phi_deg": p}
                for g, l, p in crossings
            ],
        },
        *_db_manifest_fields(db),
    )
    write_field(args.output, field, crossings=crossings,
                manifest_sha256=manifest_hash(manifest))
    write_manifest(args.output, manifest)
    print(f"field written to {args.output} "
          f"({args.nodes}x{args.nodes} nodes, {len(crossings)} crossings)")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdpiso",
        description="Design tool for spectrally pure photon-pair sources "
                    "in KDP-family crystals.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--database",
        help=f"crystal database file (default: ${DATABASE_ENV_VAR} or the "
             "bundled asset)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crystals", help="list the crystal family")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_crystals)

    p = sub.add_parser("gvm", help="solve group-velocity-matched operating points")
    p.add_argument("--crystal", help="crystal name")
    p.add_argument("--all", action="store_true", help="all crystals")
    p.add_argument("--type", choices=[t.value for t in GvmType])
    p.add_argument("--degenerate", action="store_true",
                   help="wavelength-degenerate search")
    p.add_argument("--pump", type=float,
                   help="pump wavelength in nm (nondegenerate search)")
    p.add_argument("--length", type=float, default=15.0,
                   help="crystal length in mm recorded in solutions")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_gvm)

    p = sub.add_parser("jsa", help="compute a joint spectral amplitude grid")
    p.add_argument("--crystal", required=True)
    p.add_argument("--pump", type=float, required=True, help="pump wavelength / nm")
    p.add_argument("--bandwidth", type=float, required=True,
                   help="pump bandwidth / nm")
    p.add_argument("--length", type=float, required=True, help="crystal length / mm")
    p.add_argument("--signal", type=float,
                   help="signal wavelength / nm (defaults to 2x pump)")
    p.add_argument("--angle", type=float,
                   help="cut angle / deg (defaults to the phase-matching angle)")
    p.add_argument("--nodes", type=int, default=201)
    p.add_argument("--span-factor", type=float, default=4.0)
    p.add_argument("--output", help="grid file path")
    p.set_defaults(func=cmd_jsa)

    p = sub.add_parser("purity", help="Schmidt analysis of a stored grid")
    p.add_argument("gridfile")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("hom", help="four-fold interference of two stored grids")
    p.add_argument("gridfile1")
    p.add_argument("gridfile2")
    p.add_argument("--photon", choices=("signal", "idler"), default="signal")
    p.add_argument("--delays", type=int, default=201)
    p.add_argument("--span-factor", type=float, default=3.0)
    p.add_argument("--output", help="curve file path")
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("map", help="sample delta-k and GVM residuals over "
                                   "(pump wavelength, angle)")
    p.add_argument("--crystal", required=True)
    p.add_argument("--lambda-min", type=float, help="nm")
    p.add_argument("--lambda-max", type=float, help="nm")
    p.add_argument("--phi-min", type=float, default=40.0)
    p.add_argument("--phi-max", type=float, default=89.5)
    p.add_argument("--nodes", type=int, default=121)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_map)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KdpisoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
