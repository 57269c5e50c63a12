"""Degenerate and nondegenerate group-velocity-matched operating points.

The degenerate survey reproduces the family's published operating table:
eleven crystals with usable dispersion, three matching conditions each.

Run:  python demos/02_gvm_survey.py
"""
from kdpiso import default_database, solve_gvm_degenerate, solve_gvm_nondegenerate
from kdpiso.phasematch import GvmType

db = default_database()

print("wavelength-degenerate survey (pump -> 2x pump + 2x pump)")
print(f"{'crystal':8s} {'condition':9s} {'pump/nm':>8s} {'pair/nm':>8s} "
      f"{'phi/deg':>8s} {'ridge/deg':>9s}")
for rec in db:
    if not rec.has_dispersion:
        continue
    for gvm in GvmType:
        sols = solve_gvm_degenerate(rec, gvm)
        if not sols:
            print(f"{rec.id.value:8s} {gvm.value:9s} {'-':>8s} {'-':>8s} {'-':>8s}")
            continue
        for sol in sols:
            cfg = sol.config
            print(f"{rec.id.value:8s} {gvm.value:9s} {cfg.lambda_p_um*1e3:8.1f} "
                  f"{cfg.lambda_s_um*1e3:8.1f} {cfg.phi_deg:8.2f} "
                  f"{sol.ridge_angle_deg:9.2f}")

print("\nnondegenerate operating points (silicon-detector signal + telecom idler)")
for name, pump in (("RDA", 0.520), ("DRDP", 0.500), ("KDA", 0.520)):
    for sol in solve_gvm_nondegenerate(db.get(name), pump):
        cfg = sol.config
        print(f"  {name:5s} pump {pump*1e3:.0f} nm -> "
              f"{cfg.lambda_s_um*1e3:6.1f} + {cfg.lambda_i_um*1e3:7.1f} nm "
              f"at phi = {cfg.phi_deg:.2f} deg")
