"""Walk the crystal family: indices, birefringence, group velocities.

Run:  python demos/01_crystal_survey.py
"""
import numpy as np

from kdpiso import default_database

db = default_database()

print(f"database version {db.version}\n")
print(f"{'crystal':8s} {'n_o(546)':>9s} {'n_e(546)':>9s} {'dn':>8s} "
      f"{'n_g,o(546)':>11s} {'1/v_g (s/m)':>12s}")
for rec in db:
    if not rec.has_dispersion:
        print(f"{rec.id.value:8s} {'(no dispersion data)':>9s}")
        continue
    lam = 0.5461
    n_o = float(rec.index_o(lam))
    n_e = float(rec.extraordinary.index(lam))
    ng = float(rec.ordinary.group_index(lam))
    inv_vg = rec.inverse_group_velocity("o", lam)
    print(f"{rec.id.value:8s} {n_o:9.4f} {n_e:9.4f} {n_o - n_e:8.4f} "
          f"{ng:11.4f} {inv_vg:12.4e}")

print("\nextraordinary index vs propagation angle (KDP at 830 nm):")
kdp = db.get("KDP")
for phi in (0, 30, 45, 60, 67.7, 90):
    print(f"  phi = {phi:5.1f} deg -> n_e = {float(kdp.index_e(0.830, phi)):.5f}")
