import math

import numpy as np
import pytest

from kdpiso.errors import NoPhaseMatchingError
from kdpiso.phasematch import (
    DELTA_K_TOL_RAD_PER_UM,
    GVM_TOL_S_PER_M,
    GvmType,
    SpdcConfig,
    delta_k,
    gvm_residual,
    idler_wavelength,
    orientation_distance,
    phase_mismatch,
    pmf_gvm_map,
    ridge_angle,
    solve_angle,
    solve_gvm_degenerate,
    solve_gvm_nondegenerate,
)


class TestConfig:
    def test_energy_conservation_enforced(self, kdp):
        with pytest.raises(ValueError, match="energy conservation"):
            SpdcConfig(kdp, 0.415, 0.83, 0.84, 50.0, 10.0)

    def test_ordering_enforced(self, kdp):
        li = idler_wavelength(0.5, 1.2)
        assert li < 1.2
        with pytest.raises(ValueError, match="lambda_p < lambda_s"):
            SpdcConfig(kdp, 0.5, 1.2, li, 50.0, 10.0)

    def test_angle_bounds(self, kdp):
        with pytest.raises(ValueError, match="cut angle"):
            SpdcConfig.degenerate(kdp, 0.415, 0.0, 10.0)
        with pytest.raises(ValueError, match="cut angle"):
            SpdcConfig.degenerate(kdp, 0.415, 90.0, 10.0)

    def test_from_signal(self, kdp):
        cfg = SpdcConfig.from_signal(kdp, 0.415, 0.8, 67.0, 15.0)
        assert 1.0 / cfg.lambda_p_um == pytest.approx(
            1.0 / cfg.lambda_s_um + 1.0 / cfg.lambda_i_um, rel=1e-13
        )


class TestDeltaK:
    def test_kdp_table_point(self, kdp):
        cfg = SpdcConfig.degenerate(kdp, 0.415, 67.7, 15.0)
        assert abs(delta_k(cfg)) < 1e-3

    def test_no_matching_along_axis(self, kdp):
        # degenerate KDP at phi -> 0 cannot compensate normal dispersion
        assert phase_mismatch(kdp, 0.415, 0.83, 0.83, 0.0) > 0.0
        # brute-force sign scan: positive at 0, negative by 90
        phis = np.linspace(0.0, 90.0, 91)
        vals = phase_mismatch(kdp, 0.415, 0.83, 0.83, phis)
        assert vals[0] > 0 > vals[-1]

    def test_strictly_monotone_in_angle(self, kdp):
        phis = np.linspace(0.001, 89.999, 1000)
        vals = phase_mismatch(kdp, 0.415, 0.830, 0.830, phis)
        assert np.all(np.diff(vals) < 0.0)


class TestSolveAngle:
    def test_kdp_gvm3_angle(self, kdp):
        assert solve_angle(kdp, 0.551, 1.102, 1.102) == pytest.approx(59.0, abs=0.5)

    def test_rdp_gvm3_angle(self, db):
        rdp = db.get("RDP")
        assert solve_angle(rdp, 0.578, 1.156, 1.156) == pytest.approx(82.1, abs=0.5)

    def test_solution_below_tolerance(self, kdp):
        phi = solve_angle(kdp, 0.415, 0.830, 0.830)
        assert abs(phase_mismatch(kdp, 0.415, 0.830, 0.830, phi)) < DELTA_K_TOL_RAD_PER_UM

    def test_no_phase_matching_raises(self, db):
        cda = db.get("CDA")
        with pytest.raises(NoPhaseMatchingError):
            solve_angle(cda, 0.46, 0.92, 0.92)


class TestGvmResidual:
    def test_gvm3_is_sum_of_gvm1_and_gvm2(self, kdp):
        args = (kdp, 0.46, 0.95, idler_wavelength(0.46, 0.95), 55.0)
        g1 = gvm_residual(args[0], GvmType.GVM1, *args[1:])
        g2 = gvm_residual(args[0], GvmType.GVM2, *args[1:])
        g3 = gvm_residual(args[0], GvmType.GVM3, *args[1:])
        assert g3 == pytest.approx(g1 + g2, abs=1e-22)

    def test_gvm1_sign_flips_across_root(self, kdp):
        def matched(lp):
            phi = solve_angle(kdp, lp, 2 * lp, 2 * lp)
            return gvm_residual(kdp, GvmType.GVM1, lp, 2 * lp, 2 * lp, phi)

        assert matched(0.405) > 0 > matched(0.425)

    def test_residual_at_solutions(self, db):
        for name, gvm in (("KDP", "gvm1"), ("DKDP", "gvm2"), ("ADP", "gvm3")):
            sols = solve_gvm_degenerate(db.get(name), gvm)
            assert sols
            for sol in sols:
                assert abs(sol.residual_gvm) < GVM_TOL_S_PER_M
                assert abs(sol.residual_delta_k) < DELTA_K_TOL_RAD_PER_UM


TABLE1_CASES = [
    ("ADP", "gvm1", 0.411, 71.2),
    ("DKDP", "gvm2", 0.915, 62.9),
    ("KDP", "gvm1", 0.415, 67.7),
    ("DADA", "gvm3", 0.741, 49.5),
]


class TestDegenerateSolver:
    @pytest.mark.parametrize("name,gvm,lp,phi", TABLE1_CASES)
    def test_tabulated_points(self, db, name, gvm, lp, phi):
        sols = solve_gvm_degenerate(db.get(name), gvm)
        best = min(sols, key=lambda s: abs(s.config.lambda_p_um - lp))
        assert best.config.lambda_p_um == pytest.approx(lp, abs=0.005)
        assert best.config.phi_deg == pytest.approx(phi, abs=1.0)

    def test_kdp_gvm2_not_satisfied(self, kdp):
        assert solve_gvm_degenerate(kdp, GvmType.GVM2) == []

    def test_cda_dcda_never_satisfied(self, db):
        for name in ("CDA", "DCDA"):
            rec = db.get(name)
            for gvm in GvmType:
                assert solve_gvm_degenerate(rec, gvm) == []

    def test_idempotent_restart(self, db):
        rec = db.get("ADP")
        first = solve_gvm_degenerate(rec, GvmType.GVM1)[0]
        lp = first.config.lambda_p_um
        again = solve_gvm_degenerate(rec, GvmType.GVM1, pump_range_um=(lp - 0.01, lp + 0.01))
        assert len(again) == 1
        assert again[0].config.lambda_p_um == pytest.approx(lp, abs=1e-9)
        assert again[0].config.phi_deg == pytest.approx(first.config.phi_deg, abs=1e-6)


class TestNondegenerateSolver:
    def test_kda_row(self, db):
        sols = solve_gvm_nondegenerate(db.get("KDA"), 0.520)
        best = min(sols, key=lambda s: abs(s.config.lambda_s_um - 0.787))
        assert best.config.lambda_s_um == pytest.approx(0.787, abs=0.005)
        assert best.config.lambda_i_um == pytest.approx(1.531, abs=0.010)
        assert best.config.phi_deg == pytest.approx(45.1, abs=1.0)

    def test_drdp_row(self, db):
        sols = solve_gvm_nondegenerate(db.get("DRDP"), 0.500)
        best = min(sols, key=lambda s: abs(s.config.lambda_s_um - 0.744))
        assert best.config.lambda_s_um == pytest.approx(0.744, abs=0.005)
        assert best.config.lambda_i_um == pytest.approx(1.526, abs=0.010)
        assert best.config.phi_deg == pytest.approx(56.0, abs=1.0)

    def test_energy_conservation_of_solutions(self, db):
        for sol in solve_gvm_nondegenerate(db.get("RDA"), 0.520):
            cfg = sol.config
            assert 1.0 / cfg.lambda_p_um == pytest.approx(
                1.0 / cfg.lambda_s_um + 1.0 / cfg.lambda_i_um, rel=1e-12
            )


class TestRidgeAngle:
    def test_nominal_orientations(self, db):
        for name, gvm in (
            ("KDP", GvmType.GVM1),
            ("DKDP", GvmType.GVM2),
            ("KDP", GvmType.GVM3),
            ("DRDA", GvmType.GVM1),
            ("RDP", GvmType.GVM3),
        ):
            for sol in solve_gvm_degenerate(db.get(name), gvm):
                assert orientation_distance(
                    sol.ridge_angle_deg, gvm.nominal_ridge_deg
                ) <= 0.5

    def test_orientation_distance_wraps(self):
        assert orientation_distance(179.9, 0.0) == pytest.approx(0.1)
        assert orientation_distance(90.0, 90.0) == 0.0
        assert orientation_distance(1.0, 179.5) == pytest.approx(1.5)

    def test_generic_point_finite(self, kdp):
        cfg = SpdcConfig.degenerate(kdp, 0.5, 60.0, 10.0)
        theta = ridge_angle(cfg)
        assert 0.0 <= theta < 180.0


class TestMap:
    def test_nodes_match_pointwise_calls(self, db):
        adp = db.get("ADP")
        field = pmf_gvm_map(adp, (0.40, 0.60), (45.0, 85.0), n_lambda=9, n_phi=9)
        for i in (0, 4, 8):
            for j in (0, 4, 8):
                lam, phi = field.lambda_um[i], field.phi_deg[j]
                assert field.delta_k[i, j] == pytest.approx(
                    float(phase_mismatch(adp, lam, 2 * lam, 2 * lam, phi)), rel=1e-12
                )
                g1 = gvm_residual(adp, GvmType.GVM1, lam, 2 * lam, 2 * lam, phi)
                assert field.gvm1[i, j] == pytest.approx(float(g1), rel=1e-12)

    def test_contours_cross_near_adp_solution(self, db):
        adp = db.get("ADP")
        field = pmf_gvm_map(adp, (0.38, 0.70), (40.0, 89.5), n_lambda=161, n_phi=161)
        # along each matched-angle column, locate the zero of delta_k in phi,
        # then find where gvm1 changes sign along that curve
        lam = field.lambda_um
        crossings = []
        prev = None
        for i in range(lam.size):
            dk_col = field.delta_k[i]
            idx = np.where(np.diff(np.sign(dk_col)) != 0)[0]
            if idx.size == 0:
                prev = None
                continue
            j = idx[0]
            g1 = field.gvm1[i, j]
            if prev is not None and np.sign(g1) != np.sign(prev[1]):
                crossings.append((lam[i], field.phi_deg[j]))
            prev = (lam[i], g1)
        assert crossings
        best = min(crossings, key=lambda c: abs(c[0] - 0.411))
        sols = solve_gvm_degenerate(adp, GvmType.GVM1)
        dlam = lam[1] - lam[0]
        dphi = field.phi_deg[1] - field.phi_deg[0]
        assert abs(best[0] - sols[0].config.lambda_p_um) <= 2 * dlam
        assert abs(best[1] - sols[0].config.phi_deg) <= 2 * dphi
