import numpy as np
import pytest

from kdpiso.fileio import (
    build_manifest,
    manifest_hash,
    read_curve,
    read_field,
    read_grid,
    write_curve,
    write_field,
    write_grid,
    write_manifest,
)
from kdpiso.hom import default_delays, hom_fourfold
from kdpiso.phasematch import GvmType, gvm_residual, phase_mismatch, pmf_gvm_map
from kdpiso.spectral import schmidt
from tests.conftest import random_grid, separable_grid


class TestGridFiles:
    def test_round_trip_preserves_everything(self, tmp_path):
        g = random_grid(np.random.default_rng(2), 12, 9)
        path = tmp_path / "grid.txt"
        write_grid(path, g, metadata={"crystal": "KDP"}, manifest_sha256="abc123")
        back, headers = read_grid(path)
        assert headers["crystal"] == "KDP"
        assert headers["manifest_sha256"] == "abc123"
        assert np.allclose(back.signal_um, g.signal_um, rtol=1e-15, atol=0)
        assert np.allclose(back.idler_um, g.idler_um, rtol=1e-15, atol=0)
        assert back.normalized
        # %.17g round-trips the stored values exactly; the nm<->um unit
        # rescale costs at most one ulp
        assert np.allclose(back.amplitude, g.amplitude, rtol=1e-12, atol=0)

    def test_round_trip_purity_identical(self, tmp_path):
        g = separable_grid(16, 18)
        path = tmp_path / "grid.txt"
        write_grid(path, g)
        back, _ = read_grid(path)
        assert abs(schmidt(back).purity - schmidt(g).purity) < 1e-12

    def test_malformed_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# kdpiso jsa grid v1\n# units: wavelength=nm amplitude=1/nm\n"
                        "# idler_nm: 830 831\n830 1.0 0.0\n")
        with pytest.raises(ValueError, match="row width"):
            read_grid(path)

    def test_missing_units_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# idler_nm: 830 831\n830 1 0 2 0\n")
        with pytest.raises(ValueError, match="units"):
            read_grid(path)


class TestCurveFiles:
    def test_round_trip(self, tmp_path):
        f = separable_grid(48, 16)
        curve = hom_fourfold(f, f, default_delays(f, n=51))
        path = tmp_path / "curve.txt"
        write_curve(path, curve, manifest_sha256="feed")
        back, headers = read_curve(path)
        assert np.allclose(back.delays_s, curve.delays_s, rtol=1e-15)
        assert np.array_equal(back.probability, curve.probability)
        assert back.visibility == curve.visibility
        # header annotation matches recomputation from the stored columns
        edge = max(1, len(back.probability) // 10)
        baseline = float(np.mean(np.r_[back.probability[:edge], back.probability[-edge:]]))
        vis = (baseline - back.probability.min()) / baseline
        assert vis == pytest.approx(float(headers["visibility"]), abs=1e-6)


class TestFieldFiles:
    def test_round_trip_and_pointwise_values(self, db, tmp_path):
        adp = db.get("ADP")
        field = pmf_gvm_map(adp, (0.40, 0.50), (50.0, 80.0), n_lambda=7, n_phi=6)
        path = tmp_path / "field.txt"
        write_field(path, field, crossings=[("gvm1", 0.411, 71.2)],
                    manifest_sha256="0f")
        arrays, headers = read_field(path)
        assert headers["crystal"] == "ADP"
        assert "gvm1" in headers["crossings"]
        assert arrays["delta_k"].shape == (7, 6)
        lam = arrays["lambda_nm"][3] * 1e-3
        phi = arrays["phi_deg"][2]
        assert arrays["delta_k"][3, 2] == pytest.approx(
            float(phase_mismatch(adp, lam, 2 * lam, 2 * lam, phi)), rel=1e-12
        )
        assert arrays["gvm2"][3, 2] == pytest.approx(
            float(gvm_residual(adp, GvmType.GVM2, lam, 2 * lam, 2 * lam, phi)),
            rel=1e-12,
        )


class TestManifests:
    def test_hash_ignores_timestamp(self):
        m1 = build_manifest("jsa", {"x": 1}, "v", "h")
        m2 = dict(m1, created_utc="2099-01-01T00:00:00+00:00")
        assert manifest_hash(m1) == manifest_hash(m2)

    def test_hash_sensitive_to_parameters(self):
        m1 = build_manifest("jsa", {"x": 1}, "v", "h")
        m2 = build_manifest("jsa", {"x": 2}, "v", "h")
        assert manifest_hash(m1) != manifest_hash(m2)

    def test_sidecar_written(self, tmp_path):
        m = build_manifest("jsa", {}, "v", "h")
        out = write_manifest(tmp_path / "out.txt", m)
        assert out.name == "out.txt.manifest.json"
        assert out.exists()
