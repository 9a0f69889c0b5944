"""Spectrum, deflation, resolvent norms, scans, and parameter sweeps."""

import numpy as np
import pytest
import scipy.linalg as sla

from thermodelay import (
    DeflationError,
    PhysicalParams,
    ThetaBC,
    ValidationError,
    assemble,
    build_grid,
    eigenvalues,
    resolvent_norm,
    resolvent_scan,
    spectral_abscissa,
    spectrum_report,
    stability_sweep,
)
from thermodelay.spectral import (
    EnergyWeights,
    default_zero_tol,
    euclidean_resolvent_norm,
    log_spaced_scan_grid,
)


class TestSpectralAbscissa:
    def test_deflates_one_zero(self):
        report = spectral_abscissa([-1.0, -2.0 + 3.0j, 0.0], deflate_zero=True, zero_tol=1e-8)
        assert report.abscissa == -1.0
        assert report.zero_modes_removed == 1

    def test_no_deflation(self):
        report = spectral_abscissa([-1.0, -2.0], deflate_zero=False, zero_tol=1e-8)
        assert report.abscissa == -1.0
        assert report.zero_modes_removed == 0

    def test_two_zero_candidates_is_an_error(self):
        with pytest.raises(DeflationError):
            spectral_abscissa([0.0, 1e-12], deflate_zero=True, zero_tol=1e-8)

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValidationError):
            spectral_abscissa([-1.0], deflate_zero=True, zero_tol=0.0)


class TestEigenvalues:
    def test_conjugate_symmetry(self, reference_params):
        g = build_grid(16, 8, reference_params.ell)
        A = assemble(reference_params, g)
        eigs = eigenvalues(A)
        radius = np.max(np.abs(eigs))
        # each eigenvalue's conjugate is (numerically) in the spectrum
        for w in eigs[np.abs(eigs.imag) > 1e-10]:
            assert np.min(np.abs(eigs - np.conj(w))) <= 1e-8 * radius

    def test_sorted_by_descending_real_part(self, reference_params):
        g = build_grid(12, 6, reference_params.ell)
        eigs = eigenvalues(assemble(reference_params, g))
        assert np.all(np.diff(eigs.real) <= 1e-14)

    def test_reference_system_has_one_zero_mode(self, reference_params):
        # Regression baseline: alpha=1, beta=1, tau=0.5, gamma=0.5, kappa=1,
        # ell=pi at (N, M) = (32, 16).
        g = build_grid(32, 16, reference_params.ell)
        eigs = eigenvalues(assemble(reference_params, g))
        near_zero = np.abs(eigs) < 1e-8
        assert int(np.count_nonzero(near_zero)) == 1
        assert np.all(eigs[~near_zero].real < 0)

    def test_deflation_count_per_boundary_mode(self, reference_params):
        g = build_grid(16, 8, reference_params.ell)
        neumann = spectrum_report(assemble(reference_params, g, ThetaBC.NEUMANN))
        dirichlet = spectrum_report(assemble(reference_params, g, ThetaBC.DIRICHLET))
        assert neumann.zero_modes_removed == 1
        assert dirichlet.zero_modes_removed == 0
        assert neumann.abscissa < 0
        assert dirichlet.abscissa < 0

    def test_default_zero_tol_scales_with_radius(self, reference_params):
        g = build_grid(16, 8, reference_params.ell)
        eigs = eigenvalues(assemble(reference_params, g))
        assert default_zero_tol(eigs) == pytest.approx(1e-8 * np.max(np.abs(eigs)))


class TestResolventNorm:
    def test_scalar_sanity(self):
        # 1x1 harness with entry -2: ||(i - (-2))^{-1}|| = 1/sqrt(5).
        assert euclidean_resolvent_norm(np.array([[-2.0]]), 1.0j) == pytest.approx(
            1.0 / np.sqrt(5.0), rel=1e-14
        )

    def test_zero_mode_flags_singular(self, reference_params, small_grid):
        A = assemble(reference_params, small_grid)
        result = resolvent_norm(A, 0.0 + 0.0j)
        assert result.singular
        assert result.norm_h == np.inf

    def test_matches_explicit_inverse(self, reference_params):
        g = build_grid(16, 8, reference_params.ell)
        A = assemble(reference_params, g)
        lam = 1.0 + 5.0j
        result = resolvent_norm(A, lam)
        inv = np.linalg.inv(lam * np.eye(A.dimension) - A.dense)
        assert result.norm_euclid == pytest.approx(np.linalg.norm(inv, 2), rel=1e-8)
        weights = EnergyWeights(A)
        inv_weighted = weights.transform(lam * np.eye(A.dimension) - A.dense)
        assert result.norm_h == pytest.approx(
            np.linalg.norm(np.linalg.inv(inv_weighted), 2), rel=1e-8
        )

    def test_conjugate_line_symmetry(self, reference_params):
        g = build_grid(12, 6, reference_params.ell)
        A = assemble(reference_params, g)
        weights = EnergyWeights(A)
        for b in (0.5, 3.0, 40.0):
            up = resolvent_norm(A, complex(0.01, b), weights)
            down = resolvent_norm(A, complex(0.01, -b), weights)
            assert up.norm_h == pytest.approx(down.norm_h, rel=1e-10)
            assert up.norm_euclid == pytest.approx(down.norm_euclid, rel=1e-10)


class TestResolventScan:
    def test_symmetric_grid_pairwise_equal(self, reference_params):
        g = build_grid(12, 6, reference_params.ell)
        A = assemble(reference_params, g)
        b = log_spaced_scan_grid(1.0, 50.0, 12)
        scan = resolvent_scan(A, 0.01, b)
        n = len(b)
        np.testing.assert_allclose(scan.norm_h[: n // 2][::-1], scan.norm_h[n // 2 :], rtol=1e-10)
        assert not scan.singular.any()
        assert scan.sup_norm >= scan.norm_h.max() * (1 - 1e-14)

    def test_empty_scan(self, reference_params, small_grid):
        A = assemble(reference_params, small_grid)
        scan = resolvent_scan(A, 0.01, [])
        assert scan.sup_norm is None
        assert scan.argmax_b is None
        assert scan.b_values.size == 0

    def test_rejects_nonpositive_line(self, reference_params, small_grid):
        A = assemble(reference_params, small_grid)
        with pytest.raises(ValidationError):
            resolvent_scan(A, 0.0, [1.0])

    def test_log_grid_shape(self):
        b = log_spaced_scan_grid(1.0, 200.0, 60)
        assert b.size == 60
        assert b[0] == -200.0 and b[-1] == 200.0
        np.testing.assert_allclose(b[:30], -b[30:][::-1])
        with pytest.raises(ValidationError):
            log_spaced_scan_grid(1.0, 200.0, 61)


class TestStabilitySweep:
    def test_beta_sweep_is_stable(self):
        base = PhysicalParams(alpha=1, beta=1, gamma=0.5, kappa=1, tau=1.0, ell=np.pi)
        g = build_grid(16, 8, base.ell)
        at = base.alpha * base.tau
        rows = stability_sweep(base, "beta", [at, 2 * at, 4 * at], g)
        assert [r.status for r in rows] == ["ok"] * 3
        assert all(r.abscissa < 0 for r in rows)
        assert [r.value for r in rows] == [at, 2 * at, 4 * at]

    def test_single_point_matches_direct(self, reference_params):
        g = build_grid(16, 8, reference_params.ell)
        rows = stability_sweep(reference_params, "beta", [reference_params.beta], g)
        direct = spectrum_report(assemble(reference_params, g))
        assert rows[0].abscissa == pytest.approx(direct.abscissa, rel=1e-12)

    def test_repeated_value_rows_identical(self, reference_params):
        g = build_grid(12, 6, reference_params.ell)
        rows = stability_sweep(reference_params, "kappa", [1.0, 1.0], g)
        assert rows[0] == rows[1]

    def test_ratio_axis(self, reference_params):
        g = build_grid(12, 6, reference_params.ell)
        rows = stability_sweep(reference_params, "ratio", [2.0], g)
        assert rows[0].status == "ok"
        direct_params = PhysicalParams(
            alpha=reference_params.alpha,
            beta=2.0 * reference_params.alpha * reference_params.tau,
            gamma=reference_params.gamma,
            kappa=reference_params.kappa,
            tau=reference_params.tau,
            ell=reference_params.ell,
        )
        direct = spectrum_report(assemble(direct_params, g))
        assert rows[0].abscissa == pytest.approx(direct.abscissa, rel=1e-12)

    def test_unknown_axis_rejected(self, reference_params, small_grid):
        with pytest.raises(ValidationError):
            stability_sweep(reference_params, "delta", [1.0], small_grid)

    def test_point_failure_recorded_in_row(self, reference_params):
        # tau <= 0 is invalid: the point fails, the sweep continues.
        g = build_grid(12, 6, reference_params.ell)
        rows = stability_sweep(reference_params, "tau", [-1.0, 0.5], g)
        assert rows[0].status.startswith("error:")
        assert rows[0].abscissa is None
        assert rows[1].status == "ok"
