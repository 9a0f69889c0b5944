"""Scalar coercivity machinery: frozen-value oracles and positivity properties."""

import numpy as np
import pytest

from thermodelay import (
    Branch,
    PhysicalParams,
    ValidationError,
    coercivity_lower_bound,
    coercivity_scan,
    coercivity_value,
    derived_constants,
    stability_condition,
)
from thermodelay.coercivity import _lower_bound_ab, _phi_ab


def phi_complex(lam: complex, p: PhysicalParams) -> float:
    """Independent oracle: the coercivity function via complex arithmetic."""
    lam = complex(lam)
    return (p.alpha * (np.conj(lam) * np.exp(-lam * p.tau)).real + abs(lam) ** 2 * p.beta).real


def params(alpha=1.0, beta=1.0, tau=1.0, **kw) -> PhysicalParams:
    defaults = dict(gamma=1.0, kappa=1.0, ell=1.0)
    defaults.update(kw)
    return PhysicalParams(alpha=alpha, beta=beta, tau=tau, **defaults)


class TestDerivedConstants:
    def test_examples(self):
        assert derived_constants(params(alpha=1, tau=1, beta=2)) == (1.0, 1.0)
        assert derived_constants(params(alpha=2, tau=0.5, beta=1)) == (4.0, 8.0)
        assert derived_constants(params(alpha=1, tau=1, beta=1)) == (2.0, 2.0)

    def test_homogeneity_in_powers_of_two(self):
        # (alpha, beta) -> (c*alpha, c*beta) scales (xi, m) by c exactly in
        # floating point when c is a power of two.
        base = params(alpha=1.3, beta=0.7, tau=0.9)
        xi0, m0 = derived_constants(base)
        for k in range(-8, 9):
            c = 2.0**k
            xi, m = derived_constants(params(alpha=c * 1.3, beta=c * 0.7, tau=0.9))
            assert xi == c * xi0
            assert m == c * m0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            params(beta=-1.0)
        with pytest.raises(ValidationError):
            params(beta=0.0)
        with pytest.raises(ValidationError):
            PhysicalParams(1, 1, 1, 1, 1, 0)

    def test_gamma_zero_is_the_decoupled_limit(self):
        p = params(gamma=0.0)
        assert p.gamma == 0.0


class TestStabilityCondition:
    def test_examples(self):
        assert stability_condition(params(alpha=1, tau=0.5, beta=1)) is True
        assert stability_condition(params(alpha=2, tau=1, beta=1)) is False
        # the condition is non-strict: equality counts as stable
        assert stability_condition(params(alpha=1, tau=1, beta=1)) is True


class TestCoercivityValue:
    # Frozen from high-precision evaluation (mpmath, 40 digits) of the
    # expanded real form.
    def test_real_lambda(self, unit_params):
        assert coercivity_value(1.0 + 0.0j, unit_params) == pytest.approx(
            1.3678794411714423, rel=1e-15
        )

    def test_imaginary_lambda(self, unit_params):
        assert coercivity_value(1.0j, unit_params) == pytest.approx(
            0.15852901519210349, rel=1e-15
        )

    def test_zero(self, unit_params):
        assert coercivity_value(0.0 + 0.0j, unit_params) == 0.0

    def test_matches_complex_arithmetic_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            p = params(
                alpha=rng.uniform(0.1, 3),
                beta=rng.uniform(0.1, 3),
                tau=rng.uniform(0.05, 2),
            )
            lam = complex(rng.uniform(-3, 3), rng.uniform(-30, 30))
            expected = phi_complex(lam, p)
            got = coercivity_value(lam, p)
            assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_broadcasts_over_arrays(self, unit_params):
        lams = np.array([1.0 + 0.0j, 1.0j, 0.0])
        values = coercivity_value(lams, unit_params)
        assert values.shape == (3,)
        assert values[0] == pytest.approx(1.3678794411714423)

    def test_pure_imaginary_closed_form(self):
        # phi(ib) = b^2*beta - alpha*b*sin(b*tau); under alpha*tau <= beta it
        # dominates b^2*(beta - alpha*tau) for b >= 0.
        p = params(alpha=1.0, beta=1.5, tau=1.2)
        assert stability_condition(p)
        b = np.linspace(0.0, 1e3, 20001)
        values = coercivity_value(1j * b, p)
        closed = b * b * p.beta - p.alpha * b * np.sin(b * p.tau)
        np.testing.assert_allclose(values, closed, rtol=1e-13, atol=1e-13)
        floor = b * b * (p.beta - p.alpha * p.tau)
        assert np.all(values >= floor - 1e-9 * np.maximum(1.0, b * b))


class TestLowerBound:
    def test_large_branch(self, unit_params):
        bound, branch = coercivity_lower_bound(2.0 + 0.0j, unit_params)
        assert branch is Branch.LARGE_LAMBDA
        assert bound == pytest.approx(3.7293294335267746, rel=1e-15)
        assert bound <= coercivity_value(2.0 + 0.0j, unit_params) == pytest.approx(
            4.2706705664732254, rel=1e-15
        )

    def test_small_branch(self, unit_params):
        bound, branch = coercivity_lower_bound(0.1 + 0.1j, unit_params)
        assert branch is Branch.SMALL_LAMBDA
        assert bound == pytest.approx(0.10098332580415981, rel=1e-14)
        assert bound <= coercivity_value(0.1 + 0.1j, unit_params)

    def test_boundary_tie_break_selects_large(self, unit_params):
        # |lam| = alpha/beta exactly: the >= comparison picks the large branch.
        bound, branch = coercivity_lower_bound(1.0 + 0.0j, unit_params)
        assert branch is Branch.LARGE_LAMBDA
        assert bound == pytest.approx(0.6321205588285577, rel=1e-15)
        assert bound <= coercivity_value(1.0 + 0.0j, unit_params)

    def test_rejects_closed_left_half_plane(self, unit_params):
        for lam in (0.0 + 1.0j, -0.1 + 0.0j, -2.0 - 3.0j):
            with pytest.raises(ValidationError):
                coercivity_lower_bound(lam, unit_params)

    def test_branch_soundness_randomized(self):
        # bound <= value + 1e-12*max(1, |lam|^2*beta) on both branches.
        rng = np.random.default_rng(11)
        seen = set()
        for _ in range(2000):
            p = params(
                alpha=rng.uniform(0.1, 3),
                beta=rng.uniform(0.1, 3),
                tau=rng.uniform(0.05, 2),
            )
            lam = complex(10 ** rng.uniform(-2, 1), rng.uniform(-100, 100))
            bound, branch = coercivity_lower_bound(lam, p)
            seen.add(branch)
            value = coercivity_value(lam, p)
            assert bound <= value + 1e-12 * max(1.0, abs(lam) ** 2 * p.beta)
        assert seen == {Branch.LARGE_LAMBDA, Branch.SMALL_LAMBDA}

    def test_small_branch_angle_fact(self):
        # On the small branch under the stability condition, |b*tau| <= 1 and
        # cos(b*tau) stays positive.
        rng = np.random.default_rng(13)
        hits = 0
        for _ in range(5000):
            alpha = rng.uniform(0.1, 3)
            tau = rng.uniform(0.05, 2)
            beta = alpha * tau * rng.uniform(1.0, 3.0)
            p = params(alpha=alpha, beta=beta, tau=tau)
            radius = alpha / beta
            a = rng.uniform(1e-6, radius)
            b_max = np.sqrt(max(radius**2 - a * a, 0.0))
            lam = complex(a, rng.uniform(-b_max, b_max))
            if abs(lam) > radius:
                continue
            _, branch = coercivity_lower_bound(lam, p)
            assert branch is Branch.SMALL_LAMBDA
            assert abs(lam.imag * tau) <= 1.0 + 1e-12
            assert np.cos(lam.imag * tau) > 0.0
            hits += 1
        assert hits > 1000

    def test_positivity_randomized(self):
        # Under the stability condition, Re(lam) > 0 forces the coercivity
        # value above the relative violation floor.
        rng = np.random.default_rng(17)
        n = 100_000
        alpha = 10 ** rng.uniform(-1, 0.5, n)
        tau = 10 ** rng.uniform(-1.3, 0.3, n)
        beta = alpha * tau * 10 ** rng.uniform(0.0, 1.0, n)
        a = 10 ** rng.uniform(-3, 1, n)
        b = rng.uniform(-1e3, 1e3, n)
        values = _phi_ab(a, b, alpha, beta, tau)
        floor = -1e-12 * (alpha + (a * a + b * b) * beta)
        assert int(np.count_nonzero(values <= floor)) == 0


class TestScan:
    def test_reference_grid_is_positive(self, unit_params):
        report = coercivity_scan(unit_params, (0.01, 5.0), (-50.0, 50.0), 100, 1000)
        assert report.n_samples == 100_000
        assert report.nonpositive_count == 0
        assert report.nonpositive == ()
        assert report.min_value > 0

    def test_violated_condition_is_reported_not_asserted(self):
        # alpha*tau > beta: the scan reports offending samples and completes.
        p = params(alpha=1.0, tau=2.0, beta=1.0)
        assert not stability_condition(p)
        report = coercivity_scan(p, (0.01, 5.0), (-50.0, 50.0), 100, 1000)
        assert report.nonpositive_count > 0
        assert report.min_value < 0
        for lam, value in report.nonpositive:
            assert value < 0
            assert value >= report.min_value

    def test_degenerate_single_point(self, unit_params):
        report = coercivity_scan(unit_params, (1.0, 1.0), (0.0, 0.0), 1, 1)
        assert report.n_samples == 1
        assert report.min_value == pytest.approx(1.3678794411714423, rel=1e-15)
        assert report.argmin == 1.0 + 0.0j

    def test_argmin_ties_take_lowest_linear_index(self, unit_params):
        # Symmetric b-range: phi(a, b) = phi(a, -b) for real lambda paths; the
        # first (a-major, b-minor) occurrence must win.
        report = coercivity_scan(unit_params, (0.5, 0.5), (-2.0, 2.0), 1, 5)
        mirrored = coercivity_value(complex(0.5, -report.argmin.imag), unit_params)
        assert coercivity_value(report.argmin, unit_params) == pytest.approx(mirrored)
        assert report.argmin.imag <= 0  # scanned b ascending, first minimum is at b <= 0

    def test_invalid_ranges(self, unit_params):
        with pytest.raises(ValidationError):
            coercivity_scan(unit_params, (0.0, 1.0), (0.0, 1.0), 2, 2)
        with pytest.raises(ValidationError):
            coercivity_scan(unit_params, (-1.0, 1.0), (0.0, 1.0), 2, 2)
        with pytest.raises(ValidationError):
            coercivity_scan(unit_params, (1.0, 2.0), (1.0, -1.0), 2, 2)
        with pytest.raises(ValidationError):
            coercivity_scan(unit_params, (1.0, 2.0), (0.0, 1.0), 0, 2)

    def test_matches_scalar_api(self, unit_params):
        # The vectorized kernel and the public scalar function are one path.
        rng = np.random.default_rng(23)
        a = rng.uniform(0.1, 4, 50)
        b = rng.uniform(-20, 20, 50)
        kernel = _phi_ab(a, b, unit_params.alpha, unit_params.beta, unit_params.tau)
        for i in range(50):
            assert kernel[i] == coercivity_value(complex(a[i], b[i]), unit_params)
        bounds, is_large = _lower_bound_ab(
            a, b, unit_params.alpha, unit_params.beta, unit_params.tau
        )
        for i in range(50):
            bound, branch = coercivity_lower_bound(complex(a[i], b[i]), unit_params)
            assert bounds[i] == bound
            assert (branch is Branch.LARGE_LAMBDA) == bool(is_large[i])
