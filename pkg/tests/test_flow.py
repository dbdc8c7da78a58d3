"""Gaussian smoothing, the entropy-flow identities, and the coupled
conditional-entropy-power flow."""

import math

import numpy as np
import pytest

from conftest import flow_for, make_gaussian, make_quartic
from epi_lab import (
    GaussianSpec,
    InvalidParametersError,
    KernelUnderresolvedError,
    NoiseCovariance,
    StepSizeInsufficientError,
    check_de_bruijn,
    condition1_along_flow,
    entropy_gap_derivative,
    gaussian_smooth,
    marginalize,
    oracle_s,
    run_cepi_flow,
    tabulated_from_values,
)
from epi_lab.density import Grid1D
from epi_lab.flow import default_dt_fd, density_at


def gauss2(X, Y, vx, vy, c):
    det = vx * vy - c * c
    q = (vy * X**2 - 2 * c * X * Y + vx * Y**2) / det
    return np.exp(-0.5 * q) / (2 * np.pi * np.sqrt(det))


def overlap_values(a, b):
    """Values of two densities on the intersection of their (aligned) grids."""
    def window(g_small, g_big):
        off = int(round((g_small.lo - g_big.lo) / g_big.h))
        return slice(off, off + g_small.n)

    if a.gx.n <= b.gx.n:
        return a.values, b.values[window(a.gx, b.gx), window(a.gy, b.gy)]
    return a.values[window(b.gx, a.gx), window(b.gy, a.gy)], b.values


class TestNoiseCovariance:
    def test_psd_validation(self):
        with pytest.raises(InvalidParametersError):
            NoiseCovariance(1.0, 2.0, 1.0)
        with pytest.raises(InvalidParametersError):
            NoiseCovariance(-1.0, 0.0, 1.0)

    def test_min_positive_eigenvalue(self):
        assert NoiseCovariance.identity().min_positive_eigenvalue() == pytest.approx(1.0)
        assert NoiseCovariance.diag(1.0, 0.0).min_positive_eigenvalue() == pytest.approx(1.0)
        assert NoiseCovariance(0.0, 0.0, 0.0).min_positive_eigenvalue() == 0.0


class TestGaussianSmooth:
    def test_identity_noise_closed_form(self, gaussian_product):
        sm = gaussian_smooth(gaussian_product, NoiseCovariance.identity(), 1.0)
        X, Y = sm.meshgrid()
        np.testing.assert_allclose(sm.values, gauss2(X, Y, 2.0, 2.0, 0.0), atol=1e-6)

    def test_correlated_noise_closed_form(self, gaussian_half):
        sm = gaussian_smooth(gaussian_half, NoiseCovariance(1.0, 0.3, 0.8), 0.7)
        X, Y = sm.meshgrid()
        want = gauss2(X, Y, 1.7, 1.56, 0.5 + 0.21)
        np.testing.assert_allclose(sm.values, want, atol=5e-5)

    def test_semigroup_two_half_steps(self, gaussian_half):
        cov = NoiseCovariance.identity()
        one = gaussian_smooth(gaussian_half, cov, 0.8)
        half = gaussian_smooth(gaussian_smooth(gaussian_half, cov, 0.4), cov, 0.4)
        a, b = overlap_values(one, half)
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_noise_on_x_only_leaves_y_marginal(self, gaussian_product):
        sm = gaussian_smooth(gaussian_product, NoiseCovariance.diag(1.0, 0.0), 1.0)
        my = marginalize(sm, "Y")
        ref = marginalize(gaussian_product, "Y")
        off = int(round((ref.grid.lo - my.grid.lo) / my.grid.h))
        np.testing.assert_allclose(
            my.values[off : off + ref.grid.n], ref.values, atol=1e-9
        )

    def test_mass_preserved_before_renormalization(self, gaussian_half):
        sm = gaussian_smooth(gaussian_half, NoiseCovariance.identity(), 0.5)
        assert abs(sm.mass_pre_norm - 1.0) < 1e-8

    def test_kernel_underresolved_raises(self, gaussian_half):
        tiny = (gaussian_half.gx.h / 4.0) ** 2  # kernel std = h/4 < 2h
        with pytest.raises(KernelUnderresolvedError):
            gaussian_smooth(gaussian_half, NoiseCovariance.identity(), tiny)

    def test_kernel_exactly_at_limit_accepted(self, gaussian_half):
        at_limit = (2.0 * gaussian_half.gx.h) ** 2 * 1.0001
        out = gaussian_smooth(gaussian_half, NoiseCovariance.identity(), at_limit)
        assert abs(out.mass_pre_norm - 1.0) < 1e-8

    def test_zero_noise_is_identity(self, gaussian_half):
        assert gaussian_smooth(gaussian_half, NoiseCovariance(0.0, 0.0, 0.0), 1.0) is gaussian_half

    def test_box_extension_covers_added_noise(self, gaussian_half):
        sm = gaussian_smooth(gaussian_half, NoiseCovariance.diag(4.0, 0.0), 1.0)
        assert sm.gx.lo <= gaussian_half.gx.lo - 4 * 2.0 + 1e-9
        assert sm.gy.lo == gaussian_half.gy.lo


class TestDeBruijn:
    def test_gaussian_identity_noise(self, gaussian_half):
        res = check_de_bruijn(gaussian_half, NoiseCovariance.identity(), t=0.5)
        assert res.passed
        sigma_t = np.array([[1.5, 0.5], [0.5, 1.5]])
        want = 0.5 * np.trace(np.linalg.inv(sigma_t))
        assert res.rhs == pytest.approx(want, rel=1e-4)
        assert res.lhs == pytest.approx(want, rel=1e-2)

    def test_product_x_only_noise_at_zero(self, gaussian_product):
        res = check_de_bruijn(gaussian_product, NoiseCovariance.diag(1.0, 0.0), t=0.0)
        assert res.passed
        assert res.rhs == pytest.approx(0.5, rel=1e-4)  # J(X_0)/2 for N(0,1)
        assert res.diagnostics["stencil"] == "forward"

    def test_zero_noise_trivial(self, gaussian_half):
        res = check_de_bruijn(gaussian_half, NoiseCovariance(0.0, 0.0, 0.0), t=0.3)
        assert res.passed and res.lhs == 0.0 and res.rhs == 0.0

    def test_non_diagonal_noise(self, gaussian_half):
        cov = NoiseCovariance(1.0, 0.3, 0.8)
        res = check_de_bruijn(gaussian_half, cov, t=0.5)
        assert res.passed
        sigma_t = np.array([[1.5, 0.65], [0.65, 1.4]])
        c = np.array([[1.0, 0.3], [0.3, 0.8]])
        want = 0.5 * np.trace(c @ np.linalg.inv(sigma_t))
        assert res.rhs == pytest.approx(want, rel=1e-4)

    def test_seeded_random_spot_checks(self):
        rng = np.random.default_rng(0)
        families = [make_gaussian(0.5), make_gaussian(-0.3), make_quartic(0.5)]
        for joint in families:
            t = float(rng.uniform(0.2, 0.8))
            res = check_de_bruijn(joint, NoiseCovariance.identity(), t=t)
            assert res.passed, (joint.meta["family"], t, res)


class TestEntropyGapDerivative:
    def test_gaussian_equality_case(self, gaussian_half):
        res = entropy_gap_derivative(gaussian_half, NoiseCovariance.identity())
        assert res.passed
        # a = b = 2 at r = 1/2; both sides equal 2 in nats
        assert res.rhs == pytest.approx(2.0, rel=1e-3)
        assert res.lhs == pytest.approx(2.0, rel=2e-2)

    def test_product_reduces_to_stam_gap(self, gaussian_product):
        res = entropy_gap_derivative(gaussian_product, NoiseCovariance.identity())
        assert res.passed
        assert res.rhs == pytest.approx(1.0, rel=1e-3)

    def test_quartic_holds(self, quartic_half):
        res = entropy_gap_derivative(quartic_half, NoiseCovariance.identity())
        assert res.passed
        assert res.diagnostics["rhs_nonnegative"] is True

    def test_degenerate_scores_skip(self):
        # p ∝ exp(-(x+y)²/2) uniform along x-y: both partial scores coincide,
        # so a + b = 0 and the bound is vacuous
        g = Grid1D(-4.0, 4.0, 128)
        X, Y = np.meshgrid(g.points(), g.points(), indexing="ij")
        vals = np.exp(-0.5 * (X + Y) ** 2)
        joint = tabulated_from_values(g, g, vals)
        res = entropy_gap_derivative(joint, NoiseCovariance.identity())
        assert res.skipped
        assert "degenerate" in res.diagnostics["reason"]


class TestCepiFlow:
    def test_gaussian_flow_monotone_to_one(self):
        traj = flow_for("bivariate-gaussian", 0.5)
        s = traj.s_values()
        assert s[0] == pytest.approx(oracle_s(GaussianSpec(cov=0.5)), abs=1e-6)
        assert traj.min_s_increment() >= -1e-4
        assert abs(s[-1] - 1.0) <= 0.02
        assert traj.richardson_diff <= 1e-3

    def test_variance_accumulates_with_noise(self):
        traj = flow_for("bivariate-gaussian", 0.5)
        first = traj.samples[0]
        for rec in traj.samples[1:]:
            assert rec.varX == pytest.approx(first.varX + rec.f, rel=1e-4)
            assert rec.varY == pytest.approx(first.varY + rec.g, rel=1e-4)

    def test_noise_is_nondecreasing(self):
        traj = flow_for("bivariate-gaussian", 0.3)
        fs = [rec.f for rec in traj.samples]
        gs = [rec.g for rec in traj.samples]
        assert all(b >= a for a, b in zip(fs, fs[1:]))
        assert all(b >= a for a, b in zip(gs, gs[1:]))

    def test_covariance_invariant_along_flow(self):
        traj = flow_for("bivariate-gaussian", 0.3)
        cov0 = traj.samples[0].covXY
        for rec in traj.samples:
            assert rec.covXY == pytest.approx(cov0, rel=1e-4)

    def test_stam_bound_along_flow(self):
        traj = flow_for("bivariate-gaussian", 0.5)
        j_x0 = traj.samples[0].fisher.jX
        for rec in traj.samples[1:]:
            bound = 1.0 / (1.0 / j_x0 + rec.f)
            assert rec.fisher.jX <= bound * (1.0 + 1e-4)

    def test_psi_never_grows(self):
        for family, param in (("bivariate-gaussian", 0.3), ("quartic-fkg", 0.3)):
            traj = flow_for(family, param)
            psi0 = traj.samples[0].psi
            assert max(rec.psi for rec in traj.samples) <= psi0 + 1e-6

    def test_negative_correlation_starts_above_one(self):
        joint = make_gaussian(-0.5)
        traj = run_cepi_flow(joint, 0.05, 8, richardson=False)
        assert traj.samples[0].s == pytest.approx(1.5, abs=1e-3)

    def test_independent_product_flow_is_classical_epi_ratio(self):
        traj = flow_for("bivariate-gaussian", 0.0, t_max=0.3, steps=48, stop=None)
        for rec in traj.samples:
            classical = (rec.entropy.npX + rec.entropy.npY) / rec.entropy.npW
            assert rec.s == pytest.approx(classical, rel=1e-5)
        assert traj.min_s_increment() >= -1e-4

    def test_sqrt_f_psi_diagnostic_present(self):
        traj = flow_for("bivariate-gaussian", 0.3)
        rec = traj.samples[-1]
        assert rec.sqrt_f_psi == pytest.approx(math.sqrt(rec.f) * rec.psi)

    def test_step_size_insufficient_raises_with_trajectory(self):
        joint = make_gaussian(-0.5)
        with pytest.raises(StepSizeInsufficientError) as exc_info:
            run_cepi_flow(joint, 0.1, 16)
        assert exc_info.value.trajectory is not None
        assert len(exc_info.value.trajectory.samples) == 17

    def test_parameter_validation(self, gaussian_half):
        with pytest.raises(InvalidParametersError):
            run_cepi_flow(gaussian_half, 0.5, 4)
        with pytest.raises(InvalidParametersError):
            run_cepi_flow(gaussian_half, -1.0, 16)

    def test_csv_rows_match_columns(self):
        from epi_lab.flow import CSV_COLUMNS

        traj = flow_for("bivariate-gaussian", 0.3)
        rows = traj.csv_rows()
        assert len(rows) == len(traj.samples)
        assert all(len(row) == len(CSV_COLUMNS) for row in rows)


class TestCondition1AlongFlow:
    def test_positive_correlation_stays_positive(self):
        sweep = condition1_along_flow(trajectory=flow_for("bivariate-gaussian", 0.3))
        assert sweep.holds
        assert all(c > 0 for _, c in sweep.samples)

    def test_product_stays_near_zero(self):
        sweep = condition1_along_flow(trajectory=flow_for("bivariate-gaussian", 0.0, t_max=0.3, steps=48, stop=None))
        assert all(abs(c) <= 1e-6 for _, c in sweep.samples)

    def test_negative_correlation_fails_at_zero(self):
        joint = make_gaussian(-0.3)
        sweep = condition1_along_flow(joint, 0.05, 8, richardson=False)
        assert not sweep.holds
        assert sweep.samples[0][1] == pytest.approx(-0.3, abs=1e-4)


class TestDensityAt:
    def test_zero_time_is_input(self, gaussian_half):
        assert density_at(gaussian_half, NoiseCovariance.identity(), 0.0) is gaussian_half

    def test_default_dt_fd_respects_resolution(self, gaussian_half):
        cov = NoiseCovariance.identity()
        dt = default_dt_fd(gaussian_half, cov)
        h = gaussian_half.gx.h
        assert dt >= (2 * h) ** 2 / 1.0 - 1e-12
