"""Closed-form Gaussian reference values: internal algebra consistency."""

import math

import numpy as np
import pytest

from epi_lab import (
    GaussianSpec,
    InvalidParametersError,
    oracle_after_noise,
    oracle_entropy,
    oracle_fisher,
    oracle_flow,
    oracle_m_moment,
    oracle_s,
)

TWO_PI_E = 2.0 * math.pi * math.e


class TestFisherAlgebra:
    def test_unit_variance_half_correlation(self):
        fr = oracle_fisher(GaussianSpec(cov=0.5))
        assert fr["jXX"] == pytest.approx(4.0 / 3.0)
        assert fr["jYY"] == pytest.approx(4.0 / 3.0)
        assert fr["jXY"] == pytest.approx(-2.0 / 3.0)
        assert fr["jX"] == fr["jY"] == 1.0
        assert fr["crossXY"] == pytest.approx(0.5)
        assert fr["jW"] == pytest.approx(1.0 / 3.0)

    def test_fisher_matrix_is_inverse_covariance(self):
        spec = GaussianSpec(vX=2.0, vY=3.0, cov=-1.0)
        fr = oracle_fisher(spec)
        sigma = np.array([[2.0, -1.0], [-1.0, 3.0]])
        inv = np.linalg.inv(sigma)
        assert fr["jXX"] == pytest.approx(inv[0, 0])
        assert fr["jXY"] == pytest.approx(inv[0, 1])
        assert fr["jYY"] == pytest.approx(inv[1, 1])

    @pytest.mark.parametrize("cov", [-0.5, 0.0, 0.3, 0.8])
    def test_dependent_fisher_equality_case(self, cov):
        # the dependent-pair inequality is an identity for Gaussians
        fr = oracle_fisher(GaussianSpec(cov=cov))
        lhs = 1.0 / (fr["jW"] - fr["jXY"])
        rhs = 1.0 / (fr["jXX"] - fr["jXY"]) + 1.0 / (fr["jYY"] - fr["jXY"])
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_independence_kills_cross_terms(self):
        fr = oracle_fisher(GaussianSpec())
        assert fr["jXY"] == 0.0
        assert fr["crossXY"] == 0.0
        assert fr["jXX"] == fr["jX"]


class TestEntropyAlgebra:
    def test_entropy_powers(self):
        e = oracle_entropy(GaussianSpec(cov=0.5))
        assert e["npX"] == pytest.approx(TWO_PI_E)
        assert e["npXgY"] == pytest.approx(TWO_PI_E * 0.75)
        assert e["npW"] == pytest.approx(TWO_PI_E * 3.0)

    def test_chain_rule(self):
        e = oracle_entropy(GaussianSpec(vX=1.5, vY=0.8, cov=0.4))
        assert e["hXgivenY"] == pytest.approx(e["hJoint"] - e["hY"])
        assert e["hYgivenX"] == pytest.approx(e["hJoint"] - e["hX"])

    def test_independent_epi_equality(self):
        e = oracle_entropy(GaussianSpec())
        assert e["npW"] == pytest.approx(e["npX"] + e["npY"], rel=1e-12)
        assert oracle_s(GaussianSpec()) == pytest.approx(1.0)


class TestSRatio:
    @pytest.mark.parametrize("r", np.linspace(-0.8, 0.8, 9))
    def test_unit_variance_s_is_one_minus_r(self, r):
        assert oracle_s(GaussianSpec(cov=r)) == pytest.approx(1.0 - r, rel=1e-12)

    def test_sign_anchors_cepi(self):
        for r in (0.1, 0.4, 0.7):
            assert oracle_s(GaussianSpec(cov=r)) <= 1.0
            assert oracle_s(GaussianSpec(cov=-r)) > 1.0


class TestNoise:
    def test_after_noise_moves_diagonal_only(self):
        spec = GaussianSpec(cov=0.5)
        out = oracle_after_noise(spec, 99.0, 99.0)
        assert out.vX == 100.0 and out.vY == 100.0 and out.cov == 0.5
        fr = oracle_fisher(out)
        assert fr["crossXY"] == pytest.approx(5e-5)
        assert abs(oracle_s(out) - 1.0) < 1e-2

    def test_negative_noise_rejected(self):
        with pytest.raises(InvalidParametersError):
            oracle_after_noise(GaussianSpec(), -1.0, 0.0)


class TestMMoment:
    @pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
    def test_symmetric_closed_form(self, r):
        got = oracle_m_moment(GaussianSpec(cov=r), 1.0, 1.0)
        assert got == pytest.approx(2.0 * r * r / (1.0 + r), rel=1e-12)

    def test_requires_unit_variances(self):
        with pytest.raises(InvalidParametersError):
            oracle_m_moment(GaussianSpec(vX=2.0), 1.0, 1.0)


class TestValidation:
    def test_degenerate_covariance_rejected(self):
        with pytest.raises(InvalidParametersError):
            GaussianSpec(cov=1.0)
        with pytest.raises(InvalidParametersError):
            GaussianSpec(vX=-1.0)


class TestOracleFlow:
    def test_noise_is_nondecreasing_and_s_tends_to_one(self):
        recs = oracle_flow(GaussianSpec(cov=0.5), 0.5, 64)
        fs = [r["f"] for r in recs]
        assert all(b >= a for a, b in zip(fs, fs[1:]))
        assert abs(recs[-1]["s"] - 1.0) < 1e-2

    def test_s_monotone_for_positive_correlation(self):
        recs = oracle_flow(GaussianSpec(cov=0.3), 0.4, 64)
        ss = [r["s"] for r in recs]
        assert all(b >= a - 1e-12 for a, b in zip(ss, ss[1:]))
