"""Entropies, conditional entropies, entropy powers (bits convention)."""

import math

import numpy as np
import pytest

from conftest import make_gaussian
from epi_lab import (
    GaussianSpec,
    Grid1D,
    conditional_entropies,
    entropy_1d,
    entropy_2d,
    entropy_report,
    marginalize,
    oracle_entropy,
)
from epi_lab.density import make_density_1d

TWO_PI_E = 2.0 * math.pi * math.e
H_STD_NORMAL = 0.5 * math.log2(TWO_PI_E)  # 2.047095...


class TestEntropy1D:
    def test_standard_normal(self, gaussian_half):
        h = entropy_1d(marginalize(gaussian_half, "X"))
        assert h == pytest.approx(H_STD_NORMAL, abs=1e-5)

    def test_scaling_law(self):
        j = make_gaussian(0.0, vX=4.0)
        h = entropy_1d(marginalize(j, "X"))
        assert h == pytest.approx(H_STD_NORMAL + math.log2(2.0), abs=1e-5)

    def test_uniform_on_unit_interval(self):
        g = Grid1D(0.0, 1.0, 201)
        d = make_density_1d(g, np.ones(201), "tabulated")
        assert entropy_1d(d) == pytest.approx(0.0, abs=1e-6)


class TestEntropy2D:
    def test_product_of_standard_normals(self, gaussian_product):
        assert entropy_2d(gaussian_product) == pytest.approx(2 * H_STD_NORMAL, abs=1e-5)
        h_xgy, h_ygx = conditional_entropies(gaussian_product)
        assert h_xgy == pytest.approx(H_STD_NORMAL, abs=1e-5)
        assert h_ygx == pytest.approx(H_STD_NORMAL, abs=1e-5)

    def test_correlated_closed_form(self, gaussian_half):
        want = math.log2(TWO_PI_E) + 0.5 * math.log2(0.75)
        assert entropy_2d(gaussian_half) == pytest.approx(want, abs=1e-5)
        h_xgy, _ = conditional_entropies(gaussian_half)
        assert h_xgy == pytest.approx(0.5 * math.log2(TWO_PI_E * 0.75), abs=1e-5)

    def test_conditioning_reduces_entropy(self, gaussian_half, mixture_dependent):
        for joint in (gaussian_half, mixture_dependent):
            h_xgy, h_ygx = conditional_entropies(joint)
            h_x = entropy_1d(marginalize(joint, "X"))
            h_y = entropy_1d(marginalize(joint, "Y"))
            assert h_xgy <= h_x + 1e-6
            assert h_ygx <= h_y + 1e-6


class TestEntropyReport:
    def test_independent_normals_epi_equality(self, gaussian_product):
        er = entropy_report(gaussian_product)
        assert er.npW == pytest.approx(TWO_PI_E * 2.0, rel=1e-3)
        assert er.npW == pytest.approx(er.npX + er.npY, rel=1e-3)

    def test_half_correlation(self, gaussian_half):
        er = entropy_report(gaussian_half)
        assert er.npW == pytest.approx(TWO_PI_E * 3.0, rel=1e-3)
        assert er.npXgY == pytest.approx(TWO_PI_E * 0.75, rel=1e-3)
        # conditional EPI strictly satisfied
        assert er.npW > er.npXgY + er.npYgX

    def test_negative_correlation_violates_cepi(self):
        er = entropy_report(make_gaussian(-0.5))
        assert er.npW == pytest.approx(TWO_PI_E * 1.0, rel=1e-3)
        assert er.npW < er.npXgY + er.npYgX

    def test_chain_rule_exact_by_construction(self, mixture_dependent):
        er = entropy_report(mixture_dependent)
        assert er.hXgivenY == er.hJoint - er.hY
        assert er.hYgivenX == er.hJoint - er.hX
        assert er.npXgY > 0 and er.npW > 0 and math.isfinite(er.npW)

    @pytest.mark.parametrize("r", [-0.8, -0.3, 0.0, 0.3, 0.8])
    def test_matches_oracle(self, r):
        er = entropy_report(make_gaussian(r))
        want = oracle_entropy(GaussianSpec.from_correlation(r))
        for key in ("npX", "npY", "npXgY", "npYgX", "npW"):
            assert getattr(er, key) == pytest.approx(want[key], rel=1e-4), key

    def test_translation_invariance(self):
        centered = entropy_report(make_gaussian(0.3))
        shifted = entropy_report(make_gaussian(0.3, meanX=2.0, meanY=-1.0))
        assert shifted.hJoint == pytest.approx(centered.hJoint, abs=1e-9)
        assert shifted.hW == pytest.approx(centered.hW, abs=1e-9)

    def test_epi_on_non_gaussian_product(self, mixture_product):
        er = entropy_report(mixture_product)
        assert er.npW >= er.npX + er.npY - 1e-6 * er.npW
