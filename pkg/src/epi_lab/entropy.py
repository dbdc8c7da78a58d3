"""Differential entropies and entropy powers.

All entropies are in bits (log base 2) so that the entropy power of a
density is exactly 2^{2H}; for a Gaussian N(m, v) that is 2·pi·e·v.  The
heat-flow module converts to nats at its own boundary (H_nats = H_bits·ln 2),
keeping the factor-of-ln2 conversion in exactly one place.

p·log p is extended by 0 at p = 0; grid points below the density floor are
dropped from the integrand, which changes the value by at most
O(floor·|log floor|·box area).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import Density1D, Density2D, marginalize, sum_density


def _neg_p_log2_p(values: np.ndarray, floor: float) -> np.ndarray:
    out = np.zeros_like(values)
    ok = values >= floor
    out[ok] = -values[ok] * np.log2(values[ok])
    return out


def entropy_1d(d: Density1D) -> float:
    """H(X) = -∫ p log2 p, in bits."""
    integrand = _neg_p_log2_p(d.values, d.p_floor())
    return float(np.dot(d.grid.trap_weights(), integrand))


def entropy_2d(joint: Density2D) -> float:
    """H(X,Y) in bits, by 2-D trapezoid quadrature."""
    integrand = _neg_p_log2_p(joint.values, joint.p_floor())
    return float(joint.gx.trap_weights() @ integrand @ joint.gy.trap_weights())


def conditional_entropies(joint: Density2D) -> tuple[float, float]:
    """(H(X|Y), H(Y|X)) via the chain rule H(X|Y) = H(X,Y) - H(Y)."""
    h_joint = entropy_2d(joint)
    h_x = entropy_1d(marginalize(joint, "X"))
    h_y = entropy_1d(marginalize(joint, "Y"))
    return h_joint - h_y, h_joint - h_x


@dataclass(frozen=True)
class EntropyReport:
    """Entropies (bits) and the entropy powers both EPI forms need.

    The chain-rule identities hXgivenY = hJoint - hY and
    hYgivenX = hJoint - hX hold exactly by construction.
    """

    hX: float
    hY: float
    hJoint: float
    hW: float
    hXgivenY: float
    hYgivenX: float
    npX: float
    npY: float
    npXgY: float
    npYgX: float
    npW: float
    sumMassPreNorm: float

    def to_json(self) -> dict:
        return {
            "hX": self.hX,
            "hY": self.hY,
            "hJoint": self.hJoint,
            "hW": self.hW,
            "hXgivenY": self.hXgivenY,
            "hYgivenX": self.hYgivenX,
            "npX": self.npX,
            "npY": self.npY,
            "npXgY": self.npXgY,
            "npYgX": self.npYgX,
            "npW": self.npW,
            "sumMassPreNorm": self.sumMassPreNorm,
        }


def entropy_report(joint: Density2D) -> EntropyReport:
    """Assemble every entropy and entropy power, including H(X+Y)."""
    h_joint = entropy_2d(joint)
    h_x = entropy_1d(marginalize(joint, "X"))
    h_y = entropy_1d(marginalize(joint, "Y"))
    p_w = sum_density(joint)
    h_w = entropy_1d(p_w)
    h_xgy = h_joint - h_y
    h_ygx = h_joint - h_x
    return EntropyReport(
        hX=h_x,
        hY=h_y,
        hJoint=h_joint,
        hW=h_w,
        hXgivenY=h_xgy,
        hYgivenX=h_ygx,
        npX=2.0 ** (2.0 * h_x),
        npY=2.0 ** (2.0 * h_y),
        npXgY=2.0 ** (2.0 * h_xgy),
        npYgX=2.0 ** (2.0 * h_ygx),
        npW=2.0 ** (2.0 * h_w),
        sumMassPreNorm=p_w.mass_pre_norm,
    )
