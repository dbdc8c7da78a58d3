"""Closed-form reference values for bivariate Gaussian pairs.

Everything here is plain Gaussian algebra: score functions are linear, the
Fisher matrix is the inverse covariance, entropies come from the
log-determinant.  No quadrature is used anywhere, so agreement with the
gridded pipeline is a genuine cross-validation of the numerics.

Entropies are in bits, matching the rest of the package, so the entropy
power of N(m, v) is exactly 2·pi·e·v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidParametersError

TWO_PI_E = 2.0 * math.pi * math.e


@dataclass(frozen=True)
class GaussianSpec:
    """Mean vector and covariance of a nondegenerate Gaussian pair."""

    meanX: float = 0.0
    meanY: float = 0.0
    vX: float = 1.0
    vY: float = 1.0
    cov: float = 0.0

    def __post_init__(self):
        if self.vX <= 0 or self.vY <= 0:
            raise InvalidParametersError("variances must be positive")
        if self.det <= 0:
            raise InvalidParametersError("covariance matrix must be positive definite")

    @property
    def det(self) -> float:
        return self.vX * self.vY - self.cov * self.cov

    @staticmethod
    def from_correlation(r: float, vX: float = 1.0, vY: float = 1.0,
                         meanX: float = 0.0, meanY: float = 0.0) -> "GaussianSpec":
        return GaussianSpec(meanX, meanY, vX, vY, r * math.sqrt(vX * vY))


def oracle_fisher(spec: GaussianSpec) -> dict:
    """All Fisher scalars.  The joint score is -Σ⁻¹(x-m), so the joint
    Fisher matrix is Σ⁻¹ and the marginal informations are 1/variance."""
    det = spec.det
    return {
        "jX": 1.0 / spec.vX,
        "jY": 1.0 / spec.vY,
        "jXX": spec.vY / det,
        "jYY": spec.vX / det,
        "jXY": -spec.cov / det,
        "crossXY": spec.cov / (spec.vX * spec.vY),
        "jW": 1.0 / (spec.vX + spec.vY + 2.0 * spec.cov),
    }


def oracle_entropy(spec: GaussianSpec) -> dict:
    """Entropies (bits) and entropy powers; h(N(m, v)) = ½ log2(2πe·v)."""
    det = spec.det
    h_x = 0.5 * math.log2(TWO_PI_E * spec.vX)
    h_y = 0.5 * math.log2(TWO_PI_E * spec.vY)
    h_joint = 0.5 * math.log2(TWO_PI_E**2 * det)
    v_w = spec.vX + spec.vY + 2.0 * spec.cov
    h_w = 0.5 * math.log2(TWO_PI_E * v_w)
    h_x_given_y = h_joint - h_y
    h_y_given_x = h_joint - h_x
    return {
        "hX": h_x,
        "hY": h_y,
        "hJoint": h_joint,
        "hW": h_w,
        "hXgivenY": h_x_given_y,
        "hYgivenX": h_y_given_x,
        "npX": TWO_PI_E * spec.vX,
        "npY": TWO_PI_E * spec.vY,
        "npW": TWO_PI_E * v_w,
        "npXgY": TWO_PI_E * det / spec.vY,
        "npYgX": TWO_PI_E * det / spec.vX,
    }


def oracle_after_noise(spec: GaussianSpec, f: float, g: float) -> GaussianSpec:
    """The pair after adding independent N(0,f), N(0,g) noise: variances
    grow, the covariance is untouched."""
    if f < 0 or g < 0:
        raise InvalidParametersError("noise variances must be nonnegative")
    return replace(spec, vX=spec.vX + f, vY=spec.vY + g)


def oracle_s(spec: GaussianSpec) -> float:
    """Conditional-entropy-power ratio
    s = (2^{2H(X|Y)} + 2^{2H(Y|X)}) / 2^{2H(X+Y)}.

    For unit variances this reduces to 1 - r, so s ≤ 1 exactly when the
    correlation is nonnegative.
    """
    e = oracle_entropy(spec)
    return (e["npXgY"] + e["npYgX"]) / e["npW"]


def oracle_m_moment(spec: GaussianSpec, a: float, b: float) -> float:
    """E[(a(ρ¹-ρ_X) + b(ρ²-ρ_Y))²] for a unit-variance pair.

    With unit variances ρ¹-ρ_X = -r·ρ² and ρ²-ρ_Y = -r·ρ¹, which gives
    r²·(a²·J_YY + 2ab·J_XY + b²·J_XX) = r²((a²+b²) - 2abr)/(1-r²).
    """
    if abs(spec.vX - 1.0) > 1e-12 or abs(spec.vY - 1.0) > 1e-12:
        raise InvalidParametersError("closed form requires unit variances")
    r = spec.cov
    return r * r * ((a * a + b * b) - 2.0 * a * b * r) / (1.0 - r * r)


def oracle_flow(spec: GaussianSpec, t_max: float, steps: int) -> list[dict]:
    """Exact-coefficient Euler trajectory of the conditional-entropy-power
    flow f' = 2^{2H(X_t|Y_t)}, g' = 2^{2H(Y_t|X_t)} for a Gaussian start.

    Used to pick flow horizons and to validate the gridded flow at matching
    step schedules.
    """
    dt = t_max / steps
    f = g = 0.0
    out = []
    for k in range(steps + 1):
        cur = oracle_after_noise(spec, f, g)
        e = oracle_entropy(cur)
        out.append({"t": k * dt, "f": f, "g": g, "s": oracle_s(cur)})
        if k < steps:
            f += e["npXgY"] * dt
            g += e["npYgX"] * dt
    return out
