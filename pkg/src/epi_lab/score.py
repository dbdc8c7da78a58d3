"""Score functions, Fisher information quantities and the ψ-mixing
coefficient.

Scores are ρ = p'/p (and the partial-derivative analogs ρ¹ = ∂p/∂x / p,
ρ² = ∂p/∂y / p for joints).  Analytic-backed densities use their closed-form
scores; tabulated ones fall back to centered finite differences of log p,
which is better conditioned than differencing p directly where p is tiny.

Grid points where the density falls below the evaluation floor carry a mask:
scores are set to zero there and the points get zero weight in every
expectation.  The probability mass lost to the mask is reported (and bounded
at 1e-4, beyond which expectations are refused).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .density import (
    Density1D,
    Density2D,
    marginalize,
    slice_integral,
    sum_density,
)
from .errors import ExcessiveMaskLossError
from .results import CheckResult, equality_check

MASK_MASS_LIMIT = 1e-4


def _fd_log_score(values: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Centered finite differences of log p (one-sided at the box edges)."""
    peak = float(values.max())
    logp = np.log(np.maximum(values, 1e-300 * max(peak, 1.0)))
    return np.gradient(logp, h, axis=axis)


def score_1d(d: Density1D) -> np.ndarray:
    """Score p'/p on the grid, zeroed on masked (sub-floor) points."""
    if d.score_values is not None:
        rho = np.array(d.score_values, dtype=np.float64)
    else:
        rho = _fd_log_score(d.values, d.grid.h)
    rho[d.mask()] = 0.0
    return rho


@dataclass(frozen=True)
class ScoreField:
    """Joint and marginal scores evaluated on the joint's grid."""

    rho1: np.ndarray  # ∂p/∂x / p on the product grid
    rho2: np.ndarray  # ∂p/∂y / p
    rhoX: np.ndarray  # marginal score of X on gx
    rhoY: np.ndarray  # marginal score of Y on gy
    mask: np.ndarray  # True where the joint density is below its floor


def score_2d(joint: Density2D) -> ScoreField:
    """Fill all four score functions consistently from one joint."""
    mask = joint.mask()
    if joint.score1_fn is not None and joint.score2_fn is not None:
        X, Y = joint.meshgrid()
        rho1 = np.asarray(joint.score1_fn(X, Y), dtype=np.float64).copy()
        rho2 = np.asarray(joint.score2_fn(X, Y), dtype=np.float64).copy()
    else:
        rho1 = _fd_log_score(joint.values, joint.gx.h, axis=0)
        rho2 = _fd_log_score(joint.values, joint.gy.h, axis=1)
    rho1[mask] = 0.0
    rho2[mask] = 0.0
    rho_x = score_1d(marginalize(joint, "X"))
    rho_y = score_1d(marginalize(joint, "Y"))
    return ScoreField(rho1, rho2, rho_x, rho_y, mask)


@dataclass(frozen=True)
class PsiMixing:
    """Box-supremum of |p/(p_X p_Y) - 1| with its location.

    The supremum is taken over unmasked grid points only; the true supremum
    may live in the tails outside the box, so the scope is recorded.
    """

    value: float
    x: float
    y: float
    scope: str = "box-sup"

    def __float__(self) -> float:
        return self.value


def psi_mixing(joint: Density2D) -> PsiMixing:
    """ψ-mixing coefficient sup |p(x,y)/(p_X(x) p_Y(y)) - 1| on the box."""
    p_x = marginalize(joint, "X").values
    p_y = marginalize(joint, "Y").values
    denom = np.outer(p_x, p_y)
    ok = ~joint.mask() & (denom > 0)
    dev = np.zeros_like(joint.values)
    dev[ok] = np.abs(joint.values[ok] / denom[ok] - 1.0)
    flat = int(np.argmax(dev))
    i, j = np.unravel_index(flat, dev.shape)
    return PsiMixing(
        float(dev[i, j]),
        float(joint.gx.points()[i]),
        float(joint.gy.points()[j]),
    )


@dataclass(frozen=True)
class FisherReport:
    """The six Fisher scalars plus truncation diagnostics.

    jXX = E[ρ¹(X,Y)²], jYY = E[ρ²(X,Y)²], jXY = E[ρ¹ρ²];
    jX = E[ρ_X(X)²], jY = E[ρ_Y(Y)²], crossXY = E[ρ_X(X) ρ_Y(Y)]
    (the last under the joint, so it vanishes only for independent pairs).
    """

    jX: float
    jY: float
    jXX: float
    jYY: float
    jXY: float
    crossXY: float
    maskMass: float
    psi: float
    boxSupLocation: tuple[float, float]

    def to_json(self) -> dict:
        return {
            "jX": self.jX,
            "jY": self.jY,
            "jXX": self.jXX,
            "jYY": self.jYY,
            "jXY": self.jXY,
            "crossXY": self.crossXY,
            "maskMass": self.maskMass,
            "psi": self.psi,
            "psiScope": "box-sup",
            "boxSupLocation": list(self.boxSupLocation),
        }


def _expectation_weights(joint: Density2D, mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Quadrature weights w_i w_j p_ij with masked points zeroed; also the
    masked probability mass."""
    w2 = np.outer(joint.gx.trap_weights(), joint.gy.trap_weights()) * joint.values
    mask_mass = float(w2[mask].sum())
    w2 = np.where(mask, 0.0, w2)
    return w2, mask_mass


def fisher_report(joint: Density2D) -> FisherReport:
    """All Fisher scalars by quadrature of score products against the joint."""
    sf = score_2d(joint)
    w2, mask_mass = _expectation_weights(joint, sf.mask)
    if mask_mass > MASK_MASS_LIMIT:
        raise ExcessiveMaskLossError(
            f"masked region holds {mask_mass:.2e} probability mass "
            f"(limit {MASK_MASS_LIMIT:.0e}); refine or widen the grid"
        )
    cross = float(np.einsum("ij,i,j->", w2, sf.rhoX, sf.rhoY))
    psi = psi_mixing(joint)
    return FisherReport(
        jX=float(np.einsum("ij,i->", w2, sf.rhoX**2)),
        jY=float(np.einsum("ij,j->", w2, sf.rhoY**2)),
        jXX=float((w2 * sf.rho1**2).sum()),
        jYY=float((w2 * sf.rho2**2).sum()),
        jXY=float((w2 * sf.rho1 * sf.rho2).sum()),
        crossXY=cross,
        maskMass=mask_mass,
        psi=psi.value,
        boxSupLocation=(psi.x, psi.y),
    )


def m_statistic_moment(joint: Density2D, a: float, b: float) -> float:
    """E[M_{a,b}(X,Y)²] where M_{a,b} = a(ρ¹ - ρ_X) + b(ρ² - ρ_Y).

    Zero for every (a, b) exactly when the joint scores coincide with the
    marginal ones, i.e. under independence.
    """
    sf = score_2d(joint)
    w2, _ = _expectation_weights(joint, sf.mask)
    m = a * (sf.rho1 - sf.rhoX[:, None]) + b * (sf.rho2 - sf.rhoY[None, :])
    m[sf.mask] = 0.0
    return float((w2 * m * m).sum())


def m_identity_check(joint: Density2D, fisher: Optional[FisherReport] = None) -> CheckResult:
    """Verify E[M_{1,-1}²] = J_XX - 2J_XY + J_YY - J(X) - J(Y) - 2E[ρ_Xρ_Y].

    Both sides are computed by independent quadratures; agreement is also an
    internal consistency test of all six Fisher scalars at once.
    """
    fr = fisher if fisher is not None else fisher_report(joint)
    lhs = m_statistic_moment(joint, 1.0, -1.0)
    rhs = fr.jXX - 2.0 * fr.jXY + fr.jYY - fr.jX - fr.jY - 2.0 * fr.crossXY
    tol = 1e-4 * max(1.0, abs(lhs), abs(rhs))
    return equality_check(
        "m_identity", lhs, rhs, tol,
        {"jXX": fr.jXX, "jXY": fr.jXY, "jYY": fr.jYY,
         "jX": fr.jX, "jY": fr.jY, "crossXY": fr.crossXY},
    )


# ---------------------------------------------------------------------------
# score of the sum, by two routes
# ---------------------------------------------------------------------------


def score_of_sum_direct(joint: Density2D) -> tuple[Density1D, np.ndarray]:
    """ρ_W by direct differentiation of the sum density p_W."""
    p_w = sum_density(joint)
    return p_w, score_1d(p_w)


def score_of_sum_conditional(
    joint: Density2D, component: int = 1
) -> tuple[Density1D, np.ndarray]:
    """ρ_W(w) as the conditional expectation E[ρ^(c)(X,Y) | X+Y = w].

    Computed as ∫ ρ^(c) p along the slice x + y = w, divided by p_W; both
    partial-score components give the same function (their slice integrals
    each telescope to p_W').
    """
    if component not in (1, 2):
        raise ValueError("component must be 1 or 2")
    sf = score_2d(joint)
    rho = sf.rho1 if component == 1 else sf.rho2
    p_w = sum_density(joint)
    num = slice_integral(rho * joint.values, joint.gx, joint.gy)
    # sum_density renormalizes; divide by the same raw values it integrated
    raw_pw = p_w.values * p_w.mass_pre_norm
    floor = p_w.p_floor() * p_w.mass_pre_norm
    out = np.where(raw_pw >= floor, num / np.maximum(raw_pw, floor), 0.0)
    out[p_w.mask()] = 0.0
    return p_w, out


def sum_score_consistency(joint: Density2D) -> dict:
    """Weighted-L² distances between the direct and conditional ρ_W routes.

    Returns the p_W-weighted L² norms of (direct - conditional₁),
    (direct - conditional₂) and (conditional₁ - conditional₂).
    """
    p_w, rho_direct = score_of_sum_direct(joint)
    _, rho_c1 = score_of_sum_conditional(joint, 1)
    _, rho_c2 = score_of_sum_conditional(joint, 2)
    w = p_w.grid.trap_weights() * p_w.values

    def dist(u, v):
        return math.sqrt(float(np.dot(w, (u - v) ** 2)))

    return {
        "direct_vs_cond1": dist(rho_direct, rho_c1),
        "direct_vs_cond2": dist(rho_direct, rho_c2),
        "cond1_vs_cond2": dist(rho_c1, rho_c2),
    }


def fisher_of_sum(joint: Density2D) -> float:
    """J(X+Y) from the sum density: E[ρ_W(W)²]."""
    p_w, rho = score_of_sum_direct(joint)
    w = p_w.grid.trap_weights() * p_w.values
    return float(np.dot(w, rho * rho))


def fisher_1d(d: Density1D) -> float:
    """J(X) = E[ρ_X(X)²] for a marginal density."""
    rho = score_1d(d)
    w = d.grid.trap_weights() * d.values
    w[d.mask()] = 0.0
    return float(np.dot(w, rho * rho))
