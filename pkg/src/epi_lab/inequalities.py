"""Named inequality checkers.

Each checker assembles already-computed Fisher/entropy quantities into a
CheckResult with explicit lhs, rhs, slack and tolerance.  Degenerate cases
(vanishing denominators, unmet preconditions) yield *skipped* verdicts with
diagnostics rather than failures: an input the statement does not cover is
not a counterexample.

Checkers accept precomputed reports so a verification suite can evaluate
the whole battery from one Fisher and one entropy pass.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .density import (
    Density1D,
    Density2D,
    marginalize,
    moments_2d,
    product_density,
    variance_1d,
)
from .entropy import EntropyReport, entropy_report
from .flow import STrajectory
from .results import (
    CheckResult,
    equality_check,
    inequality_check,
    skipped_check,
)
from .score import (
    FisherReport,
    fisher_of_sum,
    fisher_report,
    m_statistic_moment,
)

DEGENERATE_EPS = 1e-8


def check_epi(
    joint: Density2D,
    entropy: Optional[EntropyReport] = None,
    fisher: Optional[FisherReport] = None,
) -> CheckResult:
    """Entropy power of the sum vs sum of marginal entropy powers:
    2^{2H(X+Y)} >= 2^{2H(X)} + 2^{2H(Y)}.

    Holds for independent pairs, with equality exactly for Gaussian
    products; a dependent input can violate it outright (the diagnostics
    carry crossXY so such runs are self-explaining).
    """
    er = entropy if entropy is not None else entropy_report(joint)
    fr = fisher if fisher is not None else fisher_report(joint)
    lhs, rhs = er.npW, er.npX + er.npY
    diag = {
        "crossXY": fr.crossXY,
        "independent_input": bool(joint.meta.get("is_product", False)),
    }
    if joint.meta.get("is_gaussian") and joint.meta.get("is_product"):
        return equality_check("epi", lhs, rhs, 1e-3 * max(lhs, rhs), diag)
    return inequality_check("epi", lhs, rhs, diagnostics=diag)


def check_stam(dX: Density1D, dY: Density1D) -> CheckResult:
    """Fisher information inequality for an independent pair:
    1/J(X+Y) >= 1/J(X) + 1/J(Y), with equality for Gaussians.

    The two marginals are combined into a product joint internally, so the
    sum density goes through the same slice-integral path as the dependent
    checks.
    """
    joint = product_density(dX, dY)
    fr = fisher_report(joint)
    j_w = fisher_of_sum(joint)
    if j_w <= DEGENERATE_EPS or fr.jX <= DEGENERATE_EPS or fr.jY <= DEGENERATE_EPS:
        return skipped_check("stam", "degenerate-denominator: vanishing Fisher information")
    lhs = 1.0 / j_w
    rhs = 1.0 / fr.jX + 1.0 / fr.jY
    return inequality_check(
        "stam", lhs, rhs,
        diagnostics={"jW": j_w, "jX": fr.jX, "jY": fr.jY},
    )


def check_prop4(
    joint: Density2D, fisher: Optional[FisherReport] = None
) -> CheckResult:
    """Dependent-pair version of the Fisher information inequality:
    1/(J(X+Y) - J_XY) >= 1/(J_XX - J_XY) + 1/(J_YY - J_XY),
    with equality for bivariate normal pairs; reduces to the independent
    inequality when the cross terms vanish.

    Also verifies the intermediate bound
    J(X+Y) <= (J_XX·J_YY - J_XY²)/(J_XX + J_YY - 2J_XY) in diagnostics.
    """
    fr = fisher if fisher is not None else fisher_report(joint)
    j_w = fisher_of_sum(joint)
    d1 = fr.jXX - fr.jXY
    d2 = fr.jYY - fr.jXY
    dw = j_w - fr.jXY
    diag = {"jW": j_w, "jXX": fr.jXX, "jYY": fr.jYY, "jXY": fr.jXY}
    if min(d1, d2, dw) <= DEGENERATE_EPS:
        return skipped_check(
            "prop4", "degenerate-denominator after subtracting jXY", diagnostics=diag
        )
    inter_rhs = (fr.jXX * fr.jYY - fr.jXY**2) / (d1 + d2)
    diag["intermediate_lhs"] = j_w
    diag["intermediate_rhs"] = inter_rhs
    diag["intermediate_holds"] = bool(j_w <= inter_rhs + 1e-4 * inter_rhs + 1e-6)
    lhs = 1.0 / dw
    rhs = 1.0 / d1 + 1.0 / d2
    if joint.meta.get("is_gaussian"):
        return equality_check("prop4", lhs, rhs, diagnostics=diag)
    return inequality_check("prop4", lhs, rhs, diagnostics=diag)


def check_condition1(
    joint: Density2D, fisher: Optional[FisherReport] = None
) -> CheckResult:
    """Nonnegative cross-score expectation at t = 0: E[ρ_X(X) ρ_Y(Y)] >= 0.

    The flow module provides the for-all-t sweep; this is the instantaneous
    instance.
    """
    fr = fisher if fisher is not None else fisher_report(joint)
    return inequality_check("condition1", fr.crossXY, 0.0)


def check_condition_takano(
    joint: Density2D, fisher: Optional[FisherReport] = None
) -> CheckResult:
    """The stronger cross-score condition
    E[ρ_X ρ_Y] >= E[M²_{λ, 1/λ}] with λ = sqrt(J(X)/J(Y)),
    under which the unconditioned entropy power inequality survives
    dependence.
    """
    fr = fisher if fisher is not None else fisher_report(joint)
    if fr.jY <= DEGENERATE_EPS:
        return skipped_check("takano", "degenerate-denominator: J(Y) ~ 0")
    lam = math.sqrt(fr.jX / fr.jY)
    rhs = m_statistic_moment(joint, lam, 1.0 / lam)
    return inequality_check(
        "takano", fr.crossXY, rhs, diagnostics={"lambda": lam},
    )


def check_cepi(
    joint: Density2D,
    entropy: Optional[EntropyReport] = None,
    fisher: Optional[FisherReport] = None,
    condition1_sweep=None,
) -> CheckResult:
    """Conditional entropy power inequality:
    2^{2H(X+Y)} >= 2^{2H(X|Y)} + 2^{2H(Y|X)}.

    The hypothesis (nonnegative cross-score along the whole flow) is
    attached as diagnostics, not enforced: the verdict reports what the
    numbers do either way.
    """
    er = entropy if entropy is not None else entropy_report(joint)
    fr = fisher if fisher is not None else fisher_report(joint)
    diag = {"crossXY_t0": fr.crossXY, "hypothesis_holds_t0": bool(fr.crossXY >= -1e-6)}
    if condition1_sweep is not None:
        diag["hypothesis_holds_flow"] = bool(condition1_sweep.holds)
        diag["min_crossXY_flow"] = condition1_sweep.min_cross
    lhs = er.npW
    rhs = er.npXgY + er.npYgX
    return inequality_check("cepi", lhs, rhs, diagnostics=diag)


def check_mixing_sufficient(
    joint: Density2D, flow_samples: STrajectory
) -> CheckResult:
    """Covariance-vs-mixing sufficient condition for the flow hypothesis:
    at every sampled t,
    Cov(X,Y) >= v_X v_Y ψ(X_t,Y_t) sqrt(v_X J(X_t) v_Y J(Y_t) - 1)
    (sqrt argument clamped at zero).

    Sufficient, not necessary: with strong dependence it can fail while the
    cross-score stays nonnegative, which the diagnostics label rather than
    flag as an error.  When it does hold at all t, the cross-score must be
    nonnegative at all t; that implication is verified too.
    """
    rows = []
    worst = None
    for rec in flow_samples.samples:
        arg = rec.varX * rec.fisher.jX * rec.varY * rec.fisher.jY - 1.0
        rhs_t = rec.varX * rec.varY * rec.psi * math.sqrt(max(arg, 0.0))
        lhs_t = rec.covXY
        rows.append({"t": rec.t, "lhs": lhs_t, "rhs": rhs_t,
                     "crossXY": rec.fisher.crossXY, "clamped": bool(arg < 0.0)})
        if worst is None or (lhs_t - rhs_t) < (worst["lhs"] - worst["rhs"]):
            worst = rows[-1]
    holds_everywhere = all(r["lhs"] >= r["rhs"] - 1e-6 for r in rows)
    cond1_everywhere = all(r["crossXY"] >= -1e-6 for r in rows)
    diag = {
        "perSample": rows,
        "implication_ok": bool((not holds_everywhere) or cond1_everywhere),
        "sufficient_not_necessary": bool((not holds_everywhere) and cond1_everywhere),
    }
    if diag["sufficient_not_necessary"]:
        # the certificate is inconclusive, but the condition it certifies
        # holds anyway: report, do not fail
        diag["worst_lhs"] = worst["lhs"]
        diag["worst_rhs"] = worst["rhs"]
        return skipped_check(
            "mixing_sufficient",
            "sufficient-not-necessary: the covariance bound fails at some t "
            "while the cross-score stays nonnegative",
            diagnostics=diag,
        )
    return inequality_check(
        "mixing_sufficient", worst["lhs"], worst["rhs"], diagnostics=diag,
    )


def check_mixing_threshold(
    joint: Density2D, fisher: Optional[FisherReport] = None
) -> CheckResult:
    """Equal-marginal, unit-variance threshold J(X) <= sqrt(Cov/ψ + 1).

    Preconditions (skipping, not failing, when unmet): the two marginals
    agree pointwise within 1e-4 and have unit variance within 1e-3; ψ must
    be bounded away from zero for the right side to make sense.
    """
    if (joint.gx.lo, joint.gx.hi, joint.gx.n) != (joint.gy.lo, joint.gy.hi, joint.gy.n):
        return skipped_check("mixing_threshold", "marginals live on different grids")
    d_x = marginalize(joint, "X")
    d_y = marginalize(joint, "Y")
    max_dev = float(np.max(np.abs(d_x.values - d_y.values)))
    if max_dev > 1e-4:
        return skipped_check(
            "mixing_threshold",
            f"marginals differ pointwise by {max_dev:.2e} > 1e-4",
        )
    var_x = variance_1d(d_x)
    if abs(var_x - 1.0) > 1e-3:
        return skipped_check(
            "mixing_threshold",
            f"marginal variance {var_x:.4f} is not 1 within 1e-3",
        )
    fr = fisher if fisher is not None else fisher_report(joint)
    if fr.psi <= 1e-6:  # quadrature noise level: the input is independent
        return skipped_check(
            "mixing_threshold", "divide-by-zero-psi: independent input makes "
            "the threshold vacuous",
            diagnostics={"psi": fr.psi},
        )
    cov = moments_2d(joint)["cov"]
    threshold = math.sqrt(max(cov, 0.0) / fr.psi + 1.0)
    # requirement is J(X) <= threshold; lhs/rhs oriented so slack >= -tol
    # means "passes", per the CheckResult convention
    return inequality_check(
        "mixing_threshold", threshold, fr.jX,
        diagnostics={"jX": fr.jX, "threshold": threshold, "cov": cov,
                     "psi": fr.psi, "psiScope": "box-sup"},
    )
