"""Gaussian noise channels and the conditional-entropy-power flow.

Two perturbations are implemented:

* ``gaussian_smooth``: add one shot of N(0, C·dt) noise with a general PSD
  covariance C.  The kernel is factored through the Cholesky decomposition
  into an oblique pass along (L11, L21) and an axis pass along y, so the
  separable diagonal case costs exactly two 1-D convolutions.  The grid box
  is extended ahead of the kernel so no mass is pushed off the edge.

* ``run_cepi_flow``: the coupled noise schedule f' = 2^{2H(X_t|Y_t)},
  g' = 2^{2H(Y_t|X_t)} advanced by explicit Euler, recording entropy and
  Fisher reports plus the ratio
  s(t) = (2^{2H(X_t|Y_t)} + 2^{2H(Y_t|X_t)}) / 2^{2H(W_t)} at every step.
  A rerun at half the step size must reproduce the final s within 1e-3 or
  the run is rejected as step-size-insufficient.

Resolution policy: a Gaussian kernel sampled at grid spacing h is faithful
once its std exceeds 2h (the sampled kernel then sums to 1 within ~1e-30);
narrower kernels are refused.  The flow keeps its own steps legal by timing
grid decimation accordingly: an axis is coarsened (stride 2) only when the
density is oversampled AND the next step's kernel still exceeds twice the
coarser spacing.  Decimated grid points remain exactly on the fine grid, so
no interpolation artifacts enter the trajectory, and the expanding box stays
affordable.

Entropy derivatives in this module are in nats (H_nats = H_bits · ln 2);
this is the only place the conversion happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .density import (
    Density2D,
    Grid1D,
    make_density_2d,
    moments_2d,
    sum_density,
)
from .entropy import EntropyReport, entropy_1d, entropy_2d, entropy_report
from .errors import (
    InvalidParametersError,
    KernelUnderresolvedError,
    StepSizeInsufficientError,
)
from .results import CheckResult, equality_check, inequality_check, skipped_check
from .score import FisherReport, fisher_report, psi_mixing

LN2 = math.log(2.0)
KERNEL_TRUNC = 8.0       # kernel truncated at this many stds
BOX_EXTEND_SIGMA = 4.0   # box extension per unit of added noise std
MIN_KERNEL_RATIO = 2.0   # kernel std must exceed this many grid spacings
DECIMATE_RATIO = 6.0     # coarsen once smoothness/h exceeds this
DECIMATE_MIN_N = 129     # never decimate below this many points per axis
RICHARDSON_TOL = 1e-3


@dataclass(frozen=True)
class NoiseCovariance:
    """Covariance matrix C of the added Gaussian noise (variance units)."""

    c11: float
    c12: float
    c22: float

    def __post_init__(self):
        if self.c11 < 0 or self.c22 < 0:
            raise InvalidParametersError("noise variances must be nonnegative")
        if self.det < -1e-12 * max(self.c11 * self.c22, 1.0):
            raise InvalidParametersError("noise covariance must be PSD")

    @property
    def det(self) -> float:
        return self.c11 * self.c22 - self.c12 * self.c12

    @staticmethod
    def identity() -> "NoiseCovariance":
        return NoiseCovariance(1.0, 0.0, 1.0)

    @staticmethod
    def diag(a: float, b: float) -> "NoiseCovariance":
        return NoiseCovariance(a, 0.0, b)

    def min_positive_eigenvalue(self) -> float:
        tr = self.c11 + self.c22
        disc = math.sqrt(max((self.c11 - self.c22) ** 2 + 4 * self.c12**2, 0.0))
        eigs = [0.5 * (tr - disc), 0.5 * (tr + disc)]
        pos = [e for e in eigs if e > 1e-15 * max(tr, 1.0)]
        return min(pos) if pos else 0.0


def _gauss_kernel(sigma: float, h: float) -> np.ndarray:
    """Gaussian pdf sampled at grid spacing, truncated at KERNEL_TRUNC stds."""
    k0 = int(math.ceil(KERNEL_TRUNC * sigma / h))
    u = np.arange(-k0, k0 + 1) * h
    return np.exp(-0.5 * (u / sigma) ** 2) * h / (sigma * math.sqrt(2.0 * math.pi))


def _require_resolved(sigma: float, h: float, label: str) -> None:
    if sigma < MIN_KERNEL_RATIO * h:
        raise KernelUnderresolvedError(
            f"{label}: kernel std {sigma:.3g} is below "
            f"{MIN_KERNEL_RATIO}×h = {MIN_KERNEL_RATIO * h:.3g}; "
            "coarsen dt or refine the grid"
        )


def _embed(joint: Density2D, gx: Grid1D, gy: Grid1D, ox: int, oy: int) -> np.ndarray:
    out = np.zeros((gx.n, gy.n))
    out[ox : ox + joint.gx.n, oy : oy + joint.gy.n] = joint.values
    return out


def gaussian_smooth(
    joint: Density2D,
    cov: NoiseCovariance,
    dt: float,
    *,
    target_box: Optional[tuple[float, float, float, float]] = None,
) -> Density2D:
    """Density of (X,Y) + Z with Z ~ N(0, cov·dt).

    The grid box is auto-extended by BOX_EXTEND_SIGMA stds of the added
    noise per axis (or to ``target_box = (lox, hix, loy, hiy)`` if that is
    wider).  Each convolution pass requires its kernel std to exceed
    MIN_KERNEL_RATIO grid spacings, else KernelUnderresolvedError.
    """
    if dt <= 0:
        raise InvalidParametersError("dt must be positive")
    var_x, var_y = cov.c11 * dt, cov.c22 * dt
    if var_x == 0.0 and var_y == 0.0:
        return joint

    # box extension (old points stay exactly on the new grid)
    pad_x, pad_y = (
        BOX_EXTEND_SIGMA * math.sqrt(var_x),
        BOX_EXTEND_SIGMA * math.sqrt(var_y),
    )
    lox, hix = joint.gx.lo - pad_x, joint.gx.hi + pad_x
    loy, hiy = joint.gy.lo - pad_y, joint.gy.hi + pad_y
    if target_box is not None:
        lox, hix = min(lox, target_box[0]), max(hix, target_box[1])
        loy, hiy = min(loy, target_box[2]), max(hiy, target_box[3])
    gx, ox = joint.gx.extend_to(lox, hix)
    gy, oy = joint.gy.extend_to(loy, hiy)
    p = _embed(joint, gx, gy, ox, oy)

    if cov.c12 == 0.0:
        # separable fast path: independent axis kernels
        if var_x > 0.0:
            sx = math.sqrt(var_x)
            _require_resolved(sx, gx.h, "x-axis pass")
            p = _kernels.convolve_axis0(p, _gauss_kernel(sx, gx.h))
        if var_y > 0.0:
            sy = math.sqrt(var_y)
            _require_resolved(sy, gy.h, "y-axis pass")
            p = _kernels.convolve_axis1(p, _gauss_kernel(sy, gy.h))
    else:
        if cov.c11 <= 0.0:
            raise InvalidParametersError(
                "PSD covariance with c12 != 0 requires c11 > 0"
            )
        # Cholesky passes: Z = (L11·U, L21·U + L22·V), U,V iid N(0,1)
        l11 = math.sqrt(var_x)
        l21 = cov.c12 * dt / l11
        l22 = math.sqrt(max(var_y - l21 * l21, 0.0))
        _require_resolved(l11, gx.h, "oblique pass")
        du = gx.h / l11  # sample U so x-displacements land on grid points
        k0 = int(math.ceil(KERNEL_TRUNC / du))
        u = np.arange(-k0, k0 + 1) * du
        w = np.exp(-0.5 * u * u) * du / math.sqrt(2.0 * math.pi)
        shifts = np.arange(-k0, k0 + 1) * gx.h * (l21 / l11) / gy.h
        p = _kernels.shear_convolve(p, w, shifts)
        if l22 > 0.0:
            _require_resolved(l22, gy.h, "y-axis pass")
            p = _kernels.convolve_axis1(p, _gauss_kernel(l22, gy.h))

    meta = dict(joint.meta)
    meta["noise_var_x"] = meta.get("noise_var_x", 0.0) + var_x
    meta["noise_var_y"] = meta.get("noise_var_y", 0.0) + var_y
    return make_density_2d(gx, gy, p, "tabulated", meta=meta)


def density_at(joint: Density2D, cov: NoiseCovariance, t: float) -> Density2D:
    """The pair after accumulating noise N(0, C·t); t = 0 is the input."""
    if t < 0:
        raise InvalidParametersError("t must be nonnegative")
    if t == 0.0:
        return joint
    return gaussian_smooth(joint, cov, t)


def default_dt_fd(joint: Density2D, cov: NoiseCovariance) -> float:
    """Finite-difference step respecting the kernel resolution constraint."""
    lam = cov.min_positive_eigenvalue()
    h = max(joint.gx.h, joint.gy.h)
    if lam <= 0.0:
        return 1e-3
    return max(1e-3, (MIN_KERNEL_RATIO * h) ** 2 / lam)


def _entropy_nats(joint: Density2D) -> float:
    return entropy_2d(joint) * LN2


def _sum_entropy_nats(joint: Density2D) -> float:
    return entropy_1d(sum_density(joint)) * LN2


def check_de_bruijn(
    joint: Density2D,
    cov: NoiseCovariance,
    t: float,
    dt_fd: Optional[float] = None,
) -> CheckResult:
    """Entropy flow identity: dH/dt(X_t, Y_t) = ½ Σ C_ij J_ij at time t.

    The left side is a second-order finite difference of the joint entropy
    (nats) along the noise channel; the right side comes from the Fisher
    report of the time-t density.  Finite-difference and quadrature errors
    both contribute, hence the 1e-2 relative tolerance.
    """
    if dt_fd is None:
        dt_fd = default_dt_fd(joint, cov)
    at_t = density_at(joint, cov, t)
    fr = fisher_report(at_t)
    rhs = 0.5 * (cov.c11 * fr.jXX + 2.0 * cov.c12 * fr.jXY + cov.c22 * fr.jYY)
    if cov.c11 == cov.c12 == cov.c22 == 0.0:
        lhs, stencil = 0.0, "trivial"
    elif t >= 2.0 * dt_fd:
        h_m = _entropy_nats(density_at(joint, cov, t - dt_fd))
        h_p = _entropy_nats(density_at(joint, cov, t + dt_fd))
        lhs, stencil = (h_p - h_m) / (2.0 * dt_fd), "centered"
    else:
        h_0 = _entropy_nats(at_t)
        h_1 = _entropy_nats(density_at(joint, cov, t + dt_fd))
        h_2 = _entropy_nats(density_at(joint, cov, t + 2.0 * dt_fd))
        lhs, stencil = (-3.0 * h_0 + 4.0 * h_1 - h_2) / (2.0 * dt_fd), "forward"
    tol = 1e-2 * max(abs(lhs), abs(rhs)) + 1e-9
    return equality_check(
        "de_bruijn", lhs, rhs, tol,
        {"t": t, "dt_fd": dt_fd, "stencil": stencil,
         "cov": [cov.c11, cov.c12, cov.c22]},
    )


def entropy_gap_derivative(joint: Density2D, cov: NoiseCovariance) -> CheckResult:
    """Lower bound on d/dt [2H(X_t,Y_t) - 2H(W_t)] at t = 0.

    With a = J_XX - J_XY and b = J_YY - J_XY the derivative dominates
    (a²C11 - 2abC12 + b²C22)/(a+b), itself nonnegative for PSD C.  The
    derivative is measured with a second-order forward difference in nats.
    """
    fr = fisher_report(joint)
    a = fr.jXX - fr.jXY
    b = fr.jYY - fr.jXY
    # a + b = E[(rho1 - rho2)^2] >= 0; treat quadrature-noise-scale values
    # as degenerate (scores effectively identical, the bound is vacuous)
    if a + b <= 1e-4 * (fr.jXX + fr.jYY) + 1e-8:
        return skipped_check(
            "entropy_gap_derivative", "degenerate-denominator: a + b ~ 0",
            diagnostics={"a": a, "b": b},
        )
    rhs = (a * a * cov.c11 - 2.0 * a * b * cov.c12 + b * b * cov.c22) / (a + b)
    dt = default_dt_fd(joint, cov)

    def gap(tau: float) -> float:
        d = density_at(joint, cov, tau)
        return 2.0 * _entropy_nats(d) - 2.0 * _sum_entropy_nats(d)

    g0, g1, g2 = gap(0.0), gap(dt), gap(2.0 * dt)
    lhs = (-3.0 * g0 + 4.0 * g1 - g2) / (2.0 * dt)
    tol = 1e-2 * abs(rhs) + 1e-4
    return inequality_check(
        "entropy_gap_derivative", lhs, rhs, tol,
        {"a": a, "b": b, "dt_fd": dt,
         "rhs_nonnegative": bool(rhs >= -1e-12) if a * b >= 0 else None},
    )


# ---------------------------------------------------------------------------
# the conditional-EPI flow
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowSample:
    """One recorded flow step."""

    t: float
    f: float
    g: float
    s: float
    entropy: EntropyReport
    fisher: FisherReport
    psi: float
    covXY: float
    varX: float
    varY: float
    grid: tuple[int, int, float, float]  # (nx, ny, hx, hy)

    @property
    def sqrt_f_psi(self) -> float:
        return math.sqrt(max(self.f, 0.0)) * self.psi

    def to_json(self) -> dict:
        return {
            "t": self.t, "f": self.f, "g": self.g, "s": self.s,
            "entropy": self.entropy.to_json(), "fisher": self.fisher.to_json(),
            "psi": self.psi, "sqrtFPsi": self.sqrt_f_psi,
            "covXY": self.covXY, "varX": self.varX, "varY": self.varY,
            "grid": {"nx": self.grid[0], "ny": self.grid[1],
                     "hx": self.grid[2], "hy": self.grid[3]},
        }


CSV_COLUMNS = (
    "t", "f", "g", "hXgY", "hYgX", "hW", "jXX", "jYY", "jXY", "crossXY", "s",
    "psi", "sqrtFPsi", "covXY", "jX", "jY",
)


@dataclass(frozen=True)
class STrajectory:
    """Recorded flow trajectory plus its acceptance diagnostics."""

    samples: list[FlowSample]
    schedule: dict
    richardson_diff: Optional[float] = None

    def s_values(self) -> np.ndarray:
        return np.array([rec.s for rec in self.samples])

    def min_s_increment(self) -> float:
        s = self.s_values()
        return float(np.diff(s).min()) if len(s) > 1 else 0.0

    def csv_rows(self) -> list[list[float]]:
        rows = []
        for rec in self.samples:
            rows.append([
                rec.t, rec.f, rec.g,
                rec.entropy.hXgivenY, rec.entropy.hYgivenX, rec.entropy.hW,
                rec.fisher.jXX, rec.fisher.jYY, rec.fisher.jXY,
                rec.fisher.crossXY, rec.s,
                rec.psi, rec.sqrt_f_psi, rec.covXY,
                rec.fisher.jX, rec.fisher.jY,
            ])
        return rows

    def to_json(self) -> dict:
        return {
            "schedule": dict(sorted(self.schedule.items())),
            "richardsonDiff": self.richardson_diff,
            "samples": [rec.to_json() for rec in self.samples],
        }


@dataclass
class FlowState:
    """Mutable, single-owner state of one flow run."""

    joint: Density2D
    t: float = 0.0
    f: float = 0.0
    g: float = 0.0
    trajectory: list[FlowSample] = field(default_factory=list)


def _decimate_axis(grid: Grid1D, values: np.ndarray, axis: int) -> tuple[Grid1D, np.ndarray]:
    """Drop every second point along one axis (box preserved; a zero edge
    point is appended first when the count is even, at tail-level cost)."""
    n = grid.n
    if n % 2 == 0:
        grid = Grid1D(grid.lo, grid.hi + grid.h, n + 1)
        pad = [(0, 0), (0, 0)]
        pad[axis] = (0, 1)
        values = np.pad(values, pad)
    sl = [slice(None), slice(None)]
    sl[axis] = slice(None, None, 2)
    return grid.decimated(), values[tuple(sl)]


def _maybe_decimate(state: FlowState, feat: float, sig_x: float, sig_y: float) -> None:
    """Coarsen oversampled axes ahead of a smoothing step.

    An axis may be decimated only when (a) the density stays well resolved
    on the coarser grid (accumulated smoothing per spacing >= DECIMATE_RATIO,
    so >= DECIMATE_RATIO/2 afterwards) and (b) the upcoming kernel std
    ``sig`` still exceeds MIN_KERNEL_RATIO coarser spacings, so every
    convolution pass remains legal.
    """
    changed = True
    while changed:
        changed = False
        joint = state.joint
        smooth_x = math.hypot(feat, math.sqrt(max(state.f, 0.0)))
        smooth_y = math.hypot(feat, math.sqrt(max(state.g, 0.0)))
        gx, gy, vals = joint.gx, joint.gy, joint.values
        if (
            smooth_x / gx.h >= DECIMATE_RATIO
            and sig_x >= MIN_KERNEL_RATIO * 2 * gx.h
            and gx.n >= 2 * DECIMATE_MIN_N - 1
        ):
            gx, vals = _decimate_axis(gx, vals, 0)
            changed = True
        if (
            smooth_y / gy.h >= DECIMATE_RATIO
            and sig_y >= MIN_KERNEL_RATIO * 2 * gy.h
            and gy.n >= 2 * DECIMATE_MIN_N - 1
        ):
            gy, vals = _decimate_axis(gy, vals, 1)
            changed = True
        if changed:
            state.joint = make_density_2d(gx, gy, vals, "tabulated", meta=dict(joint.meta))


def _record(state: FlowState) -> FlowSample:
    er = entropy_report(state.joint)
    fr = fisher_report(state.joint)
    psi = psi_mixing(state.joint)
    mom = moments_2d(state.joint)
    s = (er.npXgY + er.npYgX) / er.npW
    sample = FlowSample(
        t=state.t, f=state.f, g=state.g, s=s, entropy=er, fisher=fr,
        psi=psi.value, covXY=mom["cov"], varX=mom["varX"], varY=mom["varY"],
        grid=(state.joint.gx.n, state.joint.gy.n, state.joint.gx.h, state.joint.gy.h),
    )
    state.trajectory.append(sample)
    return sample


def _run_flow_once(
    initial: Density2D,
    t_max: float,
    steps: int,
    stop_noise_multiple: Optional[float],
) -> list[FlowSample]:
    feat = float(initial.meta.get("feature_scale", 0.0))
    mom0 = moments_2d(initial)
    var_x0, var_y0 = mom0["varX"], mom0["varY"]
    box0 = (initial.gx.lo, initial.gx.hi, initial.gy.lo, initial.gy.hi)
    dt = t_max / steps

    state = FlowState(joint=initial)
    sample = _record(state)  # t = 0 on the pristine input grid
    for _ in range(steps):
        df = sample.entropy.npXgY * dt
        dg = sample.entropy.npYgX * dt
        f_new, g_new = state.f + df, state.g + dg
        _maybe_decimate(state, feat, math.sqrt(df), math.sqrt(dg))
        target = (
            box0[0] - BOX_EXTEND_SIGMA * math.sqrt(f_new),
            box0[1] + BOX_EXTEND_SIGMA * math.sqrt(f_new),
            box0[2] - BOX_EXTEND_SIGMA * math.sqrt(g_new),
            box0[3] + BOX_EXTEND_SIGMA * math.sqrt(g_new),
        )
        state.joint = gaussian_smooth(
            state.joint, NoiseCovariance.diag(df / dt, dg / dt), dt,
            target_box=target,
        )
        state.f, state.g, state.t = f_new, g_new, state.t + dt
        sample = _record(state)
        if (
            stop_noise_multiple is not None
            and state.f >= stop_noise_multiple * var_x0
            and state.g >= stop_noise_multiple * var_y0
        ):
            break
    return state.trajectory


def run_cepi_flow(
    initial: Density2D,
    t_max: float,
    steps: int,
    *,
    stop_noise_multiple: Optional[float] = None,
    richardson: bool = True,
) -> STrajectory:
    """Run the coupled flow and return the recorded trajectory.

    ``stop_noise_multiple`` ends the run early once both accumulated noise
    variances exceed that multiple of the initial variances (the horizon at
    which s is compared against 1).  With ``richardson`` on (default), the
    flow is rerun at half the step size and the final s of the two runs must
    agree within 1e-3 at their last common sample time.
    """
    if steps < 8:
        raise InvalidParametersError("flow needs steps >= 8")
    if t_max <= 0:
        raise InvalidParametersError("t_max must be positive")
    samples = _run_flow_once(initial, t_max, steps, stop_noise_multiple)
    schedule = {
        "tMax": t_max,
        "steps": steps,
        "dt": t_max / steps,
        "stopNoiseMultiple": stop_noise_multiple,
        "sampleTimes": [rec.t for rec in samples],
    }
    diff = None
    if richardson:
        half = _run_flow_once(initial, t_max, 2 * steps, stop_noise_multiple)
        k = min(len(samples) - 1, (len(half) - 1) // 2)
        diff = abs(samples[k].s - half[2 * k].s)
        if diff > RICHARDSON_TOL:
            raise StepSizeInsufficientError(
                f"half-step Richardson check failed: |Δs| = {diff:.2e} > "
                f"{RICHARDSON_TOL:.0e} at t = {samples[k].t:.4f}; increase steps",
                trajectory=STrajectory(samples, schedule, diff),
            )
    return STrajectory(samples, schedule, diff)


@dataclass(frozen=True)
class Condition1Sweep:
    """Cross-score expectation along the flow; the verdict is its minimum."""

    samples: list[tuple[float, float]]  # (t, E[rho_X rho_Y])
    min_cross: float
    holds: bool


def condition1_along_flow(
    initial: Optional[Density2D] = None,
    t_max: float = 0.5,
    steps: int = 32,
    *,
    trajectory: Optional[STrajectory] = None,
    **flow_kwargs,
) -> Condition1Sweep:
    """Record E[ρ_{X_t} ρ_{Y_t}] at every sampled t of the flow.

    Accepts a precomputed trajectory to avoid rerunning the flow.
    """
    if trajectory is None:
        if initial is None:
            raise InvalidParametersError("need either a density or a trajectory")
        trajectory = run_cepi_flow(initial, t_max, steps, **flow_kwargs)
    pairs = [(rec.t, rec.fisher.crossXY) for rec in trajectory.samples]
    min_cross = min(c for _, c in pairs)
    return Condition1Sweep(pairs, min_cross, min_cross >= -1e-6)
