"""Gridded probability densities, quadrature, marginals and sum densities.

Densities live on uniform grids and are integrated with the trapezoid rule:
second-order accurate on smooth densities and (for the families here, whose
tails decay faster than any polynomial) far better in practice.  Analytic
families carry closed-form score callables so downstream derivative
evaluation does not have to fall back to finite differences.

Conventions:
  * every density is renormalized at construction; the pre-renormalization
    mass is kept as a truncation-error diagnostic;
  * the default box spans 8 standard deviations of each marginal;
  * values arrays are frozen (read-only) after construction, so all
    operations on densities are pure and thread-safe.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import (
    GridTooSmallError,
    InvalidParametersError,
    NonFiniteInputError,
)

MASS_EPS = 1e-6          # allowed |mass - 1| before renormalization
P_FLOOR_REL = 1e-12      # density floor, relative to the peak value
DEFAULT_BOX_SIGMA = 8.0  # default box half-width in marginal std units
DEFAULT_N = 512


# ---------------------------------------------------------------------------
# grids and quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [lo, hi] with n points; point_i = lo + i*h."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise InvalidParametersError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 16:
            raise InvalidParametersError(f"grid needs n >= 16, got {self.n}")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def trap_weights(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        w[0] = w[-1] = self.h / 2.0
        return w

    def extend_to(self, lo_target: float, hi_target: float) -> tuple["Grid1D", int]:
        """Smallest grid with the same spacing covering the targets.

        Returns the new grid and the index offset of the old origin in it;
        old points stay exactly on the new grid.
        """
        h = self.h
        pad_lo = max(0, int(math.ceil((self.lo - lo_target) / h - 1e-9)))
        pad_hi = max(0, int(math.ceil((hi_target - self.hi) / h - 1e-9)))
        if pad_lo == 0 and pad_hi == 0:
            return self, 0
        return (
            Grid1D(self.lo - pad_lo * h, self.hi + pad_hi * h, self.n + pad_lo + pad_hi),
            pad_lo,
        )

    def decimated(self) -> "Grid1D":
        """Every second point (requires odd n so the box is preserved)."""
        if self.n % 2 == 0:
            raise InvalidParametersError("decimation needs an odd point count")
        return Grid1D(self.lo, self.hi, (self.n + 1) // 2)


def quadrature_1d(f: np.ndarray, grid: Grid1D) -> float:
    """Trapezoid-rule integral of gridded values."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (grid.n,):
        raise InvalidParametersError(f"expected {grid.n} values, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise NonFiniteInputError("quadrature input contains NaN or infinity")
    return float(np.dot(grid.trap_weights(), f))


def quadrature_2d(F: np.ndarray, gx: Grid1D, gy: Grid1D) -> float:
    """Trapezoid-rule integral over the product grid."""
    F = np.asarray(F, dtype=np.float64)
    if F.shape != (gx.n, gy.n):
        raise InvalidParametersError(
            f"expected shape {(gx.n, gy.n)}, got {F.shape}"
        )
    if not np.all(np.isfinite(F)):
        raise NonFiniteInputError("quadrature input contains NaN or infinity")
    return float(gx.trap_weights() @ F @ gy.trap_weights())


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _clean_nonnegative(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteInputError(f"{what} contains NaN or infinity")
    peak = float(values.max(initial=0.0))
    if peak <= 0.0:
        raise InvalidParametersError(f"{what} has no positive values")
    if float(values.min()) < -1e-9 * peak:
        raise InvalidParametersError(f"{what} has significantly negative values")
    return np.maximum(values, 0.0)


# ---------------------------------------------------------------------------
# density containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Density1D:
    """Normalized density values on a grid.

    ``score_values`` is the closed-form (or quadrature-exact) score p'/p on
    the grid when the density is analytic-backed; consumers fall back to
    finite differences of log p when it is None.
    """

    grid: Grid1D
    values: np.ndarray
    kind: str  # "analytic-backed" | "tabulated"
    score_values: Optional[np.ndarray] = None
    mass_pre_norm: float = 1.0

    def p_floor(self) -> float:
        return P_FLOOR_REL * float(self.values.max())

    def mask(self) -> np.ndarray:
        """True where the density is below the evaluation floor."""
        return self.values < self.p_floor()

    def mass(self) -> float:
        return quadrature_1d(self.values, self.grid)


def make_density_1d(
    grid: Grid1D,
    values: np.ndarray,
    kind: str,
    score_values: Optional[np.ndarray] = None,
) -> Density1D:
    values = _clean_nonnegative(values, "density")
    mass = quadrature_1d(values, grid)
    if mass <= 0.0:
        raise InvalidParametersError("density mass is zero")
    sv = None if score_values is None else _freeze(score_values)
    return Density1D(grid, _freeze(values / mass), kind, sv, mass)


@dataclass(frozen=True)
class Density2D:
    """Normalized joint density on a product grid.

    ``score1_fn``/``score2_fn`` evaluate the closed-form partial-log-density
    derivatives on meshgrid arrays when available.  ``meta`` records the
    originating family (name, parameters, independence flags) for report
    provenance and equality-case detection.
    """

    gx: Grid1D
    gy: Grid1D
    values: np.ndarray
    kind: str
    score1_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    score2_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    mass_pre_norm: float = 1.0
    meta: dict = field(default_factory=dict)

    def p_floor(self) -> float:
        return P_FLOOR_REL * float(self.values.max())

    def mask(self) -> np.ndarray:
        return self.values < self.p_floor()

    def mass(self) -> float:
        return quadrature_2d(self.values, self.gx, self.gy)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.gx.points(), self.gy.points(), indexing="ij")


def make_density_2d(
    gx: Grid1D,
    gy: Grid1D,
    values: np.ndarray,
    kind: str,
    score1_fn=None,
    score2_fn=None,
    meta: Optional[dict] = None,
) -> Density2D:
    values = _clean_nonnegative(values, "joint density")
    if values.shape != (gx.n, gy.n):
        raise InvalidParametersError(
            f"joint values shape {values.shape} does not match grids {(gx.n, gy.n)}"
        )
    mass = quadrature_2d(values, gx, gy)
    if mass <= 0.0:
        raise InvalidParametersError("joint density mass is zero")
    return Density2D(
        gx, gy, _freeze(values / mass), kind, score1_fn, score2_fn, mass,
        dict(meta or {}),
    )


# ---------------------------------------------------------------------------
# marginals, sum density, moments
# ---------------------------------------------------------------------------


def marginalize(joint: Density2D, axis: str) -> Density1D:
    """Integrate out one coordinate: p_X(x) = ∫ p(x,y) dy (axis="X").

    For analytic-backed joints the marginal score is computed from the exact
    identity p_X'(x) = ∫ ∂p/∂x (x,y) dy, which keeps quadrature as the only
    error source.
    """
    if axis not in ("X", "Y"):
        raise InvalidParametersError(f"axis must be 'X' or 'Y', got {axis!r}")
    if axis == "X":
        grid, wother = joint.gx, joint.gy.trap_weights()
        vals = joint.values @ wother
        score_fn = joint.score1_fn
    else:
        grid, wother = joint.gy, joint.gx.trap_weights()
        vals = wother @ joint.values
        score_fn = joint.score2_fn

    score_values = None
    if score_fn is not None:
        X, Y = joint.meshgrid()
        num = score_fn(X, Y) * joint.values
        num = num @ wother if axis == "X" else wother @ num
        floor = P_FLOOR_REL * float(vals.max())
        score_values = np.where(vals >= floor, num / np.maximum(vals, floor), 0.0)

    return make_density_1d(grid, vals, joint.kind, score_values)


def sum_grid(gx: Grid1D, gy: Grid1D) -> Grid1D:
    """Grid covering the support of X + Y; matches the joint spacing when
    the two axes share it."""
    return Grid1D(gx.lo + gy.lo, gx.hi + gy.hi, gx.n + gy.n - 1)


def slice_integral(field2d: np.ndarray, gx: Grid1D, gy: Grid1D) -> np.ndarray:
    """∫ field(x, w - x) dx on the sum grid, by trapezoid over the x grid
    with linear interpolation in y (exact when the spacings coincide)."""
    gw = sum_grid(gx, gy)
    rw = gw.h / gy.h
    rx = gx.h / gy.h
    return _kernels.slice_reduce(field2d, gx.trap_weights(), rw, rx, gw.n)


def sum_density(joint: Density2D) -> Density1D:
    """Density of W = X + Y: p_W(w) = ∫ p(x, w - x) dx."""
    gw = sum_grid(joint.gx, joint.gy)
    vals = slice_integral(joint.values, joint.gx, joint.gy)
    d = make_density_1d(gw, vals, "tabulated")
    if abs(d.mass_pre_norm - 1.0) > MASS_EPS:
        warnings.warn(
            f"sum density mass deviates by {d.mass_pre_norm - 1.0:.2e} before "
            "renormalization; the box may be too small",
            RuntimeWarning,
        )
    return d


def variance_1d(d: Density1D) -> float:
    x = d.grid.points()
    m = quadrature_1d(x * d.values, d.grid)
    return quadrature_1d((x - m) ** 2 * d.values, d.grid)


def product_density(dX: Density1D, dY: Density1D, meta: Optional[dict] = None) -> Density2D:
    """Joint density of an independent pair with the given marginals.

    When the marginals carry score values, the joint gains exact score
    callables (constant along the other axis).
    """
    vals = np.outer(dX.values, dY.values)
    score1_fn = score2_fn = None
    if dX.score_values is not None:
        sx, gx = dX.score_values, dX.grid

        def score1_fn(X, Y, _sx=sx, _gx=gx):
            return np.interp(X, _gx.points(), _sx)

    if dY.score_values is not None:
        sy, gy = dY.score_values, dY.grid

        def score2_fn(X, Y, _sy=sy, _gy=gy):
            return np.interp(Y, _gy.points(), _sy)

    base = {"family": "product", "params": {}, "is_product": True,
            "is_gaussian": False, "feature_scale": 0.0}
    base.update(meta or {})
    kind = "analytic-backed" if dX.kind == dY.kind == "analytic-backed" else "tabulated"
    return make_density_2d(dX.grid, dY.grid, vals, kind, score1_fn, score2_fn, base)


def moments_2d(joint: Density2D) -> dict:
    """Means, variances and covariance of the joint, by quadrature."""
    X, Y = joint.meshgrid()
    p = joint.values
    gx, gy = joint.gx, joint.gy
    mx = quadrature_2d(X * p, gx, gy)
    my = quadrature_2d(Y * p, gx, gy)
    return {
        "meanX": mx,
        "meanY": my,
        "varX": quadrature_2d((X - mx) ** 2 * p, gx, gy),
        "varY": quadrature_2d((Y - my) ** 2 * p, gx, gy),
        "cov": quadrature_2d((X - mx) * (Y - my) * p, gx, gy),
    }


# ---------------------------------------------------------------------------
# family specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    n: int = DEFAULT_N


@dataclass(frozen=True)
class FamilySpec:
    """A named density family plus parameters and an optional grid override.

    Loadable from a JSON document:
    ``{"name": ..., "params": {...}, "grid": {"lo": ..., "hi": ..., "n": ...}}``
    (plus ``"data"`` with a CSV path for the custom-tabulated family).
    """

    name: str
    params: dict = field(default_factory=dict)
    grid: Optional[GridSpec] = None
    data_path: Optional[str] = None

    @staticmethod
    def from_json(doc: dict) -> "FamilySpec":
        if not isinstance(doc, dict) or "name" not in doc:
            raise InvalidParametersError("family document needs a 'name' field")
        grid = None
        if doc.get("grid") is not None:
            g = doc["grid"]
            grid = GridSpec(float(g["lo"]), float(g["hi"]), int(g.get("n", DEFAULT_N)))
        params = {str(k): float(v) for k, v in (doc.get("params") or {}).items()}
        return FamilySpec(str(doc["name"]), params, grid, doc.get("data"))

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "params": dict(sorted(self.params.items()))}
        if self.grid is not None:
            out["grid"] = {"lo": self.grid.lo, "hi": self.grid.hi, "n": self.grid.n}
        if self.data_path is not None:
            out["data"] = self.data_path
        return out


FAMILY_DEFAULTS: dict[str, dict] = {
    "bivariate-gaussian": {
        "meanX": 0.0, "meanY": 0.0, "vX": 1.0, "vY": 1.0, "r": 0.0,
    },
    "gaussian-mixture": {
        "w": 0.5, "d": 1.5, "e": 0.0, "s": 1.0, "r": 0.0,
    },
    "quartic-fkg": {
        "b": 0.5, "standardize": 0.0,
    },
    "custom-tabulated": {},
}

FAMILY_DOC: dict[str, str] = {
    "bivariate-gaussian": "correlated normal pair; r is the correlation",
    "gaussian-mixture": "two-component mixture at (±d, ±e), component std s, corr r",
    "quartic-fkg": "density ∝ exp(-x^4 - y^4 + b·x·y); positively associated for b ≥ 0",
    "custom-tabulated": "user-supplied (x, y, p) CSV on a uniform grid",
}

FAMILY_ALIASES = {"gaussian": "bivariate-gaussian", "mixture": "gaussian-mixture"}


def canonical_family(name: str) -> str:
    return FAMILY_ALIASES.get(name, name)


def _resolve_params(spec: FamilySpec) -> dict:
    name = canonical_family(spec.name)
    if name not in FAMILY_DEFAULTS:
        raise InvalidParametersError(
            f"unknown family {spec.name!r}; known: {sorted(FAMILY_DEFAULTS)}"
        )
    params = dict(FAMILY_DEFAULTS[name])
    for k, v in spec.params.items():
        if k not in params:
            raise InvalidParametersError(f"unknown parameter {k!r} for {spec.name}")
        params[k] = v
    return params


def _grid_from_spec(spec: FamilySpec, default_half: float) -> Grid1D:
    if spec.grid is not None:
        return Grid1D(spec.grid.lo, spec.grid.hi, spec.grid.n)
    return Grid1D(-default_half, default_half, DEFAULT_N)


def _mass_captured_check(grid: Grid1D, raw_on_grid: float, pdf) -> float:
    """Compare the box integral against the same integrand on a doubled box.

    Returns the captured fraction; raises when more than MASS_EPS of the
    (extended-box) mass is truncated.
    """
    half = (grid.hi - grid.lo) / 2.0
    mid = (grid.hi + grid.lo) / 2.0
    ext, _ = Grid1D(grid.lo, grid.hi, grid.n).extend_to(mid - 2 * half, mid + 2 * half)
    Xe, Ye = np.meshgrid(ext.points(), ext.points(), indexing="ij")
    mass_ext = quadrature_2d(pdf(Xe, Ye), ext, ext)
    captured = raw_on_grid / mass_ext if mass_ext > 0 else 0.0
    if captured < 1.0 - MASS_EPS:
        raise GridTooSmallError(
            f"grid captures only {captured:.6f} of the density mass; widen the box"
        )
    return captured


# ---------------------------------------------------------------------------
# family builders
# ---------------------------------------------------------------------------


def _build_gaussian(spec: FamilySpec) -> Density2D:
    p = _resolve_params(spec)
    mx, my, vx, vy, r = p["meanX"], p["meanY"], p["vX"], p["vY"], p["r"]
    if vx <= 0 or vy <= 0:
        raise InvalidParametersError("variances must be positive")
    if not abs(r) < 1:
        raise InvalidParametersError(f"|r| must be < 1, got {r}")
    cov = r * math.sqrt(vx * vy)
    det = vx * vy - cov * cov
    a11, a12, a22 = vy / det, -cov / det, vx / det
    norm = 1.0 / (2.0 * math.pi * math.sqrt(det))

    def pdf(X, Y):
        dx, dy = X - mx, Y - my
        return norm * np.exp(-0.5 * (a11 * dx * dx + 2 * a12 * dx * dy + a22 * dy * dy))

    def score1(X, Y):
        return -(a11 * (X - mx) + a12 * (Y - my))

    def score2(X, Y):
        return -(a12 * (X - mx) + a22 * (Y - my))

    sx, sy = math.sqrt(vx), math.sqrt(vy)
    half = max(abs(mx) + DEFAULT_BOX_SIGMA * sx, abs(my) + DEFAULT_BOX_SIGMA * sy)
    grid = _grid_from_spec(spec, half)
    X, Y = np.meshgrid(grid.points(), grid.points(), indexing="ij")
    raw = pdf(X, Y)
    captured = _mass_captured_check(grid, quadrature_2d(raw, grid, grid), pdf)
    lam_min = 0.5 * (vx + vy - math.sqrt((vx - vy) ** 2 + 4 * cov * cov))
    meta = {
        "family": spec.name,
        "params": dict(sorted(p.items())),
        "is_product": r == 0.0,
        "is_gaussian": True,
        "mass_captured": captured,
        "feature_scale": math.sqrt(lam_min),
    }
    return make_density_2d(grid, grid, raw, "analytic-backed", score1, score2, meta)


def _build_mixture(spec: FamilySpec) -> Density2D:
    p = _resolve_params(spec)
    w, d, e, s, r = p["w"], p["d"], p["e"], p["s"], p["r"]
    if not (0.0 < w < 1.0):
        raise InvalidParametersError("mixture weight w must lie in (0, 1)")
    if s <= 0:
        raise InvalidParametersError("component std s must be positive")
    if not abs(r) < 1:
        raise InvalidParametersError(f"|r| must be < 1, got {r}")
    comps = [(w, d, e), (1.0 - w, -d, -e)]
    det = s**4 * (1 - r * r)
    a11 = a22 = s * s / det
    a12 = -r * s * s / det
    norm = 1.0 / (2.0 * math.pi * math.sqrt(det))

    def comp_pdfs(X, Y):
        out = []
        for cw, cx, cy in comps:
            dx, dy = X - cx, Y - cy
            out.append(
                cw * norm
                * np.exp(-0.5 * (a11 * dx * dx + 2 * a12 * dx * dy + a22 * dy * dy))
            )
        return out

    def pdf(X, Y):
        return sum(comp_pdfs(X, Y))

    def _score(X, Y, which):
        # log-space responsibilities: exact in the far tails, where forming
        # the component pdfs directly would underflow
        logs = []
        for cw, cx, cy in comps:
            dx, dy = X - cx, Y - cy
            logs.append(
                math.log(cw) - 0.5 * (a11 * dx * dx + 2 * a12 * dx * dy + a22 * dy * dy)
            )
        top = np.maximum(logs[0], logs[1])
        gammas = [np.exp(lg - top) for lg in logs]
        total = gammas[0] + gammas[1]  # >= 1 by construction
        num = np.zeros_like(total)
        for gam, (cw, cx, cy) in zip(gammas, comps):
            dx, dy = X - cx, Y - cy
            g = -(a11 * dx + a12 * dy) if which == 1 else -(a12 * dx + a22 * dy)
            num += gam * g
        return num / total

    def score1(X, Y):
        return _score(X, Y, 1)

    def score2(X, Y):
        return _score(X, Y, 2)

    mean_x, mean_y = (2 * w - 1) * d, (2 * w - 1) * e
    var_x = s * s + d * d - mean_x**2
    var_y = s * s + e * e - mean_y**2
    half = DEFAULT_BOX_SIGMA * math.sqrt(max(var_x, var_y))
    grid = _grid_from_spec(spec, half)
    X, Y = np.meshgrid(grid.points(), grid.points(), indexing="ij")
    raw = pdf(X, Y)
    captured = _mass_captured_check(grid, quadrature_2d(raw, grid, grid), pdf)
    meta = {
        "family": spec.name,
        "params": dict(sorted(p.items())),
        "is_product": e == 0.0 and r == 0.0,
        "is_gaussian": False,
        "mass_captured": captured,
        "feature_scale": s * math.sqrt(1.0 - abs(r)),
    }
    return make_density_2d(grid, grid, raw, "analytic-backed", score1, score2, meta)


def _quartic_probe_variance(alpha: float, beta: float) -> float:
    """Marginal variance of exp(-alpha(x^4+y^4) + beta·xy), by quadrature
    on a generous probe grid (the density is symmetric, mean zero)."""
    g = Grid1D(-6.0 / alpha**0.25, 6.0 / alpha**0.25, 257)
    X, Y = np.meshgrid(g.points(), g.points(), indexing="ij")
    raw = np.exp(-alpha * (X**4 + Y**4) + beta * X * Y)
    mass = quadrature_2d(raw, g, g)
    return quadrature_2d(X * X * raw, g, g) / mass


def _build_quartic(spec: FamilySpec) -> Density2D:
    p = _resolve_params(spec)
    b = p["b"]
    if b < 0:
        raise InvalidParametersError("quartic coupling b must be >= 0 (FKG property)")
    if b > 10:
        raise InvalidParametersError("quartic coupling b > 10 is outside the tested range")
    alpha, beta = 1.0, b
    if p["standardize"]:
        v0 = _quartic_probe_variance(1.0, b)
        # rescaling X -> X/sqrt(v0) maps the exponent coefficients this way
        alpha, beta = v0 * v0, b * v0

    def pdf(X, Y):
        return np.exp(-alpha * (X**4 + Y**4) + beta * X * Y)

    def score1(X, Y):
        return -4.0 * alpha * X**3 + beta * Y

    def score2(X, Y):
        return -4.0 * alpha * Y**3 + beta * X

    var = _quartic_probe_variance(alpha, beta)
    half = DEFAULT_BOX_SIGMA * math.sqrt(var)
    grid = _grid_from_spec(spec, half)
    X, Y = np.meshgrid(grid.points(), grid.points(), indexing="ij")
    raw = pdf(X, Y)
    captured = _mass_captured_check(grid, quadrature_2d(raw, grid, grid), pdf)
    meta = {
        "family": spec.name,
        "params": dict(sorted(p.items())),
        "is_product": b == 0.0,
        "is_gaussian": False,
        "mass_captured": captured,
        # conservative bandwidth: the shoulder of exp(-alpha x^4) is the
        # narrowest feature, at scale ~0.4 * alpha^(-1/4)
        "feature_scale": 0.4 / alpha**0.25,
    }
    return make_density_2d(grid, grid, raw, "analytic-backed", score1, score2, meta)


def tabulated_from_values(
    gx: Grid1D, gy: Grid1D, values: np.ndarray, meta: Optional[dict] = None
) -> Density2D:
    """Wrap raw gridded values as a tabulated joint density."""
    values = np.asarray(values, dtype=np.float64)
    mass = quadrature_2d(values, gx, gy)
    if abs(mass - 1.0) > 1e-3:
        warnings.warn(
            f"tabulated density mass {mass:.6f} deviates from 1 by more than 1e-3; "
            "renormalizing",
            RuntimeWarning,
        )
    base = {"family": "custom-tabulated", "params": {},
            "is_product": False, "is_gaussian": False}
    base.update(meta or {})
    return make_density_2d(gx, gy, values, "tabulated", meta=base)


def _grid_from_coords(coords: np.ndarray, what: str) -> Grid1D:
    u = np.unique(coords)
    if len(u) < 16:
        raise InvalidParametersError(f"tabulated {what} grid has fewer than 16 points")
    steps = np.diff(u)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(u[0]), abs(u[-1]), 1.0):
        raise InvalidParametersError(f"tabulated {what} grid is not uniform")
    return Grid1D(float(u[0]), float(u[-1]), len(u))


def tabulated_from_csv(path: str) -> Density2D:
    """Load a (x, y, p) CSV on a uniform product grid."""
    xs, ys, ps = [], [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, y, p = float(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError):
                if not xs:  # tolerate a single header line
                    continue
                raise InvalidParametersError(f"malformed CSV row: {row!r}")
            xs.append(x)
            ys.append(y)
            ps.append(p)
    if not xs:
        raise InvalidParametersError("no numeric (x, y, p) rows found in CSV")
    xs, ys, ps = np.array(xs), np.array(ys), np.array(ps)
    gx = _grid_from_coords(xs, "x")
    gy = _grid_from_coords(ys, "y")
    if len(ps) != gx.n * gy.n:
        raise InvalidParametersError(
            f"CSV has {len(ps)} rows; expected {gx.n}*{gy.n} for a complete grid"
        )
    values = np.zeros((gx.n, gy.n))
    ix = np.rint((xs - gx.lo) / gx.h).astype(int)
    iy = np.rint((ys - gy.lo) / gy.h).astype(int)
    values[ix, iy] = ps
    return tabulated_from_values(gx, gy, values)


def build_density(spec: FamilySpec) -> Density2D:
    """Construct the normalized joint density for a family specification."""
    name = canonical_family(spec.name)
    if name == "bivariate-gaussian":
        return _build_gaussian(spec)
    if name == "gaussian-mixture":
        return _build_mixture(spec)
    if name == "quartic-fkg":
        return _build_quartic(spec)
    if name == "custom-tabulated":
        if not spec.data_path:
            raise InvalidParametersError(
                "custom-tabulated family needs a 'data' CSV path"
            )
        return tabulated_from_csv(spec.data_path)
    raise InvalidParametersError(
        f"unknown family {spec.name!r}; known: {sorted(FAMILY_DEFAULTS)}"
    )


def list_families() -> dict[str, dict]:
    """Registered family names with parameter defaults and a description."""
    return {
        name: {"params": dict(FAMILY_DEFAULTS[name]), "doc": FAMILY_DOC[name]}
        for name in sorted(FAMILY_DEFAULTS)
    }
