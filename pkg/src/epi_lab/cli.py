"""Command-line harness: family registry, verification suites, flow runs.

Reports are deterministic: identical configuration produces byte-identical
JSON (floats serialize via repr, keys are sorted, no timestamps).  Output
files are written atomically (temp file + rename).

Exit codes: 0 all good, 1 at least one non-skipped check failed,
2 invalid configuration, 3 numerical failure (under-resolved kernel,
truncated grid, rejected flow step size).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from ._kernels import backend_name
from .density import (
    DEFAULT_N,
    FamilySpec,
    build_density,
    list_families,
    marginalize,
)
from .entropy import entropy_report
from .errors import (
    ConfigError,
    EpiLabError,
    InvalidParametersError,
    StepSizeInsufficientError,
)
from .flow import (
    NoiseCovariance,
    check_de_bruijn,
    condition1_along_flow,
    run_cepi_flow,
    CSV_COLUMNS,
)
from .gaussian_oracle import GaussianSpec, oracle_entropy, oracle_fisher
from .inequalities import (
    check_cepi,
    check_condition1,
    check_condition_takano,
    check_epi,
    check_mixing_sufficient,
    check_mixing_threshold,
    check_prop4,
    check_stam,
)
from .results import CheckResult, inequality_check, skipped_check
from .score import fisher_report, m_identity_check

STATIC_CHECKS = (
    "epi", "stam", "prop4", "condition1", "takano", "cepi",
    "m_identity", "de_bruijn", "mixing_threshold",
)
FLOW_CHECKS = ("cepi_flow", "condition1_flow", "mixing_sufficient", "psi_flow")
ALL_CHECK_NAMES = STATIC_CHECKS + FLOW_CHECKS

S_MONOTONE_SLACK = 1e-4
S_HORIZON_TOL = 0.02
PSI_FLOW_SLACK = 1e-6


@dataclass
class RunConfig:
    """Validated run configuration for the verify/flow commands."""

    family: FamilySpec
    checks: list[str] = field(default_factory=lambda: ["all"])
    t_max: float = 0.6
    steps: int = 96
    stop_noise_multiple: Optional[float] = 100.0
    output_format: str = "json"
    output_path: Optional[str] = None
    tolerances: dict = field(default_factory=dict)  # check name -> override

    def resolved_checks(self) -> list[str]:
        out: list[str] = []
        for name in self.checks:
            if name == "all":
                out.extend(STATIC_CHECKS)
            elif name == "all-flow":
                out.extend(STATIC_CHECKS)
                out.extend(FLOW_CHECKS)
            elif name in ALL_CHECK_NAMES:
                out.append(name)
            else:
                raise ConfigError(
                    f"unknown check {name!r}; known: "
                    f"{', '.join(ALL_CHECK_NAMES)}, all, all-flow"
                )
        seen, uniq = set(), []
        for name in out:
            if name not in seen:
                seen.add(name)
                uniq.append(name)
        return uniq

    def to_json(self) -> dict:
        # the report destination is not part of the verification config,
        # so identical runs stay byte-identical wherever they are written
        return {
            "family": self.family.to_json(),
            "checks": list(self.checks),
            "flow": {
                "tMax": self.t_max,
                "steps": self.steps,
                "stopNoiseMultiple": self.stop_noise_multiple,
            },
            "tolerances": dict(sorted(self.tolerances.items())),
        }


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    doc: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc

    fam_doc = dict(doc.get("family") or {})
    if args.family:
        fam_doc["name"] = args.family
    if "name" not in fam_doc:
        raise ConfigError("no family given (use --family or a config file)")
    params = dict(fam_doc.get("params") or {})
    if args.r is not None:
        params["r"] = args.r
    if args.b is not None:
        params["b"] = args.b
    fam_doc["params"] = params
    if args.box is not None:
        fam_doc["grid"] = {
            "lo": -args.box, "hi": args.box,
            "n": args.grid_n or (fam_doc.get("grid") or {}).get("n", DEFAULT_N),
        }
    elif args.grid_n is not None:
        if fam_doc.get("grid"):
            fam_doc["grid"]["n"] = args.grid_n
        else:
            raise ConfigError("--grid-n without --box needs a grid in the config file")
    family = FamilySpec.from_json(fam_doc)

    checks = doc.get("checks", ["all"])
    if args.checks:
        checks = [c.strip() for c in args.checks.split(",") if c.strip()]

    flow_doc = dict(doc.get("flow") or {})
    out_doc = dict(doc.get("output") or {})
    cfg = RunConfig(
        family=family,
        checks=list(checks),
        t_max=args.t_max if args.t_max is not None else float(flow_doc.get("tMax", 0.6)),
        steps=args.steps if args.steps is not None else int(flow_doc.get("steps", 96)),
        stop_noise_multiple=flow_doc.get("stopNoiseMultiple", 100.0),
        output_format=args.format or out_doc.get("format", "json"),
        output_path=args.output or out_doc.get("path"),
        tolerances={str(k): float(v)
                    for k, v in (doc.get("tolerances") or {}).items()},
    )
    if cfg.output_format not in ("json", "csv", "table"):
        raise ConfigError(f"unknown format {cfg.output_format!r}")
    if cfg.t_max <= 0:
        raise ConfigError("t_max must be positive")
    cfg.resolved_checks()
    return cfg


# ---------------------------------------------------------------------------
# check runners
# ---------------------------------------------------------------------------


def _flow_verdicts(trajectory, sweep) -> list[CheckResult]:
    """s-monotonicity, horizon, hypothesis sweep and ψ verdicts for a flow."""
    out: list[CheckResult] = []
    s = trajectory.s_values()
    first, last = trajectory.samples[0], trajectory.samples[-1]
    diag = {
        "sampleTimes": [rec.t for rec in trajectory.samples],
        "richardsonDiff": trajectory.richardson_diff,
    }
    if sweep.holds:
        out.append(inequality_check(
            "cepi_flow_monotone", trajectory.min_s_increment(), 0.0,
            S_MONOTONE_SLACK, diag,
        ))
        horizon = {"f": last.f, "g": last.g, "varX0": first.varX, "varY0": first.varY}
        reached = (
            trajectory.schedule.get("stopNoiseMultiple") is not None
            and last.f >= trajectory.schedule["stopNoiseMultiple"] * first.varX
            and last.g >= trajectory.schedule["stopNoiseMultiple"] * first.varY
        )
        if reached:
            out.append(inequality_check(
                "cepi_flow_horizon", S_HORIZON_TOL, abs(float(s[-1]) - 1.0),
                0.0, {**horizon, "sFinal": float(s[-1])},
            ))
        else:
            out.append(skipped_check(
                "cepi_flow_horizon", "noise horizon not reached within t_max",
                diagnostics=horizon,
            ))
    else:
        reason = "hypothesis-failed: cross-score went negative along the flow"
        out.append(skipped_check("cepi_flow_monotone", reason,
                                 diagnostics={"minCrossXY": sweep.min_cross}))
        out.append(skipped_check("cepi_flow_horizon", reason,
                                 diagnostics={"minCrossXY": sweep.min_cross}))
    out.append(inequality_check(
        "condition1_flow", sweep.min_cross, 0.0, 1e-6,
        {"samples": [{"t": t, "crossXY": c} for t, c in sweep.samples]},
    ))
    psi0 = first.psi
    worst = max(rec.psi for rec in trajectory.samples)
    out.append(inequality_check(
        "psi_flow", psi0 + PSI_FLOW_SLACK, worst, 0.0,
        {"psi0": psi0, "worstPsi": worst, "scope": "box-sup"},
    ))
    return out


def _run_checks(cfg: RunConfig, joint) -> tuple[list[CheckResult], Optional[object]]:
    names = cfg.resolved_checks()
    fisher = fisher_report(joint)
    entropy = entropy_report(joint)

    trajectory = sweep = None
    if any(n in FLOW_CHECKS for n in names):
        trajectory = run_cepi_flow(
            joint, cfg.t_max, cfg.steps,
            stop_noise_multiple=cfg.stop_noise_multiple,
        )
        sweep = condition1_along_flow(trajectory=trajectory)

    results: list[CheckResult] = []
    for name in names:
        if name == "epi":
            results.append(check_epi(joint, entropy, fisher))
        elif name == "stam":
            results.append(check_stam(marginalize(joint, "X"), marginalize(joint, "Y")))
        elif name == "prop4":
            results.append(check_prop4(joint, fisher))
        elif name == "condition1":
            results.append(check_condition1(joint, fisher))
        elif name == "takano":
            results.append(check_condition_takano(joint, fisher))
        elif name == "cepi":
            results.append(check_cepi(joint, entropy, fisher, sweep))
        elif name == "m_identity":
            results.append(m_identity_check(joint, fisher))
        elif name == "de_bruijn":
            results.append(check_de_bruijn(joint, NoiseCovariance.identity(), t=0.25))
        elif name == "mixing_threshold":
            results.append(check_mixing_threshold(joint, fisher))
        elif name == "cepi_flow":
            results.extend(_flow_verdicts(trajectory, sweep)[:2])
        elif name == "condition1_flow":
            results.append(inequality_check(
                "condition1_flow", sweep.min_cross, 0.0, 1e-6,
                {"samples": [{"t": t, "crossXY": c} for t, c in sweep.samples]},
            ))
        elif name == "psi_flow":
            psi0 = trajectory.samples[0].psi
            worst = max(rec.psi for rec in trajectory.samples)
            results.append(inequality_check(
                "psi_flow", psi0 + PSI_FLOW_SLACK, worst, 0.0,
                {"psi0": psi0, "worstPsi": worst, "scope": "box-sup"},
            ))
        elif name == "mixing_sufficient":
            results.append(check_mixing_sufficient(joint, trajectory))
    results = [_apply_tolerance_override(r, cfg.tolerances) for r in results]
    return results, trajectory


def _apply_tolerance_override(result: CheckResult, overrides: dict) -> CheckResult:
    if result.skipped or result.name not in overrides:
        return result
    tol = float(overrides[result.name])
    if result.mode == "equality-case":
        passed = abs(result.slack) <= tol
    else:
        passed = result.slack >= -tol
    return dataclasses.replace(result, tolerance=tol, passed=passed)


def _provenance(joint) -> dict:
    return {
        "backend": backend_name(),
        "source": "quadrature",
        "grid": {
            "nx": joint.gx.n, "ny": joint.gy.n,
            "hx": joint.gx.h, "hy": joint.gy.h,
            "boxX": [joint.gx.lo, joint.gx.hi],
            "boxY": [joint.gy.lo, joint.gy.hi],
        },
        "massPreNorm": joint.mass_pre_norm,
        "familyMeta": {k: v for k, v in sorted(joint.meta.items())
                       if isinstance(v, (int, float, bool, str))},
        "tolerancePolicy": "inequalities 1e-4*max(|lhs|,|rhs|)+1e-6 unless stated",
    }


def _oracle_block(joint) -> Optional[dict]:
    """Closed-form reference values for Gaussian inputs (source: oracle)."""
    if not joint.meta.get("is_gaussian"):
        return None
    p = joint.meta["params"]
    spec = GaussianSpec.from_correlation(
        p["r"], p["vX"], p["vY"], p["meanX"], p["meanY"]
    )
    return {
        "source": "oracle",
        "fisher": oracle_fisher(spec),
        "entropy": oracle_entropy(spec),
    }


def _verify_report(cfg: RunConfig, joint, results: list[CheckResult]) -> dict:
    report = {
        "schemaVersion": 1,
        "tool": {"name": "epi-lab", "version": __version__},
        "config": cfg.to_json(),
        "provenance": _provenance(joint),
        "fisher": fisher_report(joint).to_json(),
        "entropy": entropy_report(joint).to_json(),
        "checks": [r.to_json() for r in results],
    }
    oracle = _oracle_block(joint)
    if oracle is not None:
        report["oracleReference"] = oracle
    return report


# ---------------------------------------------------------------------------
# output formatting
# ---------------------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".epi-lab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        _atomic_write(path, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _fmt_cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _checks_table(results: list[CheckResult]) -> str:
    header = (f"{'check':<22} {'lhs':>13} {'rhs':>13} {'slack':>13} "
              f"{'tol':>10}  {'status':<5} {'mode'}")
    lines = [header, "-" * len(header)]
    for r in results:
        status = "SKIP" if r.skipped else ("PASS" if r.passed else "FAIL")
        lines.append(
            f"{r.name:<22} {_fmt_cell(r.lhs):>13} {_fmt_cell(r.rhs):>13} "
            f"{_fmt_cell(r.slack):>13} {_fmt_cell(r.tolerance):>10}  {status:<5} {r.mode}"
        )
    return "\n".join(lines) + "\n"


def _checks_csv(results: list[CheckResult]) -> str:
    lines = ["name,lhs,rhs,slack,pass,tolerance,mode,skipped"]
    for r in results:
        lines.append(",".join([
            r.name, _fmt_csv(r.lhs), _fmt_csv(r.rhs), _fmt_csv(r.slack),
            str(r.passed).lower(), _fmt_csv(r.tolerance), r.mode,
            str(r.skipped).lower(),
        ]))
    return "\n".join(lines) + "\n"


def _fmt_csv(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _trajectory_csv(trajectory) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in trajectory.csv_rows():
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _exit_status(results: list[CheckResult]) -> int:
    return 1 if any((not r.passed) and (not r.skipped) for r in results) else 0


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> int:
    joint = build_density(cfg.family)
    results, _ = _run_checks(cfg, joint)
    if cfg.output_format == "json":
        text = _dump_json(_verify_report(cfg, joint, results))
    elif cfg.output_format == "table":
        text = _checks_table(results)
    else:
        text = _checks_csv(results)
    _emit(text, cfg.output_path)
    return _exit_status(results)


def cmd_flow(cfg: RunConfig) -> int:
    joint = build_density(cfg.family)
    trajectory = run_cepi_flow(
        joint, cfg.t_max, cfg.steps, stop_noise_multiple=cfg.stop_noise_multiple
    )
    sweep = condition1_along_flow(trajectory=trajectory)
    verdicts = _flow_verdicts(trajectory, sweep)
    verdicts.append(check_de_bruijn(joint, NoiseCovariance.identity(), t=0.25))
    verdicts.append(check_mixing_sufficient(joint, trajectory))

    banner = None
    if not sweep.holds:
        banner = ("hypothesis failed: cross-score negative along the flow; "
                  "monotonicity not asserted")
        print(f"epi-lab flow: {banner}", file=sys.stderr)

    if cfg.output_format == "csv":
        text = _trajectory_csv(trajectory)
    elif cfg.output_format == "table":
        text = _checks_table(verdicts)
    else:
        doc = {
            "schemaVersion": 1,
            "config": cfg.to_json(),
            "provenance": _provenance(joint),
            "trajectory": trajectory.to_json(),
            "checks": [r.to_json() for r in verdicts],
        }
        if banner:
            doc["banner"] = banner
        text = _dump_json(doc)
    _emit(text, cfg.output_path)
    return _exit_status(verdicts)


def cmd_list_families(as_json: bool) -> int:
    fams = list_families()
    if as_json:
        sys.stdout.write(_dump_json(fams))
        return 0
    for name, info in fams.items():
        sys.stdout.write(f"{name}: {info['doc']}\n")
        if info["params"]:
            pairs = ", ".join(f"{k}={v}" for k, v in sorted(info["params"].items()))
            sys.stdout.write(f"    defaults: {pairs}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epi-lab",
        description="verify entropy power and Fisher information inequalities "
                    "for dependent bivariate variables",
    )
    parser.add_argument("--version", action="version", version=f"epi-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--family", help="family name (see list-families)")
        p.add_argument("--r", type=float, help="correlation parameter")
        p.add_argument("--b", type=float, help="quartic coupling parameter")
        p.add_argument("--grid-n", type=int, help="grid points per axis")
        p.add_argument("--box", type=float, help="box half-width (grid spans [-box, box])")
        p.add_argument("--t-max", type=float, help="flow horizon")
        p.add_argument("--steps", type=int, help="flow step count")
        p.add_argument("--checks", help="comma-separated checks, or all / all-flow")
        p.add_argument("--output", help="write the report to this path (atomic)")
        p.add_argument("--format", choices=("json", "csv", "table"),
                       help="report format (default json)")

    add_common(sub.add_parser("verify", help="run inequality checks on one family"))
    add_common(sub.add_parser("flow", help="run the conditional-EPI flow and export the trajectory"))
    lf = sub.add_parser("list-families", help="print registered families")
    lf.add_argument("--json", action="store_true", help="machine-readable output")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-families":
            return cmd_list_families(args.json)
        cfg = _config_from_args(args)
        if args.command == "verify":
            return cmd_verify(cfg)
        return cmd_flow(cfg)
    except (ConfigError, InvalidParametersError) as exc:
        print(f"epi-lab: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except StepSizeInsufficientError as exc:
        print(f"epi-lab: numerical failure: {exc}", file=sys.stderr)
        return 3
    except EpiLabError as exc:
        print(f"epi-lab: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
