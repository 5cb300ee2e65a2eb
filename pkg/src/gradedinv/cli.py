"""Configuration-driven command line tying the pipeline together.

Three commands.  `invert` solves phi(s, y(s)) = target for y near y0 and
writes the iteration table (result.csv) and the solution coefficients
(solution.txt).  `certify` builds the tameness generator at the base
point and writes a key: value report (generator.txt) with the closure,
inclusion, and contraction verdicts.  `selftest` replays the reduced
property suites.

Exit codes: 0 success, 2 configuration error, 3 certificate failure,
4 numeric failure, 1 unexpected crash or self-test failure.  Every
failure prints a single JSON object on standard error.  Output files are
written to a temporary name and renamed, so a crash never leaves a
partial file, and identical config + seed produces byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, fields, replace
from typing import List, Optional, Tuple

import numpy as np

from . import expressions as ex
from .composition import CompositionOperator, InclusionReport
from .errors import (
    ConfigError,
    ConstructionError,
    EtaRangeError,
    EvaluationError,
    GradedInvError,
    MembershipError,
    NumericOverflowError,
    PremiseViolationError,
    SingularDerivativeError,
    TargetNotAdmissibleError,
    ThetaDomainError,
)
from .gauge import Grading, gauge_norm, grading_from_text
from .newton import newton_invert
from .selfcheck import run_suites
from .smoothfn import GridConfig, SmoothFn, project
from .tameness import GeneratorFamily, build_generator

EXIT_OK = 0
EXIT_CRASH = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3
EXIT_NUMERIC = 4

MAX_WIDENINGS = 16

_NUMERIC_ERRORS = (
    NumericOverflowError,
    SingularDerivativeError,
    ThetaDomainError,
    ConstructionError,
    EvaluationError,
    EtaRangeError,
    OverflowError,
    FloatingPointError,
    ZeroDivisionError,
)


@dataclass(frozen=True)
class RunConfig:
    """One run's knobs; everything downstream is derived from these."""

    phi: str
    y0: str = "0"
    target: str = "0"
    D: int = 64
    M: int = 257
    N: int = 6
    l0: int = 2
    quad_nodes: int = 32
    epsilon: float = 0.5
    tol: float = 1e-12
    samples: int = 64
    pairs: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.phi.strip():
            raise ConfigError("phi must be a nonempty expression")
        checks = (
            (1 <= self.D <= 256, "D must be in 1..256"),
            (self.M >= self.D + 1, "M must be at least D+1"),
            (1 <= self.N <= 12, "N must be in 1..12"),
            (1 <= self.l0 <= self.N, "l0 must be in 1..N"),
            (self.quad_nodes >= 2, "quad_nodes must be at least 2"),
            (0.0 < self.epsilon <= 0.5, "epsilon must lie in (0, 1/2]"),
            (self.tol > 0.0, "tol must be positive"),
            (self.samples >= 1, "samples must be at least 1"),
            (self.pairs >= 1, "pairs must be at least 1"),
            (self.seed >= 0, "seed must be nonnegative"),
        )
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def grid(self) -> GridConfig:
        return GridConfig(D=self.D, M=self.M, N=self.N)


_STR_FIELDS = ("phi", "y0", "target")
_INT_FIELDS = ("D", "M", "N", "l0", "quad_nodes", "samples", "pairs", "seed")
_REAL_FIELDS = ("epsilon", "tol")


def parse_config(text: str) -> RunConfig:
    """RunConfig from a JSON object or flat key=value lines.

    Unknown keys are rejected rather than ignored: a typo in a tuning
    knob must not silently fall back to a default.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
        entries = {str(k): v for k, v in raw.items()}
    else:
        entries = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            if "=" not in body:
                raise ConfigError(f"line {lineno}: expected key=value, got {body!r}")
            key, _, value = body.partition("=")
            key = key.strip()
            if key in entries:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            entries[key] = value.strip()

    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(entries) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    kwargs = {}
    for key, value in entries.items():
        try:
            if key in _STR_FIELDS:
                if not isinstance(value, str):
                    raise ConfigError(f"{key} must be a string")
                kwargs[key] = value
            elif key in _INT_FIELDS:
                if isinstance(value, bool) or (
                    not isinstance(value, (int, str))
                ):
                    raise ConfigError(f"{key} must be an integer")
                kwargs[key] = int(value)
            else:
                assert key in _REAL_FIELDS
                kwargs[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    if "phi" not in kwargs:
        raise ConfigError("config must set phi")
    if "M" not in kwargs and "D" in kwargs:
        kwargs["M"] = 4 * kwargs["D"] + 1
    return RunConfig(**kwargs)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _contains_eta(e: ex.Expr) -> bool:
    if isinstance(e, ex.Var):
        return e.name == "eta"
    if isinstance(e, (ex.Sum, ex.Prod, ex.Quot)):
        return _contains_eta(e.a) or _contains_eta(e.b)
    if isinstance(e, ex.Pow):
        return _contains_eta(e.base)
    if isinstance(e, ex.Fun):
        return _contains_eta(e.arg)
    return False


def scalar_function(text: str, grid: GridConfig, what: str) -> SmoothFn:
    """Projects an expression in s alone onto the working grid."""
    expr = ex.parse(text)
    if _contains_eta(expr):
        raise ConfigError(f"{what} must be an expression in s only: {text!r}")
    vals = ex.eval_grid(expr, grid.nodes, 0.0)
    return project(np.broadcast_to(vals, grid.nodes.shape).astype(float), grid)


def _load_grading(path: Optional[str]) -> Optional[Grading]:
    if path is None:
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return grading_from_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read grading {path}: {exc}") from exc


def atomic_write(directory: str, name: str, content: str) -> str:
    """Writes content under a temporary name, then renames into place."""
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        final = os.path.join(directory, name)
        os.replace(tmp, final)
        return final
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fail(code: int, kind: str, message: str) -> int:
    print(
        json.dumps({"error": kind, "message": message, "exit": code}),
        file=sys.stderr,
    )
    return code


def _build_pipeline(
    cfg: RunConfig, base: SmoothFn, reach: float
) -> Tuple[CompositionOperator, GeneratorFamily]:
    """Operator over a symmetric eta box of the given reach, plus its
    generator family at the base point.  The family's kernel sups do not
    depend on the box, so widening only re-validates the domain."""
    phi = ex.parse(cfg.phi)
    op = CompositionOperator(phi, cfg.grid, eta_range=(-reach, reach))
    family = build_generator(op, base, l0=cfg.l0, N=cfg.N, quad_nodes=cfg.quad_nodes)
    return op, family


def _initial_reach(values: np.ndarray) -> float:
    # Headroom past the base values: certificate disks evaluate at
    # y0 + 2u with gauge(u) <= 1, and canonical m_0 never exceeds 1/3.
    return max(1.0, 1.001 * (float(np.max(np.abs(values))) + 1.0))


def cmd_invert(cfg: RunConfig, out_dir: str, grading_path: Optional[str]) -> int:
    y0 = scalar_function(cfg.y0, cfg.grid, "y0")
    target = scalar_function(cfg.target, cfg.grid, "target")

    override = _load_grading(grading_path)
    reach = _initial_reach(
        np.concatenate([y0.node_values(), target.node_values()])
    )
    result = None
    for attempt in range(MAX_WIDENINGS):
        try:
            op, family = _build_pipeline(cfg, y0, reach)
            if override is not None:
                m = override
            else:
                # Dilate the canonical grading so the transported defect of
                # this target sits exactly on the unit disk boundary.
                canonical = family.canonical_member()
                v0 = op.inv_deriv_apply(y0, target - op.apply(y0))
                m = canonical.scaled(max(1.0, gauge_norm(v0, canonical)))
            result = newton_invert(op, y0, target, m, cfg.epsilon, cfg.tol)
            break
        except EtaRangeError:
            if attempt == MAX_WIDENINGS - 1:
                raise
            reach *= 2.0
    assert result is not None

    atomic_write(out_dir, "result.csv", result.to_csv())
    atomic_write(out_dir, "solution.txt", result.y.to_text())
    if not result.certified.all_ok():
        flags = result.certified
        broken = [
            name
            for name, ok in (
                ("cauchy", flags.cauchy_ok),
                ("domain", flags.domain_ok),
                ("lipschitz", flags.lipschitz_ok),
            )
            if not ok
        ]
        return _fail(
            EXIT_CERTIFICATE,
            "CertificateFailure",
            f"inversion certificates failed: {', '.join(broken)}",
        )
    return EXIT_OK


def _certify_report(
    cfg: RunConfig,
    family: GeneratorFamily,
    m: Grading,
    closure,
    inclusion: Optional[InclusionReport],
    contraction: Optional[float],
    witness: Optional[str],
) -> str:
    lines = [f"phi: {cfg.phi}", f"epsilon: {cfg.epsilon!r}"]
    lines.extend(family.report_lines())
    lines.append(f"grading: {' '.join(repr(v) for v in m)}")
    if closure is not None:
        lines.append(f"closure_ok: {str(closure.ok).lower()}")
        lines.append(f"closure_half_disk_ok: {str(closure.half_v0_ok).lower()}")
        lines.append(f"closure_worst_gauge: {closure.worst_gauge!r}")
    if inclusion is not None:
        lines.append(f"inclusion_ok: {str(inclusion.ok).lower()}")
        lines.append(f"inclusion_worst_ratio: {inclusion.worst_ratio!r}")
    if contraction is not None:
        lines.append(f"contraction_ratio: {contraction!r}")
        lines.append(f"contraction_ok: {str(contraction <= cfg.epsilon).lower()}")
    verdict = (
        witness is None
        and closure is not None
        and closure.ok
        and closure.half_v0_ok
        and inclusion is not None
        and inclusion.ok
        and contraction is not None
        and contraction <= cfg.epsilon
    )
    lines.append(f"verdict: {'pass' if verdict else 'fail'}")
    if witness is not None:
        lines.append(f"witness: {witness}")
    return "\n".join(lines) + "\n"


def cmd_certify(cfg: RunConfig, out_dir: str, grading_path: Optional[str]) -> int:
    base = scalar_function(cfg.y0, cfg.grid, "y0")
    override = _load_grading(grading_path)
    reach = _initial_reach(base.node_values())
    for attempt in range(MAX_WIDENINGS):
        try:
            op, family = _build_pipeline(cfg, base, reach)
            m = family.canonical_member() if override is None else override

            witness: Optional[str] = None
            closure = inclusion = contraction = None
            if not family.is_member(m):
                witness = (
                    "grading is not a member of the generator family: "
                    + " ".join(repr(v) for v in m)
                )
            else:
                closure = family.verify_closure(m, samples=cfg.samples, seed=cfg.seed)
                inclusion = op.inclusion_check(
                    base, cfg.epsilon, m, samples=cfg.samples, seed=cfg.seed
                )
                contraction = op.contraction_ratio(
                    base, m, pairs=cfg.pairs, seed=cfg.seed
                )
                if not (closure.ok and closure.half_v0_ok):
                    witness = "closure bound violated by the reported sample pair"
                elif not inclusion.ok:
                    witness = (
                        f"inclusion ratio {inclusion.worst_ratio!r} exceeds "
                        f"epsilon {cfg.epsilon!r}"
                    )
                elif contraction > cfg.epsilon:
                    witness = (
                        f"contraction ratio {contraction!r} exceeds "
                        f"epsilon {cfg.epsilon!r}"
                    )
            report = _certify_report(
                cfg, family, m, closure, inclusion, contraction, witness
            )
            atomic_write(out_dir, "generator.txt", report)
            if witness is not None:
                return _fail(EXIT_CERTIFICATE, "CertificateFailure", witness)
            return EXIT_OK
        except EtaRangeError:
            if attempt == MAX_WIDENINGS - 1:
                raise
            reach *= 2.0
    raise AssertionError("unreachable")


def cmd_selftest() -> int:
    results = run_suites()
    for r in results:
        status = "ok" if r.ok else f"FAIL {r.detail}"
        print(f"{r.name}: {status} ({r.seconds:.2f}s)")
    bad = [r for r in results if not r.ok]
    if bad:
        return _fail(
            EXIT_CRASH, "SelfTestFailure", f"{bad[0].name}: {bad[0].detail}"
        )
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gradedinv",
        description="Certified local inversion of composition operators.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("invert", "certify"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="key=value or JSON file")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--grading", default=None, help="override grading file")
        s.add_argument("--seed", type=int, default=None, help="override config seed")
    sub.add_parser("selftest")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "selftest":
        try:
            return cmd_selftest()
        except Exception as exc:  # the self-test must never die silently
            return _fail(EXIT_CRASH, type(exc).__name__, str(exc))

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg = replace(cfg, seed=args.seed)
        cfg.grid  # materialize so grid errors surface as config errors
    except (ConfigError, GradedInvError) as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))

    command = cmd_invert if args.command == "invert" else cmd_certify
    try:
        return command(cfg, args.out, args.grading)
    except (TargetNotAdmissibleError, MembershipError, PremiseViolationError) as exc:
        return _fail(EXIT_CERTIFICATE, type(exc).__name__, str(exc.args[0]))
    except _NUMERIC_ERRORS as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, str(exc))
    except GradedInvError as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(EXIT_CRASH, type(exc).__name__, str(exc))
    except Exception as exc:
        return _fail(EXIT_CRASH, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
