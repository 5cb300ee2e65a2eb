"""Reduced property suites behind the self-test command.

Each suite replays a handful of module invariants at small sizes so a
fresh build can be smoke-checked in seconds.  A suite stops at its first
failing property and reports that property's name; the optional `fault`
argument deliberately corrupts one ingredient so tests can confirm the
net actually catches a broken build.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import expressions as ex
from .composition import CompositionOperator
from .errors import (
    AliasingWarning,
    DegenerateInputError,
    PremiseViolationError,
    VanishingDerivativeError,
)
from .gauge import gauge_norm
from .newton import neumann_bound, newton_invert, inverse_lipschitz_check
from .sampling import disk_sample
from .smoothfn import GridConfig, SmoothFn, from_text, lincomb
from .tameness import build_generator, kernel_identity_residual

SMALL = GridConfig(D=16, M=65, N=6)
FAULTS = ("theta",)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    ok: bool
    detail: str
    seconds: float


class _Check(Exception):
    """A named property failed."""


def _require(cond: bool, prop: str, info: str = "") -> None:
    if not cond:
        raise _Check(prop if not info else f"{prop} ({info})")


class _Workspace:
    """Lazily built shared fixtures so suites do not rebuild families."""

    def __init__(self, fault: Optional[str]) -> None:
        self.fault = fault
        self._cache: dict = {}

    def operator(self, phi: str) -> CompositionOperator:
        key = ("op", phi)
        if key not in self._cache:
            self._cache[key] = CompositionOperator(ex.parse(phi), SMALL)
        return self._cache[key]

    def family(self, phi: str):
        key = ("fam", phi)
        if key not in self._cache:
            zero = SmoothFn.zero(SMALL)
            self._cache[key] = build_generator(self.operator(phi), zero, l0=2, N=6)
        return self._cache[key]


def _suite_smoothfn(ws: _Workspace) -> None:
    t = 2.0 * SMALL.nodes - 1.0
    vals = 1.0 - t + t ** 3
    f = SmoothFn.from_coeffs(np.polynomial.chebyshev.chebinterpolate(lambda u: 1 - u + u ** 3, SMALL.D), SMALL)
    probe = np.linspace(0.0, 1.0, 37)
    exact = 1.0 - (2 * probe - 1) + (2 * probe - 1) ** 3
    _require(float(np.max(np.abs(f(probe) - exact))) <= 1e-12, "projection-exactness")
    del vals

    g = SmoothFn.coordinate(SMALL)
    lhs = lincomb(2.0, f, -3.0, g).derivative()
    rhs = lincomb(2.0, f.derivative(), -3.0, g.derivative())
    _require(float(np.max(np.abs(lhs.coeffs - rhs.coeffs))) <= 1e-12, "derivative-linearity")

    h = from_text(f.to_text(), SMALL)
    _require(bool(np.array_equal(h.coeffs, f.coeffs)), "text-round-trip")

    _require(
        abs((2.0 * f).sup_abs(3) - 2.0 * f.sup_abs(3)) <= 1e-9 * max(1.0, f.sup_abs(3)),
        "seminorm-scaling",
    )


def _suite_expressions(ws: _Workspace) -> None:
    for text in ("eta + eta^3", "exp(s*eta)", "2*eta", "s*eta + cos(s)"):
        once = ex.to_text(ex.parse(text))
        _require(ex.to_text(ex.parse(once)) == once, "print-parse-fixpoint", text)

    phi = ex.parse("exp(s*eta)")
    a = ex.partial(ex.partial(phi, 1, 0), 0, 1)
    b = ex.partial(phi, 1, 1)
    s = np.linspace(0.0, 1.0, 9)[:, None]
    eta = np.linspace(-1.0, 1.0, 9)[None, :]
    gap = float(np.max(np.abs(ex.eval_grid(a, s, eta) - ex.eval_grid(b, s, eta))))
    _require(gap <= 1e-10, "partial-commutation")

    jet = ex.jet2(phi, 2, 0.3, 0.4)
    for key in jet.values:
        direct = ex.eval2(ex.partial(phi, key[0], key[1]), 0.3, 0.4)
        _require(abs(jet[key] - direct) <= 1e-12, "jet-consistency", str(key))

    try:
        ex.check_nonvanishing(ex.parse("eta^2/2"), -1.0, 1.0)
        raise _Check("vanishing-detection (no error raised)")
    except VanishingDerivativeError:
        pass


def _suite_gauge(ws: _Workspace) -> None:
    fam = ws.family("eta + eta^3")
    m = fam.canonical_member()
    u = disk_sample(m, SMALL, 11, 0)
    v = disk_sample(m, SMALL, 11, 1)

    _require(
        abs(gauge_norm(3.0 * u, m) - 3.0 * gauge_norm(u, m)) <= 1e-12 * gauge_norm(u, m),
        "gauge-homogeneity",
    )
    _require(
        gauge_norm(u + v, m) <= gauge_norm(u, m) + gauge_norm(v, m) + 1e-12,
        "gauge-triangle",
    )
    gd = gauge_norm(u, m.scaled(7.0))
    _require(abs(gd - gauge_norm(u, m) / 7.0) <= 1e-12, "dilation-consistency")
    _require(abs(gauge_norm(u, m) - 1.0) <= 1e-9, "disk-sample-radius")
    again = disk_sample(m, SMALL, 11, 0)
    _require(bool(np.array_equal(again.coeffs, u.coeffs)), "sample-determinism")


def _suite_composition(ws: _Workspace) -> None:
    zero = SmoothFn.zero(SMALL)
    y = SmoothFn.coordinate(SMALL)

    ident = ws.operator("eta")
    _require(
        float(np.max(np.abs(ident.apply(y).coeffs - y.coeffs))) <= 1e-12,
        "identity-apply",
    )

    lin = ws.operator("2*eta")
    back = lin.inv_deriv_apply(zero, lin.apply(y))
    _require(float(np.max(np.abs(back.coeffs - y.coeffs))) <= 1e-12, "linear-inverse")

    fam1 = ws.family("eta")
    m1 = fam1.canonical_member()
    _require(
        gauge_norm(ident.defect_map(zero, disk_sample(m1, SMALL, 5, 0)), m1) <= 1e-6,
        "defect-fixed-point",
    )

    fam3 = ws.family("eta + eta^3")
    m3 = fam3.canonical_member()
    op3 = ws.operator("eta + eta^3")
    _require(op3.contraction_ratio(zero, m3, pairs=6, seed=2) <= 0.5, "contraction-certificate")
    _require(op3.inclusion_check(zero, 0.5, m3, samples=6, seed=3).ok, "inclusion-certificate")


def _suite_tameness(ws: _Workspace) -> None:
    zero = SmoothFn.zero(SMALL)
    op3 = ws.operator("eta + eta^3")
    fam3 = ws.family("eta + eta^3")

    u = disk_sample(fam3.canonical_member(), SMALL, 7, 0, radius=0.2)
    v = disk_sample(fam3.canonical_member(), SMALL, 7, 1, radius=0.2)
    _require(
        kernel_identity_residual(op3, zero, u, v) <= 1e-9,
        "kernel-derivative-identity",
    )

    fam1 = ws.family("eta")
    _require(len(fam1.n) == 3 and fam1.n[0] == 1.0 / 6.0, "seed-replay")
    for got, want in zip(fam1.n, (1.0 / 6.0, 6.0 / 23.0, 216.0 / 529.0)):
        _require(abs(got - want) <= 1e-15, "seed-replay", f"{got} vs {want}")

    fam = ws.family("eta + eta^3")
    if ws.fault == "theta":
        # Test hook: a corrupted growth step must be caught right here.
        honest = fam.theta
        fam.theta = lambda r, s, i: 1.001 * honest(r, s, i)
    _require(fam.is_member(fam.canonical_member()), "canonical-membership")

    rep = fam.verify_closure(fam.canonical_member(), samples=6, seed=4)
    _require(rep.ok and rep.half_v0_ok, "closure-certificate")


def _suite_newton(ws: _Workspace) -> None:
    zero = SmoothFn.zero(SMALL)

    ident = ws.operator("eta")
    m1 = ws.family("eta").canonical_member()
    x = SmoothFn.coordinate(SMALL)
    v0 = ident.inv_deriv_apply(zero, x - ident.apply(zero))
    scale = max(1.0, gauge_norm(v0, m1))
    res = newton_invert(ident, zero, x, m1.scaled(scale), 0.5)
    _require(res.residual_sup <= 1e-10, "linear-one-step")
    _require(res.certified.all_ok(), "linear-certificates")

    op3 = ws.operator("eta + eta^3")
    m3 = ws.family("eta + eta^3").canonical_member()
    y_true = zero + disk_sample(m3, SMALL, 13, 0, radius=0.5)
    rt = newton_invert(op3, zero, op3.apply(y_true), m3, 0.5)
    err = float(np.max(np.abs(rt.y.node_values() - y_true.node_values())))
    _require(err <= 1e-9, "round-trip-recovery")

    def norm(p: float) -> float:
        return abs(p)

    def sample(seed: int, index: int) -> float:
        rng = np.random.default_rng([seed, index])
        return float(rng.uniform(-1.0, 1.0))

    rep = neumann_bound(lambda p: 0.8 * p, norm, sample, 0.2, probes=8, seed=1)
    _require(abs(rep.inverse_bound - 1.25) <= 1e-12, "series-bound-attained")

    try:
        neumann_bound(lambda p: 0.8 * p, norm, sample, 0.05, probes=8, seed=1)
        raise _Check("premise-witness (no error raised)")
    except PremiseViolationError as exc:
        _require(len(exc.args) > 1, "premise-witness")

    lip = inverse_lipschitz_check(op3, zero, m3, 0.5, pairs=4, seed=6)
    _require(lip.ok, "inverse-lipschitz-bound")


SUITES: Tuple[Tuple[str, Callable[[_Workspace], None]], ...] = (
    ("smoothfn", _suite_smoothfn),
    ("expressions", _suite_expressions),
    ("gauge", _suite_gauge),
    ("composition", _suite_composition),
    ("tameness", _suite_tameness),
    ("newton", _suite_newton),
)


def run_suites(fault: Optional[str] = None) -> List[SuiteResult]:
    """Runs every suite; a fault name corrupts its target first."""
    if fault is not None and fault not in FAULTS:
        raise DegenerateInputError(f"unknown fault {fault!r}; known: {FAULTS}")
    ws = _Workspace(fault)
    results: List[SuiteResult] = []
    with warnings.catch_warnings():
        # The suites feed resolution-edge samples by design; the checked
        # bounds do not depend on resolving them.
        warnings.simplefilter("ignore", AliasingWarning)
        for name, suite in SUITES:
            start = time.perf_counter()
            try:
                suite(ws)
                ok, detail = True, ""
            except _Check as exc:
                ok, detail = False, str(exc)
            except Exception as exc:  # a crash is a failure with the crash named
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(SuiteResult(name, ok, detail, time.perf_counter() - start))
    return results
