"""Local inversion by simplified-Newton iteration, with certificates.

The frozen-derivative update

    y_{k+1} = ell(x) - ell(f(y_k)) + y_k,      ell = (f'(y0))^-1,

contracts at rate eps on the graded disk whenever the derivative-inclusion
condition holds at eps, and every run is accompanied by the evidence: the
increment gauges, their successive ratios against eps, disk containment of
the iterates, the inverse-Lipschitz bound, and the final residual.

Rounding puts a floor under increment gauges well above any reasonable
tolerance (high derivative orders amplify coefficient noise), so the loop
also watches for stagnation: an increment still above the tolerance that
fails the contraction budget eps rolls the iteration back one step and is
excluded from the certified ratios.  The geometric tail bound eps/(1-eps)
times the last certified increment covers the remainder.

neumann_bound is the generic ingredient: a Neumann-series inverse with
norm bounds on any finite-dimensional model supplied as duck-typed
callables, instantiated here for the frozen-derivative maps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .composition import CompositionOperator
from .errors import (
    AliasingWarning,
    ConstructionError,
    DegenerateInputError,
    PremiseViolationError,
    TargetNotAdmissibleError,
)
from .gauge import CONTAINMENT_SLACK, Grading, gauge_norm
from .sampling import disk_sample
from .smoothfn import SmoothFn

RATIO_SLACK = 1e-6
DOMAIN_SLACK = 1e-6
LIP_SLACK = 1e-9
TARGET_MARGIN = 1e-3
SERIES_TOL = 1e-14
SERIES_CAP = 2000
NEUMANN_SLACK = 1e-10
PREMISE_SLACK = 1e-12


@dataclass(frozen=True)
class CertificateFlags:
    cauchy_ok: bool
    domain_ok: bool
    lipschitz_ok: bool

    def all_ok(self) -> bool:
        return self.cauchy_ok and self.domain_ok and self.lipschitz_ok


@dataclass(frozen=True)
class InversionResult:
    """One Newton run: iterates, gauge increments, ratios, residuals, flags.

    iterates[k+1] - iterates[k] has gauge increments[k]; ratios[k] =
    increments[k+1] / increments[k]; residuals[k] is the node-sup of
    f(iterates[k+1]) - x.  `stalled` marks a stagnation rollback, whose
    rejected increment is not recorded anywhere.
    """

    iterates: Tuple[SmoothFn, ...]
    increments: Tuple[float, ...]
    ratios: Tuple[float, ...]
    residuals: Tuple[float, ...]
    certified: CertificateFlags
    epsilon: float
    tol: float
    converged: bool
    stalled: bool

    def __post_init__(self) -> None:
        if len(self.iterates) != len(self.increments) + 1:
            raise DegenerateInputError("iterate/increment length mismatch")
        if any(d < 0 for d in self.increments):
            raise DegenerateInputError("negative increment gauge")

    @property
    def y(self) -> SmoothFn:
        return self.iterates[-1]

    @property
    def residual_sup(self) -> float:
        return self.residuals[-1] if self.residuals else math.inf

    @property
    def tail_bound(self) -> float:
        """Geometric bound on the distance to the limit."""
        if not self.increments:
            return math.inf
        return self.epsilon / (1.0 - self.epsilon) * self.increments[-1]

    def to_csv(self) -> str:
        lines = ["iter,increment,ratio,residual"]
        for k, (inc, res) in enumerate(zip(self.increments, self.residuals)):
            ratio = repr(self.ratios[k - 1]) if k >= 1 else ""
            lines.append(f"{k + 1},{inc!r},{ratio},{res!r}")
        return "\n".join(lines) + "\n"


def newton_invert(
    op: CompositionOperator,
    y0: SmoothFn,
    x: SmoothFn,
    m: Grading,
    epsilon: float,
    tol: float = 1e-12,
    maxiter: int = 200,
) -> InversionResult:
    """Solves f(y) = x near y0 on the disk of m by frozen-derivative Newton.

    The target must be admissible: its transported defect ell(x - f(y0))
    has to lie in the unit disk, otherwise nothing is certified and the
    run is refused.  Certificate failures during the run (a ratio above
    eps, an iterate leaving y0 + 2B) are reported in the flags, never
    raised.
    """
    if not 0.0 <= epsilon <= 0.5:
        raise DegenerateInputError(
            f"contraction budget must be in [0, 1/2], got {epsilon}"
        )
    if tol <= 0 or maxiter < 1:
        raise DegenerateInputError(f"bad stopping rule: tol={tol}, maxiter={maxiter}")
    v0 = op.inv_deriv_apply(y0, x - op.apply(y0))
    g0 = gauge_norm(v0, m)
    if g0 > 1.0 + CONTAINMENT_SLACK:
        raise TargetNotAdmissibleError(
            f"transported defect has gauge {g0:.6g} > 1; the target lies "
            "outside the certified neighborhood of f(y0)"
        )
    ell_x = op.inv_deriv_apply(y0, x)
    x_nodes = x.node_values()

    iterates: List[SmoothFn] = [y0]
    increments: List[float] = []
    ratios: List[float] = []
    residuals: List[float] = []
    stalled = False
    converged = False
    y = y0
    while len(increments) < maxiter:
        y_next = ell_x - op.inv_deriv_apply(y0, op.apply(y)) + y
        delta = gauge_norm(y_next - y, m)
        budget = epsilon + RATIO_SLACK
        if increments and delta >= budget * increments[-1] and delta >= tol:
            # The step failed the certified contraction budget.  Above the
            # tolerance that is indistinguishable from the rounding floor,
            # so keep y, drop the step, and let the recorded residual and
            # tail bound carry the convergence evidence.
            stalled = True
            break
        if increments:
            prev = increments[-1]
            ratios.append(delta / prev if prev > 0 else (0.0 if delta == 0 else math.inf))
        increments.append(delta)
        iterates.append(y_next)
        residuals.append(
            float(np.max(np.abs(op.apply(y_next).node_values() - x_nodes)))
        )
        y = y_next
        if delta < tol:
            converged = True
            break

    cauchy_ok = all(r <= epsilon + RATIO_SLACK for r in ratios)
    domain_ok = all(
        gauge_norm(yi - y0, m) <= 2.0 + DOMAIN_SLACK for yi in iterates[1:]
    )
    lip_bound = g0 / (1.0 - epsilon) + LIP_SLACK
    lipschitz_ok = gauge_norm(y - y0, m) <= lip_bound
    return InversionResult(
        iterates=tuple(iterates),
        increments=tuple(increments),
        ratios=tuple(ratios),
        residuals=tuple(residuals),
        certified=CertificateFlags(cauchy_ok, domain_ok, lipschitz_ok),
        epsilon=epsilon,
        tol=tol,
        converged=converged,
        stalled=stalled,
    )


@dataclass(frozen=True)
class NeumannReport:
    """Neumann-series bounds checked on probes: nu(inv x) against
    (1-eps)^-1 nu(x), nu(inv x - x) against (1-eps)^-1 eps nu(x), and
    the forward bound nu(ell x) against (1+eps) nu(x)."""

    ok: bool
    epsilon: float
    probes: int
    worst_inverse_ratio: float
    worst_defect_ratio: float
    worst_forward_ratio: float

    @property
    def inverse_bound(self) -> float:
        return 1.0 / (1.0 - self.epsilon)

    @property
    def defect_bound(self) -> float:
        return self.epsilon / (1.0 - self.epsilon)

    @property
    def forward_bound(self) -> float:
        return 1.0 + self.epsilon


def neumann_series(apply_fn: Callable, norm_fn: Callable, p):
    """Inverse image of p under the perturbed-identity map, by the
    geometric series sum of (id - ell)^k p, truncated at SERIES_TOL."""
    inv = p
    term = p
    for _ in range(SERIES_CAP):
        term = term - apply_fn(term)
        if norm_fn(term) < SERIES_TOL:
            return inv
        inv = inv + term
    raise ConstructionError(
        "geometric series did not converge; the contraction premise must "
        "fail off the probe set"
    )


def neumann_bound(
    apply_fn: Callable,
    norm_fn: Callable,
    sample_fn: Callable[[int, int], object],
    epsilon: float,
    probes: int,
    seed: int,
) -> NeumannReport:
    """Verifies the perturbed-identity premise nu(ell p - p) <= eps nu(p)
    on seeded probes and then asserts the Neumann bounds on each.

    Works on any finite-dimensional model: elements only need +, -, and
    the supplied norm; probes are sample_fn(seed, index).  Premise
    violations raise with the witness probe as args[1].
    """
    if not 0.0 <= epsilon < 1.0:
        raise DegenerateInputError(f"need 0 <= eps < 1, got {epsilon}")
    if probes < 1:
        raise DegenerateInputError(f"need at least one probe, got {probes}")
    worst_inv = 0.0
    worst_def = 0.0
    worst_fwd = 0.0
    for k in range(probes):
        p = sample_fn(seed, k)
        np_ = norm_fn(p)
        if np_ == 0:
            continue
        drift = norm_fn(apply_fn(p) - p)
        if drift > epsilon * np_ * (1.0 + PREMISE_SLACK):
            raise PremiseViolationError(
                f"probe {k}: nu(ell p - p) = {drift:.6g} exceeds "
                f"eps * nu(p) = {epsilon * np_:.6g}",
                p,
            )
        inv = neumann_series(apply_fn, norm_fn, p)
        worst_inv = max(worst_inv, norm_fn(inv) / np_)
        worst_def = max(worst_def, norm_fn(inv - p) / np_)
        worst_fwd = max(worst_fwd, norm_fn(apply_fn(p)) / np_)
    inv_bound = 1.0 / (1.0 - epsilon)
    def_bound = epsilon / (1.0 - epsilon)
    fwd_bound = 1.0 + epsilon
    ok = (
        worst_inv <= inv_bound + NEUMANN_SLACK * max(1.0, inv_bound)
        and worst_def <= def_bound + NEUMANN_SLACK * max(1.0, def_bound)
        and worst_fwd <= fwd_bound + NEUMANN_SLACK * max(1.0, fwd_bound)
    )
    return NeumannReport(ok, epsilon, probes, worst_inv, worst_def, worst_fwd)


@dataclass(frozen=True)
class LipschitzReport:
    """Sampled inverse-Lipschitz verdict: gauge(y1 - y2) against
    (1-eps)^-1 gauge(ell(x1 - x2)) over solved admissible target pairs."""

    ok: bool
    epsilon: float
    pairs: int
    worst_lhs: float
    worst_bound: float


def inverse_lipschitz_check(
    op: CompositionOperator,
    y0: SmoothFn,
    m: Grading,
    epsilon: float,
    pairs: int,
    seed: int,
    tol: float = 1e-12,
    maxiter: int = 200,
) -> LipschitzReport:
    """Solves seeded admissible target pairs and checks that the local
    inverse contracts distances by at most (1-eps)^-1 in the transported
    metric.  Admissible targets are manufactured as f(y0) + f'(y0) w with
    w in the disk, so the precondition of each solve holds by design."""
    if pairs < 1:
        raise DegenerateInputError(f"need at least one pair, got {pairs}")
    fy0 = op.apply(y0)
    ok = True
    worst_lhs = 0.0
    worst_bound = math.inf
    track = -math.inf
    with warnings.catch_warnings():
        # Disk probes sit at the resolution edge by design.
        warnings.simplefilter("ignore", AliasingWarning)
        for k in range(pairs):
            # Margin below the unit disk absorbs projection roundoff so the
            # manufactured targets really are admissible.
            radius = 1.0 - TARGET_MARGIN
            w1 = disk_sample(m, op.grid, seed, 2 * k, radius=radius)
            w2 = disk_sample(m, op.grid, seed, 2 * k + 1, radius=radius)
            x1 = fy0 + op.deriv_apply(y0, w1)
            x2 = fy0 + op.deriv_apply(y0, w2)
            r1 = newton_invert(op, y0, x1, m, epsilon, tol, maxiter)
            r2 = newton_invert(op, y0, x2, m, epsilon, tol, maxiter)
            lhs = gauge_norm(r1.y - r2.y, m)
            bound = gauge_norm(op.inv_deriv_apply(y0, x1 - x2), m) / (1.0 - epsilon)
            if lhs > bound + LIP_SLACK:
                ok = False
            if lhs - bound > track:
                track = lhs - bound
                worst_lhs = lhs
                worst_bound = bound
    return LipschitzReport(ok, epsilon, pairs, worst_lhs, worst_bound)


def derivative_invertibility(
    op: CompositionOperator,
    y0: SmoothFn,
    y1: SmoothFn,
    m: Grading,
    epsilon: float,
    probes: int = 64,
    seed: int = 0,
) -> NeumannReport:
    """Certifies that the derivative stays invertible at a moved point:
    the composed map w -> ell_{y0}(f'(y1) w) is a perturbed identity in
    the gauge norm, so neumann_bound applies verbatim."""
    drift = gauge_norm(y1 - y0, m)
    if drift > 2.0 + DOMAIN_SLACK:
        raise DegenerateInputError(
            f"moved point has gauge distance {drift:.6g} > 2 from the base"
        )

    def apply_fn(w: SmoothFn) -> SmoothFn:
        return op.inv_deriv_apply(y0, op.deriv_apply(y1, w))

    def norm_fn(w: SmoothFn) -> float:
        return gauge_norm(w, m)

    def sample_fn(sd: int, index: int) -> SmoothFn:
        return disk_sample(m, op.grid, sd, index, radius=1.0)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        return neumann_bound(apply_fn, norm_fn, sample_fn, epsilon, probes, seed)
