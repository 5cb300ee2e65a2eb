"""Tameness certificates for composition operators.

The derivative-difference identity

    2 (f'(x))^-1 (f'(x + 2u) - f'(x)) v  =  chi(s, u(s)) * u(s) * v(s)

reduces the derivative-inclusion condition to pointwise control of the
perturbation kernel chi(s, eta), an averaged second derivative of the
nonlinearity along the base point.  This module builds everything that
turns that identity into a certificate:

  * PerturbationKernel: quadrature evaluator for chi with exact
    high-order jets obtained by truncated Taylor-series composition
    (no finite differences anywhere);
  * the jet-polynomial recursion expressing the i-th derivative of
    chi(s, u(s)) u(s) v(s) in jets of chi, u, and v;
  * absolute-coefficient majorants R and rho bounding those derivatives
    on graded disks, and the growth step theta they induce;
  * the seed sequence n, the base-point scale sequences, and the family
    of member gradings closed under pairwise merge and under absorbing
    arbitrary bounded profiles;
  * the sampled closure check that kernel products stay inside the disk.

Everything here is deterministic; sampling enters only through the
closure check, which takes an explicit seed.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import expressions as ex
from .composition import CompositionOperator
from .errors import (
    AliasingWarning,
    ConfigMismatchError,
    ConstructionError,
    DegenerateInputError,
    MembershipError,
    NumericOverflowError,
    OrderRangeError,
    SingularDerivativeError,
    ThetaDomainError,
)
from .gauge import Grading, disk_contains, gauge_norm
from .sampling import disk_sample
from .smoothfn import SmoothFn, project

# Fixed eta-range for all kernel sups; disks certified by the family have
# order-0 radius below 1/3, so this box always covers where they evaluate.
SUP_RANGE = (-1.0, 1.0)

# Grid density for the high-order kernel sups (full jet table) and for
# the order-(0,1) sups entering the base bound.
JET_SUP_SAMPLES = 41
B0_SUP_SAMPLES = 200

# Halving budget for the seed-sequence construction.
SEED_HALVINGS = 64

_SINGULAR_TOL = 1e-9


@functools.lru_cache(maxsize=None)
def _unit_quadrature(quad_nodes: int):
    # Gauss-Legendre on [-1, 1] mapped to [0, 1].
    xi, lam = np.polynomial.legendre.leggauss(quad_nodes)
    t = 0.5 * (xi + 1.0)
    w = 0.5 * lam
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


class PerturbationKernel:
    """Evaluator for chi(s, eta) = 4 (d2 phi(s, x(s)))^-1 I(s, eta) with

        I(s, eta) = integral over [0, 1] of d2^2 phi(s, x(s) + 2 t eta) dt

    approximated by fixed-order Gauss-Legendre quadrature, which is exact
    whenever d2^2 phi is polynomial in eta of degree < 2 * quad_nodes.

    Jets of chi of any order are computed by composing truncated Taylor
    series: the base point series of x is exact (spectral derivatives),
    partials of phi are symbolic, and the only approximation is the same
    quadrature.  Immutable after construction apart from internal caches.
    """

    def __init__(
        self, op: CompositionOperator, x: SmoothFn, quad_nodes: int = 32
    ) -> None:
        if quad_nodes < 2:
            raise DegenerateInputError(
                f"need at least 2 quadrature nodes, got {quad_nodes}"
            )
        self.op = op
        self.x = x
        self.quad_nodes = int(quad_nodes)
        self.tq, self.wq = _unit_quadrature(self.quad_nodes)
        self._d2 = ex.partial(op.phi, 0, 1)
        self._d22 = ex.partial(op.phi, 0, 2)
        self._sup_cache: Dict[Tuple[int, int, int], np.ndarray] = {}
        self._b0: Optional[float] = None

    # -- direct evaluation ------------------------------------------------

    def _denominator(self, s: np.ndarray) -> np.ndarray:
        xs = self.x(s)
        den = ex.eval_grid(self._d2, s, xs)
        small = float(np.min(np.abs(den)))
        if small <= _SINGULAR_TOL:
            raise SingularDerivativeError(
                f"kernel denominator {small:.3e} too close to zero"
            )
        return den

    def value(self, s, eta) -> np.ndarray:
        """chi on broadcastable arrays of points (s in I, eta real)."""
        s_arr = np.asarray(s, dtype=float)
        eta_arr = np.asarray(eta, dtype=float)
        shape = np.broadcast(s_arr, eta_arr).shape
        s_b = np.broadcast_to(s_arr, shape)
        eta_b = np.broadcast_to(eta_arr, shape)
        den = self._denominator(s_b)
        xs = self.x(s_b)
        integ = np.zeros(shape)
        for t, w in zip(self.tq, self.wq):
            integ += w * ex.eval_grid(self._d22, s_b, xs + 2.0 * t * eta_b)
        return 4.0 * integ / den

    # -- jets by truncated series composition -----------------------------

    def jet_grid(self, i1max: int, i2max: int, s, eta) -> np.ndarray:
        """Raw partials d1^a d2^b chi at points, for a <= i1max, b <= i2max.

        Returns an array of shape (i1max+1, i2max+1, npts).
        """
        if i1max < 0 or i2max < 0:
            raise OrderRangeError(f"jet orders must be >= 0, got ({i1max}, {i2max})")
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
        if s_arr.shape != eta_arr.shape or s_arr.ndim != 1:
            raise DegenerateInputError("jet_grid needs matching 1-d point arrays")
        A, B = i1max, i2max
        npts = s_arr.size

        facts = [math.factorial(k) for k in range(A + B + 1)]
        # Exact Taylor coefficients of the base point at each s.
        X = np.stack(
            [self.x.derivative(l)(s_arr) / facts[l] for l in range(A + 1)]
        )  # (A+1, npts)
        U = X.copy()
        U[0] = 0.0  # series of x(s+h) - x(s); no constant term

        # Powers of U, truncated at degree A.  U^j vanishes below degree j,
        # so exponents beyond A contribute nothing.
        Upow = np.zeros((A + 1, A + 1, npts))
        Upow[0, 0] = 1.0
        for j in range(1, A + 1):
            for alpha in range(j, A + 1):
                acc = np.zeros(npts)
                for l in range(1, alpha - j + 2):
                    acc += U[l] * Upow[j - 1, alpha - l]
                Upow[j, alpha] = acc

        # Denominator series c_j of d2 phi(s+h, x(s+h)) and its reciprocal.
        xs = X[0]
        c = np.zeros((A + 1, npts))
        for a in range(A + 1):
            for b in range(A + 1 - a):
                dpsi = ex.eval_grid(ex.partial(self._d2, a, b), s_arr, xs) / (
                    facts[a] * facts[b]
                )
                for j in range(a + b, A + 1):
                    c[j] += dpsi * Upow[b, j - a]
        small = float(np.min(np.abs(c[0])))
        if small <= _SINGULAR_TOL:
            raise SingularDerivativeError(
                f"kernel denominator {small:.3e} too close to zero"
            )
        recip = np.zeros((A + 1, npts))
        recip[0] = 1.0 / c[0]
        for j in range(1, A + 1):
            acc = np.zeros(npts)
            for l in range(1, j + 1):
                acc += c[l] * recip[j - l]
            recip[j] = -recip[0] * acc

        # Integral series I[alpha][r]: quadrature-weighted Taylor
        # composition of d2^2 phi along (s+h, x(s+h) + 2 t (eta+k)).
        binom = [[math.comb(bb, rr) for rr in range(bb + 1)] for bb in range(A + B + 1)]
        I = np.zeros((A + 1, B + 1, npts))
        for t, w in zip(self.tq, self.wq):
            Q = xs + 2.0 * t * eta_arr
            cpow = [(2.0 * t) ** r for r in range(B + 1)]
            for a in range(A + 1):
                for b in range(A + B - a + 1):
                    psi = ex.eval_grid(ex.partial(self._d22, a, b), s_arr, Q) / (
                        facts[a] * facts[b]
                    )
                    for r in range(min(b, B) + 1):
                        j = b - r
                        if j > A:
                            continue
                        coef = w * binom[b][r] * cpow[r]
                        # convolve psi (pure h^a) with U^j over h-degree
                        for alpha in range(j, A + 1 - a):
                            I[a + alpha, r] += coef * psi * Upow[j, alpha]

        # chi series = 4 * recip * I (Cauchy product in h), then undo the
        # Taylor normalization to get raw partial values.
        jets = np.zeros((A + 1, B + 1, npts))
        for a in range(A + 1):
            for r in range(B + 1):
                acc = np.zeros(npts)
                for j in range(a + 1):
                    acc += recip[j] * I[a - j, r]
                jets[a, r] = 4.0 * facts[a] * facts[r] * acc
        return jets

    def jet(self, i1: int, i2: int, s: float, eta: float) -> float:
        """Single raw partial d1^i1 d2^i2 chi at one point."""
        return float(
            self.jet_grid(i1, i2, np.array([s]), np.array([eta]))[i1, i2, 0]
        )

    # -- sampled sups -----------------------------------------------------

    def sup_table(
        self, i1max: int, i2max: int, samples: int = JET_SUP_SAMPLES
    ) -> np.ndarray:
        """Sampled sups of |d1^a d2^b chi| over I x [-1, 1], as an array."""
        key = (i1max, i2max, samples)
        got = self._sup_cache.get(key)
        if got is not None:
            return got
        ss = np.linspace(0.0, 1.0, samples)
        ee = np.linspace(SUP_RANGE[0], SUP_RANGE[1], samples)
        S, E = [a.ravel() for a in np.meshgrid(ss, ee)]
        jets = self.jet_grid(i1max, i2max, S, E)
        table = np.max(np.abs(jets), axis=2)
        table.setflags(write=False)
        self._sup_cache[key] = table
        return table

    def b0(self) -> float:
        """Base bound 1 + sup of |chi| and |d2 chi| over I x [-1, 1]."""
        if self._b0 is None:
            ss = np.linspace(0.0, 1.0, B0_SUP_SAMPLES)[:, None]
            ee = np.linspace(SUP_RANGE[0], SUP_RANGE[1], B0_SUP_SAMPLES)[None, :]
            chi_sup = float(np.max(np.abs(self.value(ss, ee))))
            S, E = [a.ravel() for a in np.meshgrid(ss.ravel(), ee.ravel())]
            d2chi_sup = float(np.max(np.abs(self.jet_grid(0, 1, S, E)[0, 1])))
            self._b0 = 1.0 + max(chi_sup, d2chi_sup)
        return self._b0


def kernel_identity_residual(
    op: CompositionOperator,
    x: SmoothFn,
    u: SmoothFn,
    v: SmoothFn,
    quad_nodes: int = 32,
) -> float:
    """Node-sup residual of the transported-difference identity.

    Checks 2 (f'(x))^-1 (f'(x+2u) - f'(x)) v against chi(s, u(s)) u(s) v(s)
    at the sampling nodes; zero up to projection error and quadrature.
    """
    kernel = PerturbationKernel(op, x, quad_nodes)
    moved = op.deriv_apply(x + 2.0 * u, v) - op.deriv_apply(x, v)
    lhs = 2.0 * op.inv_deriv_apply(x, moved)
    nodes = op.grid.nodes
    uvals = u.node_values()
    rhs = kernel.value(nodes, uvals) * uvals * v.node_values()
    return float(np.max(np.abs(lhs.node_values() - rhs)))


# ---------------------------------------------------------------------------
# Jet polynomials: the order-i correction term in the derivative recursion
#
#   (chi(s,u) u v)^(i) = d2chi(s,u) u^(i) u v + chi(s,u) u^(i) v
#                        + chi(s,u) u v^(i) + P_i(jets of chi, v, u)
#
# Monomials are keyed ((a, b), e, zeta): one kernel-jet factor d1^a d2^b chi,
# one factor v^(e), and factors u^(z) for z in the sorted tuple zeta.

MonomialKey = Tuple[Tuple[int, int], int, Tuple[int, ...]]


@dataclass(frozen=True, eq=False)
class JetPolynomial:
    """Integer-combination of jet monomials for one derivative order."""

    order: int
    monomials: Dict[MonomialKey, int]

    def __post_init__(self) -> None:
        for (xi, e, zeta), coeff in self.monomials.items():
            a, b = xi
            if coeff == 0:
                raise DegenerateInputError("zero coefficient stored")
            if len(zeta) != 1 + b:
                raise DegenerateInputError(
                    f"monomial {xi}, {e}, {zeta}: chain factors {len(zeta)} "
                    f"do not match derivative splitting 1 + {b}"
                )
            if e > self.order - 1 or any(z > self.order - 1 for z in zeta):
                raise DegenerateInputError("jet index beyond order - 1")
        object.__setattr__(self, "_eval_arrays", None)

    def bound_profile(self) -> List[Tuple[Tuple[int, int], int, int]]:
        """Aggregated (xi, power, |coeff| sum) rows for the majorant."""
        agg: Dict[Tuple[Tuple[int, int], int], int] = {}
        for (xi, _e, zeta), coeff in self.monomials.items():
            key = (xi, 1 + len(zeta))
            agg[key] = agg.get(key, 0) + abs(coeff)
        return [(xi, pw, c) for (xi, pw), c in sorted(agg.items())]

    def _arrays(self):
        if self._eval_arrays is None:
            items = sorted(self.monomials.items())
            coeff = np.array([c for _k, c in items], dtype=float)
            xi_a = np.array([k[0][0] for k, _c in items])
            xi_b = np.array([k[0][1] for k, _c in items])
            eta = np.array([k[1] for k, _c in items])
            width = max(len(k[2]) for k, _c in items)
            # Pad the chain-index rows with self.order, which callers map
            # to an all-ones row.
            zeta = np.full((len(items), width), self.order)
            for row, (k, _c) in enumerate(items):
                zeta[row, : len(k[2])] = k[2]
            object.__setattr__(self, "_eval_arrays", (coeff, xi_a, xi_b, eta, zeta))
        return self._eval_arrays

    def evaluate(
        self, jets: np.ndarray, vders: np.ndarray, uders: np.ndarray
    ) -> np.ndarray:
        """Evaluates on precomputed point arrays.

        jets: raw kernel partials, shape (>=order+1, >=order+1, npts);
        vders, uders: rows e -> v^(e), z -> u^(z), shape (order, npts)
        at the same points (orders 0..order-1 suffice).
        """
        coeff, xi_a, xi_b, eta, zeta = self._arrays()
        npts = jets.shape[2]
        ones = np.ones((1, npts))
        upad = np.vstack([uders[: self.order], ones])
        vrows = vders[: self.order]
        out = np.zeros(npts)
        # Chunk points to keep the (monomials, width, chunk) product small.
        chunk = max(1, 2**21 // max(1, coeff.size * zeta.shape[1]))
        for lo in range(0, npts, chunk):
            hi = min(npts, lo + chunk)
            jets_c = jets[:, :, lo:hi]
            term = coeff[:, None] * jets_c[xi_a, xi_b] * vrows[eta, lo:hi]
            term *= np.prod(upad[:, lo:hi][zeta], axis=1)
            out[lo:hi] = term.sum(axis=0)
        return out


def _boundary_terms(i: int) -> List[MonomialKey]:
    # New monomials created when differentiating the three leading terms
    # of the order-i expression (their own top-derivative pieces stay as
    # the leading terms of order i+1 and are not listed here).
    return [
        ((1, 1), 0, tuple(sorted((0, i)))),
        ((0, 2), 0, tuple(sorted((0, 1, i)))),
        ((0, 1), 0, tuple(sorted((1, i)))),
        ((0, 1), 0, tuple(sorted((1, i)))),
        ((0, 1), 1, tuple(sorted((0, i)))),
        ((1, 0), 0, (i,)),
        ((0, 0), 1, (i,)),
        ((1, 0), i, (0,)),
        ((0, 1), i, (0, 1)),
        ((0, 0), i, (1,)),
    ]


def _step(monomials: Dict[MonomialKey, int], i: int) -> Dict[MonomialKey, int]:
    out: Dict[MonomialKey, int] = {}

    def bump(key: MonomialKey, c: int) -> None:
        out[key] = out.get(key, 0) + c
        if out[key] == 0:
            del out[key]

    for ((a, b), e, zeta), c in monomials.items():
        # s-derivative of the kernel-jet factor.
        bump(((a + 1, b), e, zeta), c)
        # eta-derivative of the kernel-jet factor, chain factor u'.
        bump(((a, b + 1), e, tuple(sorted(zeta + (1,)))), c)
        # derivative of the v-factor.
        bump(((a, b), e + 1, zeta), c)
        # derivative of each u-factor (directional shift, with multiplicity).
        mult: Dict[int, int] = {}
        for z in zeta:
            mult[z] = mult.get(z, 0) + 1
        for z, k in mult.items():
            lst = list(zeta)
            lst.remove(z)
            lst.append(z + 1)
            bump(((a, b), e, tuple(sorted(lst))), c * k)
    for key in _boundary_terms(i):
        bump(key, 1)
    return out


_POLY_CACHE: Dict[int, JetPolynomial] = {}


def build_jet_polynomials(max_order: int) -> Tuple[JetPolynomial, ...]:
    """The correction polynomials for orders 1..max_order, cached."""
    if max_order < 1:
        raise OrderRangeError(f"need max_order >= 1, got {max_order}")
    if 1 not in _POLY_CACHE:
        _POLY_CACHE[1] = JetPolynomial(1, {((1, 0), 0, (0,)): 1})
    top = max(_POLY_CACHE)
    while top < max_order:
        nxt = _step(_POLY_CACHE[top].monomials, top)
        top += 1
        _POLY_CACHE[top] = JetPolynomial(top, nxt)
    return tuple(_POLY_CACHE[i] for i in range(1, max_order + 1))


def jet_derivative_grid(
    kernel: PerturbationKernel,
    u: SmoothFn,
    v: SmoothFn,
    i: int,
    s,
) -> np.ndarray:
    """i-th derivative of s -> chi(s, u(s)) u(s) v(s) at an array of points,
    assembled from the recursion (never by numeric differencing)."""
    if i < 1 or i > u.config.N + 1:
        raise OrderRangeError(
            f"derivative order must be in 1..{u.config.N + 1}, got {i}"
        )
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    poly = build_jet_polynomials(i)[i - 1]
    jets = kernel.jet_grid(i, i, s_arr, u(s_arr))
    uders = np.stack([u.derivative(k)(s_arr) for k in range(i + 1)])
    vders = np.stack([v.derivative(k)(s_arr) for k in range(i + 1)])
    lead = (
        jets[0, 1] * uders[i] * uders[0] * vders[0]
        + jets[0, 0] * uders[i] * vders[0]
        + jets[0, 0] * uders[0] * vders[i]
    )
    return lead + poly.evaluate(jets, vders, uders)


def jet_derivative(
    kernel: PerturbationKernel, u: SmoothFn, v: SmoothFn, i: int, s: float
) -> float:
    """Scalar wrapper around jet_derivative_grid at a single point."""
    return float(jet_derivative_grid(kernel, u, v, i, np.array([float(s)]))[0])


def jet_poly_bound(
    poly: JetPolynomial, kernel: PerturbationKernel, s: float
) -> float:
    """Majorant for |poly| when all jet entries of u, v are bounded by s:
    sum of |coeff| * sup|kernel jet factor| * s^(factor count).

    Uses the absolute-coefficient bound, which can only enlarge the
    majorants downstream (safe direction)."""
    if s < 0:
        raise DegenerateInputError(f"bound argument must be >= 0, got {s}")
    cap = poly.order
    sups = kernel.sup_table(cap, cap)
    total = 0.0
    for (a, b), power, coeff in poly.bound_profile():
        sup = float(sups[a, b])
        if sup == 0.0:
            continue
        try:
            total += coeff * sup * s**power
        except OverflowError:
            # Saturate; the overflow guard on grading entries reports it.
            return math.inf
    return total


class MajorantTable:
    """Derivative-growth majorants R and rho, plus the base bound B0.

    R(i, s) bounds the correction polynomial of order i+1 on disks whose
    jet entries are bounded by s; rho(i, s) is the running maximum of s
    and R(0..i, s), nondecreasing in both arguments with rho(i, 0) = 0.
    """

    def __init__(
        self,
        kernel: PerturbationKernel,
        polys: Sequence[JetPolynomial],
        N: int,
    ) -> None:
        if len(polys) < N + 1:
            raise ConfigMismatchError(
                f"need correction polynomials to order {N + 1}, got {len(polys)}"
            )
        self.kernel = kernel
        self.N = N
        self.polys = tuple(polys)
        self.B0 = kernel.b0()
        self._rho_memo: Dict[Tuple[int, float], float] = {}

    def R(self, i: int, s: float) -> float:
        if not 0 <= i <= self.N:
            raise OrderRangeError(f"majorant order {i} outside 0..{self.N}")
        return jet_poly_bound(self.polys[i], self.kernel, s)

    def rho(self, i: int, s: float) -> float:
        if not 0 <= i <= self.N:
            raise OrderRangeError(f"majorant order {i} outside 0..{self.N}")
        if s < 0:
            raise DegenerateInputError(f"majorant argument must be >= 0, got {s}")
        key = (i, float(s))
        got = self._rho_memo.get(key)
        if got is None:
            got = max(s, self.R(i, s))
            if i > 0:
                got = max(got, self.rho(i - 1, s))
            self._rho_memo[key] = got
        return got

    def theta0(self, r: float, s: float, i: int) -> float:
        """Growth step rho(i, s) / (1 - B0 r (2 + r)); the denominator
        must stay positive, which is a domain restriction, not a failure."""
        q = self.B0 * r * (2.0 + r)
        if q >= 1.0:
            raise ThetaDomainError(
                f"growth step undefined: B0*r*(2+r) = {q:.6g} >= 1"
            )
        return self.rho(i, s) / (1.0 - q)


def build_majorants(
    kernel: PerturbationKernel, polys: Sequence[JetPolynomial], N: int
) -> MajorantTable:
    return MajorantTable(kernel, polys, N)


def build_seed_sequence(l0: int, table: MajorantTable) -> Tuple[float, ...]:
    """The admissible seed grading prefix n of length l0 + 1.

    Starts from n0 = (1/3) / B0 and grows by the theta0 step; if the top
    entry violates l0 * n(l0) <= 1 the start is halved and the build
    rerun.  Terminates because rho(i, .) is continuous at 0 with value 0.
    """
    if l0 < 1:
        raise DegenerateInputError(f"need l0 >= 1, got {l0}")
    if l0 > table.N:
        raise ConfigMismatchError(f"l0 = {l0} exceeds majorant order {table.N}")
    n0 = (1.0 / 3.0) / table.B0
    for _ in range(SEED_HALVINGS):
        n = [n0]
        for i in range(l0):
            n.append(table.theta0(n0, n[i], i))
        if l0 * n[l0] <= 1.0:
            return tuple(n)
        n0 *= 0.5
    raise ConstructionError(
        f"seed sequence did not satisfy l0*n(l0) <= 1 within {SEED_HALVINGS} halvings"
    )


def base_point_scales(
    x: SmoothFn, n0: float, l0: int, N: int
) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Sequences x0 (running 1 + sup|x^(l)|) and x1 = x0 / (n0 * x0(l0))."""
    if n0 <= 0:
        raise DegenerateInputError(f"need n0 > 0, got {n0}")
    x0: List[float] = []
    running = 0.0
    for i in range(N + 1):
        running = max(running, 1.0 + x.sup_abs(i))
        x0.append(running)
    denom = n0 * x0[l0]
    x1 = tuple(v / denom for v in x0)
    return tuple(x0), x1


@dataclass(frozen=True)
class ClosureReport:
    """Outcome of the sampled disk-closure check for kernel products."""

    ok: bool
    half_v0_ok: bool
    worst_gauge: float
    witness_u: Optional[SmoothFn]
    witness_v: Optional[SmoothFn]


class GeneratorFamily:
    """The graded family certifying tameness at one base point.

    Carries the seed prefix n, the majorant table, and the base-point
    scale sequences; produces member gradings (canonical, merged,
    absorbing) and re-checks membership of anything it is handed.
    """

    def __init__(
        self,
        op: CompositionOperator,
        x: SmoothFn,
        kernel: PerturbationKernel,
        table: MajorantTable,
        l0: int,
        N: int,
    ) -> None:
        self.op = op
        self.x = x
        self.kernel = kernel
        self.table = table
        self.l0 = l0
        self.N = N
        self.n = build_seed_sequence(l0, table)
        self.x0seq, self.x1seq = base_point_scales(x, self.n[0], l0, N)
        self._canonical: Optional[Grading] = None

    @property
    def B0(self) -> float:
        return self.table.B0

    def theta(self, r: float, s: float, i: int) -> float:
        """Clamped growth step max(theta0, x1(i+1)); defined for i < N."""
        if not 0 <= i < self.N:
            raise OrderRangeError(f"growth-step order {i} outside 0..{self.N - 1}")
        return max(self.table.theta0(r, s, i), self.x1seq[i + 1])

    def _extend(self, prefix: List[float], floor_at) -> Grading:
        # Shared recursion: entry i+1 = max(floor_at(i+1), theta(n0, m_i, i)).
        m = list(prefix)
        for i in range(len(prefix) - 1, self.N):
            nxt = self.theta(self.n[0], m[i], i)
            fl = floor_at(i + 1)
            if fl is not None:
                nxt = max(nxt, fl)
            if not math.isfinite(nxt):
                raise NumericOverflowError(
                    f"grading entry {i + 1} left the float range; "
                    f"reduce the tracked order (N = {self.N})"
                )
            m.append(nxt)
        return Grading(tuple(m))

    def canonical_member(self) -> Grading:
        """The distinguished member: the seed prefix grown by theta."""
        if self._canonical is None:
            self._canonical = self._extend(list(self.n), lambda _i: None)
        return self._canonical

    def is_member(self, m: Grading) -> bool:
        """Membership predicate: seed prefix plus the theta inequality at
        every extended order."""
        if m.N != self.N:
            return False
        if any(m[i] != self.n[i] for i in range(self.l0 + 1)):
            return False
        for i in range(self.l0, self.N):
            if self.theta(m[0], m[i], i) > m[i + 1]:
                return False
        return True

    def merge(self, m1: Grading, m2: Grading) -> Grading:
        """Least member dominating two members (directedness of the family)."""
        if not self.is_member(m1) or not self.is_member(m2):
            raise MembershipError("merge requires two member gradings")
        prefix = [self.n[i] for i in range(self.l0 + 1)]
        out = self._extend(prefix, lambda i: max(m1[i], m2[i]))
        if not self.is_member(out):
            raise ConstructionError("merged grading failed the membership recheck")
        return out

    def absorb(self, b: Sequence[float]) -> Tuple[float, Grading]:
        """Member m and eps > 0 with eps * b_i <= m_i entrywise (absorption
        of the bounded profile b)."""
        vals = [float(v) for v in b]
        if len(vals) != self.N + 1 or any(
            not (v > 0 and math.isfinite(v)) for v in vals
        ):
            raise DegenerateInputError(
                f"profile must be {self.N + 1} positive finite entries"
            )
        eps = min(self.n[i] / vals[i] for i in range(self.l0 + 1))
        prefix = [self.n[i] for i in range(self.l0 + 1)]
        out = self._extend(prefix, lambda i: eps * vals[i])
        if not self.is_member(out):
            raise ConstructionError("absorbing grading failed the membership recheck")
        for i in range(self.N + 1):
            if eps * vals[i] > out[i] * (1.0 + 1e-12):
                raise ConstructionError("absorption bound violated")
        return eps, out

    def base_scale(self) -> float:
        """Scale t >= 1 with the base point inside the dilated canonical disk."""
        return max(1.0, gauge_norm(self.x, self.canonical_member()))

    def verify_closure(
        self, m: Grading, samples: int, seed: int
    ) -> ClosureReport:
        """Sampled check that kernel products of disk elements stay in the
        disk, plus the half-neighborhood condition m_i <= 1/l0 at the
        seed orders.  Requires a member grading."""
        if not self.is_member(m):
            raise MembershipError("closure check requires a member grading")
        # Same form as the seed-sequence exit test, so members inherit it.
        half_ok = all(self.l0 * m[i] <= 1.0 for i in range(self.l0 + 1))
        nodes = self.op.grid.nodes
        worst = -1.0
        pair = (None, None)
        ok = True
        with warnings.catch_warnings():
            # Disk probes sit at the resolution edge by design.
            warnings.simplefilter("ignore", AliasingWarning)
            for k in range(samples):
                u = disk_sample(m, self.op.grid, seed, 2 * k, radius=1.0)
                v = disk_sample(m, self.op.grid, seed, 2 * k + 1, radius=1.0)
                uvals = u.node_values()
                w = project(
                    self.kernel.value(nodes, uvals) * uvals * v.node_values(),
                    self.op.grid,
                )
                g = gauge_norm(w, m)
                if not disk_contains(w, m):
                    ok = False
                if g > worst:
                    worst = g
                    pair = (u, v)
        return ClosureReport(ok and half_ok, half_ok, worst, pair[0], pair[1])

    def report_lines(self) -> List[str]:
        """Key-value lines describing the family (for the text report)."""
        m = self.canonical_member()
        return [
            f"l0: {self.l0}",
            f"B0: {self.B0!r}",
            f"n: {' '.join(repr(v) for v in self.n)}",
            f"canonical_m: {' '.join(repr(v) for v in m.m)}",
        ]


def build_generator(
    op: CompositionOperator,
    x: SmoothFn,
    l0: int,
    N: int,
    quad_nodes: int = 32,
) -> GeneratorFamily:
    """Assembles the full certificate family at base point x.

    Builds the kernel, the correction polynomials to order N+1, the
    majorant table, the seed sequence, and the base-point scales; the
    canonical member is materialized eagerly so overflow surfaces here.
    """
    if l0 < 1:
        raise DegenerateInputError(
            f"need l0 >= 1 (l0 = 0 collapses the seed neighborhood), got {l0}"
        )
    if N < l0:
        raise DegenerateInputError(f"need N >= l0, got N = {N}, l0 = {l0}")
    if op.grid.N != N:
        raise ConfigMismatchError(
            f"grid tracks orders to {op.grid.N} but the family grades 0..{N}; "
            "these must agree for gauge norms to be defined"
        )
    kernel = PerturbationKernel(op, x, quad_nodes)
    polys = build_jet_polynomials(N + 1)
    table = build_majorants(kernel, polys, N)
    family = GeneratorFamily(op, x, kernel, table, l0, N)
    family.canonical_member()
    return family
