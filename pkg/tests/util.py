"""Shared helpers for the test suite.

Oracles here deliberately avoid the package's own Chebyshev plumbing
wherever an independent route exists: power-basis Horner evaluation,
sympy closed forms, and an mpmath Chebyshev projection for spectral
derivatives of non-polynomial products.
"""

import numpy as np
import mpmath as mp
from numpy.polynomial import chebyshev as _cheb

from gradedinv import GridConfig, SmoothFn, project

SMALL = GridConfig(D=16, M=65, N=6)
FULL = GridConfig(D=64, M=257, N=6)

# s as a Chebyshev series in t = 2s - 1
S_CHEB = np.array([0.5, 0.5])


def poly_vals(coeffs, s):
    """Horner evaluation of a power-basis polynomial; independent of
    the package's basis code."""
    s = np.asarray(s, dtype=float)
    acc = np.zeros_like(s)
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


def fn_from_poly(coeffs, config):
    """Exact model of a power-basis polynomial (degree <= D assumed).

    Built in coefficient space (compose with s = (1 + t)/2, convert to
    the Chebyshev basis) so trailing coefficients are true zeros; a
    projection would leave a roundoff plateau that repeated
    differentiation amplifies.
    """
    p = np.polynomial.Polynomial(coeffs)(np.polynomial.Polynomial([0.5, 0.5]))
    return SmoothFn.from_coeffs(_cheb.poly2cheb(p.coef), config)


def decayed_fn(seed, index, deg, sup, config):
    """Seeded polynomial with geometrically decayed coefficients,
    rescaled so the node sup is exactly `sup`."""
    rng = np.random.default_rng([seed, index])
    raw = rng.uniform(-1.0, 1.0, deg + 1) * 0.5 ** np.arange(deg + 1)
    f = SmoothFn.from_coeffs(raw, config)
    scale = sup / max(float(np.max(np.abs(f.node_values()))), 1e-12)
    return scale * f


# phi strings whose perturbation kernel at base point 0 is a chosen
# closed form; each is verified exact in test_tameness before any test
# leans on the factorization.
ENGINEERED = {
    "const_one": ("eta + eta^2/8", lambda s, e: np.ones_like(s * e)),
    "const_3_2": ("eta + 3*eta^2/16", lambda s, e: 1.5 * np.ones_like(s * e)),
    "coord": ("s*eta^2/8 + eta", lambda s, e: s * np.ones_like(e)),
    "coord_eta": ("s*eta^3/24 + eta", lambda s, e: s * e),
    "exp_eta": ("eta + (eta/2 - 1)*exp(eta/2)", lambda s, e: np.exp(e) * np.ones_like(s)),
}


def cheb_clenshaw_mp(coeffs, t):
    """Clenshaw recurrence in mpmath for a float coefficient vector."""
    b1 = b2 = mp.mpf(0)
    for c in coeffs[:0:-1]:
        b1, b2 = 2 * t * b1 - b2 + mp.mpf(float(c)), b1
    return t * b1 - b2 + mp.mpf(float(coeffs[0]))


def mp_cheb_coeffs(fn, degree, dps=30, chop="1e-25"):
    """High-precision Chebyshev-Lobatto projection of fn on [0, 1].

    Returns float64 coefficients truncated where the high-precision
    coefficients fall below `chop`; the trailing entries are then true
    zeros rather than a float64 roundoff plateau, so repeated spectral
    differentiation does not amplify projection noise.
    """
    with mp.workdps(dps):
        tj = [mp.cos(mp.pi * j / degree) for j in range(degree + 1)]
        vals = [fn((1 + t) / 2) for t in tj]
        coef = []
        for k in range(degree + 1):
            acc = (vals[0] + (-1) ** k * vals[degree]) / 2
            for j in range(1, degree):
                acc += vals[j] * mp.cos(mp.pi * k * j / degree)
            coef.append(2 * acc / degree)
        coef[0] /= 2
        coef[degree] /= 2
        floor = mp.mpf(chop)
        keep = [k for k, c in enumerate(coef) if abs(c) > floor] or [0]
        return np.array([float(c) for c in coef[: max(keep) + 1]])


def spectral_derivative_vals(wc, order, s):
    """Evaluates the order-th derivative of a Chebyshev series on [0, 1]."""
    return _cheb.chebval(2.0 * np.asarray(s) - 1.0, _cheb.chebder(wc, order, scl=2.0))
