"""Finite-dimensional working model of smooth functions on [0, 1].

Elements are polynomials stored by their Chebyshev coefficients under the
affine map t = 2s - 1, so the basis is orthogonal on the unit interval and
stays well conditioned up to degree a couple hundred.  Differentiation is
exact (coefficient recurrence with the chain-rule factor 2 folded in);
sup-norms of derivatives are estimated by sampling at M Chebyshev-Lobatto
points, which is exact up to roundoff for the polynomial inputs the
certificate suites use.

Projection back into the model after a nonlinear pointwise operation is
interpolation at the Lobatto nodes truncated to degree D.  With the default
M = 4D+1 the interpolant is alias-free for data of polynomial degree up to
4D, so e.g. cubic compositions of degree-D functions project exactly.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .errors import (
    AliasingWarning,
    ConfigMismatchError,
    DataError,
    IntervalDomainError,
    OrderRangeError,
)

# Evaluation tolerates this much overshoot of [0, 1] before rejecting,
# so points computed as 1 - tiny roundoff still count as inside.
_EVAL_SLACK = 1e-12


@dataclass(frozen=True)
class GridConfig:
    """Discretization parameters shared by every function in a run.

    Attributes:
        D: spectral degree; functions carry D+1 coefficients.
        M: number of sampling nodes used for sup-norms and projection.
        N: highest derivative order tracked by sup_abs and the gradings.
        aliasing_tol: relative magnitude in the trailing 10% of projected
            coefficients above which a projection warns about aliasing.
    """

    D: int = 64
    M: int = 257
    N: int = 8
    aliasing_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.D < 1:
            raise DataError(f"spectral degree must be >= 1, got {self.D}")
        if self.M < self.D + 1:
            raise DataError(f"need at least D+1 = {self.D + 1} nodes, got {self.M}")
        if self.N < 1:
            raise DataError(f"derivative order cap must be >= 1, got {self.N}")
        if not (self.aliasing_tol > 0):
            raise DataError("aliasing_tol must be positive")

    @property
    def nodes(self) -> np.ndarray:
        """The M sampling nodes, ascending in [0, 1]."""
        return _basis(self.D, self.M).nodes


class _Basis(NamedTuple):
    nodes: np.ndarray   # (M,) Lobatto points in [0, 1], ascending
    tnodes: np.ndarray  # (M,) mapped points 2*nodes - 1
    vander: np.ndarray  # (M, D+1) T_j(t_k) for evaluation at the nodes
    proj: np.ndarray    # (D+1, M) node samples -> truncated coefficients


@functools.lru_cache(maxsize=None)
def _basis(D: int, M: int) -> _Basis:
    n = M - 1
    k = np.arange(M)
    nodes = np.sin(k * (np.pi / (2 * n))) ** 2  # ascending Lobatto points
    tnodes = 2.0 * nodes - 1.0
    vander_full = _cheb.chebvander(tnodes, n)  # (M, n+1)
    # Discrete cosine transform weights: half the endpoint samples, and the
    # 0th (and nth) coefficient rows carry half the interior scale.
    w = np.ones(M)
    w[0] = w[-1] = 0.5
    c = np.full(n + 1, 2.0 / n)
    c[0] = c[n] = 1.0 / n
    proj_full = c[:, None] * (vander_full * w[:, None]).T  # (n+1, M)
    basis = _Basis(
        nodes, tnodes, vander_full[:, : D + 1].copy(), proj_full[: D + 1].copy()
    )
    for arr in basis:
        arr.setflags(write=False)
    return basis


@dataclass(frozen=True, eq=False)
class SmoothFn:
    """A degree-D polynomial on [0, 1] in Chebyshev coefficients.

    Immutable after construction; derivative chains and node values are
    cached internally, so repeated sup-norm queries are cheap.
    """

    coeffs: np.ndarray
    config: GridConfig

    def __post_init__(self) -> None:
        arr = np.array(self.coeffs, dtype=float)
        if arr.shape != (self.config.D + 1,):
            raise DataError(
                f"expected {self.config.D + 1} coefficients, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DataError("coefficients must all be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "_dcache", {})
        object.__setattr__(self, "_nodevals", None)

    @classmethod
    def from_coeffs(
        cls, coeffs: Sequence[float], config: GridConfig
    ) -> "SmoothFn":
        """Builds a function from up to D+1 coefficients, zero-padding."""
        arr = np.asarray(coeffs, dtype=float)
        if arr.ndim != 1 or arr.size > config.D + 1:
            raise DataError(
                f"coefficient list must be 1-d with at most {config.D + 1} entries"
            )
        full = np.zeros(config.D + 1)
        full[: arr.size] = arr
        return cls(full, config)

    @classmethod
    def zero(cls, config: GridConfig) -> "SmoothFn":
        return cls(np.zeros(config.D + 1), config)

    @classmethod
    def const(cls, value: float, config: GridConfig) -> "SmoothFn":
        return cls.from_coeffs([float(value)], config)

    @classmethod
    def coordinate(cls, config: GridConfig) -> "SmoothFn":
        """The identity function s on [0, 1]: s = (T_0(t) + T_1(t)) / 2."""
        return cls.from_coeffs([0.5, 0.5], config)

    def __call__(self, s):
        """Evaluates at a point (or array of points) inside [0, 1]."""
        arr = np.asarray(s, dtype=float)
        if arr.size and (arr.min() < -_EVAL_SLACK or arr.max() > 1.0 + _EVAL_SLACK):
            raise IntervalDomainError(
                f"evaluation point outside [0, 1]: range [{arr.min()}, {arr.max()}]"
            )
        t = 2.0 * np.clip(arr, 0.0, 1.0) - 1.0
        out = _cheb.chebval(t, self.coeffs)
        if arr.ndim == 0:
            return float(out)
        return out

    def derivative(self, order: int = 1) -> "SmoothFn":
        """Exact derivative of the given order (default first)."""
        if order < 0:
            raise OrderRangeError(f"derivative order must be >= 0, got {order}")
        if order == 0:
            return self
        cache = self._dcache
        if order not in cache:
            # scl=2 folds in d t / d s for the [0, 1] -> [-1, 1] map.
            dc = _cheb.chebder(self.coeffs, m=order, scl=2.0)
            full = np.zeros(self.config.D + 1)
            full[: dc.size] = dc
            cache[order] = SmoothFn(full, self.config)
        return cache[order]

    def node_values(self) -> np.ndarray:
        """Values at the M sampling nodes (read-only array, cached)."""
        if self._nodevals is None:
            vals = _basis(self.config.D, self.config.M).vander @ self.coeffs
            vals.setflags(write=False)
            object.__setattr__(self, "_nodevals", vals)
        return self._nodevals

    def sup_abs(self, i: int) -> float:
        """Sampled sup of |f^(i)| over the nodes; a lower-bound estimate."""
        if not 0 <= i <= self.config.N:
            raise OrderRangeError(
                f"order {i} outside tracked range 0..{self.config.N}"
            )
        return float(np.max(np.abs(self.derivative(i).node_values())))

    # Vector-space arithmetic; pointwise products are deliberately absent
    # (they leave the degree-D model and must go through project).
    def __add__(self, other: "SmoothFn") -> "SmoothFn":
        if not isinstance(other, SmoothFn):
            return NotImplemented
        return lincomb(1.0, self, 1.0, other)

    def __sub__(self, other: "SmoothFn") -> "SmoothFn":
        if not isinstance(other, SmoothFn):
            return NotImplemented
        return lincomb(1.0, self, -1.0, other)

    def __neg__(self) -> "SmoothFn":
        return SmoothFn(-self.coeffs, self.config)

    def __mul__(self, scalar) -> "SmoothFn":
        if not isinstance(scalar, (int, float)):
            return NotImplemented
        return SmoothFn(float(scalar) * self.coeffs, self.config)

    __rmul__ = __mul__

    def to_text(self) -> str:
        """Serializes as a D header line plus one coefficient per line."""
        lines = [f"D={self.config.D}"]
        lines.extend(repr(float(c)) for c in self.coeffs)
        return "\n".join(lines) + "\n"


def from_text(text: str, config: GridConfig) -> SmoothFn:
    """Parses the to_text format; the declared D must match config.D."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("D="):
        raise DataError("function text must start with a 'D=<degree>' line")
    try:
        deg = int(lines[0][2:])
    except ValueError as exc:
        raise DataError(f"bad degree line {lines[0]!r}") from exc
    if deg != config.D:
        raise DataError(f"file degree {deg} does not match configured D={config.D}")
    if len(lines) != deg + 2:
        raise DataError(f"expected {deg + 1} coefficient lines, got {len(lines) - 1}")
    try:
        coeffs = [float(ln) for ln in lines[1:]]
    except ValueError as exc:
        raise DataError(f"bad coefficient line: {exc}") from exc
    return SmoothFn(np.asarray(coeffs), config)


def lincomb(a: float, f: SmoothFn, b: float, g: SmoothFn) -> SmoothFn:
    """Coefficientwise a*f + b*g; operands must share a configuration."""
    if f.config != g.config:
        raise ConfigMismatchError(
            f"cannot combine functions on {f.config} and {g.config}"
        )
    return SmoothFn(float(a) * f.coeffs + float(b) * g.coeffs, f.config)


def project(samples: Sequence[float], config: GridConfig) -> SmoothFn:
    """Projects M node samples onto the degree-D model.

    Interpolates the samples at the Lobatto nodes and truncates the
    interpolant to degree D.  Reproduces any degree-<=D polynomial from its
    own node values up to roundoff.  When the trailing 10% of the kept
    coefficients still carry relative magnitude above aliasing_tol the data
    was not resolved at this degree and an AliasingWarning is emitted.

    Args:
        samples: exactly M finite values, ordered like config.nodes.
        config: the target discretization.

    Returns:
        The truncated interpolant as a SmoothFn.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.shape != (config.M,):
        raise DataError(f"expected {config.M} samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("samples must all be finite")
    coeffs = _basis(config.D, config.M).proj @ arr
    tail = max(1, (config.D + 1) // 10)
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if float(np.max(np.abs(coeffs[-tail:]))) > config.aliasing_tol * scale:
        warnings.warn(
            "projection input not resolved at degree "
            f"{config.D}: trailing coefficients at relative magnitude "
            f"{float(np.max(np.abs(coeffs[-tail:]))) / scale:.2e}",
            AliasingWarning,
            stacklevel=2,
        )
    return SmoothFn(coeffs, config)
