"""Graded Banach disks and their gauge (Minkowski) norms.

A grading m = (m_0, ..., m_N) defines the disk of functions whose i-th
derivative stays within m_i in sup-norm for every tracked order i.  The
gauge of that disk, max_i sup|x^(i)| / m_i, is the norm certificates are
stated in.  Truncation at order N keeps every gauge finite, so the value
is a plain float; math.inf is reserved as the marker for the untruncated
infinite case and is never produced here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import math

from .errors import ConfigMismatchError, DataError, DegenerateInputError
from .smoothfn import SmoothFn

# Containment tests allow this much slack to absorb sampled-sup error.
CONTAINMENT_SLACK = 1e-9

#: Marker for an infinite gauge; kept for API completeness only.
INFINITE_GAUGE = math.inf


@dataclass(frozen=True)
class Grading:
    """A positive, finite, nondecreasing sequence of derivative bounds."""

    m: tuple

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.m)
        if len(vals) < 2:
            raise DataError("a grading needs at least two entries (orders 0 and 1)")
        for i, v in enumerate(vals):
            if not (v > 0 and math.isfinite(v)):
                raise DataError(f"grading entry {i} must be positive finite, got {v}")
        for i in range(len(vals) - 1):
            if vals[i] > vals[i + 1]:
                raise DataError(
                    f"grading must be nondecreasing; entries {i}, {i + 1} are "
                    f"{vals[i]}, {vals[i + 1]}"
                )
        object.__setattr__(self, "m", vals)

    @property
    def N(self) -> int:
        return len(self.m) - 1

    def __len__(self) -> int:
        return len(self.m)

    def __getitem__(self, i: int) -> float:
        return self.m[i]

    def __iter__(self) -> Iterator[float]:
        return iter(self.m)

    def scaled(self, factor: float) -> "Grading":
        """Entrywise positive rescaling (dilates the disk by factor)."""
        if not (factor > 0 and math.isfinite(factor)):
            raise DataError(f"scale factor must be positive finite, got {factor}")
        return Grading(tuple(factor * v for v in self.m))

    def to_text(self) -> str:
        """One decimal per line, orders ascending."""
        return "\n".join(repr(v) for v in self.m) + "\n"


def grading_from_text(text: str) -> Grading:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    try:
        vals = tuple(float(ln) for ln in lines)
    except ValueError as exc:
        raise DataError(f"bad grading line: {exc}") from exc
    return Grading(vals)


def _check_order(x: SmoothFn, m: Grading) -> None:
    if x.config.N != m.N:
        raise ConfigMismatchError(
            f"function tracks orders 0..{x.config.N} but grading has 0..{m.N}"
        )


def gauge_norm(x: SmoothFn, m: Grading) -> float:
    """Gauge of x in the disk of m: max_i sup|x^(i)| / m_i.

    Absolutely homogeneous and subadditive; zero exactly for the zero
    function.  Finite for every input under order truncation.
    """
    _check_order(x, m)
    return max(x.sup_abs(i) / m.m[i] for i in range(m.N + 1))


def disk_contains(x: SmoothFn, m: Grading) -> bool:
    """Whether x lies in the (slightly inflated) unit disk of m."""
    return gauge_norm(x, m) <= 1.0 + CONTAINMENT_SLACK


def scale_to_disk(x: SmoothFn, m: Grading):
    """Normalizes x onto the disk boundary: returns (t, u) with x = t*u.

    t is the gauge of x and u has gauge 1; the zero function cannot be
    normalized and is rejected.
    """
    t = gauge_norm(x, m)
    if t == 0.0:
        raise DegenerateInputError("cannot scale the zero function onto the disk")
    return t, (1.0 / t) * x
