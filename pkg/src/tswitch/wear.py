"""Circuit-breaker wear accounting from a duty curve.

Each interruption at current ``I`` consumes ``k(I)`` units of a fixed
operations budget; ``k`` is interpolated linearly in log-log space between
the curve's knots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import OutOfRange, ValidationError

DEFAULT_BUDGET = 6000.0
DEFAULT_NORMAL_CURRENT_KA = 3.15
DEFAULT_FAULT_CURRENT_KA = 40.0


@dataclass(frozen=True)
class DutyCurve:
    points: tuple[tuple[float, float], ...]
    budget: float = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        pts = tuple((float(i), float(k)) for i, k in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise ValidationError("duty curve needs at least one point")
        for (i0, k0), (i1, k1) in zip(pts, pts[1:]):
            if not i1 > i0:
                raise ValidationError("duty curve currents must be strictly increasing")
            if k1 < k0:
                raise ValidationError("duty curve weights must be non-decreasing")
        if pts[0][0] <= 0:
            raise ValidationError("duty curve currents must be positive")
        if pts[0][1] != 1.0 or any(k < 1.0 for _, k in pts):
            raise ValidationError("duty curve must start at weight 1 and never drop below it")
        if self.budget <= 0:
            raise ValidationError("duty curve budget must be positive")

    @property
    def normal_current(self) -> float:
        return self.points[0][0]

    @classmethod
    def default(cls, normal_current: float = DEFAULT_NORMAL_CURRENT_KA) -> "DutyCurve":
        """Two-knot curve: weight 1 at normal current, 10 operations' worth of budget at 40 kA."""
        return cls(
            ((normal_current, 1.0), (DEFAULT_FAULT_CURRENT_KA, DEFAULT_BUDGET / 10.0)),
            DEFAULT_BUDGET,
        )


# (current kA, number of interruptions)
SwitchHistory = Sequence[tuple[float, int]]


def weight_at(curve: DutyCurve, current: float) -> float:
    """Wear weight for one interruption at ``current`` kA."""
    pts = curve.points
    lo, hi = pts[0][0], pts[-1][0]
    if not lo <= current <= hi:
        raise OutOfRange(f"current {current} kA outside duty curve range [{lo}, {hi}]")
    for i0, k0 in pts:
        if current == i0:
            return k0
    for (i0, k0), (i1, k1) in zip(pts, pts[1:]):
        if i0 < current < i1:
            s = (math.log(current) - math.log(i0)) / (math.log(i1) - math.log(i0))
            return math.exp(math.log(k0) + s * (math.log(k1) - math.log(k0)))
    raise OutOfRange(f"current {current} kA not bracketed")  # pragma: no cover


def consumed(curve: DutyCurve, history: Iterable[tuple[float, int]]) -> float:
    total = 0.0
    for current, count in history:
        if count < 0:
            raise ValidationError("interruption counts must be non-negative")
        total += count * weight_at(curve, current)
    return total


def remaining_operations(
    curve: DutyCurve, history: Iterable[tuple[float, int]], current: float
) -> int:
    """Whole interruptions at ``current`` left before maintenance is due."""
    k_x = weight_at(curve, current)
    left = (curve.budget - consumed(curve, history)) / k_x
    # guard against 5399.999999 style rounding at exact knots
    return max(0, math.floor(left + 1e-9))
