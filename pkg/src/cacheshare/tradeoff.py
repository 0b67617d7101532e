"""Piecewise-linear memory-rate curves for a single file library.

A curve is stored in segment form: breakpoints 0 = theta_0 < ... < theta_r = N
on the memory axis and, on each segment [theta_i, theta_{i+1}], the line
R = zeta_i - gamma_i * m with slope magnitudes gamma_0 > ... > gamma_{r-1} > 0.
That shape (convex, strictly decreasing, hitting zero exactly at m = N) is
enforced at construction, so downstream code can lean on it.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import to_fraction


@dataclass(frozen=True)
class CornerPoint:
    memory: Fraction
    rate: Fraction


@dataclass(frozen=True)
class PiecewiseLinearTradeoff:
    """Convex decreasing memory-rate curve on [0, N], zero at N.

    `label` names the construction (for traces and reports); `exact` marks
    curves known to be the true optimum rather than just achievable.
    """

    num_files: int
    breakpoints: tuple[Fraction, ...]
    slopes: tuple[Fraction, ...]
    intercepts: tuple[Fraction, ...]
    label: str = "custom"
    exact: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "breakpoints", tuple(map(to_fraction, self.breakpoints)))
        object.__setattr__(self, "slopes", tuple(map(to_fraction, self.slopes)))
        object.__setattr__(self, "intercepts", tuple(map(to_fraction, self.intercepts)))
        if self.num_files < 1:
            raise ValueError(f"num_files = {self.num_files} < 1")
        bp, sl, ic = self.breakpoints, self.slopes, self.intercepts
        if len(bp) < 2 or len(sl) != len(bp) - 1 or len(ic) != len(sl):
            raise ValueError("need r >= 1 segments with matching slope/intercept counts")
        if bp[0] != 0 or bp[-1] != self.num_files:
            raise ValueError(f"breakpoints must run from 0 to {self.num_files}, got {bp}")
        if any(a >= b for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(g <= 0 for g in sl):
            raise ValueError("slopes must be positive")
        if any(a <= b for a, b in zip(sl, sl[1:])):
            raise ValueError("slopes must be strictly decreasing (convexity)")
        for i in range(len(sl) - 1):
            left = ic[i] - sl[i] * bp[i + 1]
            right = ic[i + 1] - sl[i + 1] * bp[i + 1]
            if left != right:
                raise ValueError(f"discontinuity at breakpoint {bp[i + 1]}: {left} != {right}")
        if ic[-1] - sl[-1] * bp[-1] != 0:
            raise ValueError(f"curve must hit zero at memory {self.num_files}")

    @property
    def num_segments(self) -> int:
        return len(self.slopes)

    def segment_index(self, memory: Fraction) -> int:
        """Index of the segment containing `memory`; num_segments when full."""
        memory = to_fraction(memory)
        if memory < 0:
            raise ValueError(f"memory {memory} < 0")
        if memory >= self.num_files:
            return self.num_segments
        return bisect_right(self.breakpoints, memory) - 1

    def evaluate(self, memory: Fraction) -> Fraction:
        """Rate at the given memory; zero for any memory at or beyond N."""
        i = self.segment_index(memory)
        if i == self.num_segments:
            return Fraction(0)
        return self.intercepts[i] - self.slopes[i] * to_fraction(memory)

    def right_slope(self, segment: int) -> Fraction:
        """Magnitude of the decrease on segment `segment`; zero past the end."""
        if segment >= self.num_segments:
            return Fraction(0)
        return self.slopes[segment]

    def corner_points(self) -> tuple[CornerPoint, ...]:
        pts = [CornerPoint(bp, self.evaluate(bp)) for bp in self.breakpoints]
        return tuple(pts)


def lower_convex_envelope(
    points: Iterable[tuple[Fraction, Fraction]],
    num_files: int,
    label: str = "envelope",
    exact: bool = False,
) -> PiecewiseLinearTradeoff:
    """Largest convex curve under the given (memory, rate) points.

    Requires anchor points at memory 0 and at (num_files, 0); every input
    point must satisfy 0 <= memory <= num_files and rate >= 0. Collinear
    interior points are merged away, so the result has strictly decreasing
    slopes.
    """
    pts = sorted((to_fraction(m), to_fraction(r)) for m, r in points)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    for (m1, _), (m2, _) in zip(pts, pts[1:]):
        if m1 == m2:
            raise ValueError(f"duplicate memory value {m1}")
    if pts[0][0] != 0:
        raise ValueError("missing anchor point at memory 0")
    if pts[-1] != (Fraction(num_files), Fraction(0)):
        raise ValueError(f"missing anchor point ({num_files}, 0)")
    for m, r in pts:
        if r < 0:
            raise ValueError(f"negative rate {r} at memory {m}")

    hull: list[tuple[Fraction, Fraction]] = []
    for p in pts:
        # pop the middle point while it sits on or above the chord
        while len(hull) >= 2:
            (ax, ay), (bx, by) = hull[-2], hull[-1]
            if (by - ay) * (p[0] - bx) >= (p[1] - by) * (bx - ax):
                hull.pop()
            else:
                break
        hull.append(p)

    breakpoints = tuple(m for m, _ in hull)
    slopes = []
    intercepts = []
    for (m1, r1), (m2, r2) in zip(hull, hull[1:]):
        gamma = (r1 - r2) / (m2 - m1)
        slopes.append(gamma)
        intercepts.append(r1 + gamma * m1)
    return PiecewiseLinearTradeoff(
        num_files=num_files,
        breakpoints=breakpoints,
        slopes=tuple(slopes),
        intercepts=tuple(intercepts),
        label=label,
        exact=exact,
    )


def scheme_corner_points(num_files: int, num_users: int) -> tuple[tuple[Fraction, Fraction], ...]:
    """Achievable (memory, rate) corners of the subset-coded broadcast scheme.

    For cache parameter t = 0..K the scheme stores t/K of each file and
    serves any demand at rate (K - t)/(1 + t), capped for t = 0 by sending
    each of the at most min(N, K) distinct requested files whole.
    """
    if num_files < 1 or num_users < 1:
        raise ValueError("need at least one file and one user")
    n, k = num_files, num_users
    pts = [(Fraction(0), Fraction(min(n, k)))]
    for t in range(1, k + 1):
        pts.append((Fraction(t * n, k), Fraction(k - t, 1 + t)))
    return tuple(pts)


def build_scheme_tradeoff(num_files: int, num_users: int) -> PiecewiseLinearTradeoff:
    """Envelope of the subset-coded scheme's corners for one library."""
    pts = scheme_corner_points(num_files, num_users)
    return lower_convex_envelope(
        pts, num_files, label=f"scheme(N={num_files},K={num_users})", exact=False
    )


def build_exact_two_by_two() -> PiecewiseLinearTradeoff:
    """Optimal curve for two files and two users: corners (0,2), (1/2,1), (1,1/2), (2,0)."""
    pts = [
        (Fraction(0), Fraction(2)),
        (Fraction(1, 2), Fraction(1)),
        (Fraction(1), Fraction(1, 2)),
        (Fraction(2), Fraction(0)),
    ]
    return lower_convex_envelope(pts, 2, label="exact2x2", exact=True)


def cut_set_bound(num_files: int, num_users: int, memory: Fraction) -> Fraction:
    """Cut-based lower bound on the rate of any single-library scheme.

    For each group size s, a cut serving s users floor(N/s) times in a row
    yields R >= s - s*M / floor(N/s); the bound is the best such cut,
    clamped at zero.
    """
    memory = to_fraction(memory)
    if memory < 0:
        raise ValueError(f"memory {memory} < 0")
    best = Fraction(0)
    for s in range(1, min(num_files, num_users) + 1):
        value = s - Fraction(s, num_files // s) * memory
        if value > best:
            best = value
    return best


def tradeoff_to_json(curve: PiecewiseLinearTradeoff) -> list[list[str]]:
    """Corner-list serialization: [[memory, rate], ...] as exact strings."""
    return [[str(p.memory), str(p.rate)] for p in curve.corner_points()]


def tradeoff_from_json(
    data: Sequence[Sequence[str]], label: str = "custom", exact: bool = False
) -> PiecewiseLinearTradeoff:
    """Rebuild a curve from its corner list, revalidating shape on the way."""
    pts = [(to_fraction(m), to_fraction(r)) for m, r in data]
    if not pts:
        raise ValueError("empty corner list")
    num_files_frac = max(m for m, _ in pts)
    if num_files_frac.denominator != 1:
        raise ValueError(f"last corner memory {num_files_frac} is not an integer file count")
    return lower_convex_envelope(pts, int(num_files_frac), label=label, exact=exact)


def build_by_kind(kind: str, num_files: int, num_users: int) -> PiecewiseLinearTradeoff:
    """Construct a named curve: 'scheme', 'exact2x2', or 'auto' (exact when known)."""
    if kind == "auto":
        if num_files == 2 and num_users == 2:
            return build_exact_two_by_two()
        return build_scheme_tradeoff(num_files, num_users)
    if kind == "scheme":
        return build_scheme_tradeoff(num_files, num_users)
    if kind == "exact2x2":
        if num_files != 2 or num_users != 2:
            raise ValueError("exact2x2 applies only to two files and two users")
        return build_exact_two_by_two()
    raise ValueError(f"unknown tradeoff kind {kind!r}")
