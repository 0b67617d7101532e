"""Splitting one cache budget across libraries and rating the result.

Serving each library with its own single-library scheme on a slice of the
cache gives total rate sum_l alpha_l * R_l(M_l / alpha_l) for any split
(M_1, ..., M_L) of the budget. The functions here evaluate that rate, find
the best split (greedy, provably optimal; brute force as an oracle), sweep
two-library splits, and certify the equal-size case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

from .model import CapExceededError, NetworkConfig, to_fraction
from .tradeoff import PiecewiseLinearTradeoff


@dataclass(frozen=True)
class Allocation:
    """Per-library cache memory, in the same units as the cache budget."""

    per_library: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_library", tuple(map(to_fraction, self.per_library)))
        if any(m < 0 for m in self.per_library):
            raise ValueError(f"negative allocation in {self.per_library}")

    @property
    def total(self) -> Fraction:
        return sum(self.per_library, Fraction(0))


@dataclass(frozen=True)
class AllocationStep:
    """One greedy step: library chosen (1-based), its segment before the step,
    memory added, and the running total afterwards."""

    library: int
    segment: int
    delta: Fraction
    allocated_total: Fraction


@dataclass(frozen=True)
class AllocationTrace:
    steps: tuple[AllocationStep, ...]
    final: Allocation
    rate: Fraction
    tradeoff_labels: tuple[str, ...]


def check_pairing(
    config: NetworkConfig, tradeoffs: Sequence[PiecewiseLinearTradeoff]
) -> None:
    """Each library needs a curve built for its own file count."""
    if len(tradeoffs) != config.num_libraries:
        raise ValueError(
            f"{len(tradeoffs)} tradeoffs for {config.num_libraries} libraries"
        )
    for idx, (lib, curve) in enumerate(zip(config.libraries, tradeoffs), start=1):
        if curve.num_files != lib.num_files:
            raise ValueError(
                f"library {idx} holds {lib.num_files} files but its tradeoff "
                f"covers {curve.num_files}"
            )


def memory_sharing_rate(
    config: NetworkConfig,
    allocation: Allocation,
    tradeoffs: Sequence[PiecewiseLinearTradeoff],
) -> Fraction:
    """Total delivery rate when library l runs on allocation.per_library[l].

    The split must use the whole budget exactly; rates are weighted by each
    library's size share.
    """
    check_pairing(config, tradeoffs)
    if len(allocation.per_library) != config.num_libraries:
        raise ValueError(
            f"allocation has {len(allocation.per_library)} entries for "
            f"{config.num_libraries} libraries"
        )
    if allocation.total != config.cache_size:
        raise ValueError(
            f"allocation totals {allocation.total}, budget is {config.cache_size}"
        )
    rate = Fraction(0)
    for lib, m, curve in zip(config.libraries, allocation.per_library, tradeoffs):
        rate += lib.alpha * curve.evaluate(m / lib.alpha)
    return rate


def proportional_allocation(config: NetworkConfig) -> Allocation:
    """Split the budget in proportion to each library's share of total content."""
    total = sum((lib.alpha * lib.num_files for lib in config.libraries), Fraction(0))
    if total == 0:
        raise ValueError("network has no content")
    return Allocation(
        tuple(config.cache_size * lib.alpha * lib.num_files / total for lib in config.libraries)
    )


def greedy_allocate(
    config: NetworkConfig, tradeoffs: Sequence[PiecewiseLinearTradeoff]
) -> AllocationTrace:
    """Fill the budget segment by segment, always into the library whose next
    segment lowers the total rate fastest per unit of cache.

    Library l sitting on segment i contributes alpha_l * R_l(M_l / alpha_l)
    to the rate, so one more unit of cache there buys a reduction of exactly
    gamma_i — the alpha weight and the per-library memory rescaling cancel.
    The ranking key is therefore the raw segment slope. Ties go to the
    smallest library index. The last step may stop mid-segment; every other
    library ends exactly on a corner.
    """
    check_pairing(config, tradeoffs)
    alphas = config.alphas
    budget = config.cache_size
    cursor = [0] * config.num_libraries
    filled = [Fraction(0)] * config.num_libraries
    steps: list[AllocationStep] = []
    total = Fraction(0)
    while total < budget:
        best = -1
        best_slope = Fraction(-1)
        for lib in range(config.num_libraries):
            seg = cursor[lib]
            if seg >= tradeoffs[lib].num_segments:
                continue
            gain = tradeoffs[lib].slopes[seg]
            if gain > best_slope:
                best, best_slope = lib, gain
        if best < 0:
            # every curve exhausted; cannot happen while total < total content
            raise ValueError(f"budget {budget} exceeds total content")
        curve = tradeoffs[best]
        seg = cursor[best]
        seg_width = alphas[best] * (curve.breakpoints[seg + 1] - curve.breakpoints[seg])
        delta = min(seg_width, budget - total)
        filled[best] += delta
        total += delta
        steps.append(AllocationStep(best + 1, seg, delta, total))
        if delta == seg_width:
            cursor[best] += 1
    final = Allocation(tuple(filled))
    rate = memory_sharing_rate(config, final, tradeoffs)
    return AllocationTrace(
        steps=tuple(steps),
        final=final,
        rate=rate,
        tradeoff_labels=tuple(curve.label for curve in tradeoffs),
    )


def _compositions(total: int, parts: int):
    """All tuples of `parts` non-negative ints summing to `total`, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def brute_force_allocate(
    config: NetworkConfig,
    tradeoffs: Sequence[PiecewiseLinearTradeoff],
    grid_step: Fraction,
    cap: int = 250_000,
) -> tuple[Allocation, Fraction]:
    """Exhaustive oracle over grid splits plus corner-aligned splits.

    Grid: every split whose entries are multiples of grid_step. Corner-aligned:
    for each choice of one free library, every combination of the others'
    corner memories, remainder to the free library (kept when it fits inside
    that library's content). The best split has at most one library off a
    corner, so the corner-aligned family contains an optimum; the grid adds
    interior probes. Ties resolve to the lexicographically smallest split.
    """
    check_pairing(config, tradeoffs)
    grid_step = to_fraction(grid_step)
    if grid_step <= 0:
        raise ValueError(f"grid step {grid_step} must be positive")
    L = config.num_libraries
    budget = config.cache_size
    alphas = config.alphas

    ratio = budget / grid_step
    grid_count = 0
    if ratio.denominator == 1:
        grid_count = math.comb(int(ratio) + L - 1, L - 1)
    corner_count = 0
    for free in range(L):
        combo = 1
        for lib in range(L):
            if lib != free:
                combo *= len(tradeoffs[lib].breakpoints)
        corner_count += combo
    if grid_count + corner_count > cap:
        raise CapExceededError(
            f"oracle would evaluate {grid_count + corner_count} splits, cap is {cap}"
        )

    candidates: list[tuple[Fraction, ...]] = []
    if ratio.denominator == 1:
        for comp in _compositions(int(ratio), L):
            candidates.append(tuple(k * grid_step for k in comp))
    for free in range(L):
        corner_axes = [
            [bp * alphas[lib] for bp in tradeoffs[lib].breakpoints]
            for lib in range(L)
            if lib != free
        ]
        content_free = alphas[free] * tradeoffs[free].num_files
        for combo in product(*corner_axes):
            remainder = budget - sum(combo, Fraction(0))
            if 0 <= remainder <= content_free:
                split = list(combo)
                split.insert(free, remainder)
                candidates.append(tuple(split))

    best_split: tuple[Fraction, ...] | None = None
    best_rate: Fraction | None = None
    for split in candidates:
        rate = memory_sharing_rate(config, Allocation(split), tradeoffs)
        if (
            best_rate is None
            or rate < best_rate
            or (rate == best_rate and split < best_split)
        ):
            best_split, best_rate = split, rate
    if best_split is None:
        raise ValueError("no feasible split on the grid")
    return Allocation(best_split), best_rate


def corner_structure_violations(
    config: NetworkConfig,
    tradeoffs: Sequence[PiecewiseLinearTradeoff],
    allocation: Allocation,
) -> list[str]:
    """Check the shape an optimal split must have; empty list means it holds.

    At most one library may sit strictly inside a segment, and no library's
    next-segment gain may beat a segment somebody already consumed, nor the
    gain still available where the partially filled library stopped.
    """
    check_pairing(config, tradeoffs)
    alphas = config.alphas
    L = config.num_libraries
    index: list[int] = []
    interior: list[bool] = []
    for lib in range(L):
        m = allocation.per_library[lib] / alphas[lib]
        curve = tradeoffs[lib]
        seg = curve.segment_index(m)
        at_corner = seg == curve.num_segments or curve.breakpoints[seg] == m
        index.append(seg)
        interior.append(not at_corner)

    violations: list[str] = []
    inside = [lib for lib in range(L) if interior[lib]]
    if len(inside) > 1:
        violations.append(
            f"libraries {[lib + 1 for lib in inside]} all sit strictly inside a segment"
        )
    if inside:
        pivot = inside[0]
    else:
        pivot = max(range(L), key=lambda lib: tradeoffs[lib].right_slope(index[lib]))
    pivot_gain = tradeoffs[pivot].right_slope(index[pivot])
    for lib in range(L):
        gain = tradeoffs[lib].right_slope(index[lib])
        if gain > pivot_gain:
            violations.append(
                f"library {lib + 1} next gain {gain} beats stopping gain {pivot_gain}"
            )
        for other in range(L):
            if index[other] == 0:
                continue
            consumed = tradeoffs[other].slopes[index[other] - 1]
            if gain > consumed:
                violations.append(
                    f"library {lib + 1} next gain {gain} beats consumed segment "
                    f"of library {other + 1} ({consumed})"
                )
    return violations


@dataclass(frozen=True)
class SweepSegment:
    """Rate as intercept + slope * share on [start, end]."""

    start: Fraction
    end: Fraction
    intercept: Fraction
    slope: Fraction


@dataclass(frozen=True)
class SweepResult:
    points: tuple[tuple[Fraction, Fraction], ...]
    breakpoints: tuple[Fraction, ...]
    segments: tuple[SweepSegment, ...]

    def minimum(self) -> tuple[Fraction, Fraction]:
        """(share, rate) of the lowest sampled point; ties to the smallest share."""
        best = min(self.points, key=lambda p: (p[1], p[0]))
        return best


def lambda_sweep(
    config: NetworkConfig,
    tradeoffs: Sequence[PiecewiseLinearTradeoff],
    num_samples: int = 11,
) -> SweepResult:
    """Rate of a two-library network as the first library's budget share runs 0..1.

    Share l puts l * M into library one and the rest into library two. The
    sampled points always include every breakpoint of the piecewise-linear
    rate, and `segments` gives the exact line on each stretch between them.
    """
    check_pairing(config, tradeoffs)
    if config.num_libraries != 2:
        raise ValueError(f"sweep needs exactly two libraries, got {config.num_libraries}")
    if num_samples < 2:
        raise ValueError("need at least two samples")
    budget = config.cache_size
    a1, a2 = config.alphas
    t1, t2 = tradeoffs

    def rate_of(share: Fraction) -> Fraction:
        alloc = Allocation((share * budget, (1 - share) * budget))
        return memory_sharing_rate(config, alloc, tradeoffs)

    def line_at(share: Fraction) -> tuple[Fraction, Fraction]:
        # rate = intercept + slope * share on the segment containing `share`
        i = t1.segment_index(share * budget / a1)
        j = t2.segment_index((1 - share) * budget / a2)
        z1, g1 = (
            (t1.intercepts[i], t1.slopes[i]) if i < t1.num_segments else (Fraction(0),) * 2
        )
        z2, g2 = (
            (t2.intercepts[j], t2.slopes[j]) if j < t2.num_segments else (Fraction(0),) * 2
        )
        intercept = a1 * z1 + a2 * z2 - g2 * budget
        slope = (g2 - g1) * budget
        return intercept, slope

    cuts = {Fraction(0), Fraction(1)}
    if budget > 0:
        for theta in t1.breakpoints[1:]:
            share = theta * a1 / budget
            if 0 < share < 1:
                cuts.add(share)
        for theta in t2.breakpoints[1:]:
            share = 1 - theta * a2 / budget
            if 0 < share < 1:
                cuts.add(share)
    cut_list = sorted(cuts)

    segments: list[SweepSegment] = []
    for lo, hi in zip(cut_list, cut_list[1:]):
        intercept, slope = line_at((lo + hi) / 2)
        if segments and (segments[-1].intercept, segments[-1].slope) == (intercept, slope):
            last = segments.pop()
            segments.append(SweepSegment(last.start, hi, intercept, slope))
        else:
            segments.append(SweepSegment(lo, hi, intercept, slope))
    breakpoints = tuple(
        [segments[0].start] + [seg.end for seg in segments]
    )

    shares = set(breakpoints)
    for k in range(num_samples):
        shares.add(Fraction(k, num_samples - 1))
    points = tuple((s, rate_of(s)) for s in sorted(shares))
    return SweepResult(points=points, breakpoints=breakpoints, segments=tuple(segments))


@dataclass(frozen=True)
class OptimalityCertificate:
    """Equal-size-library certificate: the three rates that must coincide."""

    memory: Fraction
    proportional_rate: Fraction
    pooled_rate: Fraction
    greedy_rate: Fraction
    tradeoff_label: str
    exact_tradeoff: bool

    @property
    def holds(self) -> bool:
        return self.proportional_rate == self.pooled_rate == self.greedy_rate


def certify_equal_n_optimality(
    config: NetworkConfig, tradeoffs: Sequence[PiecewiseLinearTradeoff]
) -> OptimalityCertificate:
    """When all libraries are the same size and share one curve, splitting the
    budget proportionally matches running a single pooled library at the full
    budget, and the greedy split matches both. Returns the three rates.
    """
    check_pairing(config, tradeoffs)
    counts = set(config.file_counts)
    if len(counts) != 1:
        raise ValueError(f"certification needs equal library sizes, got {sorted(counts)}")
    distinct = {
        (c.num_files, c.breakpoints, c.slopes, c.intercepts) for c in tradeoffs
    }
    if len(distinct) != 1:
        raise ValueError("certification needs one shared tradeoff across libraries")
    curve = tradeoffs[0]
    prop = memory_sharing_rate(config, proportional_allocation(config), tradeoffs)
    pooled = curve.evaluate(config.cache_size)
    greedy = greedy_allocate(config, tradeoffs).rate
    return OptimalityCertificate(
        memory=config.cache_size,
        proportional_rate=prop,
        pooled_rate=pooled,
        greedy_rate=greedy,
        tradeoff_label=curve.label,
        exact_tradeoff=curve.exact,
    )
