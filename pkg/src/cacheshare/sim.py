"""Bit-exact placement, delivery, and decoding of the subset-coded scheme.

Files are integer bit strings. A library running at per-library memory m
splits between the two adjacent vertices of its scheme envelope: each file is
cut into one or two parts, part p run at integer cache parameter t_p, and a
part is divided into C(K, t_p) subfiles indexed by the size-t_p user subsets
in lexicographic order. User k caches exactly the subfiles whose subset
contains k. Delivery XORs, per size-(t_p + 1) subset S, the subfiles
wanted-by/unknown-to each member of S; the uncoded part (t = 0) sends each
distinct requested part once. Decoding uses only the user's own cache and the
transcript.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import Sequence

from .allocation import Allocation
from .bits import BitString, concat, random_bits
from .converse import ConcatenatedLibrary, concatenate, sort_by_library_size, subfile_level
from .model import (
    DEFAULT_DEMAND_CAP,
    CapExceededError,
    DemandVector,
    NetworkConfig,
    enumerate_demands,
)
from .tradeoff import build_scheme_tradeoff


class DivisibilityError(ValueError):
    """The base size cannot be cut into the integer subfiles the plan needs."""


class DecodeMismatchError(Exception):
    """A user failed to reconstruct its requested file, with the witness."""

    def __init__(
        self,
        demand: DemandVector,
        user: int,
        library: int,
        expected: BitString,
        actual: BitString,
    ) -> None:
        self.demand = demand
        self.user = user
        self.library = library
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"user {user} decoded library {library} incorrectly under demand {demand.rows}"
        )


@dataclass(frozen=True)
class FileStore:
    """Concrete file contents: files[library][file_id - 1], all bits."""

    base_size: int
    files: tuple[tuple[BitString, ...], ...]


@dataclass(frozen=True)
class SchemePart:
    t: int
    file_bits: int
    subfile_bits: int


@dataclass(frozen=True)
class LibraryPlan:
    parts: tuple[SchemePart, ...]

    @property
    def file_bits(self) -> int:
        return sum(p.file_bits for p in self.parts)


@dataclass(frozen=True)
class PlacementState:
    """Per-user caches, one segment per library: caches[user - 1][library - 1]."""

    allocation: Allocation
    plans: tuple[LibraryPlan, ...]
    caches: tuple[tuple[BitString, ...], ...]

    def cache_bits(self, user: int) -> int:
        return sum(seg.width for seg in self.caches[user - 1])


@dataclass(frozen=True)
class PartTranscript:
    t: int
    uncoded_files: tuple[int, ...]
    coded_subsets: tuple[tuple[int, ...], ...]
    messages: tuple[BitString, ...]

    @property
    def bits(self) -> int:
        return sum(m.width for m in self.messages)


@dataclass(frozen=True)
class DeliveryTranscript:
    demand: DemandVector
    per_library: tuple[tuple[PartTranscript, ...], ...]

    def library_bits(self, library: int) -> int:
        return sum(part.bits for part in self.per_library[library - 1])

    @property
    def total_bits(self) -> int:
        return sum(self.library_bits(lib + 1) for lib in range(len(self.per_library)))

    def payload(self) -> BitString:
        return concat(
            m for parts in self.per_library for part in parts for m in part.messages
        )


def library_bit_requirement(config: NetworkConfig) -> int:
    """Base sizes must be multiples of this just to give files integer bits."""
    req = 1
    for lib in config.libraries:
        req = math.lcm(req, lib.alpha.denominator)
    return req


def random_file_store(config: NetworkConfig, base_size: int, seed: int) -> FileStore:
    """Independent uniform file contents; library l files get alpha_l * base_size bits."""
    req = library_bit_requirement(config)
    if base_size < 1 or base_size % req:
        raise DivisibilityError(
            f"base size {base_size} bits leaves fractional files; use a multiple of {req}"
        )
    rng = random.Random(seed)
    files = tuple(
        tuple(
            random_bits(int(lib.alpha * base_size), rng) for _ in range(lib.num_files)
        )
        for lib in config.libraries
    )
    return FileStore(base_size=base_size, files=files)


def _plan_weights(
    config: NetworkConfig, allocation: Allocation
) -> list[list[tuple[int, Fraction]]]:
    """Per library, the (t, fraction-of-file) parts realizing its memory slice."""
    if len(allocation.per_library) != config.num_libraries:
        raise ValueError(
            f"allocation has {len(allocation.per_library)} entries for "
            f"{config.num_libraries} libraries"
        )
    k = config.num_users
    out: list[list[tuple[int, Fraction]]] = []
    for idx, (lib, budget) in enumerate(zip(config.libraries, allocation.per_library), start=1):
        m = budget / lib.alpha
        n = lib.num_files
        if m > n:
            raise ValueError(
                f"library {idx} gets memory {budget}, more than its content {lib.alpha * n}"
            )
        env = build_scheme_tradeoff(n, k)
        seg = env.segment_index(m) if m < n else env.num_segments
        parts: list[tuple[int, Fraction]]
        if seg == env.num_segments or env.breakpoints[seg] == m:
            theta = m
            t = theta * k / n
            assert t.denominator == 1
            parts = [(int(t), Fraction(1))]
        else:
            lo, hi = env.breakpoints[seg], env.breakpoints[seg + 1]
            t_lo, t_hi = lo * k / n, hi * k / n
            assert t_lo.denominator == 1 and t_hi.denominator == 1
            u = (hi - m) / (hi - lo)
            parts = [(int(t_lo), u), (int(t_hi), 1 - u)]
        out.append(parts)
    return out


def required_base_size(config: NetworkConfig, allocation: Allocation) -> int:
    """Smallest base size (total bits) this split can run at; valid sizes are
    its multiples. Covers whole-bit files, parts, and subfiles."""
    req = library_bit_requirement(config)
    k = config.num_users
    for lib, parts in zip(config.libraries, _plan_weights(config, allocation)):
        for t, weight in parts:
            per_subfile = lib.alpha * weight / math.comb(k, t)
            req = math.lcm(req, per_subfile.denominator)
    return req


def build_plans(
    config: NetworkConfig, allocation: Allocation, base_size: int
) -> tuple[LibraryPlan, ...]:
    weights = _plan_weights(config, allocation)
    req = required_base_size(config, allocation)
    if base_size < 1 or base_size % req:
        raise DivisibilityError(
            f"base size {base_size} bits cannot realize this split; "
            f"use a multiple of {req}"
        )
    k = config.num_users
    plans = []
    for lib, parts in zip(config.libraries, weights):
        scheme_parts = []
        for t, weight in parts:
            sub = lib.alpha * weight * base_size / math.comb(k, t)
            assert sub.denominator == 1
            scheme_parts.append(
                SchemePart(t=t, file_bits=int(sub) * math.comb(k, t), subfile_bits=int(sub))
            )
        plans.append(LibraryPlan(parts=tuple(scheme_parts)))
    return tuple(plans)


@lru_cache(maxsize=None)
def _subsets(num_users: int, size: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(1, num_users + 1), size))


@lru_cache(maxsize=None)
def _subset_rank(num_users: int, size: int) -> dict:
    return {s: i for i, s in enumerate(_subsets(num_users, size))}


@lru_cache(maxsize=None)
def _user_subset_rank(num_users: int, size: int, user: int) -> dict:
    return {s: i for i, s in enumerate(t for t in _subsets(num_users, size) if user in t)}


def _subfile(
    file_content: BitString, plan: LibraryPlan, part_idx: int, num_users: int, subset: tuple
) -> BitString:
    offset = sum(p.file_bits for p in plan.parts[:part_idx])
    part = plan.parts[part_idx]
    rank = _subset_rank(num_users, part.t)[subset]
    start = offset + rank * part.subfile_bits
    return file_content.slice(start, start + part.subfile_bits)


def place(store: FileStore, config: NetworkConfig, allocation: Allocation) -> PlacementState:
    """Fill every user's cache; deterministic given the store and the split.

    Cache layout per (user, library): parts in plan order, files in id order,
    cached subsets in lexicographic order.
    """
    plans = build_plans(config, allocation, store.base_size)
    k = config.num_users
    caches = []
    for user in range(1, k + 1):
        segments = []
        for lib_idx, lib in enumerate(config.libraries):
            pieces = []
            plan = plans[lib_idx]
            for part_idx, part in enumerate(plan.parts):
                if part.t == 0:
                    continue
                for file_id in range(1, lib.num_files + 1):
                    content = store.files[lib_idx][file_id - 1]
                    for subset in _subsets(k, part.t):
                        if user in subset:
                            pieces.append(_subfile(content, plan, part_idx, k, subset))
            segments.append(concat(pieces))
        caches.append(tuple(segments))
    return PlacementState(allocation=allocation, plans=plans, caches=tuple(caches))


def _cached_subfile(
    placement: PlacementState,
    config: NetworkConfig,
    user: int,
    lib_idx: int,
    part_idx: int,
    file_id: int,
    subset: tuple,
) -> BitString:
    plan = placement.plans[lib_idx]
    k = config.num_users
    n = config.libraries[lib_idx].num_files
    base = 0
    for prev in plan.parts[:part_idx]:
        per_file = math.comb(k - 1, prev.t - 1) if prev.t >= 1 else 0
        base += n * per_file * prev.subfile_bits
    part = plan.parts[part_idx]
    per_file = math.comb(k - 1, part.t - 1)
    pos = _user_subset_rank(k, part.t, user)[subset]
    start = base + ((file_id - 1) * per_file + pos) * part.subfile_bits
    segment = placement.caches[user - 1][lib_idx]
    return segment.slice(start, start + part.subfile_bits)


def deliver(
    store: FileStore,
    config: NetworkConfig,
    placement: PlacementState,
    demand: DemandVector,
) -> DeliveryTranscript:
    """Broadcast transcript serving every user's request in one shot."""
    demand.validate_for(config)
    k = config.num_users
    per_library = []
    for lib_idx, lib in enumerate(config.libraries):
        row = demand.rows[lib_idx]
        plan = placement.plans[lib_idx]
        parts = []
        for part_idx, part in enumerate(plan.parts):
            if part.t == 0:
                wanted = tuple(sorted(set(row)))
                messages = tuple(
                    _subfile(store.files[lib_idx][n - 1], plan, part_idx, k, ())
                    for n in wanted
                )
                parts.append(
                    PartTranscript(
                        t=0, uncoded_files=wanted, coded_subsets=(), messages=messages
                    )
                )
                continue
            subsets = _subsets(k, part.t + 1)
            messages = []
            for group in subsets:
                msg = None
                for member in group:
                    rest = tuple(x for x in group if x != member)
                    piece = _subfile(
                        store.files[lib_idx][row[member - 1] - 1], plan, part_idx, k, rest
                    )
                    msg = piece if msg is None else msg ^ piece
                messages.append(msg)
            parts.append(
                PartTranscript(
                    t=part.t,
                    uncoded_files=(),
                    coded_subsets=subsets,
                    messages=tuple(messages),
                )
            )
        per_library.append(tuple(parts))
    return DeliveryTranscript(demand=demand, per_library=tuple(per_library))


def decode(
    placement: PlacementState,
    transcript: DeliveryTranscript,
    config: NetworkConfig,
    user: int,
    library: int,
) -> BitString:
    """Reconstruct the file `user` requested from `library` (both 1-based),
    using only that user's cache and the transcript."""
    lib_idx = library - 1
    k = config.num_users
    row = transcript.demand.rows[lib_idx]
    want = row[user - 1]
    plan = placement.plans[lib_idx]
    pieces = []
    for part_idx, part in enumerate(plan.parts):
        part_tr = transcript.per_library[lib_idx][part_idx]
        if part.t == 0:
            idx = part_tr.uncoded_files.index(want)
            pieces.append(part_tr.messages[idx])
            continue
        for subset in _subsets(k, part.t):
            if user in subset:
                pieces.append(
                    _cached_subfile(placement, config, user, lib_idx, part_idx, want, subset)
                )
            else:
                group = tuple(sorted(subset + (user,)))
                msg = part_tr.messages[_subset_rank(k, part.t + 1)[group]]
                for member in group:
                    if member == user:
                        continue
                    rest = tuple(x for x in group if x != member)
                    msg = msg ^ _cached_subfile(
                        placement, config, user, lib_idx, part_idx, row[member - 1], rest
                    )
                pieces.append(msg)
    return concat(pieces)


@dataclass(frozen=True)
class VerificationReport:
    demands_checked: int
    base_size: int
    allocation: Allocation
    formula_rate: Fraction
    measured_rate: Fraction
    max_total_bits: int
    per_library_max_bits: tuple[int, ...]

    def to_json(self) -> dict:
        from .model import format_decimal

        return {
            "demands_checked": self.demands_checked,
            "base_size": self.base_size,
            "allocation": [str(m) for m in self.allocation.per_library],
            "formula_rate": str(self.formula_rate),
            "measured_rate": str(self.measured_rate),
            "measured_rate_decimal": format_decimal(self.measured_rate),
            "max_total_bits": self.max_total_bits,
            "per_library_max_bits": list(self.per_library_max_bits),
        }


def formula_rate(config: NetworkConfig, allocation: Allocation) -> Fraction:
    """Scheme-envelope rate of the split, the value delivery must realize."""
    rate = Fraction(0)
    for lib, budget in zip(config.libraries, allocation.per_library):
        env = build_scheme_tradeoff(lib.num_files, config.num_users)
        rate += lib.alpha * env.evaluate(budget / lib.alpha)
    return rate


def verify_all(
    store: FileStore,
    config: NetworkConfig,
    allocation: Allocation,
    cap: int = DEFAULT_DEMAND_CAP,
) -> VerificationReport:
    """Drive every demand end to end; raise DecodeMismatchError on the first
    failure (lexicographically first witness), else report exact rates.

    The measured rate is the worst-case transcript length over all demands,
    divided by the base size; it must equal the formula rate bit for bit.
    """
    placement = place(store, config, allocation)
    L = config.num_libraries
    k = config.num_users
    max_total = 0
    per_lib_max = [0] * L
    count = 0
    for demand in enumerate_demands(config, cap):
        transcript = deliver(store, config, placement, demand)
        max_total = max(max_total, transcript.total_bits)
        for lib in range(L):
            per_lib_max[lib] = max(per_lib_max[lib], transcript.library_bits(lib + 1))
        for user in range(1, k + 1):
            for lib in range(1, L + 1):
                actual = decode(placement, transcript, config, user, lib)
                expected = store.files[lib - 1][demand.rows[lib - 1][user - 1] - 1]
                if actual != expected:
                    raise DecodeMismatchError(demand, user, lib, expected, actual)
        count += 1
    return VerificationReport(
        demands_checked=count,
        base_size=store.base_size,
        allocation=allocation,
        formula_rate=formula_rate(config, allocation),
        measured_rate=Fraction(max_total, store.base_size),
        max_total_bits=max_total,
        per_library_max_bits=tuple(per_lib_max),
    )


@dataclass(frozen=True)
class ReductionReport:
    """Outcome of serving stacked-library demands with the multi-library scheme."""

    demands_checked: int
    stacked_file_bits: tuple[int, ...]
    cache_bits: int
    max_total_bits: int

    def to_json(self) -> dict:
        return {
            "demands_checked": self.demands_checked,
            "stacked_file_bits": list(self.stacked_file_bits),
            "cache_bits": self.cache_bits,
            "max_total_bits": self.max_total_bits,
        }


def reduction_demo(
    store: FileStore,
    config: NetworkConfig,
    placement: PlacementState,
    stack: ConcatenatedLibrary | None = None,
    stack_demands: Sequence[tuple[int, ...]] | None = None,
    cap: int = DEFAULT_DEMAND_CAP,
) -> ReductionReport:
    """Serve the stacked single library with the unchanged multi-library scheme.

    A stack demand gives each user one file id in 1..N_max; each library serves
    the id clamped to its own file count, and users at levels below the
    requested file's discard their decode. Every user must recover the full
    stacked file (the pieces of every library large enough to hold it, in
    ascending-file-count order) from the same caches and a transcript no longer
    than the multi-library worst case.
    """
    if stack is None:
        stack = concatenate(config)
    sorted_config, permutation = sort_by_library_size(config)
    if stack.config != sorted_config or stack.permutation != permutation:
        raise ValueError("stack was built for a different network")
    k = config.num_users
    n_max = stack.num_files
    if stack_demands is None:
        total = n_max**k
        if total > cap:
            raise CapExceededError(f"stack enumeration needs {total} vectors, cap is {cap}")
        stack_demands = list(product(range(1, n_max + 1), repeat=k))

    counts = config.file_counts
    max_total = 0
    checked = 0
    for prime in stack_demands:
        if len(prime) != k or any(not 1 <= x <= n_max for x in prime):
            raise ValueError(f"bad stack demand {prime}")
        induced = DemandVector(
            tuple(tuple(min(x, counts[lib]) for x in prime) for lib in range(config.num_libraries))
        )
        transcript = deliver(store, config, placement, induced)
        max_total = max(max_total, transcript.total_bits)
        for user in range(1, k + 1):
            decoded = [
                decode(placement, transcript, config, user, lib)
                for lib in range(1, config.num_libraries + 1)
            ]
            n = prime[user - 1]
            level = subfile_level(sorted_config, n)
            keep = [permutation[pos] for pos in range(level - 1, config.num_libraries)]
            actual = concat(decoded[orig - 1] for orig in keep)
            expected = concat(store.files[orig - 1][n - 1] for orig in keep)
            if actual != expected:
                raise DecodeMismatchError(induced, user, 0, expected, actual)
        checked += 1

    stacked_bits = []
    for n in range(1, n_max + 1):
        level = subfile_level(sorted_config, n)
        width = sum(
            int(lib.alpha * store.base_size) for lib in sorted_config.libraries[level - 1 :]
        )
        stacked_bits.append(width)
    cache_bits = placement.cache_bits(1)
    for user in range(2, k + 1):
        assert placement.cache_bits(user) == cache_bits
    return ReductionReport(
        demands_checked=checked,
        stacked_file_bits=tuple(stacked_bits),
        cache_bits=cache_bits,
        max_total_bits=max_total,
    )
