"""Lower bounds on the delivery rate via a single concatenated library.

Stacking the libraries into one library of N_max files (file n of the stack
concatenates file n of every library large enough to have one, libraries
sorted by ascending file count) turns any multi-library scheme into a
single-library scheme for the stack. Bounds for the stacked network therefore
bound the original one, after translating units: stacked files average size
sum(alpha_l * N_l) / N_max rather than 1, so memory scales up and rate scales
down by c = N_max / sum(alpha_l * N_l) when crossing over.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .model import NetworkConfig, to_fraction, total_content
from .tradeoff import PiecewiseLinearTradeoff


@dataclass(frozen=True)
class ConcatenatedLibrary:
    """The stacked library: file n has relative size betas[n-1].

    `permutation[i]` is the original 1-based index of the i-th library after
    sorting by file count; `config` is the sorted network.
    """

    config: NetworkConfig
    permutation: tuple[int, ...]
    betas: tuple[Fraction, ...]

    @property
    def num_files(self) -> int:
        return len(self.betas)


def sort_by_library_size(config: NetworkConfig) -> tuple[NetworkConfig, tuple[int, ...]]:
    """Stable-sort libraries by ascending file count; returns (config, permutation)."""
    order = sorted(range(config.num_libraries), key=lambda i: config.libraries[i].num_files)
    sorted_config = NetworkConfig(
        libraries=tuple(config.libraries[i] for i in order),
        num_users=config.num_users,
        cache_size=config.cache_size,
    )
    return sorted_config, tuple(i + 1 for i in order)


def subfile_level(config: NetworkConfig, n: int) -> int:
    """1-based index of the smallest library still holding a file numbered n.

    Requires libraries sorted by ascending file count; stacked file n draws
    one piece from every library at this level or above.
    """
    counts = config.file_counts
    if any(a > b for a, b in zip(counts, counts[1:])):
        raise ValueError(f"libraries must be sorted by file count, got {counts}")
    if not 1 <= n <= counts[-1]:
        raise ValueError(f"file index {n} out of range 1..{counts[-1]}")
    for idx, count in enumerate(counts, start=1):
        if n <= count:
            return idx
    raise AssertionError("unreachable")


def concatenate(config: NetworkConfig) -> ConcatenatedLibrary:
    """Stack all libraries into one of N_max files, sizes normalized so that
    the stack's total content equals N_max file-size units."""
    sorted_config, permutation = sort_by_library_size(config)
    total = total_content(sorted_config)
    if total == 0:
        raise ValueError("network has no content")
    n_max = sorted_config.file_counts[-1]
    betas = []
    for n in range(1, n_max + 1):
        level = subfile_level(sorted_config, n)
        raw = sum(
            (lib.alpha for lib in sorted_config.libraries[level - 1 :]), Fraction(0)
        )
        betas.append(raw / total * n_max)
    return ConcatenatedLibrary(config=sorted_config, permutation=permutation, betas=tuple(betas))


def concatenation_scale(config: NetworkConfig) -> Fraction:
    """Unit conversion factor c = N_max / total content (1 for equal sizes)."""
    total = total_content(config)
    if total == 0:
        raise ValueError("network has no content")
    return Fraction(max(config.file_counts)) / total


def concatenated_cut_set_bound(
    betas: Sequence[Fraction], num_users: int, memory: Fraction
) -> Fraction:
    """Cut bound for one library whose files have the given relative sizes.

    A group of s users demanding b rounds of fresh files receives b payloads
    plus s caches covering the first s*b files in the given order, so
    R >= (beta_1 + ... + beta_{s*b} - s*M) / b for every s, b; clamped at 0.
    Sound for any order; strongest when sizes come largest first, which is the
    stack's natural order.
    """
    memory = to_fraction(memory)
    if memory < 0:
        raise ValueError(f"memory {memory} < 0")
    n = len(betas)
    prefix = [Fraction(0)]
    for b in betas:
        prefix.append(prefix[-1] + b)
    best = Fraction(0)
    for s in range(1, num_users + 1):
        for rounds in range(1, n // s + 1):
            value = (prefix[s * rounds] - s * memory) / rounds
            if value > best:
                best = value
    return best


def converse_bound(
    config: NetworkConfig,
    single_library_bound: Callable[[Fraction], Fraction] | None = None,
) -> Fraction:
    """Lower bound on the network's rate from its stacked single library.

    `single_library_bound(m)` must lower-bound the rate of ANY scheme for the
    stacked library at per-user memory m (in stacked-file units where files
    average size 1). Default: the cut bound on the stack. The crossing scale
    c converts the network's budget into stack units and the stack's rate
    back.
    """
    stack = concatenate(config)
    c = concatenation_scale(config)
    memory = c * config.cache_size
    if single_library_bound is None:
        value = concatenated_cut_set_bound(stack.betas, config.num_users, memory)
    else:
        value = single_library_bound(memory)
    return value / c


@dataclass(frozen=True)
class GapReport:
    """Best known achievable rate vs best converse, and whether they meet."""

    achievable: Fraction
    converse: Fraction
    gap: Fraction
    status: str
    converse_kind: str

    def to_json(self) -> dict:
        return {
            "achievable": str(self.achievable),
            "converse": str(self.converse),
            "gap": str(self.gap),
            "status": self.status,
            "converse_kind": self.converse_kind,
        }


def conjecture_gap(
    config: NetworkConfig, tradeoffs: Sequence[PiecewiseLinearTradeoff]
) -> GapReport:
    """Compare the greedy split's rate against the best available converse.

    Equal-size libraries sharing one curve: the stacked network IS that
    library, so the curve itself is the reference (kind "exact" when the
    curve is optimal, else "scheme"); the gap is provably zero. Otherwise:
    cut bound on the stack (kind "cutset"), gap >= 0, status "open" unless
    it happens to close.
    """
    from .allocation import greedy_allocate  # local import, avoids a cycle

    trace = greedy_allocate(config, tradeoffs)
    counts = set(config.file_counts)
    distinct = {(c.num_files, c.breakpoints, c.slopes, c.intercepts) for c in tradeoffs}
    if len(counts) == 1 and len(distinct) == 1:
        curve = tradeoffs[0]
        converse = converse_bound(config, curve.evaluate)
        kind = "exact" if curve.exact else "scheme"
        status = "tight"
    else:
        converse = converse_bound(config)
        kind = "cutset"
        status = "open"
    gap = trace.rate - converse
    if gap == 0:
        status = "tight"
    return GapReport(
        achievable=trace.rate, converse=converse, gap=gap, status=status, converse_kind=kind
    )
