"""Network description: file libraries, users, caches, and demands.

Every analytical quantity (size weights, cache budget, rates) is a
`fractions.Fraction`, so comparisons and breakpoints are decided exactly.
Floats are refused at the boundary rather than silently truncated.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator

DEFAULT_DEMAND_CAP = 4096


class CapExceededError(ValueError):
    """An enumeration would exceed its configured cap."""


def to_fraction(value: int | str | Fraction) -> Fraction:
    """Coerce exact input (int, "p/q" or "n" string, Fraction) to Fraction.

    Floats are rejected: 0.4 is not 2/5, and a silently inexact size weight
    would poison every downstream comparison.
    """
    if isinstance(value, float):
        raise TypeError(f"refusing inexact float {value!r}; pass a string like '2/5'")
    return Fraction(value)


def format_decimal(value: Fraction) -> str:
    """Render a rational as a decimal string with 17 significant digits."""
    return f"{float(value):.17g}"


@dataclass(frozen=True)
class LibrarySpec:
    """One file library: how many files it holds and its size weight."""

    num_files: int
    alpha: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", to_fraction(self.alpha))


@dataclass(frozen=True)
class NetworkConfig:
    """A broadcast caching network: libraries, user count, per-user cache size.

    Construction is permissive (bad values are reported by `validate`, not
    raised), with one exception: a cache larger than the total content is
    clamped down to it, with a warning, because extra cache can never help.
    """

    libraries: tuple[LibrarySpec, ...]
    num_users: int
    cache_size: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "libraries", tuple(self.libraries))
        cache = to_fraction(self.cache_size)
        total = sum((lib.alpha * lib.num_files for lib in self.libraries), Fraction(0))
        if cache > total:
            warnings.warn(
                f"cache size {cache} exceeds total content {total}; clamping",
                stacklevel=2,
            )
            cache = total
        object.__setattr__(self, "cache_size", cache)

    @property
    def num_libraries(self) -> int:
        return len(self.libraries)

    @property
    def alphas(self) -> tuple[Fraction, ...]:
        return tuple(lib.alpha for lib in self.libraries)

    @property
    def file_counts(self) -> tuple[int, ...]:
        return tuple(lib.num_files for lib in self.libraries)


@dataclass(frozen=True)
class DemandVector:
    """One request per (library, user): rows[library][user], file ids 1-based."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(tuple(row) for row in self.rows))

    def validate_for(self, config: NetworkConfig) -> None:
        """Raise ValueError unless this demand fits the config's shape and ranges."""
        if len(self.rows) != config.num_libraries:
            raise ValueError(
                f"demand has {len(self.rows)} rows, config has {config.num_libraries} libraries"
            )
        for lib_idx, row in enumerate(self.rows):
            if len(row) != config.num_users:
                raise ValueError(
                    f"demand row {lib_idx + 1} has {len(row)} entries, "
                    f"config has {config.num_users} users"
                )
            n = config.libraries[lib_idx].num_files
            for entry in row:
                if not 1 <= entry <= n:
                    raise ValueError(
                        f"demand entry {entry} out of range 1..{n} in library {lib_idx + 1}"
                    )


def validate(config: NetworkConfig) -> list[str]:
    """Return human-readable violations; an empty list means the config is sound."""
    violations: list[str] = []
    if config.num_libraries == 0:
        violations.append("no libraries")
    for idx, lib in enumerate(config.libraries, start=1):
        if lib.num_files < 1:
            violations.append(f"library {idx}: num_files = {lib.num_files} < 1")
        if lib.alpha <= 0:
            violations.append(f"library {idx}: alpha = {lib.alpha} <= 0")
    alpha_sum = sum(config.alphas, Fraction(0))
    if config.libraries and alpha_sum != 1:
        violations.append(f"normalization sum = {alpha_sum} != 1")
    if config.num_users < 1:
        violations.append(f"num_users = {config.num_users} < 1")
    if config.cache_size < 0:
        violations.append(f"cache_size = {config.cache_size} < 0")
    return violations


def total_content(config: NetworkConfig) -> Fraction:
    """Combined size of all files across libraries, in file-size units."""
    return sum((lib.alpha * lib.num_files for lib in config.libraries), Fraction(0))


def demand_count(config: NetworkConfig) -> int:
    count = 1
    for lib in config.libraries:
        count *= lib.num_files**config.num_users
    return count


def enumerate_demands(
    config: NetworkConfig, cap: int = DEFAULT_DEMAND_CAP
) -> Iterator[DemandVector]:
    """Yield every demand vector in lexicographic order (library-major, then user).

    Raises CapExceededError up front, naming the count, when the full space
    would exceed `cap`.
    """
    count = demand_count(config)
    if count > cap:
        raise CapExceededError(f"demand enumeration needs {count} vectors, cap is {cap}")
    k = config.num_users
    ranges = [range(1, lib.num_files + 1) for lib in config.libraries for _ in range(k)]
    for flat in product(*ranges):
        rows = tuple(flat[i * k : (i + 1) * k] for i in range(config.num_libraries))
        yield DemandVector(rows)


def config_to_json(config: NetworkConfig) -> dict:
    return {
        "libraries": [
            {"num_files": lib.num_files, "alpha": str(lib.alpha)} for lib in config.libraries
        ],
        "num_users": config.num_users,
        "cache_size": str(config.cache_size),
    }


def config_from_json(data: dict) -> NetworkConfig:
    try:
        libraries = tuple(
            LibrarySpec(num_files=int(lib["num_files"]), alpha=to_fraction(lib["alpha"]))
            for lib in data["libraries"]
        )
        return NetworkConfig(
            libraries=libraries,
            num_users=int(data["num_users"]),
            cache_size=to_fraction(data["cache_size"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed network config: {exc}") from exc


def load_config(path: str) -> NetworkConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_json(data)


def canonical_config_json(config: NetworkConfig) -> str:
    """Stable compact serialization, used for digests in run records."""
    return json.dumps(config_to_json(config), sort_keys=True, separators=(",", ":"))
