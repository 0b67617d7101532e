"""Shared builders for the test suite: fixed networks and seeded random ones."""

from __future__ import annotations

import random
from fractions import Fraction

from cacheshare.allocation import Allocation
from cacheshare.model import LibrarySpec, NetworkConfig
from cacheshare.tradeoff import PiecewiseLinearTradeoff, build_by_kind, build_scheme_tradeoff


def make_config(*, counts, weights, users, cache) -> NetworkConfig:
    libs = tuple(
        LibrarySpec(num_files=n, alpha=Fraction(w)) for n, w in zip(counts, weights)
    )
    return NetworkConfig(libraries=libs, num_users=users, cache_size=Fraction(cache))


def reference_config(cache: Fraction | str = "1") -> NetworkConfig:
    return make_config(
        counts=(2, 2), weights=(Fraction(2, 5), Fraction(3, 5)), users=2, cache=cache
    )


def unequal_config(cache: Fraction | str = "1/2") -> NetworkConfig:
    return make_config(
        counts=(1, 2), weights=(Fraction(1, 2), Fraction(1, 2)), users=2, cache=cache
    )


def random_weights(rng: random.Random, count: int) -> list[Fraction]:
    raw = [rng.randint(1, 6) for _ in range(count)]
    total = sum(raw)
    return [Fraction(w, total) for w in raw]


def random_equal_n_config(rng: random.Random) -> NetworkConfig:
    L = rng.randint(1, 4)
    n = rng.randint(1, 4)
    k = rng.randint(1, 4)
    weights = random_weights(rng, L)
    # total content is n, so pick the budget on an eighths grid of it
    cache = Fraction(rng.randint(0, 8), 8) * n
    libs = tuple(LibrarySpec(n, w) for w in weights)
    return NetworkConfig(libraries=libs, num_users=k, cache_size=cache)


def random_config(rng: random.Random, max_libraries: int = 4) -> NetworkConfig:
    L = rng.randint(1, max_libraries)
    k = rng.randint(1, 4)
    weights = random_weights(rng, L)
    libs = tuple(LibrarySpec(rng.randint(1, 4), w) for w in weights)
    total = sum((lib.alpha * lib.num_files for lib in libs), Fraction(0))
    cache = Fraction(rng.randint(0, 8), 8) * total
    return NetworkConfig(libraries=libs, num_users=k, cache_size=cache)


def random_sim_config(rng: random.Random) -> NetworkConfig:
    # small enough to enumerate every demand vector
    while True:
        L = rng.randint(1, 3)
        k = rng.randint(1, 3)
        counts = [rng.randint(1, 4) for _ in range(L)]
        product = 1
        for n in counts:
            product *= n**k
        if product <= 1024:
            break
    weights = random_weights(rng, L)
    libs = tuple(LibrarySpec(n, w) for n, w in zip(counts, weights))
    return NetworkConfig(libraries=libs, num_users=k, cache_size=Fraction(0))


def curves_for(config: NetworkConfig, kind: str = "auto") -> list[PiecewiseLinearTradeoff]:
    return [
        build_by_kind(kind, lib.num_files, config.num_users) for lib in config.libraries
    ]


def random_corner_allocation(
    rng: random.Random, config: NetworkConfig
) -> tuple[NetworkConfig, Allocation]:
    """Pick one scheme-envelope vertex per library; returns the config rebuilt
    with the matching budget plus the allocation itself."""
    picks = []
    for lib in config.libraries:
        env = build_scheme_tradeoff(lib.num_files, config.num_users)
        theta = rng.choice(env.breakpoints)
        picks.append(theta * lib.alpha)
    total = sum(picks, Fraction(0))
    rebuilt = NetworkConfig(
        libraries=config.libraries, num_users=config.num_users, cache_size=total
    )
    return rebuilt, Allocation(tuple(picks))
