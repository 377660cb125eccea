"""Random small instances for property tests and experiment scripts."""

from __future__ import annotations

import random

from .analysis import ConditionClass, analyze
from .model import Instance


def random_instance(rng: random.Random, max_users: int = 6, max_relays: int = 3) -> Instance:
    """Random clusters with closed security and collusion families.

    Half of the draws protect whole clusters, which is where the fractional
    key-rate conditions show up; the rest protect arbitrary subsets.
    """
    U = rng.randint(2, max_relays)
    K = rng.randint(U, max_users)
    sizes = [1] * U
    for _ in range(K - U):
        sizes[rng.randrange(U)] += 1
    users = [(u, v) for u, V in enumerate(sizes, 1) for v in range(1, V + 1)]

    if rng.random() < 0.5:
        chosen = rng.sample(range(1, U + 1), rng.randint(1, U - 1))
        security = [[x for x in users if x[0] in chosen]]
    else:
        security = [rng.sample(users, rng.randint(1, K - 1)) for _ in range(rng.randint(0, 3))]
    collusion = [
        rng.sample(users, rng.randint(1, min(K - 1, rng.randint(1, 3))))
        for _ in range(rng.randint(0, 6))
    ]
    return Instance.build(sizes, security, collusion)


def random_corpus(seed: int, count: int, **kw) -> list[Instance]:
    rng = random.Random(seed)
    return [random_instance(rng, **kw) for _ in range(count)]


def stratified_corpus(seed: int, quota: dict[ConditionClass, int], max_draws: int = 100_000,
                      **kw) -> list[Instance]:
    """Draw until each condition class has reached its quota (or draws run out)."""
    rng = random.Random(seed)
    need = dict(quota)
    out = []
    for _ in range(max_draws):
        if not any(need.values()):
            break
        inst = random_instance(rng, **kw)
        cls = analyze(inst)[1]
        if need.get(cls, 0) > 0:
            need[cls] -= 1
            out.append(inst)
    return out
