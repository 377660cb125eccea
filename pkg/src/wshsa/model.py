"""Network topology, security input sets and collusion sets.

Users are ``(u, v)`` tuples with 1-based cluster and within-cluster indices.
A user set is a ``frozenset`` of such tuples; families of user sets are kept
in canonical order (by size, then lexicographically by sorted members).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

UserId = tuple[int, int]
UserSet = frozenset


class InstanceError(ValueError):
    """Raised for malformed or invalid instance documents."""


def set_key(s: Iterable[UserId]) -> tuple:
    members = tuple(sorted(s))
    return (len(members), members)


def canonical(family: Iterable[Iterable[UserId]]) -> list[UserSet]:
    """Deduplicate and sort a family of user sets."""
    uniq = {frozenset(s) for s in family}
    return sorted(uniq, key=set_key)


def monotone_close(family: Iterable[Iterable[UserId]]) -> list[UserSet]:
    """Downward closure of ``family`` (always contains the empty set)."""
    out: set[frozenset] = {frozenset()}
    for s in family:
        members = sorted(s)
        for r in range(len(members) + 1):
            for sub in itertools.combinations(members, r):
                out.add(frozenset(sub))
    return sorted(out, key=set_key)


def is_monotone(family: Iterable[Iterable[UserId]]) -> bool:
    fam = canonical(family)
    return fam == monotone_close(fam)


def fmt_user(user: UserId) -> str:
    return f"({user[0]},{user[1]})"


def fmt_set(s: Iterable[UserId]) -> str:
    return "{" + ",".join(fmt_user(x) for x in sorted(s)) + "}"


@dataclass(frozen=True)
class Instance:
    cluster_sizes: tuple[int, ...]
    security_sets: tuple[UserSet, ...]
    collusion_sets: tuple[UserSet, ...]
    auto_close: bool = True

    def __post_init__(self):
        if len(self.cluster_sizes) < 2:
            raise InstanceError("need at least two relays (U >= 2)")
        if any(int(v) != v or v < 1 for v in self.cluster_sizes):
            raise InstanceError("cluster sizes must be positive integers")
        users = set(self.users)
        for label, fam in (("security", self.security_sets), ("collusion", self.collusion_sets)):
            for s in fam:
                bad = [x for x in s if x not in users]
                if bad:
                    raise InstanceError(f"{label} set contains unknown user {fmt_user(bad[0])}")

    @classmethod
    def build(
        cls,
        cluster_sizes: Sequence[int],
        security_sets: Iterable[Iterable[UserId]],
        collusion_sets: Iterable[Iterable[UserId]],
        auto_close: bool = True,
    ) -> "Instance":
        """Validate, optionally close, and canonicalize the two families."""
        raw_s = [frozenset(map(tuple, s)) for s in security_sets]
        raw_t = [frozenset(map(tuple, s)) for s in collusion_sets]
        sizes = tuple(int(v) for v in cluster_sizes)
        if auto_close:
            # validate members before closing so errors point at the raw input
            cls(sizes, tuple(raw_s), tuple(raw_t), auto_close)
            fam_s, fam_t = monotone_close(raw_s), monotone_close(raw_t)
        else:
            for label, fam in (("security", raw_s), ("collusion", raw_t)):
                if len(set(fam)) != len(fam):
                    raise InstanceError(f"duplicate {label} sets")
                if not is_monotone(fam):
                    raise InstanceError(f"{label} family is not monotone")
            fam_s, fam_t = canonical(raw_s), canonical(raw_t)
        return cls(sizes, tuple(fam_s), tuple(fam_t), auto_close)

    @property
    def U(self) -> int:
        return len(self.cluster_sizes)

    @property
    def K(self) -> int:
        return sum(self.cluster_sizes)

    @property
    def M(self) -> int:
        return len(self.security_sets)

    @property
    def N(self) -> int:
        return len(self.collusion_sets)

    @property
    def users(self) -> list[UserId]:
        return [(u, v) for u, V in enumerate(self.cluster_sizes, 1) for v in range(1, V + 1)]

    @property
    def all_users(self) -> UserSet:
        return frozenset(self.users)

    def cluster(self, u: int) -> UserSet:
        return frozenset((u, v) for v in range(1, self.cluster_sizes[u - 1] + 1))

    def clusters_union(self, relays: Iterable[int]) -> UserSet:
        out: set[UserId] = set()
        for u in relays:
            out |= self.cluster(u)
        return frozenset(out)

    def index(self, user: UserId) -> int:
        """0-based position of ``user`` in the canonical user order."""
        u, v = user
        return sum(self.cluster_sizes[: u - 1]) + v - 1

    def to_dict(self) -> dict:
        return {
            "clusters": list(self.cluster_sizes),
            "security_sets": [[list(x) for x in sorted(s)] for s in self.security_sets],
            "collusion_sets": [[list(x) for x in sorted(s)] for s in self.collusion_sets],
            "auto_close": self.auto_close,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _parse_family(raw, label: str) -> list[frozenset]:
    if not isinstance(raw, list):
        raise InstanceError(f"{label} must be an array of sets")
    fam = []
    for s in raw:
        if not isinstance(s, list):
            raise InstanceError(f"{label}: each set must be an array of [u,v] pairs")
        members = []
        for pair in s:
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(i, int) for i in pair)):
                raise InstanceError(f"{label}: malformed user {pair!r}")
            members.append((pair[0], pair[1]))
        fam.append(frozenset(members))
    return fam


def instance_from_dict(doc: dict, auto_close: bool | None = None) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be an object")
    try:
        clusters = doc["clusters"]
    except KeyError:
        raise InstanceError("missing field 'clusters'") from None
    if not isinstance(clusters, list) or not all(isinstance(v, int) for v in clusters):
        raise InstanceError("'clusters' must be an array of integers")
    fam_s = _parse_family(doc.get("security_sets", [[]]), "security_sets")
    fam_t = _parse_family(doc.get("collusion_sets", [[]]), "collusion_sets")
    close = doc.get("auto_close", True) if auto_close is None else auto_close
    return Instance.build(clusters, fam_s, fam_t, auto_close=bool(close))


def load_instance(text: str, auto_close: bool | None = None) -> Instance:
    """Parse an instance document (JSON text)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed document: {exc}") from None
    return instance_from_dict(doc, auto_close=auto_close)


def read_instance(path, auto_close: bool | None = None) -> Instance:
    with open(path) as fh:
        return load_instance(fh.read(), auto_close=auto_close)
