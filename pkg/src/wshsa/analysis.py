"""Derived set quantities of a WS-HSA instance and condition classification.

Index conventions: ``m`` and ``n`` are 1-based positions into the canonical
security and collusion families; ``u`` is a 1-based relay index.

Pairs ``(m, n)`` whose sets intersect are excluded from every maximum. With
monotone families the disjoint pair ``(S_m minus T_n, T_n)`` is always present
and yields the same ``A`` sets, so only degenerate server-side terms (a relay
"covered" by users the adversary already controls) are dropped.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .model import Instance, UserSet, fmt_set


class ConditionClass(str, enum.Enum):
    INFEASIBLE = "Infeasible"
    C1_CASE2 = "C1Case2"
    C1_CASE3 = "C1Case3"
    C1_CASE4 = "C1Case4"
    C2 = "C2"
    C3 = "C3"


def security_relay_set(inst: Instance, m: int, n: int) -> frozenset[int]:
    """Relays whose cluster meets ``S_m`` and is covered by ``S_m`` and ``T_n``."""
    s, t = inst.security_sets[m - 1], inst.collusion_sets[n - 1]
    covered = s | t
    return frozenset(
        u for u in range(1, inst.U + 1)
        if s & inst.cluster(u) and inst.cluster(u) <= covered
    )


def _disjoint_pairs(inst: Instance):
    for m, s in enumerate(inst.security_sets, 1):
        for n, t in enumerate(inst.collusion_sets, 1):
            if not s & t:
                yield m, n, s, t


def total_security_set(inst: Instance) -> tuple[UserSet, UserSet, UserSet, UserSet]:
    """Return ``(S_I1, S_I2, S_I, S_bar)``.

    A coverage set of size K-1 only forces a full key on the missing user when
    it actually protects somebody, i.e. ``S_m`` meets ``K_u`` (relay side) or
    ``U^(m,n)`` is nonempty (server side).
    """
    K, everyone = inst.K, inst.all_users
    explicit = frozenset().union(*inst.security_sets)
    relay_side: set = set()
    server_side: set = set()
    for m, n, s, t in _disjoint_pairs(inst):
        for u in range(1, inst.U + 1):
            part = s & inst.cluster(u)
            if part and len(part | t) == K - 1:
                relay_side |= everyone - (part | t)
        relays = security_relay_set(inst, m, n)
        if relays:
            cover = inst.clusters_union(relays) | t
            if len(cover) == K - 1:
                server_side |= everyone - cover
    s_i1 = frozenset(relay_side) - explicit
    s_i2 = frozenset(server_side) - explicit
    s_i = s_i1 | s_i2
    return s_i1, s_i2, s_i, explicit | s_i


@dataclass(frozen=True)
class PairInfo:
    m: int
    n: int
    relays: frozenset[int]
    cover: UserSet          # K_{U^(m,n)} union T_n
    e_set: UserSet          # E_{m,n}
    d_value: int            # |U^(m,n)| + |T_n cap S_bar|
    full: bool              # cover == all users

    @property
    def d_adjusted(self) -> int:
        return self.d_value - (1 if self.full else 0)

    @property
    def e_effective(self) -> int:
        # with full coverage the server already holds the protected sum
        return len(self.e_set) - (1 if self.full else 0)


@dataclass(frozen=True)
class TripleInfo:
    u: int
    m: int
    n: int
    guarded: UserSet        # (S_m cap K_u) union T_n
    a_set: UserSet          # A_{u,m,n}


@dataclass
class AuxReport:
    K: int
    security_relay_sets: dict[tuple[int, int], frozenset[int]]
    s_implicit_relay: UserSet
    s_implicit_server: UserSet
    s_implicit: UserSet
    s_total: UserSet
    a_star: int
    e_star: int
    e_star_server: int
    d_star: int
    d_adj: int
    q1: UserSet
    q2: UserSet
    q3: UserSet
    q: UserSet
    a_argmax: list[TripleInfo]
    e_argmax: list[PairInfo]
    d_argmax: list[PairInfo]
    coverage_full: dict[tuple[int, int], bool]
    pairs: list[PairInfo] = field(repr=False)
    triples: list[TripleInfo] = field(repr=False)

    def to_dict(self) -> dict:
        def triple(t: TripleInfo):
            return {"u": t.u, "m": t.m, "n": t.n, "set": fmt_set(t.a_set)}

        def pair(p: PairInfo):
            return {"m": p.m, "n": p.n, "set": fmt_set(p.e_set), "d": p.d_value, "full": p.full}

        return {
            "s_implicit_relay": fmt_set(self.s_implicit_relay),
            "s_implicit_server": fmt_set(self.s_implicit_server),
            "s_implicit": fmt_set(self.s_implicit),
            "s_total": fmt_set(self.s_total),
            "a_star": self.a_star,
            "e_star": self.e_star,
            "e_star_server": self.e_star_server,
            "d_star": self.d_star,
            "d_adj": self.d_adj,
            "q1": fmt_set(self.q1),
            "q2": fmt_set(self.q2),
            "q3": fmt_set(self.q3),
            "q": fmt_set(self.q),
            "a_argmax": [triple(t) for t in self.a_argmax],
            "e_argmax": [pair(p) for p in self.e_argmax],
            "d_argmax": [pair(p) for p in self.d_argmax],
            "security_relay_sets": {
                f"{m},{n}": sorted(r) for (m, n), r in sorted(self.security_relay_sets.items()) if r
            },
        }


def quantities(inst: Instance) -> AuxReport:
    K = inst.K
    s_i1, s_i2, s_i, s_bar = total_security_set(inst)

    relay_sets = {}
    coverage_full = {}
    pairs: list[PairInfo] = []
    for m in range(1, inst.M + 1):
        for n in range(1, inst.N + 1):
            relays = security_relay_set(inst, m, n)
            relay_sets[(m, n)] = relays
            t = inst.collusion_sets[n - 1]
            cover = inst.clusters_union(relays) | t
            coverage_full[(m, n)] = len(cover) == K
    for m, n, s, t in _disjoint_pairs(inst):
        relays = relay_sets[(m, n)]
        cover = inst.clusters_union(relays) | t
        pairs.append(PairInfo(
            m, n, relays, cover, cover & s_bar,
            len(relays) + len(t & s_bar), len(cover) == K,
        ))

    triples: list[TripleInfo] = []
    for m, n, s, t in _disjoint_pairs(inst):
        for u in range(1, inst.U + 1):
            guarded = (s & inst.cluster(u)) | t
            triples.append(TripleInfo(u, m, n, guarded, guarded & s_bar))

    a_star = max((len(t.a_set) for t in triples), default=0)
    e_star = max((len(p.e_set) for p in pairs), default=0)
    # with at most one covered relay, E_{m,n} coincides with some A_{u,m,n}
    e_star_server = max((p.e_effective for p in pairs if len(p.relays) >= 2), default=0)
    d_star = max((p.d_value for p in pairs), default=0)
    d_adj = max((p.d_adjusted for p in pairs), default=0)

    size = len(s_bar)
    a_argmax = [t for t in triples if len(t.a_set) == size] if size else []
    e_argmax = [p for p in pairs if p.e_effective == size] if size else []
    top = max(a_star, d_star)
    d_argmax = [p for p in pairs if p.d_value == top] if top else []

    q1 = frozenset().union(*(t.guarded for t in a_argmax))
    q2 = frozenset().union(*(p.cover for p in e_argmax))
    q3 = frozenset().union(*(p.cover for p in d_argmax))

    return AuxReport(
        K=K,
        security_relay_sets=relay_sets,
        s_implicit_relay=s_i1,
        s_implicit_server=s_i2,
        s_implicit=s_i,
        s_total=s_bar,
        a_star=a_star,
        e_star=e_star,
        e_star_server=e_star_server,
        d_star=d_star,
        d_adj=d_adj,
        q1=q1,
        q2=q2,
        q3=q3,
        q=q1 | q2 | q3,
        a_argmax=a_argmax,
        e_argmax=e_argmax,
        d_argmax=d_argmax,
        coverage_full=coverage_full,
        pairs=pairs,
        triples=triples,
    )


def classify(report: AuxReport, inst: Instance) -> ConditionClass:
    K = inst.K
    a, e = report.a_star, report.e_star_server
    size = len(report.s_total)
    if a == K:
        return ConditionClass.INFEASIBLE
    top = [p for p in report.pairs if p.d_value == report.d_star]
    if report.d_star > 0 and all(p.full for p in top):
        return ConditionClass.C1_CASE2
    if max(a, e) <= size - 1:
        return ConditionClass.C1_CASE3
    if len(report.q) <= K - 1:
        return ConditionClass.C1_CASE4
    if e < a:
        return ConditionClass.C2
    return ConditionClass.C3


def analyze(inst: Instance) -> tuple[AuxReport, ConditionClass]:
    report = quantities(inst)
    return report, classify(report, inst)
