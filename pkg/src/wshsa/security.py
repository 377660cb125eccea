"""Exact security verification for linear schemes.

Every observed quantity is a linear map of one global source vector: the K*L
input symbols (users in canonical order, L symbols each) followed by the Lz
source-key symbols.  For a uniform source the entropy of a linear view is the
rank of its matrix in units of log q, so conditional mutual information
reduces to four ranks.  ``exhaustive_mi`` computes the same quantity from
explicit histograms and serves as an independent oracle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import gf
from .analysis import AuxReport, analyze
from .model import Instance, UserId, fmt_user
from .scheme import LinearScheme

DEFAULT_BUDGET = 2**24


class BudgetExceeded(RuntimeError):
    pass


class Views:
    """Builders for observables (row blocks over the global source)."""

    def __init__(self, inst: Instance, scheme: LinearScheme):
        self.inst = inst
        self.scheme = scheme
        self.q = scheme.q
        self.L = scheme.L
        self.width = inst.K * scheme.L + scheme.Lz

    def empty(self) -> np.ndarray:
        return np.zeros((0, self.width), dtype=np.int64)

    def _w_row_block(self, x: UserId) -> np.ndarray:
        block = np.zeros((self.L, self.width), dtype=np.int64)
        start = self.inst.index(x) * self.L
        block[np.arange(self.L), start + np.arange(self.L)] = 1
        return block

    def _z_row_block(self, x: UserId) -> np.ndarray:
        block = np.zeros((self.L, self.width), dtype=np.int64)
        block[:, self.inst.K * self.L:] = self.scheme.key_maps[x]
        return block

    def w(self, users) -> np.ndarray:
        users = sorted(users)
        return np.vstack([self._w_row_block(x) for x in users]) if users else self.empty()

    def z(self, users) -> np.ndarray:
        users = sorted(users)
        return np.vstack([self._z_row_block(x) for x in users]) if users else self.empty()

    def wz(self, users) -> np.ndarray:
        return np.vstack([self.w(users), self.z(users)])

    def x(self, users) -> np.ndarray:
        users = sorted(users)
        if not users:
            return self.empty()
        return np.vstack([(self._w_row_block(u) + self._z_row_block(u)) % self.q for u in users])

    def y(self, relays) -> np.ndarray:
        rows = []
        for u in sorted(relays):
            acc = np.zeros((self.L, self.width), dtype=np.int64)
            for x in self.inst.cluster(u):
                acc = (acc + self._w_row_block(x) + self._z_row_block(x)) % self.q
            rows.append(acc)
        return np.vstack(rows) if rows else self.empty()

    def w_sum(self) -> np.ndarray:
        acc = np.zeros((self.L, self.width), dtype=np.int64)
        for x in self.inst.users:
            acc += self._w_row_block(x)
        return acc % self.q


def stack(*blocks: np.ndarray) -> np.ndarray:
    return np.vstack(blocks)


def rank_entropy(obs: np.ndarray, q: int) -> int:
    """Entropy of a linear view of a uniform source, in units of log q."""
    return gf.rank(obs, q)


def conditional_mi(a: np.ndarray, b: np.ndarray, c: np.ndarray, q: int) -> int:
    r = lambda *m: gf.rank(np.vstack(m), q)  # noqa: E731
    return r(a, c) + r(b, c) - r(a, b, c) - r(c)


def conditional_entropy(a: np.ndarray, c: np.ndarray, q: int) -> int:
    return gf.rank(np.vstack([a, c]), q) - gf.rank(c, q)


# ---------------------------------------------------------------- oracle

def _compact(codes: np.ndarray) -> np.ndarray:
    """Relabel to a dense range; sort-free when the code range is already small."""
    top = int(codes.max()) + 1 if codes.size else 1
    if top <= 4 * codes.size:
        seen = np.zeros(top, dtype=np.int64)
        seen[codes] = 1
        return (np.cumsum(seen) - 1)[codes]
    _, inv = np.unique(codes, return_inverse=True)
    return inv.reshape(-1).astype(np.int64)


def _row_values(row: np.ndarray, q: int, width: int) -> np.ndarray:
    """``row . x mod q`` for every state x, indexed by x = sum_j x_j q^j."""
    dtype = np.uint16 if q <= 256 else np.int64
    steps = np.arange(q, dtype=np.int64)
    v = np.zeros(1, dtype=dtype)
    for j in reversed(range(width)):
        add = ((int(row[j]) % q) * steps % q).astype(dtype) if j < row.size else np.zeros(q, dtype)
        v = v[:, None] + add[None, :]
        v = np.where(v >= q, v - q, v).ravel()
    return v


def _codes(mats: list[np.ndarray], q: int, width: int, n_states: int) -> list[np.ndarray]:
    """Compact label of each matrix's observed value for every source state."""
    per_word = max(1, int(62 // math.log2(q)))
    out = []
    for m in mats:
        parts = []
        for i in range(0, m.shape[0], per_word):
            code = np.zeros(n_states, dtype=np.int64)
            for row in m[i:i + per_word]:
                code = code * q + _row_values(row, q, width)
            parts.append(_compact(code))
        out.append(_join(*parts) if parts else np.zeros(n_states, dtype=np.int64))
    return out


def _entropy(labels: np.ndarray, q: int) -> Fraction | float:
    counts = np.bincount(labels)
    counts = counts[counts > 0]
    support = counts.size
    if np.all(counts == counts[0]):
        exp = round(math.log(support, q))
        if q**exp == support:
            return Fraction(exp)
        return math.log(support, q)
    p = counts / labels.size
    return float(-(p * np.log(p)).sum() / math.log(q))


def _join(*labels: np.ndarray) -> np.ndarray:
    out = labels[0]
    for lab in labels[1:]:
        out = _compact(out * (int(lab.max()) + 1) + lab)
    return out


class HistogramOracle:
    """Exact histogram entropies over all q^width source states.

    Labels are cached per observation matrix, so repeated views across many
    constraints are enumerated once.
    """

    def __init__(self, q: int, width: int, budget: int = DEFAULT_BUDGET):
        self.q, self.width = q, width
        self.n_states = q**width
        if self.n_states > budget:
            raise BudgetExceeded(f"{q}^{width} states exceed budget {budget}")
        self._labels: dict[bytes, np.ndarray] = {}

    def labels(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.int64) % self.q
        key = m.shape[0].to_bytes(4, "little") + m.tobytes()
        if key not in self._labels:
            self._labels[key] = _codes([m], self.q, self.width, self.n_states)[0]
        return self._labels[key]

    def mi(self, a, b, c) -> Fraction | float:
        la, lb, lc = self.labels(a), self.labels(b), self.labels(c)
        h = lambda *ls: _entropy(_join(*ls), self.q)  # noqa: E731
        return h(la, lc) + h(lb, lc) - h(la, lb, lc) - h(lc)


def exhaustive_mi(a: np.ndarray, b: np.ndarray, c: np.ndarray, q: int,
                  budget: int = DEFAULT_BUDGET) -> Fraction | float:
    """I(A;B|C) from exact histograms over every source realization."""
    width = max(m.shape[1] for m in (a, b, c))
    return HistogramOracle(q, width, budget).mi(a, b, c)


def oracle_check(inst: Instance, scheme: LinearScheme, budget: int = DEFAULT_BUDGET,
                 seconds: float | None = None) -> dict:
    """Compare the histogram oracle with the rank formula on every security constraint.

    With ``seconds`` set, stops early once the wall-clock limit passes and
    reports status ``partial``.
    """
    views = Views(inst, scheme)
    q = scheme.q
    oracle = HistogramOracle(q, inst.K * scheme.L + scheme.Lz, budget)
    cases = []
    y_all = views.y(range(1, inst.U + 1))
    for s in inst.security_sets:
        for t in inst.collusion_sets:
            if s <= t:
                continue
            b, c = views.w(s), views.wz(t)
            cases += [(views.x(inst.cluster(u)), b, c) for u in range(1, inst.U + 1)]
            cases.append((y_all, b, np.vstack([views.w_sum(), c])))
    deadline = None if seconds is None else time.monotonic() + seconds
    checked = bad = 0
    for a, b, c in cases:
        if deadline is not None and time.monotonic() > deadline:
            break
        bad += oracle.mi(a, b, c) != conditional_mi(a, b, c, q)
        checked += 1
    status = "ran" if checked == len(cases) else "partial"
    return {"status": status, "checked": checked, "total": len(cases), "mismatches": int(bad)}


# ---------------------------------------------------------------- verify

@dataclass
class ConstraintResult:
    kind: str          # "relay" or "server"
    u: int | None
    m: int
    n: int
    cmi: int

    @property
    def ok(self) -> bool:
        return self.cmi == 0


@dataclass
class SecurityReport:
    relay: list[ConstraintResult] = field(default_factory=list)
    server: list[ConstraintResult] = field(default_factory=list)
    correct: bool = True
    key_rank: int = 0
    user_ranks: dict[UserId, int] = field(default_factory=dict)

    @property
    def violations(self) -> list[ConstraintResult]:
        return [c for c in self.relay + self.server if not c.ok]

    @property
    def all_pass(self) -> bool:
        return self.correct and not self.violations

    def to_dict(self) -> dict:
        def row(c):
            out = {"m": c.m, "n": c.n, "cmi": c.cmi, "pass": c.ok}
            if c.u is not None:
                out["u"] = c.u
            return out

        return {
            "all_pass": self.all_pass,
            "correct": self.correct,
            "key_rank": self.key_rank,
            "checked_relay": len(self.relay),
            "checked_server": len(self.server),
            "violations": [row(c) | {"kind": c.kind} for c in self.violations],
        }


def verify(inst: Instance, scheme: LinearScheme, stop_early: bool = False) -> SecurityReport:
    """Check correctness plus every relay and server security constraint."""
    scheme.check_dimensions(inst)
    q = scheme.q
    views = Views(inst, scheme)
    rep = SecurityReport()
    total = np.zeros((scheme.L, scheme.Lz), dtype=np.int64)
    for x in inst.users:
        total = (total + scheme.key_maps[x]) % q
    rep.correct = not total.any()
    all_keys = views.z(inst.users)
    rep.key_rank = gf.rank(all_keys, q)
    rep.user_ranks = {x: gf.rank(scheme.key_maps[x], q) for x in inst.users}

    @lru_cache(maxsize=None)
    def colluder(n):
        c = views.wz(inst.collusion_sets[n - 1])
        return c, gf.rank(c, q)

    @lru_cache(maxsize=None)
    def relay_view(u, n):
        a = views.x(inst.cluster(u))
        c, _ = colluder(n)
        return a, gf.rank(np.vstack([a, c]), q)

    y_all = views.y(range(1, inst.U + 1))
    w_sum = views.w_sum()

    @lru_cache(maxsize=None)
    def server_cond(n):
        c = np.vstack([w_sum, colluder(n)[0]])
        return c, gf.rank(c, q), gf.rank(np.vstack([y_all, c]), q)

    for m, s in enumerate(inst.security_sets, 1):
        for n, t in enumerate(inst.collusion_sets, 1):
            if s <= t:
                continue
            b = views.w(s)
            c, rc = colluder(n)
            rbc = gf.rank(np.vstack([b, c]), q)
            for u in range(1, inst.U + 1):
                a, rac = relay_view(u, n)
                cmi = rac + rbc - gf.rank(np.vstack([a, b, c]), q) - rc
                rep.relay.append(ConstraintResult("relay", u, m, n, cmi))
            cs, rcs, racs = server_cond(n)
            rbcs = gf.rank(np.vstack([b, cs]), q)
            cmi = racs + rbcs - gf.rank(np.vstack([y_all, b, cs]), q) - rcs
            rep.server.append(ConstraintResult("server", None, m, n, cmi))
            if stop_early and rep.violations:
                return rep
    return rep


# ---------------------------------------------------------------- lemma audit

@dataclass
class LemmaCheck:
    lemma: str
    label: str
    lhs: int
    bound: int

    @property
    def slack(self) -> int:
        return self.lhs - self.bound

    @property
    def ok(self) -> bool:
        return self.slack >= 0


@dataclass
class LemmaAudit:
    checks: list[LemmaCheck] = field(default_factory=list)

    @property
    def violations(self) -> list[LemmaCheck]:
        return [c for c in self.checks if not c.ok]

    @property
    def all_pass(self) -> bool:
        return not self.violations

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.checks:
            out[c.lemma] = out.get(c.lemma, 0) + 1
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        return {
            "all_pass": self.all_pass,
            "checked": self.counts(),
            "violations": [
                {"lemma": c.lemma, "where": c.label, "lhs": c.lhs, "bound": c.bound, "slack": c.slack}
                for c in self.violations
            ],
        }


def audit_lemmas(inst: Instance, scheme: LinearScheme,
                 report: AuxReport | None = None) -> LemmaAudit:
    """Evaluate the converse's key-entropy lower bounds on a concrete scheme.

    Each bound is required only where its hypotheses hold: disjoint ``S_m`` and
    ``T_n``, the stated coverage size, and a nonempty protected part (the
    bound is vacuous when nothing is protected).
    """
    if report is None:
        report = analyze(inst)[0]
    q, L, K = scheme.q, scheme.L, inst.K
    views = Views(inst, scheme)
    everyone = inst.all_users
    s_bar = report.s_total
    audit = LemmaAudit()

    @lru_cache(maxsize=None)
    def h_keys(users: frozenset, given: frozenset) -> int:
        return conditional_entropy(views.z(users), views.z(given), q)

    def add(lemma, label, lhs, bound):
        audit.checks.append(LemmaCheck(lemma, label, lhs, bound))

    for x in inst.users:
        others = views.wz(everyone - {x})
        add("L1X", fmt_user(x), conditional_entropy(views.x([x]), others, q), L)
        add("L1Y", fmt_user(x), conditional_entropy(views.y([x[0]]), others, q), L)

    for m, s in enumerate(inst.security_sets, 1):
        for n, t in enumerate(inst.collusion_sets, 1):
            if s & t:
                continue
            where = f"m={m},n={n}"
            relays = report.security_relay_sets[(m, n)]
            cover = inst.clusters_union(relays) | t
            full = len(cover) == K
            for u in range(1, inst.U + 1):
                part = s & inst.cluster(u)
                if not part:
                    continue
                guarded = part | t
                uw = f"u={u},{where}"
                if len(guarded) <= K - 1:
                    add("L2X", uw, h_keys(everyone - guarded, t), L)
                    add("L3X", uw, h_keys(part, t), len(part) * L)
                if len(guarded) == K - 1:
                    (lone,) = everyone - guarded
                    add("C1", uw + f",user={fmt_user(lone)}", h_keys(frozenset([lone]), t), L)
                if len(s | t) <= K - 1:
                    add("L4X", uw, h_keys(guarded & s_bar, t - s_bar), len(guarded & s_bar) * L)
            if relays:
                k_rel = inst.clusters_union(relays)
                if len(cover) <= K - 1:
                    add("L2Y", where, h_keys(everyone - cover, t), L)
                if len(cover) == K - 1:
                    (lone,) = everyone - cover
                    add("C2", where + f",user={fmt_user(lone)}", h_keys(frozenset([lone]), t), L)
                add("L3Y", where, h_keys(k_rel, t), (len(relays) - int(full)) * L)
                if len(s | t) <= K - 1:
                    bound = len(t & s_bar) * L + (len(relays) - int(full)) * L
                    add("L4Y", where, h_keys(cover & s_bar, t - s_bar), bound)
    return audit

