"""Linear zero-sum key schemes: synthesis, protocol execution, import/export.

A scheme fixes a prime ``q``, a subpacketization ``L`` and a source key of
``Lz`` symbols.  User ``x`` holds ``Z_x = G_x N`` where ``G_x`` is ``L x Lz``;
the maps sum to zero so the relay sums cancel every mask at the server.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gf
from .analysis import AuxReport, ConditionClass, analyze
from .model import Instance, UserId, fmt_user
from .rates import RateKind, RateResult, balanced_c2_profile, per_user_key_profile, rate_from_report

DEFAULT_RETRIES = 64


class SchemeError(ValueError):
    """Malformed or inconsistent scheme document."""


class SynthesisFailed(RuntimeError):
    pass


@dataclass
class LinearScheme:
    q: int
    L: int
    Lz: int
    key_maps: dict[UserId, np.ndarray]

    @property
    def rate(self) -> Fraction:
        return Fraction(self.Lz, self.L)

    def check_dimensions(self, inst: Instance) -> None:
        if set(self.key_maps) != set(inst.users):
            raise SchemeError("scheme users do not match the instance")
        for x, g in self.key_maps.items():
            if g.shape != (self.L, self.Lz):
                raise SchemeError(f"key map of {fmt_user(x)} has shape {g.shape}")

    def zero_sum(self) -> bool:
        total = sum((g for g in self.key_maps.values()), np.zeros((self.L, self.Lz), dtype=np.int64))
        return not (total % self.q).any()

    def user_rank(self, x: UserId) -> int:
        return gf.rank(self.key_maps[x], self.q)

    def key_rank(self) -> int:
        if not self.key_maps or self.Lz == 0:
            return 0
        return gf.rank(np.vstack([self.key_maps[x] for x in sorted(self.key_maps)]), self.q)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "L": self.L,
            "Lz": self.Lz,
            "keys": {f"{u},{v}": g.tolist() for (u, v), g in sorted(self.key_maps.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def export_scheme(scheme: LinearScheme) -> str:
    return json.dumps(scheme.to_dict(), sort_keys=True, indent=1)


def scheme_from_dict(doc: dict) -> LinearScheme:
    try:
        q, L, Lz, keys = int(doc["q"]), int(doc["L"]), int(doc["Lz"]), doc["keys"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemeError(f"missing or malformed field: {exc}") from None
    if not gf.is_prime(q) or q > gf.MAX_MODULUS:
        raise SchemeError(f"q={q} is not a supported prime")
    if L < 1 or Lz < 0:
        raise SchemeError("need L >= 1 and Lz >= 0")
    maps = {}
    for name, grid in keys.items():
        try:
            u, v = (int(p) for p in name.split(","))
        except ValueError:
            raise SchemeError(f"bad user label {name!r}") from None
        try:
            arr = np.array(grid, dtype=np.int64).reshape(L, Lz) if Lz else np.zeros((L, 0), np.int64)
        except ValueError:
            raise SchemeError(f"key map for {name} is not {L}x{Lz}") from None
        if Lz and (len(grid) != L or any(len(r) != Lz for r in grid)):
            raise SchemeError(f"grid of {name} is not {L}x{Lz}")
        maps[(u, v)] = arr % q
    scheme = LinearScheme(q, L, Lz, maps)
    if not scheme.zero_sum():
        raise SchemeError("key maps do not sum to zero")
    return scheme


def import_scheme(text: str) -> LinearScheme:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeError(f"malformed document: {exc}") from None
    return scheme_from_dict(doc)


# ---------------------------------------------------------------- protocol

@dataclass
class ProtocolTrace:
    seed: int | None
    inputs: dict[UserId, np.ndarray]
    source_key: np.ndarray
    x: dict[UserId, np.ndarray]
    y: dict[int, np.ndarray]
    recovered: np.ndarray
    true_sum: np.ndarray

    @property
    def correct(self) -> bool:
        return bool(np.array_equal(self.recovered, self.true_sum))

    def to_dict(self) -> dict:
        lab = lambda x: f"{x[0]},{x[1]}"  # noqa: E731
        return {
            "seed": self.seed,
            "inputs": {lab(k): v.tolist() for k, v in sorted(self.inputs.items())},
            "source_key": self.source_key.tolist(),
            "x": {lab(k): v.tolist() for k, v in sorted(self.x.items())},
            "y": {str(k): v.tolist() for k, v in sorted(self.y.items())},
            "recovered": self.recovered.tolist(),
            "correct": self.correct,
        }


def run_round(inst: Instance, scheme: LinearScheme, inputs: dict[UserId, np.ndarray],
              source_key: np.ndarray, seed: int | None = None) -> ProtocolTrace:
    q = scheme.q
    source_key = np.asarray(source_key, dtype=np.int64)
    if source_key.shape != (scheme.Lz,):
        raise SchemeError(f"source key must have {scheme.Lz} symbols")
    xs, ys = {}, {}
    for x in inst.users:
        w = np.asarray(inputs[x], dtype=np.int64)
        if w.shape != (scheme.L,):
            raise SchemeError(f"input of {fmt_user(x)} must have {scheme.L} symbols")
        z = gf.matmul(scheme.key_maps[x], source_key.reshape(-1, 1), q).reshape(-1)
        xs[x] = (w + z) % q
    for u in range(1, inst.U + 1):
        ys[u] = sum((xs[x] for x in sorted(inst.cluster(u))), np.zeros(scheme.L, np.int64)) % q
    recovered = sum(ys.values(), np.zeros(scheme.L, np.int64)) % q
    true_sum = sum((np.asarray(inputs[x]) for x in inst.users), np.zeros(scheme.L, np.int64)) % q
    return ProtocolTrace(seed, dict(inputs), source_key, xs, ys, recovered, true_sum)


def simulate(inst: Instance, scheme: LinearScheme, rng: np.random.Generator,
             seed: int | None = None) -> ProtocolTrace:
    inputs = {x: rng.integers(0, scheme.q, scheme.L) for x in inst.users}
    key = rng.integers(0, scheme.q, scheme.Lz)
    return run_round(inst, scheme, inputs, key, seed)


# ---------------------------------------------------------------- synthesis

@dataclass
class KeyPlan:
    """Integer key sizes (in symbols) per user plus the zero-sum absorber."""
    L: int
    Lz: int
    ranks: dict[UserId, int]
    absorber: UserId | None
    profile: dict[UserId, Fraction]
    notes: list[str] = field(default_factory=list)


def _lcm_denominators(values) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, Fraction(v).denominator)
    return out


def plan_keys(inst: Instance, profile: dict[UserId, Fraction], rate: Fraction,
              s_total, q_set=frozenset(), outside: bool = False) -> KeyPlan:
    """Pick L, Lz and an absorber able to cancel all other keys.

    The absorber defaults to the first full-key user in the total security set.
    It is moved to a user outside ``s_total`` (preferably outside ``q_set``),
    promoted to a full key, when ``outside`` is set or when the remaining users
    cannot supply ``Lz`` fresh symbols.
    """
    profile = dict(profile)
    L = _lcm_denominators([*profile.values(), rate])
    Lz = int(rate * L)
    notes = []
    if Lz == 0:
        return KeyPlan(L, 0, {x: 0 for x in inst.users}, None, profile, notes)
    full = [x for x in inst.users if x in s_total and profile[x] == 1]

    def capacity(absorber):
        return sum(int(profile[x] * L) for x in inst.users if x != absorber)

    absorber = full[0] if full else None
    if outside or absorber is None or capacity(absorber) < Lz:
        spare = [x for x in inst.users if x not in s_total and x not in q_set]
        spare = spare or [x for x in inst.users if x not in s_total]
        if not spare:
            raise SynthesisFailed("no user outside the total security set can absorb")
        absorber = spare[0]
        profile[absorber] = Fraction(1)
        notes.append(f"absorber {fmt_user(absorber)} promoted to a full key")
    ranks = {x: int(profile[x] * L) for x in inst.users}
    return KeyPlan(L, Lz, ranks, absorber, profile, notes)


def default_modulus(K: int, L: int, Lz: int) -> int:
    """Smallest prime above the generic-coefficient bound, capped at the int64-safe maximum."""
    bound = max(K * Lz, Lz * math.comb(K * L, Lz), 2)
    return gf.next_prime(bound) if bound < gf.MAX_MODULUS else gf.MAX_MODULUS


def deterministic_maps(inst: Instance, plan: KeyPlan, q: int) -> dict[UserId, np.ndarray] | None:
    """Fresh source symbols per user; partial keys repeat them with Vandermonde multipliers.

    Returns ``None`` when the fresh-symbol count does not match ``Lz``.
    """
    L, Lz = plan.L, plan.Lz
    others = [x for x in inst.users if x != plan.absorber]
    if sum(plan.ranks[x] for x in others) != Lz:
        return None
    maps = {}
    col = 0
    point = 1
    for x in others:
        r = plan.ranks[x]
        g = np.zeros((L, Lz), dtype=np.int64)
        if r == L:
            g[:, col:col + L] = np.eye(L, dtype=np.int64)
        elif r:
            pts = list(range(point, point + r))
            if pts[-1] >= q:
                return None
            g[:, col:col + r] = gf.vandermonde(pts, L, r, q)
            point += r
        maps[x] = g
        col += r
    if plan.absorber is not None:
        total = sum(maps.values(), np.zeros((L, Lz), dtype=np.int64))
        maps[plan.absorber] = (-total) % q
    return maps


def random_maps(inst: Instance, plan: KeyPlan, q: int, rng: np.random.Generator) -> dict[UserId, np.ndarray]:
    L, Lz = plan.L, plan.Lz
    maps = {}
    for x in inst.users:
        if x == plan.absorber:
            continue
        r = plan.ranks[x]
        if r == 0:
            maps[x] = np.zeros((L, Lz), dtype=np.int64)
            continue
        left = rng.integers(0, q, (L, r))
        right = rng.integers(0, q, (r, Lz))
        maps[x] = gf.matmul(left, right, q)
    if plan.absorber is not None:
        total = sum(maps.values(), np.zeros((L, Lz), dtype=np.int64))
        maps[plan.absorber] = (-total) % q
    return maps


def _ranks_ok(scheme: LinearScheme, plan: KeyPlan) -> bool:
    if any(scheme.user_rank(x) != r for x, r in plan.ranks.items()):
        return False
    return scheme.key_rank() == plan.Lz


@dataclass
class SynthesisResult:
    scheme: LinearScheme
    plan: KeyPlan
    method: str
    attempts: int


def synthesize(inst: Instance, plan: KeyPlan, q: int | None = None, seed: int = 0,
               retries: int = DEFAULT_RETRIES) -> SynthesisResult:
    """Propose candidate schemes for ``plan`` until one passes verification."""
    from .security import verify

    if q is None:
        q = default_modulus(inst.K, plan.L, plan.Lz)
    gf.check_modulus(q)
    rng = np.random.default_rng(seed)
    attempts = 0

    def accept(maps):
        scheme = LinearScheme(q_cur, plan.L, plan.Lz, maps)
        return scheme if _ranks_ok(scheme, plan) and verify(inst, scheme, stop_early=True).all_pass else None

    q_cur = q
    maps = deterministic_maps(inst, plan, q_cur)
    if maps is not None:
        attempts += 1
        scheme = accept(maps)
        if scheme:
            return SynthesisResult(scheme, plan, "deterministic", attempts)
    for round_ in range(2):
        if round_:
            q_cur = gf.next_prime(2 * q_cur - 1)
            if q_cur > gf.MAX_MODULUS:
                break
        for _ in range(retries):
            attempts += 1
            scheme = accept(random_maps(inst, plan, q_cur, rng))
            if scheme:
                return SynthesisResult(scheme, plan, f"random(q={q_cur})", attempts)
    raise SynthesisFailed(
        f"no verified scheme after {attempts} attempts (final q={q_cur}, L={plan.L}, Lz={plan.Lz})"
    )


@dataclass
class PipelineOutcome:
    rate: RateResult
    report: AuxReport
    result: SynthesisResult | None
    error: str | None = None

    @property
    def achieved(self) -> Fraction | None:
        return self.result.scheme.rate if self.result else None

    @property
    def consistent(self) -> bool:
        """Achieved rate equals the exact rate, or lies within the bounds."""
        if self.result is None:
            return False
        r = self.achieved
        return self.rate.lower <= r <= self.rate.upper


def plan_for_instance(inst: Instance, report: AuxReport, rate: RateResult) -> list[KeyPlan]:
    """Key plans to try, most natural first."""
    if rate.kind is RateKind.INFEASIBLE:
        raise SynthesisFailed("instance is infeasible")
    s_total, q_set = report.s_total, report.q
    base = per_user_key_profile(inst, rate, report)
    candidates: list[tuple[dict, Fraction]] = []
    if rate.kind is RateKind.EXACT:
        if rate.condition is ConditionClass.C2 and s_total:
            fresh = rate.lower - (len(s_total) - 1)
            balanced = balanced_c2_profile(inst, report, rate, fresh)
            if balanced is not None:
                candidates.append((balanced, rate.lower))
        candidates.append((base, rate.lower))
    else:
        probe = plan_keys(inst, base, rate.upper, s_total, q_set)
        cap = sum(r for x, r in probe.ranks.items() if x != probe.absorber)
        upper = Fraction(min(probe.Lz, cap), probe.L)
        for target in dict.fromkeys([upper, rate.lower]):
            if rate.lower <= target:
                candidates.append((base, target))

    # Case 4 leaves users outside Q; unmasked, they would expose the protected sum
    order = (True, False) if rate.condition is ConditionClass.C1_CASE4 else (False, True)
    plans, seen = [], set()
    for outside in order:
        for profile, target in candidates:
            try:
                plan = plan_keys(inst, profile, target, s_total, q_set, outside)
            except SynthesisFailed:
                continue
            key = (plan.L, plan.Lz, plan.absorber, tuple(sorted(plan.ranks.items())))
            if key not in seen:
                seen.add(key)
                plans.append(plan)
    return plans


def synthesize_instance(inst: Instance, q: int | None = None, seed: int = 0,
                        retries: int = DEFAULT_RETRIES) -> PipelineOutcome:
    report, cls = analyze(inst)
    rate = rate_from_report(inst, report, cls)
    if rate.kind is RateKind.INFEASIBLE:
        return PipelineOutcome(rate, report, None, "infeasible")
    errors = []
    for plan in plan_for_instance(inst, report, rate):
        try:
            return PipelineOutcome(rate, report, synthesize(inst, plan, q, seed, retries))
        except SynthesisFailed as exc:
            errors.append(str(exc))
    return PipelineOutcome(rate, report, None, "; ".join(errors))


# ---------------------------------------------------------------- reference schemes

def example1_instance() -> Instance:
    return Instance.build(
        [2, 2, 2],
        [[(1, 1), (2, 1)], [(1, 2)], [(2, 2)]],
        [[(1, 2), (2, 2), (3, 1)]],
    )


def example2_instance() -> Instance:
    return Instance.build([2, 3], [[(1, 1), (1, 2)]], [[(2, 1)], [(2, 2)], [(2, 3)]])


def example1_scheme() -> LinearScheme:
    """Four i.i.d. symbols on the protected users, nothing on (3,1), the negated sum on (3,2)."""
    q = 5
    eye = np.eye(4, dtype=np.int64)
    maps = {
        (1, 1): eye[[0]], (1, 2): eye[[1]], (2, 1): eye[[2]], (2, 2): eye[[3]],
        (3, 1): np.zeros((1, 4), dtype=np.int64),
        (3, 2): np.full((1, 4), q - 1, dtype=np.int64),
    }
    return LinearScheme(q, 1, 4, maps)


def example2_scheme(q: int = 7) -> LinearScheme:
    """Full keys in cluster one; each user of cluster two repeats one symbol with its own multiplier."""
    grid = {
        (1, 1): [[-1, 0, -1, -1, -1], [0, -1, -1, -2, -3]],
        (1, 2): [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0]],
        (2, 1): [[0, 0, 1, 0, 0], [0, 0, 1, 0, 0]],
        (2, 2): [[0, 0, 0, 1, 0], [0, 0, 0, 2, 0]],
        (2, 3): [[0, 0, 0, 0, 1], [0, 0, 0, 0, 3]],
    }
    gf.check_modulus(q)
    return LinearScheme(q, 2, 5, {x: np.array(g, dtype=np.int64) % q for x, g in grid.items()})
