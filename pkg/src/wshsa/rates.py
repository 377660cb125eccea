"""Optimal total key rate (or bounds) and per-user key-rate profiles."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .analysis import AuxReport, ConditionClass, analyze
from .model import Instance, UserId, fmt_user
from .ratlp import (LpProblem, LpStatus, build_c2_lp, build_c3_lp, solve,
                    user_values, user_var)


class RateKind(str, enum.Enum):
    INFEASIBLE = "Infeasible"
    EXACT = "Exact"
    BOUNDS = "Bounds"


@dataclass
class RateResult:
    kind: RateKind
    condition: ConditionClass
    lower: Fraction | None = None
    upper: Fraction | None = None
    a_star: int = 0
    d_star: int = 0
    d_adj: int = 0
    fractional: Fraction = Fraction(0)
    lp: LpProblem | None = field(default=None, repr=False)
    lp_values: dict[UserId, Fraction] = field(default_factory=dict)

    @property
    def rate(self) -> Fraction | None:
        return self.lower if self.kind is RateKind.EXACT else None

    def describe(self) -> str:
        if self.kind is RateKind.INFEASIBLE:
            return "infeasible"
        if self.kind is RateKind.EXACT:
            return f"{self.lower} (exact)"
        return f"[{self.lower}, {self.upper}] (bounds)"

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "condition": self.condition.value,
            "a_star": self.a_star,
            "d_star": self.d_star,
            "d_adj": self.d_adj,
            "fractional": str(self.fractional),
        }
        if self.kind is RateKind.EXACT:
            out["rate"] = str(self.lower)
        elif self.kind is RateKind.BOUNDS:
            out["lower"], out["upper"] = str(self.lower), str(self.upper)
        if self.lp_values:
            out["lp_values"] = {fmt_user(x): str(v) for x, v in sorted(self.lp_values.items())}
        return out


def rate_from_report(inst: Instance, report: AuxReport, cls: ConditionClass) -> RateResult:
    base = dict(condition=cls, a_star=report.a_star, d_star=report.d_star, d_adj=report.d_adj)
    if cls is ConditionClass.INFEASIBLE:
        return RateResult(RateKind.INFEASIBLE, **base)
    if cls in (ConditionClass.C1_CASE2, ConditionClass.C1_CASE3, ConditionClass.C1_CASE4):
        # outside Case 2 the adjusted and plain maxima coincide
        r = Fraction(max(report.a_star, report.d_adj))
        return RateResult(RateKind.EXACT, lower=r, upper=r, **base)
    top = Fraction(max(report.a_star, report.d_star))
    if cls is ConditionClass.C2:
        lp = build_c2_lp(inst, report)
        sol = solve(lp)
        assert sol.status is LpStatus.OPTIMAL, sol.status
        b = sol.objective_value
        return RateResult(RateKind.EXACT, lower=top + b, upper=top + b, fractional=b,
                          lp=lp, lp_values=user_values(lp, sol, "b"), **base)
    lp = build_c3_lp(inst, report)
    sol = solve(lp)
    assert sol.status is LpStatus.OPTIMAL, sol.status
    l_star = sol.objective_value
    return RateResult(RateKind.BOUNDS, lower=top, upper=top + l_star, fractional=l_star,
                      lp=lp, lp_values=user_values(lp, sol, "l"), **base)


def optimal_rate(inst: Instance) -> RateResult:
    report, cls = analyze(inst)
    return rate_from_report(inst, report, cls)


def communication_rates(inst: Instance) -> tuple[Fraction, Fraction]:
    return Fraction(1), Fraction(1)


def per_user_key_profile(inst: Instance, result: RateResult,
                         report: AuxReport | None = None) -> dict[UserId, Fraction]:
    """Full keys on the total security set, LP values outside it (C2/C3), zero otherwise."""
    if result.kind is RateKind.INFEASIBLE:
        raise ValueError("no key profile for an infeasible instance")
    if report is None:
        report = analyze(inst)[0]
    prof = {x: Fraction(0) for x in inst.users}
    for x in report.s_total:
        prof[x] = Fraction(1)
    for x, v in result.lp_values.items():
        prof[x] = v
    return prof


def balanced_c2_profile(inst: Instance, report: AuxReport, result: RateResult,
                        fresh_target: Fraction) -> dict[UserId, Fraction] | None:
    """Fractional key sizes outside the total security set that sum to ``fresh_target``.

    Keeps the covering rows and the optimal min-max value while filling the
    key budget exactly; ``None`` when no such point exists.
    """
    lp = result.lp
    names = [v for v in lp.variables if v != "t"]
    alt = LpProblem(list(names), {v: Fraction(1) for v in names})
    for c in lp.constraints:
        if "t" not in c.coeffs:
            alt.add(dict(c.coeffs), c.rhs, c.name)
        else:
            # t >= sum(b) becomes -sum(b) >= -b*
            alt.add({v: -1 for v in c.coeffs if v != "t"}, -result.fractional, c.name)
    for v in names:
        alt.add({v: -1}, -1, f"cap {v}")
    alt.add({v: 1 for v in names}, fresh_target, "budget")
    sol = solve(alt)
    if sol.status is not LpStatus.OPTIMAL or sol.objective_value != fresh_target:
        return None
    prof = {x: Fraction(0) for x in inst.users}
    for x in report.s_total:
        prof[x] = Fraction(1)
    for x in inst.users:
        name = user_var("b", x)
        if name in sol.assignment:
            prof[x] = sol.assignment[name]
    return prof
