"""Exact rational linear programming.

Problems are always of the form

    minimize  c.x   subject to   a_i.x >= b_i,   x >= 0

and are solved with a dense two-phase tableau simplex over ``Fraction`` using
Bland's rule, so the pivot sequence (and hence the returned vertex) is
reproducible.  The builders at the bottom turn an analyzed instance into the
two key-rate programs.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import Instance, UserId, fmt_user


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: dict[str, Fraction]
    rhs: Fraction
    name: str = ""

    def lhs(self, x: dict[str, Fraction]) -> Fraction:
        return sum((c * x.get(v, 0) for v, c in self.coeffs.items()), Fraction(0))


@dataclass
class LpProblem:
    variables: list[str]
    objective: dict[str, Fraction]
    constraints: list[Constraint] = field(default_factory=list)

    def __post_init__(self):
        known = set(self.variables)
        for row in [self.objective, *(c.coeffs for c in self.constraints)]:
            unknown = set(row) - known
            if unknown:
                raise ValueError(f"undeclared variables: {sorted(unknown)}")

    def add(self, coeffs: dict[str, Fraction], rhs, name: str = "") -> None:
        row = {v: Fraction(c) for v, c in coeffs.items() if c}
        if set(row) - set(self.variables):
            raise ValueError("constraint references undeclared variables")
        self.constraints.append(Constraint(row, Fraction(rhs), name))

    def value(self, x: dict[str, Fraction]) -> Fraction:
        return sum((c * x.get(v, 0) for v, c in self.objective.items()), Fraction(0))

    def is_feasible(self, x: dict[str, Fraction]) -> bool:
        if any(x.get(v, 0) < 0 for v in self.variables):
            return False
        return all(c.lhs(x) >= c.rhs for c in self.constraints)

    def dumps(self) -> str:
        """Debug text form: one line for the objective, one per row."""
        def form(coeffs):
            terms = [f"{coeffs[v]}*{v}" for v in self.variables if v in coeffs]
            return " + ".join(terms) if terms else "0"

        lines = [f"minimize {form(self.objective)}"]
        for c in self.constraints:
            tag = f"[{c.name}] " if c.name else ""
            lines.append(f"{tag}{form(c.coeffs)} >= {c.rhs}")
        return "\n".join(lines)


@dataclass
class LpSolution:
    status: LpStatus
    objective_value: Fraction | None = None
    assignment: dict[str, Fraction] = field(default_factory=dict)
    duals: list[Fraction] = field(default_factory=list)


class _Tableau:
    """Rows ``A x = b`` with ``b >= 0``; ``basis[i]`` is the basic column of row i."""

    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        piv = prow[c]
        if piv != 1:
            prow[:] = [a / piv for a in prow]
            self.rhs[r] /= piv
        for i, row in enumerate(self.rows):
            if i != r and row[c] != 0:
                f = row[c]
                row[:] = [a - f * p for a, p in zip(row, prow)]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost: list[Fraction]) -> list[Fraction]:
        ncol = len(cost)
        red = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j in range(ncol):
                    if row[j]:
                        red[j] -= cb * row[j]
        return red

    def run(self, cost: list[Fraction], allowed: list[bool]) -> LpStatus:
        while True:
            red = self.reduced_costs(cost)
            entering = next((j for j, rc in enumerate(red) if allowed[j] and rc < 0), None)
            if entering is None:
                return LpStatus.OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                if row[entering] > 0:
                    ratio = self.rhs[i] / row[entering]
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return LpStatus.UNBOUNDED
            self.pivot(best[1], entering)


def solve(lp: LpProblem) -> LpSolution:
    """Two-phase simplex with Bland's rule, exact arithmetic throughout."""
    nv = len(lp.variables)
    pos = {v: j for j, v in enumerate(lp.variables)}
    m = len(lp.constraints)
    if m == 0:
        zero = {v: Fraction(0) for v in lp.variables}
        if any(c < 0 for c in lp.objective.values()):
            return LpSolution(LpStatus.UNBOUNDED)
        return LpSolution(LpStatus.OPTIMAL, Fraction(0), zero, [])

    # columns: structural | surplus (one per row) | artificial (one per row)
    ncol = nv + 2 * m
    rows, rhs = [], []
    for i, con in enumerate(lp.constraints):
        row = [Fraction(0)] * ncol
        for v, c in con.coeffs.items():
            row[pos[v]] = Fraction(c)
        row[nv + i] = Fraction(-1)
        b = Fraction(con.rhs)
        sign = -1 if b < 0 else 1
        if sign < 0:
            row = [-a for a in row]
            b = -b
        row[nv + m + i] = Fraction(1)
        rows.append(row)
        rhs.append(b)
    tab = _Tableau(rows, rhs, [nv + m + i for i in range(m)])

    phase1 = [Fraction(0)] * (nv + m) + [Fraction(1)] * m
    tab.run(phase1, [True] * ncol)
    if sum((tab.rhs[i] for i, b in enumerate(tab.basis) if b >= nv + m), Fraction(0)) > 0:
        return LpSolution(LpStatus.INFEASIBLE)
    # drive zero-level artificials out of the basis where possible
    for i, b in enumerate(tab.basis):
        if b >= nv + m:
            j = next((j for j in range(nv + m) if tab.rows[i][j] != 0), None)
            if j is not None:
                tab.pivot(i, j)

    cost = [Fraction(lp.objective.get(v, 0)) for v in lp.variables] + [Fraction(0)] * (2 * m)
    allowed = [True] * (nv + m) + [False] * m
    status = tab.run(cost, allowed)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status)

    x = [Fraction(0)] * ncol
    for i, b in enumerate(tab.basis):
        x[b] = tab.rhs[i]
    assignment = {v: x[pos[v]] for v in lp.variables}
    # the surplus column of row i is -sign*e_i, so its reduced cost is the row's dual as stated
    red = tab.reduced_costs(cost)
    duals = [red[nv + i] for i in range(m)]
    return LpSolution(LpStatus.OPTIMAL, lp.value(assignment), assignment, duals)


def dual_certificate_ok(lp: LpProblem, sol: LpSolution) -> bool:
    """Check ``sol.duals`` is dual feasible with objective equal to the primal optimum.

    Dual of ``min c.x, Ax >= b, x >= 0`` is ``max b.y, A^T y <= c, y >= 0``.
    """
    y = sol.duals
    if len(y) != len(lp.constraints) or any(yi < 0 for yi in y):
        return False
    for v in lp.variables:
        col = sum((yi * c.coeffs.get(v, 0) for yi, c in zip(y, lp.constraints)), Fraction(0))
        if col > lp.objective.get(v, 0):
            return False
    dual_value = sum((yi * c.rhs for yi, c in zip(y, lp.constraints)), Fraction(0))
    return dual_value == sol.objective_value


def _solve_square(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    n = len(a)
    mat = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if mat[r][col] != 0), None)
        if piv is None:
            return None
        mat[col], mat[piv] = mat[piv], mat[col]
        p = mat[col][col]
        mat[col] = [x / p for x in mat[col]]
        for r in range(n):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[col])]
    return [mat[r][n] for r in range(n)]


def vertex_enumeration(lp: LpProblem) -> Fraction | None:
    """Brute-force optimum over all basic feasible points (small problems only).

    Returns ``None`` when the feasible region is empty.  Every polyhedron here
    sits in the nonnegative orthant, so a bounded optimum is attained at a
    vertex.  With integer coefficients a batched float pass discards singular
    and clearly infeasible bases first; survivors are re-solved exactly.
    """
    n = len(lp.variables)
    if n == 0:
        return Fraction(0) if all(c.rhs <= 0 for c in lp.constraints) else None
    rows = [([Fraction(c.coeffs.get(v, 0)) for v in lp.variables], Fraction(c.rhs))
            for c in lp.constraints]
    for j in range(n):
        rows.append(([Fraction(int(i == j)) for i in range(n)], Fraction(0)))
    subsets = list(itertools.combinations(range(len(rows)), n))
    if all(a.denominator == 1 for r, _ in rows for a in r):
        subsets = _plausible_bases(rows, subsets)
    best = None
    for subset in subsets:
        point = _solve_square([rows[i][0] for i in subset], [rows[i][1] for i in subset])
        if point is None:
            continue
        x = dict(zip(lp.variables, point))
        if lp.is_feasible(x):
            val = lp.value(x)
            if best is None or val < best:
                best = val
    return best


def _plausible_bases(rows, subsets):
    """Subsets whose basis is nonsingular and whose point is feasible up to float error."""
    if not subsets:
        return subsets
    a = np.array([[float(x) for x in r] for r, _ in rows])
    b = np.array([float(v) for _, v in rows])
    idx = np.array(subsets)
    mats, rhs = a[idx], b[idx]
    # integer matrices have integer determinants, so rounding separates singular ones
    ok = np.abs(np.rint(np.linalg.det(mats))) >= 1
    idx, mats, rhs = idx[ok], mats[ok], rhs[ok]
    if not len(idx):
        return []
    pts = np.linalg.solve(mats, rhs[..., None])[..., 0]
    slack = pts @ a.T - b
    scale = 1e-6 * (1 + np.abs(pts).max(axis=1, keepdims=True))
    keep = (slack >= -scale).all(axis=1)
    return [tuple(s) for s in idx[keep]]


def user_var(prefix: str, user: UserId) -> str:
    return f"{prefix}_{user[0]},{user[1]}"


def _outside_users(inst: Instance, report) -> list[UserId]:
    return [x for x in inst.users if x not in report.s_total]


def build_c2_lp(inst: Instance, report) -> LpProblem:
    """Min-max program for the fractional part under Condition 2, in epigraph form."""
    outside = _outside_users(inst, report)
    names = [user_var("b", x) for x in outside]
    lp = LpProblem(names + ["t"], {"t": Fraction(1)})
    for tr in report.a_argmax:
        free = [x for x in outside if x not in tr.guarded]
        lp.add({user_var("b", x): 1 for x in free}, 1,
               f"cover u={tr.u},m={tr.m},n={tr.n}")
    seen = set()
    for tr in report.a_argmax:
        t_out = tuple(sorted(inst.collusion_sets[tr.n - 1] - report.s_total))
        if not t_out or t_out in seen:
            continue
        seen.add(t_out)
        row = {"t": Fraction(1)}
        row.update({user_var("b", x): Fraction(-1) for x in t_out})
        lp.add(row, 0, "epigraph T\\S=" + ",".join(fmt_user(x) for x in t_out))
    return lp


def build_c3_lp(inst: Instance, report) -> LpProblem:
    """Min-sum program for the upper bound under Condition 3."""
    outside = _outside_users(inst, report)
    names = [user_var("l", x) for x in outside]
    lp = LpProblem(names, {v: Fraction(1) for v in names})
    for tr in report.a_argmax:
        free = [x for x in outside if x not in tr.guarded]
        lp.add({user_var("l", x): 1 for x in free}, 1, f"relay u={tr.u},m={tr.m},n={tr.n}")
    for p in report.e_argmax:
        free = [x for x in outside if x not in p.cover]
        lp.add({user_var("l", x): 1 for x in free}, 1, f"server m={p.m},n={p.n}")
    return lp


def user_values(lp: LpProblem, sol: LpSolution, prefix: str) -> dict[UserId, Fraction]:
    out = {}
    for v in lp.variables:
        if v.startswith(prefix + "_"):
            u, w = v[len(prefix) + 1:].split(",")
            out[(int(u), int(w))] = sol.assignment[v]
    return out
