from fractions import Fraction as F

from hypothesis import example, given, settings, strategies as st

from wshsa.analysis import analyze
from wshsa.model import Instance
from wshsa.ratlp import (LpProblem, LpStatus, build_c2_lp, build_c3_lp, dual_certificate_ok,
                         solve, user_values, vertex_enumeration)

from oracles import brute_lp_min


def minmax_lp():
    lp = LpProblem(["b1", "b2", "b3", "t"], {"t": F(1)})
    for b in ("b1", "b2", "b3"):
        lp.add({"t": 1, b: -1}, 0)
    lp.add({"b1": 1, "b2": 1}, 1)
    lp.add({"b1": 1, "b3": 1}, 1)
    lp.add({"b2": 1, "b3": 1}, 1)
    return lp


def test_minmax_half():
    lp = minmax_lp()
    sol = solve(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective_value == F(1, 2)
    assert sol.assignment == {"b1": F(1, 2), "b2": F(1, 2), "b3": F(1, 2), "t": F(1, 2)}
    assert dual_certificate_ok(lp, sol)
    assert vertex_enumeration(lp) == F(1, 2)


def test_no_constraints_gives_zero():
    lp = LpProblem(["l1", "l2"], {"l1": F(1), "l2": F(1)})
    sol = solve(lp)
    assert sol.objective_value == 0
    assert set(sol.assignment.values()) == {0}


def test_single_bound():
    lp = LpProblem(["b1"], {"b1": F(1)})
    lp.add({"b1": 1}, F(3, 7))
    assert solve(lp).objective_value == F(3, 7)


def test_infeasible_and_unbounded():
    lp = LpProblem(["x"], {"x": F(1)})
    lp.add({"x": -1}, 1)
    assert solve(lp).status is LpStatus.INFEASIBLE
    lp = LpProblem(["x"], {"x": F(-1)})
    lp.add({"x": 1}, 1)
    assert solve(lp).status is LpStatus.UNBOUNDED


def test_undeclared_variable_rejected():
    lp = LpProblem(["x"], {"x": F(1)})
    try:
        lp.add({"y": 1}, 1)
    except ValueError:
        return
    raise AssertionError("expected ValueError")


def test_example2_c2_program(ex2):
    rep, _ = analyze(ex2)
    lp = build_c2_lp(ex2, rep)
    assert lp.variables == ["b_2,1", "b_2,2", "b_2,3", "t"]
    covers = [c for c in lp.constraints if "t" not in c.coeffs]
    epis = [c for c in lp.constraints if "t" in c.coeffs]
    # the three pairwise rows plus the implied all-three row (T empty)
    assert len(covers) == 4 and len(epis) == 3
    sol = solve(lp)
    assert sol.objective_value == F(1, 2)
    assert user_values(lp, sol, "b") == {(2, 1): F(1, 2), (2, 2): F(1, 2), (2, 3): F(1, 2)}
    assert dual_certificate_ok(lp, sol)


def test_example2_truncated_collusion(ex2):
    inst = Instance.build([2, 3], [[(1, 1), (1, 2)]], [[(2, 1)]])
    rep, _ = analyze(inst)
    lp = build_c2_lp(inst, rep)
    sol = solve(lp)
    assert sol.objective_value == 0
    vals = user_values(lp, sol, "b")
    assert vals[(2, 1)] == 0 and vals[(2, 2)] == 1


def test_empty_argmax_gives_empty_programs(empty_inst):
    rep, _ = analyze(empty_inst)
    for build in (build_c2_lp, build_c3_lp):
        lp = build(empty_inst, rep)
        assert not [c for c in lp.constraints if c.rhs > 0]
        assert solve(lp).objective_value == 0


def test_single_cover_row_min_sum():
    lp = LpProblem(["la", "lb"], {"la": F(1), "lb": F(1)})
    lp.add({"la": 1, "lb": 1}, 1)
    sol = solve(lp)
    assert sol.objective_value == 1
    assert sol.assignment == {"la": F(1), "lb": F(0)}


def test_dump_is_stable():
    text = minmax_lp().dumps()
    assert text.splitlines()[0] == "minimize 1*t"
    assert text == minmax_lp().dumps()
    assert "1*b1 + 1*b2 >= 1" in text


coef = st.integers(-2, 3)


@settings(max_examples=120, deadline=None)
@example((3, [([0, 1, 0], 1), ([0, -2, 1], -1)], [0, 0, 1]))  # negative rhs row with a nonzero dual
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.lists(coef, min_size=n, max_size=n), st.integers(-2, 3)), max_size=4),
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
)))
def test_simplex_matches_vertices_and_dual(data):
    n, rows, obj = data
    names = [f"x{i}" for i in range(n)]
    lp = LpProblem(names, {v: F(c) for v, c in zip(names, obj) if c})
    for a, b in rows:
        lp.add({v: c for v, c in zip(names, a)}, b)
    sol = solve(lp)
    ref = vertex_enumeration(lp)
    if sol.status is LpStatus.INFEASIBLE:
        assert ref is None
        return
    assert sol.status is LpStatus.OPTIMAL  # nonnegative objective is bounded below
    assert lp.is_feasible(sol.assignment)
    assert sol.objective_value == ref
    assert dual_certificate_ok(lp, sol)
    # a coarse grid search never beats the optimum
    grid_best = brute_lp_min(n, [(a, b) for a, b in rows], obj, [F(k, 2) for k in range(7)])
    assert grid_best is None or grid_best >= sol.objective_value


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.lists(coef, min_size=n, max_size=n), st.integers(-2, 3)), max_size=5),
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
)))
def test_vertex_prefilter_agrees_with_exact_path(data):
    # halving one coefficient of every row forces the unfiltered exact path
    n, rows, obj = data
    names = [f"x{i}" for i in range(n)]
    fast = LpProblem(names, {v: F(c) for v, c in zip(names, obj) if c})
    exact = LpProblem(names, {v: F(c) for v, c in zip(names, obj) if c})
    for a, b in rows:
        fast.add({v: 2 * c for v, c in zip(names, a)}, 2 * b)
        exact.add({v: c for v, c in zip(names, a)} | {"x0": F(2 * a[0] + 1, 2)}, b)
        fast.constraints[-1].coeffs["x0"] = F(2 * a[0] + 1)
    assert vertex_enumeration(fast) == vertex_enumeration(exact)
