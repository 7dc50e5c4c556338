"""Tests for the integer-program builders and the branch-and-bound solver."""

from fractions import Fraction

import numpy as np
import pytest

from oracle import oracle_milp_min
from pnplan import (ContractViolation, MilpModel, ParseError,
                    build_buchi_pn, build_projection_milp, build_quotient,
                    build_reachability_milp, build_rmpn, compose,
                    decode_projection, decode_reachability, export_lp,
                    import_solution, parse_automaton, parse_environment, solve)
from pnplan.milp import lp_names


def knapsack_model():
    # maximize 5a + 4b + 3c st 2a + 3b + 4c <= 5  (as minimization)
    m = MilpModel()
    a = m.add_var("a", 0, 1, obj=-5)
    b = m.add_var("b", 0, 1, obj=-4)
    c = m.add_var("c", 0, 1, obj=-3)
    m.add_constraint({a: 2, b: 3, c: 4}, "<=", 5)
    return m


def test_solver_small_knapsack():
    sol = solve(knapsack_model())
    assert sol.status == "optimal"
    assert sol.objective == Fraction(-9)
    assert sol.x.tolist() == [1, 1, 0]


def test_solver_exactness_against_enumeration():
    rng = np.random.default_rng(71)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        lb = np.zeros(n, dtype=np.int64)
        ub = rng.integers(1, 4, size=n)
        obj = rng.integers(-5, 6, size=n)
        m = MilpModel()
        for j in range(n):
            m.add_var(f"x{j}", int(lb[j]), int(ub[j]), obj=int(obj[j]))
        rows_eq, rows_ub = [], []
        for _ in range(int(rng.integers(1, 4))):
            row = rng.integers(-3, 4, size=n)
            if rng.random() < 0.4:
                rhs = int(row @ rng.integers(0, 2, size=n))
                m.add_constraint(dict(enumerate(row)), "==", rhs)
                rows_eq.append((row, rhs))
            else:
                rhs = int(rng.integers(-2, 8))
                m.add_constraint(dict(enumerate(row)), "<=", rhs)
                rows_ub.append((row, rhs))
        status, best, _ = oracle_milp_min(lb, ub, obj, rows_eq, rows_ub)
        sol = solve(m)
        assert sol.status == status
        if status == "optimal":
            assert sol.objective == best
            assert m.check_point(sol.x)


def test_solver_infeasible_and_node_limit():
    m = MilpModel()
    a = m.add_var("a", 0, 3)
    m.add_constraint({a: 1}, "==", 5)
    assert solve(m).status == "infeasible"
    sol = solve(knapsack_model(), node_limit=0)
    assert sol.status == "node-limit"


def test_model_validation():
    m = MilpModel()
    with pytest.raises(ContractViolation):
        m.add_var("x", 3, 2)
    m.add_var("x", 0, 1)
    with pytest.raises(ContractViolation):
        m.add_constraint({0: 1}, ">=", 0)


def fig_pipeline():
    from conftest import read_fixture
    env = parse_environment(read_fixture("fig_env.txt"))
    aut = parse_automaton(read_fixture("fig_automaton.txt"))
    rmpn = build_rmpn(env)
    q = build_quotient(rmpn)
    pn = build_buchi_pn(aut)
    return env, aut, rmpn, q, compose(q, pn, rmpn.robot_count)


def test_reachability_model_shape_and_solution():
    env, aut, rmpn, q, c = fig_pipeline()
    k = 3
    rm = build_reachability_milp(c, c.m0, k, final_place="s3")
    n_block = len(c.net.places) + len(c.net.transitions)
    assert rm.model.num_vars == 2 * k * n_block
    sol = solve(rm.model)
    assert sol.status == "optimal"
    steps = decode_reachability(rm, sol.x)
    assert len(steps) == 2 * k
    flow = c.net.post - c.net.pre
    m_prev = c.m0
    for i, (s, m) in enumerate(steps, start=1):
        assert (m == m_prev + flow @ s).all()
        assert (m_prev - c.net.pre @ s >= 0).all()  # enabledness
        if i % 2 == 1:
            assert s[c.buchi_slice].sum() == 0
            assert s[c.motion_slice].sum() <= c.robot_count
        else:
            assert s[c.motion_slice].sum() == 0
            assert s[c.buchi_slice].sum() == 1
        m_prev = m
    # final automaton token on the target state
    assert m_prev[c.net.place_index["s3"]] == 1


def test_reachability_infeasible_horizon():
    env, aut, rmpn, q, c = fig_pipeline()
    rm = build_reachability_milp(c, c.m0, 1, final_place="s3")
    assert solve(rm.model).status == "infeasible"


def test_projection_model_shape_and_refinement():
    env, aut, rmpn, q, c = fig_pipeline()
    k = 3
    rm = build_reachability_milp(c, c.m0, k, final_place="s3")
    sol = solve(rm.model)
    nq = len(q.net.places)
    markings = [q.m0]
    for i, (s, m) in enumerate(decode_reachability(rm, sol.x), start=1):
        if i % 2 == 1 and s[c.motion_slice].sum() > 0:
            markings.append(m[:nq])
    pm = build_projection_milp(rmpn, q, rmpn.m0, markings)
    n_block = len(rmpn.net.places) + len(rmpn.net.transitions)
    assert pm.model.num_vars == len(markings) * (rmpn.robot_count + 1) * n_block
    psol = solve(pm.model)
    assert psol.status == "optimal"
    firings, cells = decode_projection(pm, psol.x)
    # every refined cell marking is 0/1 and projects onto its block target
    for t, m in enumerate(cells):
        block = t // (rmpn.robot_count + 1)
        assert set(np.unique(m)) <= {0, 1}
        assert m.sum() == rmpn.robot_count
    assert psol.objective >= len(markings) - 1  # at least one move per change


def test_projection_rejects_mismatched_start():
    env, aut, rmpn, q, c = fig_pipeline()
    bad = np.array([0, 2, 0, 0, 0], dtype=np.int64)  # robots actually start free
    with pytest.raises(ContractViolation):
        build_projection_milp(rmpn, q, rmpn.m0, [bad])


def test_lp_export_and_solution_import():
    m = knapsack_model()
    text = export_lp(m)
    assert text.startswith("Minimize")
    assert "Generals" in text and text.rstrip().endswith("End")
    x = import_solution(m, "a 1\nb 1.0\nc 0\n")
    assert x.tolist() == [1, 1, 0]
    with pytest.raises(ParseError):
        import_solution(m, "zz 1\n")
    with pytest.raises(ParseError):
        import_solution(m, "a 0.5\n")


def test_lp_names_are_sanitized_and_unique():
    m = MilpModel()
    m.add_var("s1[b:s1->s2:y1 & y2]", 0, 1)
    m.add_var("s1[b:s1->s2:y1 | y2]", 0, 1)
    names = lp_names(m)
    assert len(set(names)) == 2
    for n in names:
        assert all(ch.isalnum() or ch in "_." for ch in n)
    x = import_solution(m, f"{names[0]} 1\n")
    assert x.tolist() == [1, 0]
