import os
import stat

import pytest
from hypothesis import given, settings, strategies as st

from forex_lite.formula import Exists, Forall, Implies, Param, conj, free_symbols
from forex_lite.lang import FALSE, TRUE, And, BinOp, Cmp, IntLit, Not, Var, VarName
from forex_lite.smt import (
    SAT,
    UNKNOWN,
    UNSAT,
    Solver,
    SolverConfig,
    SolverCrash,
    SolverNotFound,
    SolverOutputError,
    build_script,
    choose_logic,
    final_validity_query,
    mangle,
    resolve_solver,
    to_smt,
)

x = VarName("x", 1)
y = VarName("y", 2)
mu = Param(1)


def ge(a, b):
    return Cmp(">=", a, b)


def eq(a, b):
    return Cmp("==", a, b)


def example_three_query():
    xi = And((ge(Var(x), IntLit(9)), eq(Var(y), mu)))
    c = ge(mu, IntLit(2))
    return final_validity_query(xi, c, eq(Var(x), Var(y)), {x}, {y})


# ------------------------------------------------------------- emission


def test_emission():
    f = And((ge(Var(x), IntLit(-3)), Not(eq(BinOp("*", IntLit(2), Var(y)), mu))))
    assert to_smt(f) == "(and (>= x_1 (- 3)) (not (= (* 2 y_2) mu_1)))"
    assert to_smt(Forall((x,), TRUE)) == "(forall ((x_1 Int)) true)"
    assert to_smt(Cmp("!=", Var(x), IntLit(0))) == "(distinct x_1 0)"


def test_mangling_separates_params_from_lookalike_variables():
    assert mangle(mu) == "mu_1"
    assert mangle(VarName("mu", 1)) == "v_mu_1"
    assert mangle(VarName("v", 1)) == "v_v_1"
    assert mangle(VarName("x", 1, 4)) == "x_1.4"
    assert mangle(VarName("and")) == "v_and"


names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,4}", fullmatch=True)
syms = st.one_of(
    st.builds(VarName, names, st.integers(1, 12), st.integers(0, 3)),
    st.builds(Param, st.integers(1, 200)),
)


@settings(max_examples=300)
@given(st.lists(syms, min_size=2, max_size=6, unique=True))
def test_mangling_is_injective(symbols):
    assert len({mangle(s) for s in symbols}) == len(symbols)


def test_example_three_query_shape():
    q = example_three_query()
    expected = Forall((x,), Exists((mu,), conj(ge(mu, IntLit(2)), Forall((y,), Implies(
        And((ge(Var(x), IntLit(9)), eq(Var(y), mu))), eq(Var(x), Var(y)))))))
    assert q == expected
    assert not free_symbols(q)


def test_final_query_rejects_unhoused_symbols():
    with pytest.raises(ValueError):
        final_validity_query(eq(Var(x), Var(VarName("z", 3))), TRUE, TRUE, {x}, {y})
    with pytest.raises(ValueError):
        final_validity_query(TRUE, TRUE, eq(Var(x), mu), {x}, {y})


def test_logic_selection():
    assert choose_logic(ge(Var(x), IntLit(0))) == "QF_LIA"
    assert choose_logic(Forall((x,), ge(Var(x), IntLit(0)))) == "LIA"
    assert choose_logic(ge(BinOp("*", Var(x), Var(y)), IntLit(0))) == "QF_NIA"


def test_script_layout():
    s = build_script(ge(mu, IntLit(2)), {mu}, timeout_ms=1234, want_model=True)
    assert s.splitlines() == [
        "(set-option :timeout 1234)", "(set-option :produce-models true)", "(set-logic QF_LIA)",
        "(declare-const mu_1 Int)", "(assert (>= mu_1 2))", "(check-sat)",
        "(get-info :reason-unknown)", "(get-model)"]


def test_quantified_linear_sentences_try_elimination_first():
    s = build_script(Forall((x,), Exists((y,), ge(Var(y), Var(x)))), timeout_ms=1000)
    assert "(check-sat-using (or-else (try-for (then qe smt) 500) smt))" in s.splitlines()
    assert "(check-sat)" in build_script(Forall((x,), ge(BinOp("*", Var(x), Var(x)), IntLit(0)))).splitlines()


def test_alternating_query_is_decided_quickly(solver):
    # forall a. exists m. (m >= 0 && (a >= 0 ==> a + m == 2 * a))
    a = VarName("a", 1)
    q = Forall((a,), Exists((mu,), And((ge(mu, IntLit(0)), Implies(ge(Var(a), IntLit(0)),
               Cmp("==", BinOp("+", Var(a), mu), BinOp("*", IntLit(2), Var(a))))))))
    v = solver.check_closed(q)
    assert v.sat and v.wall_time < 5


# --------------------------------------------------------------- solving


def test_smoke_invariants(solver):
    assert solver.check_closed(TRUE).status == SAT
    assert solver.check_closed(FALSE).status == UNSAT


def test_example_three_holds(solver):
    assert solver.check_closed(example_three_query()).status == SAT


def test_off_by_one_variant_still_holds(solver):
    # every x >= 9 is matched by mu = x - 1 >= 8, x < 9 is vacuous
    q = Forall((x,), Exists((mu,), conj(ge(mu, IntLit(2)), Forall((y,), Implies(
        And((ge(Var(x), IntLit(9)), eq(Var(y), mu))),
        eq(Var(x), BinOp("+", Var(y), IntLit(1))))))))
    assert solver.check_closed(q).status == SAT


def test_unsat_when_witness_must_track_every_value(solver):
    q = Forall((x,), Exists((mu,), conj(ge(mu, IntLit(2)), Forall((y,), Implies(
        eq(Var(y), mu), eq(Var(x), Var(y)))))))
    assert solver.check_closed(q).status == UNSAT


def test_check_closed_rejects_open_formulas(solver):
    with pytest.raises(ValueError):
        solver.check_closed(ge(Var(x), IntLit(0)))


def test_restriction_sat(solver):
    assert solver.check_restriction_sat(ge(mu, IntLit(2))).status == SAT
    with pytest.raises(ValueError):
        solver.check_restriction_sat(ge(Var(x), IntLit(2)))


def test_check_sat_model(solver):
    v = solver.check_sat(And((ge(Var(x), IntLit(5)), Cmp("<=", Var(x), IntLit(5)))), want_model=True)
    assert v.sat and v.model[x] == 5


def test_check_valid(solver):
    assert solver.check_valid(Implies(ge(Var(x), IntLit(1)), ge(Var(x), IntLit(0)))).sat
    assert not solver.check_valid(ge(Var(x), IntLit(0))).sat


def test_equivalence_examples(solver):
    c_assume = Forall((x, y), Implies(And((ge(Var(x), IntLit(9)), eq(Var(y), mu))), ge(Var(y), IntLit(2))))
    assert solver.equivalent(c_assume, ge(mu, IntLit(2)))
    a = ge(Var(x), IntLit(3))
    assert solver.equivalent(a, a)
    v = solver.check_equiv(Cmp(">", Var(x), IntLit(0)), ge(Var(x), IntLit(0)))
    assert v.sat and v.model[x] == 0


def test_cache_and_dump(tmp_path):
    s = Solver(SolverConfig(dump_dir=str(tmp_path)))
    f = ge(mu, IntLit(2))
    s.check_sat(f)
    s.check_sat(f)
    assert s.stats["queries"] == 2 and s.stats["cache_hits"] == 1
    assert sorted(p.name for p in tmp_path.iterdir()) == ["query_1.smt2", "query_2.smt2"]
    assert "(check-sat)" in (tmp_path / "query_1.smt2").read_text()


# ------------------------------------------------------------ fake solvers


def fake_solver(tmp_path, body: str) -> str:
    p = tmp_path / "fake-solver"
    p.write_text("#!/bin/sh\ncat > /dev/null\n" + body)
    p.chmod(p.stat().st_mode | stat.S_IEXEC)
    return str(p)


def test_unknown_carries_reason(tmp_path):
    path = fake_solver(tmp_path, 'echo unknown\necho \'(:reason-unknown "incomplete quantifiers")\'\n')
    v = Solver(SolverConfig(path)).check_sat(ge(mu, IntLit(0)))
    assert v.status == UNKNOWN and v.reason == "incomplete quantifiers"


def test_missing_model_after_unsat_is_tolerated(tmp_path):
    path = fake_solver(tmp_path, 'echo unsat\necho \'(:reason-unknown "")\'\n'
                                 'echo \'(error "line 9 column 10: model is not available")\'\n')
    v = Solver(SolverConfig(path)).check_sat(ge(mu, IntLit(0)), want_model=True)
    assert v.status == UNSAT


def test_solver_errors(tmp_path):
    crash = fake_solver(tmp_path, "exit 3\n")
    with pytest.raises(SolverCrash):
        Solver(SolverConfig(crash)).check_closed(TRUE)
    (tmp_path / "fake-solver").unlink()
    garbage = fake_solver(tmp_path, "echo banana\n")
    with pytest.raises(SolverOutputError):
        Solver(SolverConfig(garbage)).check_closed(TRUE)
    (tmp_path / "fake-solver").unlink()
    rejected = fake_solver(tmp_path, 'echo \'(error "unknown constant foo")\'\n')
    with pytest.raises(SolverOutputError):
        Solver(SolverConfig(rejected)).check_closed(TRUE)


def test_solver_resolution(tmp_path, monkeypatch):
    with pytest.raises(SolverNotFound):
        resolve_solver(str(tmp_path / "nope"))
    path = fake_solver(tmp_path, "echo sat\n")
    monkeypatch.setenv("FOREX_SOLVER", path)
    assert resolve_solver(None) == path
    assert os.path.basename(resolve_solver("z3")) == "z3"


def test_timeout_must_be_positive():
    with pytest.raises(ValueError):
        SolverConfig(timeout_ms=0)
