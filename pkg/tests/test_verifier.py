import json

import pytest

from forex_lite.engine import EngineConfig
from forex_lite.formula import free_params
from forex_lite.lang import Cmp, IntLit
from forex_lite.oracle import feht_check_bounded
from forex_lite.parser import parse_spec
from forex_lite.smt import SolverConfig
from forex_lite.verifier import Config, format_table, run_suite, verify
from helpers import CORPUS


def spec(name):
    return parse_spec((CORPUS / name).read_text())


def test_param_choice_verified(solver):
    r = verify(spec("reference/param_choice.feht"))
    assert r.verified and r.final_queries == 1
    (mu,) = free_params(r.assertion.c)
    assert solver.equivalent(r.assertion.c, Cmp(">=", mu, IntLit(2)))


def test_async_pair_with_hints():
    r = verify(spec("reference/async_loops_hint.feht"))
    assert r.verified
    assert [tuple(cs) for _, _, cs in r.loops] == [(1, 2)]


def test_failing_spec_reports_reason():
    r = verify(spec("loopfree/assign_mismatch.feht"))
    assert not r.verified and "final query" in r.reason


def test_report_json_schema():
    data = verify(spec("reference/param_choice.feht")).to_json()
    json.dumps(data)
    assert data["schema"] == 1 and data["verdict"] == "Verified"
    assert set(data) >= {"reason", "xi", "c", "final_query_smt", "loops", "candidates_tried",
                         "final_queries", "solver", "wall_time"}
    assert data["xi"]["smt"] and data["c"]["smt"]
    assert data["final_query_smt"].startswith("(forall")


def test_loop_report_lists_candidates():
    data = verify(spec("reference/async_loops_hint.feht")).to_json()
    assert data["loops"] == [{"group": 0, "invariant": data["loops"][0]["invariant"], "counters": [1, 2]}]
    assert data["candidates_tried"] == 1


def test_determinism():
    a, b = verify(spec("reference/async_loops.feht")), verify(spec("reference/async_loops.feht"))
    assert (a.verdict, a.xi, a.c, a.loops, a.candidate_trace) == (b.verdict, b.xi, b.c, b.loops, b.candidate_trace)


def test_candidate_budget_is_respected():
    cfg = Config(engine=EngineConfig(candidate_budget=3))
    r = verify(spec("loops/diverging_sum.feht"), cfg)
    assert not r.verified and r.candidates_tried <= 3 * 8


def test_parameters_independent_of_existential_state():
    # a witness exists (y_2 = x_2) but no parameter expresses it: the
    # procedure is sound, not complete
    f = parse_spec("""
        [forall] y = x;
        [exists] y = nondet(); assume(y >= x);
        [pre] x_1 == x_2
        [post] y_1 == y_2
    """)
    assert feht_check_bounded(f, 3, 16).status == "Valid"
    assert not verify(f).verified


def test_suite_empty_directory(tmp_path):
    suite = run_suite(tmp_path)
    assert suite["results"] == [] and suite["all_ok"]
    assert format_table(suite) == "(no specs)"


def test_suite_flags_mismatch(tmp_path):
    (tmp_path / "ok.feht").write_text((CORPUS / "reference/param_choice.feht").read_text())
    (tmp_path / "bad.feht").write_text("// expect: Verified\n[forall] x = 1; [exists] x = 2; "
                                       "[pre] true [post] x_1 == x_2")
    (tmp_path / "broken.feht").write_text("[forall] x = ;")
    suite = run_suite(tmp_path)
    rows = {r["file"].rsplit("/", 1)[1]: r for r in suite["results"]}
    assert rows["ok.feht"]["ok"] and not rows["bad.feht"]["ok"]
    assert rows["broken.feht"]["verdict"] == "error"
    assert not suite["all_ok"]
    assert "MISMATCH" in format_table(suite)


def test_solver_timeout_is_configurable():
    r = verify(spec("reference/param_choice.feht"), Config(SolverConfig(timeout_ms=5000)))
    assert r.verified


@pytest.mark.parametrize("path", sorted(p.relative_to(CORPUS).as_posix() for p in (CORPUS / "reference").glob("*.feht")))
def test_reference_corpus_expectations(path):
    text = (CORPUS / path).read_text()
    expected = next(l.split(":", 1)[1].strip() for l in text.splitlines() if l.startswith("// expect:"))
    assert verify(parse_spec(text)).verdict == expected
