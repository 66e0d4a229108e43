"""Top-level verification: candidate loop, final query and reporting."""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .engine import Engine, EngineConfig, genpp
from .formula import free_vars
from .lang import Feht
from .smt import Solver, SolverConfig, final_validity_query, to_smt

VERIFIED = "Verified"
INCONCLUSIVE = "Inconclusive"
SCHEMA = 1


@dataclass
class Config:
    solver: SolverConfig = field(default_factory=SolverConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    # cap on final queries per run (each loop candidate path costs one)
    max_final_queries: int = 4000


@dataclass
class Report:
    verdict: str
    reason: Optional[str] = None
    xi: Optional[str] = None
    c: Optional[str] = None
    xi_smt: Optional[str] = None
    c_smt: Optional[str] = None
    query_smt: Optional[str] = None
    loops: list = field(default_factory=list)
    candidates_tried: int = 0
    final_queries: int = 0
    solver_stats: dict = field(default_factory=dict)
    wall_time: float = 0.0
    candidate_trace: list = field(default_factory=list)
    rule_trace: list = field(default_factory=list)
    # raw objects for programmatic use; not serialized
    assertion: object = None
    query: object = None

    @property
    def verified(self) -> bool:
        return self.verdict == VERIFIED

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "verdict": self.verdict,
            "reason": self.reason,
            "xi": {"text": self.xi, "smt": self.xi_smt},
            "c": {"text": self.c, "smt": self.c_smt},
            "final_query_smt": self.query_smt,
            "loops": [{"group": g, "invariant": inv, "counters": list(cs)} for g, inv, cs in self.loops],
            "candidates_tried": self.candidates_tried,
            "final_queries": self.final_queries,
            "solver": self.solver_stats,
            "wall_time": round(self.wall_time, 4),
        }


def _vars_of(f: Feht, copies, xi) -> set:
    out = set()
    for c in copies:
        out |= f.copy_vars(c)
    out |= {v for v in free_vars(xi) if v.copy in copies}
    return out


def verify(f: Feht, config: Optional[Config] = None, solver: Optional[Solver] = None) -> Report:
    """Verified when some parametric postcondition makes the final query hold;
    otherwise Inconclusive with the most informative failure."""
    config = config or Config()
    t0 = time.perf_counter()
    solver = solver or Solver(config.solver)
    eng = Engine(solver, config.engine, f.hints)
    ucopies = [p.copy for p in f.universals]
    ecopies = [p.copy for p in f.existentials]
    report = Report(INCONCLUSIVE)
    last = None
    queries = 0
    for pa in genpp(f.pre, f.universals, f.existentials, eng):
        queries += 1
        uvars, evars = _vars_of(f, ucopies, pa.xi), _vars_of(f, ecopies, pa.xi)
        q = final_validity_query(pa.xi, pa.c, f.post, uvars, evars)
        v = solver.check_closed(q)
        last = (pa, q, v)
        if v.sat:
            break
        if queries >= config.max_final_queries:
            break
    report.final_queries = queries
    if last is not None:
        pa, q, v = last
        report.assertion, report.query = pa, q
        report.xi, report.c = str(pa.xi), str(pa.c)
        report.xi_smt, report.c_smt, report.query_smt = to_smt(pa.xi), to_smt(pa.c), to_smt(q)
        report.loops = list(pa.loops)
        if v.sat:
            report.verdict = VERIFIED
        else:
            report.reason = f"final query {v.status}" + (f" ({v.reason})" if v.reason else "")
    if report.verdict != VERIFIED:
        deep = eng.deepest_failure()
        if last is None:
            report.reason = f"{deep[1]}: {deep[2]}" if deep else "no parametric postcondition"
        elif deep and deep[1] in ("budget",):
            report.reason += f"; {deep[2]}"
    report.candidates_tried = eng.candidates_total
    report.candidate_trace = list(eng.candidate_trace)
    report.rule_trace = list(eng.trace)
    report.solver_stats = dict(solver.stats)
    report.wall_time = time.perf_counter() - t0
    return report


# ------------------------------------------------------------------ suite


def _expected(text: str) -> Optional[str]:
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("// expect:"):
            return s.split(":", 1)[1].strip()
    return None


def _run_one(path: Path, config: Config) -> dict:
    from .parser import ParseError, parse_spec
    text = path.read_text(encoding="utf-8")
    row = {"file": str(path), "expected": _expected(text)}
    t0 = time.perf_counter()
    try:
        rep = verify(parse_spec(text), config)
        row.update(verdict=rep.verdict, reason=rep.reason, candidates=rep.candidates_tried)
    except ParseError as e:
        row.update(verdict="error", reason=str(e))
    row["time"] = round(time.perf_counter() - t0, 4)
    row["ok"] = row["verdict"] == (row["expected"] or VERIFIED)
    return row


def run_suite(directory, config: Optional[Config] = None, workers: int = 4) -> dict:
    """Verify every ``.feht`` below ``directory``; files may declare the
    expected verdict with a ``// expect: Verified`` comment."""
    config = config or Config()
    files = sorted(Path(directory).rglob("*.feht"))
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        rows = list(ex.map(lambda p: _run_one(p, config), files))
    return {"schema": SCHEMA, "results": rows, "all_ok": all(r["ok"] for r in rows),
            "total_time": round(sum(r["time"] for r in rows), 4)}


def format_table(suite: dict) -> str:
    rows = suite["results"]
    if not rows:
        return "(no specs)"
    width = max(len(r["file"]) for r in rows)
    lines = [f"{'spec'.ljust(width)}  {'verdict':12}  {'expected':12}  {'time[s]':>8}"]
    for r in rows:
        mark = "" if r["ok"] else "  MISMATCH"
        lines.append(f"{r['file'].ljust(width)}  {r['verdict']:12}  {str(r['expected'] or '-'):12}"
                     f"  {r['time']:8.3f}{mark}")
    return "\n".join(lines)


__all__ = ["Config", "Report", "verify", "run_suite", "format_table", "VERIFIED", "INCONCLUSIVE"]
