"""Parametric postcondition generation for program tuples.

``genpp`` symbolically executes universal programs first and existential
programs afterwards. Existential nondeterminism becomes a fresh parameter,
existential assumptions become restrictions on parameters. When every
remaining program starts with a loop, the loop engine takes over.

All entry points are generators: loop-free input yields exactly one result,
loops yield one result per invariant candidate that survives its checks, so
callers can ask for the next candidate when a final query fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

from .formula import (
    TRUE,
    Exists,
    ParametricAssertion,
    Implies,
    ParamPool,
    all_symbols,
    close_forall,
    conj,
    disj,
    simplify,
    subst,
    subst_term,
    _fresh_like,
)
from .lang import (
    And,
    Assign,
    Assume,
    Cmp,
    Havoc,
    If,
    Not,
    QuantifiedProgram,
    Seq,
    Skip,
    Var,
    While,
    normalize_head,
    term_vars,
)


class AnalysisFailure(Exception):
    """No parametric postcondition could be produced along any path."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason, self.detail = reason, detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class EngineConfig:
    max_unroll: int = 2
    candidate_budget: int = 500
    simplify: bool = True
    eager: bool = True


@dataclass
class Engine:
    """Per-run state: parameter pool, solver, hints and traces."""

    solver: object = None
    config: EngineConfig = field(default_factory=EngineConfig)
    hints: object = None
    pool: ParamPool = field(default_factory=ParamPool)
    trace: list = field(default_factory=list)
    candidate_trace: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    groups: dict = field(default_factory=dict)
    candidates_total: int = 0

    def norm(self, f):
        return simplify(f) if self.config.simplify else f

    def log(self, rule: str, copy: Optional[int], pending: bool):
        self.trace.append((rule, copy, pending))

    def fail(self, reason: str, detail: str = "", depth: int = 0):
        self.failures.append((depth, reason, detail))

    def deepest_failure(self):
        if not self.failures:
            return None
        return max(self.failures, key=lambda t: t[0])


# ------------------------------------------------------------ rule steps


def sp_assign(phi, x, e):
    """exists x'. phi[x'/x] & x = e[x'/x] with x' fresh."""
    xp = _fresh_like(x, all_symbols(phi) | term_vars(e) | {x})
    xt = Var(xp)
    return Exists((xp,), conj(subst(phi, {x: xt}), Cmp("==", Var(x), subst_term(e, {x: xt}))))


def step_universal_nondet(phi, x):
    return Exists((x,), phi)


def step_existential_nondet(phi, x, pool: ParamPool, origin: str = "exists-havoc"):
    mu = pool.fresh(origin)
    return conj(Exists((x,), phi), Cmp("==", Var(x), mu)), mu


def restrict_assume(phi, b):
    """forall vars. (phi ==> b): a formula over parameters only."""
    return close_forall(Implies(phi, b))


def join_branches(left: ParametricAssertion, right: ParametricAssertion) -> ParametricAssertion:
    return ParametricAssertion(disj(left.xi, right.xi), conj(left.c, right.c),
                               loops=left.loops + right.loops)


# ------------------------------------------------------------ dispatch


class _Replay:
    """Caches a generator so it can be iterated repeatedly."""

    def __init__(self, gen):
        self._gen, self._items, self._done = gen, [], False

    def __iter__(self):
        i = 0
        while True:
            if i < len(self._items):
                yield self._items[i]
                i += 1
                continue
            if self._done:
                return
            try:
                self._items.append(next(self._gen))
            except StopIteration:
                self._done = True


def _prepare(progs: Sequence[QuantifiedProgram]) -> List[QuantifiedProgram]:
    out = []
    for p in progs:
        r = normalize_head(p.remaining)
        if not isinstance(r, Skip):
            out.append(p.advance(r))
    return out


def _head(p: QuantifiedProgram):
    return p.remaining.first


def genpp(phi, universals: Sequence[QuantifiedProgram], existentials: Sequence[QuantifiedProgram],
          eng: Engine) -> Iterator[ParametricAssertion]:
    """Stream of parametric postconditions for (phi, universals, existentials)."""
    us, es = _prepare(universals), _prepare(existentials)
    if not us and not es:
        eng.log("done", None, False)
        yield ParametricAssertion(phi, TRUE)
        return
    if all(isinstance(_head(p), While) for p in us + es):
        from .loops import genpp_loops_search
        eng.log("loops", None, False)
        yield from genpp_loops_search(phi, us, es, eng)
        return
    pending = any(not isinstance(_head(p), While) for p in us)
    if pending:
        # rotate While-headed programs to the back until a steppable one leads
        while isinstance(_head(us[0]), While):
            eng.log("reorder", us[0].copy, True)
            us = us[1:] + us[:1]
        yield from _step(phi, us, es, True, eng)
    else:
        while isinstance(_head(es[0]), While):
            eng.log("reorder", es[0].copy, False)
            es = es[1:] + es[:1]
        yield from _step(phi, us, es, False, eng)


def _step(phi, us, es, universal: bool, eng: Engine):
    lst = us if universal else es
    p, rest_list = lst[0], lst[1:]
    h, tail = _head(p), p.remaining.second
    # recorded so the trace can show universals always go first
    pending = any(not isinstance(_head(q), While) for q in us)

    def go(new_phi, new_remaining):
        moved = p.advance(new_remaining)
        lst2 = [moved] + list(rest_list)
        if universal:
            return genpp(new_phi, lst2, es, eng)
        return genpp(new_phi, us, lst2, eng)

    if isinstance(h, Skip):
        eng.log("skip", p.copy, pending)
        yield from go(phi, tail)
    elif isinstance(h, Assign):
        eng.log("assign", p.copy, pending)
        yield from go(eng.norm(sp_assign(phi, h.target, h.expr)), tail)
    elif isinstance(h, Havoc):
        if universal:
            eng.log("havoc-forall", p.copy, pending)
            yield from go(eng.norm(step_universal_nondet(phi, h.target)), tail)
        else:
            eng.log("havoc-exists", p.copy, pending)
            new, _ = step_existential_nondet(phi, h.target, eng.pool, f"exists-havoc@{p.copy}")
            yield from go(eng.norm(new), tail)
    elif isinstance(h, Assume):
        if universal:
            eng.log("assume-forall", p.copy, pending)
            yield from go(eng.norm(conj(phi, h.cond)), tail)
        else:
            eng.log("assume-exists", p.copy, pending)
            c_assume = eng.norm(restrict_assume(phi, h.cond))
            for pa in go(eng.norm(conj(phi, h.cond)), tail):
                yield ParametricAssertion(pa.xi, conj(pa.c, c_assume), loops=pa.loops)
    elif isinstance(h, If):
        eng.log("if", p.copy, pending)
        left = go(eng.norm(conj(phi, h.cond)), Seq(h.then, tail))
        right = _Replay(go(eng.norm(conj(phi, Not(h.cond))), Seq(h.orelse, tail)))
        for a in left:
            for b in right:
                yield join_branches(a, b)
    else:
        raise AssertionError(f"unexpected head {h!r}")


# ------------------------------------------------------ classic sp oracle


def classic_sp(phi, programs: Sequence[QuantifiedProgram]):
    """Strongest postcondition by direct structural recursion, one program
    after another. Loop-free programs only; no parameters involved."""
    for p in programs:
        phi = _sp(phi, p.body)
    return phi


def _sp(phi, s):
    if isinstance(s, Skip):
        return phi
    if isinstance(s, Assign):
        return sp_assign(phi, s.target, s.expr)
    if isinstance(s, Havoc):
        return Exists((s.target,), phi)
    if isinstance(s, Assume):
        return And((phi, s.cond))
    if isinstance(s, Seq):
        return _sp(_sp(phi, s.first), s.second)
    if isinstance(s, If):
        return disj(_sp(And((phi, s.cond)), s.then), _sp(And((phi, Not(s.cond))), s.orelse))
    raise ValueError("classic_sp handles loop-free programs only")


def genpp_first(phi, universals, existentials, eng: Optional[Engine] = None) -> ParametricAssertion:
    """First parametric postcondition of the stream (the only one for
    loop-free input)."""
    eng = eng or Engine()
    for pa in genpp(phi, universals, existentials, eng):
        return pa
    d = eng.deepest_failure()
    raise AnalysisFailure(d[1] if d else "no-candidate", d[2] if d else "")


__all__ = ["Engine", "EngineConfig", "AnalysisFailure", "genpp", "genpp_first", "sp_assign",
           "step_universal_nondet", "step_existential_nondet", "restrict_assume",
           "join_branches", "classic_sp"]
