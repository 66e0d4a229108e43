"""Counting-based loop alignment with guess-and-check invariant search.

For a group of loops (one per remaining program) and a candidate invariant
with per-copy counters, every round executes body i exactly ``c_i`` times.
Restrictions produced along the way are checked for satisfiability as soon
as they are built, and initiality or simultaneous-termination failures prune
the candidate lattice.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

from .formula import (
    TRUE,
    Implies,
    Iff,
    ParametricAssertion,
    close_forall,
    conj,
    free_vars,
    simplify,
    sym_key,
)
from .lang import (
    And,
    Assign,
    BinOp,
    Cmp,
    IntLit,
    Not,
    QuantifiedProgram,
    Var,
    While,
    bool_vars,
    iter_stmts,
    mod_vars,
    stmt_vars,
)
from .engine import Engine, genpp

INIT, SIM = "init", "sim"
_DEPTH = {"init": 1, "sim": 2, "body": 3, "cont": 3, "ind": 4, "suffix": 5, "existential_only": 1}


class LoopFailure(Exception):
    def __init__(self, kind: str, j: Optional[int] = None):
        self.kind, self.j = kind, j
        super().__init__(self.name)

    @property
    def name(self) -> str:
        return self.kind if self.j is None else f"{self.kind}({self.j})"


@dataclass(frozen=True)
class LoopGroup:
    programs: tuple  # QuantifiedProgram with remaining = Seq(While, Q)
    k: int

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.programs) - self.k

    @property
    def copies(self) -> tuple:
        return tuple(p.copy for p in self.programs)

    def loop(self, i: int) -> While:
        return self.programs[i].remaining.first

    def guard(self, i: int):
        return self.loop(i).cond

    def body(self, i: int):
        return self.loop(i).body

    def suffix(self, i: int):
        return self.programs[i].remaining.second

    @property
    def key(self) -> tuple:
        return tuple((p.copy, self.loop(i)) for i, p in enumerate(self.programs))


def make_group(universals: Sequence[QuantifiedProgram], existentials: Sequence[QuantifiedProgram]):
    progs = tuple(universals) + tuple(existentials)
    for p in progs:
        r = p.remaining
        if not (hasattr(r, "first") and isinstance(r.first, While)):
            raise AssertionError(f"copy {p.copy} is not loop-headed")
    return LoopGroup(progs, len(universals))


@dataclass(frozen=True)
class Candidate:
    atoms: tuple
    counters: tuple
    source: str = "pool"

    @property
    def invariant(self):
        return conj(*self.atoms) if self.atoms else TRUE

    @property
    def bound(self) -> int:
        return max(self.counters)


class CandidateLattice:
    """Atom sets ordered by inclusion with pruned regions."""

    def __init__(self):
        self.stronger_than: list = []  # init failures: supersets are dead
        self.weaker_than: list = []  # sim failures: subsets are dead

    def pruned(self, atoms) -> bool:
        s = frozenset(atoms)
        return any(f <= s for f in self.stronger_than) or any(s <= f for f in self.weaker_than)


def prune(lattice: CandidateLattice, candidate: Candidate, failure: str) -> CandidateLattice:
    s = frozenset(candidate.atoms)
    if failure == INIT:
        lattice.stronger_than.append(s)
    elif failure == SIM:
        lattice.weaker_than.append(s)
    return lattice


# --------------------------------------------------------- atom harvesting


def _constants(stmt) -> set:
    out = set()

    def walk(t):
        if isinstance(t, BinOp):
            if t.op == "*":
                for side in (t.lhs, t.rhs):
                    if isinstance(side, IntLit) and abs(side.value) >= 2:
                        out.add(abs(side.value))
            walk(t.lhs)
            walk(t.rhs)

    for s in iter_stmts(stmt):
        if isinstance(s, Assign):
            walk(s.expr)
    return out


def _guard_atoms(b):
    if isinstance(b, Cmp):
        yield b
    elif hasattr(b, "args"):
        for a in b.args:
            yield from _guard_atoms(a)
    elif isinstance(b, Not):
        yield from _guard_atoms(b.arg)


_RELAX = {">": ">=", "<": "<="}


def atom_pool(phi, group: LoopGroup) -> list:
    """Ordered, duplicate-free list of candidate invariant atoms."""
    out, seen = [], set()

    def add(a):
        key = simplify(a)
        if key not in seen and not isinstance(key, type(TRUE)):
            seen.add(key)
            out.append(a)

    per_copy = {}
    for p in group.programs:
        vs = stmt_vars(p.remaining) | {v for v in free_vars(phi) if v.copy == p.copy}
        per_copy[p.copy] = sorted(vs, key=sym_key)
    # (a) same-named variables across copies
    copies = group.copies
    for i, j in itertools.combinations(copies, 2):
        bases_j = {v.base: v for v in per_copy[j]}
        for v in per_copy[i]:
            if v.base in bases_j:
                add(Cmp("==", Var(v), Var(bases_j[v.base])))
    # (b) relations between guard variables, and relaxed guards
    gvars = []
    for i in range(len(group.programs)):
        for v in sorted(bool_vars(group.guard(i)), key=sym_key):
            if v not in gvars:
                gvars.append(v)
    for u, v in itertools.combinations(gvars, 2):
        for op in ("==", "<=", ">="):
            add(Cmp(op, Var(u), Var(v)))
    for i in range(len(group.programs)):
        for a in _guard_atoms(group.guard(i)):
            if a.op in _RELAX:
                add(Cmp(_RELAX[a.op], a.lhs, a.rhs))
    # (c) linear scalings harvested from the program text
    mults = {2, 3}
    for p in group.programs:
        mults |= _constants(p.remaining)
    rel = list(gvars)
    for p in group.programs:
        for v in sorted(mod_vars(group.body(group.programs.index(p))), key=sym_key):
            if v not in rel:
                rel.append(v)
    for v, w in itertools.permutations(rel, 2):
        for m in sorted(mults):
            for r in (0, -1, 1):
                rhs = BinOp("*", IntLit(m), Var(w))
                if r:
                    rhs = BinOp("+", rhs, IntLit(r))
                add(Cmp("==", Var(v), rhs))
    return out


def _counter_tuples(n: int, max_unroll: int):
    yield (1,) * n
    seen = {(1,) * n}
    for top in range(2, max_unroll + 1):
        for t in itertools.product(range(1, top + 1), repeat=n):
            if t not in seen and top in t:
                seen.add(t)
                yield t


def guess_invariants_and_counts(phi, group: LoopGroup, hints, config, eng: Optional[Engine] = None,
                                lattice: Optional[CandidateLattice] = None,
                                group_index: int = 0) -> Iterator[Candidate]:
    """Candidate stream: hints first, then pool conjunctions by size, with the
    synchronous counter tuple before asynchronous ones."""
    lattice = lattice if lattice is not None else CandidateLattice()
    n = len(group.programs)
    max_unroll = config.max_unroll
    if hints is not None and hints.invariants:
        inv = hints.invariants[group_index] if group_index < len(hints.invariants) else hints.invariants[-1]
        atoms = tuple(inv.args) if isinstance(inv, And) else (inv,)
        if hints.counters is not None:
            cs = [tuple(hints.counters[c - 1] for c in group.copies)]
        else:
            cs = list(_counter_tuples(n, max(max_unroll, hints.unroll or 1)))
        for c in cs:
            yield Candidate(atoms, c, "hint")
    atoms = atom_pool(phi, group)
    if eng is not None and eng.solver is not None:
        atoms = [a for a in atoms if _initial(phi, a, eng)]
    for c in _counter_tuples(n, max_unroll):
        for size in range(1, min(3, len(atoms)) + 1):
            for combo in itertools.combinations(atoms, size):
                if lattice.pruned(combo):
                    continue
                yield Candidate(tuple(combo), c, "pool")


def _initial(phi, atom, eng: Engine) -> bool:
    # singleton probe of the lattice: an atom not implied by phi can never
    # be part of an initial conjunction
    v = eng.solver.check_restriction_sat(close_forall(Implies(phi, atom)))
    return not v.unsat


# ------------------------------------------------------------- the rule


def _check(eng: Engine, parts, kind: str, j: Optional[int] = None):
    if not eng.config.eager or eng.solver is None:
        return
    v = eng.solver.check_restriction_sat(conj(*[f for _, f in parts]))
    if v.unsat:
        raise LoopFailure(kind, j)


def genpp_loops(phi, group: LoopGroup, cand: Candidate, eng: Engine) -> Iterator[ParametricAssertion]:
    """Counting rule for one candidate. Raises LoopFailure when no parametric
    postcondition survives the eager checks."""
    if group.k == 0:
        raise LoopFailure("existential_only")
    inv, cs = cand.invariant, cand.counters
    B = max(cs)
    n = len(group.programs)
    c_init = close_forall(Implies(phi, inv))
    _check(eng, [(INIT, c_init)], INIT)
    b1 = group.guard(0)
    c_sim = close_forall(Implies(inv, conj(*[Iff(b1, group.guard(i)) for i in range(1, n)])))
    _check(eng, [(SIM, c_sim)], SIM)
    deepest: List[LoopFailure] = []

    def rounds(j, xi, body_parts, cont_parts, loops):
        if j > B:
            yield xi, body_parts, cont_parts, loops
            return
        active = [i for i in range(n) if cs[i] >= j]
        pre = eng.norm(conj(xi, *[group.guard(i) for i in active]))
        us = [group.programs[i].advance(group.body(i)) for i in active if i < group.k]
        es = [group.programs[i].advance(group.body(i)) for i in active if i >= group.k]
        later = [group.guard(i) for i in range(n) if cs[i] > j]
        for pa in genpp(pre, us, es, eng):
            cont = close_forall(Implies(pa.xi, conj(*later)))
            bp = body_parts + [(f"body({j + 1})", pa.c)]
            cp = cont_parts + [(f"cont({j + 1})", cont)]
            try:
                _check(eng, [(INIT, c_init), (SIM, c_sim)] + bp, "body", j + 1)
                _check(eng, [(INIT, c_init), (SIM, c_sim)] + bp + cp, "cont", j + 1)
            except LoopFailure as e:
                deepest.append(e)
                continue
            yield from rounds(j + 1, pa.xi, bp, cp, loops + pa.loops)

    produced = False
    for xi_b, body_parts, cont_parts, inner_loops in rounds(1, inv, [], [], ()):
        c_ind = close_forall(Implies(xi_b, inv))
        head = [(INIT, c_init), (SIM, c_sim)] + body_parts + cont_parts
        try:
            _check(eng, head + [("ind", c_ind)], "ind")
        except LoopFailure as e:
            deepest.append(e)
            continue
        exit_pre = eng.norm(conj(inv, *[Not(group.guard(i)) for i in range(n)]))
        us = [group.programs[i].advance(group.suffix(i)) for i in range(group.k)]
        es = [group.programs[i].advance(group.suffix(i)) for i in range(group.k, n)]
        for rem in genpp(exit_pre, us, es, eng):
            parts = tuple(head + [("ind", c_ind), ("rem", rem.c)])
            try:
                _check(eng, list(parts), "suffix")
            except LoopFailure as e:
                deepest.append(e)
                continue
            produced = True
            c = conj(*[f for _, f in parts])
            mine = ((eng.groups.get(group.key, 0), str(inv), cs),)
            yield ParametricAssertion(rem.xi, c, parts, inner_loops + mine + rem.loops)
    if not produced:
        if deepest:
            raise max(deepest, key=lambda e: (_DEPTH[e.kind], e.j or 0))
        raise LoopFailure("suffix")


def _zero_iterations(phi, group: LoopGroup, eng: Engine):
    """Only existential loops remain: permitted only if none can start."""
    n = len(group.programs)
    exit_all = conj(*[Not(group.guard(i)) for i in range(n)])
    c_zero = close_forall(Implies(phi, exit_all))
    _check(eng, [("zero", c_zero)], "existential_only")
    es = [group.programs[i].advance(group.suffix(i)) for i in range(n)]
    produced = False
    for rem in genpp(eng.norm(conj(phi, exit_all)), [], es, eng):
        produced = True
        yield ParametricAssertion(rem.xi, conj(c_zero, rem.c), (("zero", c_zero), ("rem", rem.c)),
                                  rem.loops)
    if not produced:
        raise LoopFailure("existential_only")


def genpp_loops_search(phi, universals, existentials, eng: Engine) -> Iterator[ParametricAssertion]:
    """Try candidates in stream order, yielding every surviving result."""
    group = make_group(universals, existentials)
    gi = eng.groups.setdefault(group.key, len(eng.groups))
    if group.k == 0:
        try:
            yield from _zero_iterations(phi, group, eng)
        except LoopFailure as e:
            eng.fail(e.name, f"loop group {gi}", _DEPTH[e.kind])
            eng.candidate_trace.append((gi, "zero", "", (), e.name))
        return
    lattice = CandidateLattice()
    budget = eng.config.candidate_budget
    tried = 0
    for cand in guess_invariants_and_counts(phi, group, eng.hints, eng.config, eng, lattice, gi):
        if cand.source == "pool" and lattice.pruned(cand.atoms):
            continue
        if tried >= budget or eng.candidates_total >= budget * 8:
            eng.fail("budget", f"loop group {gi}: candidate budget exhausted", 0)
            return
        tried += 1
        eng.candidates_total += 1
        outcome = "ok"
        try:
            for pa in genpp_loops(phi, group, cand, eng):
                eng.candidate_trace.append((gi, cand.source, str(cand.invariant), cand.counters, "ok"))
                yield pa
            outcome = "exhausted"
        except LoopFailure as e:
            outcome = e.name
            if e.kind in (INIT, SIM):
                prune(lattice, cand, e.kind)
            eng.fail(e.name, f"loop group {gi}: {cand.invariant} with counters {cand.counters}",
                     _DEPTH[e.kind])
        eng.candidate_trace.append((gi, cand.source, str(cand.invariant), cand.counters, outcome))
    eng.fail("no-candidate", f"loop group {gi}: candidate pool exhausted", 0)


__all__ = ["LoopGroup", "Candidate", "CandidateLattice", "LoopFailure", "genpp_loops",
           "guess_invariants_and_counts", "prune", "atom_pool", "make_group", "genpp_loops_search"]
