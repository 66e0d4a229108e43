"""SMT-LIB2 emission and a one-shot subprocess solver driver.

Symbol mangling (bit-exact):

* program variable ``x`` of copy ``i``       -> ``x_i``
* copy-less variable ``x``                   -> ``x``
* bound renaming number ``n`` of ``x_i``     -> ``x_i.n``
* parameter number ``n``                     -> ``mu_n``
* any variable name that starts with ``mu_`` or ``v_`` or is an SMT-LIB
  reserved word or builtin gets the prefix ``v_``

Every query is a fresh solver process fed the complete script on stdin.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .formula import (
    Exists,
    Forall,
    Iff,
    Implies,
    Param,
    close_forall,
    conj,
    free_params,
    free_symbols,
    free_vars,
    linearize,
    simplify,
    sym_key,
)
from .lang import And, BinOp, BoolConst, Cmp, IntLit, Not, Or, Var

SAT = "Sat"
UNSAT = "Unsat"
UNKNOWN = "Unknown"

_RESERVED = {
    "!", "_", "as", "let", "exists", "forall", "match", "par", "true", "false", "not",
    "and", "or", "xor", "ite", "distinct", "div", "mod", "abs", "to_real", "to_int",
    "is_int", "Int", "Bool", "Real", "NUMERAL", "DECIMAL", "STRING", "BINARY",
    "HEXADECIMAL", "assert", "check-sat", "push", "pop", "select", "store",
}


class SolverError(RuntimeError):
    """Problem with the solver environment (not a verification outcome)."""


class SolverNotFound(SolverError):
    pass


class SolverCrash(SolverError):
    pass


class SolverOutputError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    path: Optional[str] = None
    timeout_ms: int = 10_000
    logic: Optional[str] = None
    dump_dir: Optional[str] = None
    simplify: bool = True

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("solver timeout must be positive")


@dataclass
class SolverVerdict:
    status: str
    wall_time: float = 0.0
    raw: str = ""
    reason: Optional[str] = None
    model: dict = field(default_factory=dict)
    query: str = ""

    @property
    def sat(self) -> bool:
        return self.status == SAT

    @property
    def unsat(self) -> bool:
        return self.status == UNSAT

    def __str__(self):
        return self.status if not self.reason else f"{self.status} ({self.reason})"


# ------------------------------------------------------------ emission


def mangle(sym) -> str:
    if isinstance(sym, Param):
        return f"mu_{sym.id}"
    name = sym.base if sym.copy is None else f"{sym.base}_{sym.copy}"
    if name.startswith(("mu_", "v_")) or name in _RESERVED:
        name = "v_" + name
    if sym.fresh:
        name = f"{name}.{sym.fresh}"
    return name


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def term_to_smt(t) -> str:
    if isinstance(t, IntLit):
        return _int(t.value)
    if isinstance(t, Var):
        return mangle(t.name)
    if isinstance(t, Param):
        return mangle(t)
    if isinstance(t, BinOp):
        return f"({t.op} {term_to_smt(t.lhs)} {term_to_smt(t.rhs)})"
    raise TypeError(f"not a term: {t!r}")


_SMT_CMP = {"==": "=", "!=": "distinct", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def to_smt(f) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        return f"({_SMT_CMP[f.op]} {term_to_smt(f.lhs)} {term_to_smt(f.rhs)})"
    if isinstance(f, Not):
        return f"(not {to_smt(f.arg)})"
    if isinstance(f, And):
        if not f.args:
            return "true"
        return to_smt(f.args[0]) if len(f.args) == 1 else f"(and {' '.join(map(to_smt, f.args))})"
    if isinstance(f, Or):
        if not f.args:
            return "false"
        return to_smt(f.args[0]) if len(f.args) == 1 else f"(or {' '.join(map(to_smt, f.args))})"
    if isinstance(f, Implies):
        return f"(=> {to_smt(f.lhs)} {to_smt(f.rhs)})"
    if isinstance(f, Iff):
        return f"(= {to_smt(f.lhs)} {to_smt(f.rhs)})"
    if isinstance(f, (Exists, Forall)):
        if not f.vars:
            return to_smt(f.body)
        q = "exists" if isinstance(f, Exists) else "forall"
        binds = " ".join(f"({mangle(v)} Int)" for v in f.vars)
        return f"({q} ({binds}) {to_smt(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def _has_quantifier(f) -> bool:
    if isinstance(f, (Exists, Forall)):
        return True
    if isinstance(f, Not):
        return _has_quantifier(f.arg)
    if isinstance(f, (And, Or)):
        return any(_has_quantifier(a) for a in f.args)
    if isinstance(f, (Implies, Iff)):
        return _has_quantifier(f.lhs) or _has_quantifier(f.rhs)
    return False


def _term_nonlinear(t) -> bool:
    return isinstance(t, BinOp) and linearize(t) is None


def is_nonlinear(f) -> bool:
    if isinstance(f, Cmp):
        return _term_nonlinear(f.lhs) or _term_nonlinear(f.rhs)
    if isinstance(f, Not):
        return is_nonlinear(f.arg)
    if isinstance(f, (And, Or)):
        return any(is_nonlinear(a) for a in f.args)
    if isinstance(f, (Implies, Iff)):
        return is_nonlinear(f.lhs) or is_nonlinear(f.rhs)
    if isinstance(f, (Exists, Forall)):
        return is_nonlinear(f.body)
    return False


def choose_logic(f) -> str:
    base = "NIA" if is_nonlinear(f) else "LIA"
    return base if _has_quantifier(f) else "QF_" + base


def build_script(f, consts: Iterable = (), timeout_ms: int = 10_000, logic: Optional[str] = None,
                 want_model: bool = False) -> str:
    lines = [f"(set-option :timeout {timeout_ms})"]
    if want_model:
        lines.append("(set-option :produce-models true)")
    logic = logic or choose_logic(f)
    lines.append(f"(set-logic {logic})")
    for s in sorted(consts, key=sym_key):
        lines.append(f"(declare-const {mangle(s)} Int)")
    lines.append(f"(assert {to_smt(f)})")
    if logic == "LIA" and not want_model:
        # quantifier elimination decides alternating linear sentences fast;
        # fall back to the default strategy if it stalls
        lines.append(f"(check-sat-using (or-else (try-for (then qe smt) {max(1, timeout_ms // 2)}) smt))")
    else:
        lines.append("(check-sat)")
    lines.append("(get-info :reason-unknown)")
    if want_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ final query


def final_validity_query(xi, c, psi, universal_vars, existential_vars, params=None):
    """forall U. exists P. c & forall E. (xi ==> psi)"""
    uvars, evars = set(universal_vars), set(existential_vars)
    params = set(params) if params is not None else free_params(xi) | free_params(c)
    for name, f, allowed in (("function-formula", xi, uvars | evars | params),
                             ("restriction-formula", c, params),
                             ("postcondition", psi, uvars | evars)):
        stray = free_symbols(f) - allowed
        if stray:
            names = ", ".join(str(s) for s in sorted(stray, key=sym_key))
            raise ValueError(f"unhoused free symbol(s) in {name}: {names}")

    def srt(vs):
        return tuple(sorted(vs, key=sym_key))

    body = Implies(xi, psi)
    if evars:
        body = Forall(srt(evars), body)
    body = conj(c, body)
    if params:
        body = Exists(srt(params), body)
    if uvars:
        body = Forall(srt(uvars), body)
    return body


# -------------------------------------------------------------- driver

_MODEL_RE = re.compile(r"\(define-fun\s+(\S+)\s+\(\)\s+Int\s+(\(\s*-\s*\d+\s*\)|-?\d+)\s*\)")


def resolve_solver(path: Optional[str]) -> str:
    cand = path or os.environ.get("FOREX_SOLVER") or "z3"
    found = shutil.which(cand)
    if found is None:
        raise SolverNotFound(f"solver executable not found: {cand}")
    return found


class Solver:
    """Answers satisfiability questions by spawning the solver once per query."""

    def __init__(self, config: Optional[SolverConfig] = None):
        self.config = config or SolverConfig()
        self.executable = resolve_solver(self.config.path)
        self._lock = threading.Lock()
        self._cache: dict = {}
        self._seq = 0
        self.stats = {"queries": 0, "cache_hits": 0, "sat": 0, "unsat": 0, "unknown": 0,
                      "solver_time": 0.0}

    # -- plumbing

    def _next_seq(self) -> int:
        with self._lock:
            self._seq += 1
            return self._seq

    def _dump(self, seq: int, script: str):
        if self.config.dump_dir:
            d = Path(self.config.dump_dir)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"query_{seq}.smt2").write_text(script)

    def _prep(self, f):
        return simplify(f) if self.config.simplify else f

    def run_script(self, script: str, names: Optional[dict] = None) -> SolverVerdict:
        seq = self._next_seq()
        self._dump(seq, script)
        with self._lock:
            cached = self._cache.get(script)
            self.stats["queries"] += 1
            if cached is not None:
                self.stats["cache_hits"] += 1
        if cached is not None:
            return cached
        t0 = time.perf_counter()
        limit = self.config.timeout_ms / 1000 + 5
        try:
            proc = subprocess.run([self.executable, "-in", "-smt2"], input=script,
                                  capture_output=True, text=True, timeout=limit)
        except FileNotFoundError as e:
            raise SolverNotFound(str(e)) from None
        except subprocess.TimeoutExpired:
            v = SolverVerdict(UNKNOWN, time.perf_counter() - t0, "", "timeout", query=script)
            self._record(script, v)
            return v
        wall = time.perf_counter() - t0
        v = self._parse(proc, script, wall, names or {})
        self._record(script, v)
        return v

    def _record(self, script, v):
        with self._lock:
            self._cache[script] = v
            self.stats[v.status.lower()] += 1
            self.stats["solver_time"] += v.wall_time

    def _parse(self, proc, script, wall, names) -> SolverVerdict:
        out = proc.stdout
        lines = [ln.strip() for ln in out.splitlines() if ln.strip()]
        if not lines:
            if proc.returncode != 0:
                raise SolverCrash(f"solver exited with code {proc.returncode}: {proc.stderr.strip()}")
            raise SolverOutputError("solver produced no output")
        head = lines[0]
        if head.startswith("(error"):
            raise SolverOutputError(f"solver rejected query: {head}")
        status = {"sat": SAT, "unsat": UNSAT, "unknown": UNKNOWN, "timeout": UNKNOWN}.get(head)
        if status is None:
            raise SolverOutputError(f"unexpected solver output: {head}")
        reason = None
        m = re.search(r'\(:reason-unknown\s+"([^"]*)"\)', out)
        if m and m.group(1):
            reason = m.group(1)
        if head == "timeout":
            reason = reason or "timeout"
        for ln in lines[1:]:
            # only a missing model after unsat/unknown is acceptable
            if ln.startswith("(error") and not (status != SAT and "model is not available" in ln):
                raise SolverOutputError(f"solver error: {ln}")
        model = {}
        if status == SAT:
            for name, val in _MODEL_RE.findall(out):
                val = val.replace("(", "").replace(")", "").replace(" ", "")
                model[names.get(name, name)] = int(val)
        return SolverVerdict(status, wall, out, reason if status == UNKNOWN else None, model, script)

    # -- queries

    def check_closed(self, f) -> SolverVerdict:
        if free_symbols(f):
            names = ", ".join(str(s) for s in sorted(free_symbols(f), key=sym_key))
            raise ValueError(f"formula is not closed: {names}")
        f = self._prep(f)
        return self.run_script(build_script(f, (), self.config.timeout_ms, self.config.logic))

    def check_sat(self, f, want_model: bool = False) -> SolverVerdict:
        """Satisfiability of ``f`` with its free symbols as constants."""
        consts = free_symbols(f)
        f = self._prep(f)
        names = {mangle(s): s for s in consts}
        return self.run_script(build_script(f, consts, self.config.timeout_ms, self.config.logic,
                                            want_model), names)

    def check_restriction_sat(self, c) -> SolverVerdict:
        stray = free_vars(c)
        if stray:
            raise ValueError(f"restriction has free program variables: {sorted(map(str, stray))}")
        return self.check_sat(c)

    def check_valid(self, f) -> SolverVerdict:
        """Sat means ``f`` holds for every value of its free symbols."""
        return self.check_closed(_close_all(f))

    def check_equiv(self, a, b, universe: Iterable = ()) -> SolverVerdict:
        """Verdict on the negated equivalence; Unsat means equivalent and Sat
        carries a distinguishing model."""
        consts = set(universe) | free_symbols(a) | free_symbols(b)
        f = Not(Iff(a, b))
        f2 = self._prep(f)
        names = {mangle(s): s for s in consts}
        return self.run_script(build_script(f2, consts, self.config.timeout_ms, self.config.logic,
                                            want_model=True), names)

    def equivalent(self, a, b) -> bool:
        v = self.check_equiv(a, b)
        return v.unsat


def _close_all(f):
    syms = tuple(sorted(free_symbols(f), key=sym_key))
    return Forall(syms, f) if syms else f


__all__ = [
    "SAT", "UNSAT", "UNKNOWN", "Solver", "SolverConfig", "SolverVerdict", "SolverError",
    "SolverNotFound", "SolverCrash", "SolverOutputError", "final_validity_query", "to_smt",
    "term_to_smt", "mangle", "choose_logic", "build_script", "resolve_solver", "close_forall",
]
