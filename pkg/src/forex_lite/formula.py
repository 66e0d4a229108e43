"""First-order formulas over indexed variables and parameters.

Quantifier-free connectives are shared with program conditions (see lang), so
every program guard is already a formula. Constructors here never simplify;
``simplify`` is a separate, semantics-preserving pass.
"""

from __future__ import annotations

import itertools
import operator
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .lang import (
    CMP_OPS,
    FALSE,
    NEGATED_CMP,
    TRUE,
    And,
    BinOp,
    BoolConst,
    Cmp,
    IntLit,
    Not,
    Or,
    StructureError,
    Var,
    VarName,
)

__all__ = [
    "Param", "ParamPool", "Implies", "Iff", "Exists", "Forall", "ParametricAssertion",
    "TRUE", "FALSE", "conj", "disj", "implies", "iff", "neg", "exists", "forall",
    "free_symbols", "free_vars", "free_params", "substitute", "subst", "instantiate_params",
    "evaluate", "eval_formula", "simplify", "EvalError", "sym_key", "is_closed",
]


class EvalError(ValueError):
    """A formula mentions a symbol with no value."""


@dataclass(frozen=True)
class Param:
    id: int
    # provenance (which rule minted it); ignored by equality
    origin: str = field(default="", compare=False, hash=False)

    def __str__(self):
        return f"mu_{self.id}"

    def __repr__(self):
        return f"Param({self.id})"


class ParamPool:
    """Mints parameters mu_1, mu_2, ... for one verification run."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)
        self._lock = threading.Lock()
        self.minted: list = []

    def fresh(self, origin: str = "") -> Param:
        with self._lock:
            p = Param(next(self._counter), origin)
            self.minted.append(p)
        return p


def fresh_param(pool: ParamPool, origin: str = "") -> Param:
    return pool.fresh(origin)


Symbol = Union[VarName, Param]


def sym_key(s) -> tuple:
    if isinstance(s, Param):
        return (1, "", s.id, 0)
    return (0, s.base, s.copy or 0, s.fresh)


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object

    def __str__(self):
        return f"({self.lhs}) ==> ({self.rhs})"


@dataclass(frozen=True)
class Iff:
    lhs: object
    rhs: object

    def __str__(self):
        return f"({self.lhs}) <==> ({self.rhs})"


@dataclass(frozen=True)
class Exists:
    vars: tuple
    body: object

    def __str__(self):
        return f"exists {', '.join(map(str, self.vars))}. ({self.body})"


@dataclass(frozen=True)
class Forall:
    vars: tuple
    body: object

    def __str__(self):
        return f"forall {', '.join(map(str, self.vars))}. ({self.body})"


Formula = Union[BoolConst, Cmp, Not, And, Or, Implies, Iff, Exists, Forall]
Quant = (Exists, Forall)


# ------------------------------------------------------------ builders


def conj(*fs) -> Formula:
    fs = tuple(fs)
    if not fs:
        return TRUE
    return fs[0] if len(fs) == 1 else And(fs)


def disj(*fs) -> Formula:
    fs = tuple(fs)
    if not fs:
        return FALSE
    return fs[0] if len(fs) == 1 else Or(fs)


def neg(f) -> Formula:
    return Not(f)


def implies(a, b) -> Formula:
    return Implies(a, b)


def iff(a, b) -> Formula:
    return Iff(a, b)


def _sorted_syms(vs: Iterable) -> tuple:
    return tuple(sorted(set(vs), key=sym_key))


def exists(vs: Iterable, body) -> Formula:
    vs = _sorted_syms(vs)
    return Exists(vs, body) if vs else body


def forall(vs: Iterable, body) -> Formula:
    vs = _sorted_syms(vs)
    return Forall(vs, body) if vs else body


def close_forall(f) -> Formula:
    """Universally close every free program variable of ``f``."""
    return forall(free_vars(f), f)


# ---------------------------------------------------------- symbols


def term_symbols(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Param):
        return {t}
    if isinstance(t, BinOp):
        return term_symbols(t.lhs) | term_symbols(t.rhs)
    return set()


def free_symbols(f) -> set:
    if isinstance(f, Cmp):
        return term_symbols(f.lhs) | term_symbols(f.rhs)
    if isinstance(f, BoolConst):
        return set()
    if isinstance(f, Not):
        return free_symbols(f.arg)
    if isinstance(f, (And, Or)):
        out = set()
        for a in f.args:
            out |= free_symbols(a)
        return out
    if isinstance(f, (Implies, Iff)):
        return free_symbols(f.lhs) | free_symbols(f.rhs)
    if isinstance(f, Quant):
        return free_symbols(f.body) - set(f.vars)
    raise TypeError(f"not a formula: {f!r}")


def all_symbols(f) -> set:
    """Free and bound symbols."""
    if isinstance(f, Quant):
        return all_symbols(f.body) | set(f.vars)
    if isinstance(f, Not):
        return all_symbols(f.arg)
    if isinstance(f, (And, Or)):
        out = set()
        for a in f.args:
            out |= all_symbols(a)
        return out
    if isinstance(f, (Implies, Iff)):
        return all_symbols(f.lhs) | all_symbols(f.rhs)
    return free_symbols(f)


def free_vars(f) -> set:
    return {s for s in free_symbols(f) if isinstance(s, VarName)}


def free_params(f) -> set:
    return {s for s in free_symbols(f) if isinstance(s, Param)}


def is_closed(f) -> bool:
    return not free_symbols(f)


# ------------------------------------------------------- substitution


def _sym_term(s):
    return s if isinstance(s, Param) else Var(s)


def subst_term(t, mapping: Mapping):
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Param):
        return mapping.get(t, t)
    if isinstance(t, BinOp):
        return BinOp(t.op, subst_term(t.lhs, mapping), subst_term(t.rhs, mapping))
    return t


def _fresh_like(s, avoid: set):
    if isinstance(s, Param):
        top = max([p.id for p in avoid if isinstance(p, Param)] + [s.id])
        return Param(top + 1, "bound")
    n = max([v.fresh for v in avoid if isinstance(v, VarName) and v.base == s.base
             and v.copy == s.copy] + [s.fresh])
    return VarName(s.base, s.copy, n + 1)


def subst(f, mapping: Mapping) -> Formula:
    """Capture-avoiding simultaneous substitution of terms for symbols."""
    if not mapping:
        return f
    if isinstance(f, Cmp):
        return Cmp(f.op, subst_term(f.lhs, mapping), subst_term(f.rhs, mapping))
    if isinstance(f, BoolConst):
        return f
    if isinstance(f, Not):
        return Not(subst(f.arg, mapping))
    if isinstance(f, And):
        return And(tuple(subst(a, mapping) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(subst(a, mapping) for a in f.args))
    if isinstance(f, Implies):
        return Implies(subst(f.lhs, mapping), subst(f.rhs, mapping))
    if isinstance(f, Iff):
        return Iff(subst(f.lhs, mapping), subst(f.rhs, mapping))
    if isinstance(f, Quant):
        body_free = free_symbols(f.body)
        inner = {k: v for k, v in mapping.items() if k not in f.vars and k in body_free}
        if not inner:
            return f
        incoming = set()
        for t in inner.values():
            incoming |= term_symbols(t)
        clash = [v for v in f.vars if v in incoming]
        vs = list(f.vars)
        if clash:
            avoid = incoming | all_symbols(f.body) | set(inner)
            rename = {}
            for v in clash:
                nv = _fresh_like(v, avoid)
                avoid.add(nv)
                rename[v] = _sym_term(nv)
                vs[vs.index(v)] = nv
            inner = {**rename, **inner}
        return type(f)(tuple(vs), subst(f.body, inner))
    raise TypeError(f"not a formula: {f!r}")


def substitute(phi, v: Symbol, e) -> Formula:
    """phi[e/v], renaming binders that would capture symbols of ``e``."""
    return subst(phi, {v: e})


def instantiate_params(xi, kappa: Mapping) -> Formula:
    missing = free_params(xi) - set(kappa)
    if missing:
        raise EvalError(f"no value for parameter(s) {', '.join(map(str, sorted(missing, key=sym_key)))}")
    return subst(xi, {p: IntLit(int(kappa[p])) for p in free_params(xi)})


def fresh_var(v: VarName, avoid: Iterable) -> VarName:
    return _fresh_like(v, set(avoid))


# --------------------------------------------------------- evaluation

_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}
_CMP = {"==": operator.eq, "!=": operator.ne, "<": operator.lt,
        "<=": operator.le, ">": operator.gt, ">=": operator.ge}


def eval_term(t, env: Mapping):
    if isinstance(t, IntLit):
        return t.value
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise EvalError(f"unbound variable {t.name}") from None
    if isinstance(t, Param):
        try:
            return env[t]
        except KeyError:
            raise EvalError(f"unbound parameter {t}") from None
    if isinstance(t, BinOp):
        return _ARITH[t.op](eval_term(t.lhs, env), eval_term(t.rhs, env))
    raise TypeError(f"not a term: {t!r}")


def _all_true(x) -> bool:
    return bool(np.all(x))


def _any_true(x) -> bool:
    return bool(np.any(x))


def evaluate(f, env: Mapping, qdomain: Iterable[int] = range(-3, 4)):
    """Truth value of ``f`` under ``env``.

    Values in ``env`` may be ints or equally-shaped numpy arrays, in which case
    the result is a boolean array. Quantifiers range over ``qdomain`` only
    (bounded semantics).
    """
    if isinstance(f, Cmp):
        return _CMP[f.op](eval_term(f.lhs, env), eval_term(f.rhs, env))
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Not):
        return np.logical_not(evaluate(f.arg, env, qdomain))
    if isinstance(f, And):
        acc = True
        for a in f.args:
            acc = np.logical_and(acc, evaluate(a, env, qdomain))
            if not _any_true(acc):
                break
        return acc
    if isinstance(f, Or):
        acc = False
        for a in f.args:
            acc = np.logical_or(acc, evaluate(a, env, qdomain))
            if _all_true(acc):
                break
        return acc
    if isinstance(f, Implies):
        return np.logical_or(np.logical_not(evaluate(f.lhs, env, qdomain)),
                             evaluate(f.rhs, env, qdomain))
    if isinstance(f, Iff):
        return np.equal(evaluate(f.lhs, env, qdomain), evaluate(f.rhs, env, qdomain))
    if isinstance(f, Exists) and isinstance(f.body, And) and len(f.vars) > 1:
        blocks = _components(list(f.vars), list(f.body.args))
        if len(blocks) > 1:
            parts = [Exists(tuple(cvs), And(tuple(cp))) if cvs else And(tuple(cp))
                     for cvs, cp in blocks]
            return evaluate(And(tuple(parts)), env, qdomain)
    if isinstance(f, Forall) and len(f.vars) > 1 and isinstance(f.body, (Or, Implies)):
        if isinstance(f.body, Or):
            ds = list(f.body.args)
        else:
            lhs = f.body.lhs.args if isinstance(f.body.lhs, And) else (f.body.lhs,)
            rhs = f.body.rhs.args if isinstance(f.body.rhs, Or) else (f.body.rhs,)
            ds = [Not(a) for a in lhs] + list(rhs)
        blocks = _components(list(f.vars), ds)
        if len(blocks) > 1:
            parts = [Forall(tuple(cvs), Or(tuple(cp))) if cvs else Or(tuple(cp))
                     for cvs, cp in blocks]
            return evaluate(Or(tuple(parts)), env, qdomain)
    if isinstance(f, Quant):
        # broadcast: every array in env gains a trailing axis for the bound
        # variable, which is then reduced away
        dom = np.asarray(list(qdomain), dtype=np.int64)
        inner = {k: (v[..., None] if isinstance(v, np.ndarray) and v.ndim else v)
                 for k, v in env.items()}
        inner[f.vars[0]] = dom
        rest = type(f)(f.vars[1:], f.body) if len(f.vars) > 1 else f.body
        val = np.asarray(evaluate(rest, inner, dom))
        if val.ndim == 0:
            return val if dom.size else not isinstance(f, Exists)
        return np.any(val, axis=-1) if isinstance(f, Exists) else np.all(val, axis=-1)
    raise TypeError(f"not a formula: {f!r}")


def eval_formula(phi, sigma: Mapping, kappa: Optional[Mapping] = None,
                 domain: Iterable[int] = range(-3, 4)) -> bool:
    """sigma, kappa |= phi with quantifiers bounded to ``domain``."""
    env = dict(sigma)
    env.update(kappa or {})
    return bool(evaluate(phi, env, domain))


# ----------------------------------------------------- linear algebra


class _Lin:
    """Linear combination sum(c*s) + const over symbols."""

    __slots__ = ("coef", "const")

    def __init__(self, coef=None, const=0):
        self.coef = {s: c for s, c in (coef or {}).items() if c}
        self.const = const

    def add(self, o, sign=1):
        coef = dict(self.coef)
        for s, c in o.coef.items():
            coef[s] = coef.get(s, 0) + sign * c
        return _Lin(coef, self.const + sign * o.const)

    def scale(self, k):
        return _Lin({s: c * k for s, c in self.coef.items()}, self.const * k)


def linearize(t) -> Optional[_Lin]:
    if isinstance(t, IntLit):
        return _Lin(None, t.value)
    if isinstance(t, Var):
        return _Lin({t.name: 1})
    if isinstance(t, Param):
        return _Lin({t: 1})
    if isinstance(t, BinOp):
        a, b = linearize(t.lhs), linearize(t.rhs)
        if a is None or b is None:
            return None
        if t.op == "+":
            return a.add(b)
        if t.op == "-":
            return a.add(b, -1)
        if not a.coef:
            return b.scale(a.const)
        if not b.coef:
            return a.scale(b.const)
        return None
    raise TypeError(f"not a term: {t!r}")


def _sum_term(items, const=0):
    out = None
    for s, c in items:
        atom = _sym_term(s)
        if c != 1:
            atom = BinOp("*", IntLit(c), atom)
        out = atom if out is None else BinOp("+", out, atom)
    if out is None:
        return IntLit(const)
    if const > 0:
        out = BinOp("+", out, IntLit(const))
    elif const < 0:
        out = BinOp("-", out, IntLit(-const))
    return out


def lin_term(lin: _Lin):
    items = sorted(lin.coef.items(), key=lambda kv: sym_key(kv[0]))
    pos = [(s, c) for s, c in items if c > 0]
    negs = [(s, -c) for s, c in items if c < 0]
    if not pos and negs:
        return BinOp("-", IntLit(lin.const), _sum_term(negs)) if lin.const else \
            BinOp("-", IntLit(0), _sum_term(negs))
    out = _sum_term(pos, lin.const)
    for s, c in negs:
        atom = _sym_term(s) if c == 1 else BinOp("*", IntLit(c), _sym_term(s))
        out = BinOp("-", out, atom)
    return out


_FLIP = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def _fold_term(t):
    lin = linearize(t)
    if lin is not None:
        return lin_term(lin)
    if isinstance(t, BinOp):
        return BinOp(t.op, _fold_term(t.lhs), _fold_term(t.rhs))
    return t


def _simplify_cmp(f: Cmp):
    a, b = linearize(f.lhs), linearize(f.rhs)
    if a is None or b is None:
        return Cmp(f.op, _fold_term(f.lhs), _fold_term(f.rhs))
    d = a.add(b, -1)
    if not d.coef:
        return BoolConst(_CMP[f.op](d.const, 0))
    items = sorted(d.coef.items(), key=lambda kv: sym_key(kv[0]))
    pos = [(s, c) for s, c in items if c > 0]
    negs = [(s, -c) for s, c in items if c < 0]
    op = f.op
    if not pos:
        # -(sum) + const  op 0   <=>  sum  flip(op)  const
        return Cmp(_FLIP[op], _sum_term(negs), IntLit(d.const))
    return Cmp(op, _sum_term(pos), _sum_term(negs, -d.const) if negs else IntLit(-d.const))


# ----------------------------------------------------------- simplify


def _flatten(cls, args):
    out = []
    for a in args:
        if isinstance(a, cls):
            out.extend(a.args)
        else:
            out.append(a)
    seen, uniq = set(), []
    for a in out:
        if a not in seen:
            seen.add(a)
            uniq.append(a)
    return uniq


def _mk_and(args):
    args = [a for a in _flatten(And, args) if a != TRUE]
    if any(a == FALSE for a in args):
        return FALSE
    return conj(*args)


def _mk_or(args):
    args = [a for a in _flatten(Or, args) if a != FALSE]
    if any(a == TRUE for a in args):
        return TRUE
    return disj(*args)


def _mk_not(a):
    if isinstance(a, BoolConst):
        return BoolConst(not a.value)
    if isinstance(a, Not):
        return a.arg
    if isinstance(a, Cmp):
        return Cmp(NEGATED_CMP[a.op], a.lhs, a.rhs)
    return Not(a)


def _mk_implies(a, b):
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    if b == FALSE:
        return _mk_not(a)
    return Implies(a, b)


def _solve_unit(eq: Cmp, v):
    """If ``eq`` is an equality where v has coefficient +-1, return t with v = t."""
    if eq.op != "==":
        return None
    a, b = linearize(eq.lhs), linearize(eq.rhs)
    if a is None or b is None:
        return None
    d = a.add(b, -1)
    c = d.coef.get(v, 0)
    if c not in (1, -1):
        return None
    rest = _Lin({s: k for s, k in d.coef.items() if s != v}, d.const)
    # c*v + rest == 0  =>  v = -rest/c
    return lin_term(rest.scale(-c))


def _conjuncts(f):
    return list(f.args) if isinstance(f, And) else [f]


def _rename_apart(q, avoid: set):
    """Rename binders of quantifier ``q`` so none clashes with ``avoid``."""
    vs, mapping = [], {}
    taken = set(avoid) | all_symbols(q.body)
    for v in q.vars:
        if v in avoid:
            nv = _fresh_like(v, taken)
            taken.add(nv)
            mapping[v] = _sym_term(nv)
            vs.append(nv)
        else:
            vs.append(v)
    return tuple(vs), subst(q.body, mapping) if mapping else q.body


def _one_point(vs: list, parts: list):
    """Eliminate variables of ``vs`` fixed by a unit equality among ``parts``."""
    changed = True
    while changed:
        changed = False
        for v in list(vs):
            for i, p in enumerate(parts):
                if not isinstance(p, Cmp):
                    continue
                t = _solve_unit(p, v)
                if t is None:
                    continue
                rest = parts[:i] + parts[i + 1:]
                parts[:] = [simplify(subst(r, {v: t})) for r in rest]
                vs.remove(v)
                changed = True
                break
            if changed:
                break
    return vs, parts


def _simplify_exists(vs, body):
    body_free = free_symbols(body)
    vs = [v for v in vs if v in body_free]
    if not vs:
        return body
    if isinstance(body, BoolConst):
        return body
    if isinstance(body, Or):
        return _mk_or([_simplify_exists(vs, d) for d in body.args])
    if isinstance(body, Exists):
        inner = [v for v in body.vars]
        return _simplify_exists([v for v in vs if v not in inner] + inner, body.body)
    parts = _conjuncts(body)
    # pull nested existentials out of conjunctions
    flat = []
    for p in parts:
        if isinstance(p, Exists):
            avoid = set(vs) | free_symbols(body)
            nvs, nbody = _rename_apart(p, avoid - free_symbols(p) | set(vs))
            vs.extend(nvs)
            flat.extend(_conjuncts(nbody))
        else:
            flat.append(p)
    vs, parts = _one_point(vs, flat)
    if any(p == FALSE for p in parts):
        return FALSE
    parts = [p for p in parts if p != TRUE]
    outside = [p for p in parts if not (free_symbols(p) & set(vs))]
    inside = [p for p in parts if free_symbols(p) & set(vs)]
    if not inside:
        return _mk_and(outside)
    vs, inside = _drop_unbounded(vs, inside)
    blocks = []
    for cvs, cparts in _components(vs, inside):
        if not cvs:
            outside.extend(cparts)
        elif not (len(cparts) == 1 and len(cvs) == 1 and isinstance(cparts[0], Cmp)
                  and _solve_unit(cparts[0], cvs[0]) is not None):
            blocks.append(exists(cvs, _mk_and(cparts)))
    return _mk_and(outside + blocks)


def _bound_side(p, v):
    """+1 if the atom only bounds v from below, -1 from above, 0 if it is a
    disequality in v, None if it pins v otherwise."""
    if not isinstance(p, Cmp) or p.op == "==":
        return None
    a, b = linearize(p.lhs), linearize(p.rhs)
    if a is None or b is None:
        return None
    c = a.add(b, -1).coef.get(v, 0)
    if c == 0:
        return None
    if p.op == "!=":
        return 0
    up = p.op in ("<", "<=")
    return -1 if (c > 0) == up else 1


def _drop_unbounded(vs: list, parts: list):
    """exists v. A over the integers is true when v occurs in A only in
    disequalities and bounds from one side; such v and atoms go away."""
    changed = True
    while changed:
        changed = False
        for v in vs:
            mine = [p for p in parts if v in free_symbols(p)]
            sides = [_bound_side(p, v) for p in mine]
            if None in sides or (1 in sides and -1 in sides):
                continue
            parts = [p for p in parts if v not in free_symbols(p)]
            vs = [w for w in vs if w != v]
            changed = True
            break
    return vs, parts


def _components(vs, parts):
    """Group parts into blocks connected through the variables vs."""
    vset = set(vs)
    groups = []  # (vars, parts)
    for p in parts:
        pv = free_symbols(p) & vset
        merged = [g for g in groups if g[0] & pv]
        nv, np_ = set(pv), [p]
        for g in merged:
            nv |= g[0]
            np_ = g[1] + np_
            groups.remove(g)
        groups.append((nv, np_))
    order = {p: i for i, p in enumerate(parts)}
    return [([v for v in vs if v in g[0]], sorted(g[1], key=order.get)) for g in groups]


def _simplify_forall(vs, body):
    body_free = free_symbols(body)
    vs = [v for v in vs if v in body_free]
    if not vs:
        return body
    if isinstance(body, BoolConst):
        return body
    if isinstance(body, And):
        return _mk_and([_simplify_forall(vs, p) for p in body.args])
    if isinstance(body, Forall):
        inner = list(body.vars)
        return _simplify_forall([v for v in vs if v not in inner] + inner, body.body)
    if isinstance(body, Implies):
        lhs, rhs = body.lhs, body.rhs
        if isinstance(lhs, Or):
            return _mk_and([_simplify_forall(list(vs), simplify(Implies(d, rhs))) for d in lhs.args])
        parts = []
        for p in _conjuncts(lhs):
            if isinstance(p, Exists):
                avoid = set(vs) | free_symbols(rhs) | (free_symbols(lhs) - free_symbols(p))
                nvs, nbody = _rename_apart(p, avoid)
                vs.extend(nvs)
                parts.extend(_conjuncts(nbody))
            else:
                parts.append(p)
        # one-point: forall v. (v = t & A ==> B)  ==  (A ==> B)[t/v]
        while True:
            hit = None
            for v in vs:
                for i, p in enumerate(parts):
                    if isinstance(p, Cmp):
                        t = _solve_unit(p, v)
                        if t is not None:
                            hit = (v, i, t)
                            break
                if hit:
                    break
            if not hit:
                break
            v, i, t = hit
            parts = [simplify(subst(r, {v: t})) for r in parts[:i] + parts[i + 1:]]
            rhs = simplify(subst(rhs, {v: t}))
            vs.remove(v)
        if any(p == FALSE for p in parts):
            return TRUE
        if not (free_symbols(rhs) & set(vs)):
            # forall v. (A ==> B)  ==  (exists v. A) ==> B  when v is not in B
            return _mk_implies(_simplify_exists(list(vs), _mk_and(parts)), rhs)
        new = _mk_implies(_mk_and(parts), rhs)
        used = free_symbols(new)
        vs = [v for v in vs if v in used]
        if isinstance(new, BoolConst) or not vs:
            return new
        return forall(vs, new)
    return forall(vs, body)


def simplify(f) -> Formula:
    """Equivalence-preserving cleanup: constant folding, flattening,
    one-point quantifier elimination and miniscoping."""
    if isinstance(f, Cmp):
        return _simplify_cmp(f)
    if isinstance(f, BoolConst):
        return f
    if isinstance(f, Not):
        return _mk_not(simplify(f.arg))
    if isinstance(f, And):
        return _mk_and([simplify(a) for a in f.args])
    if isinstance(f, Or):
        return _mk_or([simplify(a) for a in f.args])
    if isinstance(f, Implies):
        return _mk_implies(simplify(f.lhs), simplify(f.rhs))
    if isinstance(f, Iff):
        a, b = simplify(f.lhs), simplify(f.rhs)
        if a == b:
            return TRUE
        if isinstance(a, BoolConst):
            return b if a.value else _mk_not(b)
        if isinstance(b, BoolConst):
            return a if b.value else _mk_not(a)
        return Iff(a, b)
    if isinstance(f, Exists):
        return _simplify_exists(list(f.vars), simplify(f.body))
    if isinstance(f, Forall):
        return _simplify_forall(list(f.vars), simplify(f.body))
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------ parametric assertions


@dataclass(frozen=True)
class ParametricAssertion:
    """A function-formula ``xi`` over variables and parameters together with a
    restriction-formula ``c`` over parameters only."""

    xi: object
    c: object
    # optional named top-level conjuncts of c, in order
    parts: tuple = ()
    # (group, invariant, counters) for every loop group on this path
    loops: tuple = ()

    def __post_init__(self):
        stray = free_vars(self.c)
        if stray:
            names = ", ".join(str(v) for v in sorted(stray, key=sym_key))
            raise StructureError(f"restriction-formula has free program variables: {names}")

    @property
    def params(self) -> set:
        return free_params(self.xi) | free_params(self.c)

    @property
    def tags(self) -> tuple:
        return tuple(t for t, _ in self.parts)


def is_cmp_op(op: str) -> bool:
    return op in CMP_OPS
