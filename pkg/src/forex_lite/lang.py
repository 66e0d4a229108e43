"""Imperative language AST, relational copies and head normalization.

Programs are immutable trees. Variables carry an optional copy index so the
same source program can be instantiated once per quantified execution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class StructureError(ValueError):
    """Raised when an AST does not have the expected shape."""


@dataclass(frozen=True, order=True)
class VarName:
    base: str
    copy: Optional[int] = None
    # nonzero only for solver-side bound renamings (never a program variable)
    fresh: int = 0

    def __post_init__(self):
        if not _IDENT.match(self.base):
            raise StructureError(f"invalid identifier {self.base!r}")
        if self.copy is not None and self.copy < 1:
            raise StructureError(f"copy index must be >= 1, got {self.copy}")

    def with_copy(self, copy: int) -> "VarName":
        return VarName(self.base, copy, self.fresh)

    def __str__(self):
        s = self.base if self.copy is None else f"{self.base}_{self.copy}"
        return s if not self.fresh else f"{s}'{self.fresh}"

    def __repr__(self):
        return f"VarName({str(self)!r})"


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class IntLit:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: VarName

    def __str__(self):
        return str(self.name)


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    lhs: "Term"
    rhs: "Term"

    def __post_init__(self):
        if self.op not in ("+", "-", "*"):
            raise StructureError(f"unknown arithmetic operator {self.op!r}")

    def __str__(self):
        return f"({self.lhs} {self.op} {self.rhs})"


# Param (see formula.py) is also a Term; kept out of here so that program
# expressions can never mention parameters.
Term = Union[IntLit, Var, BinOp, "Param"]  # noqa: F821
ArithExpr = Union[IntLit, Var, BinOp]


# ---------------------------------------------------- boolean connectives
# These double as the quantifier-free fragment of Formula.

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
NEGATED_CMP = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Cmp:
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise StructureError(f"unknown comparison {self.op!r}")

    def __str__(self):
        return f"{_strip(self.lhs)} {self.op} {_strip(self.rhs)}"


@dataclass(frozen=True)
class Not:
    arg: "Formula"  # noqa: F821

    def __str__(self):
        return f"!({self.arg})"


@dataclass(frozen=True)
class And:
    args: tuple

    def __str__(self):
        if not self.args:
            return "true"
        return " && ".join(_paren(a) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple

    def __str__(self):
        if not self.args:
            return "false"
        return " || ".join(_paren(a) for a in self.args)


BoolExpr = Union[BoolConst, Cmp, Not, And, Or]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def _strip(t) -> str:
    s = str(t)
    if isinstance(t, BinOp) and s.startswith("(") and s.endswith(")"):
        return s[1:-1]
    return s


def _paren(f) -> str:
    if isinstance(f, (Cmp, BoolConst, Not)):
        return str(f)
    return f"({f})"


# ------------------------------------------------------------ statements


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    target: VarName
    expr: ArithExpr


@dataclass(frozen=True)
class Havoc:
    target: VarName


@dataclass(frozen=True)
class Assume:
    cond: BoolExpr


@dataclass(frozen=True)
class If:
    cond: BoolExpr
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class While:
    cond: BoolExpr
    body: "Stmt"


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


Stmt = Union[Skip, Assign, Havoc, Assume, If, While, Seq]
SKIP = Skip()


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequence of ``stmts``; empty input gives Skip."""
    stmts = [s for s in stmts]
    if not stmts:
        return SKIP
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


# ---------------------------------------------------------- traversals


def term_vars(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, BinOp):
        return term_vars(t.lhs) | term_vars(t.rhs)
    return set()


def bool_vars(b) -> set:
    if isinstance(b, Cmp):
        return term_vars(b.lhs) | term_vars(b.rhs)
    if isinstance(b, Not):
        return bool_vars(b.arg)
    if isinstance(b, (And, Or)):
        out = set()
        for a in b.args:
            out |= bool_vars(a)
        return out
    return set()


def stmt_vars(p: Stmt) -> set:
    """All variables read or written anywhere in ``p``."""
    if isinstance(p, Assign):
        return {p.target} | term_vars(p.expr)
    if isinstance(p, Havoc):
        return {p.target}
    if isinstance(p, Assume):
        return bool_vars(p.cond)
    if isinstance(p, If):
        return bool_vars(p.cond) | stmt_vars(p.then) | stmt_vars(p.orelse)
    if isinstance(p, While):
        return bool_vars(p.cond) | stmt_vars(p.body)
    if isinstance(p, Seq):
        return stmt_vars(p.first) | stmt_vars(p.second)
    return set()


def mod_vars(p: Stmt) -> set:
    """Variables on the left of an assignment or havoc anywhere in ``p``."""
    if isinstance(p, (Assign, Havoc)):
        return {p.target}
    if isinstance(p, If):
        return mod_vars(p.then) | mod_vars(p.orelse)
    if isinstance(p, While):
        return mod_vars(p.body)
    if isinstance(p, Seq):
        return mod_vars(p.first) | mod_vars(p.second)
    return set()


def stmt_size(p: Stmt) -> int:
    """Number of statement nodes (Seq included)."""
    if isinstance(p, If):
        return 1 + stmt_size(p.then) + stmt_size(p.orelse)
    if isinstance(p, While):
        return 1 + stmt_size(p.body)
    if isinstance(p, Seq):
        return 1 + stmt_size(p.first) + stmt_size(p.second)
    return 1


def iter_stmts(p: Stmt) -> Iterator[Stmt]:
    yield p
    if isinstance(p, If):
        yield from iter_stmts(p.then)
        yield from iter_stmts(p.orelse)
    elif isinstance(p, While):
        yield from iter_stmts(p.body)
    elif isinstance(p, Seq):
        yield from iter_stmts(p.first)
        yield from iter_stmts(p.second)


def has_loops(p: Stmt) -> bool:
    return any(isinstance(s, While) for s in iter_stmts(p))


# ------------------------------------------------------------ renaming


def rename_term(t, fn):
    if isinstance(t, Var):
        return Var(fn(t.name))
    if isinstance(t, BinOp):
        return BinOp(t.op, rename_term(t.lhs, fn), rename_term(t.rhs, fn))
    return t


def rename_bool(b, fn):
    if isinstance(b, Cmp):
        return Cmp(b.op, rename_term(b.lhs, fn), rename_term(b.rhs, fn))
    if isinstance(b, Not):
        return Not(rename_bool(b.arg, fn))
    if isinstance(b, And):
        return And(tuple(rename_bool(a, fn) for a in b.args))
    if isinstance(b, Or):
        return Or(tuple(rename_bool(a, fn) for a in b.args))
    return b


def rename_stmt(p: Stmt, fn) -> Stmt:
    if isinstance(p, Assign):
        return Assign(fn(p.target), rename_term(p.expr, fn))
    if isinstance(p, Havoc):
        return Havoc(fn(p.target))
    if isinstance(p, Assume):
        return Assume(rename_bool(p.cond, fn))
    if isinstance(p, If):
        return If(rename_bool(p.cond, fn), rename_stmt(p.then, fn), rename_stmt(p.orelse, fn))
    if isinstance(p, While):
        return While(rename_bool(p.cond, fn), rename_stmt(p.body, fn))
    if isinstance(p, Seq):
        return Seq(rename_stmt(p.first, fn), rename_stmt(p.second, fn))
    return p


def alpha_rename(p: Stmt, i: int) -> Stmt:
    """Copy ``p`` with every variable tagged by copy index ``i``."""
    if i < 1:
        raise StructureError(f"copy index must be >= 1, got {i}")

    def tag(v: VarName) -> VarName:
        if v.copy is not None:
            raise StructureError(f"variable {v} already carries a copy index")
        return v.with_copy(i)

    return rename_stmt(p, tag)


def strip_copies(p: Stmt) -> Stmt:
    return rename_stmt(p, lambda v: VarName(v.base))


# -------------------------------------------------------- normalization


def normalize_head(p: Stmt) -> Stmt:
    """Bring ``p`` into the form Skip or Seq(h, rest) with h atomic-or-compound
    but neither Seq nor Skip.

    Applies skip elimination, skip introduction and re-association.
    """
    while True:
        if isinstance(p, Skip):
            return p
        if not isinstance(p, Seq):
            return Seq(p, SKIP)
        head = p.first
        if isinstance(head, Skip):
            p = p.second
        elif isinstance(head, Seq):
            p = Seq(head.first, Seq(head.second, p.second))
        else:
            return p


# ------------------------------------------------------ tuple structure

FORALL = "forall"
EXISTS = "exists"


@dataclass(frozen=True)
class QuantifiedProgram:
    copy: int
    quantifier: str
    body: Stmt
    remaining: Optional[Stmt] = None

    def __post_init__(self):
        if self.quantifier not in (FORALL, EXISTS):
            raise StructureError(f"unknown quantifier {self.quantifier!r}")
        if self.remaining is None:
            object.__setattr__(self, "remaining", self.body)
        for v in stmt_vars(self.body):
            if v.copy != self.copy:
                raise StructureError(f"variable {v} does not belong to copy {self.copy}")

    @property
    def finished(self) -> bool:
        return isinstance(self.remaining, Skip)

    def advance(self, remaining: Stmt) -> "QuantifiedProgram":
        return QuantifiedProgram(self.copy, self.quantifier, self.body, remaining)


@dataclass(frozen=True)
class Hints:
    invariants: tuple = ()
    counters: Optional[tuple] = None
    unroll: Optional[int] = None

    @property
    def empty(self) -> bool:
        return not self.invariants and self.counters is None and self.unroll is None


@dataclass(frozen=True)
class Feht:
    pre: object
    universals: tuple
    existentials: tuple
    post: object
    hints: Hints = field(default_factory=Hints)

    def __post_init__(self):
        if not self.universals and not self.existentials:
            raise StructureError("a tuple needs at least one program")
        copies = [p.copy for p in self.programs]
        if copies != list(range(1, len(copies) + 1)):
            raise StructureError(f"copy indices must be 1..k+l in order, got {copies}")

    @property
    def programs(self) -> tuple:
        return tuple(self.universals) + tuple(self.existentials)

    @property
    def k(self) -> int:
        return len(self.universals)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.existentials)

    def copy_vars(self, copy: int) -> set:
        from .formula import free_vars

        out = {v for v in stmt_vars(self.programs[copy - 1].body)}
        for f in (self.pre, self.post, *self.hints.invariants):
            out |= {v for v in free_vars(f) if v.copy == copy}
        return out

    def is_loop_free(self) -> bool:
        return not any(has_loops(p.body) for p in self.programs)


def make_feht(pre, universals: Iterable[Stmt], existentials: Iterable[Stmt], post,
              hints: Optional[Hints] = None) -> Feht:
    """Build a tuple from copy-free programs, renaming them 1..k+l."""
    universals, existentials = list(universals), list(existentials)
    k = len(universals)
    u = tuple(QuantifiedProgram(i + 1, FORALL, alpha_rename(p, i + 1)) for i, p in enumerate(universals))
    e = tuple(QuantifiedProgram(k + i + 1, EXISTS, alpha_rename(p, k + i + 1)) for i, p in enumerate(existentials))
    return Feht(pre, u, e, post, hints or Hints())
