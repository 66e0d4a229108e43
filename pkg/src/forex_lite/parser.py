"""Reader and printer for ``.feht`` specification files.

A file is a sequence of blocks introduced by a bracketed header::

    [forall]  x = nondet(); assume(x >= 9);
    [exists]  y = nondet(); assume(y >= 2);
    [pre]     true
    [post]    x_1 == y_2

Program blocks use plain variable names. Assertions write ``name_index``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .lang import (
    FALSE,
    TRUE,
    And,
    Assign,
    Assume,
    BinOp,
    Cmp,
    Feht,
    Havoc,
    Hints,
    If,
    IntLit,
    Not,
    Or,
    Seq,
    Skip,
    StructureError,
    Var,
    VarName,
    While,
    _strip,
    make_feht,
    seq,
    strip_copies,
)
from .formula import free_vars

HEADERS = ("forall", "exists", "pre", "post", "hint-invariant", "hint-counters", "hint-unroll")


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        super().__init__(f"line {line}, col {col}: {msg}")


@dataclass(frozen=True)
class Token:
    kind: str  # header, ident, int, op, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<header>\[[A-Za-z-]+\])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[<>=+\-*!(){};,])
""", re.VERBOSE)


def tokenize(text: str) -> List[Token]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind, s = m.lastgroup, m.group()
        if kind == "header":
            name = s[1:-1]
            if name not in HEADERS:
                raise ParseError(f"unknown block header {s}", line, col)
            toks.append(Token("header", name, line, col))
        elif kind not in ("ws", "comment"):
            toks.append(Token(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = m.start() + s.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


_KEYWORDS = {"skip", "if", "else", "while", "assume", "nondet", "true", "false"}


class _Parser:
    def __init__(self, toks: List[Token], indexed: bool = False):
        self.toks = toks
        self.i = 0
        self.indexed = indexed  # assertion mode: variables are name_index

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def at_block_end(self) -> bool:
        return self.tok.kind in ("header", "eof")

    # -- variables

    def var(self, tok: Token) -> VarName:
        if not self.indexed:
            return VarName(tok.text)
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)_(\d+)", tok.text)
        if m is None:
            self.error(f"variable {tok.text!r} needs a copy index (write name_index)", tok)
        idx = int(m.group(2))
        if idx < 1:
            self.error(f"copy index must be >= 1 in {tok.text!r}", tok)
        return VarName(m.group(1), idx)

    # -- arithmetic

    def arith(self):
        lhs = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            lhs = BinOp(op, lhs, self.product())
        return lhs

    def product(self):
        lhs = self.unary()
        while self.at("*"):
            self.i += 1
            lhs = BinOp("*", lhs, self.unary())
        return lhs

    def unary(self):
        t = self.tok
        if self.accept("-"):
            inner = self.unary()
            if isinstance(inner, IntLit):
                return IntLit(-inner.value)
            return BinOp("-", IntLit(0), inner)
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text))
        if t.kind == "ident":
            if t.text in _KEYWORDS:
                self.error(f"unexpected keyword {t.text!r} in expression")
            self.i += 1
            return Var(self.var(t))
        if self.accept("("):
            e = self.arith()
            self.expect(")")
            return e
        self.error(f"expected an expression, found {t.text or 'end of input'!r}")

    # -- boolean

    def bexpr(self):
        args = [self.conjunction()]
        while self.accept("||"):
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conjunction(self):
        args = [self.bunary()]
        while self.accept("&&"):
            args.append(self.bunary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def bunary(self):
        if self.accept("!"):
            return Not(self.bunary())
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("("):
            # either a parenthesized boolean or an arithmetic operand
            save = self.i
            try:
                return self.comparison()
            except ParseError:
                self.i = save
            self.expect("(")
            b = self.bexpr()
            self.expect(")")
            return b
        return self.comparison()

    def comparison(self):
        lhs = self.arith()
        t = self.tok
        if t.kind == "op" and t.text in ("==", "!=", "<", "<=", ">", ">="):
            self.i += 1
            return Cmp(t.text, lhs, self.arith())
        self.error(f"expected a comparison operator, found {t.text or 'end of input'!r}")

    # -- statements

    def stmts(self, closing: Optional[str]):
        out = []
        while not (self.at(closing) if closing else self.at_block_end()):
            if self.at_block_end():
                self.error("unexpected end of block, missing '}'")
            out.append(self.stmt(closing))
        return seq(*out)

    def _end_simple(self, closing):
        # ';' is optional right before a closing brace or the end of a block
        if self.accept(";"):
            return
        if (closing and self.at(closing)) or (not closing and self.at_block_end()):
            return
        self.expect(";")

    def body(self):
        self.expect("{")
        s = self.stmts("}")
        self.expect("}")
        return s

    def stmt(self, closing):
        t = self.tok
        if self.accept("skip"):
            self._end_simple(closing)
            return Skip()
        if self.accept("assume"):
            self.expect("(")
            b = self.bexpr()
            self.expect(")")
            self._end_simple(closing)
            return Assume(b)
        if self.accept("if"):
            self.expect("(")
            b = self.bexpr()
            self.expect(")")
            then = self.body()
            orelse = Skip()
            if self.accept("else"):
                if self.at("if"):
                    orelse = self.stmt(closing)
                else:
                    orelse = self.body()
            return If(b, then, orelse)
        if self.accept("while"):
            self.expect("(")
            b = self.bexpr()
            self.expect(")")
            return While(b, self.body())
        if t.kind == "ident" and t.text not in _KEYWORDS:
            self.i += 1
            target = self.var(t)
            self.expect("=")
            if self.accept("nondet"):
                self.expect("(")
                self.expect(")")
                self._end_simple(closing)
                return Havoc(target)
            e = self.arith()
            self._end_simple(closing)
            return Assign(target, e)
        self.error(f"expected a statement, found {t.text or 'end of input'!r}")


def _split_blocks(toks: List[Token]):
    blocks, cur = [], None
    for t in toks:
        if t.kind == "header":
            cur = (t, [])
            blocks.append(cur)
        elif t.kind == "eof":
            break
        else:
            if cur is None:
                raise ParseError("expected a block header like [forall]", t.line, t.col)
            cur[1].append(t)
    eof = toks[-1]
    return [(h, body + [Token("eof", "", eof.line, eof.col)]) for h, body in blocks]


def _parse_formula(toks):
    p = _Parser(toks, indexed=True)
    f = p.bexpr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r} after assertion")
    return f


def _parse_ints(toks, what):
    vals = []
    for t in toks[:-1]:
        if t.kind == "int":
            vals.append((int(t.text), t))
        elif t.kind == "op" and t.text == "-":
            raise ParseError(f"{what} must be positive", t.line, t.col)
        elif not (t.kind == "op" and t.text == ","):
            raise ParseError(f"expected integers in {what}", t.line, t.col)
    return vals


def parse_hints(blocks, n_copies: int) -> Hints:
    """Collect hint blocks (header token, tokens) into a Hints value."""
    invariants, counters, unroll = [], None, None
    for head, toks in blocks:
        if head.text == "hint-invariant":
            invariants.append(_parse_formula(toks))
        elif head.text == "hint-counters":
            if counters is not None:
                raise ParseError("multiple [hint-counters] blocks", head.line, head.col)
            vals = _parse_ints(toks, "counters")
            for v, t in vals:
                if v < 1:
                    raise ParseError("counters must be positive", t.line, t.col)
            if len(vals) != n_copies:
                raise ParseError(f"expected {n_copies} counters (one per copy), got {len(vals)}",
                                 head.line, head.col)
            counters = tuple(v for v, _ in vals)
        elif head.text == "hint-unroll":
            vals = _parse_ints(toks, "unroll bound")
            if len(vals) != 1 or vals[0][0] < 1:
                raise ParseError("[hint-unroll] takes one positive integer", head.line, head.col)
            unroll = vals[0][0]
    if counters is not None:
        if unroll is None:
            unroll = max(counters)
        elif unroll < max(counters):
            raise ParseError(f"unroll bound {unroll} is below the largest counter {max(counters)}")
    return Hints(tuple(invariants), counters, unroll)


def parse_spec(text: str) -> Feht:
    blocks = _split_blocks(tokenize(text))
    universals, existentials, hint_blocks = [], [], []
    pre = post = None
    for head, toks in blocks:
        kind = head.text
        if kind in ("forall", "exists"):
            p = _Parser(toks)
            body = p.stmts(None)
            (universals if kind == "forall" else existentials).append(body)
        elif kind in ("pre", "post"):
            if (pre if kind == "pre" else post) is not None:
                raise ParseError(f"multiple [{kind}] blocks", head.line, head.col)
            f = (_parse_formula(toks), head)
            if kind == "pre":
                pre = f
            else:
                post = f
        else:
            hint_blocks.append((head, toks))
    if not universals and not existentials:
        raise ParseError("no program block ([forall] or [exists])", 1, 1)
    if pre is None:
        raise ParseError("missing [pre] block", 1, 1)
    if post is None:
        raise ParseError("missing [post] block", 1, 1)
    n = len(universals) + len(existentials)
    hints = parse_hints(hint_blocks, n)
    for f, head in (pre, post):
        _check_indices(f, n, head)
    for f in hints.invariants:
        _check_indices(f, n, hint_blocks[0][0])
    try:
        return make_feht(pre[0], universals, existentials, post[0], hints)
    except StructureError as e:
        raise ParseError(str(e), 1, 1) from None


def _check_indices(f, n, head):
    for v in free_vars(f):
        if not 1 <= v.copy <= n:
            raise ParseError(f"{v} refers to undeclared copy {v.copy} (there are {n})",
                             head.line, head.col)


def parse_file(path) -> Feht:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


# ------------------------------------------------------------- printing


def _flatten_seq(p):
    if isinstance(p, Seq):
        return _flatten_seq(p.first) + _flatten_seq(p.second)
    return [p]


def print_stmt(p, indent: int = 0) -> str:
    pad = "    " * indent
    lines = []
    for s in _flatten_seq(p):
        if isinstance(s, Skip):
            lines.append(pad + "skip;")
        elif isinstance(s, Assign):
            lines.append(f"{pad}{s.target} = {_strip(s.expr)};")
        elif isinstance(s, Havoc):
            lines.append(f"{pad}{s.target} = nondet();")
        elif isinstance(s, Assume):
            lines.append(f"{pad}assume({s.cond});")
        elif isinstance(s, If):
            lines.append(f"{pad}if ({s.cond}) {{")
            lines.append(print_stmt(s.then, indent + 1))
            lines.append(f"{pad}}} else {{")
            lines.append(print_stmt(s.orelse, indent + 1))
            lines.append(pad + "}")
        elif isinstance(s, While):
            lines.append(f"{pad}while ({s.cond}) {{")
            lines.append(print_stmt(s.body, indent + 1))
            lines.append(pad + "}")
    return "\n".join(lines)


def print_spec(f: Feht) -> str:
    out = []
    for p in f.programs:
        out.append(f"[{p.quantifier}]")
        out.append(print_stmt(strip_copies(p.body), 1))
    out.append(f"[pre]\n    {f.pre}")
    out.append(f"[post]\n    {f.post}")
    for inv in f.hints.invariants:
        out.append(f"[hint-invariant]\n    {inv}")
    if f.hints.counters is not None:
        out.append("[hint-counters]\n    " + " ".join(map(str, f.hints.counters)))
    if f.hints.unroll is not None:
        out.append(f"[hint-unroll]\n    {f.hints.unroll}")
    return "\n".join(out) + "\n"


__all__ = ["ParseError", "parse_spec", "parse_file", "parse_hints", "print_spec", "print_stmt",
           "tokenize"]
