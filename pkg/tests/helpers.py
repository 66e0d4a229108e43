"""Random program and formula generators shared by the property tests."""

import random
from pathlib import Path

from forex_lite.lang import (
    FALSE,
    TRUE,
    And,
    Assign,
    Assume,
    BinOp,
    Cmp,
    Havoc,
    If,
    IntLit,
    Not,
    Or,
    Var,
    VarName,
    make_feht,
    seq,
    stmt_size,
)

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
BASES = ("x", "y", "z")


def rand_term(rng: random.Random, names, depth=1):
    r = rng.random()
    if depth <= 0 or r < 0.35:
        return Var(VarName(rng.choice(names))) if rng.random() < 0.7 else IntLit(rng.randint(-2, 2))
    op = rng.choice(["+", "-", "+", "*"])
    if op == "*":
        # keep it linear: constant times variable
        return BinOp("*", IntLit(rng.choice([2, -1, 3])), Var(VarName(rng.choice(names))))
    return BinOp(op, rand_term(rng, names, depth - 1), rand_term(rng, names, depth - 1))


def rand_cmp(rng, names, depth=1):
    return Cmp(rng.choice(["==", "!=", "<", "<=", ">", ">="]),
               rand_term(rng, names, depth), rand_term(rng, names, 0))


def rand_bool(rng, names, depth=1):
    r = rng.random()
    if depth <= 0 or r < 0.6:
        return rand_cmp(rng, names)
    if r < 0.75:
        return Not(rand_bool(rng, names, depth - 1))
    cls = And if r < 0.9 else Or
    return cls((rand_bool(rng, names, depth - 1), rand_bool(rng, names, depth - 1)))


def rand_stmt(rng, names, budget):
    """Loop-free statement with roughly ``budget`` nodes."""
    if budget <= 1:
        kind = rng.choice(["assign", "havoc", "assume", "assign"])
    else:
        kind = rng.choice(["assign", "havoc", "assume", "if", "seq", "seq"])
    if kind == "assign":
        return Assign(VarName(rng.choice(names)), rand_term(rng, names))
    if kind == "havoc":
        return Havoc(VarName(rng.choice(names)))
    if kind == "assume":
        return Assume(rand_cmp(rng, names, 0))
    if kind == "if":
        b = (budget - 1) // 2
        return If(rand_cmp(rng, names, 0), rand_stmt(rng, names, max(1, b)),
                  rand_stmt(rng, names, max(1, budget - 1 - b)))
    b = budget // 2
    return seq(rand_stmt(rng, names, b), rand_stmt(rng, names, budget - b))


def _indexed(rng, names, copies):
    return [VarName(n, c) for c in copies for n in names]


def rand_relation(rng, names, copies, max_atoms=2):
    """Conjunction of comparisons over indexed variables, or true."""
    vs = _indexed(rng, names, copies)
    if rng.random() < 0.25:
        return TRUE
    atoms = []
    for _ in range(rng.randint(1, max_atoms)):
        a = rng.choice(vs)
        others = [v for v in vs if v != a]
        b = Var(rng.choice(others)) if others and rng.random() < 0.7 else IntLit(rng.randint(-2, 2))
        a = Var(a)
        atoms.append(Cmp(rng.choice(["==", "<=", ">=", "!="]), a, b))
    return atoms[0] if len(atoms) == 1 else And(tuple(atoms))


def random_loop_free_feht(rng: random.Random, max_indexed=4, max_size=12):
    """At most two copies per side, at most three base names, at most
    ``max_indexed`` indexed variables in total and AST size at most
    ``max_size`` per program."""
    while True:
        k, l = rng.randint(0, 2), rng.randint(0, 2)
        n = k + l
        if n == 0:
            continue
        nv = rng.randint(1, max(1, min(3, max_indexed // n)))
        if n * nv > max_indexed:
            continue
        names = list(BASES[:nv])
        progs = []
        for _ in range(n):
            p = rand_stmt(rng, names, rng.randint(1, 6))
            if stmt_size(p) <= max_size:
                progs.append(p)
        if len(progs) < n:
            continue
        copies = range(1, n + 1)
        pre = rand_relation(rng, names, copies)
        post = rand_relation(rng, names, copies)
        return make_feht(pre, progs[:k], progs[k:], post)


def random_formula(rng, vs, depth=2):
    """Quantifier-free formula over the given VarNames."""
    names_term = lambda d: _term_over(rng, vs, d)  # noqa: E731
    r = rng.random()
    if depth <= 0 or r < 0.4:
        if rng.random() < 0.05:
            return rng.choice([TRUE, FALSE])
        return Cmp(rng.choice(["==", "!=", "<", "<=", ">", ">="]), names_term(1), names_term(0))
    if r < 0.55:
        return Not(random_formula(rng, vs, depth - 1))
    cls = And if r < 0.8 else Or
    return cls(tuple(random_formula(rng, vs, depth - 1) for _ in range(rng.randint(2, 3))))


def _term_over(rng, vs, depth):
    if depth <= 0 or rng.random() < 0.4:
        return Var(rng.choice(vs)) if rng.random() < 0.75 else IntLit(rng.randint(-3, 3))
    if rng.random() < 0.2:
        return BinOp("*", IntLit(rng.choice([2, 3, -2])), _term_over(rng, vs, depth - 1))
    return BinOp(rng.choice(["+", "-"]), _term_over(rng, vs, depth - 1), _term_over(rng, vs, depth - 1))
