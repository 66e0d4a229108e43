import random
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forex_lite.formula import (
    EvalError,
    Exists,
    Forall,
    Implies,
    ParametricAssertion,
    Param,
    ParamPool,
    eval_formula,
    eval_term,
    evaluate,
    free_params,
    free_vars,
    instantiate_params,
    simplify,
    subst,
    substitute,
)
from forex_lite.lang import TRUE, And, BinOp, Cmp, IntLit, Or, StructureError, Var, VarName
from forex_lite.smt import Solver, SolverConfig
from helpers import random_formula

X, Y, Z = (VarName(n, 1) for n in "xyz")
W = VarName("w", 2)
VS = (X, Y, Z, W)
DOM = range(-3, 4)
seeds = st.integers(0, 2**32 - 1)


def qformula(rng, vs, depth=2):
    """Random formula that may quantify any of ``vs`` (so binders shadow
    and may clash with substituted terms)."""
    r = rng.random()
    if depth <= 0 or r < 0.35:
        return random_formula(rng, vs, 1)
    if r < 0.65:
        q = rng.choice([Exists, Forall])
        bound = tuple(rng.sample(vs, rng.randint(1, 2)))
        return q(bound, qformula(rng, vs, depth - 1))
    if r < 0.8:
        return Implies(qformula(rng, vs, depth - 1), qformula(rng, vs, depth - 1))
    cls = And if r < 0.9 else Or
    return cls((qformula(rng, vs, depth - 1), qformula(rng, vs, depth - 1)))


def term(rng, vs):
    t = Var(rng.choice(vs))
    if rng.random() < 0.6:
        t = BinOp(rng.choice("+-"), t, Var(rng.choice(vs)) if rng.random() < 0.5 else IntLit(rng.randint(-2, 2)))
    return t


# ------------------------------------------------------------ parameters


def test_param_identity_and_rendering():
    assert Param(3) == Param(3, "somewhere else")
    assert str(Param(3)) == "mu_3"
    assert Param(1) != Param(2)


def test_param_pool_is_unique_across_threads():
    pool = ParamPool()
    out = []

    def grab():
        out.extend(pool.fresh("t") for _ in range(200))

    ts = [threading.Thread(target=grab) for _ in range(8)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert len({p.id for p in out}) == 1600


def test_instantiate_param_choice():
    mu = Param(1)
    xi = And((Cmp(">=", Var(X), IntLit(9)), Cmp("==", Var(Y), mu)))
    assert instantiate_params(xi, {mu: 2}) == And((Cmp(">=", Var(X), IntLit(9)), Cmp("==", Var(Y), IntLit(2))))
    assert instantiate_params(xi, {mu: 3}) == And((Cmp(">=", Var(X), IntLit(9)), Cmp("==", Var(Y), IntLit(3))))
    with pytest.raises(EvalError):
        instantiate_params(xi, {})


def test_free_symbols():
    mu = Param(7)
    f = Exists((X,), And((Cmp("==", Var(X), mu), Cmp("<", Var(Y), Var(X)))))
    assert free_vars(f) == {Y}
    assert free_params(f) == {mu}


def test_parametric_assertion_rejects_program_variables_in_restriction():
    with pytest.raises(StructureError):
        ParametricAssertion(TRUE, Cmp(">=", Var(X), IntLit(0)))
    mu = Param(1)
    pa = ParametricAssertion(Cmp("==", Var(X), mu), Forall((X,), Implies(Cmp("<", Var(X), IntLit(2)),
                                                                       Cmp(">", mu, Var(X)))))
    assert pa.params == {mu}


def test_eval_formula_with_kappa():
    mu = Param(1)
    xi = And((Cmp(">=", Var(X), IntLit(9)), Cmp("==", Var(Y), mu)))
    assert eval_formula(xi, {X: 9, Y: 2}, {mu: 2})
    assert not eval_formula(xi, {X: 9, Y: 2}, {mu: 3})


# ---------------------------------------------------------- substitution


@settings(max_examples=1200, deadline=None)
@given(seeds)
def test_substitution_lemma(seed):
    """sigma |= phi[e/v]  iff  sigma[v -> [[e]]sigma] |= phi."""
    rng = random.Random(seed)
    phi = qformula(rng, VS)
    v = rng.choice(VS)
    e = term(rng, VS)
    sigma = {s: rng.randint(-3, 3) for s in VS}
    lhs = evaluate(substitute(phi, v, e), sigma, DOM)
    sigma2 = dict(sigma)
    sigma2[v] = int(eval_term(e, sigma))
    assert bool(lhs) == bool(evaluate(phi, sigma2, DOM))


def test_substitution_avoids_capture():
    # (exists y. x < y)[y/x] must not become exists y. y < y
    f = Exists((Y,), Cmp("<", Var(X), Var(Y)))
    g = subst(f, {X: Var(Y)})
    assert Y in free_vars(g)
    assert evaluate(g, {Y: 0}, DOM)


# ----------------------------------------------------------- evaluation


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_vectorized_evaluation_matches_scalar(seed):
    rng = random.Random(seed)
    phi = qformula(rng, VS)
    n = 12
    cols = {s: np.array([rng.randint(-3, 3) for _ in range(n)]) for s in VS}
    vec = np.broadcast_to(evaluate(phi, cols, DOM), (n,))
    for i in range(n):
        assert bool(vec[i]) == bool(evaluate(phi, {s: int(c[i]) for s, c in cols.items()}, DOM))


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_block_quantifiers_match_nested_ones(seed):
    rng = random.Random(seed)
    body = random_formula(rng, VS, 2)
    if rng.random() < 0.5:
        body = And((body, random_formula(rng, VS, 1), random_formula(rng, VS, 1)))
    q = rng.choice([Exists, Forall])
    bound = tuple(rng.sample(VS, 3))
    nested = body
    for b in reversed(bound):
        nested = q((b,), nested)
    sigma = {s: rng.randint(-3, 3) for s in VS}
    assert bool(evaluate(q(bound, body), sigma, DOM)) == bool(evaluate(nested, sigma, DOM))


def test_empty_quantifier_domain():
    assert evaluate(Forall((X,), Cmp("<", Var(X), IntLit(0))), {}, [])
    assert not evaluate(Exists((X,), Cmp("<", Var(X), IntLit(0))), {}, [])


# ----------------------------------------------------------- simplifier


def test_simplify_one_point():
    f = Exists((X,), And((Cmp("==", Var(X), IntLit(3)), Cmp("==", Var(Y), Var(X)))))
    assert simplify(f) == Cmp("==", Var(Y), IntLit(3))
    assert simplify(Exists((X,), Cmp("==", Var(X), IntLit(3)))) == TRUE


def test_simplify_drops_unbounded_variables():
    f = Exists((X, Y), And((Cmp("!=", Var(X), Var(Z)), Cmp(">=", Var(Y), Var(Z)), Cmp("<", Var(W), Var(Z)))))
    assert simplify(f) == Cmp("<", Var(W), Var(Z))
    # bounded on both sides: must stay
    g = Exists((X,), And((Cmp(">", Var(X), Var(Z)), Cmp("<", Var(X), Var(W)))))
    assert free_vars(simplify(g)) == {Z, W} and isinstance(simplify(g), Exists)


def test_simplify_forall_with_closed_conclusion():
    mu = Param(1)
    f = Forall((X, Y), Implies(And((Cmp(">", Var(X), Var(Y)), Cmp(">=", Var(Y), IntLit(0)))),
                               Cmp(">=", mu, IntLit(0))))
    assert simplify(f) == Cmp(">=", mu, IntLit(0))


@pytest.fixture(scope="module")
def raw_solver():
    return Solver(SolverConfig(timeout_ms=20_000, simplify=False))


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_simplify_is_equivalence_preserving(raw_solver, seed):
    rng = random.Random(seed)
    mu = Param(1)
    phi = qformula(rng, VS)
    if rng.random() < 0.5:
        phi = And((phi, Cmp("==", Var(rng.choice(VS)), mu)))
    v = raw_solver.check_equiv(phi, simplify(phi))
    assert v.unsat, f"{phi}  vs  {simplify(phi)}: {v.status} {v.model}"
