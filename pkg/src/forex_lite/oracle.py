"""Bounded interpreter and brute-force checks used as an independent oracle.

Nondeterministic choices draw from a window ``[-r, r]`` and every path is cut
after a fixed number of statement steps. Verdicts are statements about that
bounded semantics; a cut path downgrades a verdict to Unknown instead of
being silently dropped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .formula import (
    eval_term,
    evaluate,
    free_params,
    free_vars,
    sym_key,
)
from .lang import (
    Assign,
    Assume,
    Havoc,
    If,
    QuantifiedProgram,
    Seq,
    Skip,
    While,
    FORALL,
    stmt_vars,
)

VALID, INVALID, UNKNOWN = "Valid", "Invalid", "Unknown"
HOLDS, FAILS = "holds", "fails"

# expanded rows per vectorized batch
_ROW_BUDGET = 1 << 21


@dataclass(frozen=True)
class ExecResult:
    finals: tuple  # of dicts, sorted, duplicate free
    bound_exceeded: bool


def _key(env: Mapping) -> tuple:
    return tuple(sorted(env.items(), key=lambda kv: sym_key(kv[0])))


def _truth(b, env) -> bool:
    return bool(evaluate(b, env))


def exec_all(p, sigma: Mapping, d: int, S: int = 64) -> ExecResult:
    """All final states of ``p`` from ``sigma`` with havoc in [-d, d] and at
    most ``S`` statement steps per path (Seq does not count as a step)."""
    frontier = {((p,), _key(sigma))}
    finals = set()
    window = range(-d, d + 1)
    for _ in range(S):
        nxt = set()
        for cont, key in frontier:
            # unfold sequencing for free
            while cont and isinstance(cont[0], Seq):
                cont = (cont[0].first, cont[0].second) + cont[1:]
            if not cont:
                finals.add(key)
                continue
            nxt.update(_step(cont[0], cont[1:], key, window))
        frontier = nxt
        if not frontier:
            break
    # states that finish exactly at the last level are not cut
    cut = False
    for cont, key in frontier:
        while cont and isinstance(cont[0], Seq):
            cont = (cont[0].first, cont[0].second) + cont[1:]
        if cont:
            cut = True
        else:
            finals.add(key)
    out = tuple(dict(k) for k in sorted(finals, key=_state_order))
    return ExecResult(out, cut)


def _state_order(key):
    return tuple((str(v), x) for v, x in key)


def _step(s, rest, key, window):
    env = dict(key)
    if isinstance(s, Skip):
        return [(rest, key)]
    if isinstance(s, Assign):
        env[s.target] = int(eval_term(s.expr, env))
        return [(rest, _key(env))]
    if isinstance(s, Havoc):
        out = []
        for z in window:
            env[s.target] = z
            out.append((rest, _key(env)))
        return out
    if isinstance(s, Assume):
        return [(rest, key)] if _truth(s.cond, env) else []
    if isinstance(s, If):
        branch = s.then if _truth(s.cond, env) else s.orelse
        return [((branch,) + rest, key)]
    if isinstance(s, While):
        if _truth(s.cond, env):
            return [((s.body, s) + rest, key)]
        return [(rest, key)]
    raise TypeError(f"not a statement: {s!r}")


# ---------------------------------------------------------- enumeration


@dataclass
class _Copy:
    """Per-copy local grid of initial states and lazily computed finals."""

    copy: int
    universal: bool
    body: object
    vars: tuple
    havoc_radius: int
    grid: np.ndarray
    steps: int
    _finals: dict = field(default_factory=dict)

    def finals(self, idx: int):
        got = self._finals.get(idx)
        if got is None:
            sigma = {v: int(x) for v, x in zip(self.vars, self.grid[idx])}
            res = exec_all(self.body, sigma, self.havoc_radius, self.steps)
            arr = np.array([[f[v] for v in self.vars] for f in res.finals],
                           dtype=np.int64).reshape(len(res.finals), len(self.vars))
            got = (arr, res.bound_exceeded)
            self._finals[idx] = got
        return got


def _grid(nvars: int, r: int) -> np.ndarray:
    vals = np.arange(-r, r + 1, dtype=np.int64)
    if nvars == 0:
        return np.zeros((1, 0), dtype=np.int64)
    mesh = np.meshgrid(*([vals] * nvars), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _expand(n: np.ndarray):
    """Row indices repeated ``n`` times each, with the offset inside each run."""
    rep = np.repeat(np.arange(n.size), n)
    starts = np.repeat(np.cumsum(n) - n, n)
    return rep, np.arange(rep.size) - starts


def _quant_depth(f) -> int:
    from .formula import Exists, Forall, Iff, Implies
    from .lang import And, Not, Or
    if isinstance(f, (Exists, Forall)):
        return len(f.vars) + _quant_depth(f.body)
    if isinstance(f, Not):
        return _quant_depth(f.arg)
    if isinstance(f, (And, Or)):
        return max((_quant_depth(a) for a in f.args), default=0)
    if isinstance(f, (Implies, Iff)):
        return max(_quant_depth(f.lhs), _quant_depth(f.rhs))
    return 0


def _eval_chunked(f, env: dict, n: int, qdom) -> np.ndarray:
    """Evaluate ``f`` over ``n`` rows, splitting rows so quantifier
    broadcasting stays within memory."""
    width = len(qdom) ** _quant_depth(f)
    step = max(1, _ROW_BUDGET // max(1, width))
    out = np.empty(n, dtype=bool)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        sub = {k: (v[lo:hi] if isinstance(v, np.ndarray) else v) for k, v in env.items()}
        out[lo:hi] = np.broadcast_to(evaluate(f, sub, qdom), (hi - lo,))
    return out


@dataclass
class Outcome:
    status: str
    witness: Optional[dict] = None
    stats: dict = field(default_factory=dict)

    def __str__(self):
        return self.status


class _Enumerator:
    """Shared driver: for every initial relational state satisfying ``phi``,
    every universal final tuple and every parameter value admitted by ``gate``,
    some existential final tuple must satisfy ``target``."""

    def __init__(self, phi, programs: Sequence[QuantifiedProgram], target, d: int, S: int,
                 exists_radius: int, quant_radius: int, params=(), gate=None, extra_vars=()):
        self.phi, self.target, self.gate = phi, target, gate
        self.params = tuple(sorted(params, key=sym_key))
        self.kappa_radius = exists_radius
        self.qdom = np.arange(-quant_radius, quant_radius + 1, dtype=np.int64)
        mentioned = free_vars(phi) | free_vars(target) | set(extra_vars)
        self.copies = []
        for p in programs:
            vs = stmt_vars(p.body) | {v for v in mentioned if v.copy == p.copy}
            vs = tuple(sorted(vs, key=sym_key))
            uni = p.quantifier == FORALL
            self.copies.append(_Copy(p.copy, uni, p.body, vs, d if uni else exists_radius,
                                     _grid(len(vs), d), S))
        stray = {v for v in mentioned if v.copy not in {c.copy for c in self.copies}}
        if stray:
            raise ValueError(f"variables of undeclared copies: {sorted(map(str, stray))}")

    def _kappas(self) -> np.ndarray:
        K = _grid(len(self.params), self.kappa_radius)
        if self.gate is None:
            return K
        env = {p: K[:, i] for i, p in enumerate(self.params)}
        ok = _eval_chunked(self.gate, env, K.shape[0], self.qdom)
        return K[ok]

    def _initial(self):
        """Joint initial states satisfying phi, as per-copy local indices."""
        sizes = [c.grid.shape[0] for c in self.copies]
        total = int(np.prod(sizes))
        chunk = 1 << 16
        for lo in range(0, total, chunk):
            flat = np.arange(lo, min(total, lo + chunk))
            idx = np.unravel_index(flat, sizes)
            env = {}
            for c, ix in zip(self.copies, idx):
                for j, v in enumerate(c.vars):
                    env[v] = c.grid[ix, j]
            ok = _eval_chunked(self.phi, env, flat.size, self.qdom)
            if ok.any():
                yield [ix[ok] for ix in idx]

    def run(self) -> Outcome:
        K = self._kappas()
        stats = {"initial_states": 0, "groups": 0, "kappas": int(K.shape[0])}
        univ_cut = False
        pending_unknown = None
        if K.shape[0] == 0:
            stats["vacuous"] = True
            return Outcome(HOLDS, None, stats)
        for idx in self._initial():
            stats["initial_states"] += int(idx[0].size) if idx else 1
            res = self._batch(idx, K, stats)
            univ_cut |= res["univ_cut"]
            if res["fail"] is not None:
                return Outcome(FAILS, res["fail"], stats)
            if res["unknown"] is not None and pending_unknown is None:
                pending_unknown = res["unknown"]
        if pending_unknown is not None:
            return Outcome(UNKNOWN, pending_unknown, stats)
        if univ_cut:
            return Outcome(UNKNOWN, {"reason": "a universal execution hit the step bound"}, stats)
        return Outcome(HOLDS, None, stats)

    def _csr(self, c: _Copy, local: np.ndarray):
        """Finals of copy c for each needed local index in CSR form."""
        uniq = np.unique(local)
        parts, counts, cuts = [], np.zeros(c.grid.shape[0], np.int64), np.zeros(c.grid.shape[0], bool)
        starts = np.zeros(c.grid.shape[0], np.int64)
        pos = 0
        for u in uniq:
            arr, cut = c.finals(int(u))
            starts[u], counts[u], cuts[u] = pos, arr.shape[0], cut
            parts.append(arr)
            pos += arr.shape[0]
        flat = np.concatenate(parts) if parts else np.zeros((0, len(c.vars)), np.int64)
        return flat, starts, counts, cuts

    def _batch(self, idx, K, stats):
        csr = [self._csr(c, ix) for c, ix in zip(self.copies, idx)]
        n_init = idx[0].size if idx else 1
        univ = [i for i, c in enumerate(self.copies) if c.universal]
        exist = [i for i, c in enumerate(self.copies) if not c.universal]
        univ_cut = any(bool(csr[i][3][idx[i]].any()) for i in univ)
        exist_cut_row = np.zeros(n_init, bool)
        for i in exist:
            exist_cut_row |= csr[i][3][idx[i]]
        # per-initial-state expansion size, used to split into batches
        size = np.ones(n_init, np.int64) * K.shape[0]
        for i in range(len(self.copies)):
            size *= csr[i][2][idx[i]]
        bounds = [0]
        acc = 0
        for j, s in enumerate(size):
            acc += int(s)
            if acc > _ROW_BUDGET and j + 1 > bounds[-1] + 1:
                bounds.append(j)
                acc = int(s)
        bounds.append(n_init)
        out = {"univ_cut": univ_cut, "fail": None, "unknown": None}
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi <= lo:
                continue
            r = self._rows(idx, csr, K, np.arange(lo, hi), univ, exist, exist_cut_row, stats)
            if r is not None:
                kind, w = r
                if kind == FAILS:
                    out["fail"] = w
                    return out
                if out["unknown"] is None:
                    out["unknown"] = w
        return out

    def _rows(self, idx, csr, K, rows, univ, exist, exist_cut_row, stats):
        # rows: indices into the initial-state arrays
        ptr = {}
        init = rows
        for i in univ:
            flat, starts, counts, _ = csr[i]
            loc = idx[i][init]
            rep, off = _expand(counts[loc])
            init = init[rep]
            for j in ptr:
                ptr[j] = ptr[j][rep]
            ptr[i] = starts[loc[rep]] + off
        n_u = init.size
        if n_u == 0:
            return None
        uptr = dict(ptr)
        # one group per (initial state, universal finals, parameter value)
        nk = K.shape[0]
        n_groups = n_u * nk
        stats["groups"] += n_groups
        gid = np.arange(n_groups)
        ptr = {j: np.repeat(p, nk) for j, p in ptr.items()}
        cur_init = np.repeat(init, nk)
        cur_k = np.tile(np.arange(nk), n_u)
        for i in exist:
            flat, starts, counts, _ = csr[i]
            loc = idx[i][cur_init]
            rep, off = _expand(counts[loc])
            gid, cur_init, cur_k = gid[rep], cur_init[rep], cur_k[rep]
            for j in ptr:
                ptr[j] = ptr[j][rep]
            ptr[i] = starts[loc[rep]] + off
        env = {}
        for i, c in enumerate(self.copies):
            flat = csr[i][0]
            for jv, v in enumerate(c.vars):
                env[v] = flat[ptr[i], jv]
        for jp, p in enumerate(self.params):
            env[p] = K[cur_k, jp]
        ok = _eval_chunked(self.target, env, gid.size, self.qdom) if gid.size else np.zeros(0, bool)
        good = np.bincount(gid[ok], minlength=n_groups) > 0
        if good.all():
            return None
        # a failing group is conclusive only if its existential runs were complete
        for g in np.flatnonzero(~good):
            ug, kk = divmod(int(g), nk)
            r = int(init[ug])
            if not exist_cut_row[r]:
                return FAILS, self._witness(idx, csr, r, {i: int(uptr[i][ug]) for i in univ}, K[kk])
        return UNKNOWN, {"reason": "an existential execution hit the step bound"}

    def _witness(self, idx, csr, r, uptr, kappa):
        w = {"initial": {}, "universal_finals": {}, "kappa": {}}
        for i, c in enumerate(self.copies):
            for jv, v in enumerate(c.vars):
                w["initial"][str(v)] = int(c.grid[idx[i][r], jv])
        for i, p in uptr.items():
            row = csr[i][0][p]
            for jv, v in enumerate(self.copies[i].vars):
                w["universal_finals"][str(v)] = int(row[jv])
        for jp, p in enumerate(self.params):
            w["kappa"][str(p)] = int(kappa[jp])
        return w


def _default_quant_radius(d: int, re_: int) -> int:
    return 4 * max(d, re_) + 4


def feht_check_bounded(f, d: int = 2, S: int = 64, exists_radius: Optional[int] = None,
                       quant_radius: Optional[int] = None) -> Outcome:
    """Validity of a tuple under bounded semantics: Valid, Invalid or Unknown."""
    re_ = 2 * d if exists_radius is None else exists_radius
    qr = _default_quant_radius(d, re_) if quant_radius is None else quant_radius
    en = _Enumerator(f.pre, f.programs, f.post, d, S, re_, qr)
    out = en.run()
    status = {HOLDS: VALID, FAILS: INVALID}.get(out.status, UNKNOWN)
    return Outcome(status, out.witness, out.stats)


def uht_holds(phi, program: QuantifiedProgram, psi, d: int = 2, S: int = 64,
              exists_radius: Optional[int] = None) -> Outcome:
    """From every bounded state satisfying phi some run of the program ends in psi."""
    from .lang import EXISTS
    p = QuantifiedProgram(program.copy, EXISTS, program.body)
    re_ = d if exists_radius is None else exists_radius
    en = _Enumerator(phi, [p], psi, d, S, re_, _default_quant_radius(d, re_))
    return en.run()


def check_parametric_postcondition(phi, programs: Sequence[QuantifiedProgram], xi, c,
                                   d: int = 2, S: int = 64, exists_radius: Optional[int] = None,
                                   quant_radius: Optional[int] = None,
                                   mode: str = "witness") -> Outcome:
    """Brute-force check that (xi, c) is a parametric postcondition.

    ``witness`` mode: for every initial state, universal final tuple and
    admitted parameter value, some reachable existential final tuple satisfies
    xi. ``strict`` mode checks the two literal conditions: xi is satisfiable
    by some existential tuple in the grid, and every grid tuple satisfying xi
    is reachable.
    """
    re_ = 2 * d if exists_radius is None else exists_radius
    qr = _default_quant_radius(d, re_) if quant_radius is None else quant_radius
    if free_params(phi):
        raise ValueError("precondition must be parameter free")
    params = free_params(xi) | free_params(c)
    if mode == "witness":
        return _Enumerator(phi, programs, xi, d, S, re_, qr, params, gate=c).run()
    if mode != "strict":
        raise ValueError(f"unknown mode {mode!r}")
    return _strict(phi, programs, xi, c, d, S, re_, qr, params)


def _strict(phi, programs, xi, c, d, S, re_, qr, params) -> Outcome:
    en = _Enumerator(phi, programs, xi, d, S, re_, qr, params, gate=c)
    K = en._kappas()
    if K.shape[0] == 0:
        return Outcome(HOLDS, None, {"vacuous": True})
    univ = [cp for cp in en.copies if cp.universal]
    exist = [cp for cp in en.copies if not cp.universal]
    egrid = _grid(sum(len(cp.vars) for cp in exist), re_)
    unknown = None
    for idx in en._initial():
        for r in range(idx[0].size):
            loc = [int(ix[r]) for ix in idx]
            fin = [cp.finals(l) for cp, l in zip(en.copies, loc)]
            if any(fin[i][1] for i, cp in enumerate(en.copies)):
                unknown = unknown or {"reason": "step bound"}
                continue
            ulists = [fin[i][0] for i, cp in enumerate(en.copies) if cp.universal]
            reach = [{tuple(row) for row in fin[i][0]}
                     for i, cp in enumerate(en.copies) if not cp.universal]
            for combo in itertools.product(*[range(u.shape[0]) for u in ulists]):
                env = {}
                for cp, u, j in zip(univ, ulists, combo):
                    for jv, v in enumerate(cp.vars):
                        env[v] = int(u[j, jv])
                for kap in K:
                    n = egrid.shape[0]
                    e2 = {k: v for k, v in env.items()}
                    col = 0
                    for cp in exist:
                        for v in cp.vars:
                            e2[v] = egrid[:, col]
                            col += 1
                    for jp, p in enumerate(en.params):
                        e2[p] = int(kap[jp])
                    ok = np.broadcast_to(evaluate(xi, e2, en.qdom), (n,))
                    w = {"initial": {str(v): int(cp.grid[l, jv]) for cp, l in zip(en.copies, loc)
                                     for jv, v in enumerate(cp.vars)},
                         "kappa": {str(p): int(kap[jp]) for jp, p in enumerate(en.params)}}
                    if not ok.any():
                        return Outcome(FAILS, {**w, "condition": 1})
                    for row in egrid[ok]:
                        col = 0
                        for cp, rs in zip(exist, reach):
                            part = tuple(int(x) for x in row[col:col + len(cp.vars)])
                            col += len(cp.vars)
                            if part not in rs:
                                return Outcome(FAILS, {**w, "condition": 2,
                                                       "unreachable": {str(v): x for v, x in
                                                                       zip(cp.vars, part)}})
    if unknown:
        return Outcome(UNKNOWN, unknown)
    return Outcome(HOLDS)


__all__ = ["ExecResult", "Outcome", "exec_all", "feht_check_bounded", "uht_holds",
           "check_parametric_postcondition", "VALID", "INVALID", "UNKNOWN", "HOLDS", "FAILS"]
