"""Congruence closure with explanations, and equational proof certificates.

Context variables are treated as constants.  Every merge records its
reason in a proof forest so that any derived equality can be replayed as a
calculus proof (``certify``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .calculus import Proof, ProofBuilder
from .parsing import format_term
from .syntax import (TOP, And, App, Eq, Ex, Or, Sequent, Signature, Theory, Var,
                     fresh_var, subst_term, term_depth, term_vars)

MAX_UNIVERSE = 4000


def term_order(t):
    """Representative order: shallow first, variables before constants,
    then by printed form."""
    return (term_depth(t), not isinstance(t, Var), len(format_term(t)), format_term(t))


# ---------------------------------------------------------------------------
# unconditional equational axioms

@dataclass(frozen=True)
class EqAxiom:
    name: str
    lhs: object
    rhs: object
    context: tuple
    sequent: Sequent


def _unwrap_eq(f):
    """The equation inside ``Eq``, ``And[Eq]`` or ``Or[Ex[](And[Eq])]``."""
    while True:
        if isinstance(f, Eq):
            return f
        if isinstance(f, (And, Or)) and len(f.parts) == 1:
            f = f.parts[0]
        elif isinstance(f, Ex) and not f.vars:
            f = f.body
        else:
            return None


def equational_axioms(theory: Theory | None):
    if theory is None:
        return []
    out = []
    for name, s in theory.axioms:
        if s.antecedent != TOP:
            continue
        e = _unwrap_eq(s.consequent)
        if e is not None:
            out.append(EqAxiom(name, e.lhs, e.rhs, s.context, s))
    return out


def match(pattern, term, sigma=None):
    """Syntactic matching of ``pattern`` (variables are holes) onto ``term``."""
    sigma = dict(sigma or {})
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if p.sort != t.sort:
                return None
            if p in sigma:
                if sigma[p] != t:
                    return None
            else:
                sigma[p] = t
        elif isinstance(t, App) and p.fn == t.fn and len(p.args) == len(t.args):
            stack.extend(zip(p.args, t.args))
        else:
            return None
    return sigma


# ---------------------------------------------------------------------------
# congruence closure

class CongruenceClosure:
    def __init__(self):
        self.terms = []
        self._known = set()
        self._rep = {}
        self._members = {}
        self._forest = {}       # term -> (neighbour, reason)
        self._sig = {}
        self._pending = []

    def add(self, t):
        if t in self._known:
            return
        if isinstance(t, App):
            for a in t.args:
                self.add(a)
        self._known.add(t)
        self.terms.append(t)
        self._rep[t] = t
        self._members[t] = [t]
        if isinstance(t, App):
            key = (t.fn, tuple(self.find(a) for a in t.args))
            other = self._sig.get(key)
            if other is None:
                self._sig[key] = t
            else:
                self._pending.append((t, other, ("cong",)))
                self._propagate()

    def find(self, t):
        return self._rep[t]

    def same(self, a, b):
        return a in self._known and b in self._known and self.find(a) == self.find(b)

    def merge(self, a, b, reason):
        self.add(a)
        self.add(b)
        self._pending.append((a, b, reason))
        return self._propagate()

    def _propagate(self):
        changed = False
        while self._pending:
            a, b, reason = self._pending.pop()
            if self.find(a) == self.find(b):
                continue
            self._union(a, b, reason)
            changed = True
            table = {}
            for t in self.terms:
                if isinstance(t, App):
                    key = (t.fn, tuple(self.find(x) for x in t.args))
                    other = table.get(key)
                    if other is None:
                        table[key] = t
                    elif self.find(other) != self.find(t):
                        self._pending.append((t, other, ("cong",)))
            self._sig = table
        return changed

    def _union(self, a, b, reason):
        # proof forest: reroot a's tree at a, then hang a below b
        path, x = [], a
        while x in self._forest:
            path.append((x, self._forest[x]))
            x = self._forest[x][0]
        for child, (parent, r) in reversed(path):
            del self._forest[child]
            self._forest[parent] = (child, r)
        self._forest[a] = (b, reason)
        ra, rb = self.find(a), self.find(b)
        if len(self._members[ra]) > len(self._members[rb]):
            ra, rb = rb, ra
        for t in self._members[ra]:
            self._rep[t] = rb
        self._members[rb].extend(self._members.pop(ra))

    def classes(self):
        return [list(m) for m in self._members.values()]

    def explain(self, a, b):
        """Steps ``(x, y, reason)`` chaining ``a`` to ``b`` through the forest."""
        if not self.same(a, b):
            raise ValueError(f"{format_term(a)} and {format_term(b)} are not congruent")

        def up(x):
            out = [x]
            while x in self._forest:
                x = self._forest[x][0]
                out.append(x)
            return out

        pa, pb = up(a), up(b)
        on_b = set(pb)
        lca = next(x for x in pa if x in on_b)
        steps = []
        x = a
        while x != lca:
            y, r = self._forest[x]
            steps.append((x, y, r))
            x = y
        tail = []
        x = b
        while x != lca:
            y, r = self._forest[x]
            tail.append((y, x, r))
            x = y
        return steps + tail[::-1]


# ---------------------------------------------------------------------------
# bounded equational reasoning over a presentation

def expand_universe(sig: Signature, seeds, depth, limit=MAX_UNIVERSE):
    """Seeds plus all terms of depth <= ``depth`` built from them and the
    function symbols; stops early (flagged) at ``limit`` terms."""
    universe = {}
    for t in seeds:
        for s in _subterms(t):
            universe.setdefault(s, None)
    truncated = False
    level = 0
    while level < depth:
        by_sort = {}
        for t in universe:
            by_sort.setdefault(t.sort, []).append(t)
        new = []
        for name, args, res in sig.functions:
            for tup in itertools.product(*(by_sort.get(s, []) for s in args)):
                t = App(name, tuple(tup), res)
                if t not in universe and term_depth(t) <= depth:
                    new.append(t)
        if not new:
            break
        for t in new:
            if len(universe) >= limit:
                truncated = True
                break
            universe.setdefault(t, None)
        level += 1
        if truncated:
            break
    return list(universe), truncated


def _subterms(t):
    if isinstance(t, App):
        for a in t.args:
            yield from _subterms(a)
    yield t


class EqEngine:
    """Congruence closure over ``hyps`` and instances of the theory's
    unconditional equations, on a depth-bounded term universe."""

    def __init__(self, sig: Signature, context, hyps, depth, theory=None, extra=()):
        self.sig = sig
        self.context = tuple(context)
        self.hyps = tuple(hyps)
        self.depth = depth
        self.axioms = equational_axioms(theory)
        seeds = list(self.context)
        for e in self.hyps:
            seeds += [e.lhs, e.rhs]
        seeds += list(extra)
        seeds += [App(n, (), r) for n, a, r in sig.functions if not a]
        top = max([depth] + [term_depth(t) for t in seeds])
        universe, self.truncated = expand_universe(sig, seeds, top)
        self.cc = CongruenceClosure()
        for t in universe:
            self.cc.add(t)
        for i, e in enumerate(self.hyps):
            self.cc.merge(e.lhs, e.rhs, ("hyp", i))
        self._saturate()

    def _saturate(self):
        changed = True
        while changed:
            changed = False
            for ax in self.axioms:
                for l, r in ((ax.lhs, ax.rhs), (ax.rhs, ax.lhs)):
                    for t in list(self.cc.terms):
                        sigma = match(l, t)
                        if sigma is None:
                            continue
                        if any(v not in sigma for v in term_vars(r)):
                            continue
                        other = subst_term(r, sigma)
                        if other not in self.cc._known:
                            continue
                        if not self.cc.same(t, other):
                            full = self._complete(ax, sigma)
                            if full is None:
                                continue
                            lhs, rhs = subst_term(ax.lhs, full), subst_term(ax.rhs, full)
                            self.cc.merge(lhs, rhs, ("ax", ax, tuple(full.items())))
                            changed = True

    def _complete(self, ax, sigma):
        full = dict(sigma)
        for v in ax.context:
            if v not in full:
                pick = next((t for t in self.cc.terms if t.sort == v.sort), None)
                if pick is None:
                    return None
                full[v] = pick
        return full

    def add_terms(self, *ts):
        before = len(self.cc.terms)
        for t in ts:
            self.cc.add(t)
        if len(self.cc.terms) != before:
            self._saturate()

    def equal(self, t, s) -> bool:
        self.add_terms(t, s)
        return self.cc.same(t, s)


def provable_eq(sig: Signature, context, hyps, t, s, depth, theory=None) -> str:
    """``"yes"`` when ``And(hyps) |- t = s`` follows by congruence reasoning
    within the bound, else ``"unknown"``."""
    eng = EqEngine(sig, context, hyps, depth, theory, extra=(t, s))
    return "yes" if eng.cc.same(t, s) else "unknown"


# ---------------------------------------------------------------------------
# certificates

class _Certifier:
    def __init__(self, theory: Theory, context, hyps):
        self.b = ProofBuilder(theory)
        self.ctx = tuple(context)
        self.ant = And(tuple(Eq(e.lhs, e.rhs) for e in hyps))
        self.hyps = tuple(hyps)
        self._memo = {}
        names = {v.name for v in self.ctx}
        self._euclid = {}
        self._names = names

    def _fresh(self, sort, n, tag):
        out, avoid = [], set(self._names)
        for i in range(n):
            v = fresh_var(Var(f"{tag}{i}", sort), avoid)
            avoid.add(v.name)
            out.append(v)
        return out

    def top(self):
        return self.b.conj([], antecedent=self.ant, context=self.ctx)

    def refl(self, t):
        key = ("refl", t)
        if key not in self._memo:
            (z,) = self._fresh(t.sort, 1, "z")
            base = self.b.add("EqRefl", var=z)
            inst = self.b.add("Substitution", (base,), subst={z: t}, context=self.ctx)
            self._memo[key] = self.b.cut(self.top(), inst)
        return self._memo[key]

    def _euclid_schema(self, sort):
        """And[u=v, u=w] |- v = w"""
        if sort not in self._euclid:
            u, v, w = self._fresh(sort, 3, "u")
            self._euclid[sort] = (self.b.add("EqSubst", xs=(u,), ys=(v,), formula=Eq(u, w),
                                             context=(u, v, w)), (u, v, w))
        return self._euclid[sort]

    def euclid(self, ab, ac, a, b, c):
        """From proofs of a = b and a = c derive b = c."""
        schema, (u, v, w) = self._euclid_schema(a.sort)
        inst = self.b.add("Substitution", (schema,), subst={u: a, v: b, w: c}, context=self.ctx)
        return self.b.cut(self.b.conj([ab, ac]), inst)

    def sym(self, p, a, b):
        return self.euclid(p, self.refl(a), a, b, a)

    def trans(self, p, q, a, b, c):
        return self.euclid(self.sym(p, a, b), q, b, a, c)

    def cong(self, arg_proofs, s, t):
        """From proofs of s_i = t_i derive f(s) = f(t)."""
        if s == t:
            return self.refl(s)
        n = len(s.args)
        key = ("cong", s.fn, n, tuple(a.sort for a in s.args), s.sort)
        if key not in self._memo:
            us = self._fresh_sorts([a.sort for a in s.args], "u")
            vs = self._fresh_sorts([a.sort for a in s.args], "v", avoid=us)
            ws = self._fresh_sorts([a.sort for a in s.args], "w", avoid=us + vs)
            phi = Eq(App(s.fn, tuple(ws), s.sort), App(s.fn, tuple(us), s.sort))
            node = self.b.add("EqSubst", xs=tuple(us), ys=tuple(vs), formula=phi,
                              context=tuple(us + vs + ws))
            self._memo[key] = (node, us, vs, ws)
        node, us, vs, ws = self._memo[key]
        sigma = dict(zip(us, s.args)) | dict(zip(vs, t.args)) | dict(zip(ws, s.args))
        inst = self.b.add("Substitution", (node,), subst=sigma, context=self.ctx)
        return self.b.cut(self.b.conj(list(arg_proofs) + [self.refl(s)]), inst)

    def _fresh_sorts(self, sorts, tag, avoid=()):
        out, names = [], set(self._names) | {v.name for v in avoid}
        for i, s in enumerate(sorts):
            v = fresh_var(Var(f"{tag}{i}", s), names)
            names.add(v.name)
            out.append(v)
        return out

    def hyp(self, i):
        return self.b.proj(self.ant, i, self.ctx)

    def axiom(self, ax: EqAxiom, sigma):
        base = self.b.add("Axiom", name=ax.name)
        seq = self.b.seq(base)
        step = base
        e = _unwrap_eq(seq.consequent)
        if seq.consequent != e:
            step = self.b.cut(step, self._unwrap_proof(seq.consequent, seq.context))
        inst = self.b.add("Substitution", (step,), subst=dict(sigma), context=self.ctx)
        return self.b.cut(self.top(), inst)

    def _unwrap_proof(self, f, ctx):
        """f |- the equation inside f"""
        if isinstance(f, Eq):
            return self.b.identity(f, ctx)
        if isinstance(f, And):
            return self.b.cut(self.b.proj(f, 0, ctx), self._unwrap_proof(f.parts[0], ctx))
        if isinstance(f, Or):
            return self.b.cases([self._unwrap_proof(f.parts[0], ctx)])
        if isinstance(f, Ex):
            return self.b.add("ExistsElim", (self._unwrap_proof(f.body, ctx),), vars=())
        raise ValueError("not a wrapped equation")


def certify(theory: Theory, context, hyps, t, s, depth) -> Proof | None:
    """A calculus proof of ``And(hyps) |- t = s`` in ``context``, or None
    when congruence closure does not find the equation."""
    eng = EqEngine(theory.signature, context, hyps, depth, theory, extra=(t, s))
    if not eng.cc.same(t, s):
        return None
    c = _Certifier(theory, context, hyps)
    cc = eng.cc
    memo = {}

    def prove(a, b):
        if (a, b) in memo:
            return memo[(a, b)]
        if a == b:
            return c.refl(a)
        acc = None
        for x, y, reason in cc.explain(a, b):
            step = edge(x, y, reason)
            acc = step if acc is None else c.trans(acc, step, a, x, y)
        memo[(a, b)] = acc
        return acc

    def edge(x, y, reason):
        kind = reason[0]
        if kind == "hyp":
            e = eng.hyps[reason[1]]
            p = c.hyp(reason[1])
            return p if (e.lhs, e.rhs) == (x, y) else c.sym(p, e.lhs, e.rhs)
        if kind == "ax":
            ax, sigma = reason[1], dict(reason[2])
            lhs, rhs = subst_term(ax.lhs, sigma), subst_term(ax.rhs, sigma)
            p = c.axiom(ax, sigma)
            return p if (lhs, rhs) == (x, y) else c.sym(p, lhs, rhs)
        # congruence: x and y share the head symbol
        return c.cong([prove(p, q) for p, q in zip(x.args, y.args)], x, y)

    root = prove(t, s)
    return c.b.proof(root, name="equation")
