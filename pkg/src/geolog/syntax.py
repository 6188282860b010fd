"""Many-sorted syntax for geometric logic with indexed connectives.

Terms are variables or function applications; formulas are relational
atoms, equalities, finite indexed conjunctions/disjunctions and tuple
existentials.  ``And(())`` is truth and ``Or(())`` is falsity.

All values are immutable and hashable.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union


class SyntaxError_(Exception):
    """Base class for ill-formed syntax (sort errors, bad binders, ...)."""


class SortError(SyntaxError_):
    pass


class ContextError(SyntaxError_):
    pass


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True, order=True)
class Var:
    name: str
    sort: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple
    sort: str

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        if not self.args:
            return self.fn
        return f"{self.fn}({', '.join(map(str, self.args))})"


Term = Union[Var, App]


def term_sort(t: Term) -> str:
    return t.sort


def term_vars(t: Term) -> dict:
    """Variables of ``t`` in order of first occurrence (dict used as ordered set)."""
    out: dict = {}
    _collect_term_vars(t, out)
    return out


def _collect_term_vars(t, out):
    if isinstance(t, Var):
        out.setdefault(t, None)
    else:
        for a in t.args:
            _collect_term_vars(a, out)


def term_depth(t: Term) -> int:
    if isinstance(t, Var) or not t.args:
        return 0
    return 1 + max(term_depth(a) for a in t.args)


def subterms(t: Term) -> Iterable[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


# ---------------------------------------------------------------------------
# formulas

@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class And:
    parts: tuple = ()

    def __post_init__(self):
        if not isinstance(self.parts, tuple):
            object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class Or:
    parts: tuple = ()

    def __post_init__(self):
        if not isinstance(self.parts, tuple):
            object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class Ex:
    vars: tuple
    body: "Formula"

    def __post_init__(self):
        if not isinstance(self.vars, tuple):
            object.__setattr__(self, "vars", tuple(self.vars))
        if len(set(self.vars)) != len(self.vars):
            raise SyntaxError_(f"existential binds a variable twice: {self.vars}")


Formula = Union[Rel, Eq, And, Or, Ex]
ATOMIC = (Rel, Eq)

TOP = And(())
BOT = Or(())


def exists(vs, body):
    """``Ex(vs, body)``, or just ``body`` when ``vs`` is empty."""
    vs = tuple(vs)
    return Ex(vs, body) if vs else body


def is_atomic(f) -> bool:
    return isinstance(f, ATOMIC)


def __str_formula(f):
    from .parsing import format_formula
    return format_formula(f)


for _cls in (Rel, Eq, And, Or, Ex):
    _cls.__str__ = __str_formula


# ---------------------------------------------------------------------------
# signatures, sequents, theories

@dataclass(frozen=True)
class Signature:
    sorts: tuple = ()
    functions: tuple = ()   # (name, argsorts, result)
    relations: tuple = ()   # (name, argsorts)

    def __post_init__(self):
        object.__setattr__(self, "sorts", tuple(self.sorts))
        object.__setattr__(self, "functions",
                           tuple((n, tuple(a), r) for n, a, r in self.functions))
        object.__setattr__(self, "relations",
                           tuple((n, tuple(a)) for n, a in self.relations))
        for kind, names in (("sort", self.sorts),
                            ("function", [f[0] for f in self.functions]),
                            ("relation", [r[0] for r in self.relations])):
            dup = {n for n in names if list(names).count(n) > 1}
            if dup:
                raise SortError(f"duplicate {kind} name(s): {sorted(dup)}")
        declared = set(self.sorts)
        for n, a, r in self.functions:
            for s in (*a, r):
                if s not in declared:
                    raise SortError(f"function {n} mentions undeclared sort {s}")
        for n, a in self.relations:
            for s in a:
                if s not in declared:
                    raise SortError(f"relation {n} mentions undeclared sort {s}")

    def function(self, name):
        for n, a, r in self.functions:
            if n == name:
                return a, r
        raise SortError(f"unknown function symbol {name}")

    def relation(self, name):
        for n, a in self.relations:
            if n == name:
                return a
        raise SortError(f"unknown relation symbol {name}")

    def has_function(self, name):
        return any(n == name for n, _, _ in self.functions)

    def has_relation(self, name):
        return any(n == name for n, _ in self.relations)

    def merge(self, other: "Signature") -> "Signature":
        sorts = list(self.sorts) + [s for s in other.sorts if s not in self.sorts]
        fns = list(self.functions) + [f for f in other.functions if f not in self.functions]
        rels = list(self.relations) + [r for r in other.relations if r not in self.relations]
        return Signature(sorts, fns, rels)


@dataclass(frozen=True)
class Sequent:
    antecedent: Formula
    consequent: Formula
    context: tuple = None

    def __post_init__(self):
        if self.context is None:
            ctx = tuple(ordered_free_vars(And((self.antecedent, self.consequent))))
        else:
            ctx = tuple(self.context)
        object.__setattr__(self, "context", ctx)
        if len(set(ctx)) != len(ctx):
            raise ContextError(f"context repeats a variable: {[str(v) for v in ctx]}")
        names = [v.name for v in ctx]
        if len(set(names)) != len(names):
            raise ContextError("context uses one name at two sorts")
        missing = (free_vars(self.antecedent) | free_vars(self.consequent)) - set(ctx)
        if missing:
            raise ContextError(
                "context does not cover free variable(s) "
                + ", ".join(sorted(v.name for v in missing)))

    def __str__(self):
        from .parsing import format_sequent
        return format_sequent(self)


@dataclass(frozen=True)
class Theory:
    signature: Signature
    axioms: tuple = ()   # (name, Sequent)

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple((n, s) for n, s in self.axioms))
        names = [n for n, _ in self.axioms]
        if len(set(names)) != len(names):
            raise SyntaxError_("duplicate axiom names")
        for n, s in self.axioms:
            check_sequent(self.signature, s)

    def axiom(self, name):
        for n, s in self.axioms:
            if n == name:
                return s
        raise KeyError(name)

    def with_axioms(self, extra):
        return Theory(self.signature, tuple(self.axioms) + tuple(extra))


# ---------------------------------------------------------------------------
# well-formedness

def check_term(sig: Signature, t: Term):
    if isinstance(t, Var):
        if t.sort not in sig.sorts:
            raise SortError(f"variable {t.name} has undeclared sort {t.sort}")
        return
    argsorts, res = sig.function(t.fn)
    if len(argsorts) != len(t.args):
        raise SortError(f"{t.fn} expects {len(argsorts)} argument(s), got {len(t.args)}")
    if res != t.sort:
        raise SortError(f"{t.fn} has result sort {res}, term claims {t.sort}")
    for a, s in zip(t.args, argsorts):
        check_term(sig, a)
        if a.sort != s:
            raise SortError(f"argument {a} of {t.fn} has sort {a.sort}, expected {s}")


def check_formula(sig: Signature, f: Formula):
    match f:
        case Rel(name, args):
            argsorts = sig.relation(name)
            if len(argsorts) != len(args):
                raise SortError(f"{name} expects {len(argsorts)} argument(s), got {len(args)}")
            for a, s in zip(args, argsorts):
                check_term(sig, a)
                if a.sort != s:
                    raise SortError(f"argument {a} of {name} has sort {a.sort}, expected {s}")
        case Eq(l, r):
            check_term(sig, l)
            check_term(sig, r)
            if l.sort != r.sort:
                raise SortError(f"equality between sorts {l.sort} and {r.sort}")
        case And(parts) | Or(parts):
            for p in parts:
                check_formula(sig, p)
        case Ex(vs, body):
            for v in vs:
                check_term(sig, v)
            check_formula(sig, body)
        case _:
            raise SyntaxError_(f"not a formula: {f!r}")


def check_sequent(sig: Signature, s: Sequent):
    for v in s.context:
        check_term(sig, v)
    check_formula(sig, s.antecedent)
    check_formula(sig, s.consequent)


# ---------------------------------------------------------------------------
# free variables

def ordered_free_vars(f: Formula) -> tuple:
    """Free variables of ``f`` in order of first occurrence."""
    out: dict = {}
    _fv(f, frozenset(), out)
    return tuple(out)


def free_vars(f: Formula) -> frozenset:
    return frozenset(ordered_free_vars(f))


def _fv(f, bound, out):
    match f:
        case Rel(_, args):
            for a in args:
                for v in term_vars(a):
                    if v not in bound:
                        out.setdefault(v, None)
        case Eq(l, r):
            for t in (l, r):
                for v in term_vars(t):
                    if v not in bound:
                        out.setdefault(v, None)
        case And(parts) | Or(parts):
            for p in parts:
                _fv(p, bound, out)
        case Ex(vs, body):
            _fv(body, bound | set(vs), out)


def all_var_names(f: Formula) -> set:
    """Every variable name occurring in ``f``, free or bound."""
    names = set()

    def walk(g):
        match g:
            case Rel(_, args):
                for a in args:
                    names.update(v.name for v in term_vars(a))
            case Eq(l, r):
                names.update(v.name for v in term_vars(l))
                names.update(v.name for v in term_vars(r))
            case And(parts) | Or(parts):
                for p in parts:
                    walk(p)
            case Ex(vs, body):
                names.update(v.name for v in vs)
                walk(body)

    walk(f)
    return names


# ---------------------------------------------------------------------------
# fresh names

_SUFFIX = re.compile(r"^(.*?)(?:#(\d+))?$")


def base_name(name: str) -> str:
    return _SUFFIX.match(name).group(1)


def fresh_var(v: Var, avoid) -> Var:
    """``v`` renamed to ``base#k`` with the least ``k`` whose name is not in ``avoid``."""
    base = base_name(v.name)
    for k in itertools.count(1):
        cand = f"{base}#{k}"
        if cand not in avoid:
            return Var(cand, v.sort)


# ---------------------------------------------------------------------------
# substitution

def subst_term(t: Term, sigma: Mapping) -> Term:
    if isinstance(t, Var):
        return sigma.get(t, t)
    if not t.args:
        return t
    return App(t.fn, tuple(subst_term(a, sigma) for a in t.args), t.sort)


def _check_sigma(sigma):
    for v, t in sigma.items():
        if not isinstance(v, Var):
            raise SortError(f"substitution key {v!r} is not a variable")
        if v.sort != t.sort:
            raise SortError(f"cannot substitute {t} of sort {t.sort} for {v.name}:{v.sort}")


def substitute(f: Formula, sigma: Mapping) -> Formula:
    """Capture-avoiding simultaneous substitution of terms for variables."""
    _check_sigma(sigma)
    return _subst(f, dict(sigma))


def _subst(f, sigma):
    if not sigma:
        return f
    match f:
        case Rel(name, args):
            return Rel(name, tuple(subst_term(a, sigma) for a in args))
        case Eq(l, r):
            return Eq(subst_term(l, sigma), subst_term(r, sigma))
        case And(parts):
            return And(tuple(_subst(p, sigma) for p in parts))
        case Or(parts):
            return Or(tuple(_subst(p, sigma) for p in parts))
        case Ex(vs, body):
            fv_body = free_vars(body)
            inner = {v: t for v, t in sigma.items() if v in fv_body and v not in vs}
            if not inner:
                return f
            incoming = set()
            for v, t in inner.items():
                incoming.update(u.name for u in term_vars(t))
            avoid = incoming | all_var_names(body) | {v.name for v in inner}
            new_vs = []
            for v in vs:
                if v.name in incoming:
                    w = fresh_var(v, avoid)
                    avoid.add(w.name)
                    inner[v] = w
                    new_vs.append(w)
                else:
                    new_vs.append(v)
            return Ex(tuple(new_vs), _subst(body, inner))
    raise SyntaxError_(f"not a formula: {f!r}")


def rename_bound(f: Formula, avoid) -> Formula:
    """Rename every bound variable whose name is in ``avoid`` (alpha-conversion)."""
    avoid = set(avoid) | all_var_names(f)
    return _rename_bound(f, set(avoid), set(avoid))


def _rename_bound(f, clash, used):
    match f:
        case And(parts):
            return And(tuple(_rename_bound(p, clash, used) for p in parts))
        case Or(parts):
            return Or(tuple(_rename_bound(p, clash, used) for p in parts))
        case Ex(vs, body):
            ren = {}
            new_vs = []
            for v in vs:
                if v.name in clash:
                    w = fresh_var(v, used)
                    used.add(w.name)
                    ren[v] = w
                    new_vs.append(w)
                else:
                    new_vs.append(v)
            body = _subst(body, ren) if ren else body
            return Ex(tuple(new_vs), _rename_bound(body, clash, used))
        case _:
            return f


# ---------------------------------------------------------------------------
# alpha-equivalence

def alpha_key(f: Formula, env=None):
    """A hashable locally-nameless rendering of ``f``.

    Bound variables become ``(depth, position, sort)`` triples; free variables
    stay as themselves, so two formulas are alpha-equivalent iff their keys
    are equal.
    """
    return _key(f, env or {}, 0)


def _tkey(t, env):
    if isinstance(t, Var):
        return env.get(t, t)
    return (t.fn, t.sort, tuple(_tkey(a, env) for a in t.args))


def _key(f, env, depth):
    match f:
        case Rel(name, args):
            return ("R", name, tuple(_tkey(a, env) for a in args))
        case Eq(l, r):
            return ("=", _tkey(l, env), _tkey(r, env))
        case And(parts):
            return ("&", tuple(_key(p, env, depth) for p in parts))
        case Or(parts):
            return ("|", tuple(_key(p, env, depth) for p in parts))
        case Ex(vs, body):
            inner = dict(env)
            for i, v in enumerate(vs):
                inner[v] = ("#bound", depth, i, v.sort)
            return ("E", tuple(v.sort for v in vs), _key(body, inner, depth + 1))
    raise SyntaxError_(f"not a formula: {f!r}")


def alpha_eq(f: Formula, g: Formula) -> bool:
    return alpha_key(f) == alpha_key(g)


def sequent_key(s: Sequent):
    """Alpha-key of a sequent with its context read as a positional binder."""
    env = {v: ("#ctx", i, v.sort) for i, v in enumerate(s.context)}
    return (tuple(v.sort for v in s.context),
            _key(s.antecedent, env, 0), _key(s.consequent, env, 0))


def sequent_alpha_eq(s: Sequent, t: Sequent) -> bool:
    """Equality up to bound renaming and positional renaming of the context."""
    return sequent_key(s) == sequent_key(t)


def sequent_eq(s: Sequent, t: Sequent) -> bool:
    """Same context tuple, alpha-equal antecedent and consequent."""
    return (s.context == t.context and alpha_eq(s.antecedent, t.antecedent)
            and alpha_eq(s.consequent, t.consequent))


def substitute_sequent(s: Sequent, sigma: Mapping, context) -> Sequent:
    return Sequent(substitute(s.antecedent, sigma), substitute(s.consequent, sigma),
                   tuple(context))


# ---------------------------------------------------------------------------
# canonical forms

class NotCanonical(SyntaxError_):
    pass


def _nf(f):
    """Disjunct list ``[(bound_vars, atoms)]`` equivalent to ``f``.

    Bound variables in each disjunct are pairwise distinct and disjoint from
    the disjunct's free variables.
    """
    match f:
        case Rel() | Eq():
            return [((), (f,))]
        case Or(parts):
            out = []
            for p in parts:
                out.extend(_nf(p))
            return out
        case And(parts):
            acc = [((), ())]
            for p in parts:
                acc = [_conj(d1, d2) for d1, d2 in itertools.product(acc, _nf(p))]
            return acc
        case Ex(vs, body):
            out = []
            for ws, atoms in _nf(body):
                out.append(_prenex(vs, ws, atoms))
            return out
    raise SyntaxError_(f"not a formula: {f!r}")


def _atoms_fv(atoms, bound):
    return [v for v in ordered_free_vars(And(atoms)) if v not in bound]


def _conj(d1, d2):
    vs1, a1 = d1
    vs2, a2 = d2
    free1 = {v.name for v in _atoms_fv(a1, set(vs1))}
    free2 = {v.name for v in _atoms_fv(a2, set(vs2))}
    used = free1 | free2 | {v.name for v in vs1} | {v.name for v in vs2}
    # Frobenius: a binder may move outward only if it captures nothing free
    # in the other conjunct; otherwise rename it first.
    ren1 = {}
    new1 = []
    for v in vs1:
        if v.name in free2:
            w = fresh_var(v, used)
            used.add(w.name)
            ren1[v] = w
            new1.append(w)
        else:
            new1.append(v)
    names1 = {v.name for v in new1}
    ren2 = {}
    new2 = []
    for v in vs2:
        if v.name in free1 or v.name in names1:
            w = fresh_var(v, used)
            used.add(w.name)
            ren2[v] = w
            new2.append(w)
        else:
            new2.append(v)
    a1 = tuple(_subst(a, ren1) for a in a1) if ren1 else a1
    a2 = tuple(_subst(a, ren2) for a in a2) if ren2 else a2
    return (tuple(new1) + tuple(new2), a1 + a2)


def _prenex(vs, ws, atoms):
    # inner binders that shadow an outer one get renamed; outer binders that
    # end up unused are kept so the shape stays literal
    names = {v.name for v in vs}
    used = names | {v.name for v in ws} | {v.name for v in ordered_free_vars(And(atoms))}
    ren = {}
    new_ws = []
    for w in ws:
        if w.name in names:
            u = fresh_var(w, used)
            used.add(u.name)
            ren[w] = u
            new_ws.append(u)
        else:
            new_ws.append(w)
    atoms = tuple(_subst(a, ren) for a in atoms) if ren else atoms
    # occurrences of an outer variable inside shadowed positions were renamed
    # above, so the remaining free occurrences of vs are the bound ones
    return (tuple(vs) + tuple(new_ws), atoms)


def canonical_form(f: Formula) -> Formula:
    """Normalize to ``Or[Ex[xs](And[atoms]), ...]``."""
    return Or(tuple(Ex(vs, And(atoms)) for vs, atoms in _nf(f)))


def is_canonical(f: Formula) -> bool:
    return (isinstance(f, Or)
            and all(isinstance(d, Ex) and isinstance(d.body, And)
                    and all(is_atomic(a) for a in d.body.parts)
                    for d in f.parts))


def canonical_sequent(s: Sequent) -> Sequent:
    ant = _nf(s.antecedent)
    if len(ant) != 1:
        raise NotCanonical("antecedent not conjunctive-atomic after normalization: "
                           f"{len(ant)} disjuncts, split the sequent")
    vs, atoms = ant[0]
    if vs:
        raise NotCanonical("antecedent not conjunctive-atomic after normalization: "
                           "it carries an existential, move it into the context")
    return Sequent(And(atoms), canonical_form(s.consequent), s.context)


def is_canonical_sequent(s: Sequent) -> bool:
    return (isinstance(s.antecedent, And)
            and all(is_atomic(a) for a in s.antecedent.parts)
            and is_canonical(s.consequent))


def formula_depth(f: Formula) -> int:
    match f:
        case Rel() | Eq():
            return 0
        case And(parts) | Or(parts):
            return 1 + max((formula_depth(p) for p in parts), default=0)
        case Ex(_, body):
            return 1 + formula_depth(body)
    raise SyntaxError_(f"not a formula: {f!r}")
