"""Text syntax for formulas, sequents and ``.geo`` theories.

Grammar (whitespace insensitive, ``#`` starts a comment only at line start
or after whitespace)::

    theory   := decl*
    decl     := 'sort' NAME
              | 'func' NAME ':' sorts? '->' NAME
              | 'rel'  NAME ':' sorts?
              | 'axiom' NAME ':' sequent
    sequent  := formula '|-' '[' binders? ']' formula
    formula  := 'And' '[' formulas? ']' | 'Or' '[' formulas? ']'
              | 'Ex' binders '.' formula
              | '(' formula ')'
              | NAME '(' terms? ')'  | NAME        -- relation atom
              | term '=' term
    binders  := NAME (':' NAME)? (',' NAME (':' NAME)?)*
    term     := NAME (':' NAME)? | NAME '(' terms? ')'

Variables take their sort from a binder, the sequent context, an inline
``x:S`` annotation, or the argument position they occupy.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (And, App, Eq, Ex, Or, Rel, Sequent, Signature, SortError,
                     SyntaxError_, Theory, Var)


class ParseError(SyntaxError_):
    """Lexical, syntactic or sort error.  ``offset`` is the 1-based column."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.reason = message


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<turnstile>\|-|⊢)
  | (?P<arrow>->|→)
  | (?P<name>[^\W\d][\w#'₀-₉]*)
  | (?P<num>\d+)
  | (?P<punct>[\[\](),.:=])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    pos: int


def tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        if kind == "comment" and pos > 0 and not text[pos - 1].isspace():
            raise ParseError("unexpected character '#'", pos + 1)
        if kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(Tok("eof", "", len(text)))
    return toks


# raw (untyped) syntax produced by the parser, elaborated against a signature

@dataclass
class RName:
    name: str
    sort: str | None
    pos: int


@dataclass
class RApp:
    fn: str
    args: list
    pos: int


@dataclass
class RAtom:
    name: str
    args: list
    pos: int


@dataclass
class REq:
    lhs: object
    rhs: object
    pos: int


@dataclass
class RJunc:
    kind: str
    parts: list
    pos: int


@dataclass
class REx:
    binders: list
    body: object
    pos: int


KEYWORDS = {"And", "Or", "Ex", "sort", "func", "rel", "axiom"}


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        what = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{msg}, found {what}", tok.pos + 1)

    def expect(self, text):
        if self.tok.text != text:
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self):
        if self.tok.kind != "name":
            self.error("expected a name")
        t = self.tok
        self.i += 1
        return t

    # -- formulas

    def formula(self):
        t = self.tok
        if t.kind == "name" and t.text in ("And", "Or") and self.peek().text == "[":
            self.i += 2
            parts = []
            if self.tok.text != "]":
                parts.append(self.formula())
                while self.tok.text == ",":
                    self.i += 1
                    parts.append(self.formula())
            self.expect("]")
            return RJunc(t.text, parts, t.pos)
        if t.kind == "name" and t.text == "Ex":
            self.i += 1
            binders = [] if self.tok.text == "." else self.binders()
            self.expect(".")
            return REx(binders, self.formula(), t.pos)
        if t.text == "(":
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        if t.kind == "name" and t.text in ("true", "⊤"):
            self.i += 1
            return RJunc("And", [], t.pos)
        if t.kind == "name" and t.text in ("false", "⊥"):
            self.i += 1
            return RJunc("Or", [], t.pos)
        if t.kind != "name":
            self.error("expected a formula")
        lhs = self.term()
        if self.tok.text == "=":
            op = self.expect("=")
            return REq(lhs, self.term(), op.pos)
        if isinstance(lhs, RName):
            if lhs.sort is not None:
                self.error("expected '='")
            return RAtom(lhs.name, [], lhs.pos)
        return RAtom(lhs.fn, lhs.args, lhs.pos)

    def binders(self):
        out = [self.binder()]
        while self.tok.text == ",":
            self.i += 1
            out.append(self.binder())
        return out

    def binder(self):
        n = self.name()
        sort = None
        if self.tok.text == ":":
            self.i += 1
            sort = self.name().text
        return RName(n.text, sort, n.pos)

    def term(self):
        n = self.name()
        if n.text in KEYWORDS:
            self.error("expected a term", n)
        if self.tok.text == "(":
            self.i += 1
            args = []
            if self.tok.text != ")":
                args.append(self.term())
                while self.tok.text == ",":
                    self.i += 1
                    args.append(self.term())
            self.expect(")")
            return RApp(n.text, args, n.pos)
        sort = None
        if self.tok.text == ":" and self.peek().kind == "name":
            self.i += 1
            sort = self.name().text
        return RName(n.text, sort, n.pos)

    def sequent(self):
        ant = self.formula()
        self.expect("|-") if self.tok.text == "|-" else self.expect("⊢")
        self.expect("[")
        ctx = []
        if self.tok.text != "]":
            ctx = self.binders()
        self.expect("]")
        con = self.formula()
        return ant, ctx, con

    def end(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")


# -- elaboration

class _Elab:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.free = {}

    def err(self, msg, pos):
        raise ParseError(msg, pos + 1)

    def sort_ok(self, s, pos):
        if s not in self.sig.sorts:
            self.err(f"unknown sort {s!r}", pos)

    def var(self, r: RName, env, expected):
        if r.sort is not None:
            self.sort_ok(r.sort, r.pos)
        if r.name in env:
            v = env[r.name]
        elif r.name in self.free:
            v = self.free[r.name]
        elif self.sig.has_function(r.name):
            argsorts, res = self.sig.function(r.name)
            if argsorts:
                self.err(f"function {r.name} needs {len(argsorts)} argument(s)", r.pos)
            t = App(r.name, (), res)
            if expected is not None and res != expected:
                self.err(f"{r.name} has sort {res}, expected {expected}", r.pos)
            return t
        else:
            sort = r.sort or expected
            if sort is None:
                return None
            v = Var(r.name, sort)
            self.free[r.name] = v
        if r.sort is not None and r.sort != v.sort:
            self.err(f"variable {r.name} annotated {r.sort} but has sort {v.sort}", r.pos)
        if expected is not None and v.sort != expected:
            self.err(f"variable {r.name} has sort {v.sort}, expected {expected}", r.pos)
        return v

    def term(self, r, env, expected):
        if isinstance(r, RName):
            return self.var(r, env, expected)
        if not self.sig.has_function(r.fn):
            self.err(f"unknown function symbol {r.fn!r}", r.pos)
        argsorts, res = self.sig.function(r.fn)
        if len(argsorts) != len(r.args):
            self.err(f"{r.fn} expects {len(argsorts)} argument(s), got {len(r.args)}", r.pos)
        if expected is not None and res != expected:
            self.err(f"{r.fn}(...) has sort {res}, expected {expected}", r.pos)
        args = []
        for a, s in zip(r.args, argsorts):
            t = self.term(a, env, s)
            args.append(t)
        return App(r.fn, tuple(args), res)

    def formula(self, r, env):
        if isinstance(r, RJunc):
            parts = tuple(self.formula(p, env) for p in r.parts)
            return And(parts) if r.kind == "And" else Or(parts)
        if isinstance(r, REx):
            inner = dict(env)
            vs = []
            for b in r.binders:
                sort = b.sort or self._infer_bound(b.name, r.body)
                if sort is None:
                    self.err(f"cannot infer the sort of bound variable {b.name}", b.pos)
                self.sort_ok(sort, b.pos)
                v = Var(b.name, sort)
                if v in vs:
                    self.err(f"variable {b.name} bound twice", b.pos)
                vs.append(v)
                inner[b.name] = v
            return Ex(tuple(vs), self.formula(r.body, inner))
        if isinstance(r, RAtom):
            if not self.sig.has_relation(r.name):
                self.err(f"unknown relation symbol {r.name!r}", r.pos)
            argsorts = self.sig.relation(r.name)
            if len(argsorts) != len(r.args):
                self.err(f"{r.name} expects {len(argsorts)} argument(s), got {len(r.args)}", r.pos)
            return Rel(r.name, tuple(self.term(a, env, s) for a, s in zip(r.args, argsorts)))
        if isinstance(r, REq):
            lhs = self.term(r.lhs, env, None)
            rhs = self.term(r.rhs, env, lhs.sort if lhs is not None else None)
            if lhs is None:
                if rhs is None:
                    self.err("cannot infer the sort of either side of '='", r.pos)
                lhs = self.term(r.lhs, env, rhs.sort)
            if lhs.sort != rhs.sort:
                self.err(f"equality between sorts {lhs.sort} and {rhs.sort}", r.pos)
            return Eq(lhs, rhs)
        raise AssertionError(r)

    def _infer_bound(self, name, body):
        """Sort of ``name`` from its first argument position in ``body``."""
        found = []

        def term(r, expected):
            if found:
                return
            if isinstance(r, RName):
                if r.name == name:
                    if r.sort:
                        found.append(r.sort)
                    elif expected:
                        found.append(expected)
                return
            if self.sig.has_function(r.fn):
                argsorts, _ = self.sig.function(r.fn)
                for a, s in zip(r.args, argsorts):
                    term(a, s)

        def form(r):
            if found:
                return
            if isinstance(r, RJunc):
                for p in r.parts:
                    form(p)
            elif isinstance(r, REx):
                if any(b.name == name for b in r.binders):
                    return
                form(r.body)
            elif isinstance(r, RAtom):
                if self.sig.has_relation(r.name):
                    for a, s in zip(r.args, self.sig.relation(r.name)):
                        term(a, s)
            elif isinstance(r, REq):
                for side, other in ((r.lhs, r.rhs), (r.rhs, r.lhs)):
                    exp = None
                    if isinstance(other, RApp) and self.sig.has_function(other.fn):
                        exp = self.sig.function(other.fn)[1]
                    elif isinstance(other, RName) and other.sort:
                        exp = other.sort
                    elif isinstance(other, RName) and self.sig.has_function(other.name):
                        exp = self.sig.function(other.name)[1]
                    term(side, exp)

        form(body)
        return found[0] if found else None

    def context(self, binders, ant, con):
        ctx = []
        pending = []
        for b in binders:
            if b.sort is not None:
                self.sort_ok(b.sort, b.pos)
                v = Var(b.name, b.sort)
                self.free[b.name] = v
                ctx.append(v)
            else:
                pending.append(b)
                ctx.append(b)
        if pending:
            for b in pending:
                sort = (self._infer_bound(b.name, ant)
                        or self._infer_bound(b.name, con))
                if sort is None:
                    self.err(f"cannot infer the sort of context variable {b.name}", b.pos)
                self.free[b.name] = Var(b.name, sort)
            ctx = [self.free[c.name] if isinstance(c, RName) else c for c in ctx]
        names = [v.name for v in ctx]
        for b, n in zip(binders, names):
            if names.count(n) > 1:
                self.err(f"context repeats variable {n}", b.pos)
        return tuple(ctx)


def _elab_sequent(sig, ant, ctx_binders, con, pos_after):
    e = _Elab(sig)
    ctx = e.context(ctx_binders, ant, con)
    a = e.formula(ant, {})
    c = e.formula(con, {})
    extra = [v for v in e.free.values() if v not in ctx]
    if extra:
        raise ParseError("context does not cover free variable(s) "
                         + ", ".join(v.name for v in extra), pos_after + 1)
    return Sequent(a, c, ctx)


def parse_formula(text: str, sig: Signature, env=None):
    """Parse a formula; ``env`` optionally maps free variable names to sorts."""
    p = _Parser(text)
    raw = p.formula()
    p.end()
    e = _Elab(sig)
    for n, s in (env or {}).items():
        e.free[n] = Var(n, s)
    return e.formula(raw, {})


def parse_sequent(text: str, sig: Signature) -> Sequent:
    p = _Parser(text)
    ant, ctx, con = p.sequent()
    p.end()
    return _elab_sequent(sig, ant, ctx, con, len(text))


def parse_term(text: str, sig: Signature, env=None):
    p = _Parser(text)
    raw = p.term()
    p.end()
    e = _Elab(sig)
    for n, s in (env or {}).items():
        e.free[n] = Var(n, s)
    t = e.term(raw, {}, None)
    if t is None:
        raise ParseError("cannot infer the sort of the term", 1)
    return t


def parse_theory(text: str) -> Theory:
    p = _Parser(text)
    sorts, fns, rels, raw_axioms = [], [], [], []
    while p.tok.kind != "eof":
        kw = p.name()
        if kw.text == "sort":
            sorts.append(p.name().text)
        elif kw.text in ("func", "rel"):
            n = p.name().text
            p.expect(":")
            args = []
            if p.tok.kind == "name":
                args.append(p.name().text)
                while p.tok.text == ",":
                    p.i += 1
                    args.append(p.name().text)
            if kw.text == "func":
                p.expect("->") if p.tok.text == "->" else p.expect("→")
                fns.append((n, tuple(args), p.name().text))
            else:
                rels.append((n, tuple(args)))
        elif kw.text == "axiom":
            n = p.name().text
            p.expect(":")
            start = p.tok.pos
            ant, ctx, con = p.sequent()
            raw_axioms.append((n, ant, ctx, con, start))
        else:
            p.error("expected 'sort', 'func', 'rel' or 'axiom'", kw)
    try:
        sig = Signature(sorts, fns, rels)
    except SortError as exc:
        raise ParseError(str(exc), 1) from None
    axioms = []
    for n, ant, ctx, con, start in raw_axioms:
        axioms.append((n, _elab_sequent(sig, ant, ctx, con, start)))
    names = [n for n, _ in axioms]
    if len(set(names)) != len(names):
        raise ParseError("duplicate axiom name", 1)
    return Theory(sig, tuple(axioms))


# ---------------------------------------------------------------------------
# printing

def format_term(t, annotate=None):
    if isinstance(t, Var):
        if annotate is not None and t not in annotate:
            annotate.add(t)
            return f"{t.name}:{t.sort}"
        return t.name
    if not t.args:
        return t.fn
    return f"{t.fn}({', '.join(format_term(a, annotate) for a in t.args)})"


def format_formula(f, annotate_free=False):
    """Print ``f``; with ``annotate_free`` the first occurrence of each free
    variable carries its sort so the text re-parses without a context."""
    seen = set() if annotate_free else None
    return _fmt(f, seen, frozenset())


def _fmt(f, seen, bound):
    def term(t):
        if seen is None:
            return format_term(t)
        return _fmt_term(t, seen, bound)

    match f:
        case Rel(name, args):
            if not args:
                return name
            return f"{name}({', '.join(term(a) for a in args)})"
        case Eq(l, r):
            return f"{term(l)} = {term(r)}"
        case And(parts):
            return "And[" + ", ".join(_fmt(p, seen, bound) for p in parts) + "]"
        case Or(parts):
            return "Or[" + ", ".join(_fmt(p, seen, bound) for p in parts) + "]"
        case Ex(vs, body):
            if not vs:
                # an empty binder list has no surface syntax; keep the shape
                return "Ex. (" + _fmt(body, seen, bound) + ")"
            bs = ", ".join(f"{v.name}:{v.sort}" for v in vs)
            return f"Ex {bs}. (" + _fmt(body, seen, bound | set(vs)) + ")"
    raise SyntaxError_(f"not a formula: {f!r}")


def _fmt_term(t, seen, bound):
    if isinstance(t, Var):
        if t not in bound and t not in seen:
            seen.add(t)
            return f"{t.name}:{t.sort}"
        return t.name
    if not t.args:
        return t.fn
    return f"{t.fn}({', '.join(_fmt_term(a, seen, bound) for a in t.args)})"


def format_sequent(s: Sequent) -> str:
    ctx = ", ".join(f"{v.name}:{v.sort}" for v in s.context)
    return f"{format_formula(s.antecedent)} |- [{ctx}] {format_formula(s.consequent)}"


def format_theory(t: Theory) -> str:
    lines = [f"sort {s}" for s in t.signature.sorts]
    for n, a, r in t.signature.functions:
        lines.append(f"func {n} : {', '.join(a)} -> {r}".replace(":  ->", ": ->"))
    for n, a in t.signature.relations:
        lines.append(f"rel {n} : {', '.join(a)}".rstrip())
    for n, s in t.axioms:
        lines.append(f"axiom {n}: {format_sequent(s)}")
    return "\n".join(lines) + "\n"
