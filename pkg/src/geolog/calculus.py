"""Proof objects and a checker for the geometric sequent calculus.

A proof is a list of nodes in topological order.  Each node records the
sequent it claims and the rule application that should produce it; the
checker recomputes every conclusion from the premises and the payload.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .syntax import (TOP, And, ContextError, Eq, Ex, Or, Sequent, SyntaxError_,
                     Theory, Var, alpha_eq, exists, free_vars, ordered_free_vars,
                     sequent_alpha_eq, sequent_eq, sequent_key, substitute,
                     term_vars)


class ProofError(Exception):
    """A rule application that does not go through."""
    kind = "ProofError"

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info


class SchemaMismatch(ProofError):
    kind = "SchemaMismatch"


class SideConditionViolated(ProofError):
    kind = "SideConditionViolated"


class CalculusContextError(ProofError):
    kind = "ContextError"


class UnknownAxiom(ProofError):
    kind = "UnknownAxiom"


class MissingPremise(ProofError):
    kind = "MissingPremise"


class BarNotValid(ProofError):
    kind = "BarNotValid"


class FVConditionViolated(ProofError):
    kind = "FVConditionViolated"


class RuleDisabled(ProofError):
    kind = "RuleDisabled"


class MalformedProof(ProofError):
    kind = "MalformedProof"


RULES = ("Identity", "Substitution", "Cut", "EqRefl", "EqSubst", "ConjProj",
         "ConjIntro", "DisjInj", "DisjElim", "ExistsIntro", "ExistsElim",
         "SmallDistrib", "Frobenius", "RuleT", "Axiom")


@dataclass(frozen=True)
class TreeInstance:
    """Finite data for one application of rule T.

    Nodes are tuples over ``range(branching)`` of length at most ``height``.
    ``bar`` holds the minimal elements of a bar.  ``fresh`` maps a non-root
    node to the variables it introduces (absent means none).
    """
    branching: int
    height: int
    formulas: dict
    bar: frozenset
    fresh: dict = field(default_factory=dict)
    limit_levels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bar", frozenset(tuple(b) for b in self.bar))
        object.__setattr__(self, "formulas", {tuple(k): v for k, v in self.formulas.items()})
        object.__setattr__(self, "fresh", {tuple(k): tuple(v) for k, v in self.fresh.items()})
        object.__setattr__(self, "limit_levels", tuple(self.limit_levels))

    def fresh_at(self, node):
        return self.fresh.get(tuple(node), ())

    def prefix_closure(self):
        out = set()
        for b in self.bar:
            for k in range(len(b) + 1):
                out.add(b[:k])
        return out

    def below_bar(self):
        """Nodes of the prefix closure that are proper prefixes of bar elements."""
        return sorted(n for n in self.prefix_closure() if n not in self.bar)

    def context(self, node):
        return ordered_free_vars(self.formulas[tuple(node)])


def validate_bar(bar, branching, height):
    """Reason why ``bar`` is not the minimal-element set of a bar, else None."""
    bar = [tuple(b) for b in bar]
    for b in bar:
        if len(b) > height:
            return f"node {list(b)} lies above height {height}"
        if any(not 0 <= i < branching for i in b):
            return f"node {list(b)} leaves the {branching}-branching tree"
    bs = set(bar)
    for b in bs:
        for k in range(len(b)):
            if b[:k] in bs:
                return f"{list(b[:k])} and {list(b)} are comparable"
    # every maximal node must have a prefix in the bar; walk the tree instead
    # of listing branching**height sequences
    stack = [()]
    while stack:
        f = stack.pop()
        if f in bs:
            continue
        if len(f) == height:
            return f"branch through {list(f)} misses the bar"
        stack.extend(f + (i,) for i in range(branching))
    return None


def _ctx_check(seq_maker, what):
    try:
        return seq_maker()
    except ContextError as exc:
        raise CalculusContextError(f"{what}: {exc}") from None
    except SyntaxError_ as exc:
        raise SchemaMismatch(f"{what}: {exc}") from None


def _ctx(payload, *formulas):
    ctx = payload.get("context")
    if ctx is None:
        return ordered_free_vars(And(tuple(formulas)))
    return tuple(ctx)


def _arity(rule, premises, n):
    if len(premises) != n:
        raise SchemaMismatch(f"{rule} takes {n} premise(s), got {len(premises)}")


def apply_rule(theory: Theory, rule: str, premises, payload=None) -> Sequent:
    """Conclusion of ``rule`` on the given premise sequents and payload."""
    payload = payload or {}
    premises = list(premises)
    match rule:
        case "Identity":
            _arity(rule, premises, 0)
            phi = payload["formula"]
            return _ctx_check(lambda: Sequent(phi, phi, _ctx(payload, phi)), rule)

        case "Substitution":
            _arity(rule, premises, 1)
            (p,) = premises
            sigma = dict(payload.get("subst", {}))
            for v, t in sigma.items():
                if v not in p.context:
                    raise SchemaMismatch(f"substituted variable {v.name} is not in the premise context")
                if v.sort != t.sort:
                    raise SchemaMismatch(f"substitution of {t} for {v.name} changes sort")
            ctx = tuple(payload["context"])
            needed = {}
            for v in p.context:
                for u in term_vars(sigma.get(v, v)):
                    needed.setdefault(u, None)
            missing = [u.name for u in needed if u not in ctx]
            if missing:
                raise CalculusContextError(
                    "target context omits variable(s) of the substituted terms: " + ", ".join(missing))
            return _ctx_check(lambda: Sequent(substitute(p.antecedent, sigma),
                                              substitute(p.consequent, sigma), ctx), rule)

        case "Cut":
            _arity(rule, premises, 2)
            p, q = premises
            if p.context != q.context:
                raise SchemaMismatch("cut premises live in different contexts")
            if not alpha_eq(p.consequent, q.antecedent):
                raise SchemaMismatch("cut formula differs between the premises")
            return Sequent(p.antecedent, q.consequent, p.context)

        case "EqRefl":
            _arity(rule, premises, 0)
            x = payload["var"]
            if not isinstance(x, Var):
                raise SchemaMismatch("EqRefl needs a variable")
            return Sequent(TOP, Eq(x, x), (x,))

        case "EqSubst":
            _arity(rule, premises, 0)
            xs, ys = tuple(payload["xs"]), tuple(payload["ys"])
            phi = payload["formula"]
            if len(xs) != len(ys) or any(x.sort != y.sort for x, y in zip(xs, ys)):
                raise SideConditionViolated("x and y are not contexts of the same length and type")
            for vs in (xs, ys):
                if not all(isinstance(v, Var) for v in vs) or len(set(vs)) != len(vs):
                    raise SideConditionViolated("x and y must be contexts of distinct variables")
            ant = And(tuple(Eq(x, y) for x, y in zip(xs, ys)) + (phi,))
            con = substitute(phi, dict(zip(xs, ys)))
            ctx = _ctx(payload, ant)
            missing = [v.name for v in (*xs, *ys, *ordered_free_vars(phi)) if v not in ctx]
            if missing:
                raise CalculusContextError("context must contain x, y and FV(phi); missing "
                                           + ", ".join(dict.fromkeys(missing)))
            return _ctx_check(lambda: Sequent(ant, con, ctx), rule)

        case "ConjProj":
            _arity(rule, premises, 0)
            conj, j = payload["formula"], payload["index"]
            if not isinstance(conj, And) or not 0 <= j < len(conj.parts):
                raise SchemaMismatch("ConjProj needs a conjunction and an index into it")
            return _ctx_check(lambda: Sequent(conj, conj.parts[j], _ctx(payload, conj)), rule)

        case "ConjIntro":
            if not premises:
                ant = payload["antecedent"]
                return _ctx_check(lambda: Sequent(ant, TOP, _ctx(payload, ant)), rule)
            p0 = premises[0]
            for q in premises[1:]:
                if q.context != p0.context or not alpha_eq(q.antecedent, p0.antecedent):
                    raise SchemaMismatch("ConjIntro premises must share antecedent and context")
            return Sequent(p0.antecedent, And(tuple(q.consequent for q in premises)), p0.context)

        case "DisjInj":
            _arity(rule, premises, 0)
            disj, j = payload["formula"], payload["index"]
            if not isinstance(disj, Or) or not 0 <= j < len(disj.parts):
                raise SchemaMismatch("DisjInj needs a disjunction and an index into it")
            return _ctx_check(lambda: Sequent(disj.parts[j], disj, _ctx(payload, disj)), rule)

        case "DisjElim":
            if not premises:
                con = payload["consequent"]
                return _ctx_check(lambda: Sequent(Or(()), con, _ctx(payload, con)), rule)
            p0 = premises[0]
            for q in premises[1:]:
                if q.context != p0.context or not alpha_eq(q.consequent, p0.consequent):
                    raise SchemaMismatch("DisjElim premises must share consequent and context")
            return Sequent(Or(tuple(q.antecedent for q in premises)), p0.consequent, p0.context)

        case "ExistsElim":
            _arity(rule, premises, 1)
            (p,) = premises
            ys = tuple(payload["vars"])
            for y in ys:
                if y not in p.context:
                    raise SchemaMismatch(f"{y.name} is not in the premise context")
            clash = [y.name for y in ys if y in free_vars(p.consequent)]
            if clash:
                raise SideConditionViolated(
                    f"variable(s) {', '.join(clash)} free in the consequent", vars=clash)
            xs = tuple(v for v in p.context if v not in ys)
            return _ctx_check(lambda: Sequent(Ex(ys, p.antecedent), p.consequent, xs), rule)

        case "ExistsIntro":
            _arity(rule, premises, 1)
            (p,) = premises
            if not isinstance(p.antecedent, Ex):
                raise SchemaMismatch("ExistsIntro needs an existential antecedent")
            ys, body = p.antecedent.vars, p.antecedent.body
            new = tuple(payload.get("vars") or ys)
            if len(new) != len(ys) or any(a.sort != b.sort for a, b in zip(new, ys)):
                raise SchemaMismatch("renamed binder list does not match the existential")
            if new != ys:
                if set(new) & (free_vars(body) - set(ys)):
                    raise SideConditionViolated("renaming would capture a free variable")
                body = substitute(body, dict(zip(ys, new)))
            clash = [y.name for y in new if y in p.context]
            if clash:
                raise SideConditionViolated(
                    f"bound variable(s) {', '.join(clash)} already in the context", vars=clash)
            return _ctx_check(lambda: Sequent(body, p.consequent, p.context + new), rule)

        case "SmallDistrib":
            _arity(rule, premises, 0)
            phi, psis = payload["formula"], tuple(payload["disjuncts"])
            ant = And((phi, Or(psis)))
            con = Or(tuple(And((phi, psi)) for psi in psis))
            return _ctx_check(lambda: Sequent(ant, con, _ctx(payload, ant)), rule)

        case "Frobenius":
            _arity(rule, premises, 0)
            phi, ys, psi = payload["formula"], tuple(payload["vars"]), payload["body"]
            ant = And((phi, Ex(ys, psi)))
            con = Ex(ys, And((phi, psi)))
            ctx = _ctx(payload, ant)
            clash = [y.name for y in ys if y in ctx]
            if clash:
                raise SideConditionViolated(
                    f"bound variable(s) {', '.join(clash)} in the context", vars=clash)
            return _ctx_check(lambda: Sequent(ant, con, ctx), rule)

        case "Axiom":
            _arity(rule, premises, 0)
            name = payload.get("name")
            for n, s in theory.axioms:
                if n == name:
                    return s
            raise UnknownAxiom(f"no axiom named {name!r}")

        case "RuleT":
            t = payload["tree"]
            nodes = [tuple(n) for n in payload.get("nodes", ())]
            if len(nodes) != len(premises):
                raise SchemaMismatch("RuleT needs one node label per premise")
            return apply_rule_T(theory, t, dict(zip(nodes, premises)))

    raise SchemaMismatch(f"unknown rule {rule!r}")


def rule_T_premise(t: TreeInstance, f) -> Sequent:
    """The sequent rule T demands at a node strictly below the bar."""
    f = tuple(f)
    phi = t.formulas[f]
    kids = [f + (i,) for i in range(t.branching)]
    con = Or(tuple(exists(t.fresh_at(g), t.formulas[g]) for g in kids))
    return Sequent(phi, con, t.context(f))


def rule_T_conclusion(t: TreeInstance) -> Sequent:
    root = t.formulas[()]
    disjuncts = []
    for f in sorted(t.bar):
        chain = [f[:k] for k in range(1, len(f) + 1)]
        vs = tuple(itertools.chain.from_iterable(t.fresh_at(g) for g in chain))
        disjuncts.append(exists(vs, And(tuple(t.formulas[g] for g in chain))))
    return Sequent(root, Or(tuple(disjuncts)), t.context(()))


def check_tree(t: TreeInstance):
    """Raise unless ``t`` satisfies the structural conditions of rule T."""
    if t.branching < 1 or t.height < 1:
        raise BarNotValid("branching and height must be positive")
    if t.limit_levels:
        raise SchemaMismatch(f"limit level(s) {list(t.limit_levels)} cannot occur below a finite height")
    why = validate_bar(t.bar, t.branching, t.height)
    if why:
        raise BarNotValid(why)
    closure = t.prefix_closure()
    for f in sorted(closure):
        if f not in t.formulas:
            raise SchemaMismatch(f"no formula at node {list(f)}")
    for g in sorted(closure):
        if not g:
            continue
        f = g[:-1]
        xs = t.fresh_at(g)
        if len(set(xs)) != len(xs):
            raise FVConditionViolated(f"fresh tuple at {list(g)} repeats a variable", node=g)
        fv_f, fv_g = free_vars(t.formulas[f]), free_vars(t.formulas[g])
        if set(xs) & fv_f:
            raise FVConditionViolated(
                f"fresh variables at {list(g)} already free at {list(f)}", node=g)
        if fv_g != fv_f | set(xs):
            raise FVConditionViolated(
                f"FV at {list(g)} is not FV at {list(f)} plus the fresh tuple", node=g)


def apply_rule_T(theory: Theory, t: TreeInstance, premises: dict) -> Sequent:
    check_tree(t)
    premises = {tuple(k): v for k, v in premises.items()}
    for f in t.below_bar():
        want = rule_T_premise(t, f)
        got = premises.get(f)
        if got is None:
            raise MissingPremise(f"no premise for node {list(f)}", node=f)
        if not sequent_eq(got, want):
            raise SchemaMismatch(f"premise at node {list(f)} does not match the tree", node=f)
    return rule_T_conclusion(t)


# ---------------------------------------------------------------------------
# proofs

@dataclass(frozen=True)
class ProofNode:
    sequent: Sequent
    rule: str
    premises: tuple = ()
    payload: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Proof:
    nodes: tuple
    root: int = None
    theory: str = ""
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if self.root is None:
            object.__setattr__(self, "root", len(self.nodes) - 1)

    @property
    def conclusion(self) -> Sequent:
        return self.nodes[self.root].sequent

    def rules_used(self):
        return {n.rule for n in self.nodes}


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    node: int | None = None
    error: str | None = None
    message: str = ""

    def __bool__(self):
        return self.accepted

    def __str__(self):
        if self.accepted:
            return "accepted"
        return f"rejected(node {self.node}, {self.error}): {self.message}"


def check_proof(theory: Theory, proof: Proof, rules=RULES) -> Verdict:
    """Recheck every node; never raises on bad proofs."""
    allowed = set(rules)
    if not proof.nodes:
        return Verdict(False, None, "MalformedProof", "empty proof")
    if not 0 <= proof.root < len(proof.nodes):
        return Verdict(False, None, "MalformedProof", "root index out of range")
    for i, node in enumerate(proof.nodes):
        try:
            if node.rule not in allowed:
                raise RuleDisabled(f"rule {node.rule} is not part of this calculus")
            for j in node.premises:
                if not isinstance(j, int) or not 0 <= j < i:
                    raise MalformedProof(f"premise reference {j} does not precede node {i}")
            prem = [proof.nodes[j].sequent for j in node.premises]
            got = apply_rule(theory, node.rule, prem, node.payload)
            same = sequent_alpha_eq if node.rule == "Axiom" else sequent_eq
            if not same(node.sequent, got):
                raise SchemaMismatch("recorded sequent differs from the rule's conclusion")
        except ProofError as exc:
            return Verdict(False, i, exc.kind, str(exc))
        except (KeyError, TypeError, ValueError, SyntaxError_) as exc:
            return Verdict(False, i, "MalformedProof", f"{type(exc).__name__}: {exc}")
    return Verdict(True)


class ProofBuilder:
    """Appends checked nodes to a proof, sharing identical steps."""

    def __init__(self, theory: Theory):
        self.theory = theory
        self.nodes = []
        self._memo = {}

    def add(self, rule, premises=(), **payload):
        premises = tuple(premises)
        seq = apply_rule(self.theory, rule, [self.nodes[j].sequent for j in premises], payload)
        key = (rule, premises, sequent_key(seq), seq.context)
        if key in self._memo:
            return self._memo[key]
        self.nodes.append(ProofNode(seq, rule, premises, payload))
        self._memo[key] = len(self.nodes) - 1
        return len(self.nodes) - 1

    def seq(self, i) -> Sequent:
        return self.nodes[i].sequent

    def proof(self, root=None, name="", theory="") -> Proof:
        return Proof(tuple(self.nodes), len(self.nodes) - 1 if root is None else root,
                     theory, name)

    # common shapes

    def identity(self, phi, context):
        return self.add("Identity", formula=phi, context=tuple(context))

    def cut(self, *steps):
        acc = steps[0]
        for s in steps[1:]:
            acc = self.add("Cut", (acc, s))
        return acc

    def proj(self, conj, index, context):
        return self.add("ConjProj", formula=conj, index=index, context=tuple(context))

    def inj(self, disj, index, context):
        return self.add("DisjInj", formula=disj, index=index, context=tuple(context))

    def conj(self, premises, antecedent=None, context=None):
        if not premises:
            return self.add("ConjIntro", antecedent=antecedent, context=tuple(context))
        return self.add("ConjIntro", tuple(premises))

    def cases(self, premises, consequent=None, context=None):
        if not premises:
            return self.add("DisjElim", consequent=consequent, context=tuple(context))
        return self.add("DisjElim", tuple(premises))
