"""Proof generators for the schemata that need rule T.

``derive_distributivity`` proves
``And_i Or_j phi_ij |- Or_{f in d^g} And_i phi_{i f(i)}`` and
``derive_choice`` proves ``And_i Ex x_i. phi(x_i) |- Ex x_0..x_{g-1}. And_i phi(x_i)``.
Both build a rule-T tree whose premises come from the finitary rules.
"""
from __future__ import annotations

import itertools

from .calculus import Proof, ProofBuilder, TreeInstance
from .syntax import (And, Ex, Or, Rel, Sequent, Signature, Theory, Var,
                     ordered_free_vars, substitute)

MAX_DESK = 4


def distributivity_theory(gamma: int, delta: int, sort="S"):
    """A theory with unary relations ``P{i}_{j}`` and the matching atoms."""
    x = Var("x", sort)
    rels = [(f"P{i}_{j}", (sort,)) for i in range(gamma) for j in range(delta)]
    theory = Theory(Signature((sort,), (), rels), ())
    atoms = [[Rel(f"P{i}_{j}", (x,)) for j in range(delta)] for i in range(gamma)]
    return theory, atoms


def distributivity_target(atoms) -> Sequent:
    ant = And(tuple(Or(tuple(row)) for row in atoms))
    gamma, delta = len(atoms), len(atoms[0])
    con = Or(tuple(And(tuple(atoms[i][f[i]] for i in range(gamma)))
                   for f in itertools.product(range(delta), repeat=gamma)))
    return Sequent(ant, con, ordered_free_vars(ant))


def _bounds(name, *vals):
    for v in vals:
        if not 1 <= v <= MAX_DESK:
            raise ValueError(f"{name}: parameters must lie in 1..{MAX_DESK}, got {v}")


def derive_distributivity(gamma: int, delta: int, atoms=None, theory=None) -> Proof:
    _bounds("derive_distributivity", gamma, delta)
    if atoms is None:
        theory, atoms = distributivity_theory(gamma, delta)
    if theory is None:
        raise ValueError("pass the theory the atoms live in")
    if len(atoms) != gamma or any(len(row) != delta for row in atoms):
        raise ValueError("atoms must form a gamma x delta array")
    b = ProofBuilder(theory)
    target = distributivity_target(atoms)
    root = target.antecedent
    ctx = target.context

    # node f carries And[root, phi_{0 f(0)}, ..., phi_{b-1 f(b-1)}]; the root
    # carries the antecedent itself
    def node(f):
        if not f:
            return root
        return And((root,) + tuple(atoms[a][f[a]] for a in range(len(f))))

    def to_root(f):
        """node(f) |- root"""
        if not f:
            return b.identity(root, ctx)
        return b.proj(node(f), 0, ctx)

    formulas = {}
    for level in range(gamma + 1):
        for f in itertools.product(range(delta), repeat=level):
            formulas[f] = node(f)

    premises = []
    labels = []
    for level in range(gamma):
        for f in itertools.product(range(delta), repeat=level):
            here = node(f)
            row = Or(tuple(atoms[level]))
            # here |- row
            get_row = b.cut(to_root(f), b.proj(root, level, ctx))
            paired = b.conj([b.identity(here, ctx), get_row])
            distrib = b.add("SmallDistrib", formula=here, disjuncts=row.parts, context=ctx)
            spread = b.cut(paired, distrib)
            kids = Or(tuple(node(f + (j,)) for j in range(delta)))
            branches = []
            for j in range(delta):
                pair = And((here, atoms[level][j]))
                parts = [b.cut(b.proj(pair, 0, ctx), to_root(f))]
                for a in range(level):
                    parts.append(b.cut(b.proj(pair, 0, ctx), b.proj(here, a + 1, ctx)))
                parts.append(b.proj(pair, 1, ctx))
                built = b.conj(parts)
                branches.append(b.cut(built, b.inj(kids, j, ctx)))
            premises.append(b.cut(spread, b.cases(branches)))
            labels.append(f)

    tree = TreeInstance(delta, gamma, formulas,
                        frozenset(itertools.product(range(delta), repeat=gamma)))
    t_step = b.add("RuleT", tuple(premises), tree=tree, nodes=tuple(labels))

    # project each chain conjunction down to the target disjunct
    concl = b.seq(t_step).consequent
    cases = []
    for k, f in enumerate(sorted(tree.bar)):
        chain = concl.parts[k]
        leaf = node(f)
        parts = [b.cut(b.proj(chain, gamma - 1, ctx), b.proj(leaf, i + 1, ctx))
                 for i in range(gamma)]
        cases.append(b.cut(b.conj(parts), b.inj(target.consequent, k, ctx)))
    final = b.cut(t_step, b.cases(cases))
    return b.proof(final, name=f"distributivity({gamma},{delta})")


def choice_theory(sort="S"):
    theory = Theory(Signature((sort,), (), [("P", (sort,))]), ())
    return theory, Rel("P", (Var("x", sort),)), Var("x", sort)


def choice_target(gamma: int, body, var) -> Sequent:
    xs = _choice_vars(gamma, body, var)
    ant = And(tuple(Ex((xi,), substitute(body, {var: xi})) for xi in xs))
    con = Ex(xs, And(tuple(substitute(body, {var: xi}) for xi in xs)))
    params = tuple(v for v in ordered_free_vars(body) if v != var)
    return Sequent(ant, con, params)


def _choice_vars(gamma, body, var):
    taken = {v.name for v in ordered_free_vars(body)}
    out = []
    for i in range(gamma):
        name = f"{var.name}{i}"
        while name in taken:
            name += "'"
        out.append(Var(name, var.sort))
    return tuple(out)


def derive_choice(gamma: int, body=None, var=None, theory=None) -> Proof:
    """Prove the choice sequent for ``body`` with designated variable ``var``."""
    _bounds("derive_choice", gamma)
    if body is None:
        theory, body, var = choice_theory()
    if theory is None or var is None:
        raise ValueError("pass the theory and the designated variable")
    b = ProofBuilder(theory)
    xs = _choice_vars(gamma, body, var)
    target = choice_target(gamma, body, var)
    root = target.antecedent
    params = target.context
    inst = [substitute(body, {var: xi}) for xi in xs]

    def node(level):
        if level == 0:
            return root
        return And((root,) + tuple(inst[:level]))

    def ctx(level):
        return params + xs[:level]

    def to_root(level):
        if level == 0:
            return b.identity(root, ctx(0))
        return b.proj(node(level), 0, ctx(level))

    formulas = {(0,) * k: node(k) for k in range(gamma + 1)}
    fresh = {(0,) * (k + 1): (xs[k],) for k in range(gamma)}

    premises, labels = [], []
    for level in range(gamma):
        here, c, c1 = node(level), ctx(level), ctx(level + 1)
        xk = xs[level]
        witness = b.cut(to_root(level), b.proj(root, level, c))
        paired = b.conj([b.identity(here, c), witness])
        frob = b.add("Frobenius", formula=here, vars=(xk,), body=inst[level], context=c)
        pushed = b.cut(paired, frob)
        # inside the binder: And[here, phi(x_k)] |- node(level + 1)
        pair = And((here, inst[level]))
        parts = [b.cut(b.proj(pair, 0, c1), to_root_in(b, level, here, root, c1))]
        for a in range(level):
            parts.append(b.cut(b.proj(pair, 0, c1), b.proj(here, a + 1, c1)))
        parts.append(b.proj(pair, 1, c1))
        grown = b.conj(parts)
        nxt = node(level + 1)
        packed = Ex((xk,), nxt)
        kids = Or((packed,))
        intro = b.add("ExistsIntro", (b.identity(packed, c),))
        into_or = b.cut(grown, intro, b.inj(kids, 0, c1))
        closed = b.add("ExistsElim", (into_or,), vars=(xk,))
        premises.append(b.cut(pushed, closed))
        labels.append((0,) * level)

    tree = TreeInstance(1, gamma, formulas, frozenset({(0,) * gamma}), fresh)
    t_step = b.add("RuleT", tuple(premises), tree=tree, nodes=tuple(labels))

    chain = b.seq(t_step).consequent.parts[0].body
    full = ctx(gamma)
    last = node(gamma)
    parts = [b.cut(b.proj(chain, gamma - 1, full), b.proj(last, i + 1, full)) for i in range(gamma)]
    gathered = b.conj(parts)
    unpack = b.add("ExistsIntro", (b.identity(target.consequent, params),))
    inside = b.cut(gathered, unpack)
    out = b.add("ExistsElim", (inside,), vars=xs)
    final = b.cut(t_step, b.cases([out]))
    return b.proof(final, name=f"choice({gamma})")


def to_root_in(b, level, here, root, context):
    """here |- root in ``context`` (identity at level 0)."""
    if level == 0:
        return b.identity(root, context)
    return b.proj(here, 0, context)
