"""Syntactic sites of equational theories, covering families and topologies,
plus the internal theory of a finite category.

Objects are presentations: a context together with equations over it.  A
morphism ``Phi -> Psi`` is a tuple of terms over Phi's context, one per
variable of Psi, under which Phi proves every equation of Psi.
Composition is substitution.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .congruence import EqEngine, expand_universe, term_order
from .parsing import format_term
from .semantics import FiniteStructure
from .syntax import (TOP, And, App, Eq, Ex, NotCanonical, Or, Sequent, Signature,
                     Theory, Var, canonical_sequent, fresh_var, subst_term, term_vars)


class SiteError(Exception):
    pass


class BoundsExceeded(SiteError):
    pass


def _orient(e: Eq):
    a, b = format_term(e.lhs), format_term(e.rhs)
    return e if a <= b else Eq(e.rhs, e.lhs)


@dataclass(frozen=True)
class Presentation:
    context: tuple
    equations: tuple = ()

    def __post_init__(self):
        ctx = tuple(self.context)
        names = [v.name for v in ctx]
        if len(set(names)) != len(names):
            raise SiteError("presentation context repeats a variable")
        eqs = []
        for e in self.equations:
            if not isinstance(e, Eq):
                raise SiteError(f"presentations hold equations only, got {e}")
            if e.lhs == e.rhs or e in eqs:
                continue
            for t in (e.lhs, e.rhs):
                for v in term_vars(t):
                    if v not in ctx:
                        raise SiteError(f"equation variable {v.name} is not in the context")
            eqs.append(e)
        object.__setattr__(self, "context", ctx)
        object.__setattr__(self, "equations", tuple(eqs))

    def key(self):
        ren = {v: Var(f"v{i}", v.sort) for i, v in enumerate(self.context)}
        eqs = sorted({_eq_str(_orient(Eq(subst_term(e.lhs, ren), subst_term(e.rhs, ren))))
                      for e in self.equations})
        return (tuple(v.sort for v in self.context), tuple(eqs))

    def __str__(self):
        ctx = ", ".join(f"{v.name}:{v.sort}" for v in self.context)
        eqs = ", ".join(_eq_str(e) for e in self.equations)
        return f"[{ctx} | {eqs}]"


def _eq_str(e):
    return f"{format_term(e.lhs)} = {format_term(e.rhs)}"


def free(*context):
    return Presentation(tuple(context), ())


@dataclass(frozen=True)
class PresMorphism:
    domain: Presentation
    codomain: Presentation
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(self.terms) != len(self.codomain.context):
            raise SiteError("a morphism needs one term per codomain variable")
        for t, v in zip(self.terms, self.codomain.context):
            if t.sort != v.sort:
                raise SiteError(f"term {format_term(t)} has the wrong sort for {v.name}")
            for u in term_vars(t):
                if u not in self.domain.context:
                    raise SiteError(f"term {format_term(t)} leaves the domain context")

    def substitution(self):
        return dict(zip(self.codomain.context, self.terms))

    def is_inclusion(self):
        return (all(isinstance(t, Var) for t in self.terms)
                and len(set(self.terms)) == len(self.terms))

    def key(self):
        ren = {v: Var(f"v{i}", v.sort) for i, v in enumerate(self.domain.context)}
        return (self.domain.key(), tuple(format_term(subst_term(t, ren)) for t in self.terms))

    def __str__(self):
        return f"{self.domain} -> {self.codomain} via ({', '.join(map(format_term, self.terms))})"


def compose(g: PresMorphism, f: PresMorphism) -> PresMorphism:
    """``g . f`` for ``f: A -> B`` and ``g: B -> C`` (substitute f into g)."""
    if f.codomain.key() != g.domain.key():
        raise SiteError("morphisms are not composable")
    sigma = dict(zip(g.domain.context, f.terms))
    return PresMorphism(f.domain, g.codomain, tuple(subst_term(t, sigma) for t in g.terms))


def identity(P: Presentation) -> PresMorphism:
    return PresMorphism(P, P, P.context)


@dataclass(frozen=True)
class CoveringFamily:
    codomain: Presentation
    members: tuple
    height: int = 1
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        for m in self.members:
            if m.codomain.key() != self.codomain.key():
                raise SiteError("family member has the wrong codomain")

    def key(self):
        return (self.codomain.key(), tuple(sorted({m.key() for m in self.members})))

    def __len__(self):
        return len(self.members)


@dataclass
class TopologyBasis:
    families: list
    pullback_closed: bool = False
    composition_closed: bool = False
    bounds: dict = field(default_factory=dict)
    partial: bool = False

    def __post_init__(self):
        self._keys = {}
        fams = list(self.families)
        self.families = []
        for f in fams:
            self.add(f)

    def add(self, fam) -> bool:
        k = fam.key()
        if k in self._keys:
            return False
        self._keys[k] = fam
        self.families.append(fam)
        return True

    def __contains__(self, fam):
        return fam.key() in self._keys

    def __len__(self):
        return len(self.families)

    def over(self, P: Presentation):
        k = P.key()
        return [f for f in self.families if f.codomain.key() == k]


# ---------------------------------------------------------------------------
# the site

def _check_functional(T: Theory):
    if T.signature.relations:
        names = ", ".join(n for n, _ in T.signature.relations)
        raise SiteError(f"relation symbols present ({names}); eliminate them first")


class Site:
    """Depth-bounded syntactic site of an equational theory."""

    def __init__(self, theory: Theory, depth=2, objects=()):
        _check_functional(theory)
        self.theory = theory
        self.sig = theory.signature
        self.depth = depth
        self._engines = {}
        self._homs = {}
        self.covers = covers_from_axioms(theory, self)
        seen = {}
        for P in list(objects) + [f.codomain for f in self.covers] + \
                [m.domain for f in self.covers for m in f.members]:
            seen.setdefault(P.key(), P)
        self.objects = list(seen.values())

    def engine(self, P: Presentation, depth=None) -> EqEngine:
        depth = self.depth if depth is None else depth
        k = (P.key(), P.context, depth)
        if k not in self._engines:
            self._engines[k] = EqEngine(self.sig, P.context, P.equations, depth, self.theory)
        return self._engines[k]

    def provable(self, P: Presentation, t, s, depth=None) -> bool:
        return self.engine(P, depth).equal(t, s)

    def is_morphism(self, P: Presentation, Q: Presentation, terms) -> bool:
        sigma = dict(zip(Q.context, terms))
        return all(self.provable(P, subst_term(e.lhs, sigma), subst_term(e.rhs, sigma))
                   for e in Q.equations)

    def terms_over(self, P: Presentation, depth=None):
        depth = self.depth if depth is None else depth
        universe, _ = expand_universe(self.sig, list(P.context) +
                                      [App(n, (), r) for n, a, r in self.sig.functions if not a],
                                      depth)
        by_sort = {}
        for t in sorted(universe, key=term_order):
            by_sort.setdefault(t.sort, []).append(t)
        return by_sort

    def hom(self, P: Presentation, Q: Presentation, depth=None, limit=200_000):
        """Morphism classes ``P -> Q`` with least representatives."""
        depth = self.depth if depth is None else depth
        k = (P.key(), P.context, Q.key(), Q.context, depth)
        if k in self._homs:
            return self._homs[k]
        by_sort = self.terms_over(P, depth)
        eng = self.engine(P, depth)
        choices = [by_sort.get(v.sort, []) for v in Q.context]
        total = 1
        for c in choices:
            total *= len(c)
        if total > limit:
            raise BoundsExceeded(f"hom enumeration would visit {total} tuples")
        classes = {}
        for tup in itertools.product(*choices):
            if not self.is_morphism(P, Q, tup):
                continue
            eng.add_terms(*tup)
            key = tuple(eng.cc.find(t) for t in tup)
            best = classes.get(key)
            if best is None or [term_order(t) for t in tup] < [term_order(t) for t in best]:
                classes[key] = tup
        out = sorted((PresMorphism(P, Q, tup) for tup in classes.values()),
                     key=lambda m: [term_order(t) for t in m.terms])
        self._homs[k] = out
        return out

    # -- families

    def extend(self, P: Presentation, new_vars, atoms) -> Presentation:
        """``P`` with extra variables and equations; drops equations over P's
        variables that P already proves."""
        keep = list(P.equations)
        old = set(P.context)
        for a in atoms:
            if isinstance(a, Eq) and set(term_vars(a.lhs)) | set(term_vars(a.rhs)) <= old:
                if self.provable(P, a.lhs, a.rhs):
                    continue
            keep.append(a)
        return Presentation(P.context + tuple(new_vars), tuple(keep))

    def pullback(self, fam: CoveringFamily, h: PresMorphism) -> CoveringFamily:
        """Pull ``fam`` back along ``h: P' -> fam.codomain``."""
        if h.codomain.key() != fam.codomain.key():
            raise SiteError("pullback morphism does not land in the family's codomain")
        P2 = h.domain
        sigma_cod = dict(zip(fam.codomain.context, h.terms))
        members = []
        for m in fam.members:
            D = m.domain
            avoid = {v.name for v in P2.context}
            ren = {}
            if m.is_inclusion():
                for v_cod, v_dom in zip(fam.codomain.context, m.terms):
                    ren[v_dom] = sigma_cod[v_cod]
                rest = [v for v in D.context if v not in ren]
                extra = []
                for v in rest:
                    nv = fresh_var(v, avoid) if v.name in avoid else v
                    avoid.add(nv.name)
                    ren[v] = nv
                    extra.append(nv)
                atoms = [Eq(subst_term(e.lhs, ren), subst_term(e.rhs, ren)) for e in D.equations]
                dom = self.extend(P2, extra, atoms)
            else:
                extra = []
                for v in D.context:
                    nv = fresh_var(v, avoid) if v.name in avoid else v
                    avoid.add(nv.name)
                    ren[v] = nv
                    extra.append(nv)
                atoms = [Eq(subst_term(e.lhs, ren), subst_term(e.rhs, ren)) for e in D.equations]
                atoms += [Eq(subst_term(t, ren), s) for t, s in zip(m.terms, h.terms)]
                dom = self.extend(P2, extra, atoms)
            members.append(PresMorphism(dom, P2, P2.context))
        return CoveringFamily(P2, tuple(members), fam.height, fam.label)

    def compose_family(self, fam: CoveringFamily, choices: dict) -> CoveringFamily:
        """Replace member ``i`` by its composite with ``choices[i]``."""
        members, height = [], fam.height
        for i, m in enumerate(fam.members):
            G = choices.get(i)
            if G is None:
                members.append(m)
                continue
            if G.codomain.key() != m.domain.key():
                raise SiteError(f"family for member {i} sits over the wrong object")
            # identify G's codomain with m's domain positionally
            align = PresMorphism(G.codomain, m.domain, G.codomain.context)
            for g in G.members:
                members.append(compose(m, compose(align, g)))
            height = max(height, fam.height + G.height)
        return CoveringFamily(fam.codomain, tuple(members), height, fam.label)


def syntactic_site(theory: Theory, depth=2, objects=()) -> Site:
    return Site(theory, depth, objects)


def covers_from_axioms(theory: Theory, site: Site | None = None):
    """One family ``{Phi u Psi_i -> Phi}`` per axiom ``Phi |- Or_i Ex y_i. Psi_i``."""
    _check_functional(theory)
    out = []
    for name, ax in theory.axioms:
        try:
            s = canonical_sequent(ax)
        except NotCanonical as exc:
            raise SiteError(f"axiom {name}: {exc}") from None
        P = Presentation(s.context, s.antecedent.parts)
        members = []
        for d in s.consequent.parts:
            ys, atoms = d.vars, d.body.parts
            avoid = {v.name for v in s.context}
            ren, new = {}, []
            for y in ys:
                ny = fresh_var(y, avoid) if y.name in avoid else y
                avoid.add(ny.name)
                ren[y] = ny
                new.append(ny)
            atoms = [Eq(subst_term(a.lhs, ren), subst_term(a.rhs, ren)) for a in atoms]
            if site is not None:
                D = site.extend(P, new, atoms)
            else:
                D = Presentation(P.context + tuple(new), P.equations + tuple(atoms))
            members.append(PresMorphism(D, P, P.context))
        out.append(CoveringFamily(P, tuple(members), 1, name))
    return out


def identity_family(P: Presentation) -> CoveringFamily:
    return CoveringFamily(P, (identity(P),), 1, "id")


def close_topology(site: Site, basis, pullback_depth=1, composite_height=2,
                   objects=None, max_families=2000) -> TopologyBasis:
    """Least superset of ``basis`` closed under pullback along morphisms
    between pool objects and under composites of height <= composite_height.

    Pool objects default to the site's objects and the member domains of the
    starting families.  Exceeding ``max_families`` returns a partial basis.
    """
    start = basis.families if isinstance(basis, TopologyBasis) else list(basis)
    out = TopologyBasis(list(start))
    pool = {}
    for P in list(objects or site.objects) + [m.domain for f in start for m in f.members]:
        pool.setdefault(P.key(), P)
    pool = list(pool.values())
    out.bounds = {"pullback_depth": pullback_depth, "composite_height": composite_height,
                  "pool": len(pool), "max_families": max_families}
    done_pb = set()
    done_comp = set()
    while True:
        changed = False
        for fam in list(out.families):
            for P2 in pool:
                k = (fam.key(), P2.key())
                if k in done_pb:
                    continue
                done_pb.add(k)
                for h in site.hom(P2, fam.codomain, pullback_depth):
                    changed |= out.add(site.pullback(fam, h))
        for fam in list(out.families):
            if fam.key() in done_comp:
                continue
            options = []
            for m in fam.members:
                opts = [None] + [G for G in out.over(m.domain)
                                 if fam.height + G.height <= composite_height]
                options.append(opts)
            if any(len(o) > 1 for o in options):
                done_comp.add(fam.key())
                for choice in itertools.product(*options):
                    if all(c is None for c in choice):
                        continue
                    comp = site.compose_family(fam, {i: c for i, c in enumerate(choice) if c})
                    changed |= out.add(comp)
                    if len(out) > max_families:
                        out.partial = True
                        return out
            else:
                done_comp.add(fam.key())
        if not changed:
            break
        if len(out) > max_families:
            out.partial = True
            break
    out.pullback_closed = not out.partial
    out.composition_closed = not out.partial
    return out


@dataclass(frozen=True)
class CoverTree:
    """A family together with subtrees hung on some of its members."""
    family: CoveringFamily
    children: dict = field(default_factory=dict)


def check_property_T(site: Site, basis: TopologyBasis, tree: CoverTree) -> bool:
    """Whether the composite of the tree's families along root-to-bar paths
    is itself a basis family."""

    def composite(node: CoverTree):
        if node.family not in basis:
            raise SiteError("not a proper diagram: a node's family is not in the basis")
        choices = {}
        for i, sub in node.children.items():
            if not 0 <= i < len(node.family.members):
                raise SiteError(f"not a proper diagram: member {i} does not exist")
            if sub.family.codomain.key() != node.family.members[i].domain.key():
                raise SiteError("not a proper diagram: child family over the wrong object")
            choices[i] = composite(sub)
        if not choices:
            return node.family
        return site.compose_family(node.family, choices)

    return composite(tree) in basis


# ---------------------------------------------------------------------------
# internal theory of a finite category

class CategoryError(SiteError):
    pass


@dataclass(frozen=True)
class Cone:
    apex: str
    legs: tuple                 # arrow names apex -> object
    diagram: tuple = ()         # (arrow, i, j): arrow from leg i's object to leg j's


@dataclass
class CategoryData:
    objects: tuple
    arrows: dict                # name -> (dom, cod)
    identities: dict            # object -> arrow name
    composition: dict           # (g, f) -> g . f
    cones: tuple = ()
    covers: tuple = ()
    unions: tuple = ()          # (target, (arrow, ...))

    def comp(self, g, f):
        try:
            return self.composition[(g, f)]
        except KeyError:
            raise CategoryError(f"composition {g} . {f} missing from the table") from None

    def validate(self):
        obs = set(self.objects)
        for a, (d, c) in self.arrows.items():
            if d not in obs or c not in obs:
                raise CategoryError(f"arrow {a} has an unknown end")
        for X in self.objects:
            i = self.identities.get(X)
            if i is None or self.arrows.get(i) != (X, X):
                raise CategoryError(f"object {X} lacks an identity")
        for (g, f), h in self.composition.items():
            if g not in self.arrows or f not in self.arrows or h not in self.arrows:
                raise CategoryError(f"composition entry {g} . {f} names an unknown arrow")
            if self.arrows[f][1] != self.arrows[g][0]:
                raise CategoryError(f"{g} . {f} is not composable")
            if self.arrows[h] != (self.arrows[f][0], self.arrows[g][1]):
                raise CategoryError(f"{g} . {f} = {h} has the wrong ends")
        for f, (d, c) in self.arrows.items():
            for g, (d2, c2) in self.arrows.items():
                if c == d2:
                    self.comp(g, f)
        for f, (d, c) in self.arrows.items():
            if self.comp(f, self.identities[d]) != f or self.comp(self.identities[c], f) != f:
                raise CategoryError(f"identity law fails at {f}")
        for f, (a, b) in self.arrows.items():
            for g, (b2, c) in self.arrows.items():
                if b2 != b:
                    continue
                for h, (c2, _) in self.arrows.items():
                    if c2 != c:
                        continue
                    if self.comp(h, self.comp(g, f)) != self.comp(self.comp(h, g), f):
                        raise CategoryError(f"composition is not associative at {h}, {g}, {f}")
        for cone in self.cones:
            for leg in cone.legs:
                if leg not in self.arrows or self.arrows[leg][0] != cone.apex:
                    raise CategoryError(f"cone leg {leg} does not start at {cone.apex}")
            for u, i, j in cone.diagram:
                ui, uj = self.arrows[cone.legs[i]][1], self.arrows[cone.legs[j]][1]
                if self.arrows.get(u) != (ui, uj):
                    raise CategoryError(f"diagram arrow {u} does not join legs {i} and {j}")
                if self.comp(u, cone.legs[i]) != cone.legs[j]:
                    raise CategoryError(f"cone over {cone.apex} does not commute at {u}")
        for f in self.covers:
            if f not in self.arrows:
                raise CategoryError(f"unknown cover {f}")
        for target, ms in self.unions:
            for m in ms:
                if m not in self.arrows or self.arrows[m][1] != target:
                    raise CategoryError(f"union arrow {m} does not land in {target}")
        return self

    @classmethod
    def from_json(cls, d):
        try:
            comp = {}
            for e in d["composition"]:
                comp[(e["g"], e["f"])] = e["h"]
            return cls(tuple(d["objects"]),
                       {a["name"]: (a["dom"], a["cod"]) for a in d["arrows"]},
                       dict(d["identities"]), comp,
                       tuple(Cone(c["apex"], tuple(c["legs"]),
                                  tuple(tuple(x) for x in c.get("diagram", ())))
                             for c in d.get("cones", ())),
                       tuple(d.get("covers", ())),
                       tuple((u["target"], tuple(u["arrows"])) for u in d.get("unions", ())))
        except (KeyError, TypeError) as exc:
            raise CategoryError(f"malformed category data: {exc}") from None


def internal_signature(C: CategoryData) -> Signature:
    return Signature(tuple(C.objects), tuple((a, (d,), c) for a, (d, c) in C.arrows.items()), ())


def internal_theory(C: CategoryData) -> Theory:
    C.validate()
    sig = internal_signature(C)
    ids = set(C.identities.values())

    def ap(f, t):
        return App(f, (t,), C.arrows[f][1])

    axioms = []
    for X in C.objects:
        x = Var("x", X)
        axioms.append((f"id_{X}", Sequent(TOP, Eq(ap(C.identities[X], x), x), (x,))))
    for (g, f), h in C.composition.items():
        if f in ids or g in ids:
            continue
        x = Var("x", C.arrows[f][0])
        axioms.append((f"comp_{g}_{f}", Sequent(TOP, Eq(ap(h, x), ap(g, ap(f, x))), (x,))))
    for f in C.covers:
        d, c = C.arrows[f]
        x, y = Var("x", d), Var("y", c)
        axioms.append((f"cover_{f}", Sequent(TOP, Ex((x,), Eq(ap(f, x), y)), (y,))))
    for target, ms in C.unions:
        x = Var("x", target)
        parts = tuple(Ex((Var(f"y{i}", C.arrows[m][0]),), Eq(ap(m, Var(f"y{i}", C.arrows[m][0])), x))
                      for i, m in enumerate(ms))
        axioms.append((f"union_{target}_{'_'.join(ms)}", Sequent(TOP, Or(parts), (x,))))
    for n, cone in enumerate(C.cones):
        xs = tuple(Var(f"x{i}", C.arrows[leg][1]) for i, leg in enumerate(cone.legs))
        x, y = Var("x", cone.apex), Var("y", cone.apex)
        ant = And(tuple(Eq(ap(u, xs[i]), xs[j]) for u, i, j in cone.diagram))
        body = And(tuple(Eq(ap(leg, x), xs[i]) for i, leg in enumerate(cone.legs)))
        axioms.append((f"cone{n}_exists", Sequent(ant, Ex((x,), body), xs)))
        same = And(tuple(Eq(ap(leg, x), ap(leg, y)) for leg in cone.legs))
        axioms.append((f"cone{n}_mono", Sequent(same, Eq(x, y), (x, y))))
    return Theory(sig, tuple(axioms))


def functor_structure(C: CategoryData, sets: dict, maps: dict) -> FiniteStructure:
    """The structure of a functor into finite sets: ``sets[X]`` is a size and
    ``maps[f]`` lists the image of each element of ``dom f``."""
    sig = internal_signature(C)
    fns = {}
    for a, (d, c) in C.arrows.items():
        arr = np.asarray(maps[a], dtype=np.int64)
        if arr.shape != (sets[d],):
            raise CategoryError(f"map for {a} has the wrong length")
        fns[a] = arr
    return FiniteStructure(sig, dict(sets), fns, {})
