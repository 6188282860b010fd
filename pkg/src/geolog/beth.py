"""Finite Beth models and their forcing relation.

A Beth model is a finite rooted tree of finite structures with a transition
map along every edge.  ``k`` forces an atom, a disjunction or an
existential when every branch through ``k`` eventually (at some ``l >= k``)
makes it true; conjunctions are forced componentwise.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .semantics import FiniteStructure, eval_term, satisfies, structure_batches
from .syntax import BOT, And, Eq, Ex, Or, Rel, Sequent, Signature, Theory, ordered_free_vars


class BethError(Exception):
    pass


@lru_cache(maxsize=None)
def _fv(f):
    return ordered_free_vars(f)


@dataclass(frozen=True, eq=False)
class BethModel:
    """``parents[k]`` is the parent of node ``k`` (``-1`` for the root);
    ``maps[k]`` sends each sort's carrier at ``parents[k]`` into ``D(k)``."""
    signature: Signature
    parents: tuple
    structures: tuple
    maps: tuple

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        object.__setattr__(self, "structures", tuple(self.structures))
        object.__setattr__(self, "maps", tuple(
            None if m is None else {s: np.asarray(a, dtype=np.int64) for s, a in m.items()}
            for m in self.maps))
        n = len(self.parents)
        if not (len(self.structures) == len(self.maps) == n):
            raise BethError("parents, structures and maps must have equal length")
        roots = [k for k, p in enumerate(self.parents) if p < 0]
        if len(roots) != 1:
            raise BethError(f"expected one root, found {len(roots)}")
        for k, p in enumerate(self.parents):
            if p >= n:
                raise BethError(f"node {k} has unknown parent {p}")
        for k in range(n):
            seen, j = set(), k
            while j >= 0:
                if j in seen:
                    raise BethError(f"parent links through node {k} form a cycle")
                seen.add(j)
                j = self.parents[j]
        children = [[] for _ in range(n)]
        for k, p in enumerate(self.parents):
            if p >= 0:
                children[p].append(k)
        object.__setattr__(self, "_children", tuple(tuple(c) for c in children))
        object.__setattr__(self, "root", roots[0])

    # -- tree structure

    def __len__(self):
        return len(self.parents)

    def children(self, k):
        return self._children[k]

    def is_leaf(self, k):
        return not self._children[k]

    def path_from_root(self, k):
        out = []
        while k >= 0:
            out.append(k)
            k = self.parents[k]
        return out[::-1]

    def leq(self, k, l):
        """``k`` is an ancestor of (or equal to) ``l``."""
        while l >= 0:
            if l == k:
                return True
            l = self.parents[l]
        return False

    def branches(self):
        """Maximal chains, as root-to-leaf node lists, in depth-first order."""
        out = []

        def walk(k, path):
            path = path + [k]
            if self.is_leaf(k):
                out.append(path)
            for c in self.children(k):
                walk(c, path)

        walk(self.root, [])
        return out

    def branches_through(self, k):
        return [b for b in self.branches() if k in b]

    def subtree(self, k):
        out = [k]
        for c in self.children(k):
            out.extend(self.subtree(c))
        return out

    # -- transitions

    def step(self, l, sort, e):
        """Image of ``e`` (at the parent of ``l``) in ``D(l)``."""
        return int(self.maps[l][sort][e])

    def transport(self, k, l, sort, e):
        if not self.leq(k, l):
            raise BethError(f"node {k} is not below node {l}")
        path = self.path_from_root(l)
        for m in path[path.index(k) + 1:]:
            e = self.step(m, sort, e)
        return e

    def transport_rho(self, k, l, rho):
        return {v: self.transport(k, l, v.sort, e) for v, e in rho.items()}

    # -- validation

    def validate(self):
        """Raise :class:`BethError` unless maps are sort-correct and relations
        and function symbols are preserved along every edge."""
        sig = self.signature
        for k, p in enumerate(self.parents):
            D = self.structures[k]
            if D.signature != sig:
                raise BethError(f"node {k} has a different signature")
            if p < 0:
                continue
            P = self.structures[p]
            m = self.maps[k]
            for s in sig.sorts:
                arr = m.get(s) if m else None
                if arr is None or arr.shape != (P.carriers[s],):
                    raise BethError(f"edge {p}->{k}: map for sort {s} has the wrong length")
                if arr.size and (arr.min() < 0 or arr.max() >= D.carriers[s]):
                    raise BethError(f"edge {p}->{k}: map for sort {s} leaves D({k})")
            for name, argsorts in sig.relations:
                for tup in np.argwhere(P.relations[name]):
                    img = tuple(int(m[s][e]) for s, e in zip(argsorts, tup))
                    if not D.relations[name][img]:
                        raise BethError(f"edge {p}->{k}: {name}{tuple(int(t) for t in tup)} "
                                        "is not preserved")
            for name, argsorts, res in sig.functions:
                for tup in itertools.product(*(range(P.carriers[s]) for s in argsorts)):
                    lhs = int(m[res][P.functions[name][tup]])
                    img = tuple(int(m[s][e]) for s, e in zip(argsorts, tup))
                    if int(D.functions[name][img]) != lhs:
                        raise BethError(f"edge {p}->{k}: {name} does not commute with the map")
        return self


def assignments_at(B: BethModel, k, variables):
    D = B.structures[k]
    for tup in itertools.product(*(range(D.carriers[v.sort]) for v in variables)):
        yield dict(zip(variables, tup))


class Forcing:
    """Memoized forcing evaluator for one Beth model.

    ``equality`` optionally maps a node to ``{sort: bool matrix}`` to
    interpret ``=`` by something other than identity.
    """

    def __init__(self, B: BethModel, equality=None):
        self.B = B
        self.equality = equality or {}
        self._memo = {}

    def _key(self, k, f, rho):
        fv = _fv(f)
        try:
            return (k, f, tuple(rho[v] for v in fv))
        except KeyError as exc:
            raise BethError(f"unassigned variable {exc.args[0].name}") from None

    def eventually(self, k, pred, payload):
        """Every branch through ``k`` meets some ``l >= k`` with ``pred(l, ...)``.

        ``payload`` is a list of (sort, element) transported along the way.
        """
        B = self.B

        def bar(m, vals):
            if pred(m, vals):
                return True
            kids = B.children(m)
            if not kids:
                return False
            return all(bar(c, [(s, B.step(c, s, e)) for s, e in vals]) for c in kids)

        return bar(k, payload)

    def _atom(self, m, f, vals):
        D = self.B.structures[m]
        elems = [e for _, e in vals]
        if isinstance(f, Rel):
            return bool(D.relations[f.name][tuple(elems)])
        a, b = elems
        eq = self.equality.get(m)
        if eq is not None:
            return bool(eq[f.lhs.sort][a, b])
        return a == b

    def force(self, k, f, rho) -> bool:
        if not 0 <= k < len(self.B):
            raise BethError(f"node {k} is not in the tree")
        key = self._key(k, f, rho)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        rho = {v: rho[v] for v in _fv(f)}
        D = self.B.structures[k]
        match f:
            case Rel() | Eq() as atom:
                terms = atom.args if isinstance(atom, Rel) else (atom.lhs, atom.rhs)
                vals = [(t.sort, eval_term(D, rho, t)) for t in terms]
                res = self.eventually(k, lambda m, vs: self._atom(m, atom, vs), vals)
            case And(parts):
                res = all(self.force(k, p, rho) for p in parts)
            case Or(parts):
                vs = list(rho.items())
                payload = [(v.sort, e) for v, e in vs]

                def some(m, vals):
                    r = {v: e for (v, _), (_, e) in zip(vs, vals)}
                    return any(self.force(m, p, r) for p in parts)

                res = self.eventually(k, some, payload)
            case Ex(bound, body):
                vs = list(rho.items())
                payload = [(v.sort, e) for v, e in vs]

                def witness(m, vals):
                    r = {v: e for (v, _), (_, e) in zip(vs, vals)}
                    Dm = self.B.structures[m]
                    for tup in itertools.product(*(range(Dm.carriers[v.sort]) for v in bound)):
                        inner = dict(r)
                        inner.update(zip(bound, tup))
                        if self.force(m, body, inner):
                            return True
                    return False

                res = self.eventually(k, witness, payload)
            case _:
                raise TypeError(f"not a formula: {f!r}")
        self._memo[key] = res
        return res

    def forces_sequent(self, k, s: Sequent) -> bool:
        for rho in assignments_at(self.B, k, s.context):
            if self.force(k, s.antecedent, rho) and not self.force(k, s.consequent, rho):
                return False
        return True


def force(B: BethModel, k, f, rho) -> bool:
    return Forcing(B).force(k, f, rho)


# ---------------------------------------------------------------------------
# property checks

@dataclass
class Report:
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def check_monotonicity(B: BethModel, formulas, forcer=None) -> Report:
    """Check ``k ||- f`` iff every branch through ``k`` has ``l >= k`` with ``l ||- f``."""
    forcer = forcer or Forcing(B)
    rep = Report()
    branches = B.branches()
    for f in formulas:
        fv = _fv(f)
        for k in range(len(B)):
            through = [b[b.index(k):] for b in branches if k in b]
            for rho in assignments_at(B, k, fv):
                lhs = forcer.force(k, f, rho)
                rhs = all(any(forcer.force(l, f, B.transport_rho(k, l, rho)) for l in b)
                          for b in through)
                rep.checked += 1
                if lhs != rhs:
                    rep.violations.append((f, k, rho, lhs, rhs))
    return rep


def check_persistence(B: BethModel, formulas, forcer=None) -> Report:
    forcer = forcer or Forcing(B)
    rep = Report()
    for f in formulas:
        fv = _fv(f)
        for k in range(len(B)):
            for rho in assignments_at(B, k, fv):
                if not forcer.force(k, f, rho):
                    continue
                for l in B.subtree(k):
                    rep.checked += 1
                    if not forcer.force(l, f, B.transport_rho(k, l, rho)):
                        rep.violations.append((f, k, l, rho))
    return rep


def check_leaf_collapse(B: BethModel, formulas, forcer=None) -> Report:
    forcer = forcer or Forcing(B)
    rep = Report()
    for f in formulas:
        fv = _fv(f)
        for k in range(len(B)):
            if not B.is_leaf(k):
                continue
            for rho in assignments_at(B, k, fv):
                rep.checked += 1
                if forcer.force(k, f, rho) != satisfies(B.structures[k], rho, f):
                    rep.violations.append((f, k, rho))
    return rep


def is_model_of(B: BethModel, T: Theory, forcer=None) -> bool:
    forcer = forcer or Forcing(B)
    for k in range(len(B)):
        if forcer.force(k, BOT, {}):
            return False
        for _, ax in T.axioms:
            if not forcer.forces_sequent(k, ax):
                return False
    return True


# ---------------------------------------------------------------------------
# branch colimits

@dataclass(frozen=True, eq=False)
class BranchColimit:
    structure: FiniteStructure
    injections: dict      # node -> {sort: array element -> class}
    disjoint_size: dict   # sort -> size of the disjoint union


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _check_branch(B: BethModel, branch):
    branch = list(branch)
    if not branch or branch[0] != B.root:
        raise BethError("a branch starts at the root")
    for a, b in zip(branch, branch[1:]):
        if B.parents[b] != a:
            raise BethError(f"{b} is not a child of {a}")
    if not B.is_leaf(branch[-1]):
        raise BethError("not a maximal chain: the last node has children")
    return branch


def branch_colimit(B: BethModel, branch) -> BranchColimit:
    """Directed colimit of the structures along a maximal chain.

    The carrier is the disjoint union of the node carriers modulo the
    equivalence generated by the transition maps (computed by union-find);
    a relation holds of classes when it holds of representatives at some
    node.  Classes are numbered by their element at the leaf.
    """
    branch = _check_branch(B, branch)
    sig = B.signature
    uf = _UnionFind()
    disjoint = {}
    for s in sig.sorts:
        disjoint[s] = sum(B.structures[k].carriers[s] for k in branch)
        for k in branch:
            for e in range(B.structures[k].carriers[s]):
                uf.find((s, k, e))
        for a, b in zip(branch, branch[1:]):
            for e in range(B.structures[a].carriers[s]):
                uf.union((s, a, e), (s, b, B.step(b, s, e)))
    leaf = branch[-1]
    cls = {}
    carriers = {}
    for s in sig.sorts:
        roots = {}
        for e in range(B.structures[leaf].carriers[s]):
            r = uf.find((s, leaf, e))
            if r in roots:
                raise BethError("two leaf elements fell into one class")
            roots[r] = e
        carriers[s] = len(roots)
        for k in branch:
            for e in range(B.structures[k].carriers[s]):
                cls[(s, k, e)] = roots[uf.find((s, k, e))]
    inj = {k: {s: np.array([cls[(s, k, e)] for e in range(B.structures[k].carriers[s])],
                           dtype=np.int64)
               for s in sig.sorts}
           for k in branch}
    rels = {}
    for name, argsorts in sig.relations:
        tab = np.zeros(tuple(carriers[s] for s in argsorts), dtype=bool)
        for k in branch:
            for tup in np.argwhere(B.structures[k].relations[name]):
                tab[tuple(int(inj[k][s][e]) for s, e in zip(argsorts, tup))] = True
        rels[name] = tab
    fns = {}
    for name, argsorts, res in sig.functions:
        tab = np.full(tuple(carriers[s] for s in argsorts), -1, dtype=np.int64)
        for k in branch:
            D = B.structures[k]
            for tup in itertools.product(*(range(D.carriers[s]) for s in argsorts)):
                c = tuple(int(inj[k][s][e]) for s, e in zip(argsorts, tup))
                val = int(inj[k][res][D.functions[name][tup]])
                if tab[c] not in (-1, val):
                    raise BethError(f"{name} is not well defined on the colimit")
                tab[c] = val
        fns[name] = tab
    return BranchColimit(FiniteStructure(sig, carriers, fns, rels), inj, disjoint)


def check_branch_claim(B: BethModel, T: Theory | None, formulas, forcer=None) -> Report:
    """``D_b |= f(a)`` iff some node on ``b`` forces ``f`` at representatives of ``a``."""
    forcer = forcer or Forcing(B)
    rep = Report()
    for branch in B.branches():
        col = branch_colimit(B, branch)
        Db = col.structure
        members = {}
        for k in branch:
            for s in B.signature.sorts:
                for e, c in enumerate(col.injections[k][s]):
                    members.setdefault((k, s, int(c)), []).append(e)
        for f in formulas:
            fv = _fv(f)
            for tup in itertools.product(*(range(Db.carriers[v.sort]) for v in fv)):
                alpha = dict(zip(fv, tup))
                lhs = satisfies(Db, alpha, f)
                rhs = False
                for k in branch:
                    choices = [members.get((k, v.sort, c), []) for v, c in alpha.items()]
                    for reps in itertools.product(*choices):
                        if forcer.force(k, f, dict(zip(fv, reps))):
                            rhs = True
                            break
                    if rhs:
                        break
                rep.checked += 1
                if lhs != rhs:
                    rep.violations.append((tuple(branch), f, alpha, lhs, rhs))
    return rep


# ---------------------------------------------------------------------------
# construction helpers

def single_node(M: FiniteStructure) -> BethModel:
    return BethModel(M.signature, (-1,), (M,), (None,))


def constant_domain(sig: Signature, parents, structures) -> BethModel:
    """Tree with identity transitions; structures must share carriers."""
    maps = []
    for k, p in enumerate(parents):
        if p < 0:
            maps.append(None)
        else:
            maps.append({s: np.arange(structures[p].carriers[s]) for s in sig.sorts})
    return BethModel(sig, tuple(parents), tuple(structures), tuple(maps))


def random_beth_model(sig: Signature, rng, max_nodes=15, max_size=3) -> BethModel:
    """A random relational Beth model (function symbols are not supported).

    Carriers may grow or shrink along edges and maps need not be injective;
    relations at a child contain the image of the parent's relations.
    """
    if sig.functions:
        raise BethError("random_beth_model only handles relational signatures")
    n = int(rng.integers(1, max_nodes + 1))
    parents = [-1] + [int(rng.integers(0, k)) for k in range(1, n)]
    structures, maps = [], []
    for k in range(n):
        p = parents[k]
        carriers = {s: int(rng.integers(1, max_size + 1)) for s in sig.sorts}
        m = None
        if p >= 0:
            m = {s: rng.integers(0, carriers[s], size=structures[p].carriers[s])
                 for s in sig.sorts}
        rels = {}
        for name, argsorts in sig.relations:
            shape = tuple(carriers[s] for s in argsorts)
            tab = rng.random(shape) < 0.35 if shape else np.array(rng.random() < 0.35)
            if p >= 0:
                for tup in np.argwhere(structures[p].relations[name]):
                    tab[tuple(int(m[s][e]) for s, e in zip(argsorts, tup))] = True
            rels[name] = tab
        structures.append(FiniteStructure(sig, carriers, {}, rels))
        maps.append(m)
    return BethModel(sig, tuple(parents), tuple(structures), tuple(maps)).validate()


# ---------------------------------------------------------------------------
# countermodel search

def _shapes(max_nodes):
    yield (-1,)
    for k in (2, 3):
        if k + 1 <= max_nodes:
            yield (-1,) + (0,) * k
    if 7 <= max_nodes:
        yield (-1, 0, 0, 1, 1, 2, 2)
    if 15 <= max_nodes:
        yield (-1, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6)


def _relation_choices(sig, carriers):
    """Every interpretation of the relation symbols over fixed carriers."""
    relsig = Signature(sig.sorts, (), sig.relations)
    for batch in structure_batches(relsig, carriers):
        for i in range(len(batch)):
            yield {k: v[i] for k, v in batch.relations.items()}


def beth_countermodel(T: Theory, s: Sequent, max_nodes=15, max_size=3,
                      min_nodes=1, budget=200_000):
    """A Beth model of ``T`` with a node forcing ``s.antecedent`` but not
    ``s.consequent``, or ``None``.

    The search covers constant-domain models (identity transitions) on a
    fixed list of tree shapes, smallest first; ``None`` is not a proof.
    """
    if max_nodes > 15 or max_size > 3:
        raise BethError("search bounds: at most 15 nodes and carriers of size 3")
    sig = T.signature
    fsig = Signature(sig.sorts, sig.functions, ())
    tried = 0
    for shape in _shapes(max_nodes):
        if len(shape) < min_nodes:
            continue
        n = len(shape)
        children = [[c for c in range(n) if shape[c] == k] for k in range(n)]
        order = sorted(range(n), key=lambda k: -len(_ancestors(shape, k)))
        for sizes in itertools.product(range(1, max_size + 1), repeat=len(sig.sorts)):
            carriers = dict(zip(sig.sorts, sizes))
            rel_options = list(_relation_choices(sig, carriers))
            for fbatch in structure_batches(fsig, carriers):
                for fi in range(len(fbatch)):
                    fns = {k: v[fi] for k, v in fbatch.functions.items()}
                    for rels in _monotone_assignments(order, children, rel_options, sig):
                        tried += 1
                        if tried > budget:
                            return None
                        structs = [FiniteStructure(sig, carriers, fns, rels[k]) for k in range(n)]
                        B = constant_domain(sig, shape, structs)
                        fz = Forcing(B)
                        if not is_model_of(B, T, fz):
                            continue
                        for k in range(n):
                            if not fz.forces_sequent(k, s):
                                return B
    return None


def _ancestors(shape, k):
    out = []
    while shape[k] >= 0:
        k = shape[k]
        out.append(k)
    return out


def _monotone_assignments(order, children, options, sig):
    """Relation tables per node, each contained in all of its children's."""
    n = len(order)

    def below(table, kids_tables):
        return all(np.all(~table[r] | kt[r]) for kt in kids_tables for r in table)

    def rec(i, chosen):
        if i == n:
            yield dict(chosen)
            return
        k = order[i]
        kid_tabs = [chosen[c] for c in children[k]]
        for opt in options:
            if below(opt, kid_tabs):
                chosen[k] = opt
                yield from rec(i + 1, chosen)
                del chosen[k]

    yield from rec(0, {})
