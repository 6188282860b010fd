"""Finite truncation of the completeness construction, and experiments.

``pairing`` is the well-ordering of pairs used to schedule covers: level
``alpha + 1`` of the approximation pulls back the ``beta``-th family over
the level-``gamma`` ancestor, where ``(beta, gamma) = schedule(alpha)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .beth import BethModel, Forcing, is_model_of
from .calculus import check_proof
from .congruence import EqEngine, term_order
from .semantics import FiniteStructure, model_batches, valid_batch
from .sites import (BoundsExceeded, CoveringFamily, Presentation, Site, SiteError,
                    compose, identity, identity_family)
from .syntax import App, Theory, subst_term


# ---------------------------------------------------------------------------
# pairing

class PairingTable:
    """Values of the pairing recursion on ``[0, n)^2``.

    Within level ``m = max(beta, gamma)`` the recursion adds ``beta`` (when
    ``beta < gamma``) or ``beta + gamma`` to the supremum over the square
    below; the supremum is the running maximum plus one.
    """

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("table size must be non-negative")
        self.n = n
        f = np.zeros((n, n), dtype=np.int64)
        sup = 0                     # sup{f(b, g) + 1 : b, g < m}
        for m in range(n):
            f[:m, m] = sup + np.arange(m)           # beta < gamma = m
            f[m, :m + 1] = sup + m + np.arange(m + 1)  # gamma <= beta = m
            sup = max(sup, int(f[:m + 1, m].max()) + 1, int(f[m, :m + 1].max()) + 1)
        self.values = f
        flat = f.ravel()
        self._inverse = np.full(n * n, -1, dtype=np.int64)
        if n:
            if flat.max() >= n * n or len(np.unique(flat)) != flat.size:
                raise AssertionError("pairing table is not a bijection onto [0, n^2)")
            self._inverse[flat] = np.arange(flat.size)

    def __call__(self, beta, gamma):
        return int(self.values[beta, gamma])

    def invert(self, level):
        if not 0 <= level < self.n * self.n:
            raise ValueError(f"level {level} is outside the table")
        i = int(self._inverse[level])
        return divmod(i, self.n)


_TABLES = {}


def _table(n):
    size = 1
    while size < n:
        size *= 2
    if size not in _TABLES:
        _TABLES[size] = PairingTable(size)
    return _TABLES[size]


def pairing(beta: int, gamma: int) -> int:
    if beta < 0 or gamma < 0:
        raise ValueError("pairing is defined on naturals")
    return _table(max(beta, gamma) + 1)(beta, gamma)


def schedule(level: int) -> tuple:
    """The unique ``(beta, gamma)`` with ``pairing(beta, gamma) == level``."""
    if level < 0:
        raise ValueError("levels are naturals")
    return _table(math.isqrt(level) + 1).invert(level)


# ---------------------------------------------------------------------------
# term models

MAX_ELEMENTS = 12


@dataclass
class TermModel:
    presentation: Presentation
    structure: FiniteStructure
    engine: EqEngine
    elements: dict        # sort -> list of representative terms

    def element(self, t):
        self.engine.add_terms(t)
        rep = self.engine.cc.find(t)
        for i, r in enumerate(self.elements[t.sort]):
            if self.engine.cc.find(r) == rep:
                return i
        raise BoundsExceeded(f"term {t} escapes the saturated term model")


def term_model(site: Site, P: Presentation, max_elements=MAX_ELEMENTS) -> TermModel:
    """Congruence classes of terms over ``P``, closed under the function
    symbols; raises :class:`BoundsExceeded` past ``max_elements`` per sort."""
    sig = site.sig
    eng = EqEngine(sig, P.context, P.equations, 0, site.theory)
    cc = eng.cc

    def reps():
        out = {s: {} for s in sig.sorts}
        for t in sorted(cc.terms, key=term_order):
            out[t.sort].setdefault(cc.find(t), t)
        return {s: list(d.values()) for s, d in out.items()}

    while True:
        r = reps()
        if any(len(v) > max_elements for v in r.values()):
            raise BoundsExceeded(f"term model of {P} exceeds {max_elements} elements")
        new = []
        for name, args, res in sig.functions:
            for tup in itertools.product(*(r[s] for s in args)):
                t = App(name, tuple(tup), res)
                if t not in cc._known:
                    new.append(t)
        before = {s: len(v) for s, v in r.items()}
        eng.add_terms(*new)
        after = reps()
        if {s: len(v) for s, v in after.items()} == before:
            break
    elements = reps()
    index = {s: {cc.find(t): i for i, t in enumerate(ts)} for s, ts in elements.items()}
    fns = {}
    for name, args, res in sig.functions:
        shape = tuple(len(elements[s]) for s in args)
        tab = np.zeros(shape, dtype=np.int64)
        for idx in itertools.product(*(range(n) for n in shape)):
            t = App(name, tuple(elements[s][i] for s, i in zip(args, idx)), res)
            eng.add_terms(t)
            tab[idx] = index[res][cc.find(t)]
        fns[name] = tab
    carriers = {s: len(elements[s]) for s in sig.sorts}
    labels = {s: [str(t) for t in elements[s]] for s in sig.sorts}
    M = FiniteStructure(sig, carriers, fns, {}, labels)
    return TermModel(P, M, eng, elements)


# ---------------------------------------------------------------------------
# Beth approximation

MAX_HEIGHT = 4
MAX_FAMILIES = 8


@dataclass
class BethApproximation:
    model: BethModel
    presentations: list
    to_root: list          # node -> PresMorphism into the root presentation
    edges: list            # node -> PresMorphism into its parent (None at the root)
    scheduled: list        # node -> (beta, gamma, family label) used for its children
    levels: list
    term_models: list = field(repr=False, default_factory=list)


def families_over(site: Site, A: Presentation, family_index, depth=None):
    """The ordered covering families over ``A``: each indexed family pulled
    back along every morphism into its codomain."""
    out = []
    for F in family_index:
        for h in site.hom(A, F.codomain, depth):
            out.append(site.pullback(F, h))
    return out


def build_beth_approximation(site: Site, root: Presentation, height: int,
                             family_index, hom_depth=None,
                             max_elements=MAX_ELEMENTS) -> BethApproximation:
    if not 1 <= height <= MAX_HEIGHT:
        raise BoundsExceeded(f"height must lie in 1..{MAX_HEIGHT}")
    family_index = list(family_index)
    if len(family_index) > MAX_FAMILIES:
        raise BoundsExceeded(f"at most {MAX_FAMILIES} scheduled families")
    for F in family_index:
        if not isinstance(F, CoveringFamily):
            raise SiteError("family_index must list covering families")
    pres = [root]
    parents = [-1]
    levels = [0]
    edges = [None]
    to_anc = [[identity(root)]]     # node -> morphisms to its ancestors, nearest first
    scheduled = [None]
    frontier = [0]
    over_cache = {}
    for alpha in range(height - 1):
        beta, gamma = schedule(alpha)
        nxt = []
        for n in frontier:
            path = to_anc[n]                  # path[0] = id, path[k] = to k-th ancestor
            anc_depth = levels[n] - gamma
            a = n
            for _ in range(anc_depth):
                a = parents[a]
            A = pres[a]
            key = (A.key(), A.context)
            if key not in over_cache:
                over_cache[key] = families_over(site, A, family_index, hom_depth)
            fams = over_cache[key]
            G = fams[beta] if beta < len(fams) else identity_family(A)
            g = path[anc_depth]
            pulled = site.pullback(G, g)
            scheduled[n] = (beta, gamma, G.label)
            for m in pulled.members:
                k = len(pres)
                pres.append(m.domain)
                parents.append(n)
                levels.append(levels[n] + 1)
                edges.append(m)
                to_anc.append([identity(m.domain)] + [compose(p, m) for p in path])
                scheduled.append(None)
                nxt.append(k)
        frontier = nxt
    tms = [term_model(site, P, max_elements) for P in pres]
    maps = [None]
    for k in range(1, len(pres)):
        p = parents[k]
        sigma = edges[k].substitution()
        m = {}
        for s in site.sig.sorts:
            m[s] = np.array([tms[k].element(subst_term(t, sigma)) for t in tms[p].elements[s]],
                            dtype=np.int64)
        maps.append(m)
    B = BethModel(site.sig, tuple(parents), tuple(tm.structure for tm in tms), tuple(maps)).validate()
    return BethApproximation(B, pres, [path[-1] for path in to_anc], edges, scheduled, levels, tms)


# ---------------------------------------------------------------------------
# experiments

@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    rejected: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def to_json(self):
        return {"ok": self.ok, "rows": self.rows, "violations": self.violations,
                "rejected": self.rejected}

    def table(self):
        if not self.rows:
            return "(no rows)"
        cols = list(self.rows[0])
        width = {c: max(len(c), *(len(str(r[c])) for r in self.rows)) for c in cols}
        lines = ["  ".join(c.ljust(width[c]) for c in cols)]
        for r in self.rows:
            lines.append("  ".join(str(r[c]).ljust(width[c]) for c in cols))
        return "\n".join(lines)


def soundness_experiment(T: Theory, proofs, max_size=3, beth_models=()) -> ExperimentReport:
    """Check each proof; test accepted conclusions in every finite model of
    ``T`` up to ``max_size`` and at every node of each Beth model of ``T``."""
    rep = ExperimentReport()
    batches = list(model_batches(T, max_size))
    beths = [B for B in beth_models if is_model_of(B, T)]
    for i, p in enumerate(proofs):
        name = p.name or f"proof{i}"
        v = check_proof(T, p)
        if not v:
            rep.rejected.append({"proof": name, "verdict": str(v)})
            rep.rows.append({"proof": name, "verdict": "rejected", "models": 0,
                             "beth_nodes": 0, "violations": 0})
            continue
        s = p.conclusion
        models, bad = 0, 0
        for batch in batches:
            ok = valid_batch(batch, s)
            models += len(ok)
            for j in np.flatnonzero(~ok):
                bad += 1
                rep.violations.append({"proof": name, "kind": "model", "index": int(j)})
        nodes = 0
        for b, B in enumerate(beths):
            fz = Forcing(B)
            for k in range(len(B)):
                nodes += 1
                if not fz.forces_sequent(k, s):
                    bad += 1
                    rep.violations.append({"proof": name, "kind": "beth", "model": b, "node": k})
        rep.rows.append({"proof": name, "verdict": "accepted", "models": models,
                         "beth_nodes": nodes, "violations": bad})
    return rep


def forcing_experiment(T: Theory, approx: BethApproximation, sequents=None) -> ExperimentReport:
    """At every node, every sequent instance whose antecedent is forced has
    its consequent forced."""
    rep = ExperimentReport()
    seqs = list(sequents) if sequents is not None else [s for _, s in T.axioms]
    fz = Forcing(approx.model)
    for k in range(len(approx.model)):
        bad = 0
        for i, s in enumerate(seqs):
            if not fz.forces_sequent(k, s):
                bad += 1
                rep.violations.append({"node": k, "sequent": i,
                                       "presentation": str(approx.presentations[k])})
        rep.rows.append({"node": k, "level": approx.levels[k],
                         "presentation": str(approx.presentations[k]), "violations": bad})
    return rep
