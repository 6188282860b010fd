"""Formula pools for exhaustive forcing checks on one Beth model.

The grammar: atoms over a fixed variable tuple, then ``And[a, b]``,
``Or[a, b]`` and ``Ex v. a`` one level at a time.  Forcing is compositional
(a formula's forcing table depends only on the tables of its parts), so it
suffices to keep one representative per distinct table at each depth.

Tables are computed here by a vectorized evaluator that materializes the
whole node-by-assignment table; the recursive evaluator in ``beth`` is then
run on every representative and compared against it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .beth import BethModel, Forcing, branch_colimit
from .semantics import eval_term, extension
from .syntax import And, Eq, Ex, Or, Rel, ordered_free_vars


class TableSpace:
    """Slots = (node, assignment of ``variables``), plus one block of slots per
    branch colimit."""

    def __init__(self, B: BethModel, variables):
        self.B = B
        self.vars = tuple(variables)
        n = len(B)
        self.shapes = [tuple(B.structures[k].carriers[v.sort] for v in self.vars) for k in range(n)]
        sizes = [int(np.prod(s, dtype=np.int64)) for s in self.shapes]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.size = int(self.offsets[-1])
        # children before parents
        order, stack = [], [B.root]
        while stack:
            k = stack.pop()
            order.append(k)
            stack.extend(B.children(k))
        self.bottom_up = order[::-1]
        self.step = {}
        for c in range(n):
            p = B.parents[c]
            if p >= 0:
                self.step[c] = self._transport_index(p, c)
        self.branches = B.branches()
        self.colimits = [branch_colimit(B, b) for b in self.branches]
        cshapes = [tuple(col.structure.carriers[v.sort] for v in self.vars) for col in self.colimits]
        csizes = [int(np.prod(s, dtype=np.int64)) for s in cshapes]
        self.cshapes = cshapes
        self.coffsets = np.concatenate([[0], np.cumsum(csizes)]).astype(np.int64)
        self.csize = int(self.coffsets[-1])

    def node_slots(self, k):
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def assignments(self, k):
        return itertools.product(*(range(d) for d in self.shapes[k]))

    def _transport_index(self, k, l):
        """Slot of ``l`` reached from each slot of ``k`` (k an ancestor of l)."""
        B = self.B
        out = []
        for tup in self.assignments(k):
            img = tuple(B.transport(k, l, v.sort, e) for v, e in zip(self.vars, tup))
            out.append(int(self.offsets[l]) + (np.ravel_multi_index(img, self.shapes[l])
                                               if img else 0))
        return np.array(out, dtype=np.int64)

    # -- vectorized forcing

    def bar(self, P):
        """Least table containing P that holds at a node once it holds at all children."""
        out = P.copy()
        for k in self.bottom_up:
            kids = self.B.children(k)
            if not kids:
                continue
            sl = self.node_slots(k)
            acc = np.ones((P.shape[0], sl.stop - sl.start), dtype=bool)
            for c in kids:
                acc &= out[:, self.step[c]]
            out[:, sl] |= acc
        return out

    def _literal(self, atom):
        vals = np.zeros(self.size, dtype=bool)
        for k in range(len(self.B)):
            D = self.B.structures[k]
            base = int(self.offsets[k])
            for i, tup in enumerate(self.assignments(k)):
                rho = dict(zip(self.vars, tup))
                vals[base + i] = _atom_true(D, atom, rho)
        return vals

    def _exists_raw(self, T, idxs):
        out = np.empty_like(T)
        for k in range(len(self.B)):
            sl = self.node_slots(k)
            shape = (T.shape[0],) + self.shapes[k]
            block = T[:, sl].reshape(shape)
            for i in idxs:
                block = np.broadcast_to(block.any(axis=1 + i, keepdims=True), shape)
            out[:, sl] = block.reshape(T.shape[0], -1)
        return out

    def _cexists(self, C, idxs):
        out = np.empty_like(C)
        for b in range(len(self.colimits)):
            sl = slice(int(self.coffsets[b]), int(self.coffsets[b + 1]))
            shape = (C.shape[0],) + self.cshapes[b]
            block = C[:, sl].reshape(shape)
            for i in idxs:
                block = np.broadcast_to(block.any(axis=1 + i, keepdims=True), shape)
            out[:, sl] = block.reshape(C.shape[0], -1)
        return out

    def atom_tables(self, atom):
        lit = self._literal(atom)[None, :]
        col = np.zeros(self.csize, dtype=bool)
        for b, cb in enumerate(self.colimits):
            base = int(self.coffsets[b])
            M = cb.structure
            for i, tup in enumerate(itertools.product(*(range(d) for d in self.cshapes[b]))):
                col[base + i] = _atom_true(M, atom, dict(zip(self.vars, tup)))
        return self.bar(lit)[0], col


def _atom_true(M, atom, rho):
    if isinstance(atom, Rel):
        return bool(M.relations[atom.name][tuple(eval_term(M, rho, t) for t in atom.args)])
    return eval_term(M, rho, atom.lhs) == eval_term(M, rho, atom.rhs)


@dataclass
class Pool:
    space: TableSpace
    formulas: list                      # representatives
    force_tables: np.ndarray            # oracle tables, one row per representative
    colimit_tables: np.ndarray
    depth_of: list
    candidates: dict = field(default_factory=dict)   # depth -> syntactic candidates seen


def default_atoms(sig, variables):
    """Every relation and equality atom over ``variables`` (sort-correct)."""
    out = []
    for name, args in sig.relations:
        pools = [[v for v in variables if v.sort == s] for s in args]
        for tup in itertools.product(*pools):
            out.append(Rel(name, tuple(tup)))
    for a, b in itertools.combinations(variables, 2):
        if a.sort == b.sort:
            out.append(Eq(a, b))
    return out


def build_pool(B: BethModel, variables, atoms, depth=3, chunk=20_000) -> Pool:
    sp = TableSpace(B, variables)
    formulas, F, C, depth_of = [], [], [], []
    seen = {}

    def offer(fs, Ft, Ct, d):
        keys = np.concatenate([np.packbits(Ft, axis=1), np.packbits(Ct, axis=1)], axis=1)
        for i, f in enumerate(fs):
            k = keys[i].tobytes()
            if k not in seen:
                seen[k] = len(formulas)
                formulas.append(f)
                F.append(Ft[i])
                C.append(Ct[i])
                depth_of.append(d)

    base_F, base_C = [], []
    for a in atoms:
        f, c = sp.atom_tables(a)
        base_F.append(f)
        base_C.append(c)
    top = (np.ones(sp.size, bool), np.ones(sp.csize, bool))
    bot = (np.zeros(sp.size, bool), np.zeros(sp.csize, bool))
    offer([And(()), Or(())] + list(atoms), np.array([top[0], bot[0]] + base_F),
          np.array([top[1], bot[1]] + base_C), 0)
    counts = {0: len(atoms) + 2}
    for d in range(1, depth + 1):
        n = len(formulas)
        Fm, Cm = np.array(F), np.array(C)
        pairs = list(itertools.combinations(range(n), 2))
        counts[d] = 2 * len(pairs) + len(variables) * n
        for start in range(0, len(pairs), chunk):
            block = np.array(pairs[start:start + chunk], dtype=np.int64)
            i, j = block[:, 0], block[:, 1]
            conj_F = Fm[i] & Fm[j]
            conj_C = Cm[i] & Cm[j]
            disj_F = sp.bar(Fm[i] | Fm[j])
            disj_C = Cm[i] | Cm[j]
            fs = [And((formulas[a], formulas[b])) for a, b in block]
            offer(fs, conj_F, conj_C, d)
            fs = [Or((formulas[a], formulas[b])) for a, b in block]
            offer(fs, disj_F, disj_C, d)
        for vi, v in enumerate(variables):
            ex_F = sp.bar(sp._exists_raw(Fm, [vi]))
            ex_C = sp._cexists(Cm, [vi])
            offer([Ex((v,), formulas[a]) for a in range(n)], ex_F, ex_C, d)
    return Pool(sp, formulas, np.array(F), np.array(C), depth_of, counts)


# ---------------------------------------------------------------------------
# checks on a pool (tables come from the recursive evaluator)

@dataclass
class PoolReport:
    formulas: int = 0
    slots: int = 0
    oracle_mismatches: int = 0
    monotonicity: int = 0
    persistence: int = 0
    leaf_collapse: int = 0
    branch_claim: int = 0
    examples: list = field(default_factory=list)

    @property
    def ok(self):
        return not (self.oracle_mismatches or self.monotonicity or self.persistence
                    or self.leaf_collapse or self.branch_claim)


def forced_tables(pool: Pool, forcer: Forcing | None = None) -> np.ndarray:
    """Forcing tables of the representatives, by the recursive evaluator."""
    sp = pool.space
    fz = forcer or Forcing(sp.B)
    out = np.zeros((len(pool.formulas), sp.size), dtype=bool)
    assigns = [(k, int(sp.offsets[k]) + i, dict(zip(sp.vars, tup)))
               for k in range(len(sp.B)) for i, tup in enumerate(sp.assignments(k))]
    for r, f in enumerate(pool.formulas):
        fv = set(ordered_free_vars(f))
        for k, slot, rho in assigns:
            out[r, slot] = fz.force(k, f, {v: e for v, e in rho.items() if v in fv})
    return out


def check_pool(pool: Pool, T: np.ndarray | None = None) -> PoolReport:
    sp, B = pool.space, pool.space.B
    if T is None:
        T = forced_tables(pool)
    rep = PoolReport(len(pool.formulas), sp.size)
    mism = T != pool.force_tables
    rep.oracle_mismatches = int(mism.any(axis=1).sum())
    # monotonicity: k forces iff every branch through k meets l >= k forcing
    for k in range(len(B)):
        sl = sp.node_slots(k)
        rhs = np.ones((T.shape[0], sl.stop - sl.start), dtype=bool)
        for b in sp.branches:
            if k not in b:
                continue
            hit = np.zeros_like(rhs)
            for l in b[b.index(k):]:
                hit |= T[:, sp._transport_index(k, l)]
            rhs &= hit
        bad = T[:, sl] != rhs
        rep.monotonicity += int(bad.sum())
        # persistence along every k <= l
        for l in B.subtree(k):
            idx = sp._transport_index(k, l)
            rep.persistence += int((T[:, sl] & ~T[:, idx]).sum())
        # leaf collapse against the tensor evaluator
        if B.is_leaf(k):
            D = B.structures[k]
            for r, f in enumerate(pool.formulas):
                ext = extension(D, f, sp.vars).reshape(-1)
                if ext.shape[0] != sl.stop - sl.start:
                    ext = np.broadcast_to(ext, (sl.stop - sl.start,))
                n = int((ext != T[r, sl]).sum())
                rep.leaf_collapse += n
                if n and len(rep.examples) < 5:
                    rep.examples.append(("leaf", k, str(f)))
    # branch claim: D_b |= phi(a) iff some node on b forces phi at representatives
    for bi, (b, col) in enumerate(zip(sp.branches, sp.colimits)):
        base = int(sp.coffsets[bi])
        shape = sp.cshapes[bi]
        rhs = np.zeros((T.shape[0], int(np.prod(shape, dtype=np.int64))), dtype=bool)
        for n in b:
            for i, tup in enumerate(sp.assignments(n)):
                img = tuple(int(col.injections[n][v.sort][e]) for v, e in zip(sp.vars, tup))
                j = np.ravel_multi_index(img, shape) if img else 0
                rhs[:, j] |= T[:, int(sp.offsets[n]) + i]
        for r, f in enumerate(pool.formulas):
            ext = extension(col.structure, f, sp.vars).reshape(-1)
            n = int((ext != rhs[r]).sum())
            rep.branch_claim += n
            if n and len(rep.examples) < 5:
                rep.examples.append(("branch", bi, str(f)))
        # the oracle's colimit tables must agree with the tensor evaluator too
        cs = slice(base, base + rhs.shape[1])
        rep.oracle_mismatches += int((pool.colimit_tables[:, cs] != rhs).any(axis=1).sum())
    return rep
