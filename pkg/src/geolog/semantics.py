"""Tarskian semantics in finite structures.

Two evaluators live here.  :func:`satisfies` is the textbook recursion over
one assignment.  :func:`extension` computes whole satisfaction sets as numpy
boolean tensors, one axis per context variable, and works on a
:class:`StructureBatch` (a stack of structures sharing carrier sizes) so that
model enumeration and exhaustive checks stay cheap.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .syntax import And, Eq, Ex, Or, Rel, Sequent, Signature, Theory, Var, free_vars


class UnassignedVariable(Exception):
    pass


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    """A Set-model with finite carriers ``{0..n-1}`` per sort.

    ``functions[f]`` is an int array indexed by argument elements (a 0-d
    array for constants); ``relations[R]`` is a bool array of the same kind.
    ``labels`` optionally names elements for display.
    """
    signature: Signature
    carriers: dict
    functions: dict = field(default_factory=dict)
    relations: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        sig = self.signature
        object.__setattr__(self, "functions", dict(self.functions))
        object.__setattr__(self, "relations", dict(self.relations))
        for s in sig.sorts:
            if s not in self.carriers:
                raise ValueError(f"no carrier for sort {s}")
        for name, argsorts, res in sig.functions:
            tab = np.asarray(self.functions[name], dtype=np.int64)
            shape = tuple(self.carriers[s] for s in argsorts)
            if tab.shape != shape:
                raise ValueError(f"table of {name} has shape {tab.shape}, expected {shape}")
            if tab.size and (tab.min() < 0 or tab.max() >= self.carriers[res]):
                raise ValueError(f"table of {name} leaves carrier of {res}")
            self.functions[name] = tab
        for name, argsorts in sig.relations:
            tab = np.asarray(self.relations[name], dtype=bool)
            shape = tuple(self.carriers[s] for s in argsorts)
            if tab.shape != shape:
                raise ValueError(f"relation {name} has shape {tab.shape}, expected {shape}")
            self.relations[name] = tab

    def size(self, sort):
        return self.carriers[sort]

    def elements(self, sort):
        return range(self.carriers[sort])

    def label(self, sort, e):
        labs = self.labels.get(sort)
        return labs[e] if labs else str(e)

    def as_batch(self) -> "StructureBatch":
        return StructureBatch(
            self.signature, dict(self.carriers),
            {k: v[None, ...] for k, v in self.functions.items()},
            {k: v[None, ...] for k, v in self.relations.items()})

    def same_as(self, other) -> bool:
        return (self.carriers == other.carriers
                and all(np.array_equal(v, other.functions[k]) for k, v in self.functions.items())
                and all(np.array_equal(v, other.relations[k]) for k, v in self.relations.items()))

    def __repr__(self):
        rels = {k: [tuple(int(i) for i in ix) for ix in np.argwhere(v)]
                for k, v in self.relations.items()}
        fns = {k: v.tolist() for k, v in self.functions.items()}
        return f"FiniteStructure(carriers={self.carriers}, functions={fns}, relations={rels})"


@dataclass(frozen=True, eq=False)
class StructureBatch:
    """``n`` structures with identical carriers, tables stacked on axis 0."""
    signature: Signature
    carriers: dict
    functions: dict
    relations: dict
    count: int = None

    def __post_init__(self):
        if self.count is None:
            n = 1
            for tab in itertools.chain(self.functions.values(), self.relations.values()):
                n = tab.shape[0]
                break
            object.__setattr__(self, "count", n)

    def __len__(self):
        return self.count

    def __getitem__(self, i) -> FiniteStructure:
        return FiniteStructure(self.signature, dict(self.carriers),
                               {k: v[i].copy() for k, v in self.functions.items()},
                               {k: v[i].copy() for k, v in self.relations.items()})

    def select(self, mask) -> "StructureBatch":
        idx = np.flatnonzero(mask)
        return StructureBatch(self.signature, self.carriers,
                              {k: v[idx] for k, v in self.functions.items()},
                              {k: v[idx] for k, v in self.relations.items()},
                              len(idx))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


# ---------------------------------------------------------------------------
# reference evaluator

def eval_term(M: FiniteStructure, rho, t):
    if isinstance(t, Var):
        try:
            return rho[t]
        except KeyError:
            raise UnassignedVariable(t.name) from None
    tab = M.functions[t.fn]
    return int(tab[tuple(eval_term(M, rho, a) for a in t.args)])


def satisfies(M: FiniteStructure, rho, f) -> bool:
    """Does ``M`` satisfy ``f`` under the assignment ``rho`` (Var -> element)?"""
    match f:
        case Rel(name, args):
            return bool(M.relations[name][tuple(eval_term(M, rho, a) for a in args)])
        case Eq(l, r):
            return eval_term(M, rho, l) == eval_term(M, rho, r)
        case And(parts):
            return all(satisfies(M, rho, p) for p in parts)
        case Or(parts):
            return any(satisfies(M, rho, p) for p in parts)
        case Ex(vs, body):
            inner = dict(rho)
            for tup in itertools.product(*(M.elements(v.sort) for v in vs)):
                inner.update(zip(vs, tup))
                if satisfies(M, inner, body):
                    return True
            return False
    raise TypeError(f"not a formula: {f!r}")


def assignments(M: FiniteStructure, context):
    """All assignments of the context variables, in lexicographic order."""
    for tup in itertools.product(*(M.elements(v.sort) for v in context)):
        yield dict(zip(context, tup))


# ---------------------------------------------------------------------------
# tensor evaluator

class _Tensor:
    def __init__(self, batch: StructureBatch):
        self.b = batch
        self.n = len(batch)

    def _shape1(self, ndim, axis, d):
        shape = [1] * (ndim + 1)
        shape[axis + 1] = d
        return shape

    def term(self, t, env, ndim):
        if isinstance(t, Var):
            if t not in env:
                raise UnassignedVariable(t.name)
            ax = env[t]
            d = self.b.carriers[t.sort]
            return np.arange(d).reshape(self._shape1(ndim, ax, d))
        tab = self.b.functions[t.fn]
        if not t.args:
            return tab.reshape([self.n] + [1] * ndim)
        args = [self.term(a, env, ndim) for a in t.args]
        nidx = np.arange(self.n).reshape([self.n] + [1] * ndim)
        return tab[(nidx, *args)]

    def formula(self, f, env, dims):
        ndim = len(dims)
        match f:
            case Rel(name, args):
                tab = self.b.relations[name]
                if not args:
                    return tab.reshape([self.n] + [1] * ndim)
                nidx = np.arange(self.n).reshape([self.n] + [1] * ndim)
                return tab[(nidx, *(self.term(a, env, ndim) for a in args))]
            case Eq(l, r):
                return self.term(l, env, ndim) == self.term(r, env, ndim)
            case And(parts):
                init = np.ones([1] * (ndim + 1), dtype=bool)
                return reduce(np.logical_and, (self.formula(p, env, dims) for p in parts), init)
            case Or(parts):
                init = np.zeros([1] * (ndim + 1), dtype=bool)
                return reduce(np.logical_or, (self.formula(p, env, dims) for p in parts), init)
            case Ex(vs, body):
                if not vs:
                    return self.formula(body, env, dims)
                inner = dict(env)
                new_dims = list(dims)
                for v in vs:
                    inner[v] = len(new_dims)
                    new_dims.append(self.b.carriers[v.sort])
                val = self.formula(body, inner, new_dims)
                # broadcast bound axes to their true size so that empty
                # carriers make the existential false
                shape = list(val.shape)
                for k in range(ndim, len(new_dims)):
                    shape[k + 1] = new_dims[k]
                val = np.broadcast_to(val, shape)
                return val.any(axis=tuple(range(ndim + 1, len(new_dims) + 1)))
        raise TypeError(f"not a formula: {f!r}")


def extension_batch(batch: StructureBatch, f, context) -> np.ndarray:
    """Satisfaction tensor of ``f`` of shape ``(n, |ctx_0|, |ctx_1|, ...)``."""
    context = tuple(context)
    missing = free_vars(f) - set(context)
    if missing:
        raise UnassignedVariable(", ".join(sorted(v.name for v in missing)))
    env = {v: i for i, v in enumerate(context)}
    dims = [batch.carriers[v.sort] for v in context]
    ev = _Tensor(batch)
    val = ev.formula(f, env, dims)
    return np.broadcast_to(val, [ev.n] + dims)


def extension(M: FiniteStructure, f, context) -> np.ndarray:
    """The set of context tuples satisfying ``f``, as a boolean array."""
    return extension_batch(M.as_batch(), f, context)[0]


def valid_batch(batch: StructureBatch, s: Sequent) -> np.ndarray:
    a = extension_batch(batch, s.antecedent, s.context)
    c = extension_batch(batch, s.consequent, s.context)
    ok = ~a | c
    return ok.reshape(ok.shape[0], -1).all(axis=1)


def valid(M: FiniteStructure, s: Sequent) -> bool:
    """Every context assignment satisfying the antecedent satisfies the consequent."""
    return bool(valid_batch(M.as_batch(), s)[0])


def is_model(M: FiniteStructure, T: Theory) -> bool:
    return all(valid(M, s) for _, s in T.axioms)


# ---------------------------------------------------------------------------
# enumeration

CHUNK = 1 << 15


def _symbol_cells(sig, sizes):
    """(kind, name, shape, base) for every symbol, in signature order."""
    cells = []
    for name, argsorts in sig.relations:
        cells.append(("rel", name, tuple(sizes[s] for s in argsorts), 2))
    for name, argsorts, res in sig.functions:
        cells.append(("fn", name, tuple(sizes[s] for s in argsorts), sizes[res]))
    return cells


def count_structures(sig: Signature, sizes: dict) -> int:
    total = 1
    for _, _, shape, base in _symbol_cells(sig, sizes):
        total *= base ** int(np.prod(shape, dtype=np.int64))
    return total


def structure_batches(sig: Signature, sizes: dict, chunk=CHUNK):
    """Every structure with the given carrier sizes, as batches in index order.

    Structure number ``n`` reads its tables off the mixed-radix digits of
    ``n``; the first cell of the first symbol is the most significant digit.
    """
    cells = _symbol_cells(sig, sizes)
    total = count_structures(sig, sizes)
    if total == 0:
        return
    if total >= 1 << 62:
        raise OverflowError(f"{total} structures for sizes {sizes}")
    digits = []
    for kind, name, shape, base in cells:
        k = int(np.prod(shape, dtype=np.int64))
        digits.append((kind, name, shape, base, k))
    strides = []
    stride = 1
    for kind, name, shape, base, k in reversed(digits):
        strides.append(stride)
        stride *= base ** k
    strides.reverse()
    for start in range(0, total, chunk):
        n = np.arange(start, min(total, start + chunk), dtype=np.int64)
        fns, rels = {}, {}
        for (kind, name, shape, base, k), st in zip(digits, strides):
            block = (n // st) % (base ** k) if k else np.zeros_like(n)
            cols = []
            for j in range(k):
                cols.append((block // base ** (k - 1 - j)) % base)
            tab = np.stack(cols, axis=1) if cols else np.zeros((len(n), 0), dtype=np.int64)
            tab = tab.reshape((len(n),) + shape)
            if kind == "rel":
                rels[name] = tab.astype(bool)
            else:
                fns[name] = tab
        yield StructureBatch(sig, dict(sizes), fns, rels, len(n))


def size_assignments(sig: Signature, max_size: int, min_size: int = 0):
    for tup in itertools.product(range(min_size, max_size + 1), repeat=len(sig.sorts)):
        yield dict(zip(sig.sorts, tup))


def model_batches(T: Theory, max_size: int, min_size: int = 0):
    """Batches of models of ``T`` with every carrier in ``[min_size, max_size]``."""
    for sizes in size_assignments(T.signature, max_size, min_size):
        for batch in structure_batches(T.signature, sizes):
            mask = np.ones(len(batch), dtype=bool)
            for _, ax in T.axioms:
                mask &= valid_batch(batch, ax)
                if not mask.any():
                    break
            if mask.any():
                yield batch.select(mask)


def enumerate_models(T: Theory, max_size: int, min_size: int = 0):
    """All models of ``T`` with carriers up to ``max_size``, deterministic order."""
    for batch in model_batches(T, max_size, min_size):
        yield from batch


def countermodel(T: Theory, s: Sequent, max_size: int):
    """First enumerated model of ``T`` falsifying ``s``, or ``None``.

    ``None`` only means nothing was found within the bound.
    """
    for batch in model_batches(T, max_size):
        ok = valid_batch(batch, s)
        bad = np.flatnonzero(~ok)
        if bad.size:
            return batch[int(bad[0])]
    return None


def violating_assignment(M: FiniteStructure, s: Sequent):
    for rho in assignments(M, s.context):
        if satisfies(M, rho, s.antecedent) and not satisfies(M, rho, s.consequent):
            return rho
    return None
