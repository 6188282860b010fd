"""JSON encodings for syntax, structures, Beth models and proofs.

Every AST node is an object with a ``kind`` field.  Models store function
tables as nested arrays and relations as lists of tuples.
"""
from __future__ import annotations

import json

import numpy as np

from .beth import BethModel
from .calculus import Proof, ProofNode, TreeInstance
from .semantics import FiniteStructure
from .syntax import (And, App, Eq, Ex, Or, Rel, Sequent, Signature, Theory, Var)


class FormatError(ValueError):
    pass


# -- syntax

def term_to_json(t):
    if isinstance(t, Var):
        return {"kind": "var", "name": t.name, "sort": t.sort}
    if isinstance(t, App):
        return {"kind": "app", "fn": t.fn, "args": [term_to_json(a) for a in t.args],
                "sort": t.sort}
    raise FormatError(f"not a term: {t!r}")


def formula_to_json(f):
    match f:
        case Rel(name, args):
            return {"kind": "rel", "name": name, "args": [term_to_json(a) for a in args]}
        case Eq(lhs, rhs):
            return {"kind": "eq", "lhs": term_to_json(lhs), "rhs": term_to_json(rhs)}
        case And(parts):
            return {"kind": "and", "parts": [formula_to_json(p) for p in parts]}
        case Or(parts):
            return {"kind": "or", "parts": [formula_to_json(p) for p in parts]}
        case Ex(vs, body):
            return {"kind": "ex", "vars": [term_to_json(v) for v in vs],
                    "body": formula_to_json(body)}
    raise FormatError(f"not a formula: {f!r}")


def sequent_to_json(s: Sequent):
    return {"kind": "sequent", "antecedent": formula_to_json(s.antecedent),
            "consequent": formula_to_json(s.consequent),
            "context": [term_to_json(v) for v in s.context]}


def signature_to_json(sig: Signature):
    return {"sorts": list(sig.sorts),
            "functions": [{"name": n, "args": list(a), "result": r} for n, a, r in sig.functions],
            "relations": [{"name": n, "args": list(a)} for n, a in sig.relations]}


def theory_to_json(t: Theory):
    return {"kind": "theory", "signature": signature_to_json(t.signature),
            "axioms": [{"name": n, "sequent": sequent_to_json(s)} for n, s in t.axioms]}


def _need(d, key, kind=None):
    if not isinstance(d, dict):
        raise FormatError(f"expected an object, got {type(d).__name__}")
    if kind is not None and d.get("kind") != kind:
        raise FormatError(f"expected kind {kind!r}, got {d.get('kind')!r}")
    if key not in d:
        raise FormatError(f"missing field {key!r}")
    return d[key]


def term_from_json(d):
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind == "var":
        return Var(_need(d, "name"), _need(d, "sort"))
    if kind == "app":
        return App(_need(d, "fn"), tuple(term_from_json(a) for a in _need(d, "args")),
                   _need(d, "sort"))
    raise FormatError(f"unknown term kind {kind!r}")


def formula_from_json(d):
    kind = d.get("kind") if isinstance(d, dict) else None
    match kind:
        case "rel":
            return Rel(_need(d, "name"), tuple(term_from_json(a) for a in _need(d, "args")))
        case "eq":
            return Eq(term_from_json(_need(d, "lhs")), term_from_json(_need(d, "rhs")))
        case "and":
            return And(tuple(formula_from_json(p) for p in _need(d, "parts")))
        case "or":
            return Or(tuple(formula_from_json(p) for p in _need(d, "parts")))
        case "ex":
            return Ex(tuple(term_from_json(v) for v in _need(d, "vars")),
                      formula_from_json(_need(d, "body")))
    raise FormatError(f"unknown formula kind {kind!r}")


def sequent_from_json(d):
    return Sequent(formula_from_json(_need(d, "antecedent", "sequent")),
                   formula_from_json(_need(d, "consequent")),
                   tuple(term_from_json(v) for v in _need(d, "context")))


def signature_from_json(d):
    return Signature(tuple(_need(d, "sorts")),
                     tuple((f["name"], tuple(f["args"]), f["result"]) for f in d.get("functions", ())),
                     tuple((r["name"], tuple(r["args"])) for r in d.get("relations", ())))


def theory_from_json(d):
    sig = signature_from_json(_need(d, "signature", "theory"))
    return Theory(sig, tuple((a["name"], sequent_from_json(a["sequent"]))
                             for a in d.get("axioms", ())))


# -- structures

def structure_to_json(M: FiniteStructure):
    return {"carriers": {s: int(n) for s, n in M.carriers.items()},
            "functions": {f: np.asarray(t).tolist() for f, t in M.functions.items()},
            "relations": {r: [list(map(int, tup)) for tup in np.argwhere(t)]
                          for r, t in M.relations.items()}}


def structure_from_json(d, sig: Signature) -> FiniteStructure:
    carriers = {s: int(n) for s, n in _need(d, "carriers").items()}
    for s in sig.sorts:
        if s not in carriers:
            raise FormatError(f"no carrier for sort {s}")
    fns = {}
    given = d.get("functions", {})
    for name, args, _ in sig.functions:
        if name not in given:
            raise FormatError(f"no table for function {name}")
        fns[name] = np.asarray(given[name], dtype=np.int64).reshape(
            tuple(carriers[s] for s in args))
    rels = {}
    given = d.get("relations", {})
    for name, args in sig.relations:
        tab = np.zeros(tuple(carriers[s] for s in args), dtype=bool)
        for tup in given.get(name, []):
            if len(tup) != len(args):
                raise FormatError(f"tuple {tup} has the wrong length for {name}")
            if any(not 0 <= int(e) < carriers[s] for e, s in zip(tup, args)):
                raise FormatError(f"tuple {tup} leaves the carriers of {name}")
            tab[tuple(int(e) for e in tup)] = True
        rels[name] = tab
    try:
        return FiniteStructure(sig, carriers, fns, rels)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def beth_to_json(B: BethModel):
    return {"signature": signature_to_json(B.signature), "nodes": len(B),
            "parents": list(B.parents),
            "structures": [structure_to_json(D) for D in B.structures],
            "maps": [None if m is None else {s: np.asarray(a).tolist() for s, a in m.items()}
                     for m in B.maps]}


def beth_from_json(d, sig: Signature | None = None) -> BethModel:
    if sig is None:
        sig = signature_from_json(_need(d, "signature"))
    parents = _need(d, "parents")
    structs = [structure_from_json(m, sig) for m in _need(d, "structures")]
    maps = d.get("maps") or [None] * len(parents)
    return BethModel(sig, tuple(parents), tuple(structs), tuple(maps)).validate()


# -- proofs

_FORMULA_KEYS = ("formula", "antecedent", "consequent", "body")
_VARLIST_KEYS = ("context", "xs", "ys", "vars")


def tree_to_json(t: TreeInstance):
    return {"branching": t.branching, "height": t.height,
            "formulas": [{"node": list(k), "formula": formula_to_json(v)}
                         for k, v in sorted(t.formulas.items())],
            "bar": [list(b) for b in sorted(t.bar)],
            "fresh": [{"node": list(k), "vars": [term_to_json(v) for v in vs]}
                      for k, vs in sorted(t.fresh.items())],
            "limit_levels": list(t.limit_levels)}


def tree_from_json(d) -> TreeInstance:
    return TreeInstance(
        int(_need(d, "branching")), int(_need(d, "height")),
        {tuple(e["node"]): formula_from_json(e["formula"]) for e in _need(d, "formulas")},
        frozenset(tuple(b) for b in _need(d, "bar")),
        {tuple(e["node"]): tuple(term_from_json(v) for v in e["vars"]) for e in d.get("fresh", ())},
        tuple(d.get("limit_levels", ())))


def payload_to_json(p: dict):
    out = {}
    for k, v in p.items():
        if v is None:
            out[k] = None
        elif k in _FORMULA_KEYS:
            out[k] = formula_to_json(v)
        elif k in _VARLIST_KEYS:
            out[k] = [term_to_json(x) for x in v]
        elif k == "var":
            out[k] = term_to_json(v)
        elif k == "subst":
            items = v.items() if isinstance(v, dict) else v
            out[k] = [[term_to_json(a), term_to_json(b)] for a, b in items]
        elif k == "disjuncts":
            out[k] = [formula_to_json(x) for x in v]
        elif k == "tree":
            out[k] = tree_to_json(v)
        elif k == "nodes":
            out[k] = [list(n) for n in v]
        elif k in ("index", "name"):
            out[k] = v
        else:
            raise FormatError(f"unknown payload field {k!r}")
    return out


def payload_from_json(d: dict):
    out = {}
    for k, v in d.items():
        if v is None:
            out[k] = None
        elif k in _FORMULA_KEYS:
            out[k] = formula_from_json(v)
        elif k in _VARLIST_KEYS:
            out[k] = tuple(term_from_json(x) for x in v)
        elif k == "var":
            out[k] = term_from_json(v)
        elif k == "subst":
            out[k] = {term_from_json(a): term_from_json(b) for a, b in v}
        elif k == "disjuncts":
            out[k] = tuple(formula_from_json(x) for x in v)
        elif k == "tree":
            out[k] = tree_from_json(v)
        elif k == "nodes":
            out[k] = tuple(tuple(n) for n in v)
        elif k in ("index", "name"):
            out[k] = v
        else:
            raise FormatError(f"unknown payload field {k!r}")
    return out


def proof_to_json(p: Proof):
    return {"theory": p.theory, "name": p.name,
            "nodes": [{"sequent": sequent_to_json(n.sequent), "rule": n.rule,
                       "premises": list(n.premises), "payload": payload_to_json(n.payload)}
                      for n in p.nodes],
            "root": p.root}


def proof_from_json(d) -> Proof:
    nodes = []
    for i, n in enumerate(_need(d, "nodes")):
        try:
            nodes.append(ProofNode(sequent_from_json(n["sequent"]), n["rule"],
                                   tuple(n.get("premises", ())),
                                   payload_from_json(n.get("payload", {}))))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"node {i}: {exc}") from None
    return Proof(tuple(nodes), d.get("root"), d.get("theory", ""),
                 d.get("name", ""))


def dumps(obj, **kw):
    return json.dumps(obj, sort_keys=True, **kw)
