"""The golden corpus: theories, checker-accepted proofs and Beth models.

``build_corpus()`` constructs everything in memory; ``write_corpus(dir)``
stores it as ``.geo``/JSON files and ``load_corpus(dir)`` reads it back.
The CLI finds the directory through the ``GEO_CORPUS`` variable.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beth import BethModel, constant_domain, random_beth_model, single_node
from .calculus import Proof, ProofBuilder, TreeInstance
from .congruence import certify
from .derivations import (choice_theory, derive_choice, derive_distributivity,
                          distributivity_theory)
from .parsing import format_theory, parse_theory
from .semantics import FiniteStructure
from .serialize import (beth_from_json, beth_to_json, dumps, proof_from_json, proof_to_json)
from .syntax import And, App, Eq, Ex, Or, Rel, Var

BASE = """\
sort S
func c : -> S
func f : S -> S
rel P : S
rel Q : S
axiom step: P(x) |- [x:S] Q(f(x))
axiom start: true |- [] P(c)
"""

TREE = """\
sort S
rel A : S
rel B : S
rel C : S
rel D : S
rel E : S
axiom t1: A(x) |- [x:S] Or[B(x), C(x)]
axiom t2: C(x) |- [x:S] Or[D(x), E(x)]
axiom t3: A(x) |- [x:S] Or[Ex y:S. And[B(x), D(y)], C(x)]
axiom t4: And[B(x), D(y)] |- [x:S, y:S] Or[And[E(x), D(y)], Ex z:S. And[E(x), D(y), B(z)]]
axiom t5: A(x) |- [x:S] Or[B(x), C(x), D(x)]
axiom t6: D(x) |- [x:S] Or[E(x), A(x), B(x)]
"""

MONOID = """\
sort M
func e : -> M
func m : M, M -> M
axiom lu: true |- [x:M] m(e, x) = x
axiom ru: true |- [x:M] m(x, e) = x
axiom assoc: true |- [x:M, y:M, z:M] m(m(x, y), z) = m(x, m(y, z))
"""


@dataclass
class Corpus:
    theories: dict = field(default_factory=dict)        # name -> Theory
    sources: dict = field(default_factory=dict)         # name -> .geo text
    proofs: list = field(default_factory=list)          # (theory name, Proof)
    beth: list = field(default_factory=list)            # (theory name, BethModel)

    def proofs_for(self, name):
        return [p for t, p in self.proofs if t == name]

    def beth_for(self, name):
        return [B for t, B in self.beth if t == name]


# ---------------------------------------------------------------------------
# proofs

def _base_proofs(T):
    out = []
    x, y = Var("x", "S"), Var("y", "S")
    c = App("c", (), "S")
    P = lambda t: Rel("P", (t,))
    Q = lambda t: Rel("Q", (t,))

    b = ProofBuilder(T)
    start = b.add("Axiom", name="start")
    step = b.add("Axiom", name="step")
    inst = b.add("Substitution", (step,), subst={x: c}, context=())
    b.cut(start, inst)
    out.append(b.proof(name="base/q_of_fc"))

    b = ProofBuilder(T)
    pq = And((P(x), Q(x)))
    b.conj([b.proj(pq, 1, (x,)), b.proj(pq, 0, (x,))])
    out.append(b.proof(name="base/and_comm"))

    b = ProofBuilder(T)
    qor = Or((Q(x), P(x)))
    b.cases([b.inj(qor, 1, (x,)), b.inj(qor, 0, (x,))])
    out.append(b.proof(name="base/or_comm"))

    b = ProofBuilder(T)
    b.add("EqSubst", xs=(x,), ys=(y,), formula=P(x), context=(x, y))
    out.append(b.proof(name="base/leibniz"))

    b = ProofBuilder(T)
    ex = Ex((y,), P(y))
    b.add("ExistsIntro", (b.identity(ex, ()),), vars=(x,))
    out.append(b.proof(name="base/witness"))

    b = ProofBuilder(T)
    ex_z = Ex((Var("z", "S"),), P(Var("z", "S")))
    into = b.add("ExistsIntro", (b.identity(ex_z, ()),), vars=(y,))
    b.add("ExistsElim", (into,), vars=(y,))
    out.append(b.proof(name="base/rename_exists"))

    b = ProofBuilder(T)
    b.add("SmallDistrib", formula=P(x), disjuncts=(Q(x), P(_f(x))), context=(x,))
    out.append(b.proof(name="base/small_distrib"))

    b = ProofBuilder(T)
    b.add("Frobenius", formula=Q(x), vars=(y,), body=P(y), context=(x,))
    out.append(b.proof(name="base/frobenius"))

    b = ProofBuilder(T)
    b.cases([], consequent=P(c), context=())
    out.append(b.proof(name="base/ex_falso"))

    b = ProofBuilder(T)
    b.conj([], antecedent=Q(x), context=(x,))
    out.append(b.proof(name="base/to_top"))

    p = certify(T, (x,), [Eq(_f(x), x)], _f(_f(x)), x, 2)
    out.append(Proof(p.nodes, p.root, name="base/eq_chain"))

    b = ProofBuilder(T)
    refl = b.add("EqRefl", var=x)
    b.add("Substitution", (refl,), subst={x: _f(c)}, context=())
    out.append(b.proof(name="base/refl_fc"))
    return out


def _f(t):
    return App("f", (t,), "S")


def _tree_proofs(T):
    """Rule T on three bars that are not uniform."""
    x, y, z = Var("x", "S"), Var("y", "S"), Var("z", "S")
    R = lambda n, v: Rel(n, (v,))
    out = []

    b = ProofBuilder(T)
    tree = TreeInstance(2, 2, {(): R("A", x), (0,): R("B", x), (1,): R("C", x),
                               (1, 0): R("D", x), (1, 1): R("E", x)},
                        frozenset({(0,), (1, 0), (1, 1)}))
    prem = [b.add("Axiom", name="t1"), b.add("Axiom", name="t2")]
    b.add("RuleT", prem, tree=tree, nodes=((), (1,)))
    out.append(b.proof(name="tree/skewed"))

    b = ProofBuilder(T)
    bd = And((R("B", x), R("D", y)))
    tree = TreeInstance(2, 2, {(): R("A", x), (0,): bd, (1,): R("C", x),
                               (0, 0): And((R("E", x), R("D", y))),
                               (0, 1): And((R("E", x), R("D", y), R("B", z)))},
                        frozenset({(0, 0), (0, 1), (1,)}),
                        {(0,): (y,), (0, 1): (z,)})
    prem = [b.add("Axiom", name="t3"), b.add("Axiom", name="t4")]
    t_step = b.add("RuleT", prem, tree=tree, nodes=((), (0,)))
    # close with a cut against the identity on the conclusion
    con = b.seq(t_step).consequent
    b.cut(t_step, b.identity(con, (x,)))
    out.append(b.proof(name="tree/fresh"))

    b = ProofBuilder(T)
    tree = TreeInstance(3, 2, {(): R("A", x), (0,): R("B", x), (1,): R("C", x),
                               (2,): R("D", x), (2, 0): R("E", x), (2, 1): R("A", x),
                               (2, 2): R("B", x)},
                        frozenset({(0,), (1,), (2, 0), (2, 1), (2, 2)}))
    prem = [b.add("Axiom", name="t5"), b.add("Axiom", name="t6")]
    b.add("RuleT", prem, tree=tree, nodes=((), (2,)))
    out.append(b.proof(name="tree/ternary"))
    return out


def _monoid_proofs(T):
    x = Var("x", "M")
    e = App("e", (), "M")
    m = lambda a, b: App("m", (a, b), "M")
    out = []
    p = certify(T, (x,), [], m(e, m(e, x)), x, 2)
    out.append(Proof(p.nodes, p.root, name="monoid/units"))
    p = certify(T, (x,), [], m(m(x, x), m(x, e)), m(x, m(x, x)), 2)
    out.append(Proof(p.nodes, p.root, name="monoid/cube"))
    return out


# ---------------------------------------------------------------------------
# Beth models

def _unary(sig, size, tables):
    rels = {}
    for name, args in sig.relations:
        t = np.zeros((size,) * len(args), dtype=bool)
        for tup in tables.get(name, ()):
            t[tup if isinstance(tup, tuple) else (tup,)] = True
        rels[name] = t
    return rels


def _tree_beth(T):
    """A constant-domain model of the tree theory with splits below the root."""
    sig = T.signature
    n = 2
    layers = [
        {},                                                   # root: nothing holds yet
        {"B": [0, 1], "E": [0, 1], "D": [0, 1]},
        {"C": [0, 1], "E": [0, 1], "D": [0, 1]},
        {"B": [0, 1], "E": [0, 1], "D": [0, 1], "A": [1]},
        {"B": [0, 1], "E": [0, 1], "D": [0, 1], "A": [0]},
        {"C": [0, 1], "E": [0, 1], "D": [0, 1], "B": [0]},
        {"C": [0, 1], "E": [0, 1], "D": [0, 1], "B": [0, 1]},
    ]
    parents = (-1, 0, 0, 1, 1, 2, 2)
    structs = [FiniteStructure(sig, {"S": n}, {}, _unary(sig, n, L)) for L in layers]
    # make every node's relations contain its parent's
    for k, p in enumerate(parents):
        if p >= 0:
            rels = {r: structs[k].relations[r] | structs[p].relations[r] for r in structs[k].relations}
            structs[k] = FiniteStructure(sig, {"S": n}, {}, rels)
    return constant_domain(sig, parents, structs).validate()


def _base_beth(T):
    """Two-element carrier, f swaps, P and Q grow along the tree."""
    sig = T.signature
    fns = {"c": np.array(0), "f": np.array([1, 0])}

    def st(P, Q):
        return FiniteStructure(sig, {"S": 2}, fns, {"P": np.array(P, bool), "Q": np.array(Q, bool)})

    parents = (-1, 0, 0)
    structs = [st([1, 0], [0, 1]), st([1, 1], [1, 1]), st([1, 0], [0, 1])]
    return constant_domain(sig, parents, structs).validate()


def _monoid_beth(T):
    sig = T.signature
    z2 = FiniteStructure(sig, {"M": 2}, {"e": np.array(0), "m": np.array([[0, 1], [1, 0]])}, {})
    triv = FiniteStructure(sig, {"M": 1}, {"e": np.array(0), "m": np.array([[0]])}, {})
    return [single_node(z2),
            BethModel(sig, (-1, 0, 0), (z2, triv, z2),
                      (None, {"M": np.array([0, 0])}, {"M": np.array([0, 1])})).validate()]


def build_corpus(seed=20261016) -> Corpus:
    rng = np.random.default_rng(seed)
    cor = Corpus()
    for name, text in (("base", BASE), ("tree", TREE), ("monoid", MONOID)):
        cor.sources[name] = text
        cor.theories[name] = parse_theory(text)
    for name, (g, d) in (("dist22", (2, 2)), ("dist23", (2, 3))):
        T, _ = distributivity_theory(g, d)
        cor.theories[name] = T
        cor.sources[name] = format_theory(T)
        cor.proofs.append((name, _renamed(derive_distributivity(g, d), f"{name}/distributivity")))
    T, _, _ = choice_theory()
    cor.theories["choice"] = T
    cor.sources["choice"] = format_theory(T)
    for g in (1, 2, 3):
        cor.proofs.append(("choice", _renamed(derive_choice(g), f"choice/choice{g}")))
    for p in _base_proofs(cor.theories["base"]):
        cor.proofs.append(("base", p))
    for p in _tree_proofs(cor.theories["tree"]):
        cor.proofs.append(("tree", p))
    for p in _monoid_proofs(cor.theories["monoid"]):
        cor.proofs.append(("monoid", p))

    cor.beth.append(("base", _base_beth(cor.theories["base"])))
    cor.beth.append(("tree", _tree_beth(cor.theories["tree"])))
    for B in _monoid_beth(cor.theories["monoid"]):
        cor.beth.append(("monoid", B))
    for name in ("choice", "dist22", "dist23"):
        for _ in range(2):
            cor.beth.append((name, random_beth_model(cor.theories[name].signature, rng,
                                                     max_nodes=15, max_size=3)))
    return cor


def _renamed(p: Proof, name):
    return Proof(p.nodes, p.root, name=name)


# ---------------------------------------------------------------------------
# files

def corpus_dir():
    d = os.environ.get("GEO_CORPUS")
    if d:
        return Path(d)
    return Path(__file__).resolve().parents[2] / "corpus"


def write_corpus(directory, cor: Corpus | None = None):
    cor = cor or build_corpus()
    root = Path(directory)
    (root / "theories").mkdir(parents=True, exist_ok=True)
    (root / "proofs").mkdir(exist_ok=True)
    (root / "beth").mkdir(exist_ok=True)
    for name, text in cor.sources.items():
        (root / "theories" / f"{name}.geo").write_text(text)
    index = {"proofs": [], "beth": []}
    for tname, p in cor.proofs:
        fname = p.name.replace("/", "__") + ".json"
        d = proof_to_json(Proof(p.nodes, p.root, tname, p.name))
        (root / "proofs" / fname).write_text(dumps(d) + "\n")
        index["proofs"].append({"file": f"proofs/{fname}", "theory": tname, "name": p.name})
    for i, (tname, B) in enumerate(cor.beth):
        fname = f"{tname}_{i}.json"
        (root / "beth" / fname).write_text(dumps(beth_to_json(B)) + "\n")
        index["beth"].append({"file": f"beth/{fname}", "theory": tname})
    (root / "index.json").write_text(json.dumps(index, indent=1, sort_keys=True) + "\n")
    return root


def load_corpus(directory=None) -> Corpus:
    root = Path(directory) if directory else corpus_dir()
    index = json.loads((root / "index.json").read_text())
    cor = Corpus()
    for path in sorted((root / "theories").glob("*.geo")):
        cor.sources[path.stem] = path.read_text()
        cor.theories[path.stem] = parse_theory(cor.sources[path.stem])
    for e in index["proofs"]:
        p = proof_from_json(json.loads((root / e["file"]).read_text()))
        cor.proofs.append((e["theory"], p))
    for e in index["beth"]:
        T = cor.theories[e["theory"]]
        cor.beth.append((e["theory"], beth_from_json(json.loads((root / e["file"]).read_text()),
                                                     T.signature)))
    return cor
