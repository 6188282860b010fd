import itertools

import numpy as np
from hypothesis import given, settings, strategies as st

from formula_gen import CONTEXT, SIG, random_formula
from geolog.derivations import distributivity_target, distributivity_theory
from geolog.parsing import parse_sequent, parse_theory
from geolog.semantics import (FiniteStructure, countermodel, enumerate_models, extension,
                              is_model, satisfies, structure_batches, valid,
                              violating_assignment)
from geolog.syntax import Or, Rel, Sequent, Signature, Theory, Var

ONE = Signature(("S",), (), (("R", ("S",)), ("P", ("S",)), ("Q", ("S",))))
x = Var("x", "S")


def M2(R=(0,), P=(), Q=()):
    rel = lambda idx: np.isin(np.arange(2), idx)
    return FiniteStructure(ONE, {"S": 2}, {}, {"R": rel(R), "P": rel(P), "Q": rel(Q)})


def test_atom_and_empty_join():
    M = M2()
    assert satisfies(M, {x: 0}, Rel("R", (x,)))
    assert not satisfies(M, {x: 1}, Rel("R", (x,)))
    assert not satisfies(M, {x: 0}, Or(()))


def test_validity_examples():
    M = M2(P=(1,))
    P = Rel("P", (x,))
    assert valid(M, Sequent(P, P, (x,)))
    assert valid(M, Sequent(Or(()), P, (x,)))
    assert not valid(M, Sequent(P, Or(()), (x,)))
    assert violating_assignment(M, Sequent(P, Or(()), (x,))) == {x: 1}


def test_inconsistent_theory_has_no_models():
    T = parse_theory("sort S\naxiom bot: true |- [] Or[]\n")
    assert list(enumerate_models(T, 2)) == []


def test_empty_theory_counts():
    T = Theory(Signature(("S",), (), ()), ())
    assert [M.carriers["S"] for M in enumerate_models(T, 1)] == [0, 1]


def test_pointed_set_count():
    T = parse_theory("sort S\nfunc c : -> S\n")
    # no model on the empty carrier; one choice of c on 1 element, two on 2
    assert len(list(enumerate_models(T, 2))) == 3


def test_countermodel_examples():
    T = Theory(ONE, ())
    s = parse_sequent("P(x) |- [x:S] Q(x)", ONE)
    M = countermodel(T, s, 2)
    assert M.carriers == {"S": 1} and M.relations["P"].tolist() == [True]
    assert not M.relations["Q"].any()
    T2 = Theory(ONE, (("ax", s),))
    assert countermodel(T2, s, 2) is None


def test_swapped_distributivity_has_countermodel():
    T, atoms = distributivity_theory(2, 2)
    good = distributivity_target(atoms)
    # pair each row-0 choice with the *same* column of row 1 only: a proper subset
    # of the f-indexed disjuncts, so the sequent fails somewhere at size 2
    bad_con = Or(tuple(d for d in good.consequent.parts
                       if d.parts[0].name[-1] == d.parts[1].name[-1]))
    bad = Sequent(good.antecedent, bad_con, good.context)
    M = countermodel(T, bad, 2)
    assert M is not None and not valid(M, bad) and valid(M, good)


def test_is_model():
    T = parse_theory("sort S\nrel R : S\naxiom all: true |- [x:S] R(x)\n")
    full = FiniteStructure(T.signature, {"S": 2}, {}, {"R": np.array([True, True])})
    half = FiniteStructure(T.signature, {"S": 2}, {}, {"R": np.array([True, False])})
    assert is_model(full, T) and not is_model(half, T)


def _random_structure(rng, sizes):
    fns = {"c": rng.integers(sizes["A"]),
           "f": rng.integers(sizes["B"], size=sizes["A"])}
    rels = {"P": rng.random(sizes["A"]) < 0.5, "Q": rng.random(sizes["B"]) < 0.5,
            "R": rng.random((sizes["A"], sizes["B"])) < 0.5}
    return FiniteStructure(SIG, sizes, fns, rels)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tensor_evaluator_matches_reference(seed):
    rng = np.random.default_rng(seed)
    f = random_formula(rng, depth=3)
    M = _random_structure(rng, {"A": int(rng.integers(1, 4)), "B": int(rng.integers(1, 4))})
    ext = extension(M, f, CONTEXT)
    for a, b in itertools.product(range(M.carriers["A"]), range(M.carriers["B"])):
        assert ext[a, b] == satisfies(M, dict(zip(CONTEXT, (a, b))), f)


def test_batches_enumerate_every_structure_once():
    seen = set()
    for batch in structure_batches(SIG, {"A": 1, "B": 2}):
        for M in batch:
            key = (int(M.functions["c"]), tuple(M.functions["f"].tolist()),
                   tuple(M.relations["P"].tolist()), tuple(M.relations["Q"].tolist()),
                   tuple(M.relations["R"].ravel().tolist()))
            assert key not in seen
            seen.add(key)
    # c: 1, f: 2^1, P: 2, Q: 4, R: 4
    assert len(seen) == 1 * 2 * 2 * 4 * 4
