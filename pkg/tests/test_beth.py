import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geolog.beth import (BethError, BethModel, Forcing, beth_countermodel, branch_colimit,
                         check_branch_claim, check_leaf_collapse, check_monotonicity,
                         check_persistence, constant_domain, force, is_model_of,
                         random_beth_model, single_node)
from geolog.parsing import parse_formula, parse_sequent, parse_theory
from geolog.semantics import FiniteStructure, satisfies
from geolog.syntax import Or, Rel, Sequent, Signature, Theory, Var

SIG = Signature(("S",), (("c", (), "S"),), (("P", ("S",)), ("Q", ("S",)), ("R", ("S",))))


def node(P=(), Q=(), R=(), n=1):
    rel = lambda idx: np.isin(np.arange(n), idx)
    return FiniteStructure(SIG, {"S": n}, {"c": np.array(0)},
                           {"P": rel(P), "Q": rel(Q), "R": rel(R)})


def F(text):
    return parse_formula(text, SIG, {"x": "S", "y": "S"})


def split_model():
    """Root with two leaves: R at both, P only left, Q only right."""
    return constant_domain(SIG, (-1, 0, 0), [node(), node(P=[0], R=[0]), node(Q=[0], R=[0])])


def test_forcing_examples():
    B = split_model().validate()
    assert force(B, 0, F("R(c)"), {})
    assert force(B, 0, F("Or[P(c), Q(c)]"), {})
    assert not force(B, 0, F("P(c)"), {})
    assert not force(B, 0, F("Q(c)"), {})
    assert force(B, 1, F("P(c)"), {})


def test_models_of_theories():
    B = split_model()
    assert is_model_of(B, Theory(SIG, ()))
    bot = parse_theory("sort S\nfunc c : -> S\nrel P : S\nrel Q : S\nrel R : S\n"
                       "axiom b: true |- [] Or[]\n")
    assert not is_model_of(B, bot)
    split = parse_theory("sort S\nfunc c : -> S\nrel P : S\nrel Q : S\nrel R : S\n"
                         "axiom s: true |- [] Or[P(c), Q(c)]\n")
    assert is_model_of(B, split)


def test_validation_rejects_bad_trees():
    M = node()
    with pytest.raises(BethError):
        BethModel(SIG, (-1, -1), (M, M), (None, None))
    with pytest.raises(BethError):
        BethModel(SIG, (1, 0), (M, M), (None, None))
    # a transition that drops a relation instance
    lossy = BethModel(SIG, (-1, 0), (node(P=[0]), node()), (None, {"S": np.array([0])}))
    with pytest.raises(BethError):
        lossy.validate()


def test_colimit_single_node_and_chain():
    M = node(P=[0], n=2)
    col = branch_colimit(single_node(M), [0])
    assert col.structure.carriers == {"S": 2}
    assert col.structure.relations["P"].tolist() == M.relations["P"].tolist()
    inj = BethModel(SIG, (-1, 0), (node(n=2), node(Q=[1], n=3)),
                    (None, {"S": np.array([0, 1])}))
    col = branch_colimit(inj.validate(), [0, 1])
    assert col.structure.carriers == {"S": 3}
    assert col.structure.relations["Q"].tolist() == [False, True, False]


def test_colimit_merges_elements():
    B = BethModel(SIG, (-1, 0), (node(n=2), node(n=1)),
                  (None, {"S": np.array([0, 0])})).validate()
    col = branch_colimit(B, [0, 1])
    assert col.structure.carriers["S"] == 1 < col.disjoint_size["S"]


def test_colimit_needs_maximal_chain():
    with pytest.raises(BethError):
        branch_colimit(split_model(), [0])


class LocalTruth(Forcing):
    """Corrupted evaluator: classical truth at the node, ignoring the future."""

    def force(self, k, f, rho):
        return satisfies(self.B.structures[k], rho, f)


FORMULAS = [F(t) for t in ("R(c)", "P(c)", "Or[P(c), Q(c)]", "Ex y. P(y)",
                           "And[R(x), Or[P(x), Q(x)]]")]


def test_negative_control_corrupted_evaluator():
    B = split_model()
    assert check_monotonicity(B, FORMULAS).ok
    assert not check_monotonicity(B, FORMULAS, LocalTruth(B)).ok
    bad = check_monotonicity(B, FORMULAS, LocalTruth(B)).violations
    # exactly the formulas whose truth at the root comes from the leaves
    assert {str(f) for f, *_ in bad} == {"R(c)", "Or[P(c), Q(c)]", "And[R(x), Or[P(x), Q(x)]]"}


REL = Signature(("S",), (), (("P", ("S",)), ("R", ("S", "S"))))
REL_FORMULAS = [parse_formula(t, REL, {"x": "S", "y": "S"}) for t in (
    "P(x)", "R(x, y)", "x = y", "Or[P(x), R(x, x)]", "Ex y. R(x, y)",
    "Ex y. And[R(x, y), Or[P(y), y = x]]", "Or[Ex y. And[P(y), R(y, x)], P(x)]",
    "And[Or[P(x), P(y)], Ex x. R(y, x)]")]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_forcing_properties_on_random_models(seed):
    B = random_beth_model(REL, np.random.default_rng(seed), max_nodes=10, max_size=3)
    fz = Forcing(B)
    assert check_monotonicity(B, REL_FORMULAS, fz).ok
    assert check_persistence(B, REL_FORMULAS, fz).ok
    assert check_leaf_collapse(B, REL_FORMULAS, fz).ok
    assert check_branch_claim(B, None, REL_FORMULAS, fz).ok


def test_countermodel_single_node():
    T = Theory(SIG, ())
    B = beth_countermodel(T, parse_sequent("P(x) |- [x:S] Q(x)", SIG), max_nodes=3, max_size=1)
    assert B is not None and len(B) == 1


def test_countermodel_for_axiom_is_none():
    s = parse_sequent("P(x) |- [x:S] Q(x)", SIG)
    T = Theory(SIG, (("ax", s),))
    assert beth_countermodel(T, s, max_nodes=3, max_size=1) is None


def test_countermodel_needs_a_split():
    T = parse_theory("sort S\nrel P : S\nrel Q : S\n"
                     "axiom d: true |- [] Or[Ex x:S. P(x), Ex x:S. Q(x)]\n")
    s = parse_sequent("true |- [] Ex x:S. P(x)", T.signature)
    B = beth_countermodel(T, s, max_nodes=3, max_size=1, min_nodes=3)
    assert B is not None and len(B) == 3 and is_model_of(B, T)
    assert not Forcing(B).forces_sequent(0, s)


def test_forces_sequent_or_bot():
    B = split_model()
    x = Var("x", "S")
    assert Forcing(B).forces_sequent(0, Sequent(Or(()), Rel("P", (x,)), (x,)))
