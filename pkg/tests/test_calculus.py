import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from geolog.calculus import (BarNotValid, CalculusContextError, FVConditionViolated, MissingPremise, Proof,
                             ProofBuilder, ProofNode, SchemaMismatch, SideConditionViolated,
                             TreeInstance, apply_rule, apply_rule_T, check_proof,
                             validate_bar)
from geolog.corpus import build_corpus
from geolog.parsing import parse_theory
from geolog.syntax import And, Eq, Ex, Or, Rel, Sequent, Theory, Var

T = parse_theory("""\
sort S
rel P : S
rel Q : S
rel R : S
rel K : S, S
axiom pq: P(x) |- [x:S] Q(x)
""")
x, y = Var("x", "S"), Var("y", "S")
P, Q, R = (lambda t, n=n: Rel(n, (t,)) for n in "PQR")
K = lambda a, b: Rel("K", (a, b))


def test_identity():
    assert apply_rule(T, "Identity", [], {"formula": P(x)}) == Sequent(P(x), P(x), (x,))


def test_cut():
    got = apply_rule(T, "Cut", [Sequent(P(x), Q(x), (x,)), Sequent(Q(x), R(x), (x,))])
    assert got == Sequent(P(x), R(x), (x,))


def test_cut_mismatch():
    with pytest.raises(SchemaMismatch):
        apply_rule(T, "Cut", [Sequent(P(x), Q(x), (x,)), Sequent(R(x), R(x), (x,))])


def test_small_distrib():
    got = apply_rule(T, "SmallDistrib", [], {"formula": R(x), "disjuncts": (P(x), Q(x))})
    assert got == Sequent(And((R(x), Or((P(x), Q(x))))),
                          Or((And((R(x), P(x))), And((R(x), Q(x))))), (x,))


def test_frobenius_side_condition():
    with pytest.raises(SideConditionViolated):
        apply_rule(T, "Frobenius", [], {"formula": P(x), "vars": (y,), "body": K(x, y),
                                        "context": (x, y)})
    ok = apply_rule(T, "Frobenius", [], {"formula": P(x), "vars": (y,), "body": K(x, y)})
    assert ok.consequent == Ex((y,), And((P(x), K(x, y))))


def test_exists_elim_side_condition():
    prem = Sequent(K(x, y), K(x, y), (x, y))
    with pytest.raises(SideConditionViolated):
        apply_rule(T, "ExistsElim", [prem], {"vars": (y,)})
    got = apply_rule(T, "ExistsElim", [Sequent(K(x, y), P(x), (x, y))], {"vars": (y,)})
    assert got == Sequent(Ex((y,), K(x, y)), P(x), (x,))


def test_exists_intro_inverts_elim():
    s = Sequent(Ex((y,), K(x, y)), P(x), (x,))
    assert apply_rule(T, "ExistsIntro", [s]) == Sequent(K(x, y), P(x), (x, y))


def test_eq_subst():
    got = apply_rule(T, "EqSubst", [], {"xs": (x,), "ys": (y,), "formula": P(x)})
    assert got == Sequent(And((Eq(x, y), P(x))), P(y), (x, y))


def test_substitution_needs_target_context():
    prem = Sequent(P(x), Q(x), (x,))
    with pytest.raises(CalculusContextError):
        apply_rule(T, "Substitution", [prem], {"subst": {x: y}, "context": ()})


def test_rule_t_gamma_one():
    phi0 = And((P(x), K(x, y)))
    t = TreeInstance(1, 1, {(): P(x), (0,): phi0}, {(0,)}, {(0,): (y,)})
    prem = Sequent(P(x), Or((Ex((y,), phi0),)), (x,))
    got = apply_rule_T(T, t, {(): prem})
    assert got == Sequent(P(x), Or((Ex((y,), And((phi0,))),)), (x,))


def test_bar_must_meet_every_branch():
    assert validate_bar({(0,)}, 2, 1) is not None
    assert validate_bar({(0,), (1, 0), (1, 1)}, 2, 2) is None
    assert validate_bar({(0,), (0, 1), (1,)}, 2, 2) is not None       # comparable
    t = TreeInstance(2, 1, {(): P(x), (0,): Q(x), (1,): R(x)}, {(0,)})
    with pytest.raises(BarNotValid):
        apply_rule_T(T, t, {})


def test_rule_t_fresh_condition():
    t = TreeInstance(1, 1, {(): K(x, y), (0,): K(x, y)}, {(0,)}, {(0,): (y,)})
    with pytest.raises(FVConditionViolated):
        apply_rule_T(T, t, {})


def test_rule_t_missing_premise():
    t = TreeInstance(2, 1, {(): P(x), (0,): Q(x), (1,): R(x)}, {(0,), (1,)})
    with pytest.raises(MissingPremise):
        apply_rule_T(T, t, {})


def test_check_proof_verdicts():
    b = ProofBuilder(T)
    b.identity(P(x), (x,))
    assert check_proof(T, b.proof())
    bad = Proof((ProofNode(Sequent(P(x), Q(x), (x,)), "Axiom", (), {"name": "nope"}),))
    v = check_proof(T, bad)
    assert not v and v.node == 0 and v.error == "UnknownAxiom"
    forward = Proof((ProofNode(Sequent(P(x), Q(x), (x,)), "Cut", (1, 2), {}),))
    assert check_proof(T, forward).error == "MalformedProof"
    assert check_proof(T, Proof(())).error == "MalformedProof"
    garbage = Proof((ProofNode(Sequent(P(x), P(x), (x,)), "Identity", (), {}),))
    assert check_proof(T, garbage).error == "MalformedProof"


def test_wrong_recorded_sequent_is_rejected():
    b = ProofBuilder(T)
    b.identity(P(x), (x,))
    p = b.proof()
    node = dataclasses.replace(p.nodes[0], sequent=Sequent(P(x), Q(x), (x,)))
    v = check_proof(T, Proof((node,)))
    assert not v and v.error == "SchemaMismatch"


def test_rule_feature_flag():
    b = ProofBuilder(T)
    b.identity(P(x), (x,))
    assert not check_proof(T, b.proof(), rules=("Cut",))


_CORPUS = build_corpus()


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_mutated_corpus_proofs_are_rejected(data):
    tname, p = data.draw(st.sampled_from(_CORPUS.proofs))
    theory = _CORPUS.theories[tname]
    i = data.draw(st.integers(0, len(p.nodes) - 1))
    node = p.nodes[i]
    s = node.sequent
    # swap in a consequent that cannot be alpha-equal to the original
    mutated = Sequent(s.antecedent, Or((s.consequent, s.consequent, And(()))), s.context)
    nodes = list(p.nodes)
    nodes[i] = dataclasses.replace(node, sequent=mutated)
    v = check_proof(theory, Proof(tuple(nodes), p.root))
    assert not v and v.node is not None and v.node <= i


def test_corpus_is_accepted():
    for tname, p in _CORPUS.proofs:
        assert check_proof(_CORPUS.theories[tname], p), p.name


def test_empty_theory_axiom_lookup():
    with pytest.raises(Exception):
        apply_rule(Theory(T.signature, ()), "Axiom", [], {"name": "pq"})
