import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from formula_gen import CONTEXT, SIG, random_formula
from geolog.semantics import extension_batch, structure_batches
from geolog.syntax import (BOT, TOP, And, App, ContextError, Eq, Ex, NotCanonical, Or, Rel,
                           Sequent, Signature, SortError, Var, alpha_eq, canonical_form,
                           canonical_sequent, check_formula, formula_depth, free_vars,
                           is_canonical, is_canonical_sequent, ordered_free_vars,
                           rename_bound, substitute)

S = Signature(("S",), (("c", (), "S"), ("f", ("S",), "S")),
              (("P", ("S",)), ("Q", ("S",)), ("R", ("S", "S"))))
x, y, z = Var("x", "S"), Var("y", "S"), Var("z", "S")
c = App("c", (), "S")
P = lambda t: Rel("P", (t,))
Q = lambda t: Rel("Q", (t,))
R = lambda a, b: Rel("R", (a, b))


def test_free_vars_examples():
    assert free_vars(P(x)) == {x}
    assert free_vars(Ex((y,), Eq(y, x))) == {x}
    assert free_vars(TOP) == frozenset()
    assert ordered_free_vars(And((R(y, x), P(x)))) == (y, x)


def test_substitute_examples():
    assert substitute(P(x), {x: c}) == P(c)
    out = substitute(Ex((y,), R(x, y)), {x: y})
    assert isinstance(out, Ex) and out.vars[0] != y
    assert out.body == R(y, out.vars[0])
    fz = App("f", (z,), "S")
    assert substitute(Eq(x, x), {x: fz}) == Eq(fz, fz)


def test_substitute_leaves_bound_variables_alone():
    f = Ex((x,), P(x))
    assert substitute(f, {x: c}) == f


def test_alpha_eq_examples():
    assert alpha_eq(Ex((y,), P(y)), Ex((z,), P(z)))
    assert not alpha_eq(Or((P(x), Q(x))), Or((Q(x), P(x))))
    assert not alpha_eq(P(x), P(y))
    assert not alpha_eq(Ex((y,), R(x, y)), Ex((x,), R(x, x)))


def test_sort_errors():
    bad = Var("u", "T")
    with pytest.raises(SortError):
        check_formula(S, P(bad))
    with pytest.raises((SortError, Exception)):
        check_formula(S, Rel("P", (x, x)))


def test_sequent_context_must_cover_free_vars():
    with pytest.raises(ContextError):
        Sequent(P(x), Q(y), (x,))


def test_canonical_form_examples():
    assert canonical_form(P(x)) == Or((Ex((), And((P(x),))),))
    got = canonical_form(And((Or((P(x), Q(x))), R(x, x))))
    assert got == Or((Ex((), And((P(x), R(x, x)))), Ex((), And((Q(x), R(x, x))))))
    got = canonical_form(And((R(x, x), Ex((y,), P(y)))))
    assert got == Or((Ex((y,), And((R(x, x), P(y)))),))
    assert canonical_form(BOT) == Or(())
    assert canonical_form(TOP) == Or((Ex((), And(())),))


def test_canonical_sequent_examples():
    s = canonical_sequent(Sequent(P(x), Q(x), (x,)))
    assert s == Sequent(And((P(x),)), Or((Ex((), And((Q(x),))),)), (x,))
    s = canonical_sequent(Sequent(And((P(x), Q(x))), Ex((y,), R(x, y)), (x,)))
    assert s.antecedent == And((P(x), Q(x)))
    assert s.consequent == Or((Ex((y,), And((R(x, y),))),))
    assert is_canonical_sequent(s)
    with pytest.raises(NotCanonical):
        canonical_sequent(Sequent(Or((P(x), Q(x))), R(x, x), (x,)))


def test_canonical_form_renames_clashing_binders():
    f = And((Ex((y,), R(x, y)), Ex((y,), Q(y))))
    g = canonical_form(f)
    (d,) = g.parts
    assert len(set(d.vars)) == 2
    assert is_canonical(g)


def test_formula_depth():
    assert formula_depth(P(x)) == 0
    assert formula_depth(And((P(x), Or((Q(x),))))) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_canonical_form_preserves_extensions(seed):
    f = random_formula(np.random.default_rng(seed), depth=3)
    g = canonical_form(f)
    assert is_canonical(g)
    for batch in structure_batches(SIG, {"A": 2, "B": 2}):
        assert np.array_equal(extension_batch(batch, f, CONTEXT),
                              extension_batch(batch, g, CONTEXT))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_substitution_commutes_with_evaluation(seed):
    """[[f[t/x]]](rho) = [[f]](rho[x := [[t]]rho]) on a fixed structure."""
    rng = np.random.default_rng(seed)
    f = random_formula(rng, depth=3)
    xa, yb = CONTEXT
    # substitute x by c and y by f(x): exercises capture when binders reuse x
    sigma = {xa: App("c", (), "A"), yb: App("f", (xa,), "B")}
    g = substitute(f, sigma)
    batch = next(structure_batches(SIG, {"A": 2, "B": 2}))
    ef = extension_batch(batch, f, CONTEXT)          # (n, |A|, |B|)
    eg = extension_batch(batch, g, CONTEXT)
    for i in range(len(batch)):
        M = batch[i]
        cval = int(M.functions["c"])
        for a in range(2):
            fa = int(M.functions["f"][a])
            assert eg[i, a, 0] == ef[i, cval, fa] and eg[i, a, 1] == ef[i, cval, fa]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_alpha_eq_is_invariant_under_binder_renaming(seed):
    f = random_formula(np.random.default_rng(seed), depth=3)
    g = rename_bound(f, {"x", "y", "z"})
    assert alpha_eq(f, g)
    assert free_vars(g) == free_vars(f)
