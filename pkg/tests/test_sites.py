import pytest

from geolog.parsing import format_sequent, parse_theory
from geolog.semantics import is_model
from geolog.sites import (CategoryData, CategoryError, Cone, CoverTree, CoveringFamily,
                          PresMorphism, Presentation, Site, SiteError, TopologyBasis,
                          check_property_T, close_topology, covers_from_axioms, free,
                          functor_structure, identity, identity_family, internal_theory)
from geolog.syntax import App, Eq, Var

SPLIT = parse_theory("""\
sort S
func a : -> S
func b : -> S
func f : S -> S
axiom split: true |- [x:S] Or[x = a, x = b]
axiom surj2: true |- [x:S] Or[Ex y:S. f(y) = x, Ex y:S. f(y) = x]
axiom one: f(x) = a |- [x:S] x = b
axiom none: a = b |- [] Or[]
""")
S = "S"
x, y = Var("x", S), Var("y", S)
a, b = App("a", (), S), App("b", (), S)
fx = lambda t: App("f", (t,), S)


def test_presentation_keys_ignore_names_and_trivia():
    P = Presentation((x,), (Eq(x, a), Eq(x, x)))
    Q = Presentation((y,), (Eq(a, y),))
    assert P.equations == (Eq(x, a),)
    assert P.key() == Q.key()
    with pytest.raises(SiteError):
        Presentation((x,), (Eq(y, a),))


def test_identity_morphism_is_its_context():
    P = Presentation((x, y), ())
    assert identity(P).terms == (x, y)


def test_covers_from_axioms_shapes():
    fams = {F.label: F for F in covers_from_axioms(SPLIT)}
    assert len(fams["split"]) == 2
    assert len(fams["surj2"]) == 2
    for m in fams["surj2"].members:
        assert len(m.domain.context) == 2 and m.is_inclusion()
        assert m.domain.equations[0].lhs == fx(m.domain.context[1])
    assert len(fams["one"]) == 1
    assert len(fams["none"]) == 0 and fams["none"].codomain.equations == (Eq(a, b),)


def test_morphisms_must_respect_equations():
    site = Site(SPLIT, 1)
    Pa = Presentation((x,), (Eq(x, a),))
    assert site.is_morphism(Pa, free(y), (x,))
    assert not site.is_morphism(free(x), Pa, (x,))
    assert site.is_morphism(free(x), Pa, (a,))
    with pytest.raises(SiteError):
        PresMorphism(free(), free(x), (x,))


def test_pullback_is_substituted_family():
    site = Site(SPLIT, 1)
    F = next(F for F in site.covers if F.label == "split")
    h = PresMorphism(free(y), free(x), (fx(y),))
    G = site.pullback(F, h)
    assert G.codomain.key() == free(y).key()
    got = sorted(tuple(str(e) for e in m.domain.equations) for m in G.members)
    want = sorted([(str(Eq(fx(y), a)),), (str(Eq(fx(y), b)),)])
    assert got == want


def test_pullback_along_a_constant_collapses_members():
    site = Site(SPLIT, 1)
    F = next(F for F in site.covers if F.label == "split")
    G = site.pullback(F, PresMorphism(free(), free(x), (a,)))
    # a = a is provable, so that member is the whole object; a = b stays
    eqs = sorted(len(m.domain.equations) for m in G.members)
    assert eqs == [0, 1]


def test_identity_basis_is_closed():
    site = Site(parse_theory("sort S\nfunc c : -> S\n"), 1)
    basis = [identity_family(free(x)), identity_family(free())]
    closed = close_topology(site, basis, pullback_depth=1, composite_height=2,
                            objects=[free(), free(x)])
    assert len(closed) == 2 and not closed.partial


def test_stacked_families_compose():
    T = parse_theory("sort S\nfunc a : -> S\nfunc b : -> S\n"
                     "axiom split: true |- [x:S] Or[x = a, x = b]\n"
                     "axiom split2: true |- [x:S, y:S] Or[y = a, y = b]\n")
    site = Site(T, 1)
    F1 = next(F for F in site.covers if F.label == "split2")
    F2 = site.pullback(next(F for F in site.covers if F.label == "split"),
                       PresMorphism(F1.members[0].domain, free(x), (x,)))
    comp = site.compose_family(F1, {0: F2})
    assert len(comp) == 3 and comp.height == 2
    F3 = site.pullback(next(F for F in site.covers if F.label == "split"),
                       PresMorphism(F1.members[1].domain, free(x), (x,)))
    both = site.compose_family(F1, {0: F2, 1: F3})
    assert len(both) == 4
    basis = close_topology(site, site.covers, pullback_depth=0, composite_height=2)
    assert both in basis


def _split_site():
    T = parse_theory("sort S\nfunc a : -> S\nfunc b : -> S\n"
                     "axiom split: true |- [x:S] Or[x = a, x = b]\n")
    return Site(T, 1)


def test_property_t():
    site = _split_site()
    closed = close_topology(site, site.covers, pullback_depth=1, composite_height=2)
    F = site.covers[0]
    assert check_property_T(site, closed, CoverTree(F))
    stack = CoverTree(F, {i: CoverTree(closed.over(m.domain)[0])
                          for i, m in enumerate(F.members)})
    assert check_property_T(site, closed, stack)
    thin = close_topology(site, site.covers, pullback_depth=1, composite_height=1)
    assert not check_property_T(site, thin, stack)
    with pytest.raises(SiteError):
        check_property_T(site, TopologyBasis([]), stack)


def test_topology_closure_is_pullback_stable():
    site = _split_site()
    closed = close_topology(site, site.covers, pullback_depth=1, composite_height=2)
    assert closed.pullback_closed and closed.composition_closed
    pool = list(site.objects)
    for F in closed.families:
        for P in pool:
            for h in site.hom(P, F.codomain, 1):
                assert site.pullback(F, h) in closed


def test_closure_cap_reports_partial():
    site = Site(SPLIT, 1)
    capped = close_topology(site, site.covers, pullback_depth=1, max_families=5)
    assert capped.partial and not capped.pullback_closed


def test_family_member_codomain_checked():
    with pytest.raises(SiteError):
        CoveringFamily(free(x), (identity(free()),))


def _product():
    arrows = {"1A": ("A", "A"), "1B": ("B", "B"), "1P": ("P", "P"),
              "p": ("P", "A"), "q": ("P", "B")}
    ids = {"A": "1A", "B": "1B", "P": "1P"}
    comp = {}
    for f, (d, c) in arrows.items():
        comp[(ids[c], f)] = f
        comp[(f, ids[d])] = f
    return arrows, ids, comp


def test_internal_theory_one_object():
    C = CategoryData(("X",), {"Id": ("X", "X")}, {"X": "Id"}, {("Id", "Id"): "Id"})
    (name, s), = internal_theory(C).axioms
    assert format_sequent(s) == "And[] |- [x:X] Id(x) = x"


def test_internal_theory_product_cone():
    arrows, ids, comp = _product()
    C = CategoryData(("A", "B", "P"), arrows, ids, comp, (Cone("P", ("p", "q")),))
    T = internal_theory(C)
    texts = [format_sequent(s) for _, s in T.axioms]
    assert "And[] |- [x0:A, x1:B] Ex x:P. (And[p(x) = x0, q(x) = x1])" in texts
    assert "And[p(x) = p(y), q(x) = q(y)] |- [x:P, y:P] x = y" in texts
    good = functor_structure(C, {"A": 2, "B": 2, "P": 4},
                             {"1A": [0, 1], "1B": [0, 1], "1P": [0, 1, 2, 3],
                              "p": [0, 0, 1, 1], "q": [0, 1, 0, 1]})
    short = functor_structure(C, {"A": 2, "B": 2, "P": 3},
                              {"1A": [0, 1], "1B": [0, 1], "1P": [0, 1, 2],
                               "p": [0, 0, 1], "q": [0, 1, 0]})
    doubled = functor_structure(C, {"A": 1, "B": 1, "P": 2},
                                {"1A": [0], "1B": [0], "1P": [0, 1], "p": [0, 0], "q": [0, 0]})
    assert is_model(good, T)
    assert not is_model(short, T)        # (1, 1) has no preimage
    assert not is_model(doubled, T)      # the legs are not jointly monic


def test_internal_theory_cover():
    arrows = {"1X": ("X", "X"), "1Y": ("Y", "Y"), "f": ("X", "Y")}
    ids = {"X": "1X", "Y": "1Y"}
    comp = {("1X", "1X"): "1X", ("1Y", "1Y"): "1Y", ("f", "1X"): "f", ("1Y", "f"): "f"}
    C = CategoryData(("X", "Y"), arrows, ids, comp, covers=("f",))
    texts = [format_sequent(s) for _, s in internal_theory(C).axioms]
    assert "And[] |- [y:Y] Ex x:X. (f(x) = y)" in texts
    onto = functor_structure(C, {"X": 2, "Y": 1}, {"1X": [0, 1], "1Y": [0], "f": [0, 0]})
    not_onto = functor_structure(C, {"X": 1, "Y": 2}, {"1X": [0], "1Y": [0, 1], "f": [0]})
    T = internal_theory(C)
    assert is_model(onto, T) and not is_model(not_onto, T)


def test_category_validation():
    with pytest.raises(CategoryError):
        CategoryData(("X",), {"Id": ("X", "X")}, {"X": "Id"}, {}).validate()
    with pytest.raises(CategoryError):
        CategoryData.from_json({"objects": ["X"]})
