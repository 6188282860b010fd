"""The syntactic site of monoids where every element squares to the unit, equality by congruence closure, and a
Beth approximation checked against the axioms.

Run: python3 demos/monoid_site.py
"""
from geolog.congruence import certify, provable_eq
from geolog.harness import build_beth_approximation, forcing_experiment
from geolog.parsing import parse_term, parse_theory
from geolog.sites import free, syntactic_site
from geolog.syntax import Var

T = parse_theory("""
sort M
func e : -> M
func m : M, M -> M
axiom lu: true |- [x:M] m(e, x) = x
axiom ru: true |- [x:M] m(x, e) = x
axiom assoc: true |- [x:M, y:M, z:M] m(m(x, y), z) = m(x, m(y, z))
axiom inv: true |- [x:M] m(x, x) = e
""")
sig = T.signature
x, y = Var("x", "M"), Var("y", "M")
ctx = {"x": "M", "y": "M"}

lhs = parse_term("m(m(e, x), m(y, e))", sig, ctx)
rhs = parse_term("m(x, y)", sig, ctx)
print("units cancel:", provable_eq(sig, (x, y), (), lhs, rhs, depth=2, theory=T))
proof = certify(T, (x, y), (), lhs, rhs, depth=2)
print("certificate nodes:", len(proof.nodes), "rules:", sorted(proof.rules_used()))

site = syntactic_site(T, 1, [free(), free(x)])
print("objects in the site:", len(site.objects))

approx = build_beth_approximation(site, free(x), 3, site.covers)
print(f"approximation: {len(approx.model)} nodes at levels {approx.levels}")
rep = forcing_experiment(T, approx)
print(rep.table())
print("axioms forced everywhere:", rep.ok)
