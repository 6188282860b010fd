"""Refute a few sequents: first classically, then with a Beth model.

Run: python3 demos/countermodels.py
"""
import numpy as np

from geolog.beth import Forcing, beth_countermodel, constant_domain, is_model_of
from geolog.parsing import parse_formula, parse_sequent, parse_theory
from geolog.semantics import FiniteStructure, countermodel

T = parse_theory("""
sort S
func c : -> S
rel P : S
rel Q : S
axiom cover: true |- [x:S] Or[P(x), Q(x)]
""")

for text in ["Q(x) |- [x:S] P(x)", "true |- [] P(c)", "P(x) |- [x:S] Or[P(x), Q(x)]"]:
    s = parse_sequent(text, T.signature)
    M = countermodel(T, s, max_size=2)
    verdict = "valid up to size 2" if M is None else f"refuted, carriers {dict(M.carriers)}"
    print(f"{text:34s} {verdict}")

# A Beth model of the theory where the root forces the cover axiom without
# deciding either disjunct: each child settles it differently.
def node(p, q):
    return FiniteStructure(T.signature, {"S": 1}, {"c": 0},
                           {"P": np.array([p]), "Q": np.array([q])})


B = constant_domain(T.signature, [-1, 0, 0], [node(False, False), node(True, False), node(False, True)])
assert is_model_of(B, T)
fz = Forcing(B)
print("\nnode:            0 1 2")
for text in ["P(c)", "Q(c)", "Or[P(c), Q(c)]"]:
    f = parse_formula(text, T.signature)
    print(f"  {text:14s} " + " ".join("+" if fz.force(k, f, {}) else "." for k in range(len(B))))

s = parse_sequent("true |- [] Or[P(c), Q(c)]", T.signature)
print("\nBeth search for a countermodel to the cover at c:",
      beth_countermodel(T, s, max_nodes=5, max_size=1))
