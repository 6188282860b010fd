"""Build the distributivity derivation for a few shapes and see what it costs.

Run: python3 demos/distributivity.py
"""
from geolog.calculus import RULES, check_proof
from geolog.derivations import derive_distributivity, distributivity_theory
from geolog.parsing import format_sequent

NO_T = tuple(r for r in RULES if r != "RuleT")

for gamma, delta in [(1, 1), (2, 2), (2, 3), (3, 2)]:
    T, _ = distributivity_theory(gamma, delta)
    p = derive_distributivity(gamma, delta)
    full = check_proof(T, p)
    cut = check_proof(T, p, NO_T)
    disjuncts = len(p.conclusion.consequent.parts)
    print(f"gamma={gamma} delta={delta}: {len(p.nodes):4d} nodes, "
          f"{disjuncts} disjuncts, accepted={bool(full)}, without T: {cut.error or 'accepted'}")

p = derive_distributivity(2, 2)
print()
print(format_sequent(p.conclusion))
