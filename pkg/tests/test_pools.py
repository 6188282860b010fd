import numpy as np

from geolog.beth import Forcing, constant_domain, random_beth_model
from geolog.semantics import FiniteStructure
from geolog.pools import build_pool, check_pool, default_atoms, forced_tables
from geolog.syntax import Eq, Or, Rel, Signature, Var

SIG = Signature(("S",), (), (("P", ("S",)), ("R", ("S", "S"))))
XY = (Var("x", "S"), Var("y", "S"))


def test_default_atoms():
    atoms = default_atoms(SIG, XY)
    assert len(atoms) == 2 + 4 + 1
    assert Eq(*XY) in atoms and Rel("R", (XY[1], XY[0])) in atoms


def test_small_pool_agrees_with_recursive_forcing():
    B = random_beth_model(SIG, np.random.default_rng(3), max_nodes=6, max_size=2)
    pool = build_pool(B, XY, default_atoms(SIG, XY), depth=2)
    assert pool.candidates[0] == 9
    rep = check_pool(pool, forced_tables(pool))
    assert rep.ok, rep
    assert rep.formulas == len(pool.formulas) > 9


def test_representatives_have_distinct_tables():
    B = random_beth_model(SIG, np.random.default_rng(5), max_nodes=5, max_size=2)
    pool = build_pool(B, XY, default_atoms(SIG, XY), depth=2)
    keys = {pool.force_tables[i].tobytes() + pool.colimit_tables[i].tobytes()
            for i in range(len(pool.formulas))}
    assert len(keys) == len(pool.formulas)


class Forgetful(Forcing):
    """Corrupted evaluator: disjunctions only count if decided at the node."""

    def force(self, k, f, rho):
        if isinstance(f, Or):
            return any(super(Forgetful, self).force(k, p, rho) for p in f.parts)
        return super().force(k, f, rho)


def _split_model():
    # node 1 decides nothing but its children split the disjunction;
    # node 4 keeps the root from forcing it
    def D(p, r):
        return FiniteStructure(SIG, {"S": 2}, {},
                               {"P": np.full(2, p), "R": np.full((2, 2), r)})
    return constant_domain(SIG, [-1, 0, 1, 1, 0],
                           [D(False, False), D(False, False), D(True, False),
                            D(False, True), D(False, False)])


def test_corrupted_evaluator_is_caught():
    B = _split_model()
    x = XY[0]
    pool = build_pool(B, (x,), [Rel("P", (x,)), Rel("R", (x, x))], depth=1)
    assert check_pool(pool, forced_tables(pool)).ok
    rep = check_pool(pool, forced_tables(pool, Forgetful(B)))
    assert rep.oracle_mismatches > 0
