from geolog.beth import is_model_of
from geolog.calculus import RULES, check_proof
from geolog.corpus import build_corpus, load_corpus, write_corpus
from geolog.parsing import format_sequent


def test_corpus_contents():
    cor = build_corpus()
    assert len(cor.proofs) >= 20
    assert set().union(*(p.rules_used() for _, p in cor.proofs)) == set(RULES)
    assert len({p.name for _, p in cor.proofs}) == len(cor.proofs)
    for tname, B in cor.beth:
        assert len(B) <= 15 and is_model_of(B, cor.theories[tname])


def test_write_then_load(tmp_path):
    cor = build_corpus()
    write_corpus(tmp_path, cor)
    again = load_corpus(tmp_path)
    assert [(t, p.name) for t, p in again.proofs] == [(t, p.name) for t, p in cor.proofs]
    for (t, p), (_, q) in zip(cor.proofs, again.proofs):
        assert check_proof(again.theories[t], q)
        assert format_sequent(p.conclusion) == format_sequent(q.conclusion)
    assert len(again.beth) == len(cor.beth)


def test_checked_in_corpus_matches_generator(monkeypatch):
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "corpus"
    monkeypatch.setenv("GEO_CORPUS", str(root))
    golden = load_corpus()
    fresh = build_corpus()
    assert [format_sequent(p.conclusion) for _, p in golden.proofs] == \
        [format_sequent(p.conclusion) for _, p in fresh.proofs]


def test_build_is_deterministic():
    a, b = build_corpus(), build_corpus()
    assert [p.nodes for _, p in a.proofs] == [p.nodes for _, p in b.proofs]
    assert all(x.parents == y.parents for (_, x), (_, y) in zip(a.beth, b.beth))
