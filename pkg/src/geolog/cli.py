"""``geo``: command-line front end.

Exit codes: 0 success/accepted/valid, 1 rejected/countermodel found/violations,
2 usage or input errors.  Results go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .beth import BethError, Forcing, assignments_at, beth_countermodel
from .calculus import RULES, check_proof
from .derivations import (choice_theory, derive_choice, derive_distributivity,
                          distributivity_theory)
from .harness import (BethApproximation, ExperimentReport, build_beth_approximation,
                      forcing_experiment, pairing, schedule, soundness_experiment)
from .parsing import (ParseError, format_formula, format_sequent, format_term, format_theory,
                      parse_formula, parse_sequent, parse_theory)
from .semantics import countermodel, valid, violating_assignment
from .serialize import (FormatError, beth_from_json, beth_to_json, dumps, proof_from_json,
                        proof_to_json, sequent_from_json, structure_from_json,
                        structure_to_json)
from .sites import CategoryData, SiteError, free, internal_theory, syntactic_site
from .syntax import SyntaxError_, Var, canonical_form, canonical_sequent, free_vars

OK, FAIL, USAGE = 0, 1, 2


class InputError(Exception):
    """Bad invocation or unreadable input; maps to exit code 2."""


# ---------------------------------------------------------------------------
# helpers

def _read(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{path}: no such file")
    return p.read_text()


def _json(path):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _theory(path):
    return parse_theory(_read(path))


class Output:
    def __init__(self, pretty):
        self.pretty = pretty

    def emit(self, payload, table=None):
        if self.pretty and table is not None:
            print(table)
        else:
            print(dumps(payload, indent=1 if self.pretty else None))


def _table(rows):
    return ExperimentReport(rows=rows).table()


def _context(text, sig):
    """``x:S, y:T`` -> variables."""
    out = []
    for part in filter(None, (p.strip() for p in (text or "").split(","))):
        name, _, sort = part.partition(":")
        if sort.strip() not in sig.sorts:
            raise InputError(f"unknown sort in context entry {part!r}")
        out.append(Var(name.strip(), sort.strip()))
    return tuple(out)


# ---------------------------------------------------------------------------
# subcommands

def cmd_check(a, out):
    T = _theory(a.theory)
    p = proof_from_json(_json(a.proof))
    rules = tuple(r for r in RULES if r != "RuleT") if a.without_rule_t else RULES
    v = check_proof(T, p, rules)
    out.emit({"verdict": "accepted" if v else "rejected", "node": v.node,
              "error": v.error, "message": v.message,
              "conclusion": format_sequent(p.conclusion) if v else None},
             str(v))
    return OK if v else FAIL


def cmd_normalize(a, out):
    T = _theory(a.theory)
    if (a.formula is None) == (a.sequent is None):
        raise InputError("give exactly one of --formula or --sequent")
    if a.formula is not None:
        text = format_formula(canonical_form(parse_formula(a.formula, T.signature)))
    else:
        text = format_sequent(canonical_sequent(parse_sequent(a.sequent, T.signature)))
    out.emit({"canonical": text}, text)
    return OK


def cmd_eval(a, out):
    T = _theory(a.theory)
    M = structure_from_json(_json(a.model), T.signature)
    s = parse_sequent(a.sequent, T.signature)
    if valid(M, s):
        out.emit({"valid": True}, "valid")
        return OK
    rho = violating_assignment(M, s)
    w = {v.name: int(e) for v, e in rho.items()}
    out.emit({"valid": False, "witness": w}, f"invalid at {w}")
    return FAIL


def cmd_countermodel(a, out):
    T = _theory(a.theory)
    s = parse_sequent(a.sequent, T.signature)
    if a.beth:
        B = beth_countermodel(T, s, max_nodes=a.max_nodes, max_size=a.max_size)
        if B is None:
            out.emit({"found": False}, "no Beth countermodel within bounds")
            return OK
        out.emit({"found": True, "beth": beth_to_json(B)},
                 f"Beth countermodel with {len(B)} nodes")
        return FAIL
    M = countermodel(T, s, a.max_size)
    if M is None:
        out.emit({"found": False}, f"no countermodel with carriers <= {a.max_size}")
        return OK
    out.emit({"found": True, "model": structure_to_json(M)},
             f"countermodel with carriers {dict(M.carriers)}")
    return FAIL


def cmd_force(a, out):
    d = _json(a.beth)
    sig = _theory(a.theory).signature if a.theory else None
    B = beth_from_json(d, sig)
    if not 0 <= a.node < len(B):
        raise InputError(f"node {a.node} is not in the model (0..{len(B) - 1})")
    f = parse_formula(a.formula, B.signature)
    fz = Forcing(B)
    fv = sorted(free_vars(f), key=lambda v: v.name)
    rho = {}
    for item in a.assign or ():
        name, _, val = item.partition("=")
        match = [v for v in fv if v.name == name]
        if not match:
            raise InputError(f"--assign {item}: {name} is not free in the formula")
        rho[match[0]] = int(val)
    missing = [v for v in fv if v not in rho]
    rows = []
    for extra in assignments_at(B, a.node, missing):
        r = {**rho, **extra}
        rows.append({"assignment": {v.name: int(e) for v, e in r.items()},
                     "forced": fz.force(a.node, f, r)})
    every = all(r["forced"] for r in rows)
    out.emit({"node": a.node, "formula": format_formula(f), "rows": rows, "all": every},
             _table([{"assignment": r["assignment"], "forced": r["forced"]} for r in rows]))
    return OK if every else FAIL


def cmd_site(a, out):
    T = _theory(a.theory)
    seeds = [free()] + [free(Var("x", s)) for s in T.signature.sorts]
    site = syntactic_site(T, a.depth, seeds)
    objs = site.objects
    homs = []
    for i, P in enumerate(objs):
        for j, Q in enumerate(objs):
            hs = site.hom(P, Q, a.depth)
            homs.append({"from": i, "to": j,
                         "morphisms": [[format_term(t) for t in h.terms] for h in hs]})
    fams = [{"label": F.label, "codomain": str(F.codomain),
             "members": [str(m.domain) for m in F.members]} for F in site.covers]
    out.emit({"objects": [str(P) for P in objs], "homs": homs, "families": fams},
             "\n".join([f"{i}: {P}" for i, P in enumerate(objs)]
                       + [f"{h['from']} -> {h['to']}: {len(h['morphisms'])}" for h in homs]
                       + [f"cover {F['label']}: {F['codomain']} <- {F['members']}"
                          for F in fams]))
    return OK


def cmd_internal(a, out):
    C = CategoryData.from_json(_json(a.category))
    T = internal_theory(C)
    text = format_theory(T)
    out.emit({"theory": text}, text)
    return OK


def cmd_pair(a, out):
    if a.level is not None:
        beta, gamma = schedule(a.level)
        out.emit({"level": a.level, "beta": beta, "gamma": gamma}, f"{beta} {gamma}")
        return OK
    if a.beta is None or a.gamma is None:
        raise InputError("give --beta and --gamma, or --level")
    v = pairing(a.beta, a.gamma)
    out.emit({"beta": a.beta, "gamma": a.gamma, "value": v}, str(v))
    return OK


def _approx(T, height, root_text, depth):
    site = syntactic_site(T, depth)
    root = free(*_context(root_text, T.signature))
    return build_beth_approximation(site, root, height, site.covers)


def _approx_json(ap: BethApproximation):
    d = beth_to_json(ap.model)
    d["presentations"] = [str(P) for P in ap.presentations]
    d["levels"] = list(ap.levels)
    d["scheduled"] = [None if s is None else list(s) for s in ap.scheduled]
    return d


def cmd_approx(a, out):
    T = _theory(a.theory)
    ap = _approx(T, a.height, a.root, a.depth)
    d = _approx_json(ap)
    if a.out:
        Path(a.out).write_text(dumps(d) + "\n")
        print(f"wrote {len(ap.model)} nodes to {a.out}", file=sys.stderr)
    out.emit(d if not a.out else {"nodes": len(ap.model), "out": a.out},
             "\n".join(f"{'  ' * lv}{k}: {P}" for k, (lv, P) in
                       enumerate(zip(ap.levels, ap.presentations))))
    return OK


def _soundness_chunk(args):
    T, proofs, max_size, beths = args
    return soundness_experiment(T, proofs, max_size, beths)


def cmd_experiment(a, out):
    cfg = _json(a.config)
    base = Path(a.config).parent

    def rel(p):
        return str(base / p)

    if "theory" not in cfg:
        raise InputError(f"{a.config}: config needs a 'theory' path")
    T = _theory(rel(cfg["theory"]))
    if a.kind == "soundness":
        proofs = [proof_from_json(_json(rel(p))) for p in cfg.get("proofs", [])]
        beths = [beth_from_json(_json(rel(p)), T.signature) for p in cfg.get("beth", [])]
        max_size = int(cfg.get("max_size", 3))
        if a.jobs > 1 and len(proofs) > 1:
            chunks = [proofs[i::a.jobs] for i in range(a.jobs)]
            with ProcessPoolExecutor(a.jobs) as ex:
                parts = list(ex.map(_soundness_chunk,
                                    [(T, c, max_size, beths) for c in chunks if c]))
            rep = ExperimentReport()
            for part in parts:
                rep.rows += part.rows
                rep.violations += part.violations
                rep.rejected += part.rejected
            names = [p.name for p in proofs]
            rep.rows.sort(key=lambda r: names.index(r["proof"]) if r["proof"] in names else 0)
        else:
            rep = soundness_experiment(T, proofs, max_size, beths)
        bad = rep.violations or rep.rejected
    else:
        ap = _approx(T, int(cfg.get("height", 2)), cfg.get("root", ""), int(cfg.get("depth", 2)))
        seqs = None
        if "sequents" in cfg:
            seqs = [parse_sequent(s, T.signature) if isinstance(s, str) else sequent_from_json(s)
                    for s in cfg["sequents"]]
        rep = forcing_experiment(T, ap, seqs)
        bad = rep.violations
    out.emit(rep.to_json(), rep.table())
    return FAIL if bad else OK


def cmd_derive(a, out):
    if a.kind == "distributivity":
        if a.delta is None:
            raise InputError("distributivity needs --delta")
        T, _ = distributivity_theory(a.gamma, a.delta)
        p = derive_distributivity(a.gamma, a.delta)
    else:
        T, _, _ = choice_theory()
        p = derive_choice(a.gamma)
    v = check_proof(T, p)
    d = proof_to_json(p)
    if a.out:
        Path(a.out).write_text(dumps(d) + "\n")
        Path(a.out).with_suffix(".geo").write_text(format_theory(T))
        print(f"wrote {len(p.nodes)} nodes to {a.out}", file=sys.stderr)
        out.emit({"verdict": str(v), "nodes": len(p.nodes), "out": a.out},
                 f"{v}: {format_sequent(p.conclusion)}")
    else:
        out.emit(d, f"{v}: {format_sequent(p.conclusion)} ({len(p.nodes)} nodes)")
    return OK if v else FAIL


def cmd_corpus(a, out):
    directory = a.dir or corpus_mod.corpus_dir()
    if a.action == "write":
        root = corpus_mod.write_corpus(directory, corpus_mod.build_corpus(a.seed))
        print(f"corpus written to {root}", file=sys.stderr)
        return OK
    if not Path(directory, "index.json").is_file():
        raise InputError(f"{directory}: no corpus index (set GEO_CORPUS or pass --dir)")
    cor = corpus_mod.load_corpus(directory)
    rows = []
    for tname, p in cor.proofs:
        rows.append({"proof": p.name, "theory": tname,
                     "verdict": str(check_proof(cor.theories[tname], p))})
    bad = [r for r in rows if r["verdict"] != "accepted"]
    out.emit({"proofs": rows, "beth": len(cor.beth), "ok": not bad}, _table(rows))
    return FAIL if bad else OK


# ---------------------------------------------------------------------------
# parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="human-readable tables")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized generators")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="geo", parents=[common],
                                 description="Workbench for geometric sequent logic.")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(fn=fn)
        return p

    p = cmd("check", cmd_check, "check a proof script")
    p.add_argument("proof")
    p.add_argument("--theory", required=True)
    p.add_argument("--without-rule-t", action="store_true",
                   help="check in the calculus without the transfinite-tree rule")

    p = cmd("normalize", cmd_normalize, "canonical form of a formula or sequent")
    p.add_argument("--theory", required=True)
    p.add_argument("--formula")
    p.add_argument("--sequent")

    p = cmd("eval", cmd_eval, "validity of a sequent in a finite structure")
    p.add_argument("--theory", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--sequent", required=True)

    p = cmd("countermodel", cmd_countermodel, "search for a countermodel")
    p.add_argument("--theory", required=True)
    p.add_argument("--sequent", required=True)
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--beth", action="store_true", help="search Beth models instead")
    p.add_argument("--max-nodes", type=int, default=15)

    p = cmd("force", cmd_force, "Beth forcing at a node")
    p.add_argument("--beth", required=True)
    p.add_argument("--node", type=int, default=0)
    p.add_argument("--formula", required=True)
    p.add_argument("--theory", help="signature source if the model file lacks one")
    p.add_argument("--assign", action="append", metavar="VAR=ELEM")

    p = cmd("site", cmd_site, "dump the bounded syntactic site")
    p.add_argument("--theory", required=True)
    p.add_argument("--depth", type=int, default=2)

    p = cmd("internal", cmd_internal, "internal theory of a finite category")
    p.add_argument("--category", required=True)

    p = cmd("pair", cmd_pair, "pairing function and its inverse")
    p.add_argument("--beta", type=int)
    p.add_argument("--gamma", type=int)
    p.add_argument("--level", type=int, help="invert: which pair is scheduled at this level")

    p = cmd("approx", cmd_approx, "finite Beth approximation of the syntactic site")
    p.add_argument("--theory", required=True)
    p.add_argument("--height", type=int, default=2)
    p.add_argument("--root", default="", help="root context, e.g. 'x:S, y:S'")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--out")

    p = cmd("experiment", cmd_experiment, "soundness or forcing experiment")
    p.add_argument("kind", choices=("soundness", "forcing"))
    p.add_argument("--config", required=True)

    p = cmd("derive", cmd_derive, "emit a derivation")
    p.add_argument("kind", choices=("distributivity", "choice"))
    p.add_argument("--gamma", type=int, required=True)
    p.add_argument("--delta", type=int)
    p.add_argument("--out")

    p = cmd("corpus", cmd_corpus, "write or recheck the golden corpus")
    p.add_argument("action", choices=("write", "check"))
    p.add_argument("--dir", help="defaults to $GEO_CORPUS")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    np.random.seed(a.seed)
    out = Output(a.pretty)
    try:
        return a.fn(a, out)
    except InputError as exc:
        print(f"geo: {exc}", file=sys.stderr)
    except (ParseError, SyntaxError_, FormatError, BethError, SiteError, ValueError,
            KeyError, TypeError) as exc:
        if a.verbose:
            raise
        print(f"geo {a.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"geo {a.command}: {exc}", file=sys.stderr)
    return USAGE


if __name__ == "__main__":
    sys.exit(main())
