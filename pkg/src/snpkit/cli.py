"""Command-line front end wiring the library pipelines together.

Usage is `snpkit <subcommand> ...`:

    check-syntax  classify a sentence file and report its parameters
    stats         print the parameter quadruple of a sentence
    modelcheck    search a witness expansion of a structure
    decompose     split a sentence into connected disjuncts (writes files)
    delta         re-express a sentence with layered witness relations
    recolour      search a colour map witnessing containment
    contain       decide containment end to end
    falsify       sweep bounded structures for a separating example
    omega         rewrite a sentence into comparison-ready form
    omega-prime   order-expanded rewriting with explicit colours
    grecolour     colour-map search for guarded sentence pairs

Every JSON document except the bare `stats` quadruple carries a "schema"
field naming its layout version. Repeating an invocation yields
byte-identical output; `--jobs 1` is the deterministic reference mode.

Exit codes: 0 success (Contained for contain), 1 NotContained or a failed
check, 2 Unknown or an exhausted budget, 3 input error, 64 usage error,
65 parse error, 66 unreadable file. Errors go to standard error as one
JSON line.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .config import RunConfig, default_config
from .containment import decide_containment, falsify_containment
from .decompose import connected_decomposition
from .errors import BudgetExceeded, InputError, SnpParseError
from .hn_transform import delta_transform
from .logic import (
    SnpSentence,
    check_model,
    classify,
    parse_sentence,
    print_sentence,
    stats,
)
from .ready import gmsnp_recolouring_search, omega_prime, omega_transform
from .recolouring import check_recolouring, enumerate_colours, recolouring_search
from .structures import Structure, parse_structure, print_structure


class _UsageError(Exception):
    """Bad flags or arguments, reported with exit code 64."""


class _Parser(argparse.ArgumentParser):
    # argparse would exit(2) on its own; route through the shared error path
    def error(self, message: str) -> None:
        raise _UsageError(message)


def _emit_error(code: int, kind: str, message: str) -> int:
    doc = {"schema": "snpkit.error/1", "code": code, "kind": kind, "message": message}
    print(json.dumps(doc, sort_keys=True, separators=(",", ":")), file=sys.stderr)
    return code


def _print_json(doc: Dict) -> None:
    print(json.dumps(doc, sort_keys=True, separators=(",", ":")))


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _read_sentence(path: str) -> SnpSentence:
    return parse_sentence(_read_text(path))


def _read_structure(path: str, sentence: SnpSentence) -> Structure:
    return parse_structure(_read_text(path), sentence.input_sig)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text if text.endswith("\n") else text + "\n")


def _stem(path: Path) -> Path:
    return path.with_suffix("") if path.suffix == ".snp" else path


def _out_base(args) -> Path:
    base = _stem(Path(args.file))
    out_dir = getattr(args, "out_dir", None)
    return Path(out_dir) / base.name if out_dir else base


def _config_from(args) -> RunConfig:
    cfg = default_config()
    if getattr(args, "paper_scale", False):
        print(
            "warning: --paper-scale removes the safety caps; "
            "the constructions are double-exponential and may not finish",
            file=sys.stderr,
        )
        cfg = replace(cfg, budget=10**15, max_clauses=10**9, max_clause_vars=None)
    budget = getattr(args, "budget", None)
    if budget is not None:
        cfg = cfg.with_budget(budget)
    jobs = getattr(args, "jobs", None)
    if jobs is not None:
        cfg = replace(cfg, jobs=jobs)
    return cfg


def _validate_common(args) -> None:
    budget = getattr(args, "budget", None)
    if budget is not None and budget < 0:
        raise _UsageError("--budget must be non-negative")
    jobs = getattr(args, "jobs", None)
    if jobs is not None and jobs < 1:
        raise _UsageError("--jobs must be at least 1")


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_check_syntax(args) -> int:
    sentence = _read_sentence(args.file)
    _print_json(
        {
            "schema": "snpkit.check-syntax/1",
            "class": classify(sentence).as_dict(),
            "stats": stats(sentence).as_dict(),
        }
    )
    return 0


def _cmd_stats(args) -> int:
    # the quadruple is the whole contract, printed bare in its fixed order
    print(json.dumps(stats(_read_sentence(args.file)).as_dict(), separators=(",", ":")))
    return 0


def _cmd_modelcheck(args) -> int:
    cfg = _config_from(args)
    sentence = _read_sentence(args.sentence)
    structure = _read_structure(args.structure, sentence)
    witness = check_model(sentence, structure, budget=cfg.budget)
    if args.json:
        _print_json(
            {
                "schema": "snpkit.modelcheck/1",
                "model": witness is not None,
                "witness": print_structure(witness) if witness is not None else None,
            }
        )
    elif witness is not None:
        print(print_structure(witness))
    else:
        print("no witness expansion exists")
    return 0 if witness is not None else 1


def _cmd_decompose(args) -> int:
    sentence = _read_sentence(args.file)
    dec = connected_decomposition(sentence)
    base = _out_base(args)
    files: List[str] = []
    for i, disjunct in enumerate(dec.disjuncts, 1):
        path = base.parent / f"{base.name}.d{i}.snp"
        _write_text(path, print_sentence(disjunct))
        files.append(str(path))
    manifest = base.parent / f"{base.name}.manifest.jsonl"
    lines = []
    for i, entries in enumerate(dec.manifest, 1):
        for entry in entries:
            row = {"disjunct": i, "clause": entry["clause"], "component": entry["component"]}
            lines.append(json.dumps(row, sort_keys=True, separators=(",", ":")))
    _write_text(manifest, "\n".join(lines) + "\n" if lines else "")
    _print_json(
        {
            "schema": "snpkit.decompose/1",
            "disjuncts": len(dec.disjuncts),
            "files": files,
            "manifest": str(manifest),
        }
    )
    return 0


def _cmd_delta(args) -> int:
    cfg = _config_from(args)
    if args.max_clause_vars is not None:
        cfg = replace(cfg, max_clause_vars=args.max_clause_vars)
    if args.max_clauses is not None:
        cfg = replace(cfg, max_clauses=args.max_clauses)
    if args.no_subsume:
        cfg = replace(cfg, subsume=False)
    sentence = _read_sentence(args.file)
    out = delta_transform(sentence, cfg)
    base = _out_base(args)
    sentence_file = base.parent / f"{base.name}.delta.snp"
    report_file = base.parent / f"{base.name}.delta.json"
    _write_text(sentence_file, print_sentence(out.sentence))
    report = {
        "schema": "snpkit.delta/1",
        "sentence_file": str(sentence_file),
        "input_stats": stats(sentence).as_dict(),
        "output_stats": stats(out.sentence).as_dict(),
        "rho": len(out.rho_infos),
        "order_symbol": out.order_symbol,
        "counts": dict(out.counts),
        "bounds": dict(out.bounds),
    }
    text = json.dumps(report, sort_keys=True, separators=(",", ":"))
    _write_text(report_file, text)
    print(text)
    return 0


def _search_exit(status: str) -> int:
    return {"found": 0, "absent": 1}.get(status, 2)


def _cmd_recolour(args) -> int:
    cfg = _config_from(args)
    phi1 = _read_sentence(args.phi1)
    phi2 = _read_sentence(args.phi2)
    result = recolouring_search(phi1, phi2, config=cfg)
    doc: Dict = {
        "schema": "snpkit.recolour/1",
        "status": result.status,
        "stage": result.stage,
        "map": None,
        "check": None,
    }
    if result.found:
        n = max(1, stats(phi1).ar, stats(phi2).ar)
        table1 = enumerate_colours(phi1, n, cfg)
        table2 = table1 if phi2 == phi1 else enumerate_colours(phi2, n, cfg)
        doc["map"] = result.recolouring.as_pairs(table1, table2)
        check = check_recolouring(
            phi1, phi2, result.recolouring,
            tables=(table1, table2), config=cfg, naive_iii=args.naive_iii,
        )
        doc["check"] = {
            "ok": check.ok,
            "condition": check.condition,
            "certificate": check.certificate.as_dict() if check.certificate else None,
        }
        if args.emit_map:
            _write_text(
                Path(args.emit_map),
                json.dumps(doc["map"], sort_keys=True, separators=(",", ":")),
            )
    _print_json(doc)
    return _search_exit(result.status)


def _cmd_contain(args) -> int:
    cfg = _config_from(args)
    phi1 = _read_sentence(args.phi1)
    phi2 = _read_sentence(args.phi2)
    verdict = decide_containment(
        phi1, phi2, method=args.method, max_size=args.max_size, config=cfg
    )
    if args.json:
        doc = {"schema": "snpkit.contain/1", **verdict.as_dict()}
        doc["phi1_stats"] = stats(phi1).as_dict()
        doc["phi2_stats"] = stats(phi2).as_dict()
        doc["max_size"] = args.max_size
        doc["budget"] = cfg.budget
        _print_json(doc)
    else:
        detail = verdict.method if verdict.stage is None else f"{verdict.method}, {verdict.stage}"
        print(f"{verdict.outcome} ({detail})")
    return {"Contained": 0, "NotContained": 1}.get(verdict.outcome, 2)


def _cmd_falsify(args) -> int:
    cfg = _config_from(args)
    phi1 = _read_sentence(args.phi1)
    phi2 = _read_sentence(args.phi2)
    cex = falsify_containment(phi1, phi2, args.max_size, cfg, up_to_iso=args.up_to_iso)
    if args.json:
        doc = {
            "schema": "snpkit.falsify/1",
            "max_size": args.max_size,
            "counterexample": cex.as_dict() if cex is not None else None,
        }
        _print_json(doc)
    elif cex is not None:
        print(print_structure(cex.structure))
    else:
        print(f"no counterexample up to size {args.max_size}")
    # a finished sweep proves nothing, so absence stays Unknown
    return 1 if cex is not None else 2


def _cmd_omega(args) -> int:
    cfg = _config_from(args)
    sentence = _read_sentence(args.file)
    out = omega_transform(sentence, cfg)
    base = _out_base(args)
    sentence_file = base.parent / f"{base.name}.omega.snp"
    report_file = base.parent / f"{base.name}.omega.json"
    _write_text(sentence_file, print_sentence(out.sentence))
    report = {
        "schema": "snpkit.omega/1",
        "sentence_file": str(sentence_file),
        "input_stats": stats(sentence).as_dict(),
        "output_stats": stats(out.sentence).as_dict(),
        **out.as_dict(),
    }
    text = json.dumps(report, sort_keys=True, separators=(",", ":"))
    _write_text(report_file, text)
    print(text)
    return 0


def _cmd_omega_prime(args) -> int:
    cfg = _config_from(args)
    sentence = _read_sentence(args.file)
    out = omega_prime(sentence, args.n, var_cap=args.var_cap, config=cfg)
    base = _out_base(args)
    sentence_file = base.parent / f"{base.name}.omega-prime.snp"
    report_file = base.parent / f"{base.name}.omega-prime.json"
    _write_text(sentence_file, print_sentence(out.sentence))
    report = {
        "schema": "snpkit.omega-prime/1",
        "sentence_file": str(sentence_file),
        "input_stats": stats(sentence).as_dict(),
        "output_stats": stats(out.sentence).as_dict(),
        **out.as_dict(),
    }
    text = json.dumps(report, sort_keys=True, separators=(",", ":"))
    _write_text(report_file, text)
    print(text)
    return 0


def _cmd_grecolour(args) -> int:
    cfg = _config_from(args)
    phi1 = _read_sentence(args.phi1)
    phi2 = _read_sentence(args.phi2)
    result = gmsnp_recolouring_search(phi1, phi2, config=cfg)
    identity = result.found and result.recolouring is None
    doc = {
        "schema": "snpkit.grecolour/1",
        "status": result.status,
        "stage": result.stage,
        "identity": identity,
        "map": None,
    }
    if result.recolouring is not None:
        doc["map"] = [
            [src, result.recolouring.mapping[src]]
            for src in sorted(result.recolouring.mapping)
        ]
    _print_json(doc)
    return _search_exit(result.status)


# ---------------------------------------------------------------------------
# Parser assembly


def _build_parser() -> _Parser:
    parser = _Parser(prog="snpkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"snpkit {__version__}")

    common = _Parser(add_help=False)
    common.add_argument("--budget", type=int, metavar="N",
                        help="step budget override (also: SNPKIT_BUDGET)")
    common.add_argument("--jobs", type=int, metavar="N",
                        help="parallelism degree; 1 is the deterministic reference")
    common.add_argument("--paper-scale", action="store_true",
                        help="remove the safety caps (expect blowup)")

    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("check-syntax", parents=[common],
                       help="classify a sentence and report its parameters")
    p.add_argument("file")
    p.set_defaults(func=_cmd_check_syntax)

    p = sub.add_parser("stats", parents=[common],
                       help="print the parameter quadruple of a sentence")
    p.add_argument("file")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("modelcheck", parents=[common],
                       help="search a witness expansion of a structure")
    p.add_argument("--sentence", required=True, metavar="FILE")
    p.add_argument("--structure", required=True, metavar="FILE")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_modelcheck)

    p = sub.add_parser("decompose", parents=[common],
                       help="split into connected disjuncts, one file each")
    p.add_argument("file")
    p.add_argument("--out-dir", metavar="DIR", help="directory for the output files")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("delta", parents=[common],
                       help="re-express with layered witness relations")
    p.add_argument("file")
    p.add_argument("--max-clause-vars", type=int, metavar="N")
    p.add_argument("--max-clauses", type=int, metavar="N")
    p.add_argument("--no-subsume", action="store_true",
                   help="keep subsumed generated clauses")
    p.add_argument("--out-dir", metavar="DIR", help="directory for the output files")
    p.set_defaults(func=_cmd_delta)

    p = sub.add_parser("recolour", parents=[common],
                       help="search a colour map witnessing containment")
    p.add_argument("--phi1", required=True, metavar="FILE")
    p.add_argument("--phi2", required=True, metavar="FILE")
    p.add_argument("--naive-iii", action="store_true",
                   help="verify the map by sweeping all bounded models")
    p.add_argument("--emit-map", metavar="FILE", help="write the map as JSON pairs")
    p.set_defaults(func=_cmd_recolour)

    p = sub.add_parser("contain", parents=[common],
                       help="decide containment end to end")
    p.add_argument("--phi1", required=True, metavar="FILE")
    p.add_argument("--phi2", required=True, metavar="FILE")
    p.add_argument("--method", choices=["auto", "recolouring", "oracle"], default="auto")
    p.add_argument("--max-size", type=int, default=4, metavar="K",
                   help="oracle sweep bound (default 4)")
    p.add_argument("--json", action="store_true", help="machine-readable verdict")
    p.set_defaults(func=_cmd_contain)

    p = sub.add_parser("falsify", parents=[common],
                       help="sweep bounded structures for a separating example")
    p.add_argument("--phi1", required=True, metavar="FILE")
    p.add_argument("--phi2", required=True, metavar="FILE")
    p.add_argument("--max-size", type=int, default=4, metavar="K")
    p.add_argument("--up-to-iso", action="store_true",
                   help="skip isomorphic repeats during the sweep")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_falsify)

    p = sub.add_parser("omega", parents=[common],
                       help="rewrite into comparison-ready form")
    p.add_argument("file")
    p.add_argument("--out-dir", metavar="DIR", help="directory for the output files")
    p.set_defaults(func=_cmd_omega)

    p = sub.add_parser("omega-prime", parents=[common],
                       help="order-expanded rewriting with explicit colours")
    p.add_argument("file")
    p.add_argument("--n", type=int, required=True, metavar="K",
                   help="pattern size bound")
    p.add_argument("--var-cap", type=int, metavar="V",
                   help="variable bound for the generated patterns")
    p.add_argument("--out-dir", metavar="DIR", help="directory for the output files")
    p.set_defaults(func=_cmd_omega_prime)

    p = sub.add_parser("grecolour", parents=[common],
                       help="colour-map search for guarded sentence pairs")
    p.add_argument("--phi1", required=True, metavar="FILE")
    p.add_argument("--phi2", required=True, metavar="FILE")
    p.set_defaults(func=_cmd_grecolour)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        return _emit_error(64, "usage", str(exc))
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    try:
        _validate_common(args)
        return args.func(args)
    except _UsageError as exc:
        return _emit_error(64, "usage", str(exc))
    except SnpParseError as exc:
        return _emit_error(65, "parse-error", str(exc))
    except OSError as exc:
        return _emit_error(66, "file-error", str(exc))
    except InputError as exc:
        return _emit_error(3, "input-error", str(exc))
    except BudgetExceeded as exc:
        return _emit_error(2, "budget-exceeded", str(exc))


def entry() -> None:
    sys.exit(main())
