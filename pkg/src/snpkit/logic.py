"""Sentence representation, text format, classification, model checking.

A sentence is an existential second-order prenex form: a block of existential
relation variables over a CNF first-order part whose variables are implicitly
universally quantified clause by clause.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from ._text import TokenStream, tokenize
from .errors import InputError, SnpParseError
from .solver import DpllSolver
from .structures import RelSymbol, Signature, Structure, tuple_slots


@dataclass(frozen=True)
class Literal:
    """Relational or equality literal with variable arguments."""

    positive: bool
    kind: str  # "rel" or "eq"
    symbol: Optional[str]
    args: Tuple[str, ...]

    @staticmethod
    def rel(symbol: str, args: Sequence[str], positive: bool = True) -> "Literal":
        return Literal(positive, "rel", symbol, tuple(args))

    @staticmethod
    def eq(left: str, right: str, positive: bool = True) -> "Literal":
        return Literal(positive, "eq", None, (left, right))

    def __str__(self) -> str:
        if self.kind == "eq":
            op = "=" if self.positive else "!="
            return f"{self.args[0]} {op} {self.args[1]}"
        body = f"{self.symbol}({','.join(self.args)})"
        return body if self.positive else f"!{body}"


@dataclass(frozen=True)
class Clause:
    literals: Tuple[Literal, ...]

    @property
    def vars(self) -> Tuple[str, ...]:
        seen: List[str] = []
        for lit in self.literals:
            for v in lit.args:
                if v not in seen:
                    seen.append(v)
        return tuple(seen)

    @property
    def width(self) -> int:
        return len(self.vars)

    def __str__(self) -> str:
        return " | ".join(str(lit) for lit in self.literals)


class SnpSentence:
    """Existential relational sentence with a CNF body."""

    def __init__(self, input_sig: Signature, exist_sig: Signature, clauses: Sequence[Clause]):
        overlap = set(input_sig.names) & set(exist_sig.names)
        if overlap:
            raise InputError(f"symbols {sorted(overlap)} both input and existential")
        full = input_sig.union(exist_sig)
        for ci, clause in enumerate(clauses):
            for lit in clause.literals:
                if lit.kind != "rel":
                    continue
                if lit.symbol not in full:
                    raise InputError(f"clause {ci}: undeclared relation {lit.symbol}")
                if full.arity(lit.symbol) != len(lit.args):
                    raise InputError(f"clause {ci}: arity mismatch for {lit.symbol}")
        self.input_sig = input_sig
        self.exist_sig = exist_sig
        self.clauses: Tuple[Clause, ...] = tuple(clauses)
        self.sig = full
        self._key = (input_sig, exist_sig, self.clauses)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SnpSentence) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"SnpSentence(input={self.input_sig!r}, exists={self.exist_sig!r}, clauses={len(self.clauses)})"


# ---------------------------------------------------------------------------
# Text format


def print_sentence(sentence: SnpSentence) -> str:
    def sig_line(sig: Signature) -> str:
        return " ".join(f"{s.name}/{s.arity}" for s in sig)

    lines = ["sentence {"]
    lines.append(f"  input {{ {sig_line(sentence.input_sig)} }}".replace("{  }", "{ }"))
    lines.append(f"  exists {{ {sig_line(sentence.exist_sig)} }}".replace("{  }", "{ }"))
    for clause in sentence.clauses:
        lines.append(f"  clause {{ {clause} }}".replace("{  }", "{ }"))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _parse_sig_block(ts: TokenStream) -> Signature:
    ts.expect("punct", "{")
    symbols = []
    while not ts.accept("punct", "}"):
        name = ts.expect("ident").value
        ts.expect("punct", "/")
        arity = int(ts.expect("int").value)
        symbols.append(RelSymbol(name, arity))
    return Signature(symbols)


def _parse_literal(ts: TokenStream) -> Literal:
    if ts.accept("punct", "!"):
        name = ts.expect("ident").value
        ts.expect("punct", "(")
        args = [ts.expect("ident").value]
        while ts.accept("punct", ","):
            args.append(ts.expect("ident").value)
        ts.expect("punct", ")")
        return Literal.rel(name, args, positive=False)
    first = ts.expect("ident").value
    if ts.accept("punct", "("):
        args = [ts.expect("ident").value]
        while ts.accept("punct", ","):
            args.append(ts.expect("ident").value)
        ts.expect("punct", ")")
        return Literal.rel(first, args, positive=True)
    if ts.accept("punct", "="):
        right = ts.expect("ident").value
        return Literal.eq(first, right, positive=True)
    ts.expect("punct", "!=")
    right = ts.expect("ident").value
    return Literal.eq(first, right, positive=False)


def parse_sentence(text: str) -> SnpSentence:
    ts = TokenStream(tokenize(text))
    ts.expect("ident", "sentence")
    ts.expect("punct", "{")
    ts.expect("ident", "input")
    input_sig = _parse_sig_block(ts)
    ts.expect("ident", "exists")
    exist_sig = _parse_sig_block(ts)
    clauses = []
    while not ts.accept("punct", "}"):
        ts.expect("ident", "clause")
        ts.expect("punct", "{")
        literals = []
        if not ts.accept("punct", "}"):
            literals.append(_parse_literal(ts))
            while ts.accept("punct", "|"):
                literals.append(_parse_literal(ts))
            ts.expect("punct", "}")
        clauses.append(Clause(tuple(literals)))
    if not ts.at_end():
        tok = ts.peek()
        raise SnpParseError(f"trailing input {tok.value!r}", tok.line, tok.column)
    try:
        return SnpSentence(input_sig, exist_sig, clauses)
    except InputError as err:
        raise SnpParseError(str(err)) from err


# ---------------------------------------------------------------------------
# Classification and statistics


@dataclass(frozen=True)
class SyntacticClass:
    snp: bool
    monotone: bool
    guarded: bool
    monadic: bool
    connected: bool

    @property
    def gmsnp(self) -> bool:
        return self.snp and self.monotone and self.guarded

    @property
    def mmsnp(self) -> bool:
        return self.snp and self.monotone and self.monadic

    def as_dict(self) -> Dict[str, bool]:
        return {
            "snp": self.snp,
            "monotone": self.monotone,
            "guarded": self.guarded,
            "monadic": self.monadic,
            "connected": self.connected,
            "gmsnp": self.gmsnp,
            "mmsnp": self.mmsnp,
        }


def clause_structure(clause: Clause, sig: Signature) -> Tuple[Structure, Dict[str, int]]:
    """Structure on the clause variables holding the negated relational atoms.

    Variables occurring only in positive or equality literals become isolated
    elements, which makes them their own connectivity components.
    """
    variables = clause.vars
    var_map = {v: i + 1 for i, v in enumerate(variables)}
    rels: Dict[str, List[Tuple[int, ...]]] = {name: [] for name in sig.names}
    for lit in clause.literals:
        if lit.kind == "rel" and not lit.positive:
            rels[lit.symbol].append(tuple(var_map[v] for v in lit.args))
    return Structure(sig, len(variables), rels), var_map


def classify(sentence: SnpSentence) -> SyntacticClass:
    monotone = True
    guarded = True
    for clause in sentence.clauses:
        negatives = [lit for lit in clause.literals if lit.kind == "rel" and not lit.positive]
        for lit in clause.literals:
            if not lit.positive:
                continue
            if lit.kind == "eq" or lit.symbol in sentence.input_sig:
                monotone = False
            if lit.kind == "rel":
                covered = any(set(lit.args) <= set(neg.args) for neg in negatives)
                if not covered:
                    guarded = False
    monadic = all(sym.arity == 1 for sym in sentence.exist_sig)
    connected = all(
        clause_structure(clause, sentence.sig)[0].is_connected() for clause in sentence.clauses
    )
    return SyntacticClass(True, monotone, guarded, monadic, connected)


@dataclass(frozen=True)
class SentenceStats:
    ht: int  # relation symbols, input and existential together
    lh: int  # clauses
    wd: int  # maximum clause width in variables
    ar: int  # maximum arity

    def as_dict(self) -> Dict[str, int]:
        return {"ht": self.ht, "lh": self.lh, "wd": self.wd, "ar": self.ar}


def stats(sentence: SnpSentence) -> SentenceStats:
    widths = [c.width for c in sentence.clauses]
    arities = [s.arity for s in sentence.sig]
    return SentenceStats(
        ht=len(sentence.sig),
        lh=len(sentence.clauses),
        wd=max(widths, default=0),
        ar=max(arities, default=0),
    )


# ---------------------------------------------------------------------------
# Equality elimination


def eliminate_equalities(sentence: SnpSentence) -> SnpSentence:
    """Rewrite away negative equality literals by variable substitution.

    A clause with disjunct x != y holds automatically unless x = y, so it is
    equivalent to the clause with y replaced by x and the literal removed.
    Positive equalities are rejected (outside the monotone fragment).
    """
    new_clauses: List[Clause] = []
    for clause in sentence.clauses:
        literals = list(clause.literals)
        drop_clause = False
        while True:
            eq_lit = next((l for l in literals if l.kind == "eq"), None)
            if eq_lit is None:
                break
            if eq_lit.positive:
                if eq_lit.args[0] == eq_lit.args[1]:
                    drop_clause = True  # tautology
                    break
                raise InputError("positive equality between distinct variables")
            left, right = eq_lit.args
            literals.remove(eq_lit)
            if left == right:
                continue  # x != x is false; just drop the literal
            renamed = []
            for lit in literals:
                args = tuple(left if a == right else a for a in lit.args)
                renamed.append(Literal(lit.positive, lit.kind, lit.symbol, args))
            literals = renamed
        if drop_clause:
            continue
        dedup: List[Literal] = []
        for lit in literals:
            if lit not in dedup:
                dedup.append(lit)
        complementary = any(
            Literal(not l.positive, l.kind, l.symbol, l.args) in dedup for l in dedup
        )
        if complementary:
            continue  # tautology
        new_clauses.append(Clause(tuple(dedup)))
    return SnpSentence(sentence.input_sig, sentence.exist_sig, new_clauses)


# ---------------------------------------------------------------------------
# Semantics


@dataclass(frozen=True)
class Violation:
    clause_index: int
    assignment: Tuple[Tuple[str, int], ...]

    def as_dict(self) -> Dict:
        return {"clause": self.clause_index, "assignment": dict(self.assignment)}


def _literal_false(lit: Literal, assign: Dict[str, int], structure: Structure) -> bool:
    if lit.kind == "eq":
        holds = assign[lit.args[0]] == assign[lit.args[1]]
    else:
        holds = tuple(assign[v] for v in lit.args) in structure.relations[lit.symbol]
    return holds != lit.positive


def _violating_assignments(
    clause: Clause,
    structure: Structure,
    known: Set[str],
) -> Iterator[Tuple[Dict[str, int], List[Literal]]]:
    """Assignments falsifying every literal over `known` symbols.

    Yields (assignment, residual literals over unknown symbols). Driven by the
    negated known atoms, which must hold for the clause instance to matter.
    """
    drivers: List[Literal] = []
    checks: List[Literal] = []
    residual: List[Literal] = []
    for lit in clause.literals:
        if lit.kind == "eq":
            checks.append(lit)
        elif lit.symbol in known:
            if lit.positive:
                checks.append(lit)
            else:
                drivers.append(lit)
        else:
            residual.append(lit)
    drivers.sort(key=lambda l: len(structure.relations[l.symbol]))
    variables = clause.vars

    def extend(i: int, assign: Dict[str, int]) -> Iterator[Tuple[Dict[str, int], List[Literal]]]:
        if i == len(drivers):
            free = [v for v in variables if v not in assign]
            for combo in product(structure.elements, repeat=len(free)):
                full = dict(assign)
                full.update(zip(free, combo))
                if all(_literal_false(lit, full, structure) for lit in checks):
                    yield full, residual
            return
        lit = drivers[i]
        for t in structure.relations[lit.symbol]:
            nxt = dict(assign)
            ok = True
            for v, e in zip(lit.args, t):
                if nxt.setdefault(v, e) != e:
                    ok = False
                    break
            if ok:
                yield from extend(i + 1, nxt)

    yield from extend(0, {})


def check_fo_part(sentence: SnpSentence, structure: Structure) -> Optional[Violation]:
    """First clause violation of the first-order part, or None.

    The structure must interpret every symbol of the sentence (input and
    existential alike).
    """
    for name in sentence.sig.names:
        if name not in structure.sig:
            raise InputError(f"structure does not interpret {name}")
    known = set(sentence.sig.names)
    for ci, clause in enumerate(sentence.clauses):
        for assign, residual in _violating_assignments(clause, structure, known):
            assert not residual
            return Violation(ci, tuple(sorted(assign.items())))
    return None


def is_in_efm(sentence: SnpSentence, structure: Structure) -> bool:
    return check_fo_part(sentence, structure) is None


def check_model(
    sentence: SnpSentence,
    structure: Structure,
    budget: Optional[int] = None,
) -> Optional[Structure]:
    """Search a witness expansion making the sentence true on the structure.

    Returns the expanded structure over the full signature, or None when no
    witness exists. The input structure must interpret the input signature.
    """
    for name in sentence.input_sig.names:
        if name not in structure.sig:
            raise InputError(f"structure does not interpret {name}")
    base = structure.reduct([n for n in structure.sig.names if n in sentence.input_sig])
    slots = tuple_slots(sentence.exist_sig, base.domain_size)
    index = {slot: i + 1 for i, slot in enumerate(slots)}
    known = set(sentence.input_sig.names)
    cnf: List[List[int]] = []
    for clause in sentence.clauses:
        for assign, residual in _violating_assignments(clause, base, known):
            lits = []
            for lit in residual:
                vid = index[(lit.symbol, tuple(assign[v] for v in lit.args))]
                lits.append(vid if lit.positive else -vid)
            if not lits:
                return None
            cnf.append(lits)
    solver = DpllSolver(len(slots), cnf, stage="check_model")
    model = solver.solve(budget=budget)
    if model is None:
        return None
    extra: Dict[str, List[Tuple[int, ...]]] = {s.name: [] for s in sentence.exist_sig}
    for slot, vid in index.items():
        if model[vid]:
            extra[slot[0]].append(slot[1])
    return base.expand(sentence.sig, extra)


def ground_clauses(
    sentence: SnpSentence,
    size: int,
) -> Tuple[Dict[Tuple[str, Tuple[int, ...]], int], List[List[int]]]:
    """Ground the CNF body over domain [size] with every symbol free.

    Returns (slot index, clauses) where the index maps (symbol, tuple) to a
    positive solver variable and clauses hold signed variable ids. Equality
    literals are resolved during grounding; instances they satisfy are dropped.
    """
    slots = tuple_slots(sentence.sig, size)
    index = {slot: i + 1 for i, slot in enumerate(slots)}
    cnf: List[List[int]] = []
    for clause in sentence.clauses:
        variables = clause.vars
        for combo in product(range(1, size + 1), repeat=len(variables)):
            assign = dict(zip(variables, combo))
            lits: List[int] = []
            satisfied = False
            for lit in clause.literals:
                if lit.kind == "eq":
                    if (assign[lit.args[0]] == assign[lit.args[1]]) == lit.positive:
                        satisfied = True
                        break
                    continue
                vid = index[(lit.symbol, tuple(assign[v] for v in lit.args))]
                lits.append(vid if lit.positive else -vid)
            if satisfied:
                continue
            cnf.append(lits)
    return index, cnf


def iter_fo_models(
    sentence: SnpSentence,
    size: int,
    budget: Optional[int] = None,
) -> Iterator[Structure]:
    """All standard structures of the given size satisfying the CNF body.

    Every symbol (input and existential) is interpreted freely; equality
    literals are evaluated during grounding.
    """
    index, cnf = ground_clauses(sentence, size)
    solver = DpllSolver(len(index), cnf, stage="iter_fo_models")
    for model in solver.iter_models(budget=budget):
        rels: Dict[str, List[Tuple[int, ...]]] = {s.name: [] for s in sentence.sig}
        for slot, vid in index.items():
            if model[vid]:
                rels[slot[0]].append(slot[1])
        yield Structure(sentence.sig, size, rels)


# ---------------------------------------------------------------------------
# Padding with a fresh domain predicate


def _fresh_name(base: str, taken: Set[str]) -> str:
    if base not in taken:
        return base
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def gamma_padding(sentence: SnpSentence, dsym: str = "D") -> SnpSentence:
    """Relativize every clause by a fresh unary input predicate.

    Each clause gains one negated atom of the new predicate per clause
    variable, so the padded sentence constrains only the part of a structure
    where the predicate holds.
    """
    name = _fresh_name(dsym, set(sentence.sig.names))
    input_sig = sentence.input_sig.union(Signature([RelSymbol(name, 1)]))
    clauses = []
    for clause in sentence.clauses:
        extra = [Literal.rel(name, (v,), positive=False) for v in clause.vars]
        clauses.append(Clause(clause.literals + tuple(extra)))
    return SnpSentence(input_sig, sentence.exist_sig, clauses)


def full_expansion(structure: Structure, dsym: str = "D") -> Structure:
    """Expand a structure with the padding predicate holding everywhere."""
    name = _fresh_name(dsym, set(structure.sig.names))
    sig = structure.sig.union(Signature([RelSymbol(name, 1)]))
    return structure.expand(sig, {name: [(e,) for e in structure.elements]})
