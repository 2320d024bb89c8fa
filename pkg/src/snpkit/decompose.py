"""Connected decomposition of guarded monotone sentences.

A clause whose negated atoms split into several variable components is
equivalent to a disjunction of its per-component subclauses, and the
conjunction of such disjunctions distributes into a disjunction of connected
sentences over the same signatures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import InputError
from .logic import Clause, SnpSentence, classify, clause_structure, eliminate_equalities


def _canonical_clause_text(clause: Clause) -> str:
    ren = {v: f"v{i + 1}" for i, v in enumerate(clause.vars)}
    parts = []
    for lit in clause.literals:
        args = ",".join(ren[a] for a in lit.args)
        sign = "" if lit.positive else "!"
        parts.append(f"{sign}{lit.symbol}({args})")
    return " | ".join(sorted(parts))


def _split_clause(clause: Clause, sentence: SnpSentence) -> List[Tuple[Clause, Tuple[str, ...]]]:
    """Subclauses of a clause, one per variable component of its negated atoms."""
    if not clause.literals:
        return [(clause, ())]
    cs, var_map = clause_structure(clause, sentence.sig)
    comps = cs.components()
    elem_to_comp = {e: i for i, comp in enumerate(comps) for e in comp}
    groups: List[List] = [[] for _ in comps]
    for lit in clause.literals:
        indices = {elem_to_comp[var_map[v]] for v in lit.args}
        if len(indices) != 1:
            # Guardedness puts every positive atom under a negated atom, so
            # literals never straddle components once equalities are gone.
            raise InputError("literal spans several components")
        groups[indices.pop()].append(lit)
    inv = {i: v for v, i in var_map.items()}
    out = []
    for comp, lits in zip(comps, groups):
        out.append((Clause(tuple(lits)), tuple(inv[e] for e in comp)))
    return out


@dataclass(frozen=True)
class Decomposition:
    source: SnpSentence
    disjuncts: Tuple[SnpSentence, ...]
    manifest: Tuple[Tuple[Dict, ...], ...]  # per disjunct, per clause provenance

    def as_dict(self) -> Dict:
        from .logic import print_sentence

        return {
            "disjuncts": [print_sentence(d) for d in self.disjuncts],
            "manifest": [list(entries) for entries in self.manifest],
        }


def connected_decomposition(sentence: SnpSentence) -> Decomposition:
    """Split a guarded monotone sentence into connected disjuncts.

    The result is a list of sentences over the same signatures whose
    disjunction holds on exactly the same structures. Negative equalities are
    eliminated first; the input must be guarded and monotone.
    """
    if not classify(sentence).gmsnp:
        raise InputError("connected decomposition requires a guarded monotone sentence")
    base = eliminate_equalities(sentence)
    per_clause = [_split_clause(c, base) for c in base.clauses]
    seen = set()
    disjuncts: List[SnpSentence] = []
    manifest: List[Tuple[Dict, ...]] = []
    for choice in product(*per_clause):
        clauses: List[Clause] = []
        entries: List[Dict] = []
        for ci, (sub, comp_vars) in enumerate(choice):
            if sub not in clauses:
                clauses.append(sub)
            entries.append({"clause": ci, "component": list(comp_vars)})
        key = tuple(sorted(_canonical_clause_text(c) for c in clauses))
        if key in seen:
            continue
        seen.add(key)
        disjuncts.append(SnpSentence(base.input_sig, base.exist_sig, clauses))
        manifest.append(tuple(entries))
    return Decomposition(sentence, tuple(disjuncts), tuple(manifest))


@dataclass(frozen=True)
class DisjunctionVerdict:
    verdict: str  # "Contained", "NotContained", "Unknown"
    matrix: Tuple[Tuple[Optional[str], ...], ...]

    def as_dict(self) -> Dict:
        return {"verdict": self.verdict, "matrix": [list(r) for r in self.matrix]}


def disjunction_contained_in(
    lefts: Sequence,
    rights: Sequence,
    pairwise: Callable,
) -> DisjunctionVerdict:
    """Reduce containment of disjunctions to pairwise verdicts.

    The disjunction of `lefts` is contained in that of `rights` when every
    left member is contained in some right member. `pairwise` must return
    "Contained", "NotContained" or "Unknown"; rows short-circuit at the first
    "Contained" and unevaluated cells stay None.
    """
    matrix: List[Tuple[Optional[str], ...]] = []
    all_covered = True
    any_refuted_row = False
    for left in lefts:
        row: List[Optional[str]] = [None] * len(rights)
        covered = False
        refuted = True
        for j, right in enumerate(rights):
            cell = pairwise(left, right)
            if cell not in ("Contained", "NotContained", "Unknown"):
                raise InputError(f"bad pairwise verdict {cell!r}")
            row[j] = cell
            if cell == "Contained":
                covered = True
                refuted = False
                break
            if cell == "Unknown":
                refuted = False
        matrix.append(tuple(row))
        if not covered:
            all_covered = False
            if refuted and rights:
                any_refuted_row = True
    if not rights and lefts:
        # Nothing to cover with; refuting would claim the left side is empty.
        return DisjunctionVerdict("Unknown", tuple(matrix))
    if all_covered:
        verdict = "Contained"
    elif any_refuted_row:
        verdict = "NotContained"
    else:
        verdict = "Unknown"
    return DisjunctionVerdict(verdict, tuple(matrix))
