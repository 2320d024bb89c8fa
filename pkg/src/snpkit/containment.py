"""Containment decisions for guarded monotone sentences.

The positive route splits both sentences into connected disjuncts, applies the
order expansion to each, and searches for recolourings pairwise: the left
disjunction is contained in the right one exactly when every left disjunct has
a recoloured image among the right ones. The negative route is a bounded
brute-force sweep for a structure modelled by the first sentence but not the
second. Absence of a recolouring justifies non-containment only after the
order expansion; on raw sentences a found recolouring still proves
containment, so the raw route reports Contained or Unknown, never
NotContained.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .config import RunConfig, default_config
from .decompose import connected_decomposition, disjunction_contained_in
from .errors import BudgetExceeded, InputError
from .hn_transform import delta_transform
from .logic import SnpSentence, ground_clauses, stats
from .recolouring import Recolouring, SearchResult, recolouring_search
from .solver import DpllSolver
from .structures import Structure, enumerate_structures, print_structure


@dataclass(frozen=True)
class Counterexample:
    """Finite structure separating the two sentences.

    The witness expands the structure to a model of the first sentence; the
    refuted flag records that the expansion search for the second sentence
    was exhausted without a model.
    """

    structure: Structure
    phi1_witness: Structure
    phi2_refuted: bool

    def as_dict(self) -> Dict:
        return {
            "structure": print_structure(self.structure),
            "phi1_witness": print_structure(self.phi1_witness),
            "phi2_refuted": self.phi2_refuted,
        }


@dataclass(frozen=True)
class PairWitness:
    """Recolouring covering one left disjunct by one right disjunct."""

    left: int
    right: int
    recolouring: Recolouring

    def as_dict(self) -> Dict:
        return {
            "left": self.left,
            "right": self.right,
            "mapping": dict(self.recolouring.mapping),
        }


@dataclass(frozen=True)
class ContainmentVerdict:
    """Outcome of a containment decision.

    outcome is "Contained", "NotContained" or "Unknown". method names the
    route that settled it: "recolouring" for the pairwise search (Contained,
    or NotContained by exhaustion with the matrix as record), and
    "oracle-falsified" for a concrete counterexample; Unknown carries
    "budget" with a stage, "oracle" when a bounded sweep simply found
    nothing, or "recolouring" when the raw route exhausted its search.
    witness holds the per-disjunct recolourings or the counterexample.
    """

    outcome: str
    method: str
    witness: Optional[object] = None
    stage: Optional[str] = None
    matrix: Optional[Tuple[Tuple[Optional[str], ...], ...]] = None
    right_order: Optional[Tuple[int, ...]] = None

    def as_dict(self) -> Dict:
        if isinstance(self.witness, Counterexample):
            witness = self.witness.as_dict()
        elif self.witness is not None:
            witness = [w.as_dict() for w in self.witness]
        else:
            witness = None
        return {
            "outcome": self.outcome,
            "method": self.method,
            "witness": witness,
            "stage": self.stage,
            "matrix": [list(row) for row in self.matrix] if self.matrix else None,
            "right_order": list(self.right_order) if self.right_order else None,
        }


class _SizedChecker:
    """One-size grounding of a sentence, partially evaluated per structure.

    The clause body is grounded once with every symbol free; checking a
    structure then resolves the input literals against its content and hands
    the surviving witness literals to the solver. Agrees with check_model on
    every structure of the size.
    """

    def __init__(self, sentence: SnpSentence, size: int):
        self.sentence = sentence
        full_index, cnf = ground_clauses(sentence, size)
        input_names = set(sentence.input_sig.names)
        slot_of = {var: slot for slot, var in full_index.items()}
        self.slots = [s for s in full_index if s[0] not in input_names]
        witness_var = {slot: i + 1 for i, slot in enumerate(self.slots)}
        self.entries: List[Tuple[List, List[int]]] = []
        for clause in cnf:
            checks: List = []
            residual: List[int] = []
            for lit in clause:
                name, args = slot_of[abs(lit)]
                if name in input_names:
                    checks.append((lit > 0, name, args))
                else:
                    vid = witness_var[(name, args)]
                    residual.append(vid if lit > 0 else -vid)
            self.entries.append((checks, residual))

    def check(self, structure: Structure, budget: Optional[int]) -> Optional[Structure]:
        rels = {name: set(tuples) for name, tuples in structure.relations.items()}
        cnf: List[List[int]] = []
        for checks, residual in self.entries:
            if any((args in rels[name]) == pos for pos, name, args in checks):
                continue
            if not residual:
                return None
            cnf.append(residual)
        model = DpllSolver(len(self.slots), cnf, stage="falsify").solve(budget=budget)
        if model is None:
            return None
        extra: Dict[str, List[Tuple[int, ...]]] = {
            s.name: [] for s in self.sentence.exist_sig
        }
        for i, slot in enumerate(self.slots):
            if model[i + 1]:
                extra[slot[0]].append(slot[1])
        return structure.expand(self.sentence.sig, extra)


def sweep_for_counterexample(
    phi1: SnpSentence,
    phi2: SnpSentence,
    structures,
    config: Optional[RunConfig] = None,
) -> Optional[Counterexample]:
    """First structure in the iterable modelled by phi1 but not phi2."""
    cfg = config or default_config()
    if phi1.input_sig != phi2.input_sig:
        raise InputError("sentences must share the input signature")
    checkers: Dict[int, Tuple[_SizedChecker, _SizedChecker]] = {}
    for structure in structures:
        pair = checkers.get(structure.domain_size)
        if pair is None:
            pair = (
                _SizedChecker(phi1, structure.domain_size),
                _SizedChecker(phi2, structure.domain_size),
            )
            checkers[structure.domain_size] = pair
        witness = pair[0].check(structure, cfg.budget)
        if witness is None:
            continue
        if pair[1].check(structure, cfg.budget) is None:
            return Counterexample(structure, witness, True)
    return None


def falsify_containment(
    phi1: SnpSentence,
    phi2: SnpSentence,
    max_size: int,
    config: Optional[RunConfig] = None,
    *,
    up_to_iso: bool = False,
) -> Optional[Counterexample]:
    """Search input structures up to max_size for a separating example.

    Returns the first structure (by size, then enumeration order) modelled by
    the first sentence but not the second, or None. Absence is not a
    containment proof, only a bounded sweep. up_to_iso skips isomorphic
    repeats; both modelhood checks are isomorphism-invariant, so the sweep
    still finds a counterexample whenever one exists within the bound.
    """
    cfg = config or default_config()
    if phi1.input_sig != phi2.input_sig:
        raise InputError("sentences must share the input signature")
    source = enumerate_structures(phi1.input_sig, max_size, budget=cfg.budget)
    if up_to_iso:
        def reps():
            seen = set()
            for structure in source:
                key = structure.canonical_key()
                if key in seen:
                    continue
                seen.add(key)
                yield structure
        return sweep_for_counterexample(phi1, phi2, reps(), cfg)
    return sweep_for_counterexample(phi1, phi2, source, cfg)


def _search_cell(args: Tuple[SnpSentence, SnpSentence, RunConfig]) -> SearchResult:
    left, right, cfg = args
    return recolouring_search(left, right, config=cfg)


_CELL_LABEL = {"found": "Contained", "absent": "NotContained", "unknown": "Unknown"}


def _pairwise_route(
    phi1: SnpSentence,
    phi2: SnpSentence,
    cfg: RunConfig,
    expand: bool,
) -> ContainmentVerdict:
    """Decomposed pairwise recolouring search, optionally order-expanded."""
    lefts = connected_decomposition(phi1).disjuncts
    rights = connected_decomposition(phi2).disjuncts
    # cheap right disjuncts first: fewer symbols, then fewer clauses
    order = sorted(
        range(len(rights)),
        key=lambda j: (stats(rights[j]).ht, stats(rights[j]).lh, j),
    )
    expanded_l: Dict[int, SnpSentence] = {}
    expanded_r: Dict[int, SnpSentence] = {}

    def cell_sentences(i: int, j: int) -> Tuple[SnpSentence, SnpSentence]:
        # equal disjuncts are settled by the equality shortcut, so never
        # pay for their expansion
        if not expand or lefts[i] == rights[j]:
            return lefts[i], rights[j]
        if i not in expanded_l:
            expanded_l[i] = delta_transform(lefts[i], cfg).sentence
        if j not in expanded_r:
            expanded_r[j] = delta_transform(rights[j], cfg).sentence
        return expanded_l[i], expanded_r[j]

    cells: Dict[Tuple[int, int], SearchResult] = {}
    if cfg.jobs > 1:
        tasks = [(i, j) for i in range(len(lefts)) for j in order]
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = pool.map(
                _search_cell, [(*cell_sentences(i, j), cfg) for i, j in tasks]
            )
            for (i, j), res in zip(tasks, results):
                cells[(i, j)] = res

    def pairwise(i: int, j: int) -> str:
        res = cells.get((i, j))
        if res is None:
            res = _search_cell((*cell_sentences(i, j), cfg))
            cells[(i, j)] = res
        label = _CELL_LABEL[res.status]
        if label == "NotContained" and not expand:
            # raw exhaustion proves nothing about the modelled classes
            return "Unknown"
        return label

    dv = disjunction_contained_in(list(range(len(lefts))), order, pairwise)
    matrix = dv.matrix
    right_order = tuple(order)
    if dv.verdict == "Contained":
        witnesses: List[PairWitness] = []
        for i in range(len(lefts)):
            for pos, j in enumerate(order):
                res = cells.get((i, j))
                if res is not None and res.found:
                    witnesses.append(PairWitness(i, j, res.recolouring))
                    break
        return ContainmentVerdict(
            "Contained", "recolouring", tuple(witnesses),
            matrix=matrix, right_order=right_order,
        )
    if dv.verdict == "NotContained":
        return ContainmentVerdict(
            "NotContained", "recolouring", matrix=matrix, right_order=right_order
        )
    stage = None
    for i in range(len(lefts)):
        for j in order:
            res = cells.get((i, j))
            if res is not None and res.status == "unknown":
                stage = res.stage
                break
        if stage is not None:
            break
    method = "budget" if stage is not None else "recolouring"
    return ContainmentVerdict(
        "Unknown", method, stage=stage, matrix=matrix, right_order=right_order
    )


def decide_containment(
    phi1: SnpSentence,
    phi2: SnpSentence,
    *,
    method: str = "auto",
    max_size: int = 4,
    config: Optional[RunConfig] = None,
) -> ContainmentVerdict:
    """Decide whether every model of the first sentence models the second.

    method "recolouring" runs the order-expanded pairwise search and may
    report all three outcomes. method "raw" searches recolourings between the
    bare disjuncts and reports Contained or Unknown only. method "oracle"
    sweeps structures up to max_size and reports NotContained or Unknown.
    method "auto" runs the order-expanded route and falls back to the oracle
    for a concrete counterexample or to settle an Unknown.
    """
    cfg = config or default_config()
    if phi1.input_sig != phi2.input_sig:
        raise InputError("sentences must share the input signature")
    if method not in ("auto", "recolouring", "raw", "oracle"):
        raise InputError(f"unknown containment method {method!r}")
    if method == "oracle":
        try:
            cex = falsify_containment(phi1, phi2, max_size, cfg)
        except BudgetExceeded as exc:
            return ContainmentVerdict("Unknown", "budget", stage=exc.stage)
        if cex is not None:
            return ContainmentVerdict("NotContained", "oracle-falsified", cex)
        return ContainmentVerdict("Unknown", "oracle")
    if method == "raw":
        try:
            return _pairwise_route(phi1, phi2, cfg, expand=False)
        except BudgetExceeded as exc:
            return ContainmentVerdict("Unknown", "budget", stage=exc.stage)
    try:
        verdict = _pairwise_route(phi1, phi2, cfg, expand=True)
    except BudgetExceeded as exc:
        verdict = ContainmentVerdict("Unknown", "budget", stage=exc.stage)
    if method == "recolouring" or verdict.outcome == "Contained":
        return verdict
    # auto: look for a concrete separating structure
    try:
        cex = falsify_containment(phi1, phi2, max_size, cfg)
    except BudgetExceeded:
        return verdict
    if cex is not None:
        return ContainmentVerdict(
            "NotContained", "oracle-falsified", cex,
            matrix=verdict.matrix, right_order=verdict.right_order,
        )
    return verdict
