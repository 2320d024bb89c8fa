"""Colour tables, recolouring checks, recolouring search, and amalgamation probes.

A colour of a sentence is a small model of its universal part: a structure of
domain size at most n (the arity bound of the pair under comparison) that
violates no clause. A recolouring maps every colour of the first sentence to a
colour of the second with the same input-symbol content, compatibly with
partial isomorphisms, such that recoloured models of the first sentence never
violate the second. These three conditions are checked separately and each
failure is reported with a concrete certificate.
"""

from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .config import Budget, RunConfig, default_config
from .errors import BudgetExceeded, InputError
from .logic import SnpSentence, check_fo_part, ground_clauses, iter_fo_models, stats
from .solver import DpllSolver
from .structures import Structure, iter_homs, print_structure


# ---------------------------------------------------------------------------
# colour tables


@dataclass(frozen=True)
class ColourTable:
    """All colours of a sentence up to domain size n, with lookup indexes."""

    sentence: SnpSentence
    n: int
    colours: Tuple[Structure, ...]
    index: Dict[Tuple, Tuple[int, ...]] = field(compare=False)
    by_structure: Dict[Structure, int] = field(compare=False)
    by_reduct: Dict[Structure, Tuple[int, ...]] = field(compare=False)
    by_size: Dict[int, Tuple[int, ...]] = field(compare=False)

    def __len__(self) -> int:
        return len(self.colours)


def colour_count_bound(sentence: SnpSentence, n: int) -> int:
    """Upper bound on the number of colours: all structures of size up to n."""
    total = 0
    for k in range(1, n + 1):
        slots = sum(k ** sentence.sig.arity(s.name) for s in sentence.sig)
        total += 2 ** slots
    return total


def enumerate_colours(
    sentence: SnpSentence,
    n: int,
    config: Optional[RunConfig] = None,
) -> ColourTable:
    """Enumerate every model of the universal part with domain size 1..n."""
    if n < 1:
        raise InputError("colour table size bound must be at least 1")
    cfg = config or default_config()
    colours: List[Structure] = []
    for size in range(1, n + 1):
        for model in iter_fo_models(sentence, size, budget=cfg.budget):
            colours.append(model)
    bound = colour_count_bound(sentence, n)
    assert len(colours) <= bound
    input_names = sentence.input_sig.names
    index: Dict[Tuple, List[int]] = {}
    by_structure: Dict[Structure, int] = {}
    by_reduct: Dict[Structure, List[int]] = {}
    by_size: Dict[int, List[int]] = {}
    for cid, colour in enumerate(colours):
        by_structure[colour] = cid
        reduct = colour.reduct(input_names)
        index.setdefault(reduct.canonical_key(), []).append(cid)
        by_reduct.setdefault(reduct, []).append(cid)
        by_size.setdefault(colour.domain_size, []).append(cid)
    return ColourTable(
        sentence=sentence,
        n=n,
        colours=tuple(colours),
        index={k: tuple(v) for k, v in index.items()},
        by_structure=by_structure,
        by_reduct={k: tuple(v) for k, v in by_reduct.items()},
        by_size={k: tuple(v) for k, v in by_size.items()},
    )


def ordered_pattern(structure: Structure, tbar: Sequence[int]) -> Structure:
    """Induced substructure on the entries of tbar, renumbered tbar[i] -> i+1.

    The entries must be distinct elements of the structure. Two tuples have
    equal ordered patterns exactly when the map tbar -> sbar extends to a
    partial isomorphism between the ambient structures.
    """
    entries = tuple(tbar)
    if len(set(entries)) != len(entries):
        raise InputError("ordered pattern requires distinct entries")
    for e in entries:
        if not 1 <= e <= structure.domain_size:
            raise InputError(f"element {e} outside the domain")
    keep = set(entries)
    pos = {e: i + 1 for i, e in enumerate(entries)}
    rels = {}
    for name in structure.sig.names:
        rels[name] = [
            tuple(pos[e] for e in t)
            for t in structure.relations[name]
            if all(e in keep for e in t)
        ]
    return Structure(structure.sig, len(entries), rels)


# ---------------------------------------------------------------------------
# recolourings and patchwork extension


@dataclass(frozen=True)
class Recolouring:
    """Total map from source colour ids to target colour ids."""

    mapping: Dict[int, int]

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))

    def __getitem__(self, cid: int) -> int:
        return self.mapping[cid]

    def as_pairs(self, table1: ColourTable, table2: ColourTable) -> List[Dict]:
        """JSON-friendly pairs keyed by colour canonical keys, with text forms."""
        out = []
        for src_id in sorted(self.mapping):
            dst_id = self.mapping[src_id]
            src = table1.colours[src_id]
            dst = table2.colours[dst_id]
            out.append(
                {
                    "source_key": _key_json(src),
                    "target_key": _key_json(dst),
                    "source": print_structure(src),
                    "target": print_structure(dst),
                }
            )
        return out


def _key_json(structure: Structure) -> List:
    names, size, bits = structure.canonical_key()
    return [list(names), size, bits]


@dataclass(frozen=True)
class ExtensionConflict:
    """Two patches of one structure that disagree on a shared tuple."""

    first: Tuple[int, ...]
    second: Tuple[int, ...]
    symbol: str
    args: Tuple[int, ...]

    def as_dict(self) -> Dict:
        return {
            "first": list(self.first),
            "second": list(self.second),
            "symbol": self.symbol,
            "args": list(self.args),
        }


def apply_extension(
    xi: Recolouring,
    structure: Structure,
    table1: ColourTable,
    table2: ColourTable,
):
    """Recolour a structure patch by patch.

    Every subset of at most n elements induces a colour of the first sentence;
    its image under xi dictates the non-input content on that subset. Returns
    the recoloured structure, or an ExtensionConflict when two patches place
    contradictory content on a shared tuple.
    """
    phi1 = table1.sentence
    sig1 = phi1.sig
    if structure.sig != sig1:
        if structure.sig.names != sig1.names:
            raise InputError("structure signature does not match the sentence")
        structure = Structure(
            sig1, structure.domain_size, {n: structure.relations[n] for n in sig1.names}
        )
    if check_fo_part(phi1, structure) is not None:
        raise InputError("structure violates the universal part of the sentence")
    input_names = set(phi1.input_sig.names)
    sig2 = table2.sentence.sig
    widest = max(s.arity for s in list(sig1) + list(sig2))
    if table1.n < widest:
        raise InputError("colour table size bound below the signature arity")
    decided: Dict[Tuple[str, Tuple[int, ...]], Tuple[bool, Tuple[int, ...]]] = {}
    for size in range(1, min(table1.n, structure.domain_size) + 1):
        for subset in combinations(structure.elements, size):
            patch = ordered_pattern(structure, subset)
            cid = table1.by_structure[patch]
            image = table2.colours[xi[cid]]
            for name in sig2.names:
                if name in input_names:
                    continue
                content = image.relations[name]
                for slot in product(subset, repeat=sig2.arity(name)):
                    local = tuple(subset.index(e) + 1 for e in slot)
                    present = local in content
                    prior = decided.get((name, slot))
                    if prior is None:
                        decided[(name, slot)] = (present, subset)
                    elif prior[0] != present:
                        return ExtensionConflict(prior[1], subset, name, slot)
    rels = {name: structure.relations[name] for name in input_names}
    for name in sig2.names:
        if name in input_names:
            continue
        rels[name] = [
            slot for (n2, slot), (present, _) in decided.items() if n2 == name and present
        ]
    out = Structure(sig2, structure.domain_size, rels)
    assert out.reduct(tuple(sorted(input_names))) == structure.reduct(
        tuple(sorted(input_names))
    )
    return out


# ---------------------------------------------------------------------------
# the three recolouring conditions


@dataclass(frozen=True)
class ReductCertificate:
    """Colour whose image changes the input-symbol content."""

    source: int
    target: int

    def as_dict(self) -> Dict:
        return {"source": self.source, "target": self.target}


@dataclass(frozen=True)
class PartialIsoCertificate:
    """Two tuples with equal source patterns but different image patterns."""

    first: Tuple[int, Tuple[int, ...]]
    second: Tuple[int, Tuple[int, ...]]

    def as_dict(self) -> Dict:
        return {
            "first": {"colour": self.first[0], "tuple": list(self.first[1])},
            "second": {"colour": self.second[0], "tuple": list(self.second[1])},
        }


@dataclass(frozen=True)
class ViolationCertificate:
    """Model of the first sentence whose recoloured image violates the second."""

    clause_index: int
    assignment: Tuple[Tuple[str, int], ...]
    source: Structure
    image: Structure

    def as_dict(self) -> Dict:
        return {
            "clause": self.clause_index,
            "assignment": dict(self.assignment),
            "source": print_structure(self.source),
            "image": print_structure(self.image),
        }


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    condition: Optional[str] = None
    certificate: Optional[object] = None

    def __bool__(self) -> bool:
        return self.ok


def _pair_size_bound(phi1: SnpSentence, phi2: SnpSentence) -> int:
    return max(1, stats(phi1).ar, stats(phi2).ar)


def _pair_tables(
    phi1: SnpSentence,
    phi2: SnpSentence,
    tables: Optional[Tuple[ColourTable, ColourTable]],
    cfg: RunConfig,
) -> Tuple[ColourTable, ColourTable]:
    if tables is not None:
        table1, table2 = tables
        if table1.n != table2.n:
            raise InputError("colour tables disagree on the size bound")
        return table1, table2
    n = _pair_size_bound(phi1, phi2)
    table1 = enumerate_colours(phi1, n, cfg)
    table2 = table1 if phi2 == phi1 else enumerate_colours(phi2, n, cfg)
    return table1, table2


def _validate_total(xi: Recolouring, table1: ColourTable, table2: ColourTable) -> None:
    expected = set(range(len(table1.colours)))
    if set(xi.mapping) != expected:
        raise InputError("recolouring must map every source colour exactly once")
    for value in xi.mapping.values():
        if not 0 <= value < len(table2.colours):
            raise InputError(f"target colour id {value} out of range")


def check_recolouring(
    phi1: SnpSentence,
    phi2: SnpSentence,
    xi: Recolouring,
    *,
    tables: Optional[Tuple[ColourTable, ColourTable]] = None,
    config: Optional[RunConfig] = None,
    naive_iii: bool = False,
) -> CheckResult:
    """Check the three recolouring conditions, reporting the first failure.

    Condition (i): images preserve the input-symbol reduct. Condition (ii):
    tuples with equal ordered patterns keep equal patterns after recolouring.
    Condition (iii): no model of the first sentence has a recoloured image
    violating the second; checked on clause-shaped witnesses by default, or by
    sweeping all models up to the clause width when naive_iii is set.
    """
    cfg = config or default_config()
    if phi1.input_sig != phi2.input_sig:
        raise InputError("sentences must share the input signature")
    table1, table2 = _pair_tables(phi1, phi2, tables, cfg)
    _validate_total(xi, table1, table2)
    budget = Budget(cfg.budget, "check_recolouring")
    input_names = phi1.input_sig.names
    for cid, colour in enumerate(table1.colours):
        image = table2.colours[xi[cid]]
        if colour.reduct(input_names) != image.reduct(input_names):
            return CheckResult(False, "i", ReductCertificate(cid, xi[cid]))
    conflict = _pattern_dictionary_conflict(table1, table2, xi, budget)
    if conflict is not None:
        return CheckResult(False, "ii", conflict)
    if naive_iii:
        cert = _naive_iii_violation(phi1, phi2, xi, table1, table2, budget, cfg)
    else:
        cert = _pattern_iii_violation(phi1, phi2, xi, table1, table2, budget)
    if cert is not None:
        return CheckResult(False, "iii", cert)
    return CheckResult(True)


def _pattern_dictionary_conflict(
    table1: ColourTable,
    table2: ColourTable,
    xi: Recolouring,
    budget: Budget,
) -> Optional[PartialIsoCertificate]:
    """Condition (ii) as a dictionary: source pattern -> image pattern."""
    seen: Dict[Structure, Tuple[Structure, int, Tuple[int, ...]]] = {}
    for cid, colour in enumerate(table1.colours):
        image = table2.colours[xi[cid]]
        for r in range(1, colour.domain_size + 1):
            for tbar in permutations(colour.elements, r):
                budget.tick()
                src = ordered_pattern(colour, tbar)
                val = ordered_pattern(image, tbar)
                prior = seen.get(src)
                if prior is None:
                    seen[src] = (val, cid, tbar)
                elif prior[0] != val:
                    return PartialIsoCertificate((prior[1], prior[2]), (cid, tbar))
    return None


def _naive_iii_violation(
    phi1: SnpSentence,
    phi2: SnpSentence,
    xi: Recolouring,
    table1: ColourTable,
    table2: ColourTable,
    budget: Budget,
    cfg: RunConfig,
) -> Optional[ViolationCertificate]:
    """Condition (iii) by sweeping every model up to the clause width."""
    wd2 = stats(phi2).wd
    for size in range(1, wd2 + 1):
        for model in iter_fo_models(phi1, size, budget=cfg.budget):
            budget.tick()
            image = apply_extension(xi, model, table1, table2)
            assert isinstance(image, Structure)
            violation = check_fo_part(phi2, image)
            if violation is not None:
                return ViolationCertificate(
                    violation.clause_index, violation.assignment, model, image
                )
    return None


def _pattern_iii_violation(
    phi1: SnpSentence,
    phi2: SnpSentence,
    xi: Recolouring,
    table1: ColourTable,
    table2: ColourTable,
    budget: Budget,
    efm_memo: Optional[Dict[Structure, bool]] = None,
    src_index: Optional[Dict] = None,
) -> Optional[ViolationCertificate]:
    """Condition (iii) directed by clause shapes.

    Any violating model restricts to one on the at most wd elements named by
    the violated clause instance, because the universal part is closed under
    induced substructures. Instances naming at most n elements recolour into a
    single image colour and cannot violate, so only surjections onto n+1..wd
    elements are searched, each as a patchwork of colours per subset.
    """
    if efm_memo is None:
        efm_memo = {}
    if src_index is None:
        src_index = _content_index(table1.colours, enumerate(table1.colours))
    img_index = _content_index(
        table1.colours,
        ((cid, table2.colours[img_id]) for cid, img_id in xi.mapping.items()),
    )
    n = table1.n
    wd2 = stats(phi2).wd
    source_names = set(phi1.input_sig.names)
    seen_shapes: Set[Tuple] = set()
    for ci, clause in enumerate(phi2.clauses):
        cvars = clause.vars
        if len(cvars) <= n:
            continue
        for m in range(n + 1, min(len(cvars), wd2) + 1):
            for values in product(range(1, m + 1), repeat=len(cvars)):
                if len(set(values)) != m:
                    continue
                budget.tick()
                alpha = dict(zip(cvars, values))
                if not _eq_literals_all_false(clause, alpha):
                    continue
                groups = _requirement_groups(clause, alpha, source_names)
                if groups is None:
                    continue
                shape = (ci, m, _groups_key(groups))
                if shape in seen_shapes:
                    continue
                seen_shapes.add(shape)
                cert = _directed_violation(
                    phi1, xi, table1, table2, ci, clause, alpha, m, groups,
                    src_index, img_index, efm_memo, budget,
                )
                if cert is not None:
                    return cert
    return None


def _content_index(
    sources: Sequence[Structure],
    items,
) -> Dict[Tuple[str, Tuple[int, ...], int], Set[int]]:
    """Map (symbol, local tuple, colour size) to the colour ids carrying it."""
    index: Dict[Tuple[str, Tuple[int, ...], int], Set[int]] = {}
    for cid, content in items:
        size = sources[cid].domain_size
        for name in content.sig.names:
            for local in content.relations[name]:
                index.setdefault((name, local, size), set()).add(cid)
    return index


def _eq_literals_all_false(clause, alpha: Dict[str, int]) -> bool:
    for lit in clause.literals:
        if lit.kind == "eq":
            if (alpha[lit.args[0]] == alpha[lit.args[1]]) == lit.positive:
                return False
    return True


def _requirement_groups(clause, alpha: Dict[str, int], source_names: Set[str]):
    """Per element subset: which local tuples the violating witness must fix.

    A clause instance is violated when every literal is false, so positive
    literals require absence and negative ones presence. Symbols of the first
    sentence constrain the witness itself; the rest constrain its image.
    Returns None when one tuple is required both present and absent.
    """
    groups: Dict[Tuple[int, ...], Dict[Tuple[str, Tuple[int, ...], bool], bool]] = {}
    for lit in clause.literals:
        if lit.kind != "rel":
            continue
        image = tuple(alpha[v] for v in lit.args)
        elems = tuple(sorted(set(image)))
        pos = {e: i + 1 for i, e in enumerate(elems)}
        local = tuple(pos[e] for e in image)
        on_source = lit.symbol in source_names
        required = not lit.positive
        group = groups.setdefault(elems, {})
        key = (lit.symbol, local, on_source)
        if key in group and group[key] != required:
            return None
        group[key] = required
    return groups


def _groups_key(groups) -> Tuple:
    return tuple(
        (elems, tuple(sorted(group.items())))
        for elems, group in sorted(groups.items())
    )


def _directed_violation(
    phi1: SnpSentence,
    xi: Recolouring,
    table1: ColourTable,
    table2: ColourTable,
    ci: int,
    clause,
    alpha: Dict[str, int],
    m: int,
    groups,
    src_index: Dict,
    img_index: Dict,
    efm_memo: Dict[Structure, bool],
    budget: Budget,
) -> Optional[ViolationCertificate]:
    """Search for a witness of one clause instance as a patchwork of colours."""
    n = table1.n
    subsets: List[Tuple[int, ...]] = []
    for size in range(1, min(n, m) + 1):
        tier = sorted(combinations(range(1, m + 1), size))
        tier.sort(key=lambda s: (s not in groups, s))
        subsets.extend(tier)
    empty: Set[int] = set()
    candidates: Dict[Tuple[int, ...], List[int]] = {}
    for subset in subsets:
        budget.tick()
        ids = set(table1.by_size.get(len(subset), ()))
        for (symbol, local, on_source), required in groups.get(subset, {}).items():
            have = (src_index if on_source else img_index).get(
                (symbol, local, len(subset)), empty
            )
            ids = ids & have if required else ids - have
        if not ids:
            return None
        candidates[subset] = sorted(ids)
    position = {s: {e: i + 1 for i, e in enumerate(s)} for s in subsets}
    subparts: Dict[Tuple[int, ...], Tuple[Tuple[int, ...], ...]] = {}
    profiles: Dict[Tuple[int, ...], Dict[Tuple[int, ...], List[int]]] = {}
    for subset in subsets:
        if len(subset) == 1:
            continue
        parts = tuple(combinations(subset, len(subset) - 1))
        subparts[subset] = parts
        table: Dict[Tuple[int, ...], List[int]] = {}
        for cid in candidates[subset]:
            budget.tick()
            colour = table1.colours[cid]
            profile = tuple(
                table1.by_structure[
                    ordered_pattern(colour, tuple(position[subset][e] for e in part))
                ]
                for part in parts
            )
            table.setdefault(profile, []).append(cid)
        profiles[subset] = table
    assign: Dict[Tuple[int, ...], int] = {}

    def descend(i: int) -> Optional[ViolationCertificate]:
        if i == len(subsets):
            return finish()
        subset = subsets[i]
        if len(subset) == 1:
            pool: Sequence[int] = candidates[subset]
        else:
            profile = tuple(assign[part] for part in subparts[subset])
            pool = profiles[subset].get(profile, ())
        for cid in pool:
            budget.tick()
            assign[subset] = cid
            found = descend(i + 1)
            if found is not None:
                return found
            del assign[subset]
        return None

    def finish() -> Optional[ViolationCertificate]:
        rels: Dict[str, Set[Tuple[int, ...]]] = {name: set() for name in phi1.sig.names}
        for subset, cid in assign.items():
            colour = table1.colours[cid]
            for name in phi1.sig.names:
                for t in colour.relations[name]:
                    rels[name].add(tuple(subset[e - 1] for e in t))
        witness = Structure(phi1.sig, m, {k: sorted(v) for k, v in rels.items()})
        good = efm_memo.get(witness)
        if good is None:
            good = check_fo_part(phi1, witness) is None
            efm_memo[witness] = good
        if not good:
            return None
        image = apply_extension(xi, witness, table1, table2)
        assert isinstance(image, Structure)
        for lit in clause.literals:
            if lit.kind == "eq":
                holds = alpha[lit.args[0]] == alpha[lit.args[1]]
            else:
                holds = tuple(alpha[v] for v in lit.args) in image.relations[lit.symbol]
            if holds == lit.positive:
                return None
        return ViolationCertificate(ci, tuple(sorted(alpha.items())), witness, image)

    return descend(0)


# ---------------------------------------------------------------------------
# recolouring search


@dataclass(frozen=True)
class SearchResult:
    status: str
    recolouring: Optional[Recolouring] = None
    stage: Optional[str] = None

    @property
    def found(self) -> bool:
        return self.status == "found"


def recolouring_search(
    phi1: SnpSentence,
    phi2: SnpSentence,
    *,
    config: Optional[RunConfig] = None,
    tables: Optional[Tuple[ColourTable, ColourTable]] = None,
) -> SearchResult:
    """Search for a recolouring from the first sentence to the second.

    Returns status "found" with a recolouring satisfying all three conditions,
    "absent" when the finite search space is exhausted, or "unknown" when the
    step budget runs out first.
    """
    cfg = config or default_config()
    if phi1.input_sig != phi2.input_sig:
        raise InputError("sentences must share the input signature")
    try:
        table1, table2 = _pair_tables(phi1, phi2, tables, cfg)
        if phi1 == phi2:
            return SearchResult(
                "found", Recolouring({i: i for i in range(len(table1.colours))})
            )
        return _search(phi1, phi2, table1, table2, cfg)
    except BudgetExceeded as exc:
        return SearchResult("unknown", stage=exc.stage)


def _search(
    phi1: SnpSentence,
    phi2: SnpSentence,
    table1: ColourTable,
    table2: ColourTable,
    cfg: RunConfig,
) -> SearchResult:
    budget = Budget(cfg.budget, "recolouring_search")
    input_names = phi1.input_sig.names
    shared = [
        s.name
        for s in phi1.exist_sig
        if s.name in phi2.exist_sig.names
        and phi2.exist_sig.arity(s.name) == s.arity
    ]
    private2 = [s.name for s in phi2.exist_sig if s.name not in phi1.exist_sig.names]

    # group source colours into isomorphism classes; condition (ii) forces all
    # members of a class to follow the representative along the isomorphisms
    class_members: List[List[int]] = []
    class_isos: List[List[Dict[int, int]]] = []
    class_of: Dict[int, int] = {}
    by_canon: Dict[Tuple, int] = {}
    for cid, colour in enumerate(table1.colours):
        budget.tick()
        key = colour.canonical_key()
        cls = by_canon.get(key)
        if cls is None:
            cls = len(class_members)
            by_canon[key] = cls
            class_members.append([])
            class_isos.append([])
            iso = {e: e for e in colour.elements}
        else:
            rep = table1.colours[class_members[cls][0]]
            iso = next(iter_homs(rep, colour, injective=True, reflect=True))
        class_members[cls].append(cid)
        class_isos[cls].append(iso)
        class_of[cid] = cls

    def rep(cls: int) -> Structure:
        return table1.colours[class_members[cls][0]]

    order = sorted(
        range(len(class_members)),
        key=lambda c: (rep(c).domain_size, rep(c).total_tuples(), class_members[c][0]),
    )
    cand_by_class: List[List[int]] = []
    for cls in range(len(class_members)):
        r = rep(cls)
        base = table2.by_reduct.get(r.reduct(input_names), ())

        def score(i2: int, r: Structure = r) -> Tuple[int, int, int]:
            c2 = table2.colours[i2]
            mismatch = sum(len(r.relations[s] ^ c2.relations[s]) for s in shared)
            mismatch += sum(len(c2.relations[s]) for s in private2)
            return (mismatch, c2.total_tuples(), i2)

        cand_by_class.append(sorted(base, key=score))

    member_patterns: Dict[int, List[Tuple[Tuple[int, ...], Structure]]] = {}

    def patterns_of(cid: int) -> List[Tuple[Tuple[int, ...], Structure]]:
        got = member_patterns.get(cid)
        if got is None:
            colour = table1.colours[cid]
            got = [
                (tbar, ordered_pattern(colour, tbar))
                for r in range(1, colour.domain_size + 1)
                for tbar in permutations(colour.elements, r)
            ]
            member_patterns[cid] = got
        return got

    image_patterns: Dict[Tuple[int, Tuple[int, ...]], Structure] = {}

    def image_pattern(img_id: int, tbar: Tuple[int, ...]) -> Structure:
        got = image_patterns.get((img_id, tbar))
        if got is None:
            got = ordered_pattern(table2.colours[img_id], tbar)
            image_patterns[(img_id, tbar)] = got
        return got

    k = len(order)
    pos_of = {cls: i for i, cls in enumerate(order)}
    pattern_map: Dict[Structure, Structure] = {}
    mapping: Dict[int, int] = {}
    cur: List[Optional[int]] = [None] * len(class_members)
    undo: List[List[Structure]] = [[] for _ in range(k)]
    iters: List[Optional[Iterator[int]]] = [None] * k
    src_index = _content_index(table1.colours, enumerate(table1.colours))
    efm_memo: Dict[Structure, bool] = {}

    # nogoods recorded from condition (iii) failures, indexed by the class
    # assigned last; classes are committed in position order, so a nogood can
    # only complete when its deepest class is tried
    nogood_by_class: Dict[int, List[Tuple[Tuple[int, int], ...]]] = {}

    def blocked(cls: int, cand: int) -> bool:
        for ng in nogood_by_class.get(cls, ()):
            hit = True
            for c, v in ng:
                chosen = cand if c == cls else cur[c]
                if chosen != v:
                    hit = False
                    break
            if hit:
                return True
        return False

    def commit(pos: int, cand: int) -> bool:
        cls = order[pos]
        image_ids: List[int] = []
        for iso in class_isos[cls]:
            img = table2.colours[cand].rename(iso)
            img_id = table2.by_structure.get(img)
            assert img_id is not None
            image_ids.append(img_id)
        added: List[Structure] = []
        ok = True
        for member_id, img_id in zip(class_members[cls], image_ids):
            for tbar, src_pat in patterns_of(member_id):
                budget.tick()
                val = image_pattern(img_id, tbar)
                prior = pattern_map.get(src_pat)
                if prior is None:
                    pattern_map[src_pat] = val
                    added.append(src_pat)
                elif prior != val:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            for pat in added:
                del pattern_map[pat]
            return False
        for member_id, img_id in zip(class_members[cls], image_ids):
            mapping[member_id] = img_id
        cur[cls] = cand
        undo[pos] = added
        return True

    def release(pos: int) -> None:
        cls = order[pos]
        for pat in undo[pos]:
            del pattern_map[pat]
        undo[pos] = []
        for member_id in class_members[cls]:
            mapping.pop(member_id, None)
        cur[cls] = None

    depth = 0
    while True:
        if depth == k:
            xi = Recolouring(dict(mapping))
            cert = _pattern_iii_violation(
                phi1, phi2, xi, table1, table2, budget, efm_memo, src_index
            )
            if cert is None:
                return SearchResult("found", xi)
            involved: Set[int] = set()
            witness = cert.source
            for size in range(1, min(table1.n, witness.domain_size) + 1):
                for subset in combinations(witness.elements, size):
                    cid = table1.by_structure[ordered_pattern(witness, subset)]
                    involved.add(class_of[cid])
            deepest = max(involved, key=lambda cls: pos_of[cls])
            nogood_by_class.setdefault(deepest, []).append(
                tuple(sorted((cls, cur[cls]) for cls in involved))
            )
            target = pos_of[deepest]
            while depth > target + 1:
                depth -= 1
                release(depth)
                iters[depth] = None
            depth -= 1
            release(depth)
            continue
        it = iters[depth]
        if it is None:
            it = iter(cand_by_class[order[depth]])
            iters[depth] = it
        advanced = False
        for cand in it:
            budget.tick()
            if blocked(order[depth], cand):
                continue
            if commit(depth, cand):
                advanced = True
                break
        if advanced:
            depth += 1
            continue
        iters[depth] = None
        if depth == 0:
            return SearchResult("absent")
        depth -= 1
        release(depth)


# ---------------------------------------------------------------------------
# bounded amalgamation probe


@dataclass(frozen=True)
class ApCertificate:
    """Outcome for one amalgamation instance.

    When a witness exists the pair amalgamates within the explored bound. A
    failure with bound at least the size of the free disjoint union is a proof
    that no amalgam exists at all: any amalgam restricts to one on the images
    of the two sides, which never exceeds that size.
    """

    first: Structure
    second: Structure
    overlap: int
    witness: Optional[Structure]
    bound: int

    @property
    def amalgamates(self) -> bool:
        return self.witness is not None

    def as_dict(self) -> Dict:
        return {
            "first": print_structure(self.first),
            "second": print_structure(self.second),
            "overlap": self.overlap,
            "witness": print_structure(self.witness) if self.witness else None,
            "bound": self.bound,
        }


def check_ap_pair(
    phi: SnpSentence,
    first: Structure,
    second: Structure,
    overlap: int,
    max_witness: int,
    config: Optional[RunConfig] = None,
) -> ApCertificate:
    """Try to amalgamate two models over a shared part, up to a size bound.

    The shared part is the last `overlap` elements of the first structure,
    matched in order with the first `overlap` elements of the second. Both
    structures must model the universal part and agree on the shared part.
    Every identification of the remaining elements is tried; identified and
    copied tuples are fixed and a solver fills the rest, so a witness is found
    whenever some amalgam of size at most max_witness models the sentence.
    """
    cfg = config or default_config()
    a = first.domain_size
    b = second.domain_size
    if not 1 <= overlap <= min(a, b):
        raise InputError("overlap size must be between 1 and both domain sizes")
    tail = tuple(range(a - overlap + 1, a + 1))
    head = tuple(range(1, overlap + 1))
    if first.sig != phi.sig or second.sig != phi.sig:
        raise InputError("amalgamation operands must use the sentence signature")
    if ordered_pattern(first, tail) != ordered_pattern(second, head):
        raise InputError("structures disagree on the shared part")
    for side in (first, second):
        if check_fo_part(phi, side) is not None:
            raise InputError("amalgamation operands must model the universal part")
    budget = Budget(cfg.budget, "check_ap_pair")
    free_a = list(range(1, a - overlap + 1))
    free_b = list(range(overlap + 1, b + 1))
    ground_cache: Dict[int, Tuple[Dict, List[List[int]]]] = {}
    for merged in range(0, min(len(free_a), len(free_b)) + 1):
        for a_part in combinations(free_a, merged):
            for b_part in permutations(free_b, merged):
                budget.tick()
                mu = dict(zip(a_part, b_part))
                size = a + (b - overlap) - merged
                if size > max_witness:
                    continue
                b_map: Dict[int, int] = {}
                inverse = {v: k for k, v in mu.items()}
                fresh = a
                for j in range(1, b + 1):
                    if j <= overlap:
                        b_map[j] = a - overlap + j
                    elif j in inverse:
                        b_map[j] = inverse[j]
                    else:
                        fresh += 1
                        b_map[j] = fresh
                witness = _solve_amalgam(
                    phi, first, second, b_map, size, budget, cfg, ground_cache
                )
                if witness is not None:
                    return ApCertificate(first, second, overlap, witness, max_witness)
    return ApCertificate(first, second, overlap, None, max_witness)


def _solve_amalgam(
    phi: SnpSentence,
    first: Structure,
    second: Structure,
    b_map: Dict[int, int],
    size: int,
    budget: Budget,
    cfg: RunConfig,
    ground_cache: Dict,
):
    a = first.domain_size
    a_image = set(range(1, a + 1))
    b_image = set(b_map.values())
    inverse_b: Dict[int, int] = {v: k for k, v in b_map.items()}
    if size not in ground_cache:
        ground_cache[size] = ground_clauses(phi, size)
    index, cnf = ground_cache[size]
    assumptions: Dict[int, bool] = {}
    for (name, slot), vid in index.items():
        budget.tick()
        value: Optional[bool] = None
        if all(e in a_image for e in slot):
            value = slot in first.relations[name]
        if all(e in b_image for e in slot):
            pulled = tuple(inverse_b[e] for e in slot)
            in_b = pulled in second.relations[name]
            if value is not None and value != in_b:
                return None
            value = in_b
        if value is not None:
            assumptions[vid] = value
    solver = DpllSolver(len(index), cnf, stage="check_ap_pair")
    model = solver.solve(budget=cfg.budget, assumptions=assumptions)
    if model is None:
        return None
    rels: Dict[str, List[Tuple[int, ...]]] = {name: [] for name in phi.sig.names}
    for (name, slot), vid in index.items():
        if model[vid]:
            rels[name].append(slot)
    return Structure(phi.sig, size, rels)


def bounded_ap_check(
    phi: SnpSentence,
    max_base: int,
    max_witness: int,
    *,
    pairs: Optional[Sequence[Tuple[Structure, int, Structure]]] = None,
    config: Optional[RunConfig] = None,
) -> List[ApCertificate]:
    """Probe amalgamation over all model pairs up to a size bound.

    Enumerates models of the universal part with at most max_base elements,
    glues every compatible pair over every nonempty ordered overlap, and
    returns the failing instances. An explicit pair list (first, overlap,
    second) bypasses the enumeration; each entry must already agree on the
    shared part, with the overlap taken at the tail of the first structure and
    the head of the second.
    """
    cfg = config or default_config()
    failures: List[ApCertificate] = []
    if pairs is not None:
        for first, overlap, second in pairs:
            cert = check_ap_pair(phi, first, second, overlap, max_witness, cfg)
            if not cert.amalgamates:
                failures.append(cert)
        return failures
    budget = Budget(cfg.budget, "bounded_ap_check")
    members: List[Structure] = []
    for size in range(1, max_base + 1):
        for model in iter_fo_models(phi, size, budget=cfg.budget):
            members.append(model)
    by_head: Dict[Tuple[int, Structure], List[Structure]] = {}
    for member in members:
        for overlap in range(1, member.domain_size + 1):
            head = tuple(range(1, overlap + 1))
            pattern = ordered_pattern(member, head)
            by_head.setdefault((overlap, pattern), []).append(member)
    seen_reps: Set[Tuple] = set()
    seen_pairs: Set[Tuple[Structure, int, Structure]] = set()
    for member in members:
        key = member.canonical_key()
        if key in seen_reps:
            continue
        seen_reps.add(key)
        a = member.domain_size
        for overlap in range(1, a + 1):
            for tbar in permutations(member.elements, overlap):
                budget.tick()
                rest = [e for e in member.elements if e not in tbar]
                relabel = {e: i + 1 for i, e in enumerate(rest)}
                relabel.update(
                    {e: a - overlap + i + 1 for i, e in enumerate(tbar)}
                )
                first = member.rename(relabel)
                pattern = ordered_pattern(first, tuple(range(a - overlap + 1, a + 1)))
                for second in by_head.get((overlap, pattern), ()):
                    pair_key = (first, overlap, second)
                    if pair_key in seen_pairs:
                        continue
                    seen_pairs.add(pair_key)
                    cert = check_ap_pair(phi, first, second, overlap, max_witness, cfg)
                    if not cert.amalgamates:
                        failures.append(cert)
    return failures
