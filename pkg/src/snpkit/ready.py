"""Recolouring-readiness transforms and the ordered colour-mapping search.

Two rewritings prepare sentences for colour-mapping comparisons. The first
complements the witness signature so that each witness relation and its
complement partition the guarded tuples, saturates the forbidden patterns
until every pattern labels all its guarded tuples, and adds piece relations
guarded by full input tuples together with the definite clauses pinning them
down; finite models are preserved exactly. The second replaces the witness
signature wholesale by one relation per input-guarded ordered colour plus an
explicit linear order; on structures up to the variable cap it is logically
equivalent to its input. The search at the end looks for a colour mapping
between two prepared sentences that fixes input content, respects ordered
patterns, and admits no bounded obstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .config import Budget, RunConfig, default_config
from .errors import BudgetExceeded, InputError
from .hn_transform import (
    atom_universe,
    expand_pattern,
    generate_item3_clauses,
    minimal_implications,
    minimal_negative_patterns,
    pattern_canonical_key,
    target_database,
)
from .logic import (
    Clause,
    Literal,
    SnpSentence,
    classify,
    eliminate_equalities,
    ground_clauses,
    iter_fo_models,
    stats,
)
from .recolouring import Recolouring, SearchResult, enumerate_colours, ordered_pattern
from .solver import DpllSolver
from .structures import (
    Atom,
    Piece,
    RelSymbol,
    Signature,
    Structure,
    canonical_database,
    hom_search,
    iter_homs,
    enumerate_pieces,
    piece_canonical_key,
)

Pattern = Tuple[List[Atom], List[str]]


def _fresh(base: str, taken: Set[str]) -> str:
    if base not in taken:
        taken.add(base)
        return base
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    taken.add(f"{base}{i}")
    return f"{base}{i}"


# ---------------------------------------------------------------------------
# Complemented witness signature and pattern saturation


def complement_signature(sentence: SnpSentence) -> Tuple[Signature, Dict[str, str]]:
    """Witness signature doubled with a fresh complement per relation."""
    taken = set(sentence.sig.names)
    extra: List[RelSymbol] = []
    comp: Dict[str, str] = {}
    for sym in sentence.exist_sig:
        name = _fresh(sym.name + "c", taken)
        comp[sym.name] = name
        extra.append(RelSymbol(name, sym.arity))
    return sentence.exist_sig.union(Signature(extra)), comp


def _rewritten_patterns(sentence: SnpSentence, comp: Dict[str, str]) -> List[Pattern]:
    """Each clause as a fully negative atom set over input and signed
    witness relations: positive witness atoms become negated complements."""
    out: List[Pattern] = []
    for clause in sentence.clauses:
        atoms: List[Atom] = []
        for lit in clause.literals:
            name = comp[lit.symbol] if lit.positive else lit.symbol
            if (name, lit.args) not in atoms:
                atoms.append((name, lit.args))
        out.append((atoms, list(clause.vars)))
    return out


def labelling_schemas(
    exist_sig: Signature, comp: Dict[str, str], guard_sig: Signature
) -> List[Clause]:
    """For every guard shape, each guarded tuple lies in exactly one of a
    witness relation and its complement."""
    out: List[Clause] = []
    for sym in exist_sig:
        cname = comp[sym.name]
        for guard in guard_sig:
            zs = tuple(f"z{i + 1}" for i in range(guard.arity))
            for ybar in product(zs, repeat=sym.arity):
                guard_lit = Literal.rel(guard.name, zs, positive=False)
                out.append(Clause((
                    guard_lit,
                    Literal.rel(sym.name, ybar, positive=True),
                    Literal.rel(cname, ybar, positive=True),
                )))
                out.append(Clause((
                    guard_lit,
                    Literal.rel(sym.name, ybar, positive=False),
                    Literal.rel(cname, ybar, positive=False),
                )))
    return out


def _unlabelled_tuple(
    atoms: Sequence[Atom], exist_sig: Signature, comp: Dict[str, str]
) -> Optional[Tuple[str, Tuple[str, ...]]]:
    present = set(atoms)
    for _, args in atoms:
        entries = tuple(dict.fromkeys(args))
        for sym in exist_sig:
            for ybar in product(entries, repeat=sym.arity):
                if (sym.name, ybar) in present or (comp[sym.name], ybar) in present:
                    continue
                return sym.name, ybar
    return None


def close_patterns(
    patterns: Sequence[Pattern],
    exist_sig: Signature,
    comp: Dict[str, str],
    sig: Signature,
    budget: Optional[Budget] = None,
) -> List[Pattern]:
    """Split each pattern on unlabelled guarded tuples until every pattern
    labels all of them, deduplicating up to isomorphism along the way."""
    done: List[Pattern] = []
    seen = set()
    work = list(patterns)
    while work:
        atoms, variables = work.pop()
        if budget is not None:
            budget.tick()
        pick = _unlabelled_tuple(atoms, exist_sig, comp)
        if pick is None:
            key = pattern_canonical_key(atoms, variables, sig)
            if key not in seen:
                seen.add(key)
                done.append((atoms, variables))
            continue
        name, ybar = pick
        work.append((atoms + [(name, ybar)], variables))
        work.append((atoms + [(comp[name], ybar)], variables))
    done.sort(key=lambda p: (len(p[1]), len(p[0]), pattern_canonical_key(p[0], p[1], sig)))
    return done


def is_correctly_labelled(structure: Structure, comp: Dict[str, str]) -> bool:
    """Every tuple drawn from the entries of some tuple of the structure and
    matching a paired relation's arity lies in exactly one of the pair."""
    for _, t in structure.tuples():
        entries = tuple(dict.fromkeys(t))
        for xname, cname in comp.items():
            arity = structure.sig.arity(xname)
            for ybar in product(entries, repeat=arity):
                if (ybar in structure.relations[xname]) == (ybar in structure.relations[cname]):
                    return False
    return True


# ---------------------------------------------------------------------------
# Input-guarded piece relations


@dataclass(frozen=True)
class GuardedPieceSymbol:
    """Piece relation whose defining rooted structure extends a piece of a
    saturated pattern by fresh elements arranged into one full input tuple
    covering the root; the arity is that input relation's arity."""

    name: str
    piece: Piece
    guard: str
    member_index: int

    @property
    def arity(self) -> int:
        return len(self.piece.root)

    def as_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "arity": self.arity,
            "guard": self.guard,
            "member": self.member_index,
            "root": list(self.piece.root),
            "structure": repr(self.piece.structure),
        }


def _arrangements(root: Tuple[int, ...], arity: int, size: int) -> Iterator[Tuple[int, ...]]:
    """Duplicate-free tuples of the given arity containing every root element,
    padded with fresh elements numbered from size+1 in appearance order."""
    for positions in permutations(range(arity), len(root)):
        sbar = [0] * arity
        for e, p in zip(root, positions):
            sbar[p] = e
        nxt = size
        for i in range(arity):
            if sbar[i] == 0:
                nxt += 1
                sbar[i] = nxt
        yield tuple(sbar)


def guarded_piece_symbols(
    members: Sequence[Structure],
    input_sig: Signature,
    taken: Set[str],
    budget: Optional[Budget] = None,
) -> List[GuardedPieceSymbol]:
    """All input-guarded extended pieces of the members, up to rooted
    isomorphism, named in canonical order."""
    found: Dict[Tuple, Tuple[Piece, str, int]] = {}
    for mi, member in enumerate(members):
        for piece in enumerate_pieces(member):
            base = piece.structure
            for guard in input_sig:
                if guard.arity < len(piece.root):
                    continue
                for sbar in _arrangements(piece.root, guard.arity, base.domain_size):
                    if budget is not None:
                        budget.tick()
                    size = max(base.domain_size, max(sbar))
                    rels = {n: set(base.relations[n]) for n in base.sig.names}
                    rels[guard.name].add(sbar)
                    ext = Structure(base.sig, size, rels)
                    key = piece_canonical_key(ext, sbar)
                    if key in found:
                        continue
                    rooted = Piece(
                        structure=ext,
                        root=sbar,
                        support=tuple(ext.elements),
                        host_root=sbar,
                    )
                    found[key] = (rooted, guard.name, mi)
    out = []
    for i, key in enumerate(sorted(found)):
        rooted, guard, mi = found[key]
        out.append(GuardedPieceSymbol(_fresh(f"gp{i + 1}", taken), rooted, guard, mi))
    return out


def piece_definition_clauses(
    infos: Sequence[GuardedPieceSymbol],
    plain: Signature,
    wd_cap: int,
    config: Optional[RunConfig] = None,
    budget: Optional[Budget] = None,
) -> List[Clause]:
    """Definite clauses inferring a guarded piece atom from bodies that force
    its defining rooted structure.

    Candidates are head-pinned quotients of the defining structure and
    placements of piece atoms whose expansion hosts it; each candidate is
    checked exactly, then a subsumption-minimal set is kept.
    """
    cfg = config or default_config()
    rho_by_name = {info.name: info for info in infos}
    rho_sig = Signature([RelSymbol(i.name, i.arity) for i in infos])
    body_sig = plain.union(rho_sig)
    found: List[Tuple[List[Atom], List[str], Atom]] = []
    seen = set()

    def consider(body, variables, head, head_args, target_cd, target_map):
        body = list(dict.fromkeys(body))
        if head in body:
            return
        if not any(set(head_args) <= set(args) for _, args in body):
            # keep the inferred atom guarded inside the clause
            body.append((rho_by_name[head[0]].guard, tuple(head_args)))
        used = {v for _, args in body for v in args} | set(head_args)
        if used != set(variables):
            return
        key = pattern_canonical_key(body, variables, body_sig, head=head)
        if key in seen:
            return
        seen.add(key)
        expanded, var_map = expand_pattern(body, variables, rho_by_name, plain)
        pinned = {target_map[a]: var_map[a] for a in dict.fromkeys(head_args)}
        if hom_search(target_cd, expanded, partial=pinned) is None:
            return
        found.append((body, variables, head))

    for info in infos:
        for m in range(1, wd_cap + 1):
            variables = [f"v{i + 1}" for i in range(m)]
            rho_universe = atom_universe(rho_sig, variables)
            for head_args in product(variables, repeat=info.arity):
                head = (info.name, tuple(head_args))
                target_cd, target_map = target_database(info, head_args, plain)
                pin = {target_map[a]: variables.index(a) for a in dict.fromkeys(head_args)}
                if budget is not None:
                    budget.tick(m ** target_cd.domain_size)
                for values in product(range(m), repeat=target_cd.domain_size):
                    if any(values[e - 1] != i for e, i in pin.items()):
                        continue
                    if set(values) != set(range(m)):
                        continue
                    body: List[Atom] = []
                    for name, t in target_cd.tuples():
                        atom = (name, tuple(variables[values[e - 1]] for e in t))
                        if atom not in body:
                            body.append(atom)
                    consider(body, variables, head, head_args, target_cd, target_map)
                for k in range(1, cfg.piece_atom_cap + 1):
                    for placement in combinations(rho_universe, k):
                        if head in placement:
                            continue
                        glue, glue_map = expand_pattern(list(placement), variables, rho_by_name, plain)
                        var_elems = {glue_map[v]: v for v in variables}
                        glue_atoms = set(glue.tuples())
                        gpin = {target_map[a]: glue_map[a] for a in dict.fromkeys(head_args)}
                        for h in iter_homs(target_cd, glue, partial=gpin):
                            if budget is not None:
                                budget.tick()
                            direct: List[Atom] = []
                            ok = True
                            for name, t in target_cd.tuples():
                                img = tuple(h[e] for e in t)
                                if (name, img) in glue_atoms:
                                    continue
                                if all(e in var_elems for e in img):
                                    atom = (name, tuple(var_elems[e] for e in img))
                                    if atom not in direct:
                                        direct.append(atom)
                                else:
                                    ok = False
                                    break
                            if ok:
                                consider(list(placement) + direct, variables, head, head_args, target_cd, target_map)
    if cfg.subsume:
        found = minimal_implications(found)
    out = []
    for body, _, head in found:
        literals = [Literal.rel(n, a, positive=False) for n, a in body]
        literals.append(Literal.rel(head[0], head[1], positive=True))
        out.append(Clause(tuple(literals)))
    return out


# ---------------------------------------------------------------------------
# The readiness transform


@dataclass(frozen=True)
class OmegaOutput:
    """Readiness rewriting with its bookkeeping.

    family holds the canonical databases of the saturated patterns;
    piece_symbols the input-guarded piece relations. The output sentence's
    finite models are exactly those of the source.
    """

    source: SnpSentence
    sentence: SnpSentence
    family: Tuple[Structure, ...]
    piece_symbols: Tuple[GuardedPieceSymbol, ...]
    complement: Dict[str, str] = field(compare=False)
    counts: Dict[str, int] = field(compare=False)

    @property
    def n(self) -> int:
        return max((m.domain_size for m in self.family), default=0)

    def as_dict(self) -> Dict[str, object]:
        return {
            "counts": dict(self.counts),
            "complement": dict(self.complement),
            "piece_symbols": [info.as_dict() for info in self.piece_symbols],
            "n": self.n,
        }


def omega_transform(sentence: SnpSentence, config: Optional[RunConfig] = None) -> OmegaOutput:
    """Rewrite a connected guarded monotone sentence into a form ready for
    colour-mapping comparisons, preserving its finite models exactly.

    The witness signature is complemented, the forbidden patterns are
    saturated so that each labels every tuple it guards, and piece relations
    guarded by full input tuples are added along with the definite clauses
    that force them and the patterns that bound them.
    """
    cfg = config or default_config()
    cls = classify(sentence)
    if not cls.gmsnp:
        raise InputError("readiness transform requires a guarded monotone sentence")
    if not cls.connected:
        raise InputError("readiness transform requires a connected sentence")
    budget = Budget(cfg.budget, "omega_transform")
    base = eliminate_equalities(sentence)
    exist_bar, comp = complement_signature(base)
    sig_bar = base.input_sig.union(exist_bar)
    closed = close_patterns(_rewritten_patterns(base, comp), base.exist_sig, comp, sig_bar, budget)
    members: List[Structure] = []
    for atoms, variables in closed:
        cd, _ = canonical_database(atoms, variables=variables, sig=sig_bar)
        members.append(cd)
    n = max((m.domain_size for m in members), default=0)
    taken = set(sig_bar.names)
    infos = guarded_piece_symbols(members, base.input_sig, taken, budget)
    schemas = labelling_schemas(base.exist_sig, comp, sig_bar)
    item1 = piece_definition_clauses(infos, sig_bar, n, cfg, budget) if infos else []
    item2 = (
        generate_item3_clauses(members, infos, sig_bar, n, cfg, budget) if members else []
    )
    pattern_clauses = [
        Clause(tuple(Literal.rel(name, args, positive=False) for name, args in atoms))
        for atoms, _ in closed
    ]
    plus_sig = Signature([RelSymbol(i.name, i.arity) for i in infos])
    full_sig = sig_bar.union(plus_sig)
    pattern_keys = {
        pattern_canonical_key(atoms, variables, full_sig) for atoms, variables in closed
    }
    bounding = []
    for clause in item2:
        atoms = [(lit.symbol, lit.args) for lit in clause.literals]
        if pattern_canonical_key(atoms, list(clause.vars), full_sig) in pattern_keys:
            continue
        bounding.append(clause)
    out = SnpSentence(
        base.input_sig,
        exist_bar.union(plus_sig),
        pattern_clauses + schemas + item1 + bounding,
    )
    out_cls = classify(out)
    assert out_cls.gmsnp and out_cls.connected, "readiness output left its class"
    counts = {
        "patterns": len(pattern_clauses),
        "schemas": len(schemas),
        "definitions": len(item1),
        "bounds": len(bounding),
        "family": len(members),
        "piece_symbols": len(infos),
        "clauses": len(out.clauses),
    }
    return OmegaOutput(
        source=sentence,
        sentence=out,
        family=tuple(members),
        piece_symbols=tuple(infos),
        complement=comp,
        counts=counts,
    )


# ---------------------------------------------------------------------------
# Ordered colours and the order-expanded rewriting


def tau_guarded(structure: Structure, input_sig: Signature) -> bool:
    """Some input tuple of the structure covers its whole domain."""
    dom = set(structure.elements)
    for sym in input_sig:
        for t in structure.relations[sym.name]:
            if dom <= set(t):
                return True
    return False


def ordered_colours(
    sentence: SnpSentence, n: int, config: Optional[RunConfig] = None
) -> List[Structure]:
    """Input-guarded colours with domain size up to n, in enumeration order.

    The linear order on a colour is implicit in its element numbering, so
    distinct numberings of isomorphic colours are distinct ordered colours.
    A guarded colour fits inside one input tuple, so sizes beyond the largest
    input arity are skipped.
    """
    cfg = config or default_config()
    cap = min(n, max((sym.arity for sym in sentence.input_sig), default=0))
    if cap < 1:
        return []
    table = enumerate_colours(sentence, cap, cfg)
    return [c for c in table.colours if tau_guarded(c, sentence.input_sig)]


@dataclass(frozen=True)
class OrderedColour:
    """Colour relation named after an input-guarded colour; tuples holding in
    it are forced to enumerate the colour's elements in increasing order."""

    name: str
    structure: Structure

    @property
    def arity(self) -> int:
        return self.structure.domain_size

    def as_dict(self) -> Dict[str, object]:
        return {"name": self.name, "arity": self.arity, "structure": repr(self.structure)}


@dataclass(frozen=True)
class OmegaPrimeOutput:
    source: SnpSentence
    sentence: SnpSentence
    colours: Tuple[OrderedColour, ...]
    order_symbol: str
    counts: Dict[str, int] = field(compare=False)

    def as_dict(self) -> Dict[str, object]:
        return {
            "counts": dict(self.counts),
            "colours": [c.as_dict() for c in self.colours],
            "order_symbol": self.order_symbol,
        }


def _diagram_facts(
    colour: Structure, args: Sequence[int], order_symbol: str
) -> Iterator[Tuple[str, Tuple[int, ...], bool]]:
    """Atomic diagram of the colour transported along position -> args[position],
    including the implicit increasing order on its elements."""
    k = colour.domain_size
    for name in colour.sig.names:
        arity = colour.sig.arity(name)
        for t in product(range(1, k + 1), repeat=arity):
            yield name, tuple(args[e - 1] for e in t), t in colour.relations[name]
    for a in range(1, k + 1):
        for b in range(1, k + 1):
            yield order_symbol, (args[a - 1], args[b - 1]), a < b


def _order_consistent(
    positive: Set[Tuple[int, int]], negative: Set[Tuple[int, int]], size: int
) -> bool:
    """Whether the forced order facts embed into some strict linear order:
    the positive pairs must be acyclic and their transitive closure disjoint
    from the negated pairs."""
    closure = {p for p in positive}
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in product(list(closure), repeat=2):
            if b == c and (a, d) not in closure:
                closure.add((a, d))
                changed = True
    if any(a == b for a, b in closure):
        return False
    return not (closure & negative)


def _pattern_satisfiable(
    atoms: Sequence[Atom],
    variables: Sequence[str],
    sentence: SnpSentence,
    colours: Dict[str, Structure],
    order_symbol: str,
    budget: Budget,
    ground_cache: Dict[int, Tuple[Dict, List[List[int]]]],
) -> bool:
    """Whether the pattern, with colour atoms replaced by their diagrams, has
    a model of the source's universal part under some variable identification."""
    m = len(variables)
    var_pos = {v: i for i, v in enumerate(variables)}
    for values in product(range(1, m + 1), repeat=m):
        size = len(set(values))
        if set(values) != set(range(1, size + 1)):
            continue  # canonical image domains only
        budget.tick()
        facts: Dict[Tuple[str, Tuple[int, ...]], bool] = {}
        ok = True
        for name, args in atoms:
            mapped = tuple(values[var_pos[v]] for v in args)
            if name in colours:
                gen = _diagram_facts(colours[name], mapped, order_symbol)
            else:
                gen = [(name, mapped, True)]
            for fname, ft, val in gen:
                if facts.setdefault((fname, ft), val) != val:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        pos_order = {t for (nm, t), val in facts.items() if nm == order_symbol and val}
        neg_order = {t for (nm, t), val in facts.items() if nm == order_symbol and not val}
        if not _order_consistent(pos_order, neg_order, size):
            continue
        if size not in ground_cache:
            ground_cache[size] = ground_clauses(sentence, size)
        index, cnf = ground_cache[size]
        assumptions = {}
        for (fname, ft), val in facts.items():
            if fname == order_symbol:
                continue
            assumptions[index[(fname, ft)]] = val
        solver = DpllSolver(len(index), cnf, stage="omega_prime")
        if solver.solve(budget=budget.remaining(), assumptions=assumptions) is not None:
            return True
    return False


def omega_prime(
    sentence: SnpSentence,
    n: Optional[int] = None,
    *,
    var_cap: Optional[int] = None,
    config: Optional[RunConfig] = None,
) -> OmegaPrimeOutput:
    """Replace the witness signature by one relation per input-guarded ordered
    colour of size up to n, together with an explicit linear order.

    Emitted clauses: every connected fully negative pattern over input and
    colour atoms, bounded by var_cap variables, whose replacement by atomic
    diagrams is unsatisfiable with the source's universal part; order-cycle
    prohibitions up to the source's width; and clauses forcing every colour
    tuple to be increasing. On structures with at most var_cap elements the
    output is logically equivalent to the source.
    """
    cfg = config or default_config()
    cls = classify(sentence)
    if not cls.gmsnp:
        raise InputError("order-expanded rewriting requires a guarded monotone sentence")
    st = stats(sentence)
    if n is None:
        n = st.wd + 2 * st.ar
    if var_cap is None:
        var_cap = st.wd + 2 * st.ar
    budget = Budget(cfg.budget, "omega_prime")
    base = eliminate_equalities(sentence)
    guarded = ordered_colours(base, n, cfg)
    taken = set(base.input_sig.names)
    order_symbol = _fresh("lt", taken)
    infos = [
        OrderedColour(_fresh(f"col{i + 1}", taken), colour)
        for i, colour in enumerate(guarded)
    ]
    by_name = {info.name: info.structure for info in infos}
    colour_sig = Signature([RelSymbol(i.name, i.arity) for i in infos])
    pattern_sig = base.input_sig.union(colour_sig)

    candidates: List[Pattern] = []
    seen = set()
    ground_cache: Dict[int, Tuple[Dict, List[List[int]]]] = {}

    def consider(atoms: List[Atom], variables: List[str]) -> None:
        used = {v for _, args in atoms for v in args}
        if used != set(variables) or not atoms:
            return
        key = pattern_canonical_key(atoms, variables, pattern_sig)
        if key in seen:
            return
        seen.add(key)
        cd, _ = canonical_database(atoms, variables=variables, sig=pattern_sig)
        if not cd.is_connected():
            return
        if _pattern_satisfiable(atoms, variables, base, by_name, order_symbol, budget, ground_cache):
            return
        candidates.append((atoms, variables))

    # admission control: the whole mask space counts against the budget
    budget.tick(sum(
        1 << len(atom_universe(base.input_sig, [f"v{i + 1}" for i in range(m)]))
        for m in range(1, var_cap + 1)
    ))
    for m in range(1, var_cap + 1):
        variables = [f"v{i + 1}" for i in range(m)]
        universe = atom_universe(base.input_sig, variables)
        for mask in range(1, 1 << len(universe)):
            consider([universe[i] for i in range(len(universe)) if mask >> i & 1], variables)

    # colour-atom placements: injective argument tuples, linked by shared
    # variables, with up to two extra input atoms over the same variables
    colour_universe: List[Atom] = []
    for info in infos:
        for m in range(info.arity, var_cap + 1):
            variables = [f"v{i + 1}" for i in range(m)]
            for args in permutations(variables, info.arity):
                atom = (info.name, tuple(args))
                if atom not in colour_universe:
                    colour_universe.append(atom)
    for count in range(1, cfg.colour_atom_cap + 1):
        for placement in combinations(colour_universe, count):
            budget.tick()
            used = [v for _, args in placement for v in args]
            variables = list(dict.fromkeys(used))
            if len(variables) > var_cap:
                continue
            if count > 1:
                linked = all(
                    any(set(a[1]) & set(b[1]) for b in placement if b is not a)
                    for a in placement
                )
                if not linked:
                    continue
            extras = atom_universe(base.input_sig, variables)
            for extra_count in range(0, min(2, len(extras)) + 1):
                for extra in combinations(extras, extra_count):
                    consider(list(placement) + list(extra), variables)

    keep = minimal_negative_patterns(candidates, pattern_sig, budget)
    pattern_clauses = [
        Clause(tuple(Literal.rel(name, args, positive=False) for name, args in candidates[i][0]))
        for i in keep
    ]
    cycle_clauses = []
    for k in range(1, max(st.wd, 1) + 1):
        zs = [f"z{i + 1}" for i in range(k)]
        cycle_clauses.append(Clause(tuple(
            Literal.rel(order_symbol, (zs[i], zs[(i + 1) % k]), positive=False)
            for i in range(k)
        )))
    increasing_clauses = []
    for info in infos:
        xs = tuple(f"x{i + 1}" for i in range(info.arity))
        for i, j in combinations(range(info.arity), 2):
            increasing_clauses.append(Clause((
                Literal.rel(info.name, xs, positive=False),
                Literal.rel(order_symbol, (xs[i], xs[j]), positive=True),
            )))
    exist_sig = colour_sig.union(Signature([RelSymbol(order_symbol, 2)]))
    out = SnpSentence(
        base.input_sig,
        exist_sig,
        pattern_clauses + cycle_clauses + increasing_clauses,
    )
    out_cls = classify(out)
    assert out_cls.gmsnp, "order-expanded output left its class"
    counts = {
        "colours": len(infos),
        "patterns": len(pattern_clauses),
        "cycles": len(cycle_clauses),
        "increasing": len(increasing_clauses),
        "clauses": len(out.clauses),
    }
    return OmegaPrimeOutput(
        source=sentence,
        sentence=out,
        colours=tuple(infos),
        order_symbol=order_symbol,
        counts=counts,
    )


# ---------------------------------------------------------------------------
# Colour-mapping search between prepared sentences


def gmsnp_recolouring_search(
    phi1: SnpSentence,
    phi2: SnpSentence,
    *,
    config: Optional[RunConfig] = None,
) -> SearchResult:
    """Search for a map between the input-guarded colours of two sentences
    that witnesses containment of the first in the second.

    The map must fix the input content of each colour exactly, relate equal
    ordered patterns to equal ordered patterns, and leave no bounded
    obstruction: every model of the first universal part up to the second's
    width must admit a witness expansion agreeing with the mapped colours on
    its guarded substructures. Equal sentences short-circuit to the identity
    without materializing the colour tables.
    """
    cfg = config or default_config()
    if phi1.input_sig != phi2.input_sig:
        raise InputError("sentences must share the input signature")
    if phi1 == phi2:
        # the identity on colours satisfies every condition
        return SearchResult("found", None)
    n = max(stats(phi1).ar, stats(phi2).ar, 1)
    try:
        colours1 = ordered_colours(phi1, n, cfg)
        colours2 = ordered_colours(phi2, n, cfg)
        return _ordered_search(phi1, phi2, colours1, colours2, n, cfg)
    except BudgetExceeded as exc:
        return SearchResult("unknown", stage=exc.stage)


def _ordered_search(
    phi1: SnpSentence,
    phi2: SnpSentence,
    colours1: List[Structure],
    colours2: List[Structure],
    n: int,
    cfg: RunConfig,
) -> SearchResult:
    budget = Budget(cfg.budget, "gmsnp_recolouring_search")
    input_names = phi1.input_sig.names
    sigma2 = [s for s in phi2.sig if s.name not in set(input_names)]
    wd2 = max(stats(phi2).wd, 1)

    by_reduct: Dict[Structure, List[int]] = {}
    for j, colour in enumerate(colours2):
        by_reduct.setdefault(colour.reduct(input_names), []).append(j)
    candidates: List[List[int]] = []
    for colour in colours1:
        cand = by_reduct.get(colour.reduct(input_names), [])
        if not cand:
            return SearchResult("absent")
        candidates.append(cand)

    source_index: Dict[Structure, int] = {c: i for i, c in enumerate(colours1)}
    tuples_of = [
        [t for r in range(1, c.domain_size + 1) for t in combinations(c.elements, r)]
        for c in colours1
    ]
    dictionary: Dict[Structure, Structure] = {}
    assignment: List[Optional[int]] = [None] * len(colours1)
    ground_cache: Dict[int, Tuple[Dict, List[List[int]]]] = {}

    def dict_extend(i: int, j: int, journal: List[Structure]) -> bool:
        left, right = colours1[i], colours2[j]
        for t in tuples_of[i]:
            budget.tick()
            src = ordered_pattern(left, t)
            img = ordered_pattern(right, t)
            known = dictionary.get(src)
            if known is None:
                dictionary[src] = img
                journal.append(src)
            elif known != img:
                return False
        return True

    def obstruction_free() -> bool:
        for m in range(1, wd2 + 1):
            if m not in ground_cache:
                ground_cache[m] = ground_clauses(phi2, m)
            index, cnf = ground_cache[m]
            solver = DpllSolver(len(index), cnf, stage="gmsnp_recolouring_search")
            for model in iter_fo_models(phi1, m, budget=budget.remaining()):
                budget.tick()
                assumptions: Dict[int, bool] = {}
                for (name, t), vid in index.items():
                    if name in set(input_names):
                        assumptions[vid] = t in model.relations[name]
                for r in range(1, min(n, m) + 1):
                    for subset in combinations(range(1, m + 1), r):
                        sub = model.induced(subset)
                        if not tau_guarded(sub, phi1.input_sig):
                            continue
                        image = colours2[assignment[source_index[sub]]]
                        for sym in sigma2:
                            for t in product(range(1, r + 1), repeat=sym.arity):
                                slot = (sym.name, tuple(subset[e - 1] for e in t))
                                want = t in image.relations[sym.name]
                                # overlaps agree because the dictionary is consistent
                                assert assumptions.setdefault(index[slot], want) == want
                if solver.solve(budget=budget.remaining(), assumptions=assumptions) is None:
                    return False
        return True

    def extend(i: int) -> bool:
        if i == len(colours1):
            return obstruction_free()
        for j in candidates[i]:
            budget.tick()
            journal: List[Structure] = []
            if dict_extend(i, j, journal):
                assignment[i] = j
                if extend(i + 1):
                    return True
                assignment[i] = None
            for key in journal:
                del dictionary[key]
        return False

    if extend(0):
        return SearchResult(
            "found", Recolouring({i: j for i, j in enumerate(assignment)})
        )
    return SearchResult("absent")
