"""Order-expansion transform of guarded monotone sentences.

Rewrites a sentence into one whose witness expansions carry explicit
bookkeeping: signed copies of every relation, piece relations describing
partial occurrences of the forbidden patterns, and a linear order. Finite
input models are preserved exactly; the expansion class acquires the
structural regularity the colour-mapping search relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from math import comb
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .config import Budget, RunConfig, default_config
from .errors import BudgetExceeded, InputError
from .logic import Clause, Literal, SentenceStats, SnpSentence, classify, clause_structure, eliminate_equalities, stats
from .structures import (
    Atom,
    Piece,
    RelSymbol,
    Signature,
    Structure,
    canonical_database,
    enumerate_pieces,
    hom_search,
    iter_homs,
    piece_canonical_key,
    pre_formula,
)


def _fresh(base: str, taken: Set[str]) -> str:
    if base not in taken:
        taken.add(base)
        return base
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    name = f"{base}{i}"
    taken.add(name)
    return name


@dataclass(frozen=True)
class PrimedSignature:
    """Signed copies R -> (R_p, R_m) of a signature's symbols."""

    base: Signature
    plus: Dict[str, str]
    minus: Dict[str, str]
    plus_sig: Signature
    minus_sig: Signature

    @property
    def full_sig(self) -> Signature:
        return self.plus_sig.union(self.minus_sig)


def primed_signature(sig: Signature) -> PrimedSignature:
    taken = set(sig.names)
    plus: Dict[str, str] = {}
    minus: Dict[str, str] = {}
    plus_syms: List[RelSymbol] = []
    minus_syms: List[RelSymbol] = []
    for sym in sig:
        p = _fresh(f"{sym.name}_p", taken)
        m = _fresh(f"{sym.name}_m", taken)
        plus[sym.name] = p
        minus[sym.name] = m
        plus_syms.append(RelSymbol(p, sym.arity))
        minus_syms.append(RelSymbol(m, sym.arity))
    return PrimedSignature(sig, plus, minus, Signature(plus_syms), Signature(minus_syms))


def build_phi_prime(sentence: SnpSentence) -> Tuple[SnpSentence, PrimedSignature]:
    """Rewrite each clause into a fully negative one over the signed copies.

    A negated atom of the source pattern becomes a negated plus-atom, a
    positive witness atom a negated minus-atom. The result has the plus
    copies as input and the minus copies as existential symbols.
    """
    primed = primed_signature(sentence.sig)
    clauses = []
    for clause in sentence.clauses:
        literals = []
        for lit in clause.literals:
            if lit.kind != "rel":
                raise InputError("equality-free input required")
            if lit.positive:
                literals.append(Literal.rel(primed.minus[lit.symbol], lit.args, positive=False))
            else:
                literals.append(Literal.rel(primed.plus[lit.symbol], lit.args, positive=False))
        clauses.append(Clause(tuple(literals)))
    phi_prime = SnpSentence(primed.plus_sig, primed.minus_sig, clauses)
    return phi_prime, primed


def forbidden_family(phi_prime: SnpSentence) -> List[Structure]:
    """Canonical databases of the rewritten patterns, one per clause."""
    members = []
    for clause in phi_prime.clauses:
        member, _ = clause_structure(clause, phi_prime.sig)
        members.append(member)
    return members


@dataclass(frozen=True)
class RhoInfo:
    name: str
    piece: Piece
    member_index: int

    @property
    def arity(self) -> int:
        return self.piece.arity


def rho_signature(members: Sequence[Structure], taken: Set[str]) -> List[RhoInfo]:
    """One relation per piece class occurring in any family member."""
    found: List[Tuple[Tuple, Piece, int]] = []
    seen = set()
    for mi, member in enumerate(members):
        for piece in enumerate_pieces(member):
            key = piece.canonical_key()
            if key in seen:
                continue
            seen.add(key)
            found.append((key, piece, mi))
    found.sort(key=lambda item: item[0])
    infos = []
    for i, (_, piece, mi) in enumerate(found):
        name = _fresh(f"rho{i + 1}", taken)
        infos.append(RhoInfo(name, piece, mi))
    return infos


def order_axioms(lt: str) -> List[Clause]:
    """Irreflexive, transitive, total binary relation."""
    return [
        Clause((Literal.rel(lt, ("x", "x"), positive=False),)),
        Clause(
            (
                Literal.rel(lt, ("x", "y"), positive=False),
                Literal.rel(lt, ("y", "z"), positive=False),
                Literal.rel(lt, ("x", "z"), positive=True),
            )
        ),
        Clause(
            (
                Literal.rel(lt, ("x", "y"), positive=True),
                Literal.eq("x", "y", positive=True),
                Literal.rel(lt, ("y", "x"), positive=True),
            )
        ),
    ]


def correctness_clauses(
    sentence: SnpSentence,
    primed: PrimedSignature,
    max_choice_bits: int = 12,
) -> List[Clause]:
    """Defining clauses tying each original relation to its signed copies.

    R holds on a tuple exactly when its plus copy holds and every witness
    relation is consistently signed on the tuple's elements (each such tuple
    lies in exactly one of the two copies).
    """
    clauses: List[Clause] = []
    sigma = list(sentence.exist_sig)
    for sym in sentence.sig:
        xs = tuple(f"x{i + 1}" for i in range(sym.arity))
        pairs: List[Tuple[str, Tuple[str, ...]]] = []
        for wit in sigma:
            for ys in product(xs, repeat=wit.arity):
                pairs.append((wit.name, ys))
        r = Literal.rel(sym.name, xs, positive=True)
        not_r = Literal.rel(sym.name, xs, positive=False)
        r_plus = Literal.rel(primed.plus[sym.name], xs, positive=True)
        not_r_plus = Literal.rel(primed.plus[sym.name], xs, positive=False)
        clauses.append(Clause((not_r, r_plus)))
        for wit_name, ys in pairs:
            plus = Literal.rel(primed.plus[wit_name], ys, positive=True)
            minus = Literal.rel(primed.minus[wit_name], ys, positive=True)
            clauses.append(Clause((not_r, plus, minus)))
            clauses.append(
                Clause(
                    (
                        not_r,
                        Literal.rel(primed.plus[wit_name], ys, positive=False),
                        Literal.rel(primed.minus[wit_name], ys, positive=False),
                    )
                )
            )
        if len(pairs) > max_choice_bits:
            raise BudgetExceeded("correctness_clauses", 1 << max_choice_bits)
        for signs in product((True, False), repeat=len(pairs)):
            lits = [not_r_plus, r]
            for (wit_name, ys), plus_side in zip(pairs, signs):
                first = primed.plus[wit_name] if plus_side else primed.minus[wit_name]
                second = primed.minus[wit_name] if plus_side else primed.plus[wit_name]
                lits.append(Literal.rel(first, ys, positive=False))
                lits.append(Literal.rel(second, ys, positive=True))
            clauses.append(Clause(tuple(lits)))
    return clauses


# ---------------------------------------------------------------------------
# Pattern expansion shared by the clause item generators


def expand_pattern(
    atoms: Sequence[Atom],
    variables: Sequence[str],
    rho_by_name: Dict[str, RhoInfo],
    plain_sig: Signature,
) -> Tuple[Structure, Dict[str, int]]:
    """Replace piece atoms by their defining conjunctions, then take the
    canonical database over the plain signed signature.

    Each piece atom contributes fresh parameter elements for its non-root
    part; plain atoms are kept as they are.
    """
    out_atoms: List[Atom] = []
    extra_vars: List[str] = []
    counter = 0
    for name, args in atoms:
        if name in rho_by_name:
            counter += 1
            pre = pre_formula(rho_by_name[name].piece, args, param_prefix=f"_e{counter}_")
            out_atoms.extend(pre.atoms)
            extra_vars.extend(pre.params)
        else:
            out_atoms.append((name, args))
    all_vars = list(variables) + extra_vars
    return canonical_database(out_atoms, variables=all_vars, sig=plain_sig)


def target_database(
    info: RhoInfo,
    head_args: Sequence[str],
    plain_sig: Signature,
) -> Tuple[Structure, Dict[str, int]]:
    pre = pre_formula(info.piece, head_args, param_prefix="_t_")
    variables: List[str] = []
    for a in head_args:
        if a not in variables:
            variables.append(a)
    variables.extend(pre.params)
    return canonical_database(pre.atoms, variables=variables, sig=plain_sig)


def pattern_canonical_key(
    atoms: Sequence[Atom],
    variables: Sequence[str],
    sig: Signature,
    head: Optional[Tuple[str, Tuple[str, ...]]] = None,
) -> Tuple:
    cd, var_map = canonical_database(atoms, variables=variables, sig=sig)
    if head is None:
        return ("pattern", cd.canonical_key())
    name, args = head
    root = tuple(var_map[a] for a in args)
    return ("clause", name, piece_canonical_key(cd, root))


def atom_universe(sig: Signature, variables: Sequence[str]) -> List[Atom]:
    out = []
    for sym in sig:
        for args in product(variables, repeat=sym.arity):
            out.append((sym.name, args))
    return out


def generate_item2_clauses(
    rho_infos: Sequence[RhoInfo],
    plain: Signature,
    wd_cap: int,
    budget: Optional[Budget] = None,
    config: Optional[RunConfig] = None,
) -> List[Clause]:
    """Clauses inferring a piece atom from a conjunction that forces it.

    For every piece relation target and every candidate positive body over
    the signed and piece symbols on at most wd_cap variables, the clause
    body => target(head) is emitted exactly when the target's defining
    conjunction maps homomorphically into the body's expansion while fixing
    the head variables. With config.subsume (the default), clauses implied
    by an emitted clause with a smaller body are dropped.
    """
    cfg = config or default_config()
    rho_by_name = {info.name: info for info in rho_infos}
    rho_sig = Signature([RelSymbol(i.name, i.arity) for i in rho_infos])
    body_sig = plain.union(rho_sig)
    found: List[Tuple[List[Atom], List[str], Atom]] = []
    seen = set()
    for info in rho_infos:
        for m in range(1, wd_cap + 1):
            variables = [f"v{i + 1}" for i in range(m)]
            universe = atom_universe(body_sig, variables)
            for head_args in product(variables, repeat=info.arity):
                head = (info.name, tuple(head_args))
                target_cd, target_map = target_database(info, head_args, plain)
                if budget is not None:
                    budget.tick(1 << len(universe))
                for mask in range(1 << len(universe)):
                    body = [universe[i] for i in range(len(universe)) if mask >> i & 1]
                    if head in body:
                        continue  # tautological
                    used = {v for _, args in body for v in args} | set(head_args)
                    if used != set(variables):
                        continue  # smaller variable count covers this shape
                    key = pattern_canonical_key(body, variables, body_sig, head=head)
                    if key in seen:
                        continue
                    seen.add(key)
                    expanded, var_map = expand_pattern(body, variables, rho_by_name, plain)
                    pinned = {
                        target_map[a]: var_map[a] for a in dict.fromkeys(head_args)
                    }
                    if hom_search(target_cd, expanded, partial=pinned) is None:
                        continue
                    found.append((body, variables, head))
    if cfg.subsume:
        found = minimal_implications(found)
    out = []
    for body, _, head in found:
        literals = [Literal.rel(n, a, positive=False) for n, a in body]
        literals.append(Literal.rel(head[0], head[1], positive=True))
        out.append(Clause(tuple(literals)))
    return out


def minimal_implications(
    found: Sequence[Tuple[List[Atom], List[str], Atom]]
) -> List[Tuple[List[Atom], List[str], Atom]]:
    """Greedy subsumption filter over definite clauses.

    A clause subsumes another when a variable substitution carries its head
    to the other's head and its body into the other's body. Processing by
    increasing body size makes the greedy pass exact.
    """
    order = sorted(range(len(found)), key=lambda i: (len(found[i][0]), len(found[i][1])))
    kept: List[Tuple[List[Atom], List[str], Atom]] = []
    for i in order:
        body, variables, head = found[i]
        body_set = set(body)
        if any(
            _subsumes(k_body, k_vars, k_head, body_set, head)
            for k_body, k_vars, k_head in kept
        ):
            continue
        kept.append((body, variables, head))
    return kept


def _subsumes(
    small_body: Sequence[Atom],
    small_vars: Sequence[str],
    small_head: Atom,
    big_body: Set[Atom],
    big_head: Atom,
) -> bool:
    if small_head[0] != big_head[0]:
        return False
    theta: Dict[str, str] = {}
    for a, b in zip(small_head[1], big_head[1]):
        if theta.setdefault(a, b) != b:
            return False
    free = [v for v in small_vars if v not in theta]
    targets = sorted({v for v in big_head[1]} | {v for _, args in big_body for v in args})
    if not targets:
        targets = list(big_head[1])
    for values in product(targets, repeat=len(free)):
        sub = dict(theta)
        sub.update(zip(free, values))
        if all((n, tuple(sub[v] for v in args)) in big_body for n, args in small_body):
            return True
    return False


def _pattern_valid(
    atoms: Sequence[Atom],
    variables: Sequence[str],
    members: Sequence[Structure],
    rho_by_name: Dict[str, RhoInfo],
    plain: Signature,
) -> bool:
    expanded, _ = expand_pattern(atoms, variables, rho_by_name, plain)
    return any(hom_search(member, expanded) is not None for member in members)


def _quotient_images(member: Structure, m: int) -> Iterator[List[Atom]]:
    """Atom sets of surjective homomorphic images of a member on [m] variables."""
    variables = [f"v{i + 1}" for i in range(m)]
    for values in product(range(m), repeat=member.domain_size):
        if set(values) != set(range(m)):
            continue
        atoms: List[Atom] = []
        for name, t in member.tuples():
            args = tuple(variables[values[e - 1]] for e in t)
            if (name, args) not in atoms:
                atoms.append((name, args))
        yield atoms


def generate_item3_clauses(
    members: Sequence[Structure],
    rho_infos: Sequence[RhoInfo],
    plain: Signature,
    wd_cap: int,
    config: Optional[RunConfig] = None,
    budget: Optional[Budget] = None,
) -> List[Clause]:
    """Fully negative clauses whose expanded pattern hosts a family member.

    The default generator builds candidates from homomorphic images of the
    family with a bounded number of piece atoms, then keeps a
    subsumption-minimal set. With config.subsume off, the raw up-to-
    isomorphism enumeration is used instead (budget permitting).
    """
    cfg = config or default_config()
    rho_by_name = {info.name: info for info in rho_infos}
    rho_sig = Signature([RelSymbol(i.name, i.arity) for i in rho_infos])
    body_sig = plain.union(rho_sig)

    candidates: List[Tuple[List[Atom], List[str]]] = []
    seen = set()

    def consider(atoms: List[Atom], variables: List[str]) -> None:
        used = {v for _, args in atoms for v in args}
        if used != set(variables) or not atoms:
            return
        key = pattern_canonical_key(atoms, variables, body_sig)
        if key in seen:
            return
        seen.add(key)
        if _pattern_valid(atoms, variables, members, rho_by_name, plain):
            candidates.append((atoms, variables))

    if not cfg.subsume:
        for m in range(1, wd_cap + 1):
            variables = [f"v{i + 1}" for i in range(m)]
            universe = atom_universe(body_sig, variables)
            if budget is not None:
                budget.tick(1 << len(universe))
            for mask in range(1, 1 << len(universe)):
                consider([universe[i] for i in range(len(universe)) if mask >> i & 1], variables)
        out = []
        for atoms, _ in candidates:
            out.append(Clause(tuple(Literal.rel(n, a, positive=False) for n, a in atoms)))
        return out

    for member in members:
        for m in range(1, min(wd_cap, member.domain_size) + 1):
            for atoms in _quotient_images(member, m):
                if budget is not None:
                    budget.tick()
                consider(atoms, [f"v{i + 1}" for i in range(m)])
    for member in members:
        atom_cap = min(cfg.piece_atom_cap, member.total_tuples())
        for m in range(1, wd_cap + 1):
            variables = [f"v{i + 1}" for i in range(m)]
            rho_universe = atom_universe(rho_sig, variables) if len(rho_sig) else []
            if budget is not None:
                budget.tick(sum(comb(len(rho_universe), k) for k in range(1, atom_cap + 1)))
            for k in range(1, atom_cap + 1):
                for placement in combinations(rho_universe, k):
                    glue, glue_map = expand_pattern(
                        list(placement), variables, rho_by_name, plain
                    )
                    var_elems = {glue_map[v] for v in variables}
                    glue_atoms = set(glue.tuples())
                    for h in _member_homs(member, glue, budget):
                        direct: List[Atom] = []
                        ok = True
                        for name, t in member.tuples():
                            img = tuple(h[e] for e in t)
                            if all(e in var_elems for e in img):
                                if (name, img) in glue_atoms:
                                    continue
                                args = tuple(variables[e - 1] for e in img)
                                if (name, args) not in direct:
                                    direct.append((name, args))
                            elif (name, img) in glue_atoms:
                                continue
                            else:
                                ok = False
                                break
                        if ok:
                            consider(list(placement) + direct, variables)

    out = []
    for i in minimal_negative_patterns(candidates, body_sig, budget):
        atoms, _ = candidates[i]
        out.append(Clause(tuple(Literal.rel(n, a, positive=False) for n, a in atoms)))
    return out


def minimal_negative_patterns(
    candidates: Sequence[Tuple[List[Atom], List[str]]],
    body_sig: Signature,
    budget: Optional[Budget] = None,
) -> List[int]:
    """Indices of the subsumption-minimal patterns among the candidates.

    A fully negative clause implies another exactly when the first pattern
    maps homomorphically into the second. Keeps the canonical representative
    of each strongest implication class, in canonical order.
    """
    cds = []
    for atoms, variables in candidates:
        cd, _ = canonical_database(atoms, variables=variables, sig=body_sig)
        cds.append(cd)
    ordered = sorted(
        range(len(candidates)),
        key=lambda i: (
            len(candidates[i][1]),
            len(candidates[i][0]),
            pattern_canonical_key(candidates[i][0], candidates[i][1], body_sig),
        ),
    )
    position = {i: p for p, i in enumerate(ordered)}
    kept: List[int] = []
    for i in ordered:
        drop = False
        for j in range(len(candidates)):
            if i == j:
                continue
            if budget is not None:
                budget.tick()
            if hom_search(cds[j], cds[i]) is None:
                continue
            mutual = hom_search(cds[i], cds[j]) is not None
            if not mutual or position[j] < position[i]:
                drop = True
                break
        if not drop:
            kept.append(i)
    return kept


def _member_homs(member: Structure, glue: Structure, budget: Optional[Budget]) -> Iterator[Dict[int, int]]:
    for h in iter_homs(member, glue):
        if budget is not None:
            budget.tick()
        yield h


# ---------------------------------------------------------------------------
# The transform


@dataclass(frozen=True)
class DeltaOutput:
    source: SnpSentence
    sentence: SnpSentence
    primed: PrimedSignature
    rho_infos: Tuple[RhoInfo, ...]
    order_symbol: str
    counts: Dict[str, int]
    bounds: Dict[str, bool]

    def as_dict(self) -> Dict:
        from .logic import print_sentence
        from .structures import print_structure

        rho_table = {}
        for info in self.rho_infos:
            rho_table[info.name] = {
                "arity": info.arity,
                "root": list(info.piece.root),
                "structure": print_structure(info.piece.structure),
                "member": info.member_index,
            }
        return {
            "sentence": print_sentence(self.sentence),
            "order_symbol": self.order_symbol,
            "rho": rho_table,
            "counts": dict(self.counts),
            "bounds": dict(self.bounds),
        }


def delta_bounds(source_stats: SentenceStats, output_stats: SentenceStats, rho_count: int) -> Dict[str, bool]:
    return {
        "wd": output_stats.wd <= max(source_stats.wd, 3),
        "ar": output_stats.ar <= max(source_stats.ar, source_stats.wd),
        "ht": output_stats.ht <= 2 * source_stats.ht + rho_count + 2,
        "rho": rho_count <= source_stats.lh * 3 ** source_stats.wd,
    }


def delta_transform(sentence: SnpSentence, config: Optional[RunConfig] = None) -> DeltaOutput:
    """Full transform: signed copies, pieces, order, inference items.

    Preserves the finite input models of the sentence while re-expressing the
    witnesses over the bookkeeping signature. Raises BudgetExceeded when the
    clause item spaces outgrow the configured budget.
    """
    cfg = config or default_config()
    if not classify(sentence).gmsnp:
        raise InputError("transform requires a guarded monotone sentence")
    base = eliminate_equalities(sentence)
    base_stats = stats(base)
    phi_prime, primed = build_phi_prime(base)
    members = forbidden_family(phi_prime)
    taken = set(base.sig.names) | set(primed.full_sig.names)
    rho_infos = rho_signature(members, taken)
    rho_sig = Signature([RelSymbol(i.name, i.arity) for i in rho_infos])
    lt = _fresh("lt", taken)
    wd_cap = base_stats.wd if cfg.max_clause_vars is None else cfg.max_clause_vars

    budget = Budget(cfg.budget, "delta_transform")
    pattern_clauses = list(phi_prime.clauses)
    order_clauses = order_axioms(lt)
    item2 = generate_item2_clauses(rho_infos, primed.full_sig, wd_cap, budget, cfg)
    item3 = generate_item3_clauses(members, rho_infos, primed.full_sig, wd_cap, cfg, budget)
    correctness = correctness_clauses(base, primed)

    exist_sig = (
        base.exist_sig.union(primed.full_sig)
        .union(rho_sig)
        .union(Signature([RelSymbol(lt, 2)]))
    )
    clauses = pattern_clauses + order_clauses + item2 + item3 + correctness
    if len(clauses) > cfg.max_clauses:
        raise BudgetExceeded("delta_transform", cfg.max_clauses)
    out_sentence = SnpSentence(base.input_sig, exist_sig, clauses)
    counts = {
        "patterns": len(pattern_clauses),
        "order": len(order_clauses),
        "item2": len(item2),
        "item3": len(item3),
        "correctness": len(correctness),
        "rho": len(rho_infos),
        "budget_used": budget.used,
    }
    bounds = delta_bounds(base_stats, stats(out_sentence), len(rho_infos))
    return DeltaOutput(
        sentence,
        out_sentence,
        primed,
        tuple(rho_infos),
        lt,
        counts,
        bounds,
    )
