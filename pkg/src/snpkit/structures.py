"""Finite relational structures: representation, search, pieces.

Structures are standard: the domain is [n] = {1, ..., n}. Relations are sets
of integer tuples. All enumeration orders in this module are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

from ._text import TokenStream, tokenize
from .errors import BudgetExceeded, InputError, SnpParseError

Atom = Tuple[str, Tuple[str, ...]]


@dataclass(frozen=True)
class RelSymbol:
    name: str
    arity: int

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise InputError(f"relation {self.name} must have arity >= 1")


class Signature:
    """Ordered list of relation symbols with unique names."""

    def __init__(self, symbols: Sequence[RelSymbol]):
        names = [s.name for s in symbols]
        if len(set(names)) != len(names):
            raise InputError("duplicate relation names in signature")
        self.symbols: Tuple[RelSymbol, ...] = tuple(symbols)
        self._by_name: Dict[str, RelSymbol] = {s.name: s for s in symbols}

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.symbols)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[RelSymbol]:
        return iter(self.symbols)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Signature) and self.symbols == other.symbols

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __repr__(self) -> str:
        return "Signature([%s])" % ", ".join(f"{s.name}/{s.arity}" for s in self.symbols)

    def arity(self, name: str) -> int:
        try:
            return self._by_name[name].arity
        except KeyError:
            raise InputError(f"unknown relation {name}") from None

    def union(self, other: "Signature") -> "Signature":
        extra = []
        for sym in other.symbols:
            if sym.name in self._by_name:
                if self._by_name[sym.name] != sym:
                    raise InputError(f"arity clash for {sym.name}")
            else:
                extra.append(sym)
        return Signature(self.symbols + tuple(extra))

    def restrict(self, names: Sequence[str]) -> "Signature":
        keep = set(names)
        return Signature([s for s in self.symbols if s.name in keep])


class Structure:
    """Finite structure over a signature, domain [n]."""

    __slots__ = ("sig", "domain_size", "relations", "_key", "_canon")

    def __init__(self, sig: Signature, domain_size: int, relations: Dict[str, Sequence[Tuple[int, ...]]]):
        if domain_size < 0:
            raise InputError("domain size must be >= 0")
        rels: Dict[str, FrozenSet[Tuple[int, ...]]] = {}
        for sym in sig:
            content = frozenset(tuple(t) for t in relations.get(sym.name, ()))
            for t in content:
                if len(t) != sym.arity:
                    raise InputError(f"tuple {t} has wrong arity for {sym.name}/{sym.arity}")
                if any(not (1 <= e <= domain_size) for e in t):
                    raise InputError(f"tuple {t} outside domain [1..{domain_size}]")
            rels[sym.name] = content
        for name in relations:
            if name not in sig:
                raise InputError(f"relation {name} not in signature")
        self.sig = sig
        self.domain_size = domain_size
        self.relations = rels
        self._key = (sig.names, tuple(sig.arity(n) for n in sig.names), domain_size,
                     tuple(tuple(sorted(rels[n])) for n in sig.names))
        self._canon: Optional[Tuple] = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Structure) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        parts = ", ".join(f"{n}={sorted(self.relations[n])}" for n in self.sig.names if self.relations[n])
        return f"Structure(n={self.domain_size}, {parts})"

    @property
    def elements(self) -> range:
        return range(1, self.domain_size + 1)

    def relation(self, name: str) -> FrozenSet[Tuple[int, ...]]:
        return self.relations[name]

    def tuples(self) -> Iterator[Tuple[str, Tuple[int, ...]]]:
        for name in self.sig.names:
            for t in sorted(self.relations[name]):
                yield name, t

    def total_tuples(self) -> int:
        return sum(len(self.relations[n]) for n in self.sig.names)

    def with_relations(self, updates: Dict[str, Sequence[Tuple[int, ...]]]) -> "Structure":
        rels = {n: set(self.relations[n]) for n in self.sig.names}
        for name, content in updates.items():
            rels[name] = set(tuple(t) for t in content)
        return Structure(self.sig, self.domain_size, rels)

    def reduct(self, names: Sequence[str]) -> "Structure":
        sub = self.sig.restrict(names)
        return Structure(sub, self.domain_size, {n: self.relations[n] for n in sub.names})

    def expand(self, sig: Signature, extra: Dict[str, Sequence[Tuple[int, ...]]]) -> "Structure":
        rels: Dict[str, Sequence[Tuple[int, ...]]] = {n: self.relations[n] for n in self.sig.names}
        rels.update(extra)
        return Structure(sig, self.domain_size, rels)

    def induced(self, subset: Sequence[int]) -> "Structure":
        return self.induced_with_map(subset)[0]

    def induced_with_map(self, subset: Sequence[int]) -> Tuple["Structure", Dict[int, int]]:
        """Induced substructure on `subset`, renumbered by increasing enumeration.

        Returns the structure on [k] and the old-to-new element map.
        """
        elems = sorted(set(subset))
        ren = {e: i + 1 for i, e in enumerate(elems)}
        keep = set(elems)
        rels = {}
        for name in self.sig.names:
            rels[name] = [tuple(ren[e] for e in t) for t in self.relations[name] if set(t) <= keep]
        return Structure(self.sig, len(elems), rels), ren

    def rename(self, mapping: Dict[int, int], domain_size: Optional[int] = None) -> "Structure":
        """Apply an injective relabelling of the domain."""
        if len(set(mapping.values())) != len(mapping):
            raise InputError("relabelling must be injective")
        size = domain_size if domain_size is not None else self.domain_size
        rels = {}
        for name in self.sig.names:
            rels[name] = [tuple(mapping[e] for e in t) for t in self.relations[name]]
        return Structure(self.sig, size, rels)

    def encode(self) -> int:
        """Bit encoding relative to tuple_slots(sig, domain_size)."""
        bits = 0
        for i, (name, t) in enumerate(tuple_slots(self.sig, self.domain_size)):
            if t in self.relations[name]:
                bits |= 1 << i
        return bits

    def canonical_key(self) -> Tuple:
        """Isomorphism-invariant key: minimal encoding over domain permutations."""
        if self._canon is None:
            slots = tuple_slots(self.sig, self.domain_size)
            best = None
            for perm in permutations(self.elements):
                ren = {e: perm[e - 1] for e in self.elements}
                renamed = {
                    name: {tuple(ren[e] for e in t) for t in self.relations[name]}
                    for name in self.sig.names
                }
                bits = 0
                for i, (name, t) in enumerate(slots):
                    if t in renamed[name]:
                        bits |= 1 << i
                if best is None or bits < best:
                    best = bits
            self._canon = (self.sig.names, self.domain_size, best)
        return self._canon

    def components(self) -> List[List[int]]:
        """Connected components; elements in no tuple are singletons."""
        parent = {e: e for e in self.elements}

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def join(a: int, b: int) -> None:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for _, t in self.tuples():
            for e in t[1:]:
                join(t[0], e)
        groups: Dict[int, List[int]] = {}
        for e in self.elements:
            groups.setdefault(find(e), []).append(e)
        return sorted(groups.values())

    def is_connected(self) -> bool:
        return len(self.components()) <= 1


def tuple_slots(sig: Signature, n: int) -> List[Tuple[str, Tuple[int, ...]]]:
    """All (symbol, tuple) slots over domain [n], in deterministic order."""
    slots = []
    for sym in sig:
        for t in product(range(1, n + 1), repeat=sym.arity):
            slots.append((sym.name, t))
    return slots


def decode_structure(sig: Signature, n: int, bits: int) -> Structure:
    rels: Dict[str, List[Tuple[int, ...]]] = {s.name: [] for s in sig}
    for i, (name, t) in enumerate(tuple_slots(sig, n)):
        if bits >> i & 1:
            rels[name].append(t)
    return Structure(sig, n, rels)


def enumerate_structures(
    sig: Signature,
    max_size: int,
    predicate=None,
    budget: Optional[int] = None,
) -> Iterator[Structure]:
    """All standard structures of size 1..max_size, by size then bit pattern.

    `budget` caps the number of candidates decoded; exceeding it raises
    BudgetExceeded rather than silently truncating.
    """
    seen = 0
    for n in range(1, max_size + 1):
        width = len(tuple_slots(sig, n))
        total = 1 << width
        if budget is not None and seen + total > budget:
            raise BudgetExceeded("enumerate_structures", budget)
        for bits in range(total):
            seen += 1
            s = decode_structure(sig, n, bits)
            if predicate is None or predicate(s):
                yield s


# ---------------------------------------------------------------------------
# Homomorphism and embedding search


def _atom_list(src: Structure) -> List[Tuple[str, Tuple[int, ...]]]:
    return list(src.tuples())


def iter_homs(
    src: Structure,
    dst: Structure,
    partial: Optional[Dict[int, int]] = None,
    injective: bool = False,
    reflect: bool = False,
    budget: Optional[int] = None,
) -> Iterator[Dict[int, int]]:
    """Homomorphisms src -> dst extending `partial`, lazily.

    injective: image elements pairwise distinct.
    reflect: tuple membership is reflected on assigned elements, so with
    injective=True this yields embeddings (isomorphisms onto induced images).
    """
    if src.sig.names != dst.sig.names:
        shared = [n for n in src.sig.names if n in dst.sig]
        if len(shared) != len(src.sig.names):
            raise InputError("homomorphism requires source symbols present in target")
    atoms = _atom_list(src)
    degree = {e: 0 for e in src.elements}
    for _, t in atoms:
        for e in t:
            degree[e] += 1
    fixed = dict(partial or {})
    for e, v in fixed.items():
        if e not in degree or not (1 <= v <= dst.domain_size):
            raise InputError("partial map out of range")
    order = sorted((e for e in src.elements if e not in fixed), key=lambda e: (-degree[e], e))
    order = list(fixed.keys()) + order
    atoms_by_last: Dict[int, List[Tuple[str, Tuple[int, ...]]]] = {e: [] for e in src.elements}
    pos = {e: i for i, e in enumerate(order)}
    for name, t in atoms:
        last = max(t, key=lambda e: pos[e])
        atoms_by_last[last].append((name, t))

    assignment: Dict[int, int] = {}
    used: Dict[int, int] = {}
    nodes = 0

    def consistent(e: int) -> bool:
        for name, t in atoms_by_last[e]:
            img = tuple(assignment[x] for x in t)
            if img not in dst.relations[name]:
                return False
        if reflect:
            assigned = list(assignment.keys())
            for sym in src.sig:
                k = sym.arity
                for t in product(assigned, repeat=k):
                    if e not in t:
                        continue
                    img = tuple(assignment[x] for x in t)
                    if (img in dst.relations[sym.name]) != (t in src.relations[sym.name]):
                        return False
        return True

    def extend(i: int) -> Iterator[Dict[int, int]]:
        nonlocal nodes
        if i == len(order):
            yield dict(assignment)
            return
        e = order[i]
        candidates = [fixed[e]] if e in fixed else list(dst.elements)
        for v in candidates:
            nodes += 1
            if budget is not None and nodes > budget:
                raise BudgetExceeded("hom_search", budget)
            if injective and v in used:
                continue
            assignment[e] = v
            used[v] = used.get(v, 0) + 1
            if consistent(e):
                yield from extend(i + 1)
            used[v] -= 1
            if not used[v]:
                del used[v]
            del assignment[e]

    return extend(0)


def hom_search(
    src: Structure,
    dst: Structure,
    partial: Optional[Dict[int, int]] = None,
    budget: Optional[int] = None,
) -> Optional[Dict[int, int]]:
    """First homomorphism src -> dst extending `partial`, or None."""
    return next(iter_homs(src, dst, partial=partial, budget=budget), None)


def embedding_search(
    src: Structure,
    dst: Structure,
    partial: Optional[Dict[int, int]] = None,
    budget: Optional[int] = None,
) -> Optional[Dict[int, int]]:
    """First embedding (injective, tuple-reflecting) src -> dst, or None."""
    return next(iter_homs(src, dst, partial=partial, injective=True, reflect=True, budget=budget), None)


def enumerate_embeddings(
    src: Structure,
    dst: Structure,
    partial: Optional[Dict[int, int]] = None,
    budget: Optional[int] = None,
) -> Iterator[Dict[int, int]]:
    return iter_homs(src, dst, partial=partial, injective=True, reflect=True, budget=budget)


# ---------------------------------------------------------------------------
# Conjunctions of atoms <-> structures


def canonical_database(
    atoms: Sequence[Atom],
    variables: Optional[Sequence[str]] = None,
    sig: Optional[Signature] = None,
) -> Tuple[Structure, Dict[str, int]]:
    """Structure whose elements are the variables of a positive conjunction.

    `variables` fixes the element order (and may include variables not in any
    atom); by default variables are numbered in order of first occurrence.
    """
    if variables is None:
        seen: List[str] = []
        for _, args in atoms:
            for v in args:
                if v not in seen:
                    seen.append(v)
        variables = seen
    else:
        variables = list(variables)
        mentioned = {v for _, args in atoms for v in args}
        missing = mentioned - set(variables)
        if missing:
            raise InputError(f"atom variables {sorted(missing)} not listed")
    if len(set(variables)) != len(variables):
        raise InputError("duplicate variable in canonical database")
    var_map = {v: i + 1 for i, v in enumerate(variables)}
    if sig is None:
        arities: Dict[str, int] = {}
        for name, args in atoms:
            if arities.setdefault(name, len(args)) != len(args):
                raise InputError(f"inconsistent arity for {name}")
        sig = Signature([RelSymbol(n, a) for n, a in arities.items()])
    rels: Dict[str, List[Tuple[int, ...]]] = {s.name: [] for s in sig}
    for name, args in atoms:
        if name not in sig:
            raise InputError(f"relation {name} not in signature")
        rels[name].append(tuple(var_map[v] for v in args))
    return Structure(sig, len(variables), rels), var_map


def canonical_query(structure: Structure, var_prefix: str = "x") -> Tuple[List[Atom], List[str]]:
    """Positive conjunction describing the structure; one variable per element."""
    names = [f"{var_prefix}{e}" for e in structure.elements]
    atoms = [(name, tuple(names[e - 1] for e in t)) for name, t in structure.tuples()]
    return atoms, names


# ---------------------------------------------------------------------------
# Pieces


@dataclass(frozen=True)
class Piece:
    """Proper induced substructure with a distinguished duplicate-free root.

    `structure` is standardized on [k] (increasing enumeration of the host
    support); `root` lists root elements in [k]; `support` and `host_root`
    record the original host labels.
    """

    structure: Structure
    root: Tuple[int, ...]
    support: Tuple[int, ...]
    host_root: Tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.root)

    def canonical_key(self) -> Tuple:
        return piece_canonical_key(self.structure, self.root)


def piece_canonical_key(structure: Structure, root: Tuple[int, ...]) -> Tuple:
    """Canonical key of a rooted structure under root-order-preserving isomorphism."""
    n = structure.domain_size
    slots = tuple_slots(structure.sig, n)
    best = None
    for perm in permutations(range(1, n + 1)):
        ren = {e: perm[e - 1] for e in range(1, n + 1)}
        renamed = {
            name: {tuple(ren[e] for e in t) for t in structure.relations[name]}
            for name in structure.sig.names
        }
        bits = 0
        for i, (name, t) in enumerate(slots):
            if t in renamed[name]:
                bits |= 1 << i
        key = (tuple(ren[e] for e in root), bits)
        if best is None or key < best:
            best = key
    return (structure.sig.names, n, best)


def separation_ok(host: Structure, support: FrozenSet[int], root: FrozenSet[int]) -> bool:
    """Every host tuple lies within the piece or within root + complement."""
    outside = (set(host.elements) - set(support)) | set(root)
    for _, t in host.tuples():
        elems = set(t)
        if elems <= support or elems <= outside:
            continue
        return False
    return True


def enumerate_pieces(host: Structure) -> List[Piece]:
    """All pieces of a structure, deduplicated up to rooted isomorphism.

    A piece is a proper induced substructure P together with an ordered
    duplicate-free root tuple over P, subject to the separation condition.
    """
    n = host.domain_size
    out: List[Piece] = []
    seen = set()
    elements = list(host.elements)
    for size in range(1, n):
        for support in combinations(elements, size):
            sset = frozenset(support)
            for rsize in range(1, size + 1):
                for root_set in combinations(support, rsize):
                    if not separation_ok(host, sset, frozenset(root_set)):
                        continue
                    sub, ren = host.induced_with_map(support)
                    for root_order in permutations(root_set):
                        root = tuple(ren[e] for e in root_order)
                        key = piece_canonical_key(sub, root)
                        if key in seen:
                            continue
                        seen.add(key)
                        out.append(Piece(sub, root, tuple(support), tuple(root_order)))
    return out


@dataclass(frozen=True)
class PreFormula:
    """Positive conjunction with distinguished argument and parameter variables.

    The closed form existentially quantifies the parameters; the open form
    leaves them free.
    """

    atoms: Tuple[Atom, ...]
    args: Tuple[str, ...]
    params: Tuple[str, ...]


def pre_formula(piece: Piece, args: Sequence[str], param_prefix: str = "q") -> PreFormula:
    """Describe a piece as a conjunction with the root substituted by `args`.

    Repeated argument names merge root positions. Parameters (one per
    non-root element) are numbered q1, q2, ... unless another prefix is given.
    """
    if len(args) != len(piece.root):
        raise InputError("argument count must match root length")
    names: Dict[int, str] = {}
    for elt, arg in zip(piece.root, args):
        names[elt] = arg
    params = []
    for elt in piece.structure.elements:
        if elt not in names:
            name = f"{param_prefix}{len(params) + 1}"
            names[elt] = name
            params.append(name)
    atoms = tuple((sym, tuple(names[e] for e in t)) for sym, t in piece.structure.tuples())
    return PreFormula(atoms, tuple(args), tuple(params))


def exists_pre_formula(piece: Piece, args: Sequence[str], param_prefix: str = "q") -> PreFormula:
    """Closed variant of pre_formula; parameters are to be read as bound."""
    return pre_formula(piece, args, param_prefix)


# ---------------------------------------------------------------------------
# Text format


def print_structure(structure: Structure) -> str:
    lines = ["structure {", f"  domain {structure.domain_size}"]
    for name in structure.sig.names:
        content = sorted(structure.relations[name])
        if not content:
            continue
        body = " ".join("(" + ",".join(str(e) for e in t) + ")" for t in content)
        lines.append(f"  {name} {{ {body} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_structure(text: str, sig: Optional[Signature] = None) -> Structure:
    """Parse the structure text format.

    With a signature, relations not mentioned are empty and symbols are
    validated; without one, the signature is inferred from the tuples present.
    """
    ts = TokenStream(tokenize(text))
    ts.expect("ident", "structure")
    ts.expect("punct", "{")
    ts.expect("ident", "domain")
    size_tok = ts.expect("int")
    size = int(size_tok.value)
    rels: Dict[str, List[Tuple[int, ...]]] = {}
    arities: Dict[str, int] = {}
    while not ts.accept("punct", "}"):
        name_tok = ts.expect("ident")
        name = name_tok.value
        ts.expect("punct", "{")
        content: List[Tuple[int, ...]] = []
        while not ts.accept("punct", "}"):
            ts.expect("punct", "(")
            entries = [int(ts.expect("int").value)]
            while ts.accept("punct", ","):
                entries.append(int(ts.expect("int").value))
            ts.expect("punct", ")")
            content.append(tuple(entries))
        if content:
            arity = len(content[0])
            if any(len(t) != arity for t in content):
                raise SnpParseError(f"mixed arities in relation {name}", name_tok.line, name_tok.column)
            arities[name] = arity
        rels.setdefault(name, []).extend(content)
    if not ts.at_end():
        tok = ts.peek()
        raise SnpParseError(f"trailing input {tok.value!r}", tok.line, tok.column)
    if sig is None:
        symbols = []
        for name, content in rels.items():
            if name not in arities:
                raise SnpParseError(f"cannot infer arity of empty relation {name}")
            symbols.append(RelSymbol(name, arities[name]))
        sig = Signature(symbols)
    return Structure(sig, size, rels)
