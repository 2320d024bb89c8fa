"""Shared fixtures: sentences and structures used across the test suite."""

from __future__ import annotations

from snpkit.logic import SnpSentence, parse_sentence
from snpkit.structures import RelSymbol, Signature, Structure

SIG_E = Signature([RelSymbol("E", 2)])
SIG_U = Signature([RelSymbol("U", 1)])


def edge_colouring_sentence() -> SnpSentence:
    """Two-colour the edges of a graph avoiding monochromatic triangles."""
    return parse_sentence(
        """
        sentence {
          input { E/2 }
          exists { B/2 R/2 }
          clause { !E(x,y) | B(x,y) | R(x,y) }
          clause { !B(x,y) | !R(x,y) }
          clause { !B(x,y) | !B(y,z) | !B(x,z) }
          clause { !R(x,y) | !R(y,z) | !R(x,z) }
        }
        """
    )


def vertex_colouring_sentence() -> SnpSentence:
    """Proper two-colouring of vertices; the colour totality clause is unguarded."""
    return parse_sentence(
        """
        sentence {
          input { E/2 }
          exists { B/1 R/1 }
          clause { B(x) | R(x) }
          clause { !B(x) | !R(x) }
          clause { !E(x,y) | !B(x) | !B(y) }
          clause { !E(x,y) | !R(x) | !R(y) }
        }
        """
    )


def cross_sentence() -> SnpSentence:
    """Single clause whose negated atoms split into two variable components."""
    return parse_sentence(
        """
        sentence {
          input { E/2 }
          exists { B/2 R/2 }
          clause { !E(x,y) | !E(u,v) | !R(x,y) | B(u,v) }
        }
        """
    )


def complete_graph(n: int) -> Structure:
    edges = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    return Structure(SIG_E, n, {"E": edges})


def symmetric_cycle(n: int) -> Structure:
    edges = []
    for i in range(1, n + 1):
        j = i % n + 1
        edges.extend([(i, j), (j, i)])
    return Structure(SIG_E, n, {"E": edges})


def k5_witness() -> Structure:
    """Edge two-colouring of the 5-clique: outer cycle red, pentagram blue."""
    k5 = complete_graph(5)
    red = []
    for i in range(1, 6):
        j = i % 5 + 1
        red.extend([(i, j), (j, i)])
    blue = [(i, j) for (i, j) in k5.relations["E"] if (i, j) not in set(red)]
    sig = Signature([RelSymbol("E", 2), RelSymbol("B", 2), RelSymbol("R", 2)])
    return k5.expand(sig, {"B": blue, "R": red})


def pentagon_left_sentence() -> SnpSentence:
    """Three-colour symmetric edges; five forbidden coloured five-cycles."""
    partition = """
          clause { !E(x,y) | R(x,y) | G(x,y) | B(x,y) }
          clause { !E(x,y) | !R(x,y) | !G(x,y) }
          clause { !E(x,y) | !G(x,y) | !B(x,y) }
          clause { !E(x,y) | !B(x,y) | !R(x,y) }
    """
    pentagons = []
    cycles = [
        ("G", "G", "G", "G", "G"),
        ("R", "R", "R", "R", "R"),
        ("B", "B", "B", "B", "B"),
        ("R", "R", "B", "R", "R"),
        ("R", "B", "B", "R", "R"),
    ]
    vs = ["a", "b", "c", "d", "e"]
    for colours in cycles:
        lits = []
        for i, col in enumerate(colours):
            u, v = vs[i], vs[(i + 1) % 5]
            lits.extend(
                [f"!E({u},{v})", f"!E({v},{u})", f"!{col}({u},{v})", f"!{col}({v},{u})"]
            )
        pentagons.append("      clause { " + " | ".join(lits) + " }")
    text = (
        "sentence {\n  input { E/2 }\n  exists { R/2 G/2 B/2 }\n"
        + partition
        + "\n".join(pentagons)
        + "\n}"
    )
    return parse_sentence(text)


def pentagon_right_sentence() -> SnpSentence:
    """Two-colour symmetric edges; monochromatic triangles forbidden."""
    triangles = []
    vs = ["a", "b", "c"]
    for col in ("G", "P"):
        lits = []
        for i in range(3):
            u, v = vs[i], vs[(i + 1) % 3]
            lits.extend(
                [f"!E({u},{v})", f"!E({v},{u})", f"!{col}({u},{v})", f"!{col}({v},{u})"]
            )
        triangles.append("      clause { " + " | ".join(lits) + " }")
    text = (
        "sentence {\n  input { E/2 }\n  exists { P/2 G/2 }\n"
        + "      clause { !E(x,y) | P(x,y) | G(x,y) }\n"
        + "      clause { !E(x,y) | !P(x,y) | !G(x,y) }\n"
        + "\n".join(triangles)
        + "\n}"
    )
    return parse_sentence(text)


def pentagon_recolouring_image(colour: Structure, sig2: Signature) -> Structure:
    """Image of one three-colour structure under the two-colour collapse.

    R and B tuples become P and G tuples stay G, except on a symmetric edge
    whose two directions carry R and B: there the R direction becomes P and
    the B direction becomes G. Mixed-direction edges are the only ones that
    survive inside triangles, so the exception keeps their images two-toned.
    """
    E = colour.relations["E"]
    R = colour.relations["R"]
    B = colour.relations["B"]
    G = colour.relations["G"]
    p_out, g_out = set(), set()
    for x in colour.elements:
        for y in colour.elements:
            t, rev = (x, y), (y, x)
            if t in E and rev in E and x != y:
                ct = "R" if t in R else ("B" if t in B else "G")
                cr = "R" if rev in R else ("B" if rev in B else "G")
                if {ct, cr} == {"R", "B"}:
                    (p_out if ct == "R" else g_out).add(t)
                    continue
            if t in R or t in B:
                p_out.add(t)
            if t in G:
                g_out.add(t)
    return Structure(
        sig2,
        colour.domain_size,
        {"E": sorted(E), "P": sorted(p_out), "G": sorted(g_out)},
    )


def micro_corpus() -> list[SnpSentence]:
    """Small single-symbol sentences with wd <= 2, suitable for full sweeps."""
    texts = [
        # forbid any edge
        "sentence { input { E/2 } exists { } clause { !E(x,y) } }",
        # forbid a loop
        "sentence { input { E/2 } exists { } clause { !E(x,x) } }",
        # forbid a symmetric edge pair
        "sentence { input { E/2 } exists { } clause { !E(x,y) | !E(y,x) } }",
        # forbid loops and symmetric pairs
        "sentence { input { E/2 } exists { } clause { !E(x,x) } clause { !E(x,y) | !E(y,x) } }",
        # forbid a unary atom
        "sentence { input { U/1 } exists { } clause { !U(x) } }",
        # forbid an edge out of a looped vertex
        "sentence { input { E/2 } exists { } clause { !E(x,y) | !E(x,x) } }",
    ]
    return [parse_sentence(t) for t in texts]


def tautology_sentence() -> SnpSentence:
    """No clauses: holds on every structure."""
    return parse_sentence("sentence { input { E/2 } exists { } }")


def symmetric_pair_sentence() -> SnpSentence:
    return micro_corpus()[2]


def canonical_classes(sig: Signature, max_size: int, budget: int = 10**9) -> list[Structure]:
    """One representative per isomorphism class of structures up to max_size."""
    from snpkit.structures import enumerate_structures

    out = []
    seen = set()
    for s in enumerate_structures(sig, max_size, budget=budget):
        key = s.canonical_key()
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    return out


def omega_micro_sentence() -> SnpSentence:
    """Edges must be covered by a witness relation that is antisymmetric."""
    return parse_sentence(
        """
        sentence {
          input { E/2 }
          exists { B/2 }
          clause { !E(x,y) | B(x,y) }
          clause { !B(x,y) | !B(y,x) }
        }
        """
    )
