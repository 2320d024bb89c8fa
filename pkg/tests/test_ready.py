"""Readiness transforms and the ordered colour-mapping search.

The rewritings are validated against an independent route: exhaustive model
checking of source and output over every input structure up to size 3.
"""

from __future__ import annotations

import pytest

from snpkit.config import RunConfig
from snpkit.containment import _SizedChecker, falsify_containment
from snpkit.errors import BudgetExceeded, InputError
from snpkit.logic import classify, parse_sentence, print_sentence, stats
from snpkit.ready import (
    gmsnp_recolouring_search,
    is_correctly_labelled,
    omega_prime,
    omega_transform,
    ordered_colours,
    tau_guarded,
)
from snpkit.structures import RelSymbol, Signature, Structure, enumerate_structures

from .fixtures import micro_corpus, omega_micro_sentence

CFG = RunConfig()


def assert_same_models(phi, psi, max_size=3):
    """Both sentences accept exactly the same input structures up to max_size."""
    assert phi.input_sig == psi.input_sig
    checkers = {}
    total = 0
    for a in enumerate_structures(phi.input_sig, max_size, budget=10**9):
        size = a.domain_size
        if size not in checkers:
            checkers[size] = (_SizedChecker(phi, size), _SizedChecker(psi, size))
        left, right = checkers[size]
        assert (left.check(a, 10**7) is not None) == (right.check(a, 10**7) is not None), a
        total += 1
    return total


# ---------------------------------------------------------------------------
# Readiness rewriting


class TestOmega:
    def test_micro_counts(self):
        out = omega_transform(omega_micro_sentence())
        assert out.counts == {
            "patterns": 11,
            "schemas": 24,
            "definitions": 64,
            "bounds": 5,
            "family": 11,
            "piece_symbols": 4,
            "clauses": 104,
        }
        assert out.n == 2
        assert [s.name for s in out.sentence.exist_sig] == ["B", "Bc", "gp1", "gp2", "gp3", "gp4"]
        assert out.complement == {"B": "Bc"}
        assert stats(out.sentence).ar == stats(out.source).ar

    def test_micro_stays_guarded_monotone_connected(self):
        out = omega_transform(omega_micro_sentence())
        cls = classify(out.sentence)
        assert cls.gmsnp and cls.connected

    def test_micro_models_preserved(self):
        out = omega_transform(omega_micro_sentence())
        assert assert_same_models(out.source, out.sentence) == 530

    def test_corpus_models_preserved(self):
        corpus = micro_corpus()
        for phi in (corpus[0], corpus[3], corpus[5]):
            out = omega_transform(phi)
            assert_same_models(phi, out.sentence)

    def test_witnessless_single_variable_pattern_is_fixed(self):
        # one-element patterns have no pieces, so nothing is added
        corpus = micro_corpus()
        for phi in (corpus[1], corpus[4]):
            out = omega_transform(phi)
            assert out.sentence == phi
            assert out.piece_symbols == ()

    def test_family_is_correctly_labelled(self):
        # the pattern saturation ran to its fixpoint
        out = omega_transform(omega_micro_sentence())
        for member in out.family:
            assert is_correctly_labelled(member, out.complement)

    def test_labelling_checker_rejects_corruption(self):
        out = omega_transform(omega_micro_sentence())
        broken = out.family[1].with_relations({"Bc": []})
        assert not is_correctly_labelled(broken, out.complement)

    def test_piece_symbols_are_guarded_by_input_tuples(self):
        out = omega_transform(omega_micro_sentence())
        for info in out.piece_symbols:
            assert info.guard == "E"
            assert info.arity == 2
            root = info.piece.root
            assert tuple(root) in info.piece.structure.relations["E"]

    def test_deterministic(self):
        a = omega_transform(omega_micro_sentence())
        b = omega_transform(omega_micro_sentence())
        assert a.sentence == b.sentence
        assert print_sentence(a.sentence) == print_sentence(b.sentence)

    def test_rejects_unguarded_sentence(self):
        phi = parse_sentence(
            "sentence { input { E/2 } exists { U/1 } clause { U(x) } }"
        )
        with pytest.raises(InputError):
            omega_transform(phi)

    def test_rejects_disconnected_sentence(self):
        phi = parse_sentence(
            "sentence { input { E/2 } exists { } clause { !E(x,x) | !E(y,y) } }"
        )
        with pytest.raises(InputError):
            omega_transform(phi)

    def test_budget_exceeded(self):
        with pytest.raises(BudgetExceeded):
            omega_transform(omega_micro_sentence(), RunConfig(budget=10))


# ---------------------------------------------------------------------------
# Ordered colours and the order-expanded rewriting


class TestOrderedColours:
    def test_guard_predicate(self):
        sig = Signature([RelSymbol("E", 2)])
        covered = Structure(sig, 2, {"E": [(2, 1)]})
        uncovered = Structure(sig, 2, {"E": [(1, 1)]})
        assert tau_guarded(covered, sig)
        assert not tau_guarded(uncovered, sig)

    def test_micro_colours(self):
        colours = ordered_colours(omega_micro_sentence(), 2, CFG)
        # each coloured edge carries its witness tuple in the same direction
        assert sorted(repr(c) for c in colours) == [
            "Structure(n=2, E=[(1, 2)], B=[(1, 2)])",
            "Structure(n=2, E=[(2, 1)], B=[(2, 1)])",
        ]

    def test_sizes_beyond_input_arity_are_skipped(self):
        assert len(ordered_colours(omega_micro_sentence(), 6, CFG)) == 2

    def test_edge_free_sentence_has_no_colours(self):
        assert ordered_colours(micro_corpus()[0], 2, CFG) == []


class TestOmegaPrime:
    def test_micro_counts(self):
        out = omega_prime(omega_micro_sentence(), var_cap=3)
        assert out.counts == {
            "colours": 2,
            "patterns": 7,
            "cycles": 2,
            "increasing": 2,
            "clauses": 11,
        }
        assert out.order_symbol == "lt"
        assert [c.name for c in out.colours] == ["col1", "col2"]

    def test_micro_equivalent_up_to_size_three(self):
        out = omega_prime(omega_micro_sentence(), var_cap=3)
        assert assert_same_models(out.source, out.sentence) == 530

    def test_degenerate_without_colours(self):
        out = omega_prime(micro_corpus()[0], var_cap=3)
        assert out.colours == ()
        assert out.counts["patterns"] == 1
        assert "!E(v1,v2)" in print_sentence(out.sentence)
        assert_same_models(out.source, out.sentence)

    def test_order_clauses_present(self):
        out = omega_prime(omega_micro_sentence(), var_cap=3)
        text = print_sentence(out.sentence)
        assert "!lt(z1,z1)" in text
        assert "!lt(z1,z2) | !lt(z2,z1)" in text
        assert "!col1(x1,x2) | lt(x1,x2)" in text

    def test_output_is_guarded_and_monotone(self):
        out = omega_prime(omega_micro_sentence(), var_cap=3)
        assert classify(out.sentence).gmsnp

    def test_default_caps_exceed_budget(self):
        # the unrestricted clause space is astronomically large; the run
        # refuses honestly instead of truncating
        with pytest.raises(BudgetExceeded):
            omega_prime(omega_micro_sentence())

    def test_rejects_unguarded_sentence(self):
        phi = parse_sentence(
            "sentence { input { E/2 } exists { U/1 } clause { U(x) } }"
        )
        with pytest.raises(InputError):
            omega_prime(phi, var_cap=3)

    def test_deterministic(self):
        a = omega_prime(omega_micro_sentence(), var_cap=3)
        b = omega_prime(omega_micro_sentence(), var_cap=3)
        assert print_sentence(a.sentence) == print_sentence(b.sentence)


# ---------------------------------------------------------------------------
# Ordered colour-mapping search


class TestOrderedSearch:
    def test_identity_without_enumeration(self):
        # the prepared sentence has too many colours to enumerate; equality
        # short-circuits to the identity
        ready = omega_transform(omega_micro_sentence()).sentence
        result = gmsnp_recolouring_search(ready, ready)
        assert result.status == "found"
        assert result.recolouring is None

    def test_empty_target_colour_set(self):
        corpus = micro_corpus()
        result = gmsnp_recolouring_search(corpus[1], corpus[0])
        assert result.status == "absent"

    def test_found_on_contained_micro_pair(self):
        corpus = micro_corpus()
        result = gmsnp_recolouring_search(corpus[3], corpus[1])
        assert result.status == "found"
        assert result.recolouring.mapping == {0: 0, 1: 1}
        colours1 = ordered_colours(corpus[3], 2, CFG)
        colours2 = ordered_colours(corpus[1], 2, CFG)
        for i, j in result.recolouring.mapping.items():
            assert colours1[i].reduct(("E",)) == colours2[j].reduct(("E",))
        assert falsify_containment(corpus[3], corpus[1], 4) is None

    def test_absent_on_non_contained_micro_pair(self):
        corpus = micro_corpus()
        result = gmsnp_recolouring_search(corpus[1], corpus[3])
        assert result.status == "absent"
        cex = falsify_containment(corpus[1], corpus[3], 3)
        assert cex is not None
        assert cex.structure.relations["E"] == frozenset({(1, 2), (2, 1)})

    def test_search_through_prepared_sentence(self):
        # a genuine run over the readiness output, cross-checked by the oracle
        corpus = micro_corpus()
        ready = omega_transform(omega_micro_sentence()).sentence
        result = gmsnp_recolouring_search(ready, corpus[1])
        assert result.status == "found"
        assert falsify_containment(ready, corpus[1], 3) is None
        assert gmsnp_recolouring_search(ready, corpus[0]).status == "absent"
        assert falsify_containment(ready, corpus[0], 3) is not None

    def test_budget_exhaustion_is_unknown(self):
        corpus = micro_corpus()
        result = gmsnp_recolouring_search(corpus[3], corpus[1], config=RunConfig(budget=5))
        assert result.status == "unknown"
        assert result.stage is not None

    def test_rejects_mismatched_input_signatures(self):
        corpus = micro_corpus()
        with pytest.raises(InputError):
            gmsnp_recolouring_search(corpus[0], corpus[4])

    def test_deterministic(self):
        corpus = micro_corpus()
        a = gmsnp_recolouring_search(corpus[3], corpus[1])
        b = gmsnp_recolouring_search(corpus[3], corpus[1])
        assert a == b
