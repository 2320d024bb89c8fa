"""Sentence layer: parsing, classification, model checking, padding."""

from __future__ import annotations

from itertools import product

import pytest

from snpkit.errors import BudgetExceeded, InputError, SnpParseError
from snpkit.logic import (
    Clause,
    Literal,
    SnpSentence,
    check_fo_part,
    check_model,
    classify,
    clause_structure,
    eliminate_equalities,
    full_expansion,
    gamma_padding,
    iter_fo_models,
    parse_sentence,
    print_sentence,
    stats,
)
from snpkit.structures import RelSymbol, Signature, Structure

from .fixtures import (
    SIG_E,
    complete_graph,
    cross_sentence,
    edge_colouring_sentence,
    k5_witness,
    micro_corpus,
    symmetric_cycle,
    vertex_colouring_sentence,
)


# ---------------------------------------------------------------------------
# Text format


def test_round_trip_is_identity_on_ast():
    for sentence in [
        edge_colouring_sentence(),
        vertex_colouring_sentence(),
        cross_sentence(),
        *micro_corpus(),
    ]:
        assert parse_sentence(print_sentence(sentence)) == sentence


def test_print_is_canonical():
    s = edge_colouring_sentence()
    assert print_sentence(parse_sentence(print_sentence(s))) == print_sentence(s)


def test_parse_rejects_undeclared_symbol():
    with pytest.raises(SnpParseError):
        parse_sentence("sentence { input { E/2 } exists { } clause { !F(x,y) } }")


def test_parse_rejects_arity_mismatch():
    with pytest.raises(SnpParseError):
        parse_sentence("sentence { input { E/2 } exists { } clause { !E(x) } }")


def test_parse_reports_position():
    with pytest.raises(SnpParseError) as err:
        parse_sentence("sentence {\n  input { E/2 }\n  exists { }\n  clause { E) }\n}")
    assert "line 4" in str(err.value)


def test_parse_equality_literals():
    s = parse_sentence(
        "sentence { input { E/2 } exists { } clause { !E(x,y) | x != y } clause { x = y | !E(x,y) } }"
    )
    assert s.clauses[0].literals[1] == Literal.eq("x", "y", positive=False)
    assert s.clauses[1].literals[0] == Literal.eq("x", "y", positive=True)
    assert parse_sentence(print_sentence(s)) == s


def test_input_exists_overlap_rejected():
    sig = Signature([RelSymbol("E", 2)])
    with pytest.raises(InputError):
        SnpSentence(sig, sig, [])


# ---------------------------------------------------------------------------
# Classification and statistics


def test_edge_colouring_classification():
    c = classify(edge_colouring_sentence())
    assert c.monotone and c.guarded and c.connected
    assert not c.monadic
    assert c.gmsnp and not c.mmsnp


def test_vertex_colouring_classification():
    c = classify(vertex_colouring_sentence())
    assert c.monotone and c.monadic
    assert not c.guarded
    assert c.mmsnp and not c.gmsnp


def test_cross_sentence_is_disconnected_gmsnp():
    c = classify(cross_sentence())
    assert c.gmsnp
    assert not c.connected


def test_positive_input_literal_breaks_monotonicity():
    s = parse_sentence("sentence { input { E/2 } exists { } clause { E(x,y) } }")
    assert not classify(s).monotone


def test_positive_equality_breaks_monotonicity():
    s = parse_sentence("sentence { input { E/2 } exists { } clause { x = y | !E(x,y) } }")
    assert not classify(s).monotone


def test_existential_guard_counts():
    s = parse_sentence(
        "sentence { input { E/2 } exists { B/2 C/2 } clause { !B(x,y) | C(x,y) } }"
    )
    assert classify(s).guarded


def test_stats_frozen_values():
    assert stats(edge_colouring_sentence()).as_dict() == {"ht": 3, "lh": 4, "wd": 3, "ar": 2}
    assert stats(vertex_colouring_sentence()).as_dict() == {"ht": 3, "lh": 4, "wd": 2, "ar": 2}
    assert stats(cross_sentence()).as_dict() == {"ht": 3, "lh": 1, "wd": 4, "ar": 2}


def test_clause_structure_components():
    s = cross_sentence()
    cs, var_map = clause_structure(s.clauses[0], s.sig)
    comps = cs.components()
    names = [{v for v, i in var_map.items() if i in comp} for comp in comps]
    assert names == [{"x", "y"}, {"u", "v"}]


# ---------------------------------------------------------------------------
# Equality elimination


def test_eliminate_negative_equality_substitutes():
    s = parse_sentence("sentence { input { E/2 } exists { } clause { !E(x,y) | x != y } }")
    out = eliminate_equalities(s)
    assert [str(c) for c in out.clauses] == ["!E(x,x)"]


def test_eliminate_reflexive_disequality_drops_literal():
    s = parse_sentence("sentence { input { E/2 } exists { } clause { !E(x,x) | x != x } }")
    out = eliminate_equalities(s)
    assert [str(c) for c in out.clauses] == ["!E(x,x)"]


def test_eliminate_positive_equality_tautology_drops_clause():
    s = parse_sentence("sentence { input { E/2 } exists { } clause { x = x | !E(x,y) } }")
    assert eliminate_equalities(s).clauses == ()


def test_eliminate_rejects_distinct_positive_equality():
    s = parse_sentence("sentence { input { E/2 } exists { } clause { x = y | !E(x,y) } }")
    with pytest.raises(InputError):
        eliminate_equalities(s)


def test_eliminate_drops_complementary_tautologies():
    s = parse_sentence(
        "sentence { input { E/2 } exists { B/2 } clause { !B(x,y) | B(x,y) | !E(x,y) } }"
    )
    assert eliminate_equalities(s).clauses == ()


# ---------------------------------------------------------------------------
# Semantics


def test_k5_witness_satisfies_fo_part():
    assert check_fo_part(edge_colouring_sentence(), k5_witness()) is None


def test_fo_violation_is_reported():
    witness = k5_witness()
    broken = witness.with_relations({"B": set(witness.relations["B"]) - {(1, 3)}})
    violation = check_fo_part(edge_colouring_sentence(), broken)
    assert violation is not None
    assert violation.clause_index == 0
    assert dict(violation.assignment)["x"] == 1 and dict(violation.assignment)["y"] == 3


def test_check_model_finds_k5_colouring():
    witness = check_model(edge_colouring_sentence(), complete_graph(5))
    assert witness is not None
    # Independent verification through the first-order checker.
    assert check_fo_part(edge_colouring_sentence(), witness) is None


def test_check_model_none_when_sigma_empty_and_violated():
    s = micro_corpus()[2]  # forbid symmetric pairs
    two_cycle = Structure(SIG_E, 2, {"E": [(1, 2), (2, 1)]})
    assert check_model(s, two_cycle) is None
    assert check_model(s, Structure(SIG_E, 2, {"E": [(1, 2)]})) is not None


def test_check_model_vertex_colouring():
    assert check_model(vertex_colouring_sentence(), symmetric_cycle(3)) is None
    pth = Structure(SIG_E, 3, {"E": [(1, 2), (2, 1), (2, 3), (3, 2)]})
    assert check_model(vertex_colouring_sentence(), pth) is not None


def test_check_model_budget():
    with pytest.raises(BudgetExceeded):
        check_model(edge_colouring_sentence(), complete_graph(5), budget=5)


def test_iter_fo_models_counts():
    s = micro_corpus()[2]  # forbid symmetric pairs; loops are symmetric pairs too
    assert sum(1 for _ in iter_fo_models(s, 1)) == 1
    assert sum(1 for _ in iter_fo_models(s, 2)) == 3


def test_iter_fo_models_respects_sentence():
    s = edge_colouring_sentence()
    for model in iter_fo_models(s, 2):
        assert check_fo_part(s, model) is None


# ---------------------------------------------------------------------------
# Padding


def test_gamma_adds_negated_domain_atoms():
    g = gamma_padding(vertex_colouring_sentence())
    assert "D" in g.input_sig
    assert str(g.clauses[0]) == "B(x) | R(x) | !D(x)"
    assert str(g.clauses[2]) == "!E(x,y) | !B(x) | !B(y) | !D(x) | !D(y)"


def test_gamma_picks_fresh_name():
    s = parse_sentence("sentence { input { D/1 } exists { } clause { !D(x) } }")
    g = gamma_padding(s)
    assert "D0" in g.input_sig


def test_full_expansion_marks_every_element():
    a = complete_graph(3)
    ap = full_expansion(a)
    assert ap.relations["D"] == frozenset({(1,), (2,), (3,)})


def test_gamma_equivalence_on_samples():
    phi = vertex_colouring_sentence()
    gamma = gamma_padding(phi)
    for a in [symmetric_cycle(3), symmetric_cycle(4), complete_graph(4)]:
        assert (check_model(phi, a) is not None) == (
            check_model(gamma, full_expansion(a)) is not None
        )


def test_gamma_relativizes_to_marked_part():
    # A triangle with only two marked vertices is two-colourable inside the mark.
    gamma = gamma_padding(vertex_colouring_sentence())
    tri = symmetric_cycle(3)
    sig = tri.sig.union(Signature([RelSymbol("D", 1)]))
    partial = tri.expand(sig, {"D": [(1,), (2,)]})
    assert check_model(gamma, partial) is not None
    assert check_model(gamma, full_expansion(tri)) is None
