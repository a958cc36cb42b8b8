import pytest

from kdgraph.facts import parse_fact_file
from kdgraph.graph import GraphCycleError
from kdgraph.linking import (
    ChainError,
    extract_chains,
    filter_joins,
    possible_next_events,
    subevent_closure,
    super_event_name,
    synthesize_super_event,
)
from kdgraph.pipeline import run_pipeline
from kdgraph.resolution import Confidence

# Every join derivable from the eukaryote fixture, worked out by hand from
# the IO sets and the match/spatial relations.
EUKARYOTE_JOINS = {
    ("alteration_of_mrna_ends", "alteration_of_mrna_ends"),
    ("alteration_of_mrna_ends", "rna_processing"),
    ("alteration_of_mrna_ends", "rna_splicing"),
    ("eukaryotic_transcription", "alteration_of_mrna_ends"),
    ("eukaryotic_transcription", "rna_processing"),
    ("eukaryotic_transcription", "rna_splicing"),
    ("move_out", "eukaryotic_translation"),
    ("rna_processing", "alteration_of_mrna_ends"),
    ("rna_processing", "move_out"),
    ("rna_processing", "rna_processing"),
    ("rna_processing", "rna_splicing"),
    ("rna_splicing", "move_out"),
    ("rna_splicing", "rna_processing"),
    ("rna_splicing", "rna_splicing"),
    ("synthesis_of_rna_in_eukaryote", "eukaryotic_translation"),
}


class TestJoins:
    def test_eukaryote_join_set(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        assert {(j.source, j.target) for j in result.joins} == EUKARYOTE_JOINS

    def test_worked_example_joins_present(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        pairs = {(j.source, j.target) for j in result.joins}
        assert ("alteration_of_mrna_ends", "rna_splicing") in pairs
        assert ("eukaryotic_transcription", "rna_processing") in pairs
        assert ("rna_processing", "move_out") in pairs

    def test_both_fragments_join_to_translation(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        pairs = {(j.source, j.target) for j in result.joins}
        assert ("synthesis_of_rna_in_eukaryote", "eukaryotic_translation") in pairs
        assert ("move_out", "eukaryotic_translation") in pairs

    def test_event_without_outputs_never_joins(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        assert not any(j.source == "eukaryotic_translation" for j in result.joins)

    def test_join_confidences(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        by_pair = {(j.source, j.target): j for j in result.joins}
        join = by_pair[("synthesis_of_rna_in_eukaryote", "eukaryotic_translation")]
        assert join.io_confidence is Confidence.LOW
        assert join.loc_confidence is Confidence.HIGH

    def test_threshold_filter(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        strict = filter_joins(result.joins, Confidence.MEDIUM)
        kept = {(j.source, j.target) for j in strict}
        assert ("synthesis_of_rna_in_eukaryote", "eukaryotic_translation") not in kept
        assert ("eukaryotic_transcription", "rna_processing") in kept


class TestSubeventClosure:
    def test_eukaryote_closure(self, eukaryote_store):
        closure = subevent_closure(eukaryote_store)
        top = "synthesis_of_rna_in_eukaryote"
        assert (top, "eukaryotic_transcription") in closure
        assert (top, "rna_processing") in closure
        assert (top, "move_out") in closure
        assert (top, "alteration_of_mrna_ends") in closure
        assert (top, "rna_splicing") in closure
        assert ("rna_processing", "alteration_of_mrna_ends") in closure

    def test_empty(self):
        assert subevent_closure(parse_fact_file("has(a, enables, b).")) == set()

    def test_three_chain(self):
        closure = subevent_closure(
            parse_fact_file("has(a, subevent, b).\nhas(b, subevent, c).")
        )
        assert closure == {("a", "b"), ("a", "c"), ("b", "c")}

    def test_cycle_is_an_error(self):
        with pytest.raises(GraphCycleError):
            subevent_closure(
                parse_fact_file("has(a, subevent, b).\nhas(b, subevent, a).")
            )


class TestPossibleNextEvents:
    def test_eukaryote_exact_set(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        assert result.possible_next_events == [
            ("synthesis_of_rna_in_eukaryote", "eukaryotic_translation")
        ]

    def test_move_out_excluded_by_condition_two(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        assert result.exclusions[("move_out", "eukaryotic_translation")] == [2]

    def test_siblings_excluded_by_shared_parent(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        reasons = result.exclusions[("eukaryotic_transcription", "rna_processing")]
        assert reasons == [5]

    def test_survivors_subset_of_joins(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        join_pairs = {(j.source, j.target) for j in result.joins}
        assert set(result.possible_next_events) <= join_pairs

    def test_no_survivor_shares_a_tree(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        closure = subevent_closure(result.store)
        ancestors = {}
        for anc, desc in closure:
            ancestors.setdefault(desc, set()).add(anc)
        for a, b in result.possible_next_events:
            assert (a, b) not in closure and (b, a) not in closure
            assert not ancestors.get(a, set()) & ancestors.get(b, set())

    def test_containment_conditions_directly(self):
        joins = [("a", "b"), ("parent", "b")]
        closure = {("parent", "a")}
        survivors, excluded = possible_next_events(
            [_join(a, b) for a, b in joins], closure
        )
        assert ("a", "b") not in survivors
        assert 2 in excluded[("a", "b")]
        assert ("parent", "b") in survivors


def _join(a, b):
    from kdgraph.linking import JoinAtom

    return JoinAtom(a, b, Confidence.HIGH, Confidence.HIGH)


class TestChains:
    def test_eukaryote_chain(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        assert result.chains == [
            ["synthesis_of_rna_in_eukaryote", "eukaryotic_translation"]
        ]

    def test_linear_chain(self):
        chains = extract_chains([("a", "b"), ("b", "c")])
        assert chains == [["a", "b", "c"]]

    def test_branching_produces_one_chain_per_branch(self):
        diagnostics = []
        chains = extract_chains([("a", "b"), ("a", "c")], diagnostics)
        assert sorted(chains) == [["a", "b"], ["a", "c"]]
        assert any(d.code == "link-branching" for d in diagnostics)

    def test_cycle_detected(self):
        diagnostics = []
        chains = extract_chains([("a", "b"), ("b", "a")], diagnostics)
        assert chains and any(d.code == "link-cycle" for d in diagnostics)


class TestSuperEvents:
    def test_structure_counts(self):
        store = parse_fact_file("has(a, instance_of, event).\nhas(b, instance_of, event).\nhas(c, instance_of, event).")
        facts = synthesize_super_event(store, ["a", "b", "c"])
        slots = [f.slot for f in facts]
        assert slots.count("subevent") == 3
        assert slots.count("next_event") == 2
        assert slots.count("first_subevent") == 1
        assert slots.count("last_subevent") == 1
        assert slots.count("instance_of") == 1

    def test_short_chain_is_an_error(self):
        store = parse_fact_file("has(a, instance_of, event).")
        with pytest.raises(ChainError):
            synthesize_super_event(store, ["a"])

    def test_members_already_sharing_a_parent_are_rejected(self):
        store = parse_fact_file(
            "has(p, subevent, a).\nhas(p, subevent, b)."
        )
        with pytest.raises(ChainError):
            synthesize_super_event(store, ["a", "b"])

    def test_member_containing_member_rejected(self):
        store = parse_fact_file("has(a, subevent, b).")
        with pytest.raises(ChainError):
            synthesize_super_event(store, ["a", "b"])

    def test_deterministic_names(self):
        store = parse_fact_file("has(a, instance_of, event).\nhas(b, instance_of, event).")
        first = synthesize_super_event(store, ["a", "b"])
        second = synthesize_super_event(store, ["a", "b"])
        assert [f.triple for f in first] == [f.triple for f in second]
        assert first[0].subject == "super_a_b"

    def test_long_names_truncated_with_stable_hash(self):
        chain = [f"very_long_event_name_number_{i}" for i in range(4)]
        name = super_event_name(chain)
        assert len(name) <= 60
        assert name == super_event_name(chain)
        assert name.startswith("super_very_long_event")

    def test_round_trip_re_derivation(self, eukaryote_store):
        result = run_pipeline(eukaryote_store)
        chain = result.chains[0]
        patch = synthesize_super_event(result.store, chain)
        merged = result.store.copy()
        for fact in patch:
            merged.add(fact)
        rerun = run_pipeline(merged)
        parent = patch[0].subject
        assert rerun.store.values(parent, "first_subevent") == [chain[0]]
        assert rerun.store.values(parent, "last_subevent") == [chain[-1]]
