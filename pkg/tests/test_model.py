"""Structural laws: validation, classification, typing, configurations."""

import random

import pytest

from ifm.model import (
    AlternativeSet,
    Channel,
    FlowSpec,
    InferenceRule,
    Introduce,
    Mitigation,
    Network,
    Proxy,
    Site,
    Toggle,
    TypeSystem,
    Variant,
    check_type_system,
    classify_sites,
    expand_configurations,
    infer_types,
    validate,
)

from randnet import build_random_network, oracle_classify


def line_network(k: int = 4, channel_types: frozenset[str] = frozenset(),
                 s0_types: frozenset[str] = frozenset(),
                 type_system: TypeSystem = TypeSystem()) -> Network:
    sites = {f"s{i}": Site(id=f"s{i}",
                           types=s0_types if i == 0 else frozenset())
             for i in range(k)}
    channels = {f"c{i}": Channel(id=f"c{i}", inputs=(f"s{i}",),
                                 outputs=(f"s{i+1}",), types=channel_types)
                for i in range(k - 1)}
    return Network(sites=sites, channels=channels, type_system=type_system)


class TestCheckTypeSystem:
    def test_two_element_chain_is_partial_order(self):
        ts = TypeSystem(types=frozenset({"list", "collection"}),
                        subtype_edges=frozenset({("list", "collection")}))
        assert check_type_system(ts) == []

    def test_mutual_subtypes_report_cycle(self):
        ts = TypeSystem(types=frozenset({"a", "b"}),
                        subtype_edges=frozenset({("a", "b"), ("b", "a")}))
        violations = check_type_system(ts)
        assert len(violations) == 1
        assert violations[0].code == "TYPE_CYCLE"
        assert {"a", "b"} <= set(violations[0].subjects)

    def test_recruitment_style_type_system_is_clean(self):
        ts = TypeSystem(
            types=frozenset({"list", "sublist", "filtering", "ranking",
                             "abstraction"}),
            subtype_edges=frozenset({("sublist", "list")}),
            rules=(InferenceRule(
                id="filter_narrows",
                conditions=(("channel", None, "filtering"),
                            ("input", None, "list")),
                conclusion_target="output", conclusion_position=None,
                conclusion_type="sublist"),))
        assert check_type_system(ts) == []

    def test_rule_with_undeclared_conclusion(self):
        ts = TypeSystem(
            types=frozenset({"list"}),
            rules=(InferenceRule("bad", (), "channel", None, "ghost"),))
        violations = check_type_system(ts)
        assert [v.code for v in violations] == ["RULE_UNKNOWN_TYPE"]


class TestValidate:
    def test_single_site_is_valid(self):
        n = Network(sites={"A": Site(id="A")})
        assert validate(n).ok

    def test_smallest_cycle_reports_witness(self):
        n = Network(
            sites={"A": Site(id="A"), "B": Site(id="B")},
            channels={
                "c1": Channel(id="c1", inputs=("A",), outputs=("B",)),
                "c2": Channel(id="c2", inputs=("B",), outputs=("A",)),
            })
        report = validate(n)
        cycles = [v for v in report.violations if v.code == "CYCLE"]
        assert len(cycles) == 1
        witness = list(cycles[0].witness)
        assert witness[0] == witness[-1]
        assert set(witness) == {"A", "B"}

    def test_dual_producer(self):
        n = Network(
            sites={s: Site(id=s) for s in "ABC"},
            channels={
                "c1": Channel(id="c1", inputs=("A",), outputs=("C",)),
                "c2": Channel(id="c2", inputs=("B",), outputs=("C",)),
            })
        assert any(v.code == "DUAL_PRODUCER" for v in validate(n).violations)

    def test_dangling_site_reference(self):
        n = Network(sites={"A": Site(id="A")},
                    channels={"c": Channel(id="c", inputs=("A",),
                                           outputs=("GHOST",))})
        assert any(v.code == "DANGLING_REF" for v in validate(n).violations)

    def test_input_output_overlap(self):
        n = Network(sites={"A": Site(id="A"), "B": Site(id="B")},
                    channels={"c": Channel(id="c", inputs=("A", "B"),
                                           outputs=("B",))})
        assert any(v.code == "IN_OUT_OVERLAP" for v in validate(n).violations)

    def test_seeded_site_must_stay_unproduced(self):
        n = Network(
            sites={"A": Site(id="A"), "B": Site(id="B", seeds=frozenset({"g"}))},
            channels={"c": Channel(id="c", inputs=("A",), outputs=("B",))})
        assert any(v.code == "SEEDED_NON_INPUT" for v in validate(n).violations)

    def test_introduce_and_drop_conflict(self):
        flow = FlowSpec(drops=(Mitigation("m", frozenset({"g"})),),
                        introduces=(Introduce("g", "Opacity"),))
        n = Network(sites={"A": Site(id="A"), "B": Site(id="B")},
                    channels={"c": Channel(id="c", inputs=("A",),
                                           outputs=("B",), flow=flow)})
        assert any(v.code == "FLOW_CONFLICT" for v in validate(n).violations)

    def test_self_proxy_rejected(self):
        flow = FlowSpec(proxies=(Proxy("g", "g"),))
        n = Network(sites={"A": Site(id="A"), "B": Site(id="B")},
                    channels={"c": Channel(id="c", inputs=("A",),
                                           outputs=("B",), flow=flow)})
        assert any(v.code == "FLOW_CONFLICT" for v in validate(n).violations)

    def test_random_networks_validate(self):
        rng = random.Random(4242)
        for _ in range(200):
            n = build_random_network(rng)
            report = validate(n)
            assert report.ok, str(report)
            # validation soundness: a clean report implies a topological
            # order over the channels exists
            order = n.topological_channels()
            assert order is not None
            assert sorted(order) == sorted(n.channels)


class TestClassifySites:
    def test_single_channel(self):
        n = line_network(2)
        classes = classify_sites(n)
        assert classes.inputs == {"s0"}
        assert classes.outputs == {"s1"}
        assert classes.mids == frozenset()

    def test_invalid_network_rejected(self):
        n = Network(sites={"A": Site(id="A")},
                    channels={"c": Channel(id="c", inputs=("A",),
                                           outputs=("A",))})
        with pytest.raises(ValueError):
            classify_sites(n)

    def test_matches_direct_scan_on_random_dags(self):
        rng = random.Random(99)
        for _ in range(300):
            n = build_random_network(rng, max_sites=8)
            classes = classify_sites(n)
            ins, outs, mids = oracle_classify(n)
            assert classes.inputs == ins
            assert classes.outputs == outs
            assert classes.mids == mids

    def test_partition_law_on_random_dags(self):
        rng = random.Random(7)
        for _ in range(300):
            n = build_random_network(rng)
            classes = classify_sites(n)
            assert not classes.inputs & classes.outputs
            assert not classes.inputs & classes.mids
            assert not classes.outputs & classes.mids
            assert classes.inputs | classes.outputs | classes.mids \
                == set(n.sites)


FILTER_TS = TypeSystem(
    types=frozenset({"list", "sublist", "filtering"}),
    subtype_edges=frozenset({("sublist", "list")}),
    rules=(InferenceRule(
        id="filter_narrows",
        conditions=(("channel", None, "filtering"), ("input", None, "list")),
        conclusion_target="output", conclusion_position=None,
        conclusion_type="sublist"),))


class TestInferTypes:
    def test_no_rules_leaves_assignments_alone(self):
        ts = TypeSystem(types=frozenset({"list"}))
        n = line_network(3, s0_types=frozenset({"list"}), type_system=ts)
        inferred = infer_types(n)
        assert inferred == n

    def test_filtering_channel_narrows_list_to_sublist(self):
        n = line_network(2, channel_types=frozenset({"filtering"}),
                         s0_types=frozenset({"list"}), type_system=FILTER_TS)
        inferred = infer_types(n)
        assert inferred.sites["s1"].types == frozenset({"sublist", "list"})

    def test_three_rule_chain_on_a_line(self):
        # Expected assignments computed by running the rules by hand:
        # r1 fires on c0 (s0 has 'a'), r2 on c1, r3 on c2.
        ts = TypeSystem(
            types=frozenset({"a", "b", "cc", "d"}),
            rules=(
                InferenceRule("r1", (("input", None, "a"),), "output", None, "b"),
                InferenceRule("r2", (("input", None, "b"),), "output", None, "cc"),
                InferenceRule("r3", (("input", None, "cc"),), "output", None, "d"),
            ))
        n = line_network(4, s0_types=frozenset({"a"}), type_system=ts)
        inferred = infer_types(n)
        assert inferred.sites["s0"].types == frozenset({"a"})
        assert inferred.sites["s1"].types == frozenset({"b"})
        assert inferred.sites["s2"].types == frozenset({"cc"})
        assert inferred.sites["s3"].types == frozenset({"d"})

    def test_subtype_matching_goes_through_closure(self):
        # A site declared 'sublist' satisfies a rule asking for 'list'.
        n = line_network(2, channel_types=frozenset({"filtering"}),
                         s0_types=frozenset({"sublist"}),
                         type_system=FILTER_TS)
        inferred = infer_types(n)
        assert "sublist" in inferred.sites["s1"].types

    def test_subtype_closure_law(self):
        n = line_network(3, channel_types=frozenset({"filtering"}),
                         s0_types=frozenset({"list"}), type_system=FILTER_TS)
        inferred = infer_types(n)
        for site in inferred.sites.values():
            for t in site.types:
                assert FILTER_TS.supertypes(t) <= site.types

    def test_idempotence(self):
        n = line_network(4, channel_types=frozenset({"filtering"}),
                         s0_types=frozenset({"list"}), type_system=FILTER_TS)
        once = infer_types(n)
        assert infer_types(once) == once

    def test_inconsistent_type_system_rejected(self):
        ts = TypeSystem(types=frozenset({"a", "b"}),
                        subtype_edges=frozenset({("a", "b"), ("b", "a")}))
        with pytest.raises(ValueError):
            infer_types(line_network(2, type_system=ts))


def network_with_alternatives(n_alts: int) -> Network:
    sites = {"A": Site(id="A", seeds=frozenset({"g"}))}
    channels = {}
    alternatives = {}
    for i in range(n_alts):
        sites[f"B{i}"] = Site(id=f"B{i}")
        channels[f"c{i}"] = Channel(id=f"c{i}", inputs=("A",),
                                    outputs=(f"B{i}",))
        alternatives[f"alt{i}"] = AlternativeSet(
            id=f"alt{i}",
            variants=(
                Variant("present",
                        frozenset({Toggle("channel", (f"c{i}",))})),
                Variant("absent"),
            ))
    return Network(sites=sites, channels=channels, alternatives=alternatives)


class TestExpandConfigurations:
    def test_no_alternatives_yields_the_network_itself(self):
        n = line_network(3)
        configs = expand_configurations(n)
        assert len(configs) == 1
        assert configs[0].assignment == {}
        assert configs[0].network.channels == n.channels
        assert configs[0].report.ok

    def test_edge_toggle_present_and_absent(self):
        sites = {"R0": Site(id="R0"), "V": Site(id="V"),
                 "ER": Site(id="ER")}
        channels = {"b2": Channel(id="b2", inputs=("R0", "V"),
                                  outputs=("ER",))}
        alt = AlternativeSet(
            id="?R0",
            variants=(Variant("present",
                              frozenset({Toggle("edge", ("R0", "b2"))})),
                      Variant("absent")))
        n = Network(sites=sites, channels=channels,
                    alternatives={"?R0": alt})
        configs = expand_configurations(n)
        assert len(configs) == 2
        by_name = {c.assignment["?R0"]: c for c in configs}
        assert by_name["present"].network.channels["b2"].inputs == ("R0", "V")
        assert by_name["absent"].network.channels["b2"].inputs == ("V",)
        assert all(c.report.ok for c in configs)

    def test_three_binary_alternatives_give_eight_configurations(self):
        configs = expand_configurations(network_with_alternatives(3))
        assert len(configs) == 8
        assert len({c.name for c in configs}) == 8

    def test_product_law(self):
        for k in (1, 2, 3, 4):
            n = network_with_alternatives(k)
            expected = 1
            for alt in n.alternatives.values():
                expected *= len(alt.variants)
            assert len(expand_configurations(n)) == expected

    def test_breaking_variant_reported_per_configuration(self):
        # Dropping the only input edge of a channel leaves it input-less.
        sites = {"A": Site(id="A"), "B": Site(id="B")}
        channels = {"c": Channel(id="c", inputs=("A",), outputs=("B",))}
        alt = AlternativeSet(
            id="?A",
            variants=(Variant("present",
                              frozenset({Toggle("edge", ("A", "c"))})),
                      Variant("absent")))
        n = Network(sites=sites, channels=channels, alternatives={"?A": alt})
        assert validate(n).ok
        configs = expand_configurations(n)
        by_name = {c.assignment["?A"]: c for c in configs}
        assert by_name["present"].report.ok
        assert not by_name["absent"].report.ok
