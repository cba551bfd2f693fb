"""Acceptance criteria, one test per criterion.

Each test prints an ``ACCEPTANCE <name>: PASS`` line once its assertions
hold (visible with ``pytest -s`` or ``-rP``); a failing criterion fails
the test outright.  Counts and tolerances are fixed here and everything
is exact-match: the engine either reproduces the contract or it does not.
"""

import json
import random
import time
import urllib.request
from pathlib import Path

import pytest

from ifm.analysis import (
    Mode,
    Verdict,
    apply_edits,
    assess_all,
    assess_outcome,
    downstream_of,
    parse_edit,
    propagate_features,
    trace_paths,
    what_if,
    EditError,
    OutcomeSpec,
)
from ifm.casestudy import golden_expectations, load_recruitment_model
from ifm.cli import main
from ifm.dsl import SourceModel, parse, parse_files, serialize
from ifm.model import (
    classify_sites,
    expand_configurations,
    infer_types,
    validate,
)
from ifm.nesting import CollapseError, collapse
from ifm.server import make_server, run_in_thread

from randnet import (
    build_random_network,
    oracle_downstream,
    oracle_paths,
    oracle_tags,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE = REPO_ROOT / "fixtures" / "recruitment.ifm"
FIXTURE_OUTCOMES = REPO_ROOT / "fixtures" / "recruitment.outcomes.ifm"

STRICTNESS = {Verdict.CLOSED: 0, Verdict.CONDITIONAL: 1, Verdict.OPEN: 2}


def report(name: str, detail: str) -> None:
    print(f"ACCEPTANCE {name}: PASS ({detail})")


class TestCaseStudyReproduction:
    def test_golden_set_reproduced_in_both_configurations(self, capsys):
        started = time.perf_counter()
        model = parse_files(FIXTURE, FIXTURE_OUTCOMES).model
        assert model is not None
        matrix = assess_all(model.network, list(model.outcomes))
        elapsed = time.perf_counter() - started

        rows = {(c.name, a.outcome_id): a
                for c in matrix.configurations for a in c.assessments}
        configs = sorted(c.name for c in matrix.configurations)
        assert configs == ["?R0=absent", "?R0=present"]
        checked = 0
        for expectation in golden_expectations():
            for config in configs:
                got = rows[(config, expectation.outcome_id)]
                assert got.verdict.value == expectation.verdict
                assert got.label == expectation.label
                assert tuple(got.blocking_mitigations) == expectation.blockers
                assert tuple(p.channels for p in got.open_paths) == \
                    expectation.open_paths[config]
                assert tuple(p.channels
                             for p in got.unconditionally_open_paths) == \
                    expectation.unconditionally_open_paths[config]
                checked += 1
        # Named checks from the contract, stated directly:
        assert rows[("?R0=present", "I1")].verdict is Verdict.OPEN
        assert rows[("?R0=present", "I1")].open_paths[0].channels == ("h",)
        assert rows[("?R0=present", "I2")].verdict is Verdict.OPEN
        assert ("a", "e", "f1", "f2", "g1", "g2", "h") in \
            {p.channels for p in rows[("?R0=present", "I2")].open_paths}
        assert rows[("?R0=present", "O4")].label == "I3"
        assert rows[("?R0=present", "O4")].open_paths[0].channels == \
            ("b6", "b7", "e", "f1", "f2", "g1", "g2", "h")
        assert rows[("?R0=present", "O1.semantic")].verdict \
            is Verdict.CONDITIONAL
        assert rows[("?R0=present", "O1.semantic")].blocking_mitigations \
            == ("b1.normalize", "b2.normalize")
        assert rows[("?R0=present", "O2.aimatch")].verdict is Verdict.CLOSED
        assert rows[("?R0=present", "O3.aimatch")].verdict is Verdict.CLOSED
        assert rows[("?R0=absent", "O4")].verdict is Verdict.OPEN

        assert elapsed < 1.0, f"analysis took {elapsed:.3f}s"

        status = main(["analyze", str(FIXTURE),
                       "--outcomes", str(FIXTURE_OUTCOMES),
                       "--format", "json", "--out", "/dev/null"])
        capsys.readouterr()
        assert status == 1  # open findings gate CI

        report("case-study-reproduction",
               f"{checked} golden rows exact in both configurations, "
               f"{elapsed * 1000:.0f} ms")


class TestWhatIfFlips:
    def test_flips_are_exact_and_isolated(self):
        started = time.perf_counter()
        model = load_recruitment_model()
        outcomes = list(model.outcomes)

        delta = what_if(model.network,
                        [parse_edit("remove-mitigation:b1.normalize"),
                         parse_edit("remove-mitigation:b2.normalize")],
                        outcomes)
        flipped = {(c.configuration, c.outcome_id, c.before, c.after)
                   for c in delta.changes}
        assert {f[1] for f in flipped} == {"O1.semantic"}
        assert all(f[2] is Verdict.CONDITIONAL and f[3] is Verdict.OPEN
                   for f in flipped)
        assert len(flipped) == 2  # one flip per configuration

        delta = what_if(model.network,
                        [parse_edit("remove-introduce:b6:location_advantage")],
                        outcomes)
        flipped = {(c.configuration, c.outcome_id, c.before, c.after)
                   for c in delta.changes}
        assert {f[1] for f in flipped} == {"O4"}
        assert all(f[2] is Verdict.OPEN and f[3] is Verdict.CLOSED
                   for f in flipped)
        assert len(flipped) == 2

        elapsed = time.perf_counter() - started
        assert elapsed < 1.0, f"what-if runs took {elapsed:.3f}s"
        report("what-if-flips",
               f"both documented flips exact and isolated, "
               f"{elapsed * 1000:.0f} ms")


class TestOracleEquivalence:
    def test_thousand_random_dags_agree_with_brute_force(self):
        rng = random.Random(0xACCE55)
        networks = 0
        comparisons = 0
        while networks < 1000:
            n = build_random_network(rng, max_sites=10, max_channels=12,
                                     max_tags=4)
            assert validate(n).ok
            networks += 1
            for mode in Mode:
                optimistic = mode is Mode.OPTIMISTIC
                fm = propagate_features(n, mode)
                expected = oracle_tags(n, optimistic)
                assert {s: set(fm.tags(s)) for s in n.sites} == \
                    {s: set(v) for s, v in expected.items()}
                comparisons += 1

                origin = rng.choice(sorted(n.sites) + sorted(n.channels))
                tag = rng.choice([None, "t0", "t1", "t2", "t3"])
                assert downstream_of(n, origin, tag, mode) == \
                    oracle_downstream(n, origin, tag, optimistic)
                comparisons += 1

                target = rng.choice(sorted(n.sites))
                trace_tag = tag or "t0"
                got = {p.channels for p in
                       trace_paths(n, origin, target, trace_tag, mode).paths}
                assert got == oracle_paths(n, origin, target, trace_tag,
                                           optimistic)
                comparisons += 1
        report("oracle-equivalence",
               f"{networks} networks, {comparisons} comparisons, "
               f"100% agreement")


class TestMonotonicity:
    def test_thousand_single_drop_edits_never_move_the_wrong_way(self):
        rng = random.Random(0x5EED)
        checked = 0
        while checked < 1000:
            n = build_random_network(rng)
            outcome = OutcomeSpec("O", rng.choice(sorted(n.sites)),
                                  frozenset({rng.choice(
                                      ["t0", "t1", "t2", "t3"])}))
            before = assess_outcome(n, outcome)

            if rng.random() < 0.5:
                tag = next(iter(outcome.tags))
                cid = rng.choice(sorted(n.channels))
                conditional = rng.random() < 0.5
                spec = f"add-mitigation:{cid}:{tag}" + \
                    (":conditional" if conditional else "")
                try:
                    edited = apply_edits(n, [parse_edit(spec)])
                except EditError:
                    continue
                after = assess_outcome(edited, outcome)
                assert STRICTNESS[after.verdict] <= \
                    STRICTNESS[before.verdict], (spec, before, after)
            else:
                mitigations = sorted(n.mitigation_index())
                if not mitigations:
                    continue
                spec = f"remove-mitigation:{rng.choice(mitigations)}"
                edited = apply_edits(n, [parse_edit(spec)])
                after = assess_outcome(edited, outcome)
                assert STRICTNESS[after.verdict] >= \
                    STRICTNESS[before.verdict], (spec, before, after)
            checked += 1
        report("drop-monotonicity", f"{checked} single-edit pairs, "
                                    f"0 violations")


class TestAbstractionSoundness:
    def test_collapse_preserves_exterior_reachability(self):
        rng = random.Random(0xAB5)
        collapsed_count = 0
        while collapsed_count < 200:
            n = build_random_network(rng, subnet_fraction=1.0)
            if not any(ch.subnet == "g" for ch in n.channels.values()):
                continue
            try:
                collapsed = collapse(n, "g")
            except CollapseError:
                continue  # unreadable or non-convex group: refused, not wrong
            for mode in Mode:
                full = propagate_features(n, mode)
                abstracted = propagate_features(collapsed, mode)
                for site in collapsed.sites:
                    assert abstracted.tags(site) == full.tags(site), \
                        (mode, site)
            collapsed_count += 1
        report("abstraction-soundness",
               f"{collapsed_count} collapsed networks, exterior "
               f"reachability identical in both modes")


class TestFormalLaws:
    def test_partition_subtype_idempotence_and_product_laws(self):
        rng = random.Random(0x1A95)

        partition_checks = 0
        for _ in range(300):
            n = build_random_network(rng)
            classes = classify_sites(n)
            assert not classes.inputs & classes.outputs
            assert not classes.inputs & classes.mids
            assert not classes.outputs & classes.mids
            assert classes.inputs | classes.outputs | classes.mids \
                == set(n.sites)
            partition_checks += 1

        from ifm.model import InferenceRule, TypeSystem
        from dataclasses import replace as dc_replace
        type_checks = 0
        ts = TypeSystem(
            types=frozenset({"list", "sublist", "narrow", "filtering"}),
            subtype_edges=frozenset({("sublist", "list"),
                                     ("narrow", "sublist")}),
            rules=(InferenceRule("r", (("input", None, "list"),),
                                 "output", None, "narrow"),))
        for _ in range(100):
            n = build_random_network(rng, max_sites=8)
            typed_sites = {
                sid: dc_replace(site, types=frozenset(
                    rng.sample(["list", "sublist", "narrow"],
                               rng.randint(0, 2))))
                for sid, site in n.sites.items()}
            n = dc_replace(n, sites=typed_sites, type_system=ts)
            inferred = infer_types(n)
            for site in inferred.sites.values():
                for t in site.types:
                    assert ts.supertypes(t) <= site.types
            assert infer_types(inferred) == inferred
            type_checks += 1

        config_checks = 0
        for _ in range(100):
            n = build_random_network(rng)
            n = _attach_random_alternatives(rng, n)
            expected = 1
            for alt in n.alternatives.values():
                expected *= len(alt.variants)
            assert len(expand_configurations(n)) == expected
            config_checks += 1

        report("formal-laws",
               f"partition x{partition_checks}, subtype-closure+idempotence "
               f"x{type_checks}, configuration-count x{config_checks}, "
               f"0 violations")


def _attach_random_alternatives(rng: random.Random, n):
    from dataclasses import replace as dc_replace
    from ifm.model import AlternativeSet, Toggle, Variant

    alternatives = {}
    candidates = sorted(n.channels)
    for k in range(rng.randint(0, 3)):
        if not candidates:
            break
        cid = candidates.pop(rng.randrange(len(candidates)))
        variants = [Variant("on", frozenset({Toggle("channel", (cid,))}))]
        for extra in range(rng.randint(1, 2)):
            variants.append(Variant(f"off{extra}"))
        alternatives[f"?a{k}"] = AlternativeSet(f"?a{k}", tuple(variants))
    return dc_replace(n, alternatives=alternatives)


class TestDslRoundTrip:
    def test_fixture_and_generated_models_round_trip_byte_exact(self):
        first = parse_files(FIXTURE, FIXTURE_OUTCOMES)
        assert first.ok
        text1 = serialize(first.model)
        second = parse(text1)
        assert second.ok
        assert second.model == first.model
        assert serialize(second.model) == text1

        rng = random.Random(0xD51)
        count = 0
        for _ in range(500):
            network = build_random_network(rng)
            model = SourceModel(network=network)
            text = serialize(model)
            back = parse(text)
            assert back.ok
            assert back.model.network == network
            assert serialize(back.model) == text
            count += 1
        report("dsl-round-trip",
               f"fixture + {count} generated models, canonical text "
               f"byte-exact")


class TestCliApiParity:
    def test_serve_payloads_byte_identical_to_cli_json(self, tmp_path,
                                                       capsys):
        model = parse_files(FIXTURE, FIXTURE_OUTCOMES).model
        server = make_server(model, port=0)
        run_in_thread(server)
        host, port = server.server_address
        try:
            out = tmp_path / "cli.json"
            status = main(["analyze", str(FIXTURE),
                           "--outcomes", str(FIXTURE_OUTCOMES),
                           "--format", "json", "--out", str(out)])
            capsys.readouterr()
            assert status == 1
            with urllib.request.urlopen(
                    f"http://{host}:{port}/api/v1/assessments") as response:
                served = response.read()
            assert served == out.read_bytes()

            delta_out = tmp_path / "delta.json"
            edit = "remove-mitigation:b1.normalize"
            status = main(["whatif", str(FIXTURE),
                           "--outcomes", str(FIXTURE_OUTCOMES),
                           "--format", "json", "--out", str(delta_out),
                           "--edit", edit])
            capsys.readouterr()
            assert status == 0
            request = urllib.request.Request(
                f"http://{host}:{port}/api/v1/whatif",
                data=json.dumps({"edits": [edit]}).encode(),
                headers={"Content-Type": "application/json"})
            with urllib.request.urlopen(request) as response:
                served_delta = response.read()
            assert served_delta == delta_out.read_bytes()
        finally:
            server.shutdown()
            server.server_close()
        report("cli-api-parity",
               "assessments and what-if payloads byte-identical")
