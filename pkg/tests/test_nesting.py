"""Collapsing sub-networks into abstract channels and expanding them back."""

import random
from dataclasses import replace

import pytest

from ifm.analysis import Mode, propagate_features
from ifm.model import Channel, FlowSpec, Mitigation, Network, Site, validate
from ifm.nesting import CollapseError, collapse, expand

from randnet import build_random_network


def chain_with_group() -> Network:
    """A -> g1 -> M -> g2 -> B -> tail -> C with g1,g2 grouped as 'inner'."""
    sites = {s: Site(id=s, seeds=frozenset({"g"}) if s == "A" else frozenset())
             for s in ["A", "M", "B", "C"]}
    channels = {
        "g1": Channel(id="g1", inputs=("A",), outputs=("M",), subnet="inner",
                      flow=FlowSpec(drops=(Mitigation(
                          "g1.norm", frozenset({"g"}), conditional=True),))),
        "g2": Channel(id="g2", inputs=("M",), outputs=("B",), subnet="inner"),
        "tail": Channel(id="tail", inputs=("B",), outputs=("C",)),
    }
    return Network(sites=sites, channels=channels)


class TestCollapse:
    def test_interior_sites_absorbed(self):
        n = chain_with_group()
        collapsed = collapse(n, "inner")
        assert set(collapsed.channels) == {"inner", "tail"}
        assert set(collapsed.sites) == {"A", "B", "C"}
        abstract = collapsed.channels["inner"]
        assert abstract.inputs == ("A",)
        assert abstract.outputs == ("B",)
        assert abstract.definition is not None
        assert validate(collapsed).ok

    def test_single_channel_group_keeps_interface(self):
        n = chain_with_group()
        single = replace(n, channels={
            **n.channels,
            "g2": replace(n.channels["g2"], subnet=None),
        })
        collapsed = collapse(single, "inner")
        abstract = collapsed.channels["inner"]
        assert abstract.inputs == ("A",)
        assert abstract.outputs == ("M",)

    def test_unknown_group_rejected(self):
        with pytest.raises(CollapseError):
            collapse(chain_with_group(), "nope")

    def test_disconnected_group_rejected(self):
        n = chain_with_group()
        bad = replace(n, channels={
            **n.channels,
            "tail": replace(n.channels["tail"], subnet=None),
            "g2": replace(n.channels["g2"], subnet=None),
            # g1 stays 'inner'; add a far-away second member.
            "lone": Channel(id="lone", inputs=("C",), outputs=("D",),
                            subnet="inner"),
        }, sites={**n.sites, "D": Site(id="D")})
        with pytest.raises(CollapseError, match="not connected"):
            collapse(bad, "inner")

    def test_exterior_detour_back_into_group_rejected(self):
        # group produces M which an exterior channel routes back into it.
        sites = {s: Site(id=s) for s in ["A", "M", "X", "B"]}
        sites["A"] = Site(id="A", seeds=frozenset({"g"}))
        channels = {
            "g1": Channel(id="g1", inputs=("A",), outputs=("M",),
                          subnet="grp"),
            "out": Channel(id="out", inputs=("M",), outputs=("X",)),
            "g2": Channel(id="g2", inputs=("M", "X"), outputs=("B",),
                          subnet="grp"),
        }
        n = Network(sites=sites, channels=channels)
        assert validate(n).ok
        with pytest.raises(CollapseError, match="back into"):
            collapse(n, "grp")

    def test_expand_inverts_collapse(self):
        n = chain_with_group()
        collapsed = collapse(n, "inner")
        back = expand(collapsed, "inner")
        assert set(back.sites) == set(n.sites)
        assert set(back.channels) == set(n.channels)
        for cid in n.channels:
            assert back.channels[cid].inputs == n.channels[cid].inputs
            assert back.channels[cid].outputs == n.channels[cid].outputs
            assert back.channels[cid].flow == n.channels[cid].flow

    def test_expand_requires_definition(self):
        n = chain_with_group()
        with pytest.raises(CollapseError):
            expand(n, "tail")
        with pytest.raises(KeyError):
            expand(n, "ghost")

    def test_conditional_blocker_survives_abstraction(self):
        from ifm.analysis import trace_paths

        collapsed = collapse(chain_with_group(), "inner")
        result = trace_paths(collapsed, "A", "C", "g", Mode.PESSIMISTIC)
        assert [p.channels for p in result.paths] == [("inner", "tail")]
        assert result.paths[0].blockers == ("g1.norm",)
        assert trace_paths(collapsed, "A", "C", "g", Mode.OPTIMISTIC).paths \
            == ()


def random_collapsible(rng: random.Random) -> Network | None:
    """A random network with a convex connected channel group, or None."""
    n = build_random_network(rng, subnet_fraction=1.0)
    members = [cid for cid, ch in n.channels.items() if ch.subnet == "g"]
    if not members:
        return None
    return n


class TestAbstractionSoundness:
    def test_exterior_reachability_preserved(self):
        rng = random.Random(20240)
        checked = 0
        while checked < 200:
            n = random_collapsible(rng)
            if n is None:
                continue
            try:
                collapsed = collapse(n, "g")
            except CollapseError:
                continue  # non-convex or unread group: legitimately refused
            exterior = set(collapsed.sites)
            for mode in Mode:
                full = propagate_features(n, mode)
                abstracted = propagate_features(collapsed, mode)
                for site in exterior:
                    assert abstracted.tags(site) == full.tags(site), \
                        (mode, site)
            checked += 1

    def test_collapse_expand_round_trip_on_random_networks(self):
        rng = random.Random(20241)
        done = 0
        while done < 60:
            n = random_collapsible(rng)
            if n is None:
                continue
            try:
                collapsed = collapse(n, "g")
            except CollapseError:
                continue
            back = expand(collapsed, "g")
            assert set(back.sites) == set(n.sites)
            assert set(back.channels) == set(n.channels)
            for cid, ch in n.channels.items():
                assert back.channels[cid].flow == ch.flow
                assert back.channels[cid].inputs == ch.inputs
            done += 1
