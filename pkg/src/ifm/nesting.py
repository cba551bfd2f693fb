"""Collapse a sub-network into one abstract channel and expand it back.

Collapsing keeps the full sub-network on the abstract channel's
``definition`` field and equips the channel with a computed flow summary,
so analysis on the collapsed network sees the same reachability for every
exterior site as analysis on the original.
"""

from __future__ import annotations

from dataclasses import replace

from .analysis import summarize_as_channel
from .model import Channel, Network, Toggle, validate

__all__ = ["collapse", "expand", "CollapseError"]


class CollapseError(ValueError):
    """The named sub-network has no well-defined channel interface."""


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name)


def _member_channels(n: Network, subnet: str) -> list[str]:
    return sorted(cid for cid, ch in n.channels.items() if ch.subnet == subnet)


def _weakly_connected(n: Network, members: list[str]) -> bool:
    if len(members) <= 1:
        return True
    touch: dict[str, set[str]] = {}
    for cid in members:
        ch = n.channels[cid]
        for s in list(ch.inputs) + list(ch.outputs):
            touch.setdefault(s, set()).add(cid)
    seen = {members[0]}
    frontier = [members[0]]
    while frontier:
        cur = frontier.pop()
        ch = n.channels[cur]
        for s in list(ch.inputs) + list(ch.outputs):
            for other in touch.get(s, ()):
                if other not in seen:
                    seen.add(other)
                    frontier.append(other)
    return seen == set(members)


def _exterior_path_back(n: Network, members: set[str],
                        boundary_outputs: set[str]) -> list[str] | None:
    """A site path leaving the group through exterior channels and
    re-entering it, if one exists (the group is not convex in the DAG)."""
    consumers = n.consumers()
    frontier = [(s, [s]) for s in sorted(boundary_outputs)]
    seen = set(boundary_outputs)
    while frontier:
        site, path = frontier.pop(0)
        for cid in sorted(consumers.get(site, ())):
            if cid in members:
                if len(path) > 1:
                    return path
                continue
            for out in sorted(n.channels[cid].outputs):
                if out not in seen:
                    seen.add(out)
                    frontier.append((out, path + [out]))
    return None


def collapse(n: Network, subnet: str, channel_id: str | None = None,
             name: str | None = None,
             parent_subnet: str | None = None) -> Network:
    """Replace the channels grouped under ``subnet`` with one abstract
    channel whose definition retains the sub-network."""
    members = _member_channels(n, subnet)
    if not members:
        raise CollapseError(f"no channels belong to sub-network {subnet!r}")
    report = validate(n)
    if not report.ok:
        raise CollapseError(f"cannot collapse an invalid network:\n{report}")
    if not _weakly_connected(n, members):
        raise CollapseError(f"sub-network {subnet!r} is not connected")

    member_set = set(members)
    produced: set[str] = set()
    consumed: set[str] = set()
    for cid in members:
        produced.update(n.channels[cid].outputs)
        consumed.update(n.channels[cid].inputs)
    boundary_inputs = sorted(consumed - produced)
    exterior_consumers = {
        s for s in produced
        for c in n.consumers().get(s, ()) if c not in member_set
    }
    never_consumed = {s for s in produced if not n.consumers().get(s)}
    boundary_outputs = sorted(exterior_consumers | never_consumed)
    interior = sorted(produced - set(boundary_outputs))
    if not boundary_outputs:
        raise CollapseError(
            f"sub-network {subnet!r} produces nothing the outside reads")

    back = _exterior_path_back(n, member_set, set(boundary_outputs))
    if back:
        raise CollapseError(
            f"sub-network {subnet!r} has an exterior path back into it "
            f"({','.join(back)}); collapsing would create a cycle")

    # Alternatives may only touch the boundary: an edge into the group is
    # rewritten onto the abstract channel, anything interior is rejected.
    new_id = channel_id or _slug(subnet)
    rewritten_alts = {}
    for aid, alt in n.alternatives.items():
        variants = []
        for variant in alt.variants:
            toggles = set()
            for toggle in variant.toggles:
                if toggle.kind == "channel" and toggle.ref[0] in member_set:
                    raise CollapseError(
                        f"alternative {aid} toggles interior channel "
                        f"{toggle.ref[0]}")
                if toggle.kind == "mitigation":
                    owner = n.mitigation_index().get(toggle.ref[0])
                    if owner and owner[0] in member_set:
                        raise CollapseError(
                            f"alternative {aid} toggles interior mitigation "
                            f"{toggle.ref[0]}")
                if toggle.kind == "edge" and toggle.ref[1] in member_set:
                    site = toggle.ref[0]
                    feeds = [cid for cid in members
                             if site in n.channels[cid].inputs]
                    if len(feeds) != 1:
                        raise CollapseError(
                            f"alternative {aid} toggles edge {site} -> "
                            f"{toggle.ref[1]} but {site} feeds several "
                            f"interior channels")
                    toggle = Toggle("edge", (site, new_id))
                toggles.add(toggle)
            variants.append(replace(variant, toggles=frozenset(toggles)))
        rewritten_alts[aid] = replace(alt, variants=tuple(variants))

    definition_sites = {
        sid: n.sites[sid] for sid in boundary_inputs + sorted(produced)
    }
    definition = Network(
        sites=definition_sites,
        channels={cid: n.channels[cid] for cid in members},
        alternatives={},
        type_system=n.type_system,
    )
    if new_id in n.channels and new_id not in member_set:
        raise CollapseError(f"channel id {new_id!r} already exists")

    summary = summarize_as_channel(definition,
                                   outputs=frozenset(boundary_outputs))
    abstract = Channel(
        id=new_id,
        name=name or subnet,
        inputs=tuple(boundary_inputs),
        outputs=tuple(boundary_outputs),
        subnet=parent_subnet,
        flow=summary,
        bias_kinds=frozenset().union(
            *(n.channels[cid].bias_kinds for cid in members)),
        definition=definition,
    )

    sites = {sid: s for sid, s in n.sites.items() if sid not in interior}
    channels = {cid: ch for cid, ch in n.channels.items()
                if cid not in member_set}
    channels[new_id] = abstract
    return replace(n, sites=sites, channels=channels,
                   alternatives=rewritten_alts)


def expand(n: Network, channel_id: str) -> Network:
    """Splice an abstract channel's definition back into the network."""
    ch = n.channels.get(channel_id)
    if ch is None:
        raise KeyError(f"unknown channel {channel_id!r}")
    if ch.definition is None:
        raise CollapseError(f"channel {channel_id!r} has no definition")
    definition = ch.definition

    for cid in definition.channels:
        if cid in n.channels and cid != channel_id:
            raise CollapseError(
                f"cannot expand {channel_id!r}: channel id {cid!r} "
                f"already exists outside the definition")
    boundary = set(ch.inputs) | set(ch.outputs)
    for sid in definition.sites:
        if sid in n.sites and sid not in boundary:
            raise CollapseError(
                f"cannot expand {channel_id!r}: site id {sid!r} "
                f"already exists outside the definition")

    sites = dict(n.sites)
    for sid, site in definition.sites.items():
        sites.setdefault(sid, site)
    channels = {cid: c for cid, c in n.channels.items() if cid != channel_id}
    channels.update(definition.channels)

    alternatives = {}
    for aid, alt in n.alternatives.items():
        variants = []
        for variant in alt.variants:
            toggles = set()
            for toggle in variant.toggles:
                if toggle.kind == "edge" and toggle.ref[1] == channel_id:
                    site = toggle.ref[0]
                    feeds = sorted(
                        cid for cid, c in definition.channels.items()
                        if site in c.inputs)
                    if len(feeds) != 1:
                        raise CollapseError(
                            f"alternative {aid} toggles edge {site} -> "
                            f"{channel_id} but {site} feeds several "
                            f"definition channels")
                    toggle = Toggle("edge", (site, feeds[0]))
                toggles.add(toggle)
            variants.append(replace(variant, toggles=frozenset(toggles)))
        alternatives[aid] = replace(alt, variants=tuple(variants))

    return replace(n, sites=sites, channels=channels,
                   alternatives=alternatives)
