"""Flow analysis over validated networks.

Feature tags spread downstream from their origins (seeded input sites and
introducing channels) through every channel that carries them, until a drop
removes them or nothing consumes them.  Stakeholder impact queries run the
other way: from a target site upstream to the origins that can reach it.
Where the two directions intersect, a risk path exists; verdicts classify
each query as OPEN (an unmitigated path exists), CONDITIONAL (every path
crosses a conditional mitigation) or CLOSED (no path at all).

Two evaluation modes bracket the effect of conditional mitigations:
OPTIMISTIC assumes they work, PESSIMISTIC assumes they do not.
Unconditional drops apply in both.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .model import (
    Channel,
    FlowSpec,
    FlowSummary,
    Introduce,
    Mitigation,
    Network,
    SummaryCarry,
    SummaryIntro,
    ValidationReport,
    _apply_variant,
    _raw_classes,
    expand_configurations,
    validate,
)

__all__ = [
    "Mode",
    "Verdict",
    "TagInstance",
    "FeatureMap",
    "OutcomeSpec",
    "ImpactPath",
    "TraceResult",
    "OutcomeAssessment",
    "ConfigurationAssessment",
    "AssessmentMatrix",
    "Edit",
    "EditError",
    "VerdictChange",
    "AssessmentDelta",
    "propagate_features",
    "downstream_of",
    "upstream_of",
    "trace_paths",
    "assess_outcome",
    "assess_all",
    "parse_edit",
    "apply_edits",
    "what_if",
    "summarize_as_channel",
]

DEFAULT_MAX_PATHS = 1000

# Stands for any tag a collapsed sub-network never mentions explicitly.
WILDCARD_TAG = "*"


class Mode(enum.Enum):
    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"


class Verdict(enum.Enum):
    OPEN = "OPEN"
    CONDITIONAL = "CONDITIONAL"
    CLOSED = "CLOSED"


def _drop_active(m: Mitigation, mode: Mode) -> bool:
    return not m.conditional or mode is Mode.OPTIMISTIC


# ---------------------------------------------------------------------------
# Tag instances and the feature map
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class TagInstance:
    """A feature tag at a site together with where it came from.

    ``chain`` records every proxy rename on the way: (channel, from, to).
    The lineage (origin tag plus every rename) is what impact queries match
    against, so a renamed tag still counts as its ancestor.
    """

    tag: str
    origin_kind: str  # "site" | "channel"
    origin_id: str
    origin_tag: str
    chain: tuple[tuple[str, str, str], ...] = ()

    def lineage_tags(self) -> frozenset[str]:
        tags = {self.origin_tag, self.tag}
        for _, src, dst in self.chain:
            tags.add(src)
            tags.add(dst)
        return frozenset(tags)

    def matches(self, tag: str | None) -> bool:
        return tag is None or tag in self.lineage_tags()


@dataclass(frozen=True)
class FeatureMap:
    """Which tag instances are present at each site."""

    instances: dict[str, frozenset[TagInstance]]

    def at(self, site: str) -> frozenset[TagInstance]:
        return self.instances.get(site, frozenset())

    def tags(self, site: str) -> frozenset[str]:
        return frozenset(inst.tag for inst in self.at(site))


# ---------------------------------------------------------------------------
# The per-channel transfer function (shared by every analysis below)
# ---------------------------------------------------------------------------

def _carry_allows(flow: FlowSpec, output: str, input: str, tag: str) -> bool:
    allowed = flow.carried_tags(output, input)
    return allowed is None or tag in allowed


def _dropped(flow: FlowSpec, output: str, tag: str, mode: Mode) -> bool:
    return any(tag in m.tags and m.applies_to_output(output)
               and _drop_active(m, mode) for m in flow.drops)


def _drop_blockers(flow: FlowSpec, output: str, tag: str) -> frozenset[str]:
    """Conditional mitigations that would remove ``tag`` at ``output``."""
    return frozenset(m.id for m in flow.drops
                     if m.conditional and tag in m.tags
                     and m.applies_to_output(output))


def _spec_steps(ch: Channel, flow: FlowSpec, input: str, tag: str,
                mode: Mode) -> list[tuple[str, str, frozenset[str]]]:
    """(output, out_tag, blockers) continuations for one incoming tag."""
    steps: list[tuple[str, str, frozenset[str]]] = []
    for output in ch.outputs:
        if not _carry_allows(flow, output, input, tag):
            continue
        if _dropped(flow, output, tag, mode):
            continue
        blockers = _drop_blockers(flow, output, tag)
        steps.append((output, tag, blockers))
        for proxy in flow.proxies:
            if proxy.source == tag and proxy.applies_to_output(output):
                steps.append((output, proxy.target, blockers))
    return steps


def _summary_steps(flow: FlowSummary, input: str, tag: str,
                   mode: Mode) -> list[tuple[str, str, frozenset[str]]]:
    steps: list[tuple[str, str, frozenset[str]]] = []
    for carry in flow.carries:
        if tag in flow.specific_tags:
            if carry.in_tag != tag:
                continue
            out_tag = carry.out_tag
        else:
            if carry.in_tag != WILDCARD_TAG:
                continue
            out_tag = tag
        if carry.input != input:
            continue
        if mode is Mode.OPTIMISTIC and not carry.unconditional:
            continue
        blockers = carry.blockers if mode is Mode.PESSIMISTIC else frozenset()
        steps.append((carry.output, out_tag, blockers))
    return steps


def _channel_steps(ch: Channel, input: str, tag: str,
                   mode: Mode) -> list[tuple[str, str, frozenset[str]]]:
    if isinstance(ch.flow, FlowSpec):
        return _spec_steps(ch, ch.flow, input, tag, mode)
    return _summary_steps(ch.flow, input, tag, mode)


def _intro_emissions(ch: Channel, mode: Mode) -> list[tuple[str, TagInstance]]:
    """(output site, instance) pairs for the channel's own introductions."""
    out: list[tuple[str, TagInstance]] = []
    if isinstance(ch.flow, FlowSpec):
        for intro in ch.flow.introduces:
            inst = TagInstance(intro.tag, "channel", ch.id, intro.tag)
            for output in ch.outputs:
                if intro.applies_to_output(output):
                    out.append((output, inst))
    else:
        for intro in ch.flow.introduces:
            if mode is Mode.OPTIMISTIC and not intro.unconditional:
                continue
            chain = ()
            if intro.origin_tag != intro.tag:
                chain = ((ch.id, intro.origin_tag, intro.tag),)
            out.append((intro.output, TagInstance(
                intro.tag, "channel", intro.origin, intro.origin_tag, chain)))
    return out


def _apply_channel(ch: Channel, incoming: dict[str, frozenset[TagInstance]],
                   mode: Mode, with_intros: bool) -> dict[str, set[TagInstance]]:
    emitted: dict[str, set[TagInstance]] = {o: set() for o in ch.outputs}
    for input in ch.inputs:
        for inst in incoming.get(input, frozenset()):
            for output, out_tag, _ in _channel_steps(ch, input, inst.tag, mode):
                if out_tag == inst.tag:
                    emitted[output].add(inst)
                else:
                    emitted[output].add(replace(
                        inst, tag=out_tag,
                        chain=inst.chain + ((ch.id, inst.tag, out_tag),)))
    if with_intros:
        for output, inst in _intro_emissions(ch, mode):
            emitted.setdefault(output, set()).add(inst)
    return emitted


# ---------------------------------------------------------------------------
# Downstream propagation
# ---------------------------------------------------------------------------

def _require_concrete(n: Network) -> None:
    if n.alternatives:
        raise ValueError(
            "network still contains alternatives "
            f"{sorted(n.alternatives)}; expand configurations first")


def _require_valid(n: Network) -> None:
    report = validate(n)
    if not report.ok:
        raise ValueError(f"network is invalid:\n{report}")


def _propagate(n: Network, mode: Mode, *, seed_sites: bool = True,
               with_intros: bool = True,
               inject: dict[str, frozenset[TagInstance]] | None = None,
               ) -> FeatureMap:
    order = n.topological_channels()
    if order is None:
        raise ValueError("network has a cycle")
    current: dict[str, set[TagInstance]] = {s: set() for s in n.sites}
    if seed_sites:
        for sid, site in n.sites.items():
            for tag in site.seeds:
                current[sid].add(TagInstance(tag, "site", sid, tag))
    if inject:
        for sid, insts in inject.items():
            current.setdefault(sid, set()).update(insts)
    for cid in order:
        ch = n.channels[cid]
        incoming = {i: frozenset(current.get(i, ())) for i in ch.inputs}
        for output, insts in _apply_channel(ch, incoming, mode,
                                            with_intros).items():
            current.setdefault(output, set()).update(insts)
    return FeatureMap({s: frozenset(v) for s, v in current.items()})


def propagate_features(n: Network, mode: Mode) -> FeatureMap:
    """Tag instances present at every site under the given mode."""
    _require_concrete(n)
    _require_valid(n)
    return _propagate(n, mode)


def _origin_markers(n: Network, origin: str, tag: str | None,
                    mode: Mode) -> dict[str, frozenset[TagInstance]]:
    """Initial instances for a downstream query rooted at ``origin``."""
    if origin in n.sites:
        if tag is not None:
            tags = {tag}
        else:
            full = _propagate(n, mode)
            tags = set(n.sites[origin].seeds) | set(full.tags(origin))
        return {origin: frozenset(
            TagInstance(t, "site", origin, t) for t in sorted(tags))}
    if origin in n.channels:
        ch = n.channels[origin]
        markers: dict[str, set[TagInstance]] = {}
        for output, inst in _intro_emissions(ch, mode):
            markers.setdefault(output, set()).add(inst)
        # Proxy re-emissions count as origins too: the channel puts the
        # renamed tag into the flow even though the information arrived.
        flow = ch.flow
        if isinstance(flow, FlowSpec) and flow.proxies:
            full = _propagate(n, mode)
            incoming = {i: full.at(i) for i in ch.inputs}
            for output, insts in _apply_channel(ch, incoming, mode,
                                                with_intros=False).items():
                for inst in insts:
                    if inst.chain and inst.chain[-1][0] == ch.id:
                        markers.setdefault(output, set()).add(inst)
        return {o: frozenset(v) for o, v in markers.items()}
    raise KeyError(f"unknown origin {origin!r}")


def downstream_of(n: Network, origin: str, tag: str | None = None,
                  mode: Mode = Mode.PESSIMISTIC) -> frozenset[str]:
    """Sites that receive information flowing out of ``origin``.

    For a site origin the query is hypothetical: it asks where ``tag``
    (or everything the site holds) would propagate from there.  The tag
    filter matches anywhere in an instance's lineage, so information that
    leaves the origin under one name and is later proxied into the queried
    one still counts.  The origin itself is not part of the answer.
    """
    _require_concrete(n)
    _require_valid(n)
    markers = _origin_markers(n, origin, tag, mode)
    marked = _propagate(n, mode, seed_sites=False, with_intros=False,
                        inject=markers)
    reached = {s for s, insts in marked.instances.items()
               if any(inst.matches(tag) for inst in insts)}
    reached.discard(origin)
    return frozenset(reached)


def upstream_of(n: Network, site: str, tag: str | None = None,
                mode: Mode = Mode.PESSIMISTIC) -> frozenset[str]:
    """Origins (seeded sites and introducing channels) whose information
    reaches ``site``; proxy re-emitters along the way count as origins."""
    _require_concrete(n)
    _require_valid(n)
    if site not in n.sites:
        raise KeyError(f"unknown site {site!r}")
    full = _propagate(n, mode)
    origins: set[str] = set()
    for inst in full.at(site):
        if not inst.matches(tag):
            continue
        origins.add(inst.origin_id)
        for channel_id, _, _ in inst.chain:
            origins.add(channel_id)
    classes = _raw_classes(n)
    if tag is None:
        if site in classes.inputs:
            origins.add(site)
    elif tag in n.sites[site].seeds:
        origins.add(site)
    return frozenset(origins)


# ---------------------------------------------------------------------------
# Path tracing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImpactPath:
    """One surviving route of a tag from an origin to a target site.

    ``sites`` is the site trace between the channels (leading with the
    origin site when the path starts at one); ``tags`` gives the carried
    tag at each site of that trace.  ``blockers`` are the conditional
    mitigations crossed that would cut the path if they work.
    """

    channels: tuple[str, ...]
    sites: tuple[str, ...]
    tags: tuple[str, ...]
    tag: str
    blockers: tuple[str, ...] = ()

    def carried_tags(self) -> frozenset[str]:
        return frozenset(self.tags) | {self.tag}


@dataclass(frozen=True)
class TraceResult:
    paths: tuple[ImpactPath, ...]
    truncated: bool = False


def trace_paths(n: Network, origin: str, target: str, tag: str,
                mode: Mode = Mode.PESSIMISTIC,
                max_paths: int = DEFAULT_MAX_PATHS) -> TraceResult:
    """Every simple channel path from ``origin`` to ``target`` on which
    ``tag`` (under possible proxy renames) survives, in lexicographic
    order of the channel id sequence."""
    _require_concrete(n)
    _require_valid(n)
    if target not in n.sites:
        raise KeyError(f"unknown target site {target!r}")
    if origin not in n.sites and origin not in n.channels:
        raise KeyError(f"unknown origin {origin!r}")

    consumers = n.consumers()
    found: list[ImpactPath] = []
    truncated = False
    seen_sequences: set[tuple[str, ...]] = set()

    def arrive(site: str, cur_tag: str, channels: list[str],
               sites: list[str], tags: list[str], blockers: set[str],
               lineage: frozenset[str]) -> bool:
        """Extend the walk from ``site``; returns False once truncated."""
        nonlocal truncated
        if site == target and channels and tag in lineage:
            seq = tuple(channels)
            if seq not in seen_sequences:
                if len(found) >= max_paths:
                    truncated = True
                    return False
                seen_sequences.add(seq)
                found.append(ImpactPath(
                    channels=seq, sites=tuple(sites), tags=tuple(tags),
                    tag=tag, blockers=tuple(sorted(blockers))))
            return True
        for cid in sorted(consumers.get(site, ())):
            ch = n.channels[cid]
            for output, out_tag, step_blockers in sorted(
                    _channel_steps(ch, site, cur_tag, mode)):
                ok = arrive(output, out_tag, channels + [cid],
                            sites + [output], tags + [out_tag],
                            blockers | set(step_blockers),
                            lineage | {out_tag})
                if not ok:
                    return False
        return True

    if origin in n.sites:
        arrive(origin, tag, [], [origin], [tag], set(), frozenset({tag}))
    else:
        ch = n.channels[origin]
        starts: set[tuple[str, str, frozenset[str]]] = set()
        for output, inst in _intro_emissions(ch, mode):
            starts.add((output, inst.tag, inst.lineage_tags()))
        flow = ch.flow
        if isinstance(flow, FlowSpec) and flow.proxies:
            full = _propagate(n, mode)
            incoming = {i: full.at(i) for i in ch.inputs}
            for output, insts in _apply_channel(ch, incoming, mode,
                                                with_intros=False).items():
                for inst in insts:
                    if inst.chain and inst.chain[-1][0] == ch.id:
                        starts.add((output, inst.tag, inst.lineage_tags()))
        for output, start_tag, lineage in sorted(
                starts, key=lambda s: (s[0], s[1], sorted(s[2]))):
            if not arrive(output, start_tag, [origin], [output], [start_tag],
                          set(), lineage | {start_tag}):
                break

    found.sort(key=lambda p: p.channels)
    return TraceResult(tuple(found), truncated)


# ---------------------------------------------------------------------------
# Outcome assessment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutcomeSpec:
    """A stakeholder impact query: do these tags structurally reach the
    target site, and across which mitigations?"""

    id: str
    target: str
    tags: frozenset[str]
    description: str = ""
    label: str = ""
    note: str = ""

    @property
    def display_label(self) -> str:
        return self.label or self.id


@dataclass(frozen=True)
class OutcomeAssessment:
    outcome_id: str
    label: str
    verdict: Verdict
    open_paths: tuple[ImpactPath, ...]
    unconditionally_open_paths: tuple[ImpactPath, ...]
    blocking_mitigations: tuple[str, ...]
    truncated: bool = False


def _matching_instances(fm: FeatureMap, outcome: OutcomeSpec) -> list[TagInstance]:
    return sorted(inst for inst in fm.at(outcome.target)
                  if inst.lineage_tags() & outcome.tags)


def _trace_entry(n: Network, origin_id: str) -> str | None:
    """Where a trace for this provenance origin starts: the origin itself,
    or the abstract channel whose summary absorbed it after a collapse."""
    if origin_id in n.sites or origin_id in n.channels:
        return origin_id
    for cid in sorted(n.channels):
        flow = n.channels[cid].flow
        if isinstance(flow, FlowSummary) and \
                any(i.origin == origin_id for i in flow.introduces):
            return cid
    return None


def _witness_paths(n: Network, outcome: OutcomeSpec, mode: Mode,
                   fm: FeatureMap, max_paths: int,
                   ) -> tuple[tuple[ImpactPath, ...], bool]:
    pairs = sorted({(inst.origin_id, inst.origin_tag)
                    for inst in _matching_instances(fm, outcome)})
    paths: list[ImpactPath] = []
    seen: set[tuple[str, ...]] = set()
    truncated = False
    for origin, origin_tag in pairs:
        entry = _trace_entry(n, origin)
        if entry is None:
            continue
        result = trace_paths(n, entry, outcome.target, origin_tag, mode,
                             max_paths)
        truncated = truncated or result.truncated
        for path in result.paths:
            if not path.carried_tags() & outcome.tags:
                continue
            if path.channels in seen:
                continue
            seen.add(path.channels)
            paths.append(path)
    paths.sort(key=lambda p: p.channels)
    if len(paths) > max_paths:
        paths = paths[:max_paths]
        truncated = True
    return tuple(paths), truncated


def assess_outcome(n: Network, outcome: OutcomeSpec,
                   max_paths: int = DEFAULT_MAX_PATHS) -> OutcomeAssessment:
    """Verdict plus witnessing paths for a single impact query.

    The verdict comes from exact reachability and never depends on the
    path cap; the path lists are the (possibly truncated) witnesses.
    """
    _require_concrete(n)
    _require_valid(n)
    if outcome.target not in n.sites:
        raise KeyError(f"outcome {outcome.id}: unknown target site "
                       f"{outcome.target!r}")
    # Tags nothing in the network can ever produce are vacuously CLOSED;
    # the DSL layer diagnoses outcome-tag typos against the authored
    # vocabulary, and what-if edits may legitimately erase a tag's last
    # source.

    pess_map = _propagate(n, Mode.PESSIMISTIC)
    opt_map = _propagate(n, Mode.OPTIMISTIC)
    pess_hit = bool(_matching_instances(pess_map, outcome))
    opt_hit = bool(_matching_instances(opt_map, outcome))

    if opt_hit:
        verdict = Verdict.OPEN
    elif pess_hit:
        verdict = Verdict.CONDITIONAL
    else:
        verdict = Verdict.CLOSED

    open_paths, trunc_p = _witness_paths(n, outcome, Mode.PESSIMISTIC,
                                         pess_map, max_paths)
    opt_paths, trunc_o = _witness_paths(n, outcome, Mode.OPTIMISTIC,
                                        opt_map, max_paths)
    blocking = sorted({m for p in open_paths for m in p.blockers})
    return OutcomeAssessment(
        outcome_id=outcome.id,
        label=outcome.display_label,
        verdict=verdict,
        open_paths=open_paths,
        unconditionally_open_paths=opt_paths,
        blocking_mitigations=tuple(blocking),
        truncated=trunc_p or trunc_o,
    )


@dataclass(frozen=True)
class ConfigurationAssessment:
    name: str
    assignment: dict[str, str]
    valid: bool
    violations: tuple[str, ...]
    assessments: tuple[OutcomeAssessment, ...]


@dataclass(frozen=True)
class AssessmentMatrix:
    configurations: tuple[ConfigurationAssessment, ...]
    any_open: dict[str, bool]

    def strictest(self) -> Verdict:
        order = {Verdict.CLOSED: 0, Verdict.CONDITIONAL: 1, Verdict.OPEN: 2}
        worst = Verdict.CLOSED
        for config in self.configurations:
            for a in config.assessments:
                if order[a.verdict] > order[worst]:
                    worst = a.verdict
        return worst


def assess_all(n: Network, outcomes: list[OutcomeSpec] | tuple[OutcomeSpec, ...],
               max_paths: int = DEFAULT_MAX_PATHS) -> AssessmentMatrix:
    """Assess every outcome in every alternative configuration."""
    configs = expand_configurations(n)
    rows: list[ConfigurationAssessment] = []
    any_open: dict[str, bool] = {o.id: False for o in outcomes}
    for config in sorted(configs, key=lambda c: c.name):
        if not config.report.ok:
            rows.append(ConfigurationAssessment(
                name=config.name, assignment=config.assignment, valid=False,
                violations=tuple(str(v) for v in config.report.violations),
                assessments=()))
            continue
        assessments = tuple(assess_outcome(config.network, o, max_paths)
                            for o in outcomes)
        for a in assessments:
            if a.verdict is Verdict.OPEN:
                any_open[a.outcome_id] = True
        rows.append(ConfigurationAssessment(
            name=config.name, assignment=config.assignment, valid=True,
            violations=(), assessments=assessments))
    return AssessmentMatrix(tuple(rows), any_open)


# ---------------------------------------------------------------------------
# What-if edits
# ---------------------------------------------------------------------------

class EditError(ValueError):
    """An edit that cannot be applied or that breaks the network."""

    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Edit:
    """One structural what-if edit, parsed from its colon-separated form."""

    kind: str
    args: tuple[str, ...]

    def spec(self) -> str:
        return ":".join((self.kind,) + self.args)


_EDIT_ARITY = {
    "remove-mitigation": 1,
    "add-mitigation": (2, 3),
    "disable-channel": 1,
    "seed": 2,
    "unseed": 2,
    "remove-introduce": 2,
    "add-introduce": 3,
    "choose": 2,
}


def parse_edit(spec: str) -> Edit:
    parts = spec.split(":")
    kind, args = parts[0], tuple(parts[1:])
    arity = _EDIT_ARITY.get(kind)
    if arity is None:
        raise EditError(f"unknown edit kind {kind!r} in {spec!r}; expected "
                        f"one of {sorted(_EDIT_ARITY)}")
    if isinstance(arity, int):
        ok = len(args) == arity
    else:
        ok = len(args) in arity
    if not ok:
        raise EditError(f"edit {spec!r} has wrong number of arguments")
    return Edit(kind, args)


def _apply_edit(n: Network, edit: Edit) -> Network:
    channels = dict(n.channels)
    sites = dict(n.sites)
    if edit.kind == "remove-mitigation":
        mid = edit.args[0]
        index = n.mitigation_index()
        if mid not in index:
            raise EditError(f"unknown mitigation {mid!r}")
        cid, _ = index[mid]
        ch = channels[cid]
        flow = ch.flow
        assert isinstance(flow, FlowSpec)
        channels[cid] = replace(ch, flow=replace(
            flow, drops=tuple(m for m in flow.drops if m.id != mid)))
    elif edit.kind == "add-mitigation":
        cid, tags = edit.args[0], edit.args[1]
        conditional = len(edit.args) > 2 and edit.args[2] == "conditional"
        if cid not in channels:
            raise EditError(f"unknown channel {cid!r}")
        ch = channels[cid]
        if not isinstance(ch.flow, FlowSpec):
            raise EditError(f"channel {cid!r} is abstract; expand it first")
        existing = set(n.mitigation_index())
        serial = 1
        while f"{cid}.whatif{serial}" in existing:
            serial += 1
        mit = Mitigation(id=f"{cid}.whatif{serial}",
                         tags=frozenset(tags.split(",")),
                         conditional=conditional)
        channels[cid] = replace(ch, flow=replace(
            ch.flow, drops=ch.flow.drops + (mit,)))
    elif edit.kind == "disable-channel":
        cid = edit.args[0]
        if cid not in channels:
            raise EditError(f"unknown channel {cid!r}")
        del channels[cid]
    elif edit.kind in ("seed", "unseed"):
        sid, tag = edit.args
        if sid not in sites:
            raise EditError(f"unknown site {sid!r}")
        seeds = set(sites[sid].seeds)
        if edit.kind == "seed":
            seeds.add(tag)
        else:
            seeds.discard(tag)
        sites[sid] = replace(sites[sid], seeds=frozenset(seeds))
    elif edit.kind == "remove-introduce":
        cid, tag = edit.args
        if cid not in channels:
            raise EditError(f"unknown channel {cid!r}")
        ch = channels[cid]
        if not isinstance(ch.flow, FlowSpec):
            raise EditError(f"channel {cid!r} is abstract; expand it first")
        kept = tuple(i for i in ch.flow.introduces if i.tag != tag)
        if len(kept) == len(ch.flow.introduces):
            raise EditError(f"channel {cid!r} does not introduce {tag!r}")
        channels[cid] = replace(ch, flow=replace(ch.flow, introduces=kept))
    elif edit.kind == "add-introduce":
        cid, tag, kind = edit.args
        if cid not in channels:
            raise EditError(f"unknown channel {cid!r}")
        ch = channels[cid]
        if not isinstance(ch.flow, FlowSpec):
            raise EditError(f"channel {cid!r} is abstract; expand it first")
        channels[cid] = replace(ch, flow=replace(
            ch.flow, introduces=ch.flow.introduces + (Introduce(tag, kind),)))
    return replace(n, channels=channels, sites=sites)


def apply_edits(n: Network, edits: list[Edit] | tuple[Edit, ...]) -> Network:
    """Apply edits in order and validate the result."""
    edited = n
    for edit in edits:
        if edit.kind == "choose":
            # Pinning a variant replaces the alternative with the choice.
            aid, variant = edit.args
            alt = edited.alternatives.get(aid)
            if alt is None:
                raise EditError(f"unknown alternative {aid!r}")
            chosen = next((v for v in alt.variants if v.name == variant), None)
            if chosen is None:
                raise EditError(
                    f"alternative {aid!r} has no variant {variant!r}")
            resolved = _apply_variant(edited, alt, chosen)
            alternatives = dict(resolved.alternatives)
            alternatives.pop(aid, None)
            edited = replace(resolved, alternatives=alternatives)
        else:
            edited = _apply_edit(edited, edit)
    report = validate(edited)
    if not report.ok:
        raise EditError(f"edits produce an invalid network:\n{report}",
                        report=report)
    return edited


@dataclass(frozen=True)
class VerdictChange:
    configuration: str
    outcome_id: str
    before: Verdict | None
    after: Verdict | None
    opened_paths: tuple[tuple[str, ...], ...] = ()
    closed_paths: tuple[tuple[str, ...], ...] = ()


@dataclass(frozen=True)
class AssessmentDelta:
    edits: tuple[Edit, ...]
    before: AssessmentMatrix
    after: AssessmentMatrix
    changes: tuple[VerdictChange, ...]

    @property
    def empty(self) -> bool:
        return not self.changes


def what_if(n: Network, edits: list[Edit] | tuple[Edit, ...],
            outcomes: list[OutcomeSpec] | tuple[OutcomeSpec, ...],
            max_paths: int = DEFAULT_MAX_PATHS) -> AssessmentDelta:
    """Before/after assessment of a set of edits; the input network is
    left untouched."""
    before = assess_all(n, outcomes, max_paths)
    after = assess_all(apply_edits(n, tuple(edits)), outcomes, max_paths)

    def rows(matrix: AssessmentMatrix) -> dict[tuple[str, str], OutcomeAssessment]:
        return {(c.name, a.outcome_id): a
                for c in matrix.configurations for a in c.assessments}

    rows_before = rows(before)
    rows_after = rows(after)
    changes: list[VerdictChange] = []
    for key in sorted(set(rows_before) | set(rows_after)):
        b = rows_before.get(key)
        a = rows_after.get(key)
        paths_b = {p.channels for p in b.open_paths} if b else set()
        paths_a = {p.channels for p in a.open_paths} if a else set()
        verdict_b = b.verdict if b else None
        verdict_a = a.verdict if a else None
        if verdict_b == verdict_a and paths_b == paths_a:
            continue
        changes.append(VerdictChange(
            configuration=key[0], outcome_id=key[1],
            before=verdict_b, after=verdict_a,
            opened_paths=tuple(sorted(paths_a - paths_b)),
            closed_paths=tuple(sorted(paths_b - paths_a))))
    return AssessmentDelta(tuple(edits), before, after, tuple(changes))


# ---------------------------------------------------------------------------
# Sub-network summaries (for nesting)
# ---------------------------------------------------------------------------

def _fresh_tag(taken: frozenset[str]) -> str:
    candidate = "__probe__"
    while candidate in taken:
        candidate += "_"
    return candidate


def _reaches(n: Network, input: str, tag: str, mode: Mode,
             outputs: frozenset[str]) -> set[tuple[str, str]]:
    """(output site, arriving tag) pairs for one injected input tag."""
    inject = {input: frozenset({TagInstance(tag, "site", input, tag)})}
    fm = _propagate(n, mode, seed_sites=False, with_intros=False,
                    inject=inject)
    pairs: set[tuple[str, str]] = set()
    for out in outputs:
        for inst in fm.at(out):
            pairs.add((out, inst.tag))
    return pairs


def _interior_blockers(n: Network, origin: str, target: str, tag: str,
                       final_tag: str) -> frozenset[str]:
    result = trace_paths(n, origin, target, tag, Mode.PESSIMISTIC)
    blockers: set[str] = set()
    for path in result.paths:
        if path.tags and path.tags[-1] != final_tag:
            continue
        blockers.update(path.blockers)
    return frozenset(blockers)


def summarize_as_channel(n: Network,
                         outputs: frozenset[str] | None = None) -> FlowSummary:
    """Condense a network's interior into the flow behaviour of a single
    channel from its input sites to its output sites.

    ``outputs`` widens the summarized interface beyond Out(n); collapsing
    uses it for boundary sites that are read both inside and outside the
    group.  Tags the interior never mentions are summarized once through a
    probe tag and recorded as wildcard carries; seeds on the input sites
    are interface slots here, not injected content.
    """
    _require_concrete(n)
    _require_valid(n)
    classes = _raw_classes(n)
    if outputs is None:
        outputs = classes.outputs
    known = n.mentioned_tags()
    probe = _fresh_tag(known)

    carries: list[SummaryCarry] = []
    for input in sorted(classes.inputs):
        for tag in sorted(known) + [probe]:
            pess = _reaches(n, input, tag, Mode.PESSIMISTIC, outputs)
            opt = _reaches(n, input, tag, Mode.OPTIMISTIC, outputs)
            for output, out_tag in sorted(pess):
                unconditional = (output, out_tag) in opt
                blockers = frozenset()
                if not unconditional:
                    blockers = _interior_blockers(n, input, output, tag,
                                                  out_tag)
                in_name = WILDCARD_TAG if tag == probe else tag
                out_name = WILDCARD_TAG if out_tag == probe else out_tag
                carries.append(SummaryCarry(
                    input=input, in_tag=in_name, output=output,
                    out_tag=out_name, unconditional=unconditional,
                    blockers=blockers))

    intro_decls: dict[tuple[str, str], str] = {}
    for cid in sorted(n.channels):
        flow = n.channels[cid].flow
        if isinstance(flow, FlowSpec):
            for intro in flow.introduces:
                intro_decls[(cid, intro.tag)] = intro.kind
        else:
            for intro in flow.introduces:
                intro_decls[(intro.origin, intro.origin_tag)] = intro.kind

    intros: list[SummaryIntro] = []
    pess_fm = _propagate(n, Mode.PESSIMISTIC, seed_sites=False)
    opt_fm = _propagate(n, Mode.OPTIMISTIC, seed_sites=False)
    opt_keys = {(out, inst.tag, inst.origin_id, inst.origin_tag)
                for out in outputs for inst in opt_fm.at(out)}
    for out in sorted(outputs):
        for inst in sorted(pess_fm.at(out)):
            unconditional = (out, inst.tag, inst.origin_id,
                             inst.origin_tag) in opt_keys
            blockers = frozenset()
            if not unconditional:
                blockers = _interior_blockers(n, inst.origin_id, out,
                                              inst.origin_tag, inst.tag)
            intros.append(SummaryIntro(
                output=out, tag=inst.tag,
                kind=intro_decls.get((inst.origin_id, inst.origin_tag), ""),
                origin=inst.origin_id, origin_tag=inst.origin_tag,
                unconditional=unconditional, blockers=blockers))

    return FlowSummary(carries=tuple(sorted(
        carries, key=lambda c: (c.input, c.in_tag, c.output, c.out_tag))),
        introduces=tuple(sorted(
            intros, key=lambda i: (i.output, i.tag, i.origin))),
        specific_tags=known)
