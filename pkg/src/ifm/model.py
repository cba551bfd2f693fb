"""Core objects of an information-flow model and their structural operations.

A model is a directed acyclic network of *sites* (states of information) and
*channels* (transformations between sites).  Channels declare how feature
tags move across them: which input tags are carried to which outputs, which
are dropped by mitigations, which are introduced fresh, and which are
re-emitted under a proxy name.  Everything here is a plain immutable value;
the flow semantics live in :mod:`ifm.analysis`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

__all__ = [
    "Site",
    "Channel",
    "FlowSpec",
    "FlowSummary",
    "SummaryCarry",
    "SummaryIntro",
    "CarryRule",
    "Mitigation",
    "Introduce",
    "Proxy",
    "AlternativeSet",
    "Variant",
    "Toggle",
    "TypeSystem",
    "InferenceRule",
    "Network",
    "Configuration",
    "Violation",
    "ValidationReport",
    "SiteClasses",
    "check_type_system",
    "validate",
    "classify_sites",
    "infer_types",
    "expand_configurations",
]


# ---------------------------------------------------------------------------
# Flow declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mitigation:
    """A declared drop of feature tags at a channel (targeted information loss).

    ``conditional`` mitigations are assumed effective only in optimistic-mode
    analysis; unconditional drops apply in every mode.  ``outputs`` restricts
    the drop to the named output sites (empty = every output).
    """

    id: str
    tags: frozenset[str]
    conditional: bool = False
    note: str = ""
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(sorted(self.outputs)))

    def applies_to_output(self, output: str) -> bool:
        return not self.outputs or output in self.outputs


@dataclass(frozen=True)
class Introduce:
    """A feature tag originating at this channel, labeled with a bias kind."""

    tag: str
    kind: str
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(sorted(self.outputs)))

    def applies_to_output(self, output: str) -> bool:
        return not self.outputs or output in self.outputs


@dataclass(frozen=True)
class Proxy:
    """Re-emission of an incoming tag under a new name at this channel."""

    source: str
    target: str
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(sorted(self.outputs)))

    def applies_to_output(self, output: str) -> bool:
        return not self.outputs or output in self.outputs


@dataclass(frozen=True)
class CarryRule:
    """Explicit carry: which tags of one input reach one output.

    ``tags=None`` means every tag of that input.  Any carry rule for an
    output switches that output to explicit mode: inputs without a rule
    contribute nothing to it.
    """

    output: str
    input: str
    tags: frozenset[str] | None = None


@dataclass(frozen=True)
class FlowSpec:
    """Authored per-channel flow declaration.

    With no carry rules every output receives every tag of every input
    (conservative over-approximation of what the transformation may pass
    on).  Declaration order carries no meaning, so the tuples normalize to
    a canonical sort on construction.
    """

    carries: tuple[CarryRule, ...] = ()
    drops: tuple[Mitigation, ...] = ()
    introduces: tuple[Introduce, ...] = ()
    proxies: tuple[Proxy, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "carries", tuple(sorted(
            self.carries,
            key=lambda r: (r.output, r.input, r.tags is None,
                           tuple(sorted(r.tags or ()))))))
        object.__setattr__(self, "drops", tuple(sorted(
            self.drops, key=lambda m: m.id)))
        object.__setattr__(self, "introduces", tuple(sorted(
            self.introduces, key=lambda i: (i.tag, i.kind, i.outputs))))
        object.__setattr__(self, "proxies", tuple(sorted(
            self.proxies, key=lambda p: (p.source, p.target, p.outputs))))

    def explicit_outputs(self) -> frozenset[str]:
        return frozenset(rule.output for rule in self.carries)

    def carried_tags(self, output: str, input: str) -> frozenset[str] | None:
        """Tags of ``input`` allowed into ``output``; None means all."""
        if output not in self.explicit_outputs():
            return None
        allowed: set[str] = set()
        for rule in self.carries:
            if rule.output != output or rule.input != input:
                continue
            if rule.tags is None:
                return None
            allowed.update(rule.tags)
        return frozenset(allowed)


@dataclass(frozen=True)
class SummaryCarry:
    """One reachability edge of a collapsed sub-network: input tag to output tag.

    ``unconditional`` is True when the edge survives even with every
    conditional mitigation assumed effective; otherwise ``blockers`` names
    the interior mitigations standing in the way.
    """

    input: str
    in_tag: str
    output: str
    out_tag: str
    unconditional: bool
    blockers: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SummaryIntro:
    """An interior introduction that reaches an output of the sub-network."""

    output: str
    tag: str
    kind: str
    origin: str
    origin_tag: str
    unconditional: bool
    blockers: frozenset[str] = frozenset()


@dataclass(frozen=True)
class FlowSummary:
    """Computed flow behaviour of an abstract channel (a collapsed sub-network).

    ``specific_tags`` lists every tag summarized individually; a tag outside
    that set follows the wildcard carries (the interior never reacts to it),
    even when a specifically-probed tag produced no edge at all.
    """

    carries: tuple[SummaryCarry, ...] = ()
    introduces: tuple[SummaryIntro, ...] = ()
    specific_tags: frozenset[str] = frozenset()


# ---------------------------------------------------------------------------
# Sites, channels, alternatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Site:
    """A state or repository of information in the decision process."""

    id: str
    name: str = ""
    types: frozenset[str] = frozenset()
    actor: str | None = None
    seeds: frozenset[str] = frozenset()
    subnet: str | None = None

    @property
    def display_name(self) -> str:
        return self.name or self.id


@dataclass(frozen=True)
class Channel:
    """A directed transformation from input sites to output sites.

    ``definition`` optionally nests a whole network whose boundary sites
    share ids with this channel's inputs/outputs, making the channel an
    abstraction of that sub-network.
    """

    id: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    name: str = ""
    types: frozenset[str] = frozenset()
    actor: str | None = None
    subnet: str | None = None
    flow: FlowSpec | FlowSummary = field(default_factory=FlowSpec)
    bias_kinds: frozenset[str] = frozenset()
    definition: "Network | None" = None

    @property
    def display_name(self) -> str:
        return self.name or self.id

    def mitigations(self) -> tuple[Mitigation, ...]:
        return self.flow.drops if isinstance(self.flow, FlowSpec) else ()


@dataclass(frozen=True)
class Toggle:
    """A structural element an alternative may switch on or off.

    kind is one of ``edge`` (a site feeding a channel), ``channel``, or
    ``mitigation``; ``ref`` is ``(site, channel)`` for edges, else ``(id,)``.
    """

    kind: str
    ref: tuple[str, ...]

    def describe(self) -> str:
        if self.kind == "edge":
            return f"edge {self.ref[0]} -> {self.ref[1]}"
        return f"{self.kind} {self.ref[0]}"


@dataclass(frozen=True)
class Variant:
    name: str
    toggles: frozenset[Toggle] = frozenset()


@dataclass(frozen=True)
class AlternativeSet:
    """A ?-marked set of structural variants; one is chosen per configuration."""

    id: str
    variants: tuple[Variant, ...]

    @property
    def includes_absent(self) -> bool:
        return any(not v.toggles for v in self.variants)

    def toggle_universe(self) -> frozenset[Toggle]:
        out: set[Toggle] = set()
        for v in self.variants:
            out.update(v.toggles)
        return frozenset(out)


# ---------------------------------------------------------------------------
# Type system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InferenceRule:
    """A monotone Horn-style rule over one channel and its adjacent sites.

    Conditions are (kind, position, type) atoms with kind in
    {"channel", "input", "output"} and position an input/output index or
    None for "some".  The conclusion assigns a type to the channel or to an
    output position (None = every output).
    """

    id: str
    conditions: tuple[tuple[str, int | None, str], ...]
    conclusion_target: str  # "channel" or "output"
    conclusion_position: int | None
    conclusion_type: str


@dataclass(frozen=True)
class TypeSystem:
    types: frozenset[str] = frozenset()
    subtype_edges: frozenset[tuple[str, str]] = frozenset()  # (sub, super)
    rules: tuple[InferenceRule, ...] = ()

    def supertypes(self, t: str) -> frozenset[str]:
        """Reflexive-transitive closure of ``t`` upward along subtype edges."""
        seen = {t}
        frontier = [t]
        while frontier:
            cur = frontier.pop()
            for sub, sup in self.subtype_edges:
                if sub == cur and sup not in seen:
                    seen.add(sup)
                    frontier.append(sup)
        return frozenset(seen)

    def close_upward(self, assigned: frozenset[str]) -> frozenset[str]:
        out: set[str] = set()
        for t in assigned:
            out.update(self.supertypes(t))
        return frozenset(out)


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Network:
    """A DAG of sites and channels, possibly with unresolved alternatives.

    Treated as an immutable value: every operation returns a new Network.
    Dicts are keyed by id and compare order-insensitively.
    """

    sites: dict[str, Site] = field(default_factory=dict)
    channels: dict[str, Channel] = field(default_factory=dict)
    alternatives: dict[str, AlternativeSet] = field(default_factory=dict)
    type_system: TypeSystem = field(default_factory=TypeSystem)

    def site_ids(self) -> list[str]:
        return sorted(self.sites)

    def channel_ids(self) -> list[str]:
        return sorted(self.channels)

    def producer_of(self, site_id: str) -> str | None:
        for cid in sorted(self.channels):
            if site_id in self.channels[cid].outputs:
                return cid
        return None

    def producers(self) -> dict[str, list[str]]:
        """site id -> channel ids producing it (valid networks have <= 1)."""
        out: dict[str, list[str]] = {s: [] for s in self.sites}
        for cid in sorted(self.channels):
            for o in self.channels[cid].outputs:
                out.setdefault(o, []).append(cid)
        return out

    def consumers(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {s: [] for s in self.sites}
        for cid in sorted(self.channels):
            for i in self.channels[cid].inputs:
                out.setdefault(i, []).append(cid)
        return out

    def mitigation_index(self) -> dict[str, tuple[str, Mitigation]]:
        """mitigation id -> (channel id, Mitigation)."""
        out: dict[str, tuple[str, Mitigation]] = {}
        for cid in sorted(self.channels):
            for m in self.channels[cid].mitigations():
                out.setdefault(m.id, (cid, m))
        return out

    def known_tags(self) -> frozenset[str]:
        """Every feature tag the model can ever hold: seeds, introductions,
        and proxy targets (including those inside channel definitions)."""
        tags: set[str] = set()
        for site in self.sites.values():
            tags.update(site.seeds)
        for channel in self.channels.values():
            flow = channel.flow
            if isinstance(flow, FlowSpec):
                tags.update(i.tag for i in flow.introduces)
                tags.update(p.target for p in flow.proxies)
            else:
                tags.update(c.out_tag for c in flow.carries
                            if c.out_tag != "*")
                tags.update(i.tag for i in flow.introduces)
            if channel.definition is not None:
                tags.update(channel.definition.known_tags())
        return frozenset(tags)

    def mentioned_tags(self) -> frozenset[str]:
        """Every tag some flow declaration reacts to by name: seeds,
        introductions, proxy endpoints, dropped tags, carry lists."""
        tags: set[str] = set(self.known_tags())
        for channel in self.channels.values():
            flow = channel.flow
            if isinstance(flow, FlowSpec):
                for m in flow.drops:
                    tags.update(m.tags)
                for p in flow.proxies:
                    tags.add(p.source)
                for rule in flow.carries:
                    if rule.tags:
                        tags.update(rule.tags)
            else:
                tags.update(flow.specific_tags)
            if channel.definition is not None:
                tags.update(channel.definition.mentioned_tags())
        return frozenset(tags)

    def topological_channels(self) -> list[str] | None:
        """Channel ids in dependency order, or None if a cycle exists."""
        producer: dict[str, str] = {}
        for cid, ch in self.channels.items():
            for o in ch.outputs:
                producer[o] = cid
        indeg: dict[str, int] = {}
        deps: dict[str, set[str]] = {cid: set() for cid in self.channels}
        for cid, ch in self.channels.items():
            for i in ch.inputs:
                p = producer.get(i)
                if p is not None and p != cid:
                    deps[cid].add(p)
        out_edges: dict[str, set[str]] = {cid: set() for cid in self.channels}
        for cid, ds in deps.items():
            indeg[cid] = len(ds)
            for d in ds:
                out_edges[d].add(cid)
        ready = sorted(cid for cid, d in indeg.items() if d == 0)
        order: list[str] = []
        while ready:
            cur = ready.pop(0)
            order.append(cur)
            inserted = []
            for nxt in out_edges[cur]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    inserted.append(nxt)
            for nxt in sorted(inserted):
                ready.append(nxt)
            ready.sort()
        if len(order) != len(self.channels):
            return None
        return order


@dataclass(frozen=True)
class Configuration:
    """One alternative-free resolution of a network."""

    assignment: dict[str, str]
    network: Network
    report: "ValidationReport"

    @property
    def name(self) -> str:
        if not self.assignment:
            return "default"
        return ",".join(f"{a}={v}" for a, v in sorted(self.assignment.items()))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subjects: tuple[str, ...] = ()
    witness: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


@dataclass(frozen=True)
class SiteClasses:
    """Partition of sites into network inputs, outputs and intermediates."""

    inputs: frozenset[str]
    outputs: frozenset[str]
    mids: frozenset[str]


def check_type_system(ts: TypeSystem) -> list[Violation]:
    """Check that the subtype relation is a partial order and rule
    conclusions reference declared types."""
    violations: list[Violation] = []
    # Antisymmetry of the closure <=> no directed cycle among distinct types.
    adj: dict[str, set[str]] = {}
    for sub, sup in sorted(ts.subtype_edges):
        if sub != sup:
            adj.setdefault(sub, set()).add(sup)
    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    cycle: list[str] = []

    def visit(node: str, stack: list[str]) -> bool:
        state[node] = 1
        stack.append(node)
        for nxt in sorted(adj.get(node, ())):
            if state.get(nxt) == 1:
                cycle.extend(stack[stack.index(nxt):] + [nxt])
                return True
            if state.get(nxt) is None and visit(nxt, stack):
                return True
        stack.pop()
        state[node] = 2
        return False

    for start in sorted(adj):
        if state.get(start) is None and visit(start, []):
            violations.append(Violation(
                code="TYPE_CYCLE",
                message="subtype cycle " + ",".join(cycle),
                subjects=tuple(dict.fromkeys(cycle)),
                witness=tuple(cycle),
            ))
            break
    for rule in ts.rules:
        if rule.conclusion_type not in ts.types:
            violations.append(Violation(
                code="RULE_UNKNOWN_TYPE",
                message=f"rule {rule.id} concludes undeclared type "
                        f"{rule.conclusion_type}",
                subjects=(rule.id, rule.conclusion_type),
            ))
    return violations


def _check_definition_boundary(channel: Channel) -> list[Violation]:
    defn = channel.definition
    if defn is None:
        return []
    violations: list[Violation] = []
    classes = _raw_classes(defn)
    if classes.inputs != frozenset(channel.inputs):
        violations.append(Violation(
            code="NEST_BOUNDARY",
            message=f"channel {channel.id}: definition inputs "
                    f"{sorted(classes.inputs)} do not match declared inputs "
                    f"{sorted(channel.inputs)}",
            subjects=(channel.id,),
        ))
    if not frozenset(channel.outputs) <= (classes.outputs | classes.mids):
        violations.append(Violation(
            code="NEST_BOUNDARY",
            message=f"channel {channel.id}: declared outputs not produced "
                    f"by its definition",
            subjects=(channel.id,),
        ))
    return violations


def _raw_classes(n: Network) -> SiteClasses:
    produced: set[str] = set()
    consumed: set[str] = set()
    for ch in n.channels.values():
        produced.update(ch.outputs)
        consumed.update(ch.inputs)
    ins = frozenset(s for s in n.sites if s not in produced)
    # A site never consumed and never produced is a source nobody reads;
    # it stays on the input side so the three classes partition S.
    outs = frozenset(s for s in n.sites if s not in consumed and s in produced)
    mids = frozenset(n.sites) - ins - outs
    return SiteClasses(inputs=ins, outputs=outs, mids=mids)


def _find_cycle(n: Network) -> list[str] | None:
    """A site-level cycle witness [s0, s1, ..., s0], or None."""
    succ: dict[str, set[str]] = {s: set() for s in n.sites}
    for ch in n.channels.values():
        for i in ch.inputs:
            for o in ch.outputs:
                if i in n.sites and o in n.sites:
                    succ[i].add(o)
    state: dict[str, int] = {}

    def visit(node: str, stack: list[str]) -> list[str] | None:
        state[node] = 1
        stack.append(node)
        for nxt in sorted(succ.get(node, ())):
            if state.get(nxt) == 1:
                return stack[stack.index(nxt):] + [nxt]
            if state.get(nxt) is None:
                found = visit(nxt, stack)
                if found:
                    return found
        stack.pop()
        state[node] = 2
        return None

    for start in sorted(n.sites):
        if state.get(start) is None:
            found = visit(start, [])
            if found:
                return found
    return None


def validate(n: Network) -> ValidationReport:
    """Check every structural law; violations are data, not exceptions."""
    violations: list[Violation] = []

    for cid in sorted(n.channels):
        ch = n.channels[cid]
        if not ch.inputs:
            violations.append(Violation("EMPTY_ENDPOINTS",
                                        f"channel {cid} has no inputs", (cid,)))
        if not ch.outputs:
            violations.append(Violation("EMPTY_ENDPOINTS",
                                        f"channel {cid} has no outputs", (cid,)))
        for s in list(ch.inputs) + list(ch.outputs):
            if s not in n.sites:
                violations.append(Violation(
                    "DANGLING_REF",
                    f"channel {cid} references unknown site {s}", (cid, s)))
        overlap = set(ch.inputs) & set(ch.outputs)
        if overlap:
            violations.append(Violation(
                "IN_OUT_OVERLAP",
                f"channel {cid} uses {sorted(overlap)} as both input and output",
                (cid,) + tuple(sorted(overlap))))
        violations.extend(_check_definition_boundary(ch))
        violations.extend(_check_flow(n, ch))

    for sid, prods in sorted(n.producers().items()):
        if len(prods) > 1:
            violations.append(Violation(
                "DUAL_PRODUCER",
                f"site {sid} is the output of channels {sorted(prods)}",
                (sid,) + tuple(sorted(prods))))

    cycle = _find_cycle(n)
    if cycle:
        violations.append(Violation(
            "CYCLE", "cycle " + ",".join(cycle), tuple(dict.fromkeys(cycle)),
            witness=tuple(cycle)))

    produced = {o for ch in n.channels.values() for o in ch.outputs}
    for sid in sorted(n.sites):
        site = n.sites[sid]
        if site.seeds and sid in produced:
            violations.append(Violation(
                "SEEDED_NON_INPUT",
                f"site {sid} carries seed tags but is produced by a channel",
                (sid,)))
        for t in sorted(site.types):
            if n.type_system.types and t not in n.type_system.types:
                violations.append(Violation(
                    "TYPE_UNKNOWN", f"site {sid} has undeclared type {t}",
                    (sid, t)))
    for cid in sorted(n.channels):
        for t in sorted(n.channels[cid].types):
            if n.type_system.types and t not in n.type_system.types:
                violations.append(Violation(
                    "TYPE_UNKNOWN", f"channel {cid} has undeclared type {t}",
                    (cid, t)))

    violations.extend(_check_alternatives(n))
    violations.extend(check_type_system(n.type_system))
    return ValidationReport(tuple(violations))


def _check_flow(n: Network, ch: Channel) -> list[Violation]:
    flow = ch.flow
    if not isinstance(flow, FlowSpec):
        return []
    violations: list[Violation] = []
    dropped_by_output: dict[str, set[str]] = {}
    for m in flow.drops:
        if not m.tags:
            violations.append(Violation(
                "FLOW_CONFLICT", f"mitigation {m.id} at {ch.id} drops no tags",
                (ch.id, m.id)))
        for o in (m.outputs or ch.outputs):
            dropped_by_output.setdefault(o, set()).update(m.tags)
    for intro in flow.introduces:
        for o in (intro.outputs or ch.outputs):
            if intro.tag in dropped_by_output.get(o, ()):
                violations.append(Violation(
                    "FLOW_CONFLICT",
                    f"channel {ch.id} both introduces and drops tag "
                    f"{intro.tag} at {o}",
                    (ch.id, intro.tag, o)))
    for proxy in flow.proxies:
        if proxy.source == proxy.target:
            violations.append(Violation(
                "FLOW_CONFLICT",
                f"channel {ch.id} proxies tag {proxy.source} to itself",
                (ch.id, proxy.source)))
        for o in (proxy.outputs or ch.outputs):
            if proxy.target in dropped_by_output.get(o, ()):
                violations.append(Violation(
                    "FLOW_CONFLICT",
                    f"channel {ch.id} drops tag {proxy.target} but re-emits "
                    f"it as a proxy at {o}",
                    (ch.id, proxy.target, o)))
    for rule in flow.carries:
        if rule.output not in ch.outputs:
            violations.append(Violation(
                "DANGLING_REF",
                f"carry rule at {ch.id} names non-output {rule.output}",
                (ch.id, rule.output)))
        if rule.input not in ch.inputs:
            violations.append(Violation(
                "DANGLING_REF",
                f"carry rule at {ch.id} names non-input {rule.input}",
                (ch.id, rule.input)))
    for m in flow.drops:
        for o in m.outputs:
            if o not in ch.outputs:
                violations.append(Violation(
                    "DANGLING_REF",
                    f"mitigation {m.id} at {ch.id} names non-output {o}",
                    (ch.id, m.id, o)))
    for intro in flow.introduces:
        for o in intro.outputs:
            if o not in ch.outputs:
                violations.append(Violation(
                    "DANGLING_REF",
                    f"introduce at {ch.id} names non-output {o}",
                    (ch.id, intro.tag, o)))
    for proxy in flow.proxies:
        for o in proxy.outputs:
            if o not in ch.outputs:
                violations.append(Violation(
                    "DANGLING_REF",
                    f"proxy at {ch.id} names non-output {o}",
                    (ch.id, proxy.source, o)))
    return violations


def _check_alternatives(n: Network) -> list[Violation]:
    violations: list[Violation] = []
    mitigations = n.mitigation_index()
    for aid in sorted(n.alternatives):
        alt = n.alternatives[aid]
        if len(alt.variants) < 2:
            violations.append(Violation(
                "ALT_INVALID",
                f"alternative {aid} needs at least 2 variants "
                f"(counting the absent one)", (aid,)))
        names = [v.name for v in alt.variants]
        if len(names) != len(set(names)):
            violations.append(Violation(
                "ALT_INVALID", f"alternative {aid} has duplicate variant names",
                (aid,)))
        for toggle in sorted(alt.toggle_universe(),
                             key=lambda t: (t.kind, t.ref)):
            if toggle.kind == "channel":
                if toggle.ref[0] not in n.channels:
                    violations.append(Violation(
                        "DANGLING_REF",
                        f"alternative {aid} toggles unknown channel "
                        f"{toggle.ref[0]}", (aid, toggle.ref[0])))
            elif toggle.kind == "mitigation":
                if toggle.ref[0] not in mitigations:
                    violations.append(Violation(
                        "DANGLING_REF",
                        f"alternative {aid} toggles unknown mitigation "
                        f"{toggle.ref[0]}", (aid, toggle.ref[0])))
            elif toggle.kind == "edge":
                site, cid = toggle.ref
                ch = n.channels.get(cid)
                if ch is None or site not in ch.inputs:
                    violations.append(Violation(
                        "DANGLING_REF",
                        f"alternative {aid} toggles unknown edge "
                        f"{site} -> {cid}", (aid, site, cid)))
            else:
                violations.append(Violation(
                    "ALT_INVALID",
                    f"alternative {aid} has unknown toggle kind {toggle.kind}",
                    (aid, toggle.kind)))
    return violations


# ---------------------------------------------------------------------------
# Classification and type inference
# ---------------------------------------------------------------------------

def classify_sites(n: Network) -> SiteClasses:
    """Partition sites into inputs (produced by no channel), outputs
    (consumed by no channel) and intermediates."""
    report = validate(n)
    if not report.ok:
        raise ValueError(f"cannot classify an invalid network:\n{report}")
    return _raw_classes(n)


def _rule_matches(rule: InferenceRule, ch: Channel,
                  site_types: dict[str, frozenset[str]],
                  channel_types: frozenset[str]) -> bool:
    for kind, position, wanted in rule.conditions:
        if kind == "channel":
            if wanted not in channel_types:
                return False
        elif kind == "input":
            pool = ch.inputs if position is None else ch.inputs[position:position + 1]
            if not any(wanted in site_types.get(s, frozenset()) for s in pool):
                return False
        elif kind == "output":
            pool = ch.outputs if position is None else ch.outputs[position:position + 1]
            if not any(wanted in site_types.get(s, frozenset()) for s in pool):
                return False
        else:
            return False
    return True


def infer_types(n: Network) -> Network:
    """Least fixpoint of rule application, with every assignment closed
    upward under the subtype order."""
    ts = n.type_system
    problems = check_type_system(ts)
    if problems:
        raise ValueError("type system is inconsistent: "
                         + "; ".join(str(p) for p in problems))

    site_types: dict[str, frozenset[str]] = {
        sid: ts.close_upward(site.types) for sid, site in n.sites.items()
    }
    channel_types: dict[str, frozenset[str]] = {
        cid: ts.close_upward(ch.types) for cid, ch in n.channels.items()
    }

    changed = True
    while changed:
        changed = False
        for cid in sorted(n.channels):
            ch = n.channels[cid]
            for rule in ts.rules:
                if not _rule_matches(rule, ch, site_types, channel_types[cid]):
                    continue
                addition = ts.supertypes(rule.conclusion_type)
                if rule.conclusion_target == "channel":
                    if not addition <= channel_types[cid]:
                        channel_types[cid] = channel_types[cid] | addition
                        changed = True
                else:
                    targets = (ch.outputs if rule.conclusion_position is None
                               else ch.outputs[rule.conclusion_position:
                                               rule.conclusion_position + 1])
                    for out in targets:
                        if out in site_types and not addition <= site_types[out]:
                            site_types[out] = site_types[out] | addition
                            changed = True

    sites = {sid: replace(site, types=site_types[sid])
             for sid, site in n.sites.items()}
    channels = {cid: replace(ch, types=channel_types[cid])
                for cid, ch in n.channels.items()}
    return replace(n, sites=sites, channels=channels)


# ---------------------------------------------------------------------------
# Alternatives expansion
# ---------------------------------------------------------------------------

def _apply_variant(n: Network, alt: AlternativeSet, variant: Variant) -> Network:
    """Keep the chosen variant's toggles, remove every other toggle of the set."""
    disabled = alt.toggle_universe() - variant.toggles
    channels = dict(n.channels)
    for toggle in sorted(disabled, key=lambda t: (t.kind, t.ref)):
        if toggle.kind == "channel":
            channels.pop(toggle.ref[0], None)
        elif toggle.kind == "edge":
            site, cid = toggle.ref
            ch = channels.get(cid)
            if ch is not None:
                definition = ch.definition
                if definition is not None and site in definition.sites:
                    # Keep the nesting boundary law intact: the boundary
                    # site leaves the definition together with the edge.
                    def_channels = {
                        dcid: (replace(dch, inputs=tuple(
                            i for i in dch.inputs if i != site))
                            if site in dch.inputs else dch)
                        for dcid, dch in definition.channels.items()}
                    definition = replace(
                        definition,
                        sites={sid: s for sid, s in definition.sites.items()
                               if sid != site},
                        channels=def_channels)
                channels[cid] = replace(
                    ch, inputs=tuple(i for i in ch.inputs if i != site),
                    definition=definition)
        elif toggle.kind == "mitigation":
            mid = toggle.ref[0]
            for cid, ch in list(channels.items()):
                flow = ch.flow
                if isinstance(flow, FlowSpec) and any(m.id == mid for m in flow.drops):
                    channels[cid] = replace(ch, flow=replace(
                        flow, drops=tuple(m for m in flow.drops if m.id != mid)))
    return replace(n, channels=channels)


def expand_configurations(n: Network) -> list[Configuration]:
    """All alternative-free resolutions: the Cartesian product of variant
    choices, each validated individually."""
    alt_ids = sorted(n.alternatives)
    if not alt_ids:
        resolved = replace(n, alternatives={})
        return [Configuration({}, resolved, validate(resolved))]

    configs: list[Configuration] = []
    assignments: list[dict[str, str]] = [{}]
    for aid in alt_ids:
        alt = n.alternatives[aid]
        assignments = [dict(a, **{aid: v.name})
                       for a in assignments for v in alt.variants]
    for assignment in assignments:
        resolved = n
        for aid in alt_ids:
            alt = n.alternatives[aid]
            variant = next(v for v in alt.variants if v.name == assignment[aid])
            resolved = _apply_variant(resolved, alt, variant)
        resolved = replace(resolved, alternatives={})
        configs.append(Configuration(assignment, resolved, validate(resolved)))
    return configs
