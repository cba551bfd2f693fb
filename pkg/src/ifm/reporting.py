"""Audit-report rendering: transition tables, DOT diagrams, JSON documents.

Everything here is a pure function of a ReportDocument; identical documents
render to byte-identical output.  The JSON schema is documented in
docs/schema.md and versioned through ``schemaVersion``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .analysis import (
    AssessmentDelta,
    AssessmentMatrix,
    DEFAULT_MAX_PATHS,
    ImpactPath,
    OutcomeAssessment,
    Verdict,
    assess_all,
)
from .dsl import SourceModel, SubnetStyle
from .model import Channel, FlowSpec, FlowSummary, Network

__all__ = [
    "SCHEMA_VERSION",
    "ChannelRow",
    "ReportDocument",
    "build_report",
    "render_transition_table",
    "render_markdown",
    "render_csv",
    "render_dot",
    "export_json",
    "import_json",
    "whatif_dict",
    "whatif_json",
]

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class ChannelRow:
    id: str
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    actor: str
    subnet: str
    types: tuple[str, ...]
    bias_kinds: tuple[str, ...]
    mitigations: tuple[str, ...]
    impacts: tuple[str, ...]

    @property
    def transition(self) -> str:
        return f"{', '.join(self.inputs)} -> {', '.join(self.outputs)}"


@dataclass(frozen=True)
class ReportDocument:
    model: SourceModel
    matrix: AssessmentMatrix
    channel_rows: tuple[ChannelRow, ...]
    schema_version: str = SCHEMA_VERSION


def _channel_order(n: Network) -> list[str]:
    order = n.topological_channels()
    return order if order is not None else sorted(n.channels)


def _impact_labels(matrix: AssessmentMatrix, channel_id: str) -> tuple[str, ...]:
    """Outcome labels with an unconditionally open path through the channel."""
    labels: set[str] = set()
    for config in matrix.configurations:
        for assessment in config.assessments:
            for path in assessment.unconditionally_open_paths:
                if channel_id in path.channels:
                    labels.add(assessment.label)
    return tuple(sorted(labels))


def build_report(model: SourceModel,
                 matrix: AssessmentMatrix | None = None,
                 max_paths: int = DEFAULT_MAX_PATHS) -> ReportDocument:
    """Assess the model (unless a matrix is supplied) and lay out one row
    per channel in topological order."""
    if matrix is None:
        matrix = assess_all(model.network, list(model.outcomes), max_paths)
    rows = []
    network = model.network
    for cid in _channel_order(network):
        ch = network.channels[cid]
        mitigation_ids = tuple(sorted(m.id for m in ch.mitigations()))
        rows.append(ChannelRow(
            id=cid,
            name=ch.name,
            inputs=ch.inputs,
            outputs=ch.outputs,
            actor=ch.actor or "",
            subnet=ch.subnet or "",
            types=tuple(sorted(ch.types)),
            bias_kinds=tuple(sorted(ch.bias_kinds)),
            mitigations=mitigation_ids,
            impacts=_impact_labels(matrix, cid),
        ))
    return ReportDocument(model=model, matrix=matrix,
                          channel_rows=tuple(rows))


# ---------------------------------------------------------------------------
# Transition table
# ---------------------------------------------------------------------------

_TABLE_HEADER = ("#", "Transition", "Name", "Actor", "Sub-network",
                 "Potential bias", "Mitigations", "Impacts")


def _row_cells(row: ChannelRow) -> tuple[str, ...]:
    return (row.id, row.transition, row.name, row.actor, row.subnet,
            ", ".join(row.bias_kinds), ", ".join(row.mitigations),
            ", ".join(row.impacts))


def render_markdown(doc: ReportDocument) -> str:
    lines = ["| " + " | ".join(_TABLE_HEADER) + " |",
             "|" + "---|" * len(_TABLE_HEADER)]
    for row in doc.channel_rows:
        cells = [c.replace("|", "\\|") for c in _row_cells(row)]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("## Outcome assessments")
    lines.append("")
    for config in doc.matrix.configurations:
        lines.append(f"### Configuration `{config.name}`")
        lines.append("")
        if not config.valid:
            lines.append("Invalid configuration:")
            lines.extend(f"- {v}" for v in config.violations)
            lines.append("")
            continue
        for a in config.assessments:
            lines.append(f"- **{a.label}** ({a.outcome_id}): "
                         f"**{a.verdict.value}**")
            if a.verdict is Verdict.CONDITIONAL and a.blocking_mitigations:
                lines.append(f"  - open only if these mitigations fail: "
                             f"{', '.join(a.blocking_mitigations)}")
            for path in a.open_paths:
                marker = " (blocked by " + ", ".join(path.blockers) + ")" \
                    if path.blockers else ""
                lines.append(f"  - path: {' -> '.join(path.channels)}"
                             f"{marker}")
            if a.truncated:
                lines.append("  - path list truncated")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def render_csv(doc: ReportDocument) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, dialect="excel")  # RFC 4180 quoting, CRLF
    writer.writerow(_TABLE_HEADER)
    for row in doc.channel_rows:
        writer.writerow(_row_cells(row))
    return buffer.getvalue()


def render_transition_table(doc: ReportDocument) -> tuple[str, str]:
    """(markdown, csv) forms of the per-channel audit table."""
    return render_markdown(doc), render_csv(doc)


# ---------------------------------------------------------------------------
# DOT diagram
# ---------------------------------------------------------------------------

def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _is_junction(ch: Channel) -> bool:
    return len(ch.inputs) != 1 or len(ch.outputs) != 1


def _highlight_edges(doc: ReportDocument, outcome: str,
                     ) -> tuple[set[tuple[str, str]], set[tuple[str, str]]]:
    """(solid, dashed) highlighted site->site hops for an outcome id/label.

    A hop is keyed by (from node, to node) where channel junctions appear
    under their channel id.  Unconditionally open paths render solid,
    conditionally blocked ones dashed.
    """
    network = doc.model.network
    solid: set[tuple[str, str]] = set()
    dashed: set[tuple[str, str]] = set()

    def add(path: ImpactPath, bucket: set[tuple[str, str]]) -> None:
        sites = list(path.sites)
        channels = list(path.channels)
        if len(sites) == len(channels):  # origin is a channel: pad
            sites = [None] + sites
        for idx, cid in enumerate(channels):
            ch = network.channels.get(cid)
            if ch is None:
                continue
            source = sites[idx]
            target = sites[idx + 1]
            if _is_junction(ch):
                if source is not None:
                    bucket.add((source, f"channel:{cid}"))
                bucket.add((f"channel:{cid}", target))
            else:
                if source is not None:
                    bucket.add((source, target))
                else:
                    bucket.add((ch.inputs[0], target))

    for config in doc.matrix.configurations:
        for a in config.assessments:
            if outcome not in (a.outcome_id, a.label):
                continue
            unconditional = {p.channels for p in a.unconditionally_open_paths}
            for path in a.open_paths:
                add(path, solid if path.channels in unconditional else dashed)
    return solid, dashed


def render_dot(doc: ReportDocument, highlight: str | None = None) -> str:
    """Graphviz text: sites as ovals, channels as labeled edges (junction
    nodes when a channel has several inputs or outputs), sub-networks as
    clusters, open paths of the highlighted outcome marked in red."""
    network = doc.model.network
    styles = doc.model.subnet_styles
    solid, dashed = (set(), set())
    if highlight is not None:
        solid, dashed = _highlight_edges(doc, highlight)

    subnet_children: dict[str, list[str]] = {}
    roots: list[str] = []
    subnet_names = sorted({s.subnet for s in network.sites.values() if s.subnet}
                          | {c.subnet for c in network.channels.values()
                             if c.subnet}
                          | set(styles))
    for name in subnet_names:
        parent = styles.get(name, SubnetStyle(name)).within
        if parent and parent in subnet_names:
            subnet_children.setdefault(parent, []).append(name)
        else:
            roots.append(name)

    members: dict[str | None, list[str]] = {}
    for sid in sorted(network.sites):
        members.setdefault(network.sites[sid].subnet, []).append(f"site:{sid}")
    for cid in sorted(network.channels):
        if _is_junction(network.channels[cid]):
            members.setdefault(network.channels[cid].subnet,
                               []).append(f"channel:{cid}")

    lines = ["digraph ifm {", "  rankdir=LR;",
             "  node [fontname=\"Helvetica\"];"]

    def node_line(ref: str, indent: str) -> str:
        kind, ident = ref.split(":", 1)
        if kind == "site":
            site = network.sites[ident]
            label = site.display_name
            return (f"{indent}{_dot_quote(ref)} [shape=ellipse "
                    f"label={_dot_quote(label)}];")
        ch = network.channels[ident]
        label = f"{ident}: {ch.name}" if ch.name else ident
        return (f"{indent}{_dot_quote(ref)} [shape=box style=rounded "
                f"label={_dot_quote(label)}];")

    def emit_cluster(name: str, indent: str) -> None:
        style = styles.get(name, SubnetStyle(name))
        lines.append(f"{indent}subgraph {_dot_quote('cluster_' + name)} {{")
        lines.append(f"{indent}  label={_dot_quote(style.label or name)};")
        if style.color:
            lines.append(f"{indent}  color={_dot_quote(style.color)};")
        for child in sorted(subnet_children.get(name, ())):
            emit_cluster(child, indent + "  ")
        for ref in members.get(name, ()):
            lines.append(node_line(ref, indent + "  "))
        lines.append(f"{indent}}}")

    for name in sorted(roots):
        emit_cluster(name, "  ")
    for ref in members.get(None, ()):
        lines.append(node_line(ref, "  "))

    def edge_attrs(key: tuple[str, str], label: str | None) -> str:
        attrs = []
        if label:
            attrs.append(f"label={_dot_quote(label)}")
        if key in solid:
            attrs.extend(["color=\"#c62828\"", "penwidth=2.4"])
        elif key in dashed:
            attrs.extend(["color=\"#c62828\"", "penwidth=2.0",
                          "style=dashed"])
        return f" [{' '.join(attrs)}]" if attrs else ""

    for cid in sorted(network.channels):
        ch = network.channels[cid]
        label = f"{cid}: {ch.name}" if ch.name else cid
        if _is_junction(ch):
            ref = f"channel:{cid}"
            for source in ch.inputs:
                attrs = ["arrowhead=none"]
                if (source, ref) in solid:
                    attrs += ['color="#c62828"', "penwidth=2.4"]
                elif (source, ref) in dashed:
                    attrs += ['color="#c62828"', "penwidth=2.0",
                              "style=dashed"]
                lines.append(f"  {_dot_quote('site:' + source)} -> "
                             f"{_dot_quote(ref)} [{' '.join(attrs)}];")
            for target in ch.outputs:
                lines.append(f"  {_dot_quote(ref)} -> "
                             f"{_dot_quote('site:' + target)}"
                             f"{edge_attrs((ref, target), None)};")
        else:
            source, target = ch.inputs[0], ch.outputs[0]
            lines.append(f"  {_dot_quote('site:' + source)} -> "
                         f"{_dot_quote('site:' + target)}"
                         f"{edge_attrs((source, target), label)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON document
# ---------------------------------------------------------------------------

def _flow_dict(ch: Channel) -> dict:
    flow = ch.flow
    if isinstance(flow, FlowSpec):
        return {
            "kind": "spec",
            "carries": [{"output": r.output, "input": r.input,
                         "tags": sorted(r.tags) if r.tags is not None
                         else None}
                        for r in flow.carries],
            "drops": [{"id": m.id, "tags": sorted(m.tags),
                       "conditional": m.conditional, "note": m.note,
                       "outputs": list(m.outputs)}
                      for m in flow.drops],
            "introduces": [{"tag": i.tag, "kind": i.kind,
                            "outputs": list(i.outputs)}
                           for i in flow.introduces],
            "proxies": [{"source": p.source, "target": p.target,
                         "outputs": list(p.outputs)}
                        for p in flow.proxies],
        }
    assert isinstance(flow, FlowSummary)
    return {
        "kind": "summary",
        "carries": [{"input": c.input, "inTag": c.in_tag,
                     "output": c.output, "outTag": c.out_tag,
                     "unconditional": c.unconditional,
                     "blockers": sorted(c.blockers)}
                    for c in flow.carries],
        "introduces": [{"output": i.output, "tag": i.tag, "kind": i.kind,
                        "origin": i.origin, "originTag": i.origin_tag,
                        "unconditional": i.unconditional,
                        "blockers": sorted(i.blockers)}
                       for i in flow.introduces],
        "specificTags": sorted(flow.specific_tags),
    }


def _network_dict(n: Network) -> dict:
    return {
        "sites": [{
            "id": sid,
            "name": site.name,
            "types": sorted(site.types),
            "actor": site.actor,
            "subnet": site.subnet,
            "seeds": sorted(site.seeds),
        } for sid, site in sorted(n.sites.items())],
        "channels": [{
            "id": cid,
            "name": ch.name,
            "inputs": list(ch.inputs),
            "outputs": list(ch.outputs),
            "types": sorted(ch.types),
            "actor": ch.actor,
            "subnet": ch.subnet,
            "biasKinds": sorted(ch.bias_kinds),
            "flow": _flow_dict(ch),
            "definition": _network_dict(ch.definition)
            if ch.definition is not None else None,
        } for cid, ch in sorted(n.channels.items())],
        "alternatives": [{
            "id": aid,
            "variants": [{
                "name": v.name,
                "toggles": [{"kind": t.kind, "ref": list(t.ref)}
                            for t in sorted(v.toggles,
                                            key=lambda t: (t.kind, t.ref))],
            } for v in alt.variants],
        } for aid, alt in sorted(n.alternatives.items())],
    }


def _path_dict(path: ImpactPath) -> dict:
    return {
        "channels": list(path.channels),
        "sites": list(path.sites),
        "tags": list(path.tags),
        "tag": path.tag,
        "blockers": list(path.blockers),
    }


def _assessment_dict(a: OutcomeAssessment) -> dict:
    return {
        "outcome": a.outcome_id,
        "label": a.label,
        "verdict": a.verdict.value,
        "openPaths": [_path_dict(p) for p in a.open_paths],
        "unconditionallyOpenPaths": [_path_dict(p)
                                     for p in a.unconditionally_open_paths],
        "blockingMitigations": list(a.blocking_mitigations),
        "truncated": a.truncated,
    }


def report_dict(doc: ReportDocument) -> dict:
    """The full JSON-ready document (see docs/schema.md)."""
    model = doc.model
    return {
        "schemaVersion": doc.schema_version,
        "model": {
            "provenance": {
                "path": model.source_path,
                "sha256": model.content_hash,
            },
            **_network_dict(model.network),
            "subnets": [{
                "name": s.name, "label": s.label, "color": s.color,
                "within": s.within or None,
            } for s in sorted(model.subnet_styles.values(),
                              key=lambda s: s.name)],
            "outcomes": [{
                "id": o.id, "label": o.display_label, "target": o.target,
                "tags": sorted(o.tags), "description": o.description,
                "note": o.note,
            } for o in model.outcomes],
        },
        "channelTable": [{
            "id": row.id, "name": row.name,
            "inputs": list(row.inputs), "outputs": list(row.outputs),
            "actor": row.actor, "subnet": row.subnet,
            "types": list(row.types), "biasKinds": list(row.bias_kinds),
            "mitigations": list(row.mitigations),
            "impacts": list(row.impacts),
        } for row in doc.channel_rows],
        "configurations": [{
            "name": c.name,
            "assignment": dict(sorted(c.assignment.items())),
            "valid": c.valid,
            "violations": list(c.violations),
            "assessments": [_assessment_dict(a) for a in c.assessments],
        } for c in doc.matrix.configurations],
        "summary": {
            "anyConfigurationOpen": dict(sorted(doc.matrix.any_open.items())),
            "strictestVerdict": doc.matrix.strictest().value,
        },
    }


def _dump(data: dict) -> bytes:
    return (json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)
            + "\n").encode("utf-8")


def export_json(doc: ReportDocument) -> bytes:
    """Stable-order UTF-8 JSON bytes of the whole report document."""
    return _dump(report_dict(doc))


_TOP_LEVEL_KEYS = ("schemaVersion", "model", "channelTable",
                   "configurations", "summary")


def import_json(data: bytes | str) -> dict:
    """Parse an exported document, ignoring unknown additive fields.

    Returns the dict form; re-exporting it with the same serializer is
    byte-identical to the original export.
    """
    parsed = json.loads(data)
    if not isinstance(parsed, dict):
        raise ValueError("report document must be a JSON object")
    if "schemaVersion" not in parsed:
        raise ValueError("report document lacks schemaVersion")
    major = str(parsed["schemaVersion"]).split(".")[0]
    if major != SCHEMA_VERSION:
        raise ValueError(f"unsupported schemaVersion {parsed['schemaVersion']!r}")
    return {k: parsed[k] for k in _TOP_LEVEL_KEYS if k in parsed}


def export_json_dict(data: dict) -> bytes:
    """Serialize an imported dict with the canonical settings."""
    return _dump(data)


def _verdict_map(matrix: AssessmentMatrix) -> dict:
    return {c.name: {a.outcome_id: a.verdict.value for a in c.assessments}
            for c in matrix.configurations}


def whatif_dict(delta: AssessmentDelta) -> dict:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "edits": [e.spec() for e in delta.edits],
        "before": _verdict_map(delta.before),
        "after": _verdict_map(delta.after),
        "changes": [{
            "configuration": c.configuration,
            "outcome": c.outcome_id,
            "before": c.before.value if c.before else None,
            "after": c.after.value if c.after else None,
            "openedPaths": [list(p) for p in c.opened_paths],
            "closedPaths": [list(p) for p in c.closed_paths],
        } for c in delta.changes],
    }


def whatif_json(delta: AssessmentDelta) -> bytes:
    """Stable-order UTF-8 JSON bytes of a what-if delta."""
    return _dump(whatif_dict(delta))
