"""Matplotlib renderings of a report: network diagrams and a verdict grid.

Layout is a deterministic layered drawing (depth = longest chain from the
network inputs), so identical models always produce identical figures.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrowPatch

from .analysis import Verdict
from .model import Network
from .reporting import ReportDocument, _highlight_edges, _is_junction

__all__ = ["layout_network", "render_overview", "render_outcome_figure",
           "render_verdict_grid", "render_figures"]

_VERDICT_COLORS = {
    Verdict.OPEN.value: "#c62828",
    Verdict.CONDITIONAL.value: "#ef6c00",
    Verdict.CLOSED.value: "#2e7d32",
}


def layout_network(n: Network) -> dict[str, tuple[float, float]]:
    """Node positions keyed 'site:<id>' / 'channel:<id>' (junctions only)."""
    nodes: list[str] = [f"site:{sid}" for sid in sorted(n.sites)]
    nodes += [f"channel:{cid}" for cid in sorted(n.channels)
              if _is_junction(n.channels[cid])]
    edges: list[tuple[str, str]] = []
    for cid in sorted(n.channels):
        ch = n.channels[cid]
        if _is_junction(ch):
            ref = f"channel:{cid}"
            edges += [(f"site:{s}", ref) for s in ch.inputs]
            edges += [(ref, f"site:{s}") for s in ch.outputs]
        else:
            edges.append((f"site:{ch.inputs[0]}", f"site:{ch.outputs[0]}"))

    incoming: dict[str, list[str]] = {node: [] for node in nodes}
    outgoing: dict[str, list[str]] = {node: [] for node in nodes}
    for source, target in edges:
        outgoing[source].append(target)
        incoming[target].append(source)

    depth: dict[str, int] = {}

    def longest(node: str) -> int:
        if node in depth:
            return depth[node]
        depth[node] = 0  # cycle guard; valid models are acyclic
        value = 0
        for prev in incoming[node]:
            value = max(value, longest(prev) + 1)
        depth[node] = value
        return value

    for node in nodes:
        longest(node)

    layers: dict[int, list[str]] = {}
    for node in nodes:
        layers.setdefault(depth[node], []).append(node)
    positions: dict[str, tuple[float, float]] = {}
    for level in sorted(layers):
        column = sorted(layers[level])
        height = len(column)
        for i, node in enumerate(column):
            y = (height - 1) / 2 - i
            positions[node] = (float(level * 2), float(y * 1.4))
    return positions


def _draw_network(ax, doc: ReportDocument,
                  solid: set[tuple[str, str]],
                  dashed: set[tuple[str, str]]) -> None:
    network = doc.model.network
    styles = doc.model.subnet_styles
    positions = layout_network(network)

    def subnet_color(name: str | None) -> str:
        if name and name in styles and styles[name].color:
            return styles[name].color
        return "#546e7a"

    def edge_style(key: tuple[str, str]) -> dict:
        if key in solid:
            return {"color": "#c62828", "linewidth": 2.4}
        if key in dashed:
            return {"color": "#c62828", "linewidth": 2.0,
                    "linestyle": (0, (4, 3))}
        return {"color": "#90a4ae", "linewidth": 1.1}

    for cid in sorted(network.channels):
        ch = network.channels[cid]
        if _is_junction(ch):
            ref = f"channel:{cid}"
            hops = [((source, ref), f"site:{source}", ref, False)
                    for source in ch.inputs]
            hops += [((ref, target), ref, f"site:{target}", True)
                     for target in ch.outputs]
        else:
            source, target = ch.inputs[0], ch.outputs[0]
            hops = [(((source, target)), f"site:{source}",
                     f"site:{target}", True)]
        for key, a, b, arrow in hops:
            start, end = positions[a], positions[b]
            patch = FancyArrowPatch(
                start, end, arrowstyle="-|>" if arrow else "-",
                mutation_scale=11, shrinkA=14, shrinkB=14,
                zorder=1, **edge_style(key))
            ax.add_patch(patch)

    for node, (x, y) in sorted(positions.items()):
        kind, ident = node.split(":", 1)
        if kind == "site":
            site = network.sites[ident]
            color = subnet_color(site.subnet)
            ax.text(x, y, site.display_name or ident, ha="center",
                    va="center", fontsize=8, zorder=3,
                    bbox=dict(boxstyle="round,pad=0.35", fc="white",
                              ec=color, lw=1.4))
        else:
            ch = network.channels[ident]
            color = subnet_color(ch.subnet)
            label = ident if not ch.name else f"{ident}\n{ch.name}"
            ax.text(x, y, label, ha="center", va="center", fontsize=7,
                    style="italic", zorder=3,
                    bbox=dict(boxstyle="round4,pad=0.3", fc="#eceff1",
                              ec=color, lw=1.2))

    ax.relim()
    ax.autoscale_view()
    ax.margins(0.08)
    ax.set_axis_off()


def render_overview(doc: ReportDocument, path: str | Path) -> Path:
    """The whole network, colored by sub-network."""
    fig, ax = plt.subplots(figsize=(14, 8))
    _draw_network(ax, doc, set(), set())
    handles = []
    for name, style in sorted(doc.model.subnet_styles.items()):
        if style.color:
            handles.append(plt.Line2D([], [], color=style.color, lw=3,
                                      label=style.label or name))
    if handles:
        ax.legend(handles=handles, loc="lower left", fontsize=8,
                  frameon=False)
    ax.set_title("Information flow overview", fontsize=11)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_outcome_figure(doc: ReportDocument, outcome: str,
                          path: str | Path) -> Path:
    """The network with the outcome's open paths marked (dashed when a
    conditional mitigation still blocks them)."""
    solid, dashed = _highlight_edges(doc, outcome)
    fig, ax = plt.subplots(figsize=(14, 8))
    _draw_network(ax, doc, solid, dashed)
    verdicts = []
    for config in doc.matrix.configurations:
        for a in config.assessments:
            if outcome in (a.outcome_id, a.label):
                verdicts.append(f"{config.name}: {a.verdict.value}")
    ax.set_title(f"Open paths for {outcome} ({'; '.join(verdicts)})",
                 fontsize=11)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_verdict_grid(doc: ReportDocument, path: str | Path) -> Path:
    """Outcomes x configurations, one colored cell per verdict."""
    configs = [c for c in doc.matrix.configurations if c.valid]
    outcomes = [a.label for a in configs[0].assessments] if configs else []
    fig, ax = plt.subplots(
        figsize=(2.2 + 1.6 * max(1, len(configs)),
                 1.2 + 0.5 * max(1, len(outcomes))))
    for row, label in enumerate(outcomes):
        for col, config in enumerate(configs):
            assessment = config.assessments[row]
            color = _VERDICT_COLORS[assessment.verdict.value]
            ax.add_patch(plt.Rectangle((col, row), 0.94, 0.94,
                                       color=color, alpha=0.85))
            ax.text(col + 0.47, row + 0.47, assessment.verdict.value,
                    ha="center", va="center", fontsize=8, color="white")
    ax.set_xticks([c + 0.47 for c in range(len(configs))])
    ax.set_xticklabels([c.name for c in configs], fontsize=8)
    ax.set_yticks([r + 0.47 for r in range(len(outcomes))])
    ax.set_yticklabels(outcomes, fontsize=8)
    ax.set_xlim(0, max(1, len(configs)))
    ax.set_ylim(max(1, len(outcomes)), 0)
    ax.set_title("Verdicts per configuration", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_figures(doc: ReportDocument, out_dir: str | Path,
                   fmt: str = "png") -> list[Path]:
    """Overview, verdict grid and one highlighted figure per outcome."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [render_overview(doc, out_dir / f"overview.{fmt}"),
               render_verdict_grid(doc, out_dir / f"verdicts.{fmt}")]
    for outcome in doc.model.outcomes:
        safe = "".join(c if c.isalnum() else "_" for c in outcome.id)
        written.append(render_outcome_figure(
            doc, outcome.id, out_dir / f"outcome_{safe}.{fmt}"))
    return written
