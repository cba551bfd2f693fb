/**
 * Render graph: the junction encoding shared with the engine's diagrams
 * (a channel with one input and one output is a plain edge, anything else
 * becomes a junction node), a client-side expand of nested channel
 * definitions, and a deterministic layered layout.
 */

import type { ChannelDoc, ModelDoc } from './types.js';

export interface GraphNode {
  key: string; // "site:<id>" | "channel:<id>"
  kind: 'site' | 'channel';
  id: string;
  label: string;
  subnet: string | null;
  expandable: boolean;
  collapsible: boolean;
}

export interface GraphEdge {
  key: string; // "<from>-><to>" over node keys
  from: string;
  to: string;
  channel: string;
  label: string;
  arrow: boolean;
}

export interface Graph {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export function isJunction(channel: ChannelDoc): boolean {
  return channel.inputs.length !== 1 || channel.outputs.length !== 1;
}

export function edgeKey(from: string, to: string): string {
  return `${from}->${to}`;
}

/** Splice expanded channel definitions into the visible topology. */
export function effectiveModel(model: ModelDoc,
                               expanded: string[]): ModelDoc {
  let current = model;
  for (const channelId of expanded) {
    const channel = current.channels.find(c => c.id === channelId);
    if (!channel || !channel.definition) {
      continue;
    }
    const present = new Set(current.sites.map(s => s.id));
    const sites = current.sites.concat(
      channel.definition.sites.filter(s => !present.has(s.id)));
    const channels = current.channels
      .filter(c => c.id !== channelId)
      .concat(channel.definition.channels);
    current = { ...current, sites, channels };
  }
  return current;
}

export function buildGraph(model: ModelDoc, expanded: string[] = [],
                           expandableIds: Set<string> = new Set()): Graph {
  const visible = effectiveModel(model, expanded);
  const nodes: GraphNode[] = [];
  const edges: GraphEdge[] = [];
  const expandedSet = new Set(expanded);

  for (const site of [...visible.sites].sort((a, b) =>
      a.id.localeCompare(b.id))) {
    nodes.push({
      key: `site:${site.id}`, kind: 'site', id: site.id,
      label: site.name || site.id, subnet: site.subnet,
      expandable: false, collapsible: false,
    });
  }
  for (const channel of [...visible.channels].sort((a, b) =>
      a.id.localeCompare(b.id))) {
    const label = channel.name ? `${channel.id}: ${channel.name}`
      : channel.id;
    if (isJunction(channel)) {
      nodes.push({
        key: `channel:${channel.id}`, kind: 'channel', id: channel.id,
        label, subnet: channel.subnet,
        expandable: channel.definition !== null
          && !expandedSet.has(channel.id),
        collapsible: expandableIds.has(channel.id)
          && expandedSet.has(channel.id),
      });
      for (const input of channel.inputs) {
        edges.push({
          key: edgeKey(`site:${input}`, `channel:${channel.id}`),
          from: `site:${input}`, to: `channel:${channel.id}`,
          channel: channel.id, label: '', arrow: false,
        });
      }
      for (const output of channel.outputs) {
        edges.push({
          key: edgeKey(`channel:${channel.id}`, `site:${output}`),
          from: `channel:${channel.id}`, to: `site:${output}`,
          channel: channel.id, label: '', arrow: true,
        });
      }
    } else {
      edges.push({
        key: edgeKey(`site:${channel.inputs[0]!}`,
                     `site:${channel.outputs[0]!}`),
        from: `site:${channel.inputs[0]!}`,
        to: `site:${channel.outputs[0]!}`,
        channel: channel.id, label, arrow: true,
      });
    }
  }
  return { nodes, edges };
}

/** Longest-chain layering; x is the layer, y the slot within it. */
export function layout(graph: Graph): Map<string, { x: number; y: number }> {
  const incoming = new Map<string, string[]>();
  for (const node of graph.nodes) {
    incoming.set(node.key, []);
  }
  for (const edge of graph.edges) {
    incoming.get(edge.to)?.push(edge.from);
  }
  const depth = new Map<string, number>();
  const visit = (key: string): number => {
    const known = depth.get(key);
    if (known !== undefined) {
      return known;
    }
    depth.set(key, 0); // cycle guard; valid models are acyclic
    let value = 0;
    for (const prev of incoming.get(key) ?? []) {
      value = Math.max(value, visit(prev) + 1);
    }
    depth.set(key, value);
    return value;
  };
  for (const node of graph.nodes) {
    visit(node.key);
  }
  const layers = new Map<number, string[]>();
  for (const node of graph.nodes) {
    const level = depth.get(node.key) ?? 0;
    const layer = layers.get(level) ?? [];
    layer.push(node.key);
    layers.set(level, layer);
  }
  const positions = new Map<string, { x: number; y: number }>();
  for (const [level, keys] of [...layers.entries()].sort((a, b) =>
      a[0] - b[0])) {
    keys.sort();
    keys.forEach((key, index) => {
      positions.set(key, { x: level, y: index - (keys.length - 1) / 2 });
    });
  }
  return positions;
}
