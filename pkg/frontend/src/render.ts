/** SVG rendering of the graph plus the control panels. */

import type { Graph, GraphNode } from './graph.js';
import { layout } from './graph.js';
import type { HighlightSets } from './highlight.js';
import type { ModelDoc, SubnetDoc, Verdict } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';
const CELL_X = 170;
const CELL_Y = 92;
const PAD = 70;

function svgElement<K extends keyof SVGElementTagNameMap>(
    name: K, attrs: Record<string, string>): SVGElementTagNameMap[K] {
  const element = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    element.setAttribute(key, value);
  }
  return element;
}

function subnetColor(model: ModelDoc, name: string | null): string {
  const style = (model.subnets ?? []).find(s => s.name === name);
  return style?.color || '#546e7a';
}

export interface RenderCallbacks {
  onExpand(channelId: string): void;
  onCollapse(channelId: string): void;
}

export function renderGraph(svg: SVGSVGElement, model: ModelDoc,
                            graph: Graph, marks: HighlightSets,
                            callbacks: RenderCallbacks): void {
  svg.innerHTML = '';
  const positions = layout(graph);
  const place = (key: string): { x: number; y: number } => {
    const cell = positions.get(key) ?? { x: 0, y: 0 };
    return { x: PAD + cell.x * CELL_X, y: PAD + (cell.y + 6) * CELL_Y / 2 };
  };

  let maxX = 0;
  let maxY = 0;
  for (const key of positions.keys()) {
    const { x, y } = place(key);
    maxX = Math.max(maxX, x);
    maxY = Math.max(maxY, y);
  }
  svg.setAttribute('viewBox', `0 0 ${maxX + PAD} ${maxY + PAD}`);

  const defs = svgElement('defs', {});
  for (const [id, color] of [['arrow', '#90a4ae'],
                             ['arrow-hot', '#c62828']] as const) {
    const marker = svgElement('marker', {
      id, viewBox: '0 0 10 10', refX: '9', refY: '5',
      markerWidth: '7', markerHeight: '7', orient: 'auto-start-reverse',
    });
    marker.appendChild(svgElement('path', {
      d: 'M 0 0 L 10 5 L 0 10 z', fill: color,
    }));
    defs.appendChild(marker);
  }
  svg.appendChild(defs);

  // sub-network hulls behind everything
  const hulls = svgElement('g', { class: 'hulls' });
  const bySubnet = new Map<string, GraphNode[]>();
  for (const node of graph.nodes) {
    if (node.subnet) {
      const list = bySubnet.get(node.subnet) ?? [];
      list.push(node);
      bySubnet.set(node.subnet, list);
    }
  }
  for (const [name, nodes] of [...bySubnet.entries()].sort()) {
    const xs = nodes.map(n => place(n.key).x);
    const ys = nodes.map(n => place(n.key).y);
    const x0 = Math.min(...xs) - 56;
    const y0 = Math.min(...ys) - 34;
    const hull = svgElement('rect', {
      x: String(x0), y: String(y0),
      width: String(Math.max(...xs) - x0 + 112),
      height: String(Math.max(...ys) - y0 + 68),
      rx: '12', fill: subnetColor(model, name), 'fill-opacity': '0.07',
      stroke: subnetColor(model, name), 'stroke-dasharray': '6 4',
    });
    hulls.appendChild(hull);
    const label = svgElement('text', {
      x: String(x0 + 8), y: String(y0 + 16), class: 'hull-label',
      fill: subnetColor(model, name),
    });
    label.textContent = name;
    hulls.appendChild(label);
  }
  svg.appendChild(hulls);

  const edgesGroup = svgElement('g', { class: 'edges' });
  for (const edge of graph.edges) {
    const from = place(edge.from);
    const to = place(edge.to);
    const hot = marks.solid.has(edge.key) || marks.dashed.has(edge.key);
    const line = svgElement('line', {
      x1: String(from.x), y1: String(from.y),
      x2: String(to.x), y2: String(to.y),
      class: `edge${hot ? ' hot' : ''}`,
      stroke: hot ? '#c62828' : '#90a4ae',
      'stroke-width': hot ? '2.6' : '1.3',
    });
    if (marks.dashed.has(edge.key) && !marks.solid.has(edge.key)) {
      line.setAttribute('stroke-dasharray', '7 5');
    }
    if (edge.arrow) {
      line.setAttribute('marker-end',
        hot ? 'url(#arrow-hot)' : 'url(#arrow)');
    }
    edgesGroup.appendChild(line);
    if (edge.label) {
      const label = svgElement('text', {
        x: String((from.x + to.x) / 2), y: String((from.y + to.y) / 2 - 6),
        class: 'edge-label', 'text-anchor': 'middle',
      });
      label.textContent = edge.label;
      edgesGroup.appendChild(label);
    }
  }
  svg.appendChild(edgesGroup);

  const nodesGroup = svgElement('g', { class: 'nodes' });
  for (const node of graph.nodes) {
    const { x, y } = place(node.key);
    const group = svgElement('g', {
      class: `node ${node.kind}`, transform: `translate(${x},${y})`,
    });
    const width = Math.max(64, node.label.length * 6.6 + 18);
    group.appendChild(svgElement('rect', {
      x: String(-width / 2), y: '-15', width: String(width), height: '30',
      rx: node.kind === 'site' ? '15' : '6',
      fill: node.kind === 'site' ? '#ffffff' : '#eceff1',
      stroke: subnetColor(model, node.subnet), 'stroke-width': '1.5',
    }));
    const text = svgElement('text', {
      y: '4', 'text-anchor': 'middle', class: 'node-label',
    });
    text.textContent = node.label;
    group.appendChild(text);
    if (node.expandable || node.collapsible) {
      const toggle = svgElement('text', {
        x: String(width / 2 - 9), y: '-19', class: 'expander',
      });
      toggle.textContent = node.expandable ? '+' : '−';
      toggle.addEventListener('click', () => {
        if (node.expandable) {
          callbacks.onExpand(node.id);
        } else {
          callbacks.onCollapse(node.id);
        }
      });
      group.appendChild(toggle);
    }
    nodesGroup.appendChild(group);
  }
  svg.appendChild(nodesGroup);
}

export function verdictBadge(verdict: Verdict | undefined): HTMLElement {
  const badge = document.createElement('span');
  badge.className = `badge ${verdict ? verdict.toLowerCase() : 'unknown'}`;
  badge.textContent = verdict ?? '…';
  return badge;
}

export function subnetLegend(model: ModelDoc): HTMLElement {
  const list = document.createElement('div');
  list.className = 'legend';
  for (const subnet of (model.subnets ?? []) as SubnetDoc[]) {
    const entry = document.createElement('span');
    entry.className = 'legend-entry';
    const swatch = document.createElement('span');
    swatch.className = 'swatch';
    swatch.style.background = subnet.color || '#546e7a';
    entry.appendChild(swatch);
    entry.appendChild(document.createTextNode(subnet.label || subnet.name));
    list.appendChild(entry);
  }
  return list;
}
