import { diffGraphs } from './diff.js';
import { layeredLayout } from './layout.js';
import type { StagedConstraints } from './staging.js';
import type { GraphPayload } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export interface RenderOptions {
  d: number;
  graph: GraphPayload;
  previous: GraphPayload | null;
  staging: StagedConstraints;
  labels?: string[];
  onPairClick?: (i: number, j: number) => void;
}

const CHANGE_COLOR: Record<string, string> = {
  added: '#1a7f37',
  reversed: '#9a6700',
  unchanged: '#57606a',
};

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

/** Render the graph view into `container`, replacing its contents. */
export function renderGraph(container: HTMLElement, options: RenderOptions): SVGSVGElement {
  const { d, graph, previous, staging } = options;
  const labels = options.labels ?? [...Array(d).keys()].map((v) => `X${v}`);
  const layout = layeredLayout(d, graph.edges);
  const diff = diffGraphs(graph.edges, previous ? previous.edges : null);

  const svg = svgEl('svg', {
    viewBox: `0 0 ${layout.width} ${layout.height}`,
    width: String(layout.width),
    height: String(layout.height),
    class: 'graph-view',
  });
  const defs = svgEl('defs', {});
  for (const [id, color] of Object.entries({ arrow: '#57606a', 'arrow-added': '#1a7f37', 'arrow-reversed': '#9a6700', 'arrow-removed': '#cf222e' })) {
    const marker = svgEl('marker', {
      id, markerWidth: '10', markerHeight: '8', refX: '9', refY: '4', orient: 'auto',
    });
    const path = svgEl('path', { d: 'M0,0 L10,4 L0,8 z', fill: color });
    marker.appendChild(path);
    defs.appendChild(marker);
  }
  svg.appendChild(defs);

  const drawEdge = (
    i: number,
    j: number,
    cls: string,
    color: string,
    marker: string,
    weight: number | null,
    badge: string | null,
  ) => {
    const a = layout.positions[i];
    const b = layout.positions[j];
    const dx = b.x - a.x;
    const dy = b.y - a.y;
    const len = Math.hypot(dx, dy) || 1;
    const r = 18;
    const x1 = a.x + (dx / len) * r;
    const y1 = a.y + (dy / len) * r;
    const x2 = b.x - (dx / len) * (r + 4);
    const y2 = b.y - (dy / len) * (r + 4);
    const group = svgEl('g', { class: `edge ${cls}`, 'data-edge': `${i}->${j}` });
    const line = svgEl('line', {
      x1: String(x1), y1: String(y1), x2: String(x2), y2: String(y2),
      stroke: color, 'stroke-width': '1.8', 'marker-end': `url(#${marker})`,
    });
    if (cls.includes('removed')) line.setAttribute('stroke-dasharray', '5,4');
    group.appendChild(line);
    const mx = (x1 + x2) / 2;
    const my = (y1 + y2) / 2;
    if (weight !== null) {
      const text = svgEl('text', {
        x: String(mx), y: String(my - 6), class: 'edge-weight',
        'text-anchor': 'middle', fill: color,
      });
      text.textContent = weight.toFixed(2);
      group.appendChild(text);
    }
    if (badge) {
      const badgeEl = svgEl('text', {
        x: String(mx), y: String(my + 14), class: `badge badge-${badge}`,
        'text-anchor': 'middle',
      });
      badgeEl.textContent = badge === 'active' ? '✓ active' : '✕ inactive';
      group.appendChild(badgeEl);
    }
    svg.appendChild(group);
  };

  for (const [i, j] of graph.edges) {
    const change = diff.current.get(`${i}->${j}`) ?? 'unchanged';
    const kind = staging.stageOf(i, j);
    const badge = kind === 'unconstrained' ? null : kind;
    const markerId = change === 'unchanged' ? 'arrow' : `arrow-${change}`;
    drawEdge(i, j, `edge-${change}`, CHANGE_COLOR[change], markerId, graph.weights[i][j], badge);
  }
  for (const [i, j] of diff.removed) {
    drawEdge(i, j, 'edge-removed', '#cf222e', 'arrow-removed', null, null);
  }
  // constrained pairs that are not rendered edges still need their badge shown
  for (const c of staging.toConstraints()) {
    if (!diff.current.has(`${c.i}->${c.j}`)) {
      drawEdge(c.i, c.j, 'edge-staged', '#8250df', 'arrow', null, c.kind);
    }
  }

  for (let v = 0; v < d; v++) {
    const p = layout.positions[v];
    const group = svgEl('g', { class: 'node', 'data-node': String(v) });
    group.appendChild(svgEl('circle', {
      cx: String(p.x), cy: String(p.y), r: '18',
      fill: '#f6f8fa', stroke: '#57606a', 'stroke-width': '1.5',
    }));
    const label = svgEl('text', {
      x: String(p.x), y: String(p.y + 4), 'text-anchor': 'middle', class: 'node-label',
    });
    label.textContent = labels[v];
    group.appendChild(label);
    svg.appendChild(group);
  }

  container.replaceChildren(svg);
  return svg;
}

/** Render the pair-editor matrix; clicking a cell cycles its staged state. */
export function renderPairMatrix(
  container: HTMLElement,
  d: number,
  staging: StagedConstraints,
  onChange: () => void,
): HTMLTableElement {
  const table = document.createElement('table');
  table.className = 'pair-matrix';
  const head = table.insertRow();
  head.insertCell().textContent = 'from \\ to';
  for (let j = 0; j < d; j++) head.insertCell().textContent = `X${j}`;
  for (let i = 0; i < d; i++) {
    const row = table.insertRow();
    row.insertCell().textContent = `X${i}`;
    for (let j = 0; j < d; j++) {
      const cell = row.insertCell();
      if (i === j) {
        cell.className = 'diag';
        continue;
      }
      const stage = staging.stageOf(i, j);
      const committed = staging.committedKind(i, j) !== null;
      cell.textContent = stage === 'unconstrained' ? '·' : stage === 'active' ? '✓' : '✕';
      cell.className = `pair pair-${stage}${committed ? ' committed' : ''}${staging.isStaged(i, j) ? ' staged' : ''}`;
      cell.dataset.pair = `${i}-${j}`;
      if (!committed) {
        cell.addEventListener('click', () => {
          staging.cycle(i, j);
          onChange();
        });
      }
    }
  }
  container.replaceChildren(table);
  return table;
}
