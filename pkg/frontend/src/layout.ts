export interface NodePosition {
  x: number;
  y: number;
  rank: number;
}

export interface Layout {
  positions: NodePosition[];
  width: number;
  height: number;
}

const COLUMN_GAP = 140;
const ROW_GAP = 70;
const MARGIN = 60;

/**
 * Layered left-to-right layout by longest-path rank, so every edge of a DAG
 * points rightward. Cycles (possible in expected graphs) are tolerated by
 * capping the relaxation at d passes; back edges then simply point left.
 */
export function layeredLayout(d: number, edges: [number, number][]): Layout {
  const rank = new Array<number>(d).fill(0);
  for (let pass = 0; pass < d; pass++) {
    let changed = false;
    for (const [u, v] of edges) {
      if (rank[v] < rank[u] + 1 && rank[u] + 1 < d) {
        rank[v] = rank[u] + 1;
        changed = true;
      }
    }
    if (!changed) break;
  }

  const layers = new Map<number, number[]>();
  for (let v = 0; v < d; v++) {
    const list = layers.get(rank[v]) ?? [];
    list.push(v);
    layers.set(rank[v], list);
  }

  // order within a layer by mean predecessor row to reduce crossings
  const row = new Array<number>(d).fill(0);
  const sortedRanks = [...layers.keys()].sort((a, b) => a - b);
  for (const r of sortedRanks) {
    const nodes = layers.get(r)!;
    if (r === sortedRanks[0]) {
      nodes.sort((a, b) => a - b);
    } else {
      const score = (v: number) => {
        const preds = edges.filter(([, t]) => t === v).map(([s]) => row[s]);
        return preds.length ? preds.reduce((a, b) => a + b, 0) / preds.length : row[v];
      };
      nodes.sort((a, b) => score(a) - score(b) || a - b);
    }
    nodes.forEach((v, idx) => {
      row[v] = idx;
    });
  }

  const maxRows = Math.max(...[...layers.values()].map((l) => l.length));
  const positions: NodePosition[] = [];
  for (let v = 0; v < d; v++) {
    const layer = layers.get(rank[v])!;
    const offset = (maxRows - layer.length) / 2;
    positions[v] = {
      x: MARGIN + rank[v] * COLUMN_GAP,
      y: MARGIN + (row[v] + offset) * ROW_GAP,
      rank: rank[v],
    };
  }
  return {
    positions,
    width: MARGIN * 2 + (sortedRanks.length - 1) * COLUMN_GAP,
    height: MARGIN * 2 + (maxRows - 1) * ROW_GAP,
  };
}
