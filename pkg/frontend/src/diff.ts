export type EdgeChange = 'added' | 'removed' | 'reversed' | 'unchanged';

export interface GraphDiff {
  /** Change per edge of the current graph (keyed "i->j"). */
  current: Map<string, EdgeChange>;
  /** Edges of the previous graph that disappeared entirely. */
  removed: [number, number][];
}

const key = (i: number, j: number) => `${i}->${j}`;

/**
 * Classify the current edge set against the previous step. An edge is
 * 'reversed' when its opposite was present before and the opposite is gone
 * now; 'removed' edges are returned separately for ghost rendering.
 */
export function diffGraphs(
  current: [number, number][],
  previous: [number, number][] | null,
): GraphDiff {
  const changes = new Map<string, EdgeChange>();
  if (previous === null) {
    for (const [i, j] of current) changes.set(key(i, j), 'unchanged');
    return { current: changes, removed: [] };
  }
  const prev = new Set(previous.map(([i, j]) => key(i, j)));
  const cur = new Set(current.map(([i, j]) => key(i, j)));
  for (const [i, j] of current) {
    if (prev.has(key(i, j))) {
      changes.set(key(i, j), 'unchanged');
    } else if (prev.has(key(j, i)) && !cur.has(key(j, i))) {
      changes.set(key(i, j), 'reversed');
    } else {
      changes.set(key(i, j), 'added');
    }
  }
  const removed: [number, number][] = [];
  for (const [i, j] of previous) {
    if (cur.has(key(i, j))) continue;
    if (changes.get(key(j, i)) === 'reversed') continue;
    removed.push([i, j]);
  }
  return { current: changes, removed };
}
