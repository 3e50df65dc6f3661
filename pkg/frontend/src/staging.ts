import type { Constraint, ConstraintKind } from './types.js';

export type Stage = 'unconstrained' | ConstraintKind;

/**
 * Locally staged constraint edits. Committed knowledge is immutable; only
 * unconstrained ordered pairs can be staged, and one pair holds at most one
 * staged kind, so a conflicting pair of constraints cannot be produced.
 */
export class StagedConstraints {
  private staged = new Map<string, ConstraintKind>();

  constructor(private committed: Constraint[]) {}

  private key(i: number, j: number): string {
    return `${i}->${j}`;
  }

  committedKind(i: number, j: number): ConstraintKind | null {
    const hit = this.committed.find((c) => c.i === i && c.j === j);
    return hit ? hit.kind : null;
  }

  stageOf(i: number, j: number): Stage {
    const committed = this.committedKind(i, j);
    if (committed) return committed;
    return this.staged.get(this.key(i, j)) ?? 'unconstrained';
  }

  isStaged(i: number, j: number): boolean {
    return this.staged.has(this.key(i, j));
  }

  /** Click cycle: unconstrained -> active -> inactive -> unconstrained. */
  cycle(i: number, j: number): Stage {
    if (i === j || this.committedKind(i, j)) {
      return this.stageOf(i, j); // committed pairs are not editable
    }
    const key = this.key(i, j);
    const current = this.staged.get(key);
    if (current === undefined) {
      this.staged.set(key, 'active');
    } else if (current === 'active') {
      this.staged.set(key, 'inactive');
    } else {
      this.staged.delete(key);
    }
    return this.stageOf(i, j);
  }

  clear(): void {
    this.staged.clear();
  }

  get count(): number {
    return this.staged.size;
  }

  toConstraints(): Constraint[] {
    return [...this.staged.entries()]
      .map(([key, kind]) => {
        const [i, j] = key.split('->').map(Number);
        return { i, j, kind };
      })
      .sort((a, b) => a.i - b.i || a.j - b.j);
  }

  /** Called after a successful apply: staged edits become committed. */
  commit(knowledge: Constraint[]): void {
    this.committed = knowledge;
    this.staged.clear();
  }
}
