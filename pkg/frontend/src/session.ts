/** Review session state: the triage queue, the open test, unsaved edits.
 *
 * Pure state machine so the navigation rules are testable without a DOM.
 * Navigation away from a test with unsaved edits is blocked until the
 * edits are saved or explicitly discarded.
 */

export type StatusFilter = "failing" | "passing" | "invalid" | "all";

export interface SessionFilter {
  category: string | null;
  status: StatusFilter;
}

export interface NavResult {
  moved: boolean;
  blockedByEdits: boolean;
}

const BLOCKED: NavResult = { moved: false, blockedByEdits: true };
const NOWHERE: NavResult = { moved: false, blockedByEdits: false };

export class ReviewSession {
  model = "";
  filter: SessionFilter = { category: null, status: "failing" };
  private queue: string[] = [];
  private index = -1;
  private dirty = false;

  get currentTestId(): string | null {
    return this.index >= 0 ? (this.queue[this.index] ?? null) : null;
  }

  get queueIds(): readonly string[] {
    return this.queue;
  }

  get hasUnsavedEdits(): boolean {
    return this.dirty;
  }

  /** Replace the queue, keeping the open test selected when still listed. */
  setQueue(ids: string[]): void {
    const current = this.currentTestId;
    this.queue = [...ids];
    this.index = current ? this.queue.indexOf(current) : -1;
  }

  markDirty(): void {
    this.dirty = true;
  }

  clearDirty(): void {
    this.dirty = false;
  }

  /** Drop unsaved edits so navigation unblocks. */
  discardEdits(): void {
    this.dirty = false;
  }

  goTo(id: string): NavResult {
    const target = this.queue.indexOf(id);
    if (target === -1) return NOWHERE;
    if (target === this.index) return { moved: false, blockedByEdits: false };
    if (this.dirty) return BLOCKED;
    this.index = target;
    return { moved: true, blockedByEdits: false };
  }

  next(): NavResult {
    return this.step(1);
  }

  previous(): NavResult {
    return this.step(-1);
  }

  private step(delta: number): NavResult {
    if (this.queue.length === 0) return NOWHERE;
    const target = this.index === -1 ? 0 : this.index + delta;
    if (target < 0 || target >= this.queue.length) return NOWHERE;
    if (this.dirty) return BLOCKED;
    this.index = target;
    return { moved: true, blockedByEdits: false };
  }
}
