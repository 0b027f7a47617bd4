// App store: a pure projection of server state plus an explicit unsaved-decision buffer.

import { ApiError, Decision, ItemFull, ItemStatus, ItemSummary, ReviewApi, Stats } from "./api";

export interface UnsavedDecision {
  id: string;
  decision: Decision;
  note?: string;
}

export interface AppState {
  filter: ItemStatus | "";
  queue: ItemSummary[];
  total: number;
  stats: Stats | null;
  current: ItemFull | null;
  unsaved: UnsavedDecision | null;
  error: string | null;
  loading: boolean;
}

type Listener = (state: AppState) => void;

export class Store {
  readonly state: AppState = {
    filter: "pending",
    queue: [],
    total: 0,
    stats: null,
    current: null,
    unsaved: null,
    error: null,
    loading: false,
  };

  private listeners: Listener[] = [];

  constructor(readonly api: ReviewApi) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Queue position of the current item (1-based) or null. */
  queuePosition(): number | null {
    if (!this.state.current) return null;
    const index = this.state.queue.findIndex((item) => item.id === this.state.current!.id);
    return index < 0 ? null : index + 1;
  }

  async load(filter?: ItemStatus | ""): Promise<void> {
    if (filter !== undefined) this.state.filter = filter;
    this.state.loading = true;
    this.emit();
    try {
      const page = await this.api.fetchQueue(this.state.filter);
      this.state.queue = page.items;
      this.state.total = page.total;
      this.state.stats = page.stats;
      this.state.error = null;
      if (!this.state.current && page.items.length > 0) {
        await this.select(page.items[0]!.id);
      } else if (this.state.current) {
        this.state.current = await this.api.fetchItem(this.state.current.id);
      }
    } catch (err) {
      this.state.error = err instanceof ApiError ? err.message : String(err);
      this.state.queue = [];
      this.state.total = 0;
    } finally {
      this.state.loading = false;
      this.emit();
    }
  }

  async select(id: string): Promise<void> {
    try {
      this.state.current = await this.api.fetchItem(id);
      this.state.error = null;
    } catch (err) {
      this.state.error = err instanceof ApiError ? err.message : String(err);
    }
    this.emit();
  }

  /** Next pending item after the given id in ascending-id order, wrapping to the first. */
  nextPendingAfter(id: string): ItemSummary | null {
    const pending = this.state.queue
      .filter((item) => item.status === "pending" && item.id !== id)
      .sort((a, b) => (a.id < b.id ? -1 : 1));
    if (pending.length === 0) return null;
    return pending.find((item) => item.id > id) ?? pending[0]!;
  }

  async decide(decision: Decision, note?: string): Promise<void> {
    const current = this.state.current;
    if (!current) return;
    this.state.unsaved = { id: current.id, decision, note };
    this.emit();
    await this.flushUnsaved();
  }

  /** POST the buffered decision; on success refresh and advance, on failure keep it buffered. */
  async flushUnsaved(): Promise<void> {
    const buffered = this.state.unsaved;
    if (!buffered) return;
    try {
      await this.api.submitDecision(buffered.id, buffered.decision, buffered.note);
      this.state.unsaved = null;
      const next = this.nextPendingAfter(buffered.id);
      const page = await this.api.fetchQueue(this.state.filter);
      this.state.queue = page.items;
      this.state.total = page.total;
      this.state.stats = page.stats;
      this.state.error = null;
      if (next) {
        this.state.current = await this.api.fetchItem(next.id);
      } else if (this.state.current) {
        this.state.current = await this.api.fetchItem(this.state.current.id);
      }
    } catch (err) {
      this.state.error = err instanceof ApiError ? err.message : String(err);
    }
    this.emit();
  }

  async skip(): Promise<void> {
    const current = this.state.current;
    if (!current) return;
    const next = this.nextPendingAfter(current.id);
    if (next) await this.select(next.id);
  }
}
