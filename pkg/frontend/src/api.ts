// Server API access and the outgoing event queue.
//
// Events are delivered in order with at-most-one in-flight flush; a failed
// POST keeps the event queued for the next flush, and every event carries a
// client-generated idempotency key so retries are recognizable server-side.

import type { EventType, IssuePayload, SessionInfo } from './types.js';

export async function fetchIssue(ref: string | number, loc?: string | null): Promise<IssuePayload> {
  const url = loc ? `/api/issue/${ref}?loc=${encodeURIComponent(loc)}` : `/api/issue/${ref}`;
  const response = await fetch(url);
  if (!response.ok) {
    throw new Error(`issue fetch failed: ${response.status}`);
  }
  return response.json();
}

export async function fetchSession(): Promise<SessionInfo> {
  const response = await fetch('/api/session');
  if (!response.ok) {
    throw new Error(`session fetch failed: ${response.status}`);
  }
  return response.json();
}

interface QueuedEvent {
  key: string;
  body: Record<string, unknown>;
}

export class EventQueue {
  private queue: QueuedEvent[] = [];
  private flushing = false;
  private lastGesture = new Map<string, number>();
  private counter = 0;

  constructor(
    private issueId: () => number | null,
    private debounceMs = 300,
    private now: () => number = () => Date.now(),
  ) {}

  /** Queue one event; rapid repeats of the same gesture are dropped. */
  emit(eventType: EventType, target?: string): boolean {
    const gestureKey = `${eventType}:${target ?? ''}`;
    const at = this.now();
    const last = this.lastGesture.get(gestureKey);
    if (last !== undefined && at - last < this.debounceMs) {
      return false;
    }
    this.lastGesture.set(gestureKey, at);
    this.counter += 1;
    this.queue.push({
      key: `${at}-${this.counter}`,
      body: {
        event_type: eventType,
        issue_id: this.issueId(),
        target: target ?? null,
        client_ts: at / 1000,
      },
    });
    void this.flush();
    return true;
  }

  get pending(): number {
    return this.queue.length;
  }

  /** Drain the queue in order; an event leaves only after a 2xx ack. */
  async flush(): Promise<void> {
    if (this.flushing) {
      return;
    }
    this.flushing = true;
    try {
      while (this.queue.length > 0) {
        const next = this.queue[0];
        let delivered = false;
        try {
          const response = await fetch('/api/events', {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ ...next.body, idempotency_key: next.key }),
          });
          delivered = response.ok;
        } catch {
          delivered = false;
        }
        if (!delivered) {
          break; // keep it queued; a later emit or retry timer re-flushes
        }
        this.queue.shift();
      }
    } finally {
      this.flushing = false;
    }
  }
}
