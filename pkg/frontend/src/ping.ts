// Presence heartbeat: one ping every ten seconds while the page is visible.
//
// The interval pauses on visibilitychange so hidden tabs report nothing;
// delivery retries ride the event queue's buffering.

import type { EventQueue } from './api.js';

export const PING_INTERVAL_MS = 10_000;

export class PingLoop {
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly onVisibility = () => this.sync();

  constructor(private queue: EventQueue, private doc: Document) {}

  start(): void {
    this.doc.addEventListener('visibilitychange', this.onVisibility);
    this.sync();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  dispose(): void {
    this.doc.removeEventListener('visibilitychange', this.onVisibility);
    this.stop();
  }

  private sync(): void {
    const visible = this.doc.visibilityState !== 'hidden';
    if (visible && this.timer === null) {
      this.timer = setInterval(() => this.queue.emit('ping'), PING_INTERVAL_MS);
    } else if (!visible) {
      this.stop();
    }
  }
}
