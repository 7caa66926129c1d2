import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { EventQueue } from '../src/api.js';
import { PingLoop } from '../src/ping.js';
import type { SentEvent } from './helpers.js';

let sent: SentEvent[];

function mockEventsEndpoint() {
  sent = [];
  vi.stubGlobal('fetch', vi.fn(async (url: string, init?: RequestInit) => {
    if (url === '/api/events') {
      sent.push(JSON.parse(init!.body as string));
      return { ok: true, json: async () => ({ seq: sent.length }) } as Response;
    }
    throw new Error(`unexpected fetch ${url}`);
  }));
}

function setVisibility(state: DocumentVisibilityState) {
  Object.defineProperty(document, 'visibilityState',
                        { configurable: true, value: state });
  document.dispatchEvent(new Event('visibilitychange'));
}

beforeEach(() => {
  vi.useFakeTimers();
  mockEventsEndpoint();
  setVisibility('visible');
});

afterEach(() => {
  vi.useRealTimers();
  vi.unstubAllGlobals();
});

describe('ping loop', () => {
  it('posts one ping every ten seconds while visible: 35s -> 3 pings', async () => {
    const queue = new EventQueue(() => 1);
    const loop = new PingLoop(queue, document);
    loop.start();
    await vi.advanceTimersByTimeAsync(35_000);
    expect(sent.filter((e) => e.event_type === 'ping')).toHaveLength(3);
    loop.dispose();
  });

  it('a page hidden from the start never pings', async () => {
    setVisibility('hidden');
    const queue = new EventQueue(() => 1);
    const loop = new PingLoop(queue, document);
    loop.start();
    await vi.advanceTimersByTimeAsync(60_000);
    expect(sent).toHaveLength(0);
    loop.dispose();
  });

  it('pauses while hidden and resumes when visible again', async () => {
    const queue = new EventQueue(() => 1);
    const loop = new PingLoop(queue, document);
    loop.start();
    await vi.advanceTimersByTimeAsync(20_000); // 2 pings
    setVisibility('hidden');
    await vi.advanceTimersByTimeAsync(60_000); // nothing
    setVisibility('visible');
    await vi.advanceTimersByTimeAsync(10_000); // 1 more
    expect(sent.filter((e) => e.event_type === 'ping')).toHaveLength(3);
    loop.dispose();
  });

  it('buffers pings through outages and delivers each exactly once', async () => {
    let down = true;
    vi.stubGlobal('fetch', vi.fn(async (url: string, init?: RequestInit) => {
      if (down) throw new TypeError('offline');
      sent.push(JSON.parse(init!.body as string));
      return { ok: true, json: async () => ({ seq: sent.length }) } as Response;
    }));
    const queue = new EventQueue(() => 1);
    const loop = new PingLoop(queue, document);
    loop.start();
    await vi.advanceTimersByTimeAsync(30_000); // 3 pings, all stuck
    expect(sent).toHaveLength(0);
    expect(queue.pending).toBe(3);
    down = false;
    await queue.flush();
    expect(sent.filter((e) => e.event_type === 'ping')).toHaveLength(3);
    const keys = sent.map((e) => e.idempotency_key);
    expect(new Set(keys).size).toBe(keys.length);
    loop.dispose();
  });
});
