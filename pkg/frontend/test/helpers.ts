import { vi } from 'vitest';

import { EventQueue } from '../src/api.js';
import type { IssuePayload } from '../src/types.js';
import fixture from './fixtures/issue.json';

export function loadIssue(): IssuePayload {
  // Deep copy so tests can mutate their own instance.
  return JSON.parse(JSON.stringify(fixture)) as IssuePayload;
}

export interface SentEvent {
  event_type: string;
  target: string | null;
  issue_id: number | null;
  idempotency_key: string;
}

/** Capture POST /api/events bodies; other fetches fail loudly. */
export function captureEvents(failures = 0): { sent: SentEvent[]; fetchMock: ReturnType<typeof vi.fn> } {
  const sent: SentEvent[] = [];
  let remainingFailures = failures;
  const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
    if (url === '/api/events' && init?.method === 'POST') {
      if (remainingFailures > 0) {
        remainingFailures -= 1;
        throw new TypeError('network down');
      }
      sent.push(JSON.parse(init.body as string));
      return { ok: true, json: async () => ({ seq: sent.length }) } as Response;
    }
    throw new Error(`unexpected fetch ${url}`);
  });
  vi.stubGlobal('fetch', fetchMock);
  return { sent, fetchMock };
}

export function makeQueue(issueId = 1): EventQueue {
  return new EventQueue(() => issueId);
}

export function container(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.getElementById('app') as HTMLElement;
}

export async function settle(): Promise<void> {
  // Let queued microtasks (fetch acks) drain.
  for (let i = 0; i < 10; i += 1) {
    await Promise.resolve();
  }
}
