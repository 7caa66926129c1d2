// Client entry point: load the session and current issue, render the
// assigned condition, and instrument every interaction.

import { EventQueue, fetchIssue, fetchSession } from './api.js';
import { PingLoop } from './ping.js';
import { render } from './render.js';
import type { Condition, EventType, IssuePayload, ViewState } from './types.js';

const ACTION_EVENTS: Record<string, EventType> = {
  reply: 'reply_click',
  retweet: 'retweet_click',
  favorite: 'favorite_click',
  follow: 'follow_click',
};

export interface Controller {
  state: ViewState;
  queue: EventQueue;
  setFilter(code: string | null, emitEvent: boolean): void;
  openDetail(postId: string): void;
  closeDetail(): void;
  dispose(): void;
}

/** Wire the view state, the DOM, and the event queue together. */
export function createController(
  container: HTMLElement,
  issue: IssuePayload,
  condition: Condition,
  queue: EventQueue,
  initialFilter: string | null = null,
): Controller {
  const state: ViewState = {
    issue,
    condition,
    activeFilter: initialFilter,
    openPost: null,
    viewport: { width: container.clientWidth || 1200, height: container.clientHeight || 800 },
  };

  const rerender = () => render(container, state);

  const controller: Controller = {
    state,
    queue,
    setFilter(code, emitEvent) {
      if (code !== null && !issue.locations.includes(code)) {
        console.warn(`unknown location code ${code}, filter ignored`);
        return;
      }
      state.activeFilter = code;
      if (emitEvent && code !== null) {
        queue.emit('location_filter', code);
      }
      rerender();
    },
    openDetail(postId) {
      state.openPost = postId;
      queue.emit('post_detail', postId);
      rerender();
    },
    closeDetail() {
      if (state.openPost !== null) {
        state.openPost = null;
        rerender();
      }
    },
    dispose() {
      // Extended by boot() with timer teardown; nothing to release here.
    },
  };

  container.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const action = target.closest<HTMLElement>('[data-action]');
    if (action && action.dataset.action) {
      const post = target.closest<HTMLElement>('[data-post-id]');
      queue.emit(ACTION_EVENTS[action.dataset.action], post?.dataset.postId);
      return;
    }
    const filter = target.closest<HTMLElement>('.filter-bar button');
    if (filter) {
      controller.setFilter(filter.dataset.location || null, Boolean(filter.dataset.location));
      return;
    }
    const anchor = target.closest<HTMLAnchorElement>('a[data-post-id]');
    if (anchor) {
      queue.emit('link_click', anchor.dataset.postId);
      return;
    }
    const postNode = target.closest<HTMLElement>('[data-post-id]');
    if (postNode && postNode.dataset.postId && !target.closest('.post-popup')) {
      controller.openDetail(postNode.dataset.postId);
    }
  });

  container.ownerDocument.addEventListener('keydown', (event) => {
    if ((event as KeyboardEvent).key === 'Escape') {
      controller.closeDetail();
    }
  });

  rerender();
  return controller;
}

/** Fragment of the form "#RM"; empty or malformed fragments yield null. */
export function parseFragment(hash: string): string | null {
  const code = hash.replace(/^#/, '').trim().toUpperCase();
  return code.length > 0 ? code : null;
}

export async function boot(container: HTMLElement, win: Window): Promise<Controller> {
  const issueRef = { current: null as number | null };
  const queue = new EventQueue(() => issueRef.current);
  queue.emit('ui_loaded');

  const session = await fetchSession();
  const fragment = parseFragment(win.location.hash);
  let issue: IssuePayload;
  try {
    issue = await fetchIssue('current', fragment);
  } catch (error) {
    if (fragment !== null) {
      console.warn(`location fragment #${fragment} rejected, loading unfiltered`, error);
      issue = await fetchIssue('current');
    } else {
      throw error;
    }
  }
  issueRef.current = issue.issue_id;

  // The server logged the implicit location_filter for a fragment visit, so
  // the initial filter applies without a client-side event.
  const controller = createController(
    container, issue, session.condition, queue, issue.initial_filter);
  queue.emit('timeline_loaded');

  const pings = new PingLoop(queue, container.ownerDocument);
  pings.start();
  const retryTimer = win.setInterval(() => void queue.flush(), 5_000);
  controller.dispose = () => {
    pings.dispose();
    win.clearInterval(retryTimer);
  };
  return controller;
}

declare global {
  interface Window {
    __aurora?: Promise<Controller>;
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  const container = document.getElementById('app') as HTMLElement;
  window.__aurora = boot(container, window);
}
