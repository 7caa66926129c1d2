// DOM rendering for the three interface conditions.
//
// All three share the location filter bar (registry order, location colors)
// and the post detail popup. The treemap condition positions the server's
// layout geometry proportionally, so any container size shows the same map
// without scrolling.

import type { Condition, IssuePayload, PostPayload, RectPayload, ViewState } from './types.js';

export function locationHue(issue: IssuePayload, code: string): number {
  const index = issue.locations.indexOf(code);
  return index < 0 ? 0 : (360 * index) / issue.locations.length;
}

export function visiblePosts(issue: IssuePayload, filter: string | null): PostPayload[] {
  return filter === null ? issue.posts : issue.posts.filter((p) => p.location === filter);
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function postBox(doc: Document, issue: IssuePayload, post: PostPayload,
                 legend: 'bottom' | 'none'): HTMLElement {
  const box = el(doc, 'article', 'post-box');
  box.dataset.postId = post.id;
  box.dataset.location = post.location;
  box.style.borderColor = `hsl(${locationHue(issue, post.location)}, 70%, 45%)`;
  box.appendChild(el(doc, 'header', 'post-author', `@${post.author}`));
  box.appendChild(el(doc, 'p', 'post-text', post.text));
  if (legend === 'bottom') {
    box.appendChild(el(doc, 'footer', 'post-location', post.location));
  }
  return box;
}

function renderBaseline(doc: Document, view: ViewState): HTMLElement {
  const list = el(doc, 'section', 'condition-baseline');
  const posts = [...visiblePosts(view.issue, view.activeFilter)]
    .sort((a, b) => b.created_at - a.created_at);
  for (const post of posts) {
    list.appendChild(postBox(doc, view.issue, post, 'bottom'));
  }
  return list;
}

function renderClustered(doc: Document, view: ViewState): HTMLElement {
  const section = el(doc, 'section', 'condition-clustered');
  for (const code of view.issue.locations) {
    if (view.activeFilter !== null && code !== view.activeFilter) continue;
    const posts = view.issue.posts.filter((p) => p.location === code);
    if (posts.length === 0) continue;
    const cluster = el(doc, 'div', 'location-cluster');
    cluster.dataset.location = code;
    cluster.style.borderColor = `hsl(${locationHue(view.issue, code)}, 70%, 45%)`;
    cluster.appendChild(el(doc, 'header', 'cluster-legend', code));
    for (const post of posts) {
      cluster.appendChild(postBox(doc, view.issue, post, 'none'));
    }
    section.appendChild(cluster);
  }
  return section;
}

function percent(value: number, base: number, span: number): string {
  return `${((value - base) / span) * 100}%`;
}

function leafStyle(node: HTMLElement, rect: RectPayload, viewport: RectPayload): void {
  node.style.position = 'absolute';
  node.style.left = percent(rect.x, viewport.x, viewport.w);
  node.style.top = percent(rect.y, viewport.y, viewport.h);
  node.style.width = `${(rect.w / viewport.w) * 100}%`;
  node.style.height = `${(rect.h / viewport.h) * 100}%`;
}

function renderTreemap(doc: Document, view: ViewState): HTMLElement {
  const map = el(doc, 'section', 'condition-treemap');
  map.style.position = 'relative';
  const { layout } = view.issue;
  const byId = new Map(view.issue.posts.map((p) => [p.id, p]));
  for (const group of layout.groups) {
    if (view.activeFilter !== null && group.location !== view.activeFilter) continue;
    for (const leaf of group.leaves) {
      const post = byId.get(leaf.post_id);
      const node = el(doc, 'div', 'treemap-leaf');
      node.dataset.postId = leaf.post_id;
      node.dataset.location = group.location;
      leafStyle(node, leaf.rect, layout.viewport);
      node.style.background =
        `hsl(${leaf.hue}, ${Math.round(leaf.saturation * 100)}%, 55%)`;
      node.appendChild(el(doc, 'span', 'leaf-text', post ? post.text : leaf.post_id));
      map.appendChild(node);
    }
  }
  return map;
}

function renderFilterBar(doc: Document, view: ViewState): HTMLElement {
  const bar = el(doc, 'nav', 'filter-bar');
  for (const code of view.issue.locations) {
    const button = el(doc, 'button', 'filter-button', code);
    button.dataset.location = code;
    button.style.background = `hsl(${locationHue(view.issue, code)}, 70%, 45%)`;
    if (view.activeFilter === code) {
      button.classList.add('active');
    }
    bar.appendChild(button);
  }
  const clear = el(doc, 'button', 'filter-clear', 'todas');
  clear.dataset.location = '';
  bar.appendChild(clear);
  return bar;
}

function renderPopup(doc: Document, view: ViewState): HTMLElement | null {
  if (view.openPost === null) return null;
  const post = view.issue.posts.find((p) => p.id === view.openPost);
  if (!post) return null;
  const overlay = el(doc, 'div', 'popup-overlay');
  const popup = el(doc, 'div', 'post-popup');
  popup.dataset.postId = post.id;
  popup.appendChild(el(doc, 'header', 'post-author', `@${post.author}`));
  popup.appendChild(el(doc, 'p', 'post-text', post.text));
  popup.appendChild(el(doc, 'time', 'post-time',
                       new Date(post.created_at * 1000).toISOString()));
  popup.appendChild(el(doc, 'span', 'post-retweets', `RT ${post.retweet_count}`));
  if (post.urls.length > 0) {
    const anchor = doc.createElement('a');
    anchor.className = 'post-link';
    anchor.href = post.urls[0];
    anchor.textContent = post.urls[0];
    anchor.dataset.postId = post.id;
    popup.appendChild(anchor);
  }
  const actions = el(doc, 'div', 'popup-actions');
  for (const action of ['reply', 'retweet', 'favorite', 'follow'] as const) {
    const button = el(doc, 'button', `action-${action}`, action);
    button.dataset.action = action;
    actions.appendChild(button);
  }
  popup.appendChild(actions);
  overlay.appendChild(popup);
  return overlay;
}

const CONDITION_RENDERERS: Record<Condition, (doc: Document, view: ViewState) => HTMLElement> = {
  baseline: renderBaseline,
  clustered: renderClustered,
  treemap: renderTreemap,
};

/** Rebuild the whole view inside the container. Pure in the view state:
 *  the same issue payload and state produce identical markup. */
export function render(container: HTMLElement, view: ViewState): void {
  const doc = container.ownerDocument;
  container.textContent = '';
  if (view.issue.posts.length === 0) {
    container.appendChild(el(doc, 'p', 'empty-state', 'Sin contenido en esta edición.'));
    container.appendChild(renderFilterBar(doc, view));
    return;
  }
  container.appendChild(CONDITION_RENDERERS[view.condition](doc, view));
  container.appendChild(renderFilterBar(doc, view));
  const popup = renderPopup(doc, view);
  if (popup) {
    container.appendChild(popup);
  }
}
