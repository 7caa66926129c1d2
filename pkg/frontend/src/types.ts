// Wire formats of the issue service, mirrored from its JSON payloads.

export interface PostPayload {
  id: string;
  text: string;
  author_id: string;
  author: string;
  created_at: number;
  retweet_count: number;
  location: string;
  urls: string[];
}

export interface RectPayload {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface LeafPayload {
  post_id: string;
  rect: RectPayload;
  hue: number;
  saturation: number;
}

export interface GroupPayload {
  location: string;
  rect: RectPayload;
  leaves: LeafPayload[];
}

export interface LayoutPayload {
  viewport: RectPayload;
  groups: GroupPayload[];
}

export interface IssuePayload {
  issue_id: number;
  generated_at: number;
  condition: Condition | null;
  initial_filter: string | null;
  locations: string[];
  posts: PostPayload[];
  layout: LayoutPayload;
  methods: Record<string, string[]>;
}

export type Condition = 'baseline' | 'clustered' | 'treemap';

export interface SessionInfo {
  session_id: string;
  condition: Condition;
  group: string;
}

export type EventType =
  | 'timeline_loaded'
  | 'ui_loaded'
  | 'ping'
  | 'location_filter'
  | 'post_detail'
  | 'link_click'
  | 'reply_click'
  | 'retweet_click'
  | 'favorite_click'
  | 'follow_click';

export interface ViewState {
  issue: IssuePayload;
  condition: Condition;
  activeFilter: string | null;
  openPost: string | null;
  viewport: { width: number; height: number };
}
