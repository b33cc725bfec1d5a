// Wire types for the purposeguard HTTP API.

export type Action = "Allow" | "Ask" | "Deny";

export interface AppSummary {
  app: string;
  name: string;
  category: string;
  declared: string[];
  provenance: string;
  installed_at: number;
}

export interface PolicyCard {
  permission: string;
  permission_display: string;
  group: string;
  purpose: string;
  purpose_display: string;
  origin: string;
  for: string[];
  action: Action;
  locked: boolean;
}

export interface AppSettings {
  app: string;
  name: string;
  provenance: string;
  cards: PolicyCard[];
}

export interface InstallPlan {
  app: string;
  name: string;
  provenance: string;
  cards: PolicyCard[];
  warnings: string[];
}

export interface StoredPolicy {
  id: string;
  app: string | null;
  permission: string;
  purpose: string | null;
  origin: string;
  action: Action;
  seq: number;
  at: number;
}

export interface PromptTicket {
  id: string;
  app: string;
  app_name: string;
  permission: string;
  permission_display: string;
  purpose: string;
  purpose_display: string;
  origin: string;
  for: string;
  created_at: number;
  deadline: number;
  pending: number;
}

export interface Decision {
  request_id: string;
  app: string;
  permission: string;
  purpose: string;
  origin: string;
  action: Action;
  source: string;
  source_detail: string | null;
  at: number;
}

export type RequestOutcome =
  | { status: "decided"; decision: Decision }
  | { status: "pending"; prompt: PromptTicket };

export interface AppNotification {
  id: string;
  app: string;
  permission: string;
  purpose: string;
  action: Action;
  source: string;
  message: string;
  count: number;
  first_at: number;
  last_at: number;
  silent: boolean;
  deep_link: string;
}

export type SensorState = "On" | "Off";

export type QuickSettings = Record<string, { state: SensorState; locked: boolean }>;

export interface OrgRule {
  app: string;
  permission: string;
  purpose: string;
  origin: string;
  action: "Allow" | "Deny";
}

export interface OrgProfile {
  id: string;
  name: string;
  issuer: string;
  rules: OrgRule[];
}

export interface Taxonomy {
  permissions: { name: string; display: string; group: string }[];
  purposes: { name: string; display: string; description: string }[];
}
