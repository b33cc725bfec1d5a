import type {
  Action,
  AppNotification,
  AppSettings,
  AppSummary,
  Decision,
  InstallPlan,
  OrgProfile,
  QuickSettings,
  RequestOutcome,
  SensorState,
  StoredPolicy,
  Taxonomy,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function call<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, {
    headers: { "Content-Type": "application/json", ...(init?.headers ?? {}) },
    ...init,
  });
  if (!res.ok) {
    let detail = res.statusText;
    try {
      detail = (await res.json()).detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export interface InstallRequest {
  app: string;
  name?: string;
  declared: string[];
  policy?: unknown;
  category?: string;
  plan_only?: boolean;
}

export interface AccessRequest {
  app: string;
  permission: string;
  class_name?: string;
  method_name?: string;
  purpose?: string;
  origin?: string;
}

/** Thin client for the policy service; every method maps to one endpoint. */
export class PolicyApi {
  constructor(readonly base: string = "") {}

  listApps(): Promise<AppSummary[]> {
    return call(`${this.base}/apps`);
  }

  installApp(body: InstallRequest): Promise<InstallPlan> {
    return call(`${this.base}/apps`, { method: "POST", body: JSON.stringify(body) });
  }

  removeApp(app: string): Promise<{ removed: string }> {
    return call(`${this.base}/apps/${encodeURIComponent(app)}`, { method: "DELETE" });
  }

  appSettings(app: string): Promise<AppSettings> {
    return call(`${this.base}/apps/${encodeURIComponent(app)}/settings`);
  }

  setPolicy(body: {
    app?: string | null;
    permission: string;
    purpose?: string | null;
    origin?: string;
    action: Action;
  }): Promise<StoredPolicy> {
    return call(`${this.base}/policies`, { method: "PUT", body: JSON.stringify(body) });
  }

  quickSettings(): Promise<QuickSettings> {
    return call(`${this.base}/quick-settings`);
  }

  setQuickSetting(sensor: string, state: SensorState): Promise<QuickSettings> {
    return call(`${this.base}/quick-settings`, {
      method: "PUT",
      body: JSON.stringify({ sensor, state }),
    });
  }

  orgProfile(): Promise<{ profile: OrgProfile | null }> {
    return call(`${this.base}/org-profile`);
  }

  installOrgProfile(profile: unknown): Promise<OrgProfile> {
    return call(`${this.base}/org-profile`, { method: "POST", body: JSON.stringify(profile) });
  }

  removeOrgProfile(id: string, adminToken: string): Promise<{ removed: string }> {
    return call(`${this.base}/org-profile/${encodeURIComponent(id)}`, {
      method: "DELETE",
      headers: { "X-Admin-Token": adminToken },
    });
  }

  notifications(): Promise<AppNotification[]> {
    return call(`${this.base}/notifications`);
  }

  openPrompts(): Promise<import("./types.js").PromptTicket[]> {
    return call(`${this.base}/prompts`);
  }

  answerPrompt(id: string, action: "Allow" | "Deny", remember = "none"): Promise<Decision[]> {
    return call<{ decisions: Decision[] }>(
      `${this.base}/prompts/${encodeURIComponent(id)}/answer`,
      { method: "POST", body: JSON.stringify({ action, remember }) },
    ).then((r) => r.decisions);
  }

  requestAccess(body: AccessRequest): Promise<RequestOutcome> {
    return call(`${this.base}/requests`, { method: "POST", body: JSON.stringify(body) });
  }

  taxonomy(): Promise<Taxonomy> {
    return call(`${this.base}/taxonomy`);
  }
}
