import { PolicyApi } from "./api.js";
import { renderSettingsCards } from "./cards.js";
import { PromptModal } from "./modal.js";
import { renderNotifications } from "./notifications.js";
import { renderQuickSettings } from "./quick.js";
import { watchPrompts } from "./sse.js";

/** Wire the whole page up. Returns a teardown function. */
export function boot(doc: Document, base = ""): () => void {
  const api = new PolicyApi(base);
  const appList = doc.getElementById("app-list")!;
  const appTitle = doc.getElementById("app-title")!;
  const cardsEl = doc.getElementById("cards")!;
  const quickEl = doc.getElementById("quick-settings")!;
  const notifEl = doc.getElementById("notifications")!;
  let selected: string | null = null;

  async function showQuick(): Promise<void> {
    renderQuickSettings(quickEl, await api.quickSettings(), async (sensor, state) => {
      try {
        await api.setQuickSetting(sensor, state);
      } finally {
        // re-render even on a lock conflict so the toggle snaps back
        await showQuick();
        await showNotifications();
      }
    });
  }

  async function showSettings(appId: string): Promise<void> {
    selected = appId;
    const view = await api.appSettings(appId);
    appTitle.textContent = view.name;
    renderSettingsCards(cardsEl, view, async (card, action) => {
      await api.setPolicy({
        app: appId,
        permission: card.permission,
        purpose: card.purpose,
        origin: card.origin,
        action,
      });
      await showSettings(appId);
      await showNotifications();
    });
  }

  async function showApps(): Promise<void> {
    const apps = await api.listApps();
    appList.textContent = "";
    for (const app of apps) {
      const item = doc.createElement("button");
      item.className = "app-item";
      item.textContent = app.name;
      item.addEventListener("click", () => void showSettings(app.app));
      appList.appendChild(item);
    }
    if (!selected && apps.length > 0) {
      await showSettings(apps[0].app);
    }
  }

  async function showNotifications(): Promise<void> {
    renderNotifications(notifEl, await api.notifications(), (link) => {
      // deep links look like /apps/{id}/settings#PERMISSION
      const match = /^\/apps\/(.+)\/settings/.exec(link);
      if (match) void showSettings(decodeURIComponent(match[1]));
    });
  }

  const modal = new PromptModal(
    (id, action, remember) => api.answerPrompt(id, action, remember),
    {
      document: doc,
      onDecided: () => {
        void showNotifications();
        if (selected) void showSettings(selected);
      },
    },
  );
  doc.body.appendChild(modal.root);

  const closeStream = watchPrompts(base, (ticket) => modal.push(ticket));
  const refresh = setInterval(() => void showNotifications(), 30_000);

  void showApps();
  void showQuick();
  void showNotifications();

  return () => {
    closeStream();
    clearInterval(refresh);
  };
}

if (typeof document !== "undefined" && document.getElementById("app-list")) {
  boot(document);
}
