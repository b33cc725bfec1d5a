import type { AppNotification } from "./types.js";

/** Render the silent notification feed, newest first. */
export function renderNotifications(
  container: HTMLElement,
  items: AppNotification[],
  onOpen?: (deepLink: string) => void,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const ordered = [...items].sort((a, b) => b.last_at - a.last_at);
  for (const item of ordered) {
    const row = doc.createElement("div");
    row.className = "notification";

    const text = doc.createElement("span");
    text.textContent = item.count > 1 ? `${item.message} (×${item.count})` : item.message;
    row.appendChild(text);

    const link = doc.createElement("a");
    link.className = "notification-link";
    link.href = item.deep_link;
    link.textContent = "Review";
    if (onOpen) {
      link.addEventListener("click", (ev) => {
        ev.preventDefault();
        onOpen(item.deep_link);
      });
    }
    row.appendChild(link);
    container.appendChild(row);
  }
}
