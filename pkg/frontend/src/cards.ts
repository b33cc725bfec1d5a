import type { Action, AppSettings, PolicyCard } from "./types.js";

const ACTIONS: Action[] = ["Allow", "Ask", "Deny"];

export function originLabel(origin: string): string {
  if (origin === "*" || origin === "any") return "any destination";
  if (origin === "first-party") return "used by the app itself";
  if (origin.startsWith("third-party:")) return `sent to ${origin.split(":", 2)[1]}`;
  return origin;
}

/**
 * Render one app's settings screen: a card per (permission, purpose,
 * destination) with an action selector. Org-mandated cards come back with
 * locked=true and render a disabled control.
 */
export function renderSettingsCards(
  container: HTMLElement,
  view: AppSettings,
  onChange: (card: PolicyCard, action: Action) => void,
): void {
  container.textContent = "";
  for (const card of view.cards) {
    container.appendChild(cardElement(container.ownerDocument, card, onChange));
  }
}

function cardElement(
  doc: Document,
  card: PolicyCard,
  onChange: (card: PolicyCard, action: Action) => void,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = card.locked ? "card locked" : "card";
  root.dataset.permission = card.permission;
  root.dataset.purpose = card.purpose;

  const title = doc.createElement("div");
  title.className = "card-title";
  title.textContent = card.permission_display;
  root.appendChild(title);

  const context = doc.createElement("div");
  context.className = "card-context";
  context.textContent = `${card.purpose_display} · ${originLabel(card.origin)}`;
  root.appendChild(context);

  for (const reason of card.for) {
    const why = doc.createElement("div");
    why.className = "card-reason";
    why.textContent = reason;
    root.appendChild(why);
  }

  const select = doc.createElement("select");
  select.className = "card-action";
  for (const action of ACTIONS) {
    const option = doc.createElement("option");
    option.value = action;
    option.textContent = action;
    select.appendChild(option);
  }
  select.value = card.action;
  select.disabled = card.locked;
  select.addEventListener("change", () => onChange(card, select.value as Action));
  root.appendChild(select);

  if (card.locked) {
    const badge = doc.createElement("span");
    badge.className = "card-lock";
    badge.textContent = "Managed by your organization";
    root.appendChild(badge);
  }
  return root;
}
