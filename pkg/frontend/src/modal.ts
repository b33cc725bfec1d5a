import type { Decision, PromptTicket } from "./types.js";

export type PromptAnswer = (
  id: string,
  action: "Allow" | "Deny",
  remember: string,
) => Promise<Decision[]>;

export interface PromptModalOptions {
  onDecided?: (decisions: Decision[]) => void;
  document?: Document;
}

/**
 * Modal dialog for runtime prompts. Tickets queue up and are shown one at
 * a time; answering (or failing to answer an already-expired ticket)
 * advances to the next.
 */
export class PromptModal {
  readonly root: HTMLElement;
  private queue: PromptTicket[] = [];
  private current: PromptTicket | null = null;
  private seen = new Set<string>();
  private message: HTMLElement;
  private context: HTMLElement;
  private remember: HTMLSelectElement;
  private allowButton: HTMLButtonElement;
  private denyButton: HTMLButtonElement;

  constructor(
    private answer: PromptAnswer,
    private options: PromptModalOptions = {},
  ) {
    const doc = options.document ?? document;
    this.root = doc.createElement("div");
    this.root.className = "prompt-modal";
    this.root.hidden = true;

    const box = doc.createElement("div");
    box.className = "prompt-box";
    this.root.appendChild(box);

    this.message = doc.createElement("div");
    this.message.className = "prompt-message";
    box.appendChild(this.message);

    this.context = doc.createElement("div");
    this.context.className = "prompt-context";
    box.appendChild(this.context);

    const rememberRow = doc.createElement("label");
    rememberRow.className = "prompt-remember";
    rememberRow.textContent = "Remember this answer: ";
    this.remember = doc.createElement("select");
    for (const [value, label] of [
      ["none", "just this once"],
      ["this-app", "for this app"],
      ["all-apps", "for all apps"],
    ]) {
      const option = doc.createElement("option");
      option.value = value;
      option.textContent = label;
      this.remember.appendChild(option);
    }
    rememberRow.appendChild(this.remember);
    box.appendChild(rememberRow);

    const buttons = doc.createElement("div");
    buttons.className = "prompt-buttons";
    this.denyButton = doc.createElement("button");
    this.denyButton.className = "deny";
    this.denyButton.textContent = "Deny";
    this.denyButton.addEventListener("click", () => this.submit("Deny"));
    this.allowButton = doc.createElement("button");
    this.allowButton.className = "allow";
    this.allowButton.textContent = "Allow";
    this.allowButton.addEventListener("click", () => this.submit("Allow"));
    buttons.appendChild(this.denyButton);
    buttons.appendChild(this.allowButton);
    box.appendChild(buttons);
  }

  get visible(): boolean {
    return !this.root.hidden;
  }

  get currentTicket(): PromptTicket | null {
    return this.current;
  }

  push(ticket: PromptTicket): void {
    if (this.seen.has(ticket.id)) return;
    this.seen.add(ticket.id);
    this.queue.push(ticket);
    if (!this.current) this.next();
  }

  private next(): void {
    const ticket = this.queue.shift() ?? null;
    this.current = ticket;
    if (!ticket) {
      this.root.hidden = true;
      return;
    }
    this.message.textContent =
      `Allow ${ticket.app_name} to use ${ticket.permission_display} ` +
      `${ticket.purpose_display}?`;
    const parts = [ticket.for, ticket.origin === "*" ? "" : originNote(ticket.origin)];
    this.context.textContent = parts.filter(Boolean).join(" — ");
    this.remember.value = "none";
    this.setBusy(false);
    this.root.hidden = false;
  }

  private submit(action: "Allow" | "Deny"): void {
    const ticket = this.current;
    if (!ticket) return;
    this.setBusy(true);
    this.answer(ticket.id, action, this.remember.value).then(
      (decisions) => {
        this.options.onDecided?.(decisions);
        this.next();
      },
      () => {
        // ticket already expired or answered elsewhere; move on
        this.next();
      },
    );
  }

  private setBusy(busy: boolean): void {
    this.allowButton.disabled = busy;
    this.denyButton.disabled = busy;
  }
}

function originNote(origin: string): string {
  if (origin === "first-party") return "data stays with the app";
  if (origin.startsWith("third-party:")) return `data goes to ${origin.split(":", 2)[1]}`;
  return "";
}
