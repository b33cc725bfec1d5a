import type { PromptTicket } from "./types.js";

// Extract the data payload from one SSE event block, or null for
// comment/keepalive blocks that carry no data lines.
export function eventData(block: string): string | null {
  const lines = block.split("\n").filter((line) => line.startsWith("data:"));
  if (lines.length === 0) return null;
  return lines.map((line) => line.slice(5).replace(/^ /, "")).join("\n");
}

/**
 * Follow the runtime-prompt event stream. The server replays open prompts
 * on connect, then pushes new tickets as they are raised.
 *
 * Returns a function that closes the stream.
 */
export function watchPrompts(
  base: string,
  onPrompt: (ticket: PromptTicket) => void,
  onError?: (err: unknown) => void,
): () => void {
  const controller = new AbortController();

  void (async () => {
    try {
      const res = await fetch(`${base}/prompts`, {
        headers: { Accept: "text/event-stream" },
        signal: controller.signal,
      });
      if (!res.ok || !res.body) {
        throw new Error(`prompt stream failed: ${res.status}`);
      }
      const reader = res.body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        let cut;
        while ((cut = buffer.indexOf("\n\n")) >= 0) {
          const block = buffer.slice(0, cut);
          buffer = buffer.slice(cut + 2);
          const data = eventData(block);
          if (data === null) continue;
          try {
            onPrompt(JSON.parse(data) as PromptTicket);
          } catch {
            // skip frames that are not valid JSON
          }
        }
      }
    } catch (err) {
      if (!controller.signal.aborted) onError?.(err);
    }
  })();

  return () => controller.abort();
}
