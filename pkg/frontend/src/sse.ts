// SSE subscription over fetch streaming. Built on fetch instead of
// EventSource so the reconnect policy is ours and tests can feed scripted
// streams. If the stream drops before a terminal phase, we resubscribe;
// the server replays the terminal event to late subscribers, so nothing
// is lost across the gap.

import type { FetchLike } from "./api.js";
import type { JobState } from "./types.js";

export interface Subscription {
  close(): void;
}

export function parseSseChunk(buffer: string): { events: string[]; rest: string } {
  const events: string[] = [];
  let rest = buffer;
  for (;;) {
    const sep = rest.indexOf("\n\n");
    if (sep < 0) break;
    const frame = rest.slice(0, sep);
    rest = rest.slice(sep + 2);
    for (const line of frame.split("\n")) {
      if (line.startsWith("data: ")) {
        events.push(line.slice(6));
      }
    }
  }
  return { events, rest };
}

export function subscribeJobEvents(
  fetchImpl: FetchLike,
  url: string,
  onState: (state: JobState) => void,
  onError: (err: unknown) => void = () => {},
  retryDelayMs = 500,
): Subscription {
  let closed = false;
  let sawTerminal = false;

  async function readOnce(): Promise<void> {
    const resp = await fetchImpl(url, { headers: { accept: "text/event-stream" } });
    if (!resp.ok || !resp.body) {
      throw new Error(`event stream failed: HTTP ${resp.status}`);
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (closed) {
        await reader.cancel().catch(() => {});
        return;
      }
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      const { events, rest } = parseSseChunk(buffer);
      buffer = rest;
      for (const raw of events) {
        const state = JSON.parse(raw) as JobState;
        sawTerminal = state.phase === "done" || state.phase === "failed";
        onState(state);
      }
    }
  }

  (async () => {
    while (!closed && !sawTerminal) {
      try {
        await readOnce();
      } catch (err) {
        if (!closed) onError(err);
      }
      if (!closed && !sawTerminal) {
        await new Promise((r) => setTimeout(r, retryDelayMs));
      }
    }
  })();

  return { close: () => { closed = true; } };
}
