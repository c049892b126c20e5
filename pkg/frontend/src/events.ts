// Live feed over the server-sent event stream, with cursor resume: on any
// disconnect the feed reconnects from the last delivered cursor, so nothing
// is lost or reordered.

export interface ContractEvent {
  kind: string;
  payload: Record<string, unknown>;
  block_height: number;
  tx_position: number;
}

export interface EventFrame {
  cursor: number;
  event: ContractEvent;
}

type FetchLike = typeof fetch;

export class EventFeed {
  cursor: number;
  private stopped = false;
  private controller: AbortController | null = null;
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    readonly onEvent: (frame: EventFrame) => void,
    startCursor = 0,
    fetchFn?: FetchLike,
    readonly retryMs = 300,
  ) {
    this.cursor = startCursor;
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.consumeOnce();
      } catch {
        /* connection dropped; resume from the cursor */
      }
      if (!this.stopped) {
        await new Promise((resolve) => setTimeout(resolve, this.retryMs));
      }
    }
  }

  private async consumeOnce(): Promise<void> {
    this.controller = new AbortController();
    const response = await this.fetchFn(`${this.baseUrl}/events?cursor=${this.cursor}`, {
      signal: this.controller.signal,
    });
    if (!response.ok || response.body === null) {
      throw new Error(`event stream: HTTP ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done || this.stopped) return;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline);
        buffer = buffer.slice(newline + 1);
        if (!line.startsWith("data: ")) continue;
        const frame = JSON.parse(line.slice("data: ".length)) as EventFrame;
        if (frame.cursor <= this.cursor) continue; // at-least-once: drop replays
        this.cursor = frame.cursor;
        this.onEvent(frame);
      }
    }
  }
}
