/** Transport to the bridge: snapshot/write over HTTP, live updates over a
 * WebSocket that reconnects with exponential backoff. Both the fetch
 * implementation and the socket factory are injectable for tests. */

import { StreamRecord, VarsResponse } from "./types";

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

/** Structural subset of the DOM WebSocket (and ws's), so tests can hand
 * in fakes; handler params are any-typed for DOM assignability. */
export interface SocketLike {
  onopen: ((event: any) => void) | null;
  onclose: ((event: any) => void) | null;
  onerror: ((event: any) => void) | null;
  onmessage: ((event: any) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export class BridgeClient {
  constructor(private baseUrl: string, private fetchFn: FetchLike) {}

  async fetchSnapshot(): Promise<VarsResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/api/vars`);
    if (!response.ok) {
      throw new Error(`snapshot failed with status ${response.status}`);
    }
    return (await response.json()) as VarsResponse;
  }

  async postVar(name: string, value: number): Promise<void> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/vars/${encodeURIComponent(name)}`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ value }),
      });
    if (!response.ok) {
      throw new Error(`write rejected with status ${response.status}`);
    }
  }
}

export interface StreamOptions {
  baseDelayMs?: number;
  maxDelayMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

export class ReconnectingStream {
  onRecord: ((record: StreamRecord) => void) | null = null;
  onStatus: ((connected: boolean) => void) | null = null;

  private socket: SocketLike | null = null;
  private closed = false;
  private attempts = 0;
  private readonly baseDelayMs: number;
  private readonly maxDelayMs: number;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;

  constructor(private url: string, private factory: SocketFactory,
              options: StreamOptions = {}) {
    this.baseDelayMs = options.baseDelayMs ?? 500;
    this.maxDelayMs = options.maxDelayMs ?? 15_000;
    this.setTimeoutFn = options.setTimeoutFn
      ?? ((fn, ms) => setTimeout(fn, ms));
  }

  retryDelayMs(attempt: number): number {
    return Math.min(this.baseDelayMs * 2 ** attempt, this.maxDelayMs);
  }

  connect(): void {
    if (this.closed) {
      return;
    }
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.onStatus?.(true);
    };
    socket.onmessage = (event: { data: string }) => {
      this.onRecord?.(JSON.parse(event.data) as StreamRecord);
    };
    socket.onclose = () => {
      this.onStatus?.(false);
      this.scheduleReconnect();
    };
    socket.onerror = () => {
      // the close handler owns reconnection; nothing to do here
    };
  }

  private scheduleReconnect(): void {
    if (this.closed) {
      return;
    }
    const delay = this.retryDelayMs(this.attempts);
    this.attempts += 1;
    this.setTimeoutFn(() => this.connect(), delay);
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
