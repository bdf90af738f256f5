/** Socket state machine: connect, reconnect with backoff, throttled input.
 *
 * The socket factory and clock are injectable so the whole protocol flow is
 * testable without a network or real timers. The client never mutates game
 * state locally; every visual change originates from a server snapshot.
 */
import {
  ActionDir,
  Snapshot,
  actionMessage,
  parseServerMessage,
  resetMessage,
  stateMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = () => SocketLike;

export interface ClientHooks {
  onSnapshot(snapshot: Snapshot): void;
  onStatus(status: "connecting" | "connected" | "disconnected"): void;
  onError(message: string): void;
}

export interface ClientOptions {
  /** Minimum interval between outbound action messages (one per tick). */
  tickMs?: number;
  initialBackoffMs?: number;
  maxBackoffMs?: number;
  now?: () => number;
  schedule?: (fn: () => void, ms: number) => void;
}

const KEY_DIRECTIONS: Record<string, ActionDir> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
};

export class GameClient {
  private socket: SocketLike | null = null;
  private lastActionAt = Number.NEGATIVE_INFINITY;
  private backoffMs: number;
  private stopped = false;

  private readonly tickMs: number;
  private readonly initialBackoffMs: number;
  private readonly maxBackoffMs: number;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => void;

  constructor(
    private readonly factory: SocketFactory,
    private readonly hooks: ClientHooks,
    options: ClientOptions = {},
  ) {
    this.tickMs = options.tickMs ?? 250;
    this.initialBackoffMs = options.initialBackoffMs ?? 500;
    this.maxBackoffMs = options.maxBackoffMs ?? 8000;
    this.now = options.now ?? (() => Date.now());
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.backoffMs = this.initialBackoffMs;
  }

  connect(): void {
    this.hooks.onStatus("connecting");
    const socket = this.factory();
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = this.initialBackoffMs;
      this.hooks.onStatus("connected");
      // resynchronize: ask for the current state on every (re)open
      socket.send(stateMessage());
    };
    socket.onmessage = (event) => this.handleRaw(event.data);
    socket.onclose = () => {
      this.socket = null;
      this.hooks.onStatus("disconnected");
      if (this.stopped) return;
      const delay = this.backoffMs;
      this.backoffMs = Math.min(this.backoffMs * 2, this.maxBackoffMs);
      this.schedule(() => this.connect(), delay);
    };
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }

  /** Keyboard entry point: arrows move (throttled to one action per tick),
   * "r" resets. Returns true when a message was sent. */
  handleKey(key: string): boolean {
    if (key === "r" || key === "R") {
      this.socket?.send(resetMessage());
      return this.socket !== null;
    }
    const dir = KEY_DIRECTIONS[key];
    if (dir === undefined || this.socket === null) return false;
    const t = this.now();
    if (t - this.lastActionAt < this.tickMs) return false;
    this.lastActionAt = t;
    this.socket.send(actionMessage(dir));
    return true;
  }

  private handleRaw(raw: string): void {
    const msg = parseServerMessage(raw);
    if (msg === null) {
      this.hooks.onError("malformed server message");
      return;
    }
    if (msg.type === "snapshot") {
      this.hooks.onSnapshot(msg);
    } else if (msg.type === "error") {
      this.hooks.onError(msg.message);
    }
    // acks carry no information beyond delivery
  }
}
