/** WebSocket message types and strict snapshot validation.
 *
 * The client renders only validated snapshots; anything malformed is
 * reported and the previous frame stays on screen.
 */

export interface Snapshot {
  type: "snapshot";
  tick: number;
  width: number;
  height: number;
  cells: number[];
  sprites: string[];
}

export type ServerMessage =
  | Snapshot
  | { type: "ack" }
  | { type: "error"; message: string };

export type ActionDir = "up" | "down" | "left" | "right";

function isInt(x: unknown): x is number {
  return typeof x === "number" && Number.isInteger(x);
}

/** Returns the snapshot when structurally valid, otherwise null. */
export function validateSnapshot(msg: unknown): Snapshot | null {
  if (typeof msg !== "object" || msg === null) return null;
  const m = msg as Record<string, unknown>;
  if (m.type !== "snapshot") return null;
  if (!isInt(m.tick) || m.tick < 0) return null;
  if (!isInt(m.width) || m.width <= 0) return null;
  if (!isInt(m.height) || m.height <= 0) return null;
  if (!Array.isArray(m.sprites) || m.sprites.length === 0) return null;
  if (!m.sprites.every((s) => typeof s === "string")) return null;
  const sprites = m.sprites as string[];
  if (!Array.isArray(m.cells)) return null;
  if (m.cells.length !== m.width * m.height) return null;
  if (!m.cells.every((c) => isInt(c) && c >= 0 && c < sprites.length)) return null;
  return {
    type: "snapshot",
    tick: m.tick,
    width: m.width,
    height: m.height,
    cells: m.cells as number[],
    sprites,
  };
}

/** Parses raw socket text into a server message, or null when malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const m = data as Record<string, unknown>;
  if (m.type === "snapshot") return validateSnapshot(m);
  if (m.type === "ack") return { type: "ack" };
  if (m.type === "error") {
    return { type: "error", message: typeof m.message === "string" ? m.message : "unknown error" };
  }
  return null;
}

export function actionMessage(dir: ActionDir): string {
  return JSON.stringify({ type: "action", dir });
}

export function resetMessage(): string {
  return JSON.stringify({ type: "reset" });
}

export function stateMessage(): string {
  return JSON.stringify({ type: "state" });
}
