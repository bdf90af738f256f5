/** Tile rendering of validated snapshots through an injectable painter.
 *
 * The painter abstraction keeps the renderer testable without a real canvas;
 * the production painter wraps CanvasRenderingContext2D.
 */
import type { Snapshot } from "./protocol.js";

export interface TilePainter {
  /** Prepare a frame surface of the given pixel size. */
  begin(widthPx: number, heightPx: number): void;
  /** Fill one tile at lattice position (col, row). */
  tile(col: number, row: number, sizePx: number, color: string): void;
}

export const BACKGROUND_COLOR = "#101018";

const PALETTE = [
  "#f2c14e",
  "#e4572e",
  "#4d9de0",
  "#3bb273",
  "#b14de0",
  "#e04d8a",
  "#76e04d",
  "#e0cb4d",
];

/** Color for a sprite id: empty ids render as background, others get a
 * stable palette entry keyed by id. */
export function colorFor(id: number, sprites: string[]): string {
  if (sprites[id] === "EMPTY" || id === 0) return BACKGROUND_COLOR;
  return PALETTE[(id - 1) % PALETTE.length] as string;
}

export class GridRenderer {
  private last: Snapshot | null = null;

  constructor(
    private readonly painter: TilePainter,
    readonly tileSize: number = 40,
  ) {}

  get lastSnapshot(): Snapshot | null {
    return this.last;
  }

  render(snapshot: Snapshot): void {
    this.last = snapshot;
    this.paint(snapshot);
  }

  /** Redraws the previous valid frame (after an error, resize, etc.). */
  repaintLast(): void {
    if (this.last !== null) this.paint(this.last);
  }

  private paint(s: Snapshot): void {
    this.painter.begin(s.width * this.tileSize, s.height * this.tileSize);
    for (let row = 0; row < s.height; row++) {
      for (let col = 0; col < s.width; col++) {
        const id = s.cells[row * s.width + col] as number;
        this.painter.tile(col, row, this.tileSize, colorFor(id, s.sprites));
      }
    }
  }
}

/** Painter over a 2D canvas context. */
export function canvasPainter(canvas: HTMLCanvasElement): TilePainter {
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("2D canvas context unavailable");
  return {
    begin(widthPx: number, heightPx: number): void {
      canvas.width = widthPx;
      canvas.height = heightPx;
      ctx.fillStyle = BACKGROUND_COLOR;
      ctx.fillRect(0, 0, widthPx, heightPx);
    },
    tile(col: number, row: number, sizePx: number, color: string): void {
      ctx.fillStyle = color;
      ctx.fillRect(col * sizePx, row * sizePx, sizePx, sizePx);
    },
  };
}
