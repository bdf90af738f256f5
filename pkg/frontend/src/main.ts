/** Browser wiring: canvas painter, WebSocket, keyboard. */
import { GameClient, SocketLike } from "./client.js";
import { GridRenderer, canvasPainter } from "./renderer.js";

function element<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

const canvas = element<HTMLCanvasElement>("board");
const status = element<HTMLElement>("status");
const banner = element<HTMLElement>("banner");
const tickLabel = element<HTMLElement>("tick");

const renderer = new GridRenderer(canvasPainter(canvas));

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;

const client = new GameClient(
  () => new WebSocket(wsUrl) as unknown as SocketLike,
  {
    onSnapshot(snapshot) {
      banner.hidden = true;
      tickLabel.textContent = `tick ${snapshot.tick}`;
      renderer.render(snapshot);
    },
    onStatus(state) {
      status.textContent = state;
      status.dataset.state = state;
    },
    onError(message) {
      banner.hidden = false;
      banner.textContent = message;
      renderer.repaintLast();
    },
  },
);

window.addEventListener("keydown", (event) => {
  if (client.handleKey(event.key)) event.preventDefault();
});

client.connect();
