// Thin WebSocket wrapper: dispatches text/binary messages and reconnects
// with a capped backoff.  Browser-only (uses the DOM WebSocket).

import { decodeFrame, decodeServerMessage, type FrameImage,
         type ServerMessage } from "./protocol.js";

export interface ClientCallbacks {
  onMessage: (message: ServerMessage) => void;
  onFrame: (frame: FrameImage) => void;
  onStatus: (connected: boolean) => void;
}

export class ConsoleClient {
  private ws: WebSocket | null = null;
  private closed = false;
  private retryMs = 500;

  constructor(private readonly url: string,
              private readonly callbacks: ClientCallbacks) {
    this.open();
  }

  private open(): void {
    const ws = new WebSocket(this.url);
    ws.binaryType = "arraybuffer";
    this.ws = ws;

    ws.onopen = () => {
      this.retryMs = 500;
      this.callbacks.onStatus(true);
    };
    ws.onmessage = (ev: MessageEvent) => {
      if (ev.data instanceof ArrayBuffer) {
        this.callbacks.onFrame(decodeFrame(ev.data));
        return;
      }
      try {
        this.callbacks.onMessage(decodeServerMessage(ev.data as string));
      } catch {
        // Ignore messages we cannot decode; the server versions every one.
      }
    };
    ws.onclose = () => {
      this.callbacks.onStatus(false);
      if (!this.closed) {
        setTimeout(() => this.open(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    };
  }

  send(message: string): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(message);
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
