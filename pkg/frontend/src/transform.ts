// Canvas <-> frame coordinate transform.  The frame is letterboxed into the
// canvas preserving aspect ratio; all pointer math goes through here so the
// session only ever sees frame pixels.

import type { Point } from "./protocol.js";

export class ViewTransform {
  readonly scale: number;
  readonly offsetX: number;
  readonly offsetY: number;

  constructor(
    readonly canvasWidth: number,
    readonly canvasHeight: number,
    readonly frameWidth: number,
    readonly frameHeight: number,
  ) {
    this.scale = Math.min(canvasWidth / frameWidth, canvasHeight / frameHeight);
    this.offsetX = (canvasWidth - frameWidth * this.scale) / 2;
    this.offsetY = (canvasHeight - frameHeight * this.scale) / 2;
  }

  frameToCanvas(p: Point): Point {
    return {
      x: this.offsetX + p.x * this.scale,
      y: this.offsetY + p.y * this.scale,
    };
  }

  /** Canvas point to frame pixels; null outside the displayed frame area. */
  canvasToFrame(p: Point): Point | null {
    // Half-pixel slack so border clicks (and float noise on the exact edge)
    // still land inside, then clamp to the frame.
    const slack = 0.5;
    const x = (p.x - this.offsetX) / this.scale;
    const y = (p.y - this.offsetY) / this.scale;
    if (x < -slack || y < -slack
        || x > this.frameWidth + slack || y > this.frameHeight + slack) {
      return null;
    }
    return {
      x: Math.min(this.frameWidth, Math.max(0, x)),
      y: Math.min(this.frameHeight, Math.max(0, y)),
    };
  }
}
