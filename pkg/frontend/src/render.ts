// Canvas rendering of the live view: camera frame, tracked-robot highlight,
// field-direction arrow, plan nodes (green, current highlighted), desired
// path in red and the realized trail in black.

import type { Snapshot } from "./protocol.js";
import type { ViewTransform } from "./transform.js";
import { isStale, type ViewState } from "./viewstate.js";

const HIGHLIGHT_RADIUS = 14;
const NODE_RADIUS = 4;
const ARROW_LENGTH = 36;

export function drawView(ctx: CanvasRenderingContext2D, state: ViewState,
                         tf: ViewTransform, nowMs: number): void {
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, tf.canvasWidth, tf.canvasHeight);

  drawFrame(ctx, state, tf);
  const snap = state.snapshot;
  if (snap) {
    drawPlan(ctx, snap, tf);
    drawTrail(ctx, state, tf);
    drawTarget(ctx, snap, tf);
    drawRobot(ctx, snap, tf);
  }
  drawPendingPath(ctx, state, tf);

  if (state.connection !== "connected" || isStale(state, nowMs)) {
    ctx.fillStyle = "rgba(40, 40, 40, 0.55)";
    ctx.fillRect(0, 0, tf.canvasWidth, tf.canvasHeight);
  }
  drawBanner(ctx, state, tf, nowMs);
}

function drawFrame(ctx: CanvasRenderingContext2D, state: ViewState,
                   tf: ViewTransform): void {
  const frame = state.frame;
  if (!frame) {
    return;
  }
  const image = ctx.createImageData(frame.width, frame.height);
  const rgba = image.data;
  for (let i = 0; i < frame.data.length; i++) {
    const g = frame.data[i];
    const j = i * 4;
    rgba[j] = g;
    rgba[j + 1] = g;
    rgba[j + 2] = g;
    rgba[j + 3] = 255;
  }
  // Draw at native size on an offscreen canvas, then scale onto the view.
  const off = document.createElement("canvas");
  off.width = frame.width;
  off.height = frame.height;
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, tf.offsetX, tf.offsetY,
                frame.width * tf.scale, frame.height * tf.scale);
}

function drawPlan(ctx: CanvasRenderingContext2D, snap: Snapshot,
                  tf: ViewTransform): void {
  if (!snap.plan) {
    return;
  }
  const nodes = snap.plan.nodes.map(([x, y]) => tf.frameToCanvas({ x, y }));
  // Desired trajectory in red.
  ctx.strokeStyle = "#d33";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  nodes.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
  ctx.stroke();
  // Nodes in green: visited filled dim, current ringed bright.
  nodes.forEach((p, i) => {
    ctx.beginPath();
    ctx.arc(p.x, p.y, NODE_RADIUS, 0, 2 * Math.PI);
    if (i < snap.plan!.index) {
      ctx.fillStyle = "#2a5";
      ctx.fill();
    } else if (i === snap.plan!.index) {
      ctx.fillStyle = "#3f6";
      ctx.fill();
      ctx.strokeStyle = "#3f6";
      ctx.beginPath();
      ctx.arc(p.x, p.y, NODE_RADIUS + 4, 0, 2 * Math.PI);
      ctx.stroke();
    } else {
      ctx.strokeStyle = "#2a5";
      ctx.stroke();
    }
  });
}

function drawTrail(ctx: CanvasRenderingContext2D, state: ViewState,
                   tf: ViewTransform): void {
  if (state.trail.length < 2) {
    return;
  }
  ctx.strokeStyle = "#000";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  state.trail.forEach((fp, i) => {
    const p = tf.frameToCanvas(fp);
    i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y);
  });
  ctx.stroke();
}

function drawTarget(ctx: CanvasRenderingContext2D, snap: Snapshot,
                    tf: ViewTransform): void {
  if (!snap.target) {
    return;
  }
  const p = tf.frameToCanvas({ x: snap.target[0], y: snap.target[1] });
  ctx.strokeStyle = "#d33";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(p.x - 8, p.y);
  ctx.lineTo(p.x + 8, p.y);
  ctx.moveTo(p.x, p.y - 8);
  ctx.lineTo(p.x, p.y + 8);
  ctx.stroke();
}

function drawRobot(ctx: CanvasRenderingContext2D, snap: Snapshot,
                   tf: ViewTransform): void {
  if (!snap.track) {
    return;
  }
  const p = tf.frameToCanvas({ x: snap.track.x, y: snap.track.y });
  ctx.strokeStyle = snap.track.lost ? "#f80" : "#e22";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(p.x, p.y, HIGHLIGHT_RADIUS, 0, 2 * Math.PI);
  ctx.stroke();

  if (snap.field) {
    const len = ARROW_LENGTH;
    const dx = snap.field.bx * len;
    const dy = snap.field.by * len;
    ctx.strokeStyle = "#08f";
    ctx.beginPath();
    ctx.moveTo(p.x, p.y);
    ctx.lineTo(p.x + dx, p.y + dy);
    const tip = Math.atan2(dy, dx);
    ctx.lineTo(p.x + dx - 7 * Math.cos(tip - 0.4), p.y + dy - 7 * Math.sin(tip - 0.4));
    ctx.moveTo(p.x + dx, p.y + dy);
    ctx.lineTo(p.x + dx - 7 * Math.cos(tip + 0.4), p.y + dy - 7 * Math.sin(tip + 0.4));
    ctx.stroke();
  }
}

function drawPendingPath(ctx: CanvasRenderingContext2D, state: ViewState,
                         tf: ViewTransform): void {
  if (state.pendingPath.length < 2) {
    return;
  }
  ctx.strokeStyle = "#d33";
  ctx.setLineDash([4, 3]);
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  state.pendingPath.forEach((fp, i) => {
    const p = tf.frameToCanvas(fp);
    i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y);
  });
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawBanner(ctx: CanvasRenderingContext2D, state: ViewState,
                    tf: ViewTransform, nowMs: number): void {
  const bits: string[] = [state.connection];
  if (state.snapshot) {
    bits.push(`t=${state.snapshot.t.toFixed(2)}s`, state.snapshot.phase);
  }
  if (isStale(state, nowMs)) {
    bits.push("STALE");
  }
  if (state.drawMode) {
    bits.push("draw mode");
  }
  if (state.notice) {
    bits.push(state.notice);
  }
  ctx.fillStyle = "#fff";
  ctx.font = "13px monospace";
  ctx.fillText(bits.join("  |  "), 8, tf.canvasHeight - 10);
}
