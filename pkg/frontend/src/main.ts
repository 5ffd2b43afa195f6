// Console entry point: wires the canvas, pointer gestures, the parameter
// panel and the live connection together.

import { ConsoleClient } from "./client.js";
import { handlePointer } from "./pointer.js";
import { setParamsMessage, startMessage, stopMessage } from "./protocol.js";
import { drawView } from "./render.js";
import { ViewTransform } from "./transform.js";
import {
  applyConnection,
  applyFrame,
  applyServerMessage,
  initialState,
  setDrawMode,
} from "./viewstate.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;

let state = initialState();
let transform = new ViewTransform(canvas.width, canvas.height, 256, 256);

const wsUrl = location.origin.replace(/^http/, "ws") + "/";
const client = new ConsoleClient(wsUrl, {
  onMessage: (message) => {
    state = applyServerMessage(state, message, performance.now());
    if (message.type === "hello") {
      transform = new ViewTransform(canvas.width, canvas.height,
                                    message.width, message.height);
      syncFormFromState();
    }
  },
  onFrame: (frame) => {
    state = applyFrame(state, frame);
  },
  onStatus: (connected) => {
    state = applyConnection(state, connected ? "connected" : "disconnected");
  },
});

function canvasPoint(ev: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: (ev.clientX - rect.left) * (canvas.width / rect.width),
    y: (ev.clientY - rect.top) * (canvas.height / rect.height),
  };
}

function onPointer(kind: "down" | "move" | "up", ev: MouseEvent): void {
  const p = canvasPoint(ev);
  const outcome = handlePointer(
    state, { kind, button: ev.button, x: p.x, y: p.y }, transform);
  state = outcome.state;
  if (outcome.message) {
    client.send(outcome.message);
  }
}

canvas.addEventListener("mousedown", (ev) => onPointer("down", ev));
canvas.addEventListener("mousemove", (ev) => onPointer("move", ev));
canvas.addEventListener("mouseup", (ev) => onPointer("up", ev));
canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());

// -- parameter panel -----------------------------------------------------------

const form = {
  samples: document.getElementById("samples") as HTMLInputElement,
  epsilon: document.getElementById("epsilon") as HTMLInputElement,
  field: document.getElementById("field") as HTMLInputElement,
  spacing: document.getElementById("spacing") as HTMLInputElement,
};

function syncFormFromState(): void {
  form.samples.value = String(state.form.samplesPerUpdate);
  form.epsilon.value = String(state.form.arrivalEpsilon);
  form.field.value = String(state.form.fieldMagnitude * 1e3);
  form.spacing.value = String(state.form.nodeSpacing);
}

document.getElementById("apply")!.addEventListener("click", () => {
  state = {
    ...state,
    form: {
      samplesPerUpdate: Number(form.samples.value),
      arrivalEpsilon: Number(form.epsilon.value),
      fieldMagnitude: Number(form.field.value) * 1e-3,
      nodeSpacing: Number(form.spacing.value),
    },
  };
  client.send(setParamsMessage({
    samples_per_update: state.form.samplesPerUpdate,
    arrival_epsilon: state.form.arrivalEpsilon,
    field_magnitude: state.form.fieldMagnitude,
    node_spacing: state.form.nodeSpacing,
  }));
});

const drawToggle = document.getElementById("draw") as HTMLInputElement;
drawToggle.addEventListener("change", () => {
  state = setDrawMode(state, drawToggle.checked);
});

document.getElementById("start")!.addEventListener("click", () => {
  client.send(startMessage());
});
document.getElementById("stop")!.addEventListener("click", () => {
  client.send(stopMessage());
});

// -- render loop -----------------------------------------------------------------

function tick(): void {
  drawView(ctx, state, transform, performance.now());
  requestAnimationFrame(tick);
}
requestAnimationFrame(tick);
