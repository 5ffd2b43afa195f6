// Console view state and its pure update functions.  The console never
// simulates anything locally: everything rendered comes from the snapshot
// stream, so a reconnect mid-run rebuilds the identical view.

import type {
  Ack,
  FrameImage,
  Hello,
  Point,
  ServerMessage,
  Snapshot,
} from "./protocol.js";

export const TRAIL_CAPACITY = 600;   // ~30 s of tracked positions at 20 fps
export const STALE_AFTER_MS = 1000;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface ParamForm {
  samplesPerUpdate: number;
  arrivalEpsilon: number;
  fieldMagnitude: number;
  nodeSpacing: number;
}

export interface ViewState {
  connection: ConnectionStatus;
  hello: Hello | null;
  snapshot: Snapshot | null;        // latest-only slot, never queued
  lastSnapshotAtMs: number | null;
  frame: FrameImage | null;
  trail: Point[];
  drawMode: boolean;
  drawing: boolean;
  pendingPath: Point[];             // frame px accumulated during a drag
  form: ParamForm;
  notice: string | null;
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    hello: null,
    snapshot: null,
    lastSnapshotAtMs: null,
    frame: null,
    trail: [],
    drawMode: false,
    drawing: false,
    pendingPath: [],
    form: {
      samplesPerUpdate: 10,
      arrivalEpsilon: 10,
      fieldMagnitude: 2e-3,
      nodeSpacing: 40,
    },
    notice: null,
  };
}

export function applyConnection(state: ViewState,
                                status: ConnectionStatus): ViewState {
  return { ...state, connection: status };
}

export function applyFrame(state: ViewState, frame: FrameImage): ViewState {
  return { ...state, frame };
}

export function applyServerMessage(state: ViewState, message: ServerMessage,
                                   nowMs: number): ViewState {
  switch (message.type) {
    case "hello":
      return applyHello(state, message);
    case "snap":
      return applySnapshot(state, message, nowMs);
    case "ack":
      return applyAck(state, message);
    case "error":
      return { ...state, notice: `protocol error: ${message.reason}` };
  }
}

export function applyHello(state: ViewState, hello: Hello): ViewState {
  return {
    ...state,
    connection: "connected",
    hello,
    form: {
      samplesPerUpdate: hello.params.samples_per_update,
      arrivalEpsilon: hello.params.arrival_epsilon,
      fieldMagnitude: hello.params.field_magnitude,
      nodeSpacing: hello.params.node_spacing,
    },
  };
}

export function applySnapshot(state: ViewState, snap: Snapshot,
                              nowMs: number): ViewState {
  let trail = state.trail;
  if (snap.track && !snap.track.lost) {
    trail = [...trail, { x: snap.track.x, y: snap.track.y }];
    if (trail.length > TRAIL_CAPACITY) {
      trail = trail.slice(trail.length - TRAIL_CAPACITY);
    }
  }
  return { ...state, snapshot: snap, trail, lastSnapshotAtMs: nowMs };
}

export function applyAck(state: ViewState, ack: Ack): ViewState {
  if (ack.status === "ok") {
    // A fresh selection invalidates the old trail.
    if (ack.event === "select_robot") {
      return { ...state, trail: [], notice: null };
    }
    return { ...state, notice: null };
  }
  return { ...state, notice: `${ack.event} rejected: ${ack.reason}` };
}

export function isStale(state: ViewState, nowMs: number): boolean {
  return (
    state.lastSnapshotAtMs !== null
    && nowMs - state.lastSnapshotAtMs > STALE_AFTER_MS
  );
}

export function setDrawMode(state: ViewState, on: boolean): ViewState {
  return { ...state, drawMode: on, drawing: false, pendingPath: [] };
}
