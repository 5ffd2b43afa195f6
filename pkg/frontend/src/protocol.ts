// Wire protocol shared with the session server: JSON text messages with a
// mandatory version tag, plus binary frame messages
// (u8 version, u8 kind, u16 reserved, u32 width, u32 height, f64 timestamp,
// then row-major 8-bit pixels; all little-endian).

export const PROTOCOL_VERSION = 1;
export const FRAME_KIND = 1;
const FRAME_HEADER_BYTES = 20;

export interface Point {
  x: number;
  y: number;
}

export interface Hello {
  v: number;
  type: "hello";
  width: number;
  height: number;
  scale: number;
  frame_dt: number;
  params: {
    samples_per_update: number;
    arrival_epsilon: number;
    field_magnitude: number;
    min_speed: number;
    node_spacing: number;
  };
}

export interface TruthInfo {
  x: number;
  y: number;
  psi: number;
  delta: number;
}

export interface TrackInfo {
  x: number;
  y: number;
  vx: number | null;
  vy: number | null;
  missed: number;
  lost: boolean;
}

export interface FieldInfo {
  bx: number;
  by: number;
  mag: number;
}

export interface PlanInfo {
  nodes: [number, number][];
  index: number;
}

export interface Snapshot {
  v: number;
  type: "snap";
  frame: number;
  t: number;
  truth: TruthInfo | null;
  track: TrackInfo | null;
  phase: "idle" | "bootstrapping" | "correcting" | "station_keeping" | "lost";
  field: FieldInfo | null;
  target: [number, number] | null;
  plan: PlanInfo | null;
  metrics: { time_to_target: number | null; nodes_completed: number };
}

export interface Ack {
  v: number;
  type: "ack";
  event: string;
  status: "ok" | "rejected";
  reason: string;
}

export interface ErrorMessage {
  v: number;
  type: "error";
  reason: string;
}

export type ServerMessage = Hello | Snapshot | Ack | ErrorMessage;

export function decodeServerMessage(text: string): ServerMessage {
  const obj = JSON.parse(text);
  if (obj.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${obj.v}`);
  }
  if (obj.type !== "hello" && obj.type !== "snap" && obj.type !== "ack"
      && obj.type !== "error") {
    throw new Error(`unknown server message type ${obj.type}`);
  }
  return obj as ServerMessage;
}

export interface FrameImage {
  width: number;
  height: number;
  timestamp: number;
  data: Uint8Array;
}

export function decodeFrame(buffer: ArrayBuffer): FrameImage {
  if (buffer.byteLength < FRAME_HEADER_BYTES) {
    throw new Error("binary message shorter than the frame header");
  }
  const view = new DataView(buffer);
  const version = view.getUint8(0);
  const kind = view.getUint8(1);
  if (version !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${version}`);
  }
  if (kind !== FRAME_KIND) {
    throw new Error(`unknown binary message kind ${kind}`);
  }
  const width = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const timestamp = view.getFloat64(12, true);
  const data = new Uint8Array(buffer, FRAME_HEADER_BYTES);
  if (data.length !== width * height) {
    throw new Error("frame payload size does not match width*height");
  }
  return { width, height, timestamp, data };
}

// -- client -> server event messages ------------------------------------------

function event(name: string, fields: Record<string, unknown> = {}): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "event", name, ...fields });
}

export function selectRobotMessage(p: Point): string {
  return event("select_robot", { x: p.x, y: p.y });
}

export function setTargetMessage(p: Point): string {
  return event("set_target", { x: p.x, y: p.y });
}

export function setPathMessage(points: Point[], spacing: number): string {
  return event("set_path", {
    points: points.map((p) => [p.x, p.y]),
    spacing,
  });
}

export function setParamsMessage(params: Record<string, number>): string {
  return event("set_params", { params });
}

export function startMessage(): string {
  return event("start");
}

export function stopMessage(): string {
  return event("stop");
}

export function subscribeFramesMessage(enabled: boolean): string {
  return event("subscribe_frames", { enabled });
}
