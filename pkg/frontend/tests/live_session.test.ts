// End-to-end console loop against a real live session: scripted pointer
// events (select, right-click target, freehand path) travel the same code
// path an operator's mouse does, and the snapshot stream must walk the robot
// through bootstrapping -> correcting -> station_keeping.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { handlePointer } from "../src/pointer.js";
import {
  decodeFrame,
  decodeServerMessage,
  type FrameImage,
  type ServerMessage,
  type Snapshot,
} from "../src/protocol.js";
import { ViewTransform } from "../src/transform.js";
import {
  applyFrame,
  applyServerMessage,
  initialState,
  setDrawMode,
  type ViewState,
} from "../src/viewstate.js";

// Paced at 2x real time: fast enough for a short test, slow enough that a
// scripted click lands while the robot is still near the frame it was seen in.
const RATE = "2";
const SCENARIO = `
seed = 11
duration = 600
sim.arena_width = 5.12e-5
sim.arena_height = 5.12e-5
sim.dt_physics = 0.005
sim.speed_v0 = 10e-6
sim.offset_delta = 1.0471975511965976
sim.intrinsic_omega = 0.5
cam.width_px = 256
cam.height_px = 256
cam.scale = 5e6
cam.frame_dt = 0.05
cam.select_radius = 40
robot = 5.6e-6 2.56e-5 0.0
`;

let server: ChildProcess;
let port: number;

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "console-test-"));
  const scenarioPath = join(dir, "scenario.cfg");
  writeFileSync(scenarioPath, SCENARIO);
  server = spawn("python3", ["-m", "microsteer", "serve", scenarioPath,
                             "--rate", RATE, "--port", "0"],
                 { stdio: ["ignore", "pipe", "inherit"] });
  port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server never came up")),
                             30_000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const match = /ws:\/\/[^:]+:(\d+)\//.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited: ${code}`)));
  });
});

afterAll(() => {
  server?.kill();
});

class ScriptedConsole {
  ws: WebSocket;
  state: ViewState = initialState();
  tf: ViewTransform | null = null;
  readonly canvasW = 720;
  readonly canvasH = 720;
  private waiters: Array<(m: ServerMessage | FrameImage) => void> = [];

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.on("error", () => { /* surfaced by waitFor timeouts */ });
    this.ws.on("message", (data: Buffer | ArrayBuffer, isBinary: boolean) => {
      const payload = data instanceof ArrayBuffer
        ? data
        : (data as Buffer).buffer.slice(
            (data as Buffer).byteOffset,
            (data as Buffer).byteOffset + (data as Buffer).byteLength);
      if (isBinary) {
        const frame = decodeFrame(payload as ArrayBuffer);
        this.state = applyFrame(this.state, frame);
        this.notify(frame);
        return;
      }
      const message = decodeServerMessage(
        Buffer.from(payload as ArrayBuffer).toString("utf8"));
      this.state = applyServerMessage(this.state, message, Date.now());
      if (message.type === "hello") {
        this.tf = new ViewTransform(this.canvasW, this.canvasH,
                                    message.width, message.height);
      }
      this.notify(message);
    });
  }

  private notify(item: ServerMessage | FrameImage): void {
    const pending = this.waiters;
    this.waiters = [];
    pending.forEach((w) => w(item));
  }

  async waitFor<T>(pick: () => T | null, what: string,
                   timeoutMs = 60_000): Promise<T> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const got = pick();
      if (got !== null) {
        return got;
      }
      if (Date.now() > deadline) {
        throw new Error(`timed out waiting for ${what}`);
      }
      await new Promise<unknown>((resolve) => this.waiters.push(resolve));
    }
  }

  pointer(kind: "down" | "move" | "up", button: number,
          canvasX: number, canvasY: number): void {
    const out = handlePointer(this.state,
                              { kind, button, x: canvasX, y: canvasY },
                              this.tf!);
    this.state = out.state;
    if (out.message) {
      this.ws.send(out.message);
    }
  }

  clickAtFramePoint(button: number, fx: number, fy: number): void {
    const c = this.tf!.frameToCanvas({ x: fx, y: fy });
    this.pointer("down", button, c.x, c.y);
    this.pointer("up", button, c.x, c.y);
  }

  snapshotWhere(test: (s: Snapshot) => boolean): Snapshot | null {
    const s = this.state.snapshot;
    return s && test(s) ? s : null;
  }
}

describe("console loop against a live session", () => {
  it("select, target and a drawn path drive the documented phases", async () => {
    const console_ = new ScriptedConsole(`ws://127.0.0.1:${port}/`);
    await console_.waitFor(() => console_.tf, "hello");

    // The transform the pointer math uses must round-trip sub-half-pixel.
    const tf = console_.tf!;
    for (let gx = 0; gx <= 8; gx++) {
      for (let gy = 0; gy <= 8; gy++) {
        const p = { x: 32 * gx, y: 32 * gy };
        const back = tf.canvasToFrame(tf.frameToCanvas(p))!;
        expect(Math.hypot(back.x - p.x, back.y - p.y)).toBeLessThan(0.5);
      }
    }

    // Find the robot the way an operator does: brightest spot in the frame.
    const frame = await console_.waitFor(() => console_.state.frame, "a frame");
    let best = 0;
    let bestIdx = 0;
    frame.data.forEach((v, i) => {
      if (v > best) {
        best = v;
        bestIdx = i;
      }
    });
    const robotFx = bestIdx % frame.width;
    const robotFy = Math.floor(bestIdx / frame.width);

    console_.clickAtFramePoint(0, robotFx, robotFy);      // left: select
    await console_.waitFor(
      () => console_.snapshotWhere((s) => s.track !== null), "a track");

    console_.clickAtFramePoint(2, 200, 128);              // right: target
    for (const phase of ["bootstrapping", "correcting",
                         "station_keeping"] as const) {
      await console_.waitFor(
        () => console_.snapshotWhere((s) => s.phase === phase),
        `phase ${phase}`);
    }

    // Draw a freehand path from the station-kept spot toward the far corner.
    console_.state = setDrawMode(console_.state, true);
    console_.state = {
      ...console_.state,
      form: { ...console_.state.form, nodeSpacing: 30 },
    };
    const from = tf.frameToCanvas({ x: 200, y: 128 });
    const to = tf.frameToCanvas({ x: 110, y: 70 });
    console_.pointer("down", 0, from.x, from.y);
    for (let i = 1; i <= 40; i++) {
      const f = i / 40;
      console_.pointer("move", 0, from.x + (to.x - from.x) * f,
                       from.y + (to.y - from.y) * f);
    }
    console_.pointer("up", 0, to.x, to.y);
    console_.state = setDrawMode(console_.state, false);

    const planned = await console_.waitFor(
      () => console_.snapshotWhere((s) => s.plan !== null), "a plan");
    expect(planned.plan!.nodes.length).toBeGreaterThanOrEqual(3);
    await console_.waitFor(
      () => console_.snapshotWhere(
        (s) => s.plan !== null && s.phase === "correcting"),
      "correcting along the path");
    await console_.waitFor(
      () => console_.snapshotWhere(
        (s) => s.plan !== null && s.phase === "station_keeping"
               && s.metrics.nodes_completed === s.plan.nodes.length),
      "all nodes completed");

    console_.ws.close();
  });

  it("rejected selections surface as a console notice", async () => {
    // Separate connection: the live session allows one operator at a time,
    // so give the server a moment to release the previous slot.
    await new Promise((resolve) => setTimeout(resolve, 500));
    const console_ = new ScriptedConsole(`ws://127.0.0.1:${port}/`);
    await console_.waitFor(() => console_.tf, "hello");
    console_.clickAtFramePoint(0, 5, 5);                  // nothing there
    await console_.waitFor(
      () => (console_.state.notice ?? "").includes("select_robot rejected")
        ? console_.state.notice : null,
      "rejection notice");
    console_.ws.close();
  });
});
