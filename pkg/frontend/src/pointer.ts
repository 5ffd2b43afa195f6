// Pointer gestures -> protocol events or local state changes.
//
// Left click selects the robot nearest the cursor; right click sets the
// target; in draw mode a left-drag accumulates a freehand path that is sent
// as one set_path on release (resampling into nodes happens session-side, so
// headless and interactive runs share one code path).

import {
  selectRobotMessage,
  setPathMessage,
  setTargetMessage,
  type Point,
} from "./protocol.js";
import type { ViewTransform } from "./transform.js";
import type { ViewState } from "./viewstate.js";

export interface PointerInput {
  kind: "down" | "move" | "up";
  button: number;          // 0 = left, 2 = right (as in MouseEvent.button)
  x: number;               // canvas px
  y: number;
}

export interface PointerOutcome {
  state: ViewState;
  message: string | null;  // wire text to send, if any
}

export function handlePointer(state: ViewState, input: PointerInput,
                              transform: ViewTransform): PointerOutcome {
  const framePoint = transform.canvasToFrame({ x: input.x, y: input.y });
  if (framePoint === null) {
    // Off-frame: a release still finishes an in-progress drawing.
    if (input.kind === "up" && state.drawing) {
      return finishPath(state);
    }
    return { state, message: null };
  }

  if (state.drawMode && input.button === 0) {
    return handleDraw(state, input, framePoint);
  }

  if (input.kind !== "down") {
    return { state, message: null };
  }
  if (input.button === 2) {
    return { state, message: setTargetMessage(framePoint) };
  }
  if (input.button === 0) {
    return { state, message: selectRobotMessage(framePoint) };
  }
  return { state, message: null };
}

function handleDraw(state: ViewState, input: PointerInput,
                    framePoint: Point): PointerOutcome {
  if (input.kind === "down") {
    return {
      state: { ...state, drawing: true, pendingPath: [framePoint] },
      message: null,
    };
  }
  if (input.kind === "move" && state.drawing) {
    return {
      state: { ...state, pendingPath: [...state.pendingPath, framePoint] },
      message: null,
    };
  }
  if (input.kind === "up" && state.drawing) {
    return finishPath({
      ...state,
      pendingPath: [...state.pendingPath, framePoint],
    });
  }
  return { state, message: null };
}

function finishPath(state: ViewState): PointerOutcome {
  const points = state.pendingPath;
  const cleared: ViewState = { ...state, drawing: false, pendingPath: [] };
  if (points.length < 2) {
    return { state: cleared, message: null };  // a stray click, not a path
  }
  return {
    state: cleared,
    message: setPathMessage(points, state.form.nodeSpacing),
  };
}
