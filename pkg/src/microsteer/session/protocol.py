"""Operator wire protocol: self-describing JSON text messages plus binary frames.

Every text message is one JSON object with a mandatory "v" (protocol version)
and "type".  Server to client: hello, snap, ack, error.  Client to server:
{"v":1,"type":"event","name":...,...} carrying one operator action, or the
frame subscription toggle.  Binary messages carry one camera frame:

    offset  size  field
    0       1     u8  protocol version
    1       1     u8  message kind (1 = frame)
    2       2     u16 reserved (0)
    4       4     u32 width px
    8       4     u32 height px
    12      8     f64 timestamp seconds
    20      w*h   row-major 8-bit intensities

all little-endian.  Full schema in docs/protocol.md.
"""

from __future__ import annotations

import json
import struct

from ..geometry import Vec2
from ..imaging import Frame
from .config import (SelectRobot, SetParams, SetPath, SetTarget, Start, Stop)

VERSION = 1
FRAME_KIND = 1
_FRAME_HEADER = struct.Struct("<BBHIId")


class ProtocolError(ValueError):
    """Malformed wire message; the offending message is rejected, the session lives."""


def dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def encode_hello(scenario, node_spacing: float) -> str:
    return dumps({
        "v": VERSION, "type": "hello",
        "width": scenario.cam.width_px, "height": scenario.cam.height_px,
        "scale": scenario.cam.scale, "frame_dt": scenario.cam.frame_dt,
        "params": {
            "samples_per_update": scenario.ctrl.samples_per_update,
            "arrival_epsilon": scenario.ctrl.arrival_epsilon,
            "field_magnitude": scenario.ctrl.field_magnitude,
            "min_speed": scenario.ctrl.min_speed,
            "node_spacing": node_spacing,
        }})


def encode_snapshot(row: dict) -> str:
    return dumps(row)


def encode_ack(name: str, ok: bool, reason: str) -> str:
    return dumps({"v": VERSION, "type": "ack", "event": name,
                  "status": "ok" if ok else "rejected", "reason": reason})


def encode_error(reason: str) -> str:
    return dumps({"v": VERSION, "type": "error", "reason": reason})


def pack_frame(frame: Frame) -> bytes:
    header = _FRAME_HEADER.pack(VERSION, FRAME_KIND, 0,
                                frame.width, frame.height, frame.timestamp)
    return header + frame.data.tobytes()


def unpack_frame(buf: bytes) -> dict:
    if len(buf) < _FRAME_HEADER.size:
        raise ProtocolError("binary message shorter than the frame header")
    version, kind, _, width, height, timestamp = _FRAME_HEADER.unpack_from(buf)
    if version != VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    if kind != FRAME_KIND:
        raise ProtocolError(f"unknown binary message kind {kind}")
    data = buf[_FRAME_HEADER.size:]
    if len(data) != width * height:
        raise ProtocolError("frame payload size does not match width*height")
    return {"width": width, "height": height, "timestamp": timestamp,
            "data": data}


EVENT_NAMES = ("select_robot", "set_target", "set_path", "set_params",
               "start", "stop")


def parse_client_message(text: str):
    """Decode one client text message.

    Returns ("event", name, Event) for operator actions,
    ("subscribe_frames", enabled) for the frame toggle.
    Raises ProtocolError on anything malformed.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object")
    if obj.get("v") != VERSION:
        raise ProtocolError(f"missing or unsupported protocol version: {obj.get('v')!r}")
    mtype = obj.get("type")
    if mtype != "event":
        raise ProtocolError(f"unsupported message type {mtype!r}")
    name = obj.get("name")
    try:
        if name == "select_robot":
            return "event", name, SelectRobot(float(obj["x"]), float(obj["y"]))
        if name == "set_target":
            return "event", name, SetTarget(float(obj["x"]), float(obj["y"]))
        if name == "set_path":
            points = tuple(Vec2(float(x), float(y)) for x, y in obj["points"])
            spacing = float(obj["spacing"])
            if len(points) < 2 or spacing <= 0:
                raise ProtocolError("set_path needs >= 2 points and spacing > 0")
            return "event", name, SetPath(points=points, node_spacing=spacing)
        if name == "set_params":
            params = obj["params"]
            if not isinstance(params, dict):
                raise ProtocolError("set_params.params must be an object")
            return "event", name, SetParams(
                params=tuple((str(k), float(v)) for k, v in params.items()))
        if name == "start":
            return "event", name, Start()
        if name == "stop":
            return "event", name, Stop()
        if name == "subscribe_frames":
            return "subscribe_frames", bool(obj.get("enabled", True)), None
    except ProtocolError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad fields for {name!r}: {exc}") from exc
    raise ProtocolError(f"unknown event name {name!r}")
