"""Live operator sessions over WebSocket.

One session loop owns the world/tracker/controller and steps frames at the
configured pace (rate=1 real time, rate=0 as fast as possible).  Exactly one
operator connection is accepted at a time; extras are turned away.  Inbound
events are queued and applied at the next frame boundary, never dropped.
Outbound snapshots and frames go through a bounded queue: a congested client
loses old snapshots/frames, while acks and errors always get through (oldest
stream messages are evicted first).

With --console pointing at a directory of built console files, plain HTTP
GETs on the same port serve them, so one process hosts both the protocol and
the operator UI.
"""

from __future__ import annotations

import asyncio
import http
import json
import mimetypes
from dataclasses import replace
from pathlib import Path

from websockets.asyncio.server import serve as ws_serve
from websockets.datastructures import Headers
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Response

from .config import (Scenario, SelectRobot, SetParams, SetPath, SetTarget,
                     Start, Stop, scenario_to_dict)
from .loop import Session
from . import protocol

SEND_QUEUE_SIZE = 64

_WIRE_NAMES = {SelectRobot: "select_robot", SetTarget: "set_target",
               SetPath: "set_path", SetParams: "set_params",
               Start: "start", Stop: "stop"}


class _Client:
    def __init__(self, connection):
        self.connection = connection
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=SEND_QUEUE_SIZE)
        self.frames_enabled = True
        self.closed = False

    def send_droppable(self, message) -> None:
        # Snapshot/frame stream: under congestion the oldest queued stream
        # message is evicted so the client converges on fresh state.
        try:
            self.queue.put_nowait(message)
        except asyncio.QueueFull:
            try:
                self.queue.get_nowait()
            except asyncio.QueueEmpty:
                pass
            self.queue.put_nowait(message)

    send_always = send_droppable  # same eviction policy keeps acks flowing

    async def writer(self) -> None:
        try:
            while True:
                message = await self.queue.get()
                if message is None:
                    return
                await self.connection.send(message)
        except ConnectionClosed:
            pass


class SessionServer:
    def __init__(self, scenario: Scenario, rate: float = 1.0,
                 record_path=None, console_dir=None):
        self.scenario = scenario
        self.rate = rate
        self.record_path = record_path
        self.console_dir = Path(console_dir) if console_dir else None
        self.session = Session(scenario)
        self.client: _Client | None = None
        self.rows: list[dict] = [] if record_path else None
        self.done = asyncio.Event()

    # -- HTTP hook for the console bundle ------------------------------------

    def process_request(self, connection, request):
        if "Upgrade" in request.headers.get("Connection", ""):
            return None
        path = request.path.split("?", 1)[0]
        if path == "/healthz":
            return connection.respond(http.HTTPStatus.OK, "ok\n")
        if self.console_dir is None:
            return connection.respond(
                http.HTTPStatus.UPGRADE_REQUIRED,
                "WebSocket endpoint; no console bundle configured\n")
        rel = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (self.console_dir / rel).resolve()
        if not str(target).startswith(str(self.console_dir.resolve())) \
                or not target.is_file():
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        body = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        return Response(200, "OK", Headers([
            ("Content-Type", ctype),
            ("Content-Length", str(len(body)))]), body)

    # -- WebSocket handler ----------------------------------------------------

    async def handler(self, connection) -> None:
        if self.client is not None and not self.client.closed:
            await connection.send(protocol.encode_error("session busy: one operator at a time"))
            await connection.close(code=1013, reason="busy")
            return
        client = _Client(connection)
        self.client = client
        writer = asyncio.create_task(client.writer())
        await connection.send(protocol.encode_hello(
            self.scenario, self.session.node_spacing))
        try:
            async for message in connection:
                if isinstance(message, bytes):
                    client.send_always(protocol.encode_error(
                        "binary messages are server-to-client only"))
                    continue
                try:
                    kind, a, b = protocol.parse_client_message(message)
                except protocol.ProtocolError as exc:
                    client.send_always(protocol.encode_error(str(exc)))
                    continue
                if kind == "subscribe_frames":
                    client.frames_enabled = a
                else:
                    self.session.queue_event(b)
        except ConnectionClosed:
            pass
        finally:
            client.closed = True
            client.queue.put_nowait(None)
            await writer
            if self.client is client:
                self.client = None

    # -- session loop ---------------------------------------------------------

    async def run_loop(self) -> None:
        sc = self.scenario
        n_frames = round(sc.duration / sc.cam.frame_dt)
        frame_dt = sc.cam.frame_dt
        loop = asyncio.get_running_loop()
        next_deadline = loop.time()
        try:
            for _ in range(n_frames):
                row = self.session.step_frame()
                if self.rows is not None:
                    self.rows.append(row)
                client = self.client
                if client is not None and not client.closed:
                    for ev, ok, reason in self.session.event_results:
                        name = _WIRE_NAMES.get(type(ev), type(ev).__name__)
                        client.send_always(protocol.encode_ack(name, ok, reason))
                    client.send_droppable(protocol.encode_snapshot(row))
                    if client.frames_enabled and self.session.latest_frame is not None:
                        client.send_droppable(
                            protocol.pack_frame(self.session.latest_frame))
                if self.rate > 0:
                    next_deadline += frame_dt / self.rate
                    delay = next_deadline - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    else:
                        next_deadline = loop.time()
                else:
                    await asyncio.sleep(0)
        finally:
            self._write_record()
            self.done.set()

    def _write_record(self) -> None:
        if self.record_path is None or self.rows is None:
            return
        echo = replace(self.scenario,
                       events=tuple(self.session.applied_events))
        with open(self.record_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(
                {"v": protocol.VERSION, "type": "header",
                 "scenario": scenario_to_dict(echo)},
                separators=(",", ":")) + "\n")
            for row in self.rows:
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")


async def serve(scenario: Scenario, host: str = "127.0.0.1", port: int = 8765,
                rate: float = 1.0, record_path=None, console_dir=None,
                on_ready=None) -> None:
    """Run one live session until its duration elapses."""
    server = SessionServer(scenario, rate=rate, record_path=record_path,
                           console_dir=console_dir)
    async with ws_serve(server.handler, host, port,
                        process_request=server.process_request,
                        max_size=None) as ws:
        actual_port = ws.sockets[0].getsockname()[1]
        print(f"session listening on ws://{host}:{actual_port}/ "
              f"({scenario.duration:g}s at rate {rate:g})", flush=True)
        if on_ready is not None:
            on_ready(actual_port)
        loop_task = asyncio.create_task(server.run_loop())
        await server.done.wait()
        await loop_task
