"""Run records: line-delimited JSON snapshots, replay checking, CSV, metrics.

A record file is one JSON object per line: a header carrying the full
scenario echo, then one snapshot per camera frame.  Records are replayable:
rebuilding the scenario from the header and rerunning reproduces the file
byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ..geometry import Vec2
from .paths import point_to_polyline


@dataclass(frozen=True)
class MetricsReport:
    time_to_target: float | None = None      # first time within epsilon of the final target
    rms_cross_track: float | None = None     # px, tracked positions vs planned polyline
    station_keep_radius: float | None = None  # px, max distance after arrival
    nodes_completed: int = 0
    frames: int = 0

    def to_dict(self) -> dict:
        return {"time_to_target": self.time_to_target,
                "rms_cross_track": self.rms_cross_track,
                "station_keep_radius": self.station_keep_radius,
                "nodes_completed": self.nodes_completed,
                "frames": self.frames}


def _final_target(rows: list[dict]) -> Vec2 | None:
    last = rows[-1]
    if last.get("plan"):
        x, y = last["plan"]["nodes"][-1]
        return Vec2(x, y)
    if last.get("target"):
        return Vec2(*last["target"])
    return None


def metrics(rows: list[dict], arrival_epsilon: float = 10.0) -> MetricsReport:
    """Summarize a run from its snapshot rows.

    Computed against the final configuration: the final target is the last
    row's target (or last plan node), the guided interval is every frame with
    an active, unfinished plan.
    """
    if not rows:
        return MetricsReport()
    final = _final_target(rows)

    time_to_target = None
    if final is not None:
        for row in rows:
            trk = row.get("track")
            if trk is None or row["phase"] == "idle":
                continue
            if math.hypot(trk["x"] - final.x, trk["y"] - final.y) < arrival_epsilon:
                time_to_target = row["t"]
                break

    sq_sum = 0.0
    n_guided = 0
    nodes_completed = 0
    for row in rows:
        plan = row.get("plan")
        if not plan:
            continue
        nodes_completed = max(nodes_completed, plan["index"])
        trk = row.get("track")
        if trk is None or plan["index"] >= len(plan["nodes"]):
            continue
        polyline = [Vec2(x, y) for x, y in plan["nodes"]]
        sq_sum += point_to_polyline(Vec2(trk["x"], trk["y"]), polyline) ** 2
        n_guided += 1
    rms = math.sqrt(sq_sum / n_guided) if n_guided else None

    station_radius = None
    if time_to_target is not None and final is not None:
        station_radius = 0.0
        for row in rows:
            if row["t"] < time_to_target:
                continue
            trk = row.get("track")
            if trk is None:
                continue
            station_radius = max(
                station_radius, math.hypot(trk["x"] - final.x, trk["y"] - final.y))

    return MetricsReport(time_to_target=time_to_target,
                         rms_cross_track=rms,
                         station_keep_radius=station_radius,
                         nodes_completed=nodes_completed,
                         frames=len(rows))


def read_record(path) -> tuple[dict | None, list[dict]]:
    """Read a record file; returns (scenario dict from the header, rows)."""
    scenario = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("type") == "header":
                scenario = obj["scenario"]
            else:
                rows.append(obj)
    return scenario, rows


def replay_check(path) -> tuple[bool, int | None]:
    """Rerun the record's scenario and byte-compare every line.

    Returns (identical, first mismatching line number or None).
    """
    from .config import scenario_from_dict
    from .loop import Session

    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        return False, 0
    header = json.loads(lines[0])
    if header.get("type") != "header":
        return False, 1
    scenario = scenario_from_dict(header["scenario"])

    regenerated = json.dumps({"v": header["v"], "type": "header",
                              "scenario": header["scenario"]},
                             separators=(",", ":"))
    # Header must round-trip through the scenario objects themselves.
    from .config import scenario_to_dict
    rebuilt = json.dumps({"v": header["v"], "type": "header",
                          "scenario": scenario_to_dict(scenario)},
                         separators=(",", ":"))
    if lines[0] != regenerated or regenerated != rebuilt:
        return False, 1

    session = Session(scenario)
    for i, expected in enumerate(lines[1:], start=2):
        row = session.step_frame()
        if json.dumps(row, separators=(",", ":")) != expected:
            return False, i
    return True, None


def write_csv(rows: list[dict], path, scale: float) -> None:
    """Flat CSV for plotting; positions in pixels (truth projected via scale)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time,x_true,y_true,x_tracked,y_tracked,field_dir,field_mag,node_index\n")
        for row in rows:
            truth = row.get("truth")
            trk = row.get("track")
            field = row.get("field")
            plan = row.get("plan")
            cells = [
                repr(row["t"]),
                repr(truth["x"] * scale) if truth else "",
                repr(truth["y"] * scale) if truth else "",
                repr(trk["x"]) if trk else "",
                repr(trk["y"]) if trk else "",
                repr(math.atan2(field["by"], field["bx"])) if field else "",
                repr(field["mag"]) if field else "",
                str(plan["index"]) if plan else "",
            ]
            fh.write(",".join(cells) + "\n")
