"""Closed-loop orchestration: scenarios, the frame loop, records, metrics,
the operator wire protocol, the live server and the CLI."""

from .config import (ConfigError, Scenario, TimedEvent, SelectRobot, SetTarget,
                     SetPath, SetParams, Start, Stop, load_scenario,
                     parse_scenario, scenario_from_dict, scenario_to_dict)
from .loop import Session, run_headless
from .paths import DegeneratePath, point_to_polyline, resample_path
from .record import MetricsReport, metrics, read_record, replay_check, write_csv

__all__ = [
    "ConfigError", "Scenario", "TimedEvent", "SelectRobot", "SetTarget",
    "SetPath", "SetParams", "Start", "Stop", "load_scenario", "parse_scenario",
    "scenario_from_dict", "scenario_to_dict", "Session", "run_headless",
    "DegeneratePath", "point_to_polyline", "resample_path", "MetricsReport",
    "metrics", "read_record", "replay_check", "write_csv",
]
