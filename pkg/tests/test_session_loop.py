import math

import pytest

from microsteer.session.config import parse_scenario
from microsteer.session.loop import EventRejected, Session, run_headless

PX_PER_M = 5e6
V_PX = 10e-6 * PX_PER_M  # 50 px/s


def steering_scenario(delta_deg=60.0, target=(228.0, 128.0), duration=12.0,
                      extra="", observation="camera"):
    delta = math.radians(delta_deg)
    return parse_scenario(f"""
seed = 11
duration = {duration}
observation = {observation}
sim.arena_width = 5.12e-5
sim.arena_height = 5.12e-5
sim.dt_physics = 0.005
sim.speed_v0 = 10e-6
sim.offset_delta = {delta}
sim.intrinsic_omega = 0.5
cam.width_px = 256
cam.height_px = 256
cam.scale = 5e6
cam.frame_dt = 0.05
robot = 5.6e-6 2.56e-5 0.0
event = 0.05 select 28 128
event = 0.10 target {target[0]} {target[1]}
{extra}
""")


def phases_in_order(rows):
    seen = []
    for row in rows:
        if not seen or seen[-1] != row["phase"]:
            seen.append(row["phase"])
    return seen


def test_noise_free_run_reaches_target():
    report, rows = run_headless(steering_scenario())
    assert report.time_to_target is not None
    assert phases_in_order(rows) == ["idle", "bootstrapping", "correcting",
                                     "station_keeping"]
    final = rows[-1]["track"]
    assert math.hypot(final["x"] - 228.0, final["y"] - 128.0) < 10.0


def test_time_to_target_matches_path_length_oracle():
    # After the first correction the noise-free robot runs straight at v0, so
    # arrival = first-correcting time + (distance remaining - epsilon) / speed.
    report, rows = run_headless(steering_scenario())
    first = next(r for r in rows if r["phase"] == "correcting")
    d = math.hypot(first["track"]["x"] - 228.0, first["track"]["y"] - 128.0)
    expected = first["t"] + (d - 10.0) / V_PX
    assert report.time_to_target == pytest.approx(expected, abs=2 * 0.05)


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    run_headless(steering_scenario(), out_path=a, keep_rows=False)
    run_headless(steering_scenario(), out_path=b, keep_rows=False)
    assert a.read_bytes() == b.read_bytes()


def test_truth_observation_mode_skips_camera():
    report, rows = run_headless(steering_scenario(observation="truth"))
    assert report.time_to_target is not None
    # Tracked and true positions agree exactly in truth mode.
    for row in rows:
        if row["track"] is None:
            continue
        assert row["track"]["x"] == pytest.approx(
            row["truth"]["x"] * PX_PER_M, abs=1e-9)


def test_stop_event_drops_field_and_curvature_resumes():
    scenario = steering_scenario(duration=4.0, extra="event = 1.0 stop\n")
    _, rows = run_headless(scenario)
    after = [r for r in rows if r["t"] > 1.0]
    assert all(r["field"] is None for r in after)
    assert all(r["phase"] == "idle" for r in after)
    # Intrinsic curvature takes over once the field is gone.
    psi_1 = next(r for r in after if r["t"] > 2.0)["truth"]["psi"]
    psi_2 = after[-1]["truth"]["psi"]
    assert psi_2 != pytest.approx(psi_1, abs=1e-6)


def test_no_events_means_no_field():
    scenario = parse_scenario("""
seed = 3
duration = 2.0
sim.intrinsic_omega = 0.8
robot = 2.56e-5 2.56e-5 0.3
""")
    _, rows = run_headless(scenario)
    assert all(r["field"] is None and r["phase"] == "idle" for r in rows)
    assert all(r["track"] is None for r in rows)


def test_one_frame_actuation_latency():
    # The field commanded at frame n is absent from frame n's physics: the
    # robot is still unpowered-curved during the frame whose snapshot first
    # carries the bootstrap field.
    _, rows = run_headless(steering_scenario(duration=2.0))
    first_field = next(i for i, r in enumerate(rows) if r["field"] is not None)
    t0 = rows[first_field]["truth"]
    t1 = rows[first_field + 1]["truth"]
    # tau=0 alignment snaps psi to the field angle only in the NEXT frame.
    assert t0["psi"] != 0.0
    assert t1["psi"] == 0.0


def test_select_misses_raises_for_scripted_runs():
    scenario = parse_scenario("""
seed = 1
duration = 1.0
robot = 2.56e-5 2.56e-5 0.0
event = 0.1 select 10 10
""")
    with pytest.raises(EventRejected):
        run_headless(scenario)


def test_target_without_selection_rejected():
    scenario = parse_scenario("""
seed = 1
duration = 1.0
robot = 2.56e-5 2.56e-5 0.0
event = 0.1 target 100 100
""")
    with pytest.raises(EventRejected):
        run_headless(scenario)


def test_track_loss_drops_field():
    # A hostile association gate (max_jump ~ 0) starves the track: after 5
    # straight misses the phase is lost and the field is off for good.
    scenario = steering_scenario(extra="cam.max_jump = 0.01\n", duration=3.0)
    _, rows = run_headless(scenario)
    assert rows[-1]["phase"] == "lost"
    lost_from = next(i for i, r in enumerate(rows) if r["phase"] == "lost")
    assert all(r["field"] is None for r in rows[lost_from:])


def test_path_following_visits_nodes_in_order():
    scenario = parse_scenario("""
seed = 5
duration = 20.0
sim.arena_width = 5.12e-5
sim.arena_height = 5.12e-5
sim.offset_delta = 0.8
sim.speed_v0 = 10e-6
cam.width_px = 256
cam.height_px = 256
robot = 6e-6 2.56e-5 0.0
event = 0.05 select 30 128
event = 0.10 path 40 30,128 230,128
""")
    report, rows = run_headless(scenario)
    indices = [r["plan"]["index"] for r in rows if r["plan"]]
    assert indices == sorted(indices)
    assert report.nodes_completed == len(
        rows[-1]["plan"]["nodes"])
    assert rows[-1]["phase"] == "station_keeping"
    assert report.rms_cross_track is not None


def test_params_event_updates_cadence_and_capacity():
    scenario = steering_scenario(
        extra="event = 0.2 params samples_per_update=5\n", duration=3.0)
    session = Session(scenario)
    for _ in range(20):
        session.step_frame()
    assert session.ctrl_cfg.samples_per_update == 5
    assert session.track.capacity == 5


def test_params_event_rejects_unknown_key():
    scenario = steering_scenario(
        extra="event = 0.2 params gravity=9.8\n", duration=3.0)
    with pytest.raises(Exception):
        run_headless(scenario)


def test_second_robot_does_not_steal_track():
    scenario = parse_scenario("""
seed = 9
duration = 6.0
sim.arena_width = 5.12e-5
sim.arena_height = 5.12e-5
sim.offset_delta = 0.5
cam.width_px = 256
cam.height_px = 256
robot = 5.6e-6 2.56e-5 0.0
robot = 4e-5 1e-5 1.5
event = 0.05 select 28 128
event = 0.10 target 200 160
""")
    report, rows = run_headless(scenario)
    assert report.time_to_target is not None
    tracked = rows[-1]["track"]
    truth = rows[-1]["truth"]
    assert math.hypot(tracked["x"] - truth["x"] * PX_PER_M,
                      tracked["y"] - truth["y"] * PX_PER_M) < 2.0
