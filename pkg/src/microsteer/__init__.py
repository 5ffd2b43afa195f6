"""Closed-loop magnetic steering simulator for self-propelled Janus microrobots.

Subpackages/modules:
    geometry  - planar vector/angle algebra
    simworld  - stochastic ground-truth dynamics (the plant)
    imaging   - synthetic camera, blob detection, tracking, velocity estimation
    control   - field retargeting and waypoint following
    coils     - field <-> coil-current calibration model
    session   - closed-loop orchestration, recording, metrics, CLI, live server
"""

__version__ = "0.1.0"
