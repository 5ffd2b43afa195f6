"""Synthetic camera and the vision pipeline that feeds the controller.

Rendering: flat background + one isotropic Gaussian spot per robot + optional
per-pixel Gaussian noise, quantized to 8 bits.  Pixel (row r, col c) samples
the scene at image coordinates (x=c, y=r); world meters map to pixels through
CameraConfig.scale with no axis flip.

Tracking: threshold + 8-connected components + intensity-weighted centroids,
nearest-detection association gated by a max jump, an ROI crop around the
last known position so later frames are searched quickly, and an average
velocity over the last N stored positions.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import Vec2
from .simworld import World

# Consecutive failed associations before a track is declared lost and the
# controller drops the field.
LOST_AFTER = 5

PSF_PATCH_SIGMAS = 4.5  # spot rendered out to this many sigmas; tails quantize to 0


@dataclass(frozen=True)
class CameraConfig:
    width_px: int = 256
    height_px: int = 256
    scale: float = 5.0e6          # px per meter
    frame_dt: float = 0.05        # s
    psf_sigma: float = 3.0        # px
    background_level: float = 20.0
    noise_sigma: float = 0.0
    spot_amplitude: float = 200.0

    def __post_init__(self):
        if self.scale <= 0 or self.frame_dt <= 0 or self.psf_sigma <= 0:
            raise ValueError("scale, frame_dt and psf_sigma must be > 0")
        if not (0.0 <= self.background_level
                and self.background_level + self.spot_amplitude <= 255.0):
            raise ValueError("background_level + spot_amplitude must fit in [0, 255]")


@dataclass
class Frame:
    width: int
    height: int
    data: np.ndarray          # uint8, shape (height, width)
    timestamp: float

    def __post_init__(self):
        if self.data.shape != (self.height, self.width):
            raise ValueError("frame data shape does not match width/height")


@dataclass(frozen=True)
class Detection:
    centroid: Vec2            # full-frame px, sub-pixel
    mass: float               # summed intensity above background
    pixel_count: int


@dataclass(frozen=True)
class DetectorParams:
    threshold: float = 60.0   # intensity; should sit above background + noise
    min_size: int = 4         # px
    max_size: int = 4000      # px
    background: float = 20.0  # subtracted before centroid weighting

    def __post_init__(self):
        if self.min_size > self.max_size:
            raise ValueError("min_size must be <= max_size")
        if self.threshold <= self.background:
            raise ValueError("threshold must sit above the background level")


@dataclass
class Track:
    """Single-target track: ring buffer of observed positions plus ROI state."""

    id: int
    capacity: int = 10
    roi_half_width: float = 32.0
    history: deque = dc_field(default_factory=deque)   # (timestamp, Vec2 px)
    missed: int = 0
    sample_count: int = 0      # total samples ever observed (not ring length)

    def add_sample(self, timestamp: float, position: Vec2) -> None:
        if self.history and timestamp <= self.history[-1][0]:
            raise ValueError("track timestamps must be strictly increasing")
        self.history.append((timestamp, position))
        while len(self.history) > self.capacity:
            self.history.popleft()
        self.missed = 0
        self.sample_count += 1

    @property
    def latest_position(self) -> Vec2:
        return self.history[-1][1]

    @property
    def latest_time(self) -> float:
        return self.history[-1][0]

    @property
    def is_lost(self) -> bool:
        return self.missed >= LOST_AFTER


def render_frame(world: World, cam: CameraConfig, rng: np.random.Generator) -> Frame:
    """Render the world into an 8-bit grayscale frame."""
    h, w = cam.height_px, cam.width_px
    img = np.full((h, w), cam.background_level, dtype=np.float32)
    if cam.noise_sigma > 0.0:
        img += cam.noise_sigma * rng.standard_normal((h, w), dtype=np.float32)

    reach = PSF_PATCH_SIGMAS * cam.psf_sigma
    inv_two_sig2 = 1.0 / (2.0 * cam.psf_sigma ** 2)
    for robot in world.robots:
        cx = robot.position.x * cam.scale
        cy = robot.position.y * cam.scale
        x0 = max(0, int(math.floor(cx - reach)))
        x1 = min(w, int(math.ceil(cx + reach)) + 1)
        y0 = max(0, int(math.floor(cy - reach)))
        y1 = min(h, int(math.ceil(cy + reach)) + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        xs = np.arange(x0, x1, dtype=np.float32) - np.float32(cx)
        ys = np.arange(y0, y1, dtype=np.float32) - np.float32(cy)
        r2 = ys[:, None] ** 2 + xs[None, :] ** 2
        img[y0:y1, x0:x1] += cam.spot_amplitude * np.exp(-r2 * inv_two_sig2)

    np.clip(img, 0.0, 255.0, out=img)
    data = np.rint(img).astype(np.uint8)
    return Frame(width=w, height=h, data=data, timestamp=world.time)


def detect_blobs(frame: Frame, params: DetectorParams,
                 roi: tuple[int, int, int, int] | None = None) -> list[Detection]:
    """Connected components (8-connectivity) above threshold, size-filtered.

    Centroids are intensity-weighted means of (pixel - background) in
    full-frame pixel coordinates; results sorted by descending mass.
    ``roi`` is (x0, y0, x1, y1) with exclusive upper bounds.
    """
    if roi is None:
        x_off = y_off = 0
        view = frame.data
    else:
        x0, y0, x1, y1 = roi
        if not (0 <= x0 <= x1 <= frame.width and 0 <= y0 <= y1 <= frame.height):
            raise ValueError(f"roi {roi} outside frame bounds")
        x_off, y_off = x0, y0
        view = frame.data[y0:y1, x0:x1]

    mask = view > params.threshold
    if not mask.any():
        return []
    h, w = mask.shape
    seen = np.zeros_like(mask)
    detections = []
    seeds = np.argwhere(mask)
    neighbors = ((-1, -1), (-1, 0), (-1, 1), (0, -1),
                 (0, 1), (1, -1), (1, 0), (1, 1))
    for seed_r, seed_c in seeds:
        if seen[seed_r, seed_c]:
            continue
        stack = [(int(seed_r), int(seed_c))]
        seen[seed_r, seed_c] = True
        pixels = []
        while stack:
            r, c = stack.pop()
            pixels.append((r, c))
            for dr, dc in neighbors:
                nr, nc = r + dr, c + dc
                if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and not seen[nr, nc]:
                    seen[nr, nc] = True
                    stack.append((nr, nc))
        if not (params.min_size <= len(pixels) <= params.max_size):
            continue
        wsum = cx = cy = 0.0
        for r, c in pixels:
            wgt = float(view[r, c]) - params.background
            wsum += wgt
            cx += wgt * c
            cy += wgt * r
        if wsum <= 0.0:
            continue
        detections.append(Detection(
            centroid=Vec2(cx / wsum + x_off, cy / wsum + y_off),
            mass=wsum, pixel_count=len(pixels)))
    detections.sort(key=lambda d: -d.mass)
    return detections


def associate(track: Track, detections: list[Detection],
              max_jump: float) -> Detection | None:
    """Nearest detection to the track head within max_jump; ties to higher mass."""
    if not track.history:
        raise ValueError("associate requires a track with at least one sample")
    head = track.latest_position
    best = None
    best_key = None
    for det in detections:
        d = det.centroid.distance_to(head)
        if d > max_jump:
            continue
        key = (d, -det.mass)
        if best_key is None or key < best_key:
            best, best_key = det, key
    return best


def update_roi(track: Track, frame_width: int,
               frame_height: int) -> tuple[int, int, int, int]:
    """Square of side 2*roi_half_width centered on the latest position, clipped."""
    if not track.history:
        raise ValueError("update_roi requires a non-empty track")
    c = track.latest_position
    hw = track.roi_half_width
    x0 = max(0, int(math.floor(c.x - hw)))
    x1 = min(frame_width, int(math.ceil(c.x + hw)))
    y0 = max(0, int(math.floor(c.y - hw)))
    y1 = min(frame_height, int(math.ceil(c.y + hw)))
    return x0, y0, x1, y1


def estimate_velocity(track: Track) -> Vec2 | None:
    """Average velocity over the stored history, endpoint-difference form.

    None until the ring holds at least 2 samples.  Exact for uniform motion.
    """
    if len(track.history) < 2:
        return None
    t0, p0 = track.history[0]
    t1, p1 = track.history[-1]
    inv_dt = 1.0 / (t1 - t0)
    return Vec2((p1.x - p0.x) * inv_dt, (p1.y - p0.y) * inv_dt)


def select_robot_at(cursor: Vec2, detections: list[Detection],
                    select_radius: float = 20.0) -> Detection | None:
    """Nearest detection within select_radius of the cursor, else None."""
    best = None
    best_d = select_radius
    for det in detections:
        d = det.centroid.distance_to(cursor)
        if d <= best_d:
            best, best_d = det, d
    return best


def to_pgm(frame: Frame) -> bytes:
    """Binary PGM (P5, 8-bit); bit-exact for a given (world, cam, seed)."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.data.tobytes()


def write_pgm(frame: Frame, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_pgm(frame))
