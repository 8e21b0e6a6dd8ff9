"""Procedural LiDAR scenes with ground-truth trajectories.

The ``corridor`` scene is a straight street between two stepped facade walls
(blocks of varying setback, with gaps) and scattered pillars, scanned by a
simulated 64-beam spinning sensor mounted 1.73 m above the ground.  Each
sweep starts at a different azimuth, as a free-running spinning sensor does.
The vehicle drives forward at constant speed with a gentle sinusoidal
heading.  Everything is a pure function of ``seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pointcloud import PointCloud
from .pose import Pose

SCENES = ("corridor",)
NOMINAL_POINTS = 20_000

# HDL-64E-like vertical field of view
ELEVATION_MIN_DEG = -24.8
ELEVATION_MAX_DEG = 2.0


@dataclass(frozen=True)
class Pillar:
    x: float
    y: float
    radius: float
    height: float
    intensity: float


@dataclass(frozen=True)
class Block:
    lo: tuple
    hi: tuple
    intensity: float


@dataclass(frozen=True)
class CorridorScene:
    seed: int = 0
    frames: int = 50
    step: float = 1.0  # forward motion per frame, m
    yaw_amplitude: float = np.deg2rad(3.0)
    yaw_period: float = 40.0  # frames
    half_width: float = 6.0
    sensor_height: float = 1.73
    beams: int = 64
    azimuth_steps: int = 330
    max_range: float = 80.0
    pillar_spacing: tuple = (1.5, 3.0)
    car_prob: float = 0.5
    pillars: tuple = field(default=())
    blocks: tuple = field(default=())

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        if not self.pillars:
            object.__setattr__(self, "pillars", tuple(self._make_pillars(rng)))
        if not self.blocks:
            object.__setattr__(self, "blocks", tuple(self._make_blocks(rng)))

    @property
    def x_start(self) -> float:
        return -30.0

    @property
    def x_end(self) -> float:
        return self.frames * self.step + 60.0

    def _make_pillars(self, rng: np.random.Generator) -> list[Pillar]:
        out = []
        x = self.x_start + 2.0
        while x < self.x_end - 2.0:
            side = rng.choice([-1.0, 1.0])
            y = side * rng.uniform(2.8, self.half_width - 0.8)
            out.append(Pillar(x + rng.uniform(-1.0, 1.0), y, rng.uniform(0.25, 0.5),
                              rng.uniform(2.5, 5.0), rng.uniform(0.5, 0.9)))
            x += rng.uniform(*self.pillar_spacing)
        return out

    def _make_blocks(self, rng: np.random.Generator) -> list[Block]:
        """Facade blocks along both sides; gaps expose the back wall."""
        out = []
        for side in (-1.0, 1.0):
            x = self.x_start
            while x < self.x_end:
                length = rng.uniform(3.0, 9.0)
                if rng.random() < 0.8:
                    inner = self.half_width + rng.uniform(0.0, 1.5)
                    y0, y1 = sorted((side * inner, side * (self.half_width + 4.0)))
                    out.append(Block((x, y0, -self.sensor_height), (min(x + length, self.x_end), y1,
                                     rng.uniform(3.0, 10.0)), rng.uniform(0.3, 0.6)))
                x += length
        # parked cars along the kerbs
        for side in (-1.0, 1.0):
            x = self.x_start + 1.0
            while x < self.x_end - 5.0:
                if rng.random() < self.car_prob:
                    y_in = side * rng.uniform(2.6, 3.2)
                    y0, y1 = sorted((y_in, y_in + side * 1.8))
                    out.append(Block((x, y0, -self.sensor_height), (x + 4.5, y1, -self.sensor_height + 1.5),
                                     rng.uniform(0.2, 0.8)))
                x += rng.uniform(6.0, 9.0)
        return out

    def sweep_phase(self, k: int) -> float:
        return float(np.random.default_rng([self.seed, k]).uniform(0.0, 2.0 * np.pi / self.azimuth_steps))

    def yaw(self, k: int) -> float:
        return float(self.yaw_amplitude * np.sin(2.0 * np.pi * k / self.yaw_period))

    def motion(self, k: int) -> Pose:
        """Ground-truth relative motion from frame k to frame k+1 (in frame k)."""
        return Pose.from_yaw(self.yaw(k + 1) - self.yaw(k), (self.step, 0.0, 0.0))

    def poses(self, n: int) -> list[Pose]:
        out = [Pose()]
        for k in range(n - 1):
            out.append(out[-1] @ self.motion(k))
        return out

    def ray_directions(self, phase: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        elev = np.deg2rad(np.linspace(ELEVATION_MIN_DEG, ELEVATION_MAX_DEG, self.beams))
        az = np.linspace(-np.pi, np.pi, self.azimuth_steps, endpoint=False) + phase
        e, a = np.meshgrid(elev, az, indexing="ij")
        dirs = np.stack([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)], axis=-1).reshape(-1, 3)
        layer = np.repeat(np.arange(self.beams), self.azimuth_steps)
        return dirs, layer

    def scan(self, pose: Pose, frame_id: int = 0) -> PointCloud:
        dirs, layer = self.ray_directions(self.sweep_phase(frame_id))
        d = dirs @ pose.rotation.T  # world-frame directions
        o = pose.translation
        n = len(d)
        t = np.full(n, np.inf)
        intensity = np.zeros(n)

        def hit(tc, value):
            better = (tc > 1e-6) & (tc < t)
            t[better] = tc[better]
            intensity[better] = value if np.isscalar(value) else value[better]

        with np.errstate(divide="ignore", invalid="ignore"):
            ground_z = -self.sensor_height
            hit(np.where(d[:, 2] < 0, (ground_z - o[2]) / d[:, 2], np.inf), 0.25)
            for wall in (-self.half_width - 8.0, self.half_width + 8.0):
                hit(np.where(d[:, 1] != 0, (wall - o[1]) / d[:, 1], np.inf), 0.45)
            for end in (self.x_start, self.x_end):
                hit(np.where(d[:, 0] != 0, (end - o[0]) / d[:, 0], np.inf), 0.35)
            for blk in self.blocks:
                lo = (np.asarray(blk.lo) - o) / d
                hi = (np.asarray(blk.hi) - o) / d
                t_near = np.nanmax(np.minimum(lo, hi), axis=1)
                t_far = np.nanmin(np.maximum(lo, hi), axis=1)
                hit(np.where(t_near <= t_far, t_near, np.inf), blk.intensity)
            dxy = d[:, :2]
            a = np.einsum("ij,ij->i", dxy, dxy)
            for p in self.pillars:
                oc = o[:2] - (p.x, p.y)
                b = dxy @ oc
                c = oc @ oc - p.radius ** 2
                disc = b * b - a * c
                tc = np.where(disc >= 0, (-b - np.sqrt(np.maximum(disc, 0))) / a, np.inf)
                z = o[2] + tc * d[:, 2]
                tc = np.where((z >= ground_z) & (z <= ground_z + p.height), tc, np.inf)
                hit(tc, p.intensity)

        ok = t <= self.max_range
        xyz = dirs[ok] * t[ok, None]
        return PointCloud(xyz, intensity[ok], layer[ok], frame_id=frame_id, beam_count=self.beams)


def make_scene(name: str, frames: int, seed: int) -> CorridorScene:
    if name not in SCENES:
        raise ValueError(f"unknown synthetic scene {name!r}; choose from {SCENES}")
    return CorridorScene(seed=seed, frames=frames)


def generate_synthetic_sequence(name: str, frames: int, seed: int = 0) -> list[tuple[PointCloud, Pose]]:
    if frames < 2:
        raise ValueError("need at least two frames")
    scene = make_scene(name, frames, seed)
    return [(scene.scan(pose, k), pose) for k, pose in enumerate(scene.poses(frames))]
