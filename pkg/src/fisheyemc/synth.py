"""Synthetic equisolid fisheye scenes with analytically known motion planes.

Scenes are built from axis-aligned textured planes around the camera
(ground below, ceiling above, four walls). Translating the scene between two
renders yields a frame pair whose per-pixel motion plane is known exactly,
which is what the ground-truth tests need: every scene plane corresponds to
one viewport orientation.

Rendering is pure per-pixel ray casting through the lens model with 2x2
supersampling; identical seeds give byte-identical frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .geometry import FisheyeCamera, Viewport, fisheye_to_sphere
from .sampling import Frame

__all__ = [
    "BACKGROUND_LABEL",
    "CheckerTexture",
    "EXPECTED_VIEWPORT",
    "MotionSpec",
    "NoiseTexture",
    "PlaneOrientation",
    "SceneMotionError",
    "ScenePlane",
    "generate_pair",
    "load_scene",
    "plane_labels",
    "render_fisheye_frame",
    "scene_from_dict",
]

BACKGROUND_LABEL = -1


class SceneMotionError(ValueError):
    """The requested displacement changes which plane the rays hit."""


class PlaneOrientation(Enum):
    GROUND = "ground"
    CEILING = "ceiling"
    LEFT_WALL = "left_wall"
    RIGHT_WALL = "right_wall"
    FRONT_WALL = "front_wall"
    BACK_WALL = "back_wall"


# Unit normal pointing from the camera toward the plane, and the two in-plane
# texture axes. The camera frame is x right, y down, z forward.
_PLANE_FRAMES = {
    PlaneOrientation.GROUND: ((0, 1, 0), (1, 0, 0), (0, 0, 1)),
    PlaneOrientation.CEILING: ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    PlaneOrientation.LEFT_WALL: ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    PlaneOrientation.RIGHT_WALL: ((1, 0, 0), (0, 0, 1), (0, 1, 0)),
    PlaneOrientation.FRONT_WALL: ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    PlaneOrientation.BACK_WALL: ((0, 0, -1), (1, 0, 0), (0, 1, 0)),
}

# Which viewport models translational motion on each plane.
EXPECTED_VIEWPORT = {
    PlaneOrientation.GROUND: Viewport.BOTTOM_TOP,
    PlaneOrientation.CEILING: Viewport.BOTTOM_TOP,
    PlaneOrientation.LEFT_WALL: Viewport.LEFT_RIGHT,
    PlaneOrientation.RIGHT_WALL: Viewport.LEFT_RIGHT,
    PlaneOrientation.FRONT_WALL: Viewport.FRONT_BACK,
    PlaneOrientation.BACK_WALL: Viewport.FRONT_BACK,
}


@dataclass(frozen=True)
class CheckerTexture:
    """Two-tone checkerboard with square cells of `scale` scene units."""

    scale: float = 16.0
    low: float = 50.0
    high: float = 205.0

    def evaluate(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        parity = (np.floor(u / self.scale) + np.floor(v / self.scale)) % 2
        return np.where(parity == 0, self.low, self.high)


_LATTICE_SIZE = 256


@dataclass(frozen=True)
class NoiseTexture:
    """Smoothed value noise, deterministic per seed.

    Two octaves of smoothstep-interpolated lattice noise; `scale` is the
    lattice cell size of the base octave in scene units.
    """

    scale: float = 1.0
    seed: int = 0
    octaves: int = 2
    low: float = 30.0
    high: float = 225.0

    @cached_property
    def _lattice(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.random((_LATTICE_SIZE, _LATTICE_SIZE))

    def _octave(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        i0 = np.floor(u).astype(np.int64)
        j0 = np.floor(v).astype(np.int64)
        fu = u - i0
        fv = v - j0
        su = fu * fu * (3.0 - 2.0 * fu)
        sv = fv * fv * (3.0 - 2.0 * fv)
        i0 %= _LATTICE_SIZE
        j0 %= _LATTICE_SIZE
        i1 = (i0 + 1) % _LATTICE_SIZE
        j1 = (j0 + 1) % _LATTICE_SIZE
        lat = self._lattice
        v00, v10 = lat[j0, i0], lat[j0, i1]
        v01, v11 = lat[j1, i0], lat[j1, i1]
        top = v00 + su * (v10 - v00)
        bot = v01 + su * (v11 - v01)
        return top + sv * (bot - top)

    def evaluate(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        total = np.zeros_like(np.asarray(u, dtype=float))
        amplitude = 1.0
        norm = 0.0
        for octave in range(self.octaves):
            k = 2.0**octave
            # fixed offsets decorrelate the octaves on the shared lattice
            total += amplitude * self._octave(
                u * k / self.scale + 37.23 * octave, v * k / self.scale + 11.71 * octave
            )
            norm += amplitude
            amplitude *= 0.5
        return self.low + (self.high - self.low) * total / norm


@dataclass(frozen=True)
class ScenePlane:
    """One textured plane at `distance` scene units from the camera."""

    orientation: PlaneOrientation
    distance: float
    texture: CheckerTexture | NoiseTexture

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError(f"plane distance must be positive, got {self.distance}")


@dataclass(frozen=True)
class MotionSpec:
    """Either one global camera translation or per-plane displacements.

    A camera translation t displaces every plane by -t; per-plane
    displacements move each plane's content individually.
    """

    camera_translation: tuple[float, float, float] | None = None
    plane_displacements: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self):
        if (self.camera_translation is None) == (self.plane_displacements is None):
            raise ValueError("specify exactly one of camera_translation, plane_displacements")
        values = (
            [self.camera_translation]
            if self.camera_translation is not None
            else list(self.plane_displacements)
        )
        if not np.all(np.isfinite(np.asarray(values, dtype=float))):
            raise ValueError("displacements must be finite")

    def displacements(self, n_planes: int) -> np.ndarray:
        if self.camera_translation is not None:
            return np.tile(-np.asarray(self.camera_translation, dtype=float), (n_planes, 1))
        disp = np.asarray(self.plane_displacements, dtype=float)
        if disp.shape != (n_planes, 3):
            raise ValueError(f"need {n_planes} plane displacements, got {disp.shape}")
        return disp


def _ray_directions(cam: FisheyeCamera, coords: np.ndarray):
    """Unit ray per coordinate; rays outside the image circle are masked out."""
    rel = coords - np.asarray(cam.principal_point)
    inside = np.hypot(rel[..., 0], rel[..., 1]) <= cam.r_max
    dirs = np.zeros(coords.shape[:-1] + (3,))
    dirs[inside] = fisheye_to_sphere(coords[inside], cam)
    return dirs, inside


def _trace(
    planes: list[ScenePlane], dirs: np.ndarray, inside: np.ndarray, displacements: np.ndarray
):
    """Nearest-plane intersection: (values, labels) over the ray grid."""
    shape = dirs.shape[:-1]
    best_t = np.full(shape, np.inf)
    labels = np.full(shape, BACKGROUND_LABEL, dtype=np.int32)
    values = np.zeros(shape)
    for index, (plane, disp) in enumerate(zip(planes, displacements)):
        normal, u_axis, v_axis = (np.asarray(a, dtype=float) for a in _PLANE_FRAMES[plane.orientation])
        offset = plane.distance + float(disp @ normal)
        if offset <= 0:
            raise SceneMotionError(
                f"displacement pushes plane {plane.orientation.value} behind the camera"
            )
        along = dirs @ normal
        with np.errstate(divide="ignore"):
            t = np.where(along > 1e-12, offset / along, np.inf)
        hit = inside & (t < best_t)
        if not hit.any():
            continue
        point = dirs[hit] * t[hit][..., None] - disp
        values[hit] = plane.texture.evaluate(point @ u_axis, point @ v_axis)
        best_t[hit] = t[hit]
        labels[hit] = index
    return values, labels


def render_fisheye_frame(
    planes: list[ScenePlane],
    cam: FisheyeCamera,
    displacements: np.ndarray | None = None,
    supersample: int = 2,
) -> Frame:
    """Render the scene through the lens; pixels outside the circle are 0."""
    if displacements is None:
        displacements = np.zeros((len(planes), 3))
    w, h = cam.width, cam.height
    n = supersample
    # subsample centers: pixel i covers [i - 0.5, i + 0.5)
    xs = (np.arange(w * n) + 0.5) / n - 0.5
    ys = (np.arange(h * n) + 0.5) / n - 0.5
    gx, gy = np.meshgrid(xs, ys)
    coords = np.stack((gx, gy), axis=-1)
    dirs, inside = _ray_directions(cam, coords)
    values, _ = _trace(planes, dirs, inside, displacements)
    values = values.reshape(h, n, w, n).mean(axis=(1, 3))
    pixels = np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)
    return Frame(pixels, 8)


def plane_labels(
    planes: list[ScenePlane], cam: FisheyeCamera, displacements: np.ndarray | None = None
) -> np.ndarray:
    """Index of the plane seen by each pixel-center ray; -1 for background."""
    if displacements is None:
        displacements = np.zeros((len(planes), 3))
    gx, gy = np.meshgrid(np.arange(cam.width, dtype=float), np.arange(cam.height, dtype=float))
    coords = np.stack((gx, gy), axis=-1)
    dirs, inside = _ray_directions(cam, coords)
    _, labels = _trace(planes, dirs, inside, displacements)
    return labels


def generate_pair(
    planes: list[ScenePlane],
    motion: MotionSpec,
    cam: FisheyeCamera,
    supersample: int = 2,
    max_relabeled: float = 0.0,
):
    """Reference/current frame pair plus per-pixel plane labels.

    The labels are taken from the reference render and serve as the oracle
    for viewport decisions. If the displacement changes the visible plane
    for more than `max_relabeled` of the in-circle pixels (occlusion order
    change), SceneMotionError is raised.
    """
    displacements = motion.displacements(len(planes))
    reference = render_fisheye_frame(planes, cam, supersample=supersample)
    current = render_fisheye_frame(planes, cam, displacements, supersample=supersample)
    labels = plane_labels(planes, cam)
    labels_moved = plane_labels(planes, cam, displacements)
    changed = np.count_nonzero(labels != labels_moved)
    total = labels.size
    if changed > max_relabeled * total:
        raise SceneMotionError(
            f"{changed}/{total} pixels change visible plane under this displacement"
        )
    return reference, current, labels


_TEXTURES = {"checker": CheckerTexture, "noise": NoiseTexture}


def scene_from_dict(spec: dict):
    """Build (planes, motion) from a plain dict (see `load_scene`)."""
    planes = []
    for entry in spec["planes"]:
        texture_spec = dict(entry.get("texture", {"kind": "checker"}))
        kind = texture_spec.pop("kind")
        try:
            texture_cls = _TEXTURES[kind]
        except KeyError:
            raise ValueError(f"unknown texture kind {kind!r}") from None
        planes.append(
            ScenePlane(
                PlaneOrientation(entry["orientation"]),
                float(entry["distance"]),
                texture_cls(**texture_spec),
            )
        )
    motion_spec = spec.get("motion", {})
    if "plane_displacements" in motion_spec:
        motion = MotionSpec(
            plane_displacements=tuple(tuple(d) for d in motion_spec["plane_displacements"])
        )
    else:
        motion = MotionSpec(
            camera_translation=tuple(motion_spec.get("camera_translation", (0.0, 0.0, 0.0)))
        )
    return planes, motion


def load_scene(path):
    """Load a scene description from a JSON file.

    Schema:
        {"planes": [{"orientation": "ground", "distance": 2.0,
                     "texture": {"kind": "noise", "scale": 0.5, "seed": 7}}],
         "motion": {"camera_translation": [0.05, 0.0, 0.0]}}
    """
    with open(path) as fh:
        return scene_from_dict(json.load(fh))
