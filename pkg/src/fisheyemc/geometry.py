"""Coordinate transforms between the fisheye image, the unit sphere and
perspective viewport planes.

Conventions used throughout the package:

* Image coordinates (x, y) in pixels, x right, y down, pixel centers on the
  integer grid. Coordinate pairs are stacked on the last array axis, (..., 2).
* Directions are unit vectors stacked as (..., 3), z along the optical axis,
  with x = sin(theta) cos(phi), y = sin(theta) sin(phi), z = cos(theta).
  phi is measured from +x toward +y (toward the image bottom), so the bottom
  half of the image corresponds to directions with y > 0.
* Equisolid lens: image radius r = 2 f sin(theta / 2), invertible for
  theta in [0, pi] (radii up to 2 f).
* Perspective plane at focal distance f: r = f tan(theta). Incident angles
  beyond pi/2 land on the virtual image plane behind the projection center;
  the signed tangent leaves them point-mirrored through the plane origin,
  which is exactly the representation undone by the virtual-plane corrections
  in `perspective_to_sphere` (negated motion vector, theta -> pi - theta,
  phi -> phi - pi).

Only three viewport orientations exist. Each one covers an opposite pair of
virtual perspective cameras through a single 90-degree axis transposition;
the second member of every pair is the virtual-plane half of the first, so
both members share one set of calculations.

All functions are pure, vectorized float64 math with no shared state; they
are safe to call from any number of workers and deterministic bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "EPS_THETA",
    "FisheyeCamera",
    "GeometryError",
    "MappedCoordinates",
    "ProjectionDomainError",
    "TangentSingularityError",
    "Viewport",
    "ViewportPlane",
    "fisheye_to_sphere",
    "map_coordinates",
    "perspective_to_sphere",
    "project_to_viewport",
    "rotate_from_viewport",
    "rotate_to_viewport",
    "sphere_to_fisheye",
    "sphere_to_perspective",
    "unproject_from_viewport",
    "wrap_angle",
]

# Guard band around the tangent singularity at theta = pi/2. Directions inside
# the band are unmappable for the viewport in question.
EPS_THETA = 1e-6

# Slack for radii that exceed the arcsin domain by float noise only.
_DOMAIN_SLACK = 1e-12


class GeometryError(ValueError):
    """Base class for coordinate-transform contract violations."""


class ProjectionDomainError(GeometryError):
    """Fisheye radius lies outside the invertible range of the lens (r > 2f)."""


class TangentSingularityError(GeometryError):
    """Incident angle within the guard band of pi/2 for the chosen viewport."""


class Viewport(Enum):
    """Axis-pair orientation of the virtual perspective camera.

    The integer values double as the 2-bit wire codes used by the
    side-information packing and as the fixed tie-break/search order.
    """

    FRONT_BACK = 0
    BOTTOM_TOP = 1
    LEFT_RIGHT = 2


@dataclass(frozen=True)
class FisheyeCamera:
    """Equisolid fisheye camera intrinsics.

    focal_length      f in pixel units
    principal_point   (cx, cy) in pixel coordinates
    fov               full field of view in radians
    image_size        (width, height) in pixels
    """

    focal_length: float
    principal_point: tuple[float, float]
    fov: float
    image_size: tuple[int, int]

    def __post_init__(self):
        w, h = self.image_size
        if self.focal_length <= 0:
            raise ValueError(f"focal_length must be positive, got {self.focal_length}")
        if not 0 < self.fov <= 2 * np.pi:
            raise ValueError(f"fov must lie in (0, 2*pi], got {self.fov}")
        if w <= 0 or h <= 0:
            raise ValueError(f"image_size must be positive, got {self.image_size}")
        if self.r_max > min(w, h) / 2 + 0.5:
            raise ValueError(
                f"image circle radius {self.r_max:.3f} exceeds the frame "
                f"(min(w,h)/2 + 0.5 = {min(w, h) / 2 + 0.5})"
            )
        cx, cy = self.principal_point
        if not (-0.5 <= cx <= w - 0.5 and -0.5 <= cy <= h - 0.5):
            raise ValueError(f"principal point {self.principal_point} outside the image")

    @property
    def width(self) -> int:
        return self.image_size[0]

    @property
    def height(self) -> int:
        return self.image_size[1]

    @property
    def r_max(self) -> float:
        """Image-circle radius: the equisolid radius of the fov/2 incident angle."""
        return 2.0 * self.focal_length * np.sin(self.fov / 4.0)

    @classmethod
    def from_fov(
        cls,
        width: int,
        height: int,
        fov: float,
        focal_length: float | None = None,
        principal_point: tuple[float, float] | None = None,
    ) -> "FisheyeCamera":
        """Build a camera whose image circle is inscribed in the frame.

        When `focal_length` is omitted it is derived so the circle radius
        equals min(width, height)/2; the principal point defaults to the
        frame center in pixel-center coordinates.
        """
        if focal_length is None:
            focal_length = (min(width, height) / 2.0) / (2.0 * np.sin(fov / 4.0))
        if principal_point is None:
            principal_point = ((width - 1) / 2.0, (height - 1) / 2.0)
        return cls(focal_length, principal_point, fov, (width, height))


@dataclass(frozen=True)
class ViewportPlane:
    """Per-pixel perspective coordinates of one viewport, motion independent.

    coords         (..., 2) signed perspective-plane coordinates
    virtual        rotated incident angle beyond pi/2 (virtual image plane)
    singular       inside the tangent guard band; unmappable for this viewport
    out_of_domain  source radius beyond 2f; the lens cannot see the pixel
    """

    coords: np.ndarray
    virtual: np.ndarray
    singular: np.ndarray
    out_of_domain: np.ndarray
    viewport: Viewport

    @property
    def mappable(self) -> np.ndarray:
        return ~(self.singular | self.out_of_domain)


@dataclass(frozen=True)
class MappedCoordinates:
    """Result of the full per-pixel motion mapping.

    coords         (..., 2) fisheye-domain coordinates to sample the reference at
    virtual        pixel was handled on the virtual image plane
    out_of_circle  mapped coordinate fell outside the image circle
    mappable       pixel went through the full chain (False: identity fallback)
    """

    coords: np.ndarray
    virtual: np.ndarray
    out_of_circle: np.ndarray
    mappable: np.ndarray


def wrap_angle(phi: np.ndarray) -> np.ndarray:
    """Normalize angles to (-pi, pi]."""
    phi = np.asarray(phi, dtype=float)
    wrapped = phi - 2 * np.pi * np.floor((phi + np.pi) / (2 * np.pi))
    return np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)


def _direction(theta, phi):
    st = np.sin(theta)
    return np.stack((st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1)


def _angles_of(dirs):
    dirs = np.asarray(dirs, dtype=float)
    theta = np.arctan2(np.hypot(dirs[..., 0], dirs[..., 1]), dirs[..., 2])
    phi = np.arctan2(dirs[..., 1], dirs[..., 0])
    return theta, phi


def _first_index(mask):
    return tuple(int(i) for i in np.argwhere(mask)[0])


def fisheye_to_sphere(points: np.ndarray, cam: FisheyeCamera) -> np.ndarray:
    """Lift image coordinates onto the unit sphere (inverse equisolid lens).

    Raises ProjectionDomainError when a radius exceeds 2f, naming the pixel.
    """
    points = np.asarray(points, dtype=float)
    rel = points - np.asarray(cam.principal_point)
    r = np.hypot(rel[..., 0], rel[..., 1])
    ratio = r / (2.0 * cam.focal_length)
    bad = ratio > 1.0 + _DOMAIN_SLACK
    if np.any(bad):
        idx = _first_index(bad)
        raise ProjectionDomainError(
            f"pixel {tuple(points[idx])} has radius {r[idx]:.6f} beyond the lens "
            f"range 2f = {2 * cam.focal_length:.6f} ({int(bad.sum())} offending pixels)"
        )
    theta = 2.0 * np.arcsin(np.minimum(ratio, 1.0))
    phi = np.arctan2(rel[..., 1], rel[..., 0])
    return _direction(theta, phi)


def sphere_to_fisheye(dirs: np.ndarray, cam: FisheyeCamera) -> np.ndarray:
    """Project unit directions to image coordinates (equisolid lens). Total."""
    theta, phi = _angles_of(dirs)
    r = 2.0 * cam.focal_length * np.sin(theta / 2.0)
    out = np.stack((r * np.cos(phi), r * np.sin(phi)), axis=-1)
    return out + np.asarray(cam.principal_point)


def rotate_to_viewport(dirs: np.ndarray, viewport: Viewport) -> np.ndarray:
    """Rotate a direction into the viewport frame (90-degree transpositions)."""
    dirs = np.asarray(dirs, dtype=float)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    if viewport is Viewport.FRONT_BACK:
        return dirs.copy()
    if viewport is Viewport.BOTTOM_TOP:
        return np.stack((x, -z, y), axis=-1)
    return np.stack((z, y, -x), axis=-1)


def rotate_from_viewport(dirs: np.ndarray, viewport: Viewport) -> np.ndarray:
    """Exact inverse of `rotate_to_viewport`."""
    dirs = np.asarray(dirs, dtype=float)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    if viewport is Viewport.FRONT_BACK:
        return dirs.copy()
    if viewport is Viewport.BOTTOM_TOP:
        return np.stack((x, z, -y), axis=-1)
    return np.stack((-z, y, x), axis=-1)


def sphere_to_perspective(dirs: np.ndarray, focal_length: float):
    """Project unit directions onto the perspective plane with the signed tangent.

    Returns (coords, virtual): (..., 2) plane coordinates and a boolean mask
    marking points on the virtual image plane (incident angle beyond pi/2).
    Raises TangentSingularityError inside the guard band around pi/2.
    """
    theta, phi = _angles_of(dirs)
    singular = np.abs(theta - np.pi / 2.0) < EPS_THETA
    if np.any(singular):
        idx = _first_index(singular)
        raise TangentSingularityError(
            f"direction index {idx} has incident angle {theta[idx]:.9f} within "
            f"{EPS_THETA} rad of pi/2"
        )
    t = focal_length * np.tan(theta)
    coords = np.stack((t * np.cos(phi), t * np.sin(phi)), axis=-1)
    return coords, theta > np.pi / 2.0


def perspective_to_sphere(coords: np.ndarray, focal_length: float, virtual=False) -> np.ndarray:
    """Lift perspective-plane coordinates back onto the unit sphere.

    For virtual-plane points the corrections theta -> pi - theta and
    phi -> phi - pi are applied, undoing the point mirroring of the signed
    tangent so the round trip through `sphere_to_perspective` is exact.
    """
    coords = np.asarray(coords, dtype=float)
    virtual = np.asarray(virtual, dtype=bool)
    r = np.hypot(coords[..., 0], coords[..., 1])
    phi = np.arctan2(coords[..., 1], coords[..., 0])
    theta = np.arctan(r / focal_length)
    theta = np.where(virtual, np.pi - theta, theta)
    phi = np.where(virtual, wrap_angle(phi - np.pi), phi)
    return _direction(theta, phi)


def project_to_viewport(
    points: np.ndarray, viewport: Viewport, cam: FisheyeCamera, strict: bool = True
) -> ViewportPlane:
    """Motion-independent forward half of the mapping chain.

    Lifts pixels to the sphere, rotates into the viewport and projects onto
    the perspective plane. With strict=True, unmappable pixels raise; with
    strict=False they are flagged and their plane coordinates are zeroed.
    """
    points = np.asarray(points, dtype=float)
    rel = points - np.asarray(cam.principal_point)
    r = np.hypot(rel[..., 0], rel[..., 1])
    ratio = r / (2.0 * cam.focal_length)
    out_of_domain = ratio > 1.0 + _DOMAIN_SLACK
    if strict and np.any(out_of_domain):
        idx = _first_index(out_of_domain)
        raise ProjectionDomainError(
            f"pixel {tuple(points[idx])} has radius {r[idx]:.6f} beyond the lens "
            f"range 2f = {2 * cam.focal_length:.6f}"
        )
    theta_s = 2.0 * np.arcsin(np.minimum(ratio, 1.0))
    phi_s = np.arctan2(rel[..., 1], rel[..., 0])
    rotated = rotate_to_viewport(_direction(theta_s, phi_s), viewport)

    theta, phi = _angles_of(rotated)
    singular = np.abs(theta - np.pi / 2.0) < EPS_THETA
    singular &= ~out_of_domain
    if strict and np.any(singular):
        idx = _first_index(singular)
        raise TangentSingularityError(
            f"pixel {tuple(points[idx])} maps within {EPS_THETA} rad of pi/2 "
            f"in viewport {viewport.name}"
        )
    safe_theta = np.where(singular, 0.0, theta)
    t = cam.focal_length * np.tan(safe_theta)
    coords = np.stack((t * np.cos(phi), t * np.sin(phi)), axis=-1)
    bad = singular | out_of_domain
    coords = np.where(bad[..., None], 0.0, coords)
    return ViewportPlane(coords, (theta > np.pi / 2.0) & ~bad, singular, out_of_domain, viewport)


def unproject_from_viewport(
    coords: np.ndarray, virtual, viewport: Viewport, cam: FisheyeCamera
) -> np.ndarray:
    """Inverse half of the chain: plane -> sphere -> rotate back -> fisheye."""
    dirs = perspective_to_sphere(coords, cam.focal_length, virtual)
    return sphere_to_fisheye(rotate_from_viewport(dirs, viewport), cam)


def map_coordinates(
    points: np.ndarray,
    viewport: Viewport,
    motion,
    cam: FisheyeCamera,
    strict: bool = True,
) -> MappedCoordinates:
    """Full per-pixel mapping for one viewport and motion vector candidate.

    Chain: fisheye -> sphere -> viewport rotation -> perspective plane ->
    apply the motion vector (negated on the virtual plane) -> back to the
    sphere with the virtual-plane corrections -> reverse rotation -> fisheye.
    The plane membership of every pixel is decided before the motion vector
    is applied and carried through the inverse.

    Unmappable pixels (radius beyond 2f, or inside the tangent guard band)
    raise when strict, otherwise they keep their input coordinate and are
    reported through `mappable`. Mapped coordinates may land outside the
    image circle; they are returned as-is with `out_of_circle` set and the
    sampling policy decides what to do with them.
    """
    points = np.asarray(points, dtype=float)
    plane = project_to_viewport(points, viewport, cam, strict=strict)
    motion = np.asarray(motion, dtype=float)
    sign = np.where(plane.virtual, -1.0, 1.0)
    shifted = plane.coords + sign[..., None] * motion
    out = unproject_from_viewport(shifted, plane.virtual, viewport, cam)
    mappable = plane.mappable
    out = np.where(mappable[..., None], out, points)
    rel = out - np.asarray(cam.principal_point)
    out_of_circle = np.hypot(rel[..., 0], rel[..., 1]) > cam.r_max
    return MappedCoordinates(out, plane.virtual, out_of_circle, mappable)
