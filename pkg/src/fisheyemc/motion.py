"""Block-matching motion estimation and compensation.

Three estimators share the machinery:

* tmc      - motion vectors are integer shifts in the fisheye domain.
* ptmc     - vectors live on the forward perspective plane; every block pixel
             is reprojected through the forward viewport.
* va_ptmc  - ptmc extended with an independent search per viewport
             (front/back, bottom/top, left/right); the minimum-SSD pair of
             (vector, viewport) wins.

Searches start at the zero vector, probe deterministically, memoize every
probed vector and break ties toward the earlier probe (and the earlier
viewport), so identical inputs always produce identical fields. Block
estimates are independent of each other given the two frames; callers may
parallelize over blocks as long as results are keyed by block index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import FisheyeCamera, Viewport, ViewportPlane, project_to_viewport, unproject_from_viewport
from .sampling import Frame, SubpelGrid, sample_at

__all__ = [
    "Block",
    "BlockEstimate",
    "INFINITE_COST",
    "Method",
    "MotionField",
    "SearchConfig",
    "Strategy",
    "block_grid",
    "compensate_frame",
    "diamond_search",
    "estimate_block",
    "estimate_motion_field",
    "exhaustive_search",
    "materialize_candidate",
    "ssd",
]

INFINITE_COST = math.inf

# Probe orders are part of the determinism contract: large diamond clockwise
# from north (y down), then the small diamond.
_LDSP = ((0, -2), (1, -1), (2, 0), (1, 1), (0, 2), (-1, 1), (-2, 0), (-1, -1))
_SDSP = ((0, -1), (1, 0), (0, 1), (-1, 0))


class Method(Enum):
    TMC = "tmc"
    PTMC = "ptmc"
    VA_PTMC = "va_ptmc"


class Strategy(Enum):
    DIAMOND = "diamond"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of one estimation run."""

    block_size: int
    search_range: int = 96
    strategy: Strategy = Strategy.DIAMOND
    method: Method = Method.VA_PTMC

    def __post_init__(self):
        if self.block_size <= 0:
            raise ValueError(f"block_size must be positive, got {self.block_size}")
        if self.search_range <= 0:
            raise ValueError(f"search_range must be positive, got {self.search_range}")

    @property
    def viewports(self) -> tuple[Viewport, ...]:
        if self.method is Method.VA_PTMC:
            return (Viewport.FRONT_BACK, Viewport.BOTTOM_TOP, Viewport.LEFT_RIGHT)
        return (Viewport.FRONT_BACK,)


@dataclass(frozen=True)
class Block:
    """Rectangular pixel region: origin (x0, y0), extent (width, height)."""

    x0: int
    y0: int
    width: int
    height: int

    @property
    def rows(self) -> slice:
        return slice(self.y0, self.y0 + self.height)

    @property
    def cols(self) -> slice:
        return slice(self.x0, self.x0 + self.width)

    def pixel_coords(self) -> np.ndarray:
        """(height, width, 2) grid of the block's (x, y) pixel centers."""
        xs = np.arange(self.x0, self.x0 + self.width, dtype=float)
        ys = np.arange(self.y0, self.y0 + self.height, dtype=float)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack((gx, gy), axis=-1)


@dataclass(frozen=True)
class BlockEstimate:
    """Winning (vector, viewport) of one block with its SSD cost."""

    mv: tuple[int, int]
    viewport: Viewport
    cost: float
    block: Block


@dataclass
class MotionField:
    """Per-block estimates for one frame pair, in raster block order."""

    mvs: np.ndarray          # (rows, cols, 2) int32, (dx, dy) per block
    viewports: np.ndarray    # (rows, cols) uint8 viewport codes
    costs: np.ndarray        # (rows, cols) float64
    frame_size: tuple[int, int]
    config: SearchConfig

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.mvs.shape[:2]

    @property
    def n_blocks(self) -> int:
        return self.mvs.shape[0] * self.mvs.shape[1]

    def blocks(self):
        """Yield (row, col, Block, BlockEstimate) in raster order."""
        grid = block_grid(*self.frame_size, self.config.block_size)
        rows, cols = self.grid_shape
        for r in range(rows):
            for c in range(cols):
                blk = grid[r * cols + c]
                yield r, c, blk, BlockEstimate(
                    (int(self.mvs[r, c, 0]), int(self.mvs[r, c, 1])),
                    Viewport(int(self.viewports[r, c])),
                    float(self.costs[r, c]),
                    blk,
                )

    @classmethod
    def zero(cls, frame_size: tuple[int, int], config: SearchConfig) -> "MotionField":
        """All-zero vectors on the forward viewport; compensates to the reference."""
        w, h = frame_size
        rows = -(-h // config.block_size)
        cols = -(-w // config.block_size)
        return cls(
            np.zeros((rows, cols, 2), dtype=np.int32),
            np.zeros((rows, cols), dtype=np.uint8),
            np.zeros((rows, cols), dtype=np.float64),
            frame_size,
            config,
        )


def block_grid(width: int, height: int, block_size: int) -> list[Block]:
    """Cover the frame with blocks in raster order; edge blocks may be partial."""
    blocks = []
    for y0 in range(0, height, block_size):
        for x0 in range(0, width, block_size):
            blocks.append(
                Block(x0, y0, min(block_size, width - x0), min(block_size, height - y0))
            )
    return blocks


def ssd(current: np.ndarray, candidate: np.ndarray) -> float:
    """Sum of squared differences between two equally sized blocks."""
    current = np.asarray(current, dtype=np.float64)
    candidate = np.asarray(candidate, dtype=np.float64)
    if current.shape != candidate.shape:
        raise ValueError(f"block shape mismatch: {current.shape} vs {candidate.shape}")
    diff = current - candidate
    return float(np.dot(diff.ravel(), diff.ravel()))


def _tmc_candidate(ref_pixels: np.ndarray, block: Block, mv: tuple[int, int]) -> np.ndarray:
    h, w = ref_pixels.shape
    dx, dy = mv
    xs = np.clip(np.arange(block.x0 + dx, block.x0 + dx + block.width), 0, w - 1)
    ys = np.clip(np.arange(block.y0 + dy, block.y0 + dy + block.height), 0, h - 1)
    return ref_pixels[np.ix_(ys, xs)].astype(np.float64)


def materialize_candidate(
    ref_grid: SubpelGrid,
    block: Block,
    viewport: Viewport,
    mv: tuple[int, int],
    cam: FisheyeCamera,
    method: Method,
    plane: ViewportPlane | None = None,
) -> tuple[np.ndarray, bool]:
    """Build the motion-compensated candidate block for (viewport, mv).

    Returns (samples, clean). `samples` always has the block's shape;
    pixels that cannot be mapped keep their own coordinate so compensation
    stays total. `clean` is False when the block touches the tangent guard
    band in this viewport, which disqualifies the candidate during search.
    """
    if method is Method.TMC:
        return _tmc_candidate(ref_grid.frame.pixels, block, mv), True

    coords = None
    if plane is None:
        coords = block.pixel_coords()
        plane = project_to_viewport(coords, viewport, cam, strict=False)
        virtual = plane.virtual
        plane_coords = plane.coords
        singular = plane.singular
        mappable = plane.mappable
    else:
        sl = (block.rows, block.cols)
        virtual = plane.virtual[sl]
        plane_coords = plane.coords[sl]
        singular = plane.singular[sl]
        mappable = plane.mappable[sl]

    sign = np.where(virtual, -1.0, 1.0)
    shifted = plane_coords + sign[..., None] * np.asarray(mv, dtype=float)
    mapped = unproject_from_viewport(shifted, virtual, viewport, cam)
    if not mappable.all():
        if coords is None:
            coords = block.pixel_coords()
        mapped = np.where(mappable[..., None], mapped, coords)
    return sample_at(ref_grid, mapped), not bool(np.any(singular))


def _clamp_mv(mv: tuple[int, int], search_range: int) -> tuple[int, int]:
    return (
        max(-search_range, min(search_range, mv[0])),
        max(-search_range, min(search_range, mv[1])),
    )


def diamond_search(evaluator, search_range: int) -> tuple[tuple[int, int], float]:
    """Two-pattern diamond search over integer vectors within +-search_range.

    The 9-point large diamond is re-centered on the best probe until the
    center wins, then the 5-point small diamond refines. Probes outside the
    range are clamped, every vector is evaluated at most once, and ties keep
    the earlier probe.
    """
    center = (0, 0)
    memo = {center: evaluator(center)}
    best, best_cost = center, memo[center]
    while True:
        for off in _LDSP:
            cand = _clamp_mv((center[0] + off[0], center[1] + off[1]), search_range)
            if cand in memo:
                continue
            cost = evaluator(cand)
            memo[cand] = cost
            if cost < best_cost:
                best, best_cost = cand, cost
        if best == center:
            break
        center = best
    for off in _SDSP:
        cand = _clamp_mv((center[0] + off[0], center[1] + off[1]), search_range)
        if cand in memo:
            continue
        cost = evaluator(cand)
        memo[cand] = cost
        if cost < best_cost:
            best, best_cost = cand, cost
    return best, best_cost


def exhaustive_search(evaluator, search_range: int) -> tuple[tuple[int, int], float]:
    """Evaluate every integer vector within +-search_range; zero vector first."""
    best = (0, 0)
    best_cost = evaluator(best)
    for dy in range(-search_range, search_range + 1):
        for dx in range(-search_range, search_range + 1):
            if dx == 0 and dy == 0:
                continue
            cost = evaluator((dx, dy))
            if cost < best_cost:
                best, best_cost = (dx, dy), cost
    return best, best_cost


_SEARCHES = {Strategy.DIAMOND: diamond_search, Strategy.EXHAUSTIVE: exhaustive_search}


def estimate_block(
    cur: Frame,
    ref_grid: SubpelGrid,
    block: Block,
    cam: FisheyeCamera,
    config: SearchConfig,
    planes: dict[Viewport, ViewportPlane] | None = None,
    viewports: tuple[Viewport, ...] | None = None,
) -> BlockEstimate:
    """Search the best (vector, viewport) for one block.

    Viewports are searched independently in their fixed order; the lowest
    cost wins and ties keep the earlier viewport. `planes` may carry
    whole-frame forward projections to share across blocks.
    """
    cur_block = cur.pixels[block.rows, block.cols].astype(np.float64)
    search = _SEARCHES[config.strategy]
    best: BlockEstimate | None = None
    for viewport in viewports if viewports is not None else config.viewports:
        plane = planes.get(viewport) if planes else None

        def evaluator(mv, _viewport=viewport, _plane=plane):
            cand, clean = materialize_candidate(
                ref_grid, block, _viewport, mv, cam, config.method, _plane
            )
            if not clean:
                return INFINITE_COST
            return ssd(cur_block, cand)

        mv, cost = search(evaluator, config.search_range)
        if best is None or cost < best.cost:
            best = BlockEstimate(mv, viewport, cost, block)
    return best


def estimate_motion_field(
    cur: Frame, ref: Frame, cam: FisheyeCamera, config: SearchConfig
) -> MotionField:
    """Estimate every block of the frame pair in raster order."""
    if cur.pixels.shape != ref.pixels.shape:
        raise ValueError(
            f"frame shape mismatch: {cur.pixels.shape} vs {ref.pixels.shape}"
        )
    w, h = cur.width, cur.height
    ref_grid = SubpelGrid(ref)
    planes = None
    if config.method is not Method.TMC:
        full = Block(0, 0, w, h).pixel_coords()
        planes = {
            v: project_to_viewport(full, v, cam, strict=False) for v in config.viewports
        }
    blocks = block_grid(w, h, config.block_size)
    field = MotionField.zero((w, h), config)
    cols = field.grid_shape[1]
    for i, block in enumerate(blocks):
        est = estimate_block(cur, ref_grid, block, cam, config, planes)
        r, c = divmod(i, cols)
        field.mvs[r, c] = est.mv
        field.viewports[r, c] = est.viewport.value
        field.costs[r, c] = est.cost
    return field


def compensate_frame(
    ref: Frame, motion_field: MotionField, cam: FisheyeCamera, config: SearchConfig | None = None
) -> Frame:
    """Rebuild the predicted frame from the stored per-block estimates."""
    config = config or motion_field.config
    ref_grid = SubpelGrid(ref)
    planes = None
    if config.method is not Method.TMC:
        full = Block(0, 0, ref.width, ref.height).pixel_coords()
        planes = {
            v: project_to_viewport(full, v, cam, strict=False)
            for v in (Viewport.FRONT_BACK, Viewport.BOTTOM_TOP, Viewport.LEFT_RIGHT)
        }
    out = np.zeros_like(ref.pixels)
    for _, _, block, est in motion_field.blocks():
        plane = planes.get(est.viewport) if planes else None
        samples, _ = materialize_candidate(
            ref_grid, block, est.viewport, est.mv, cam, config.method, plane
        )
        rounded = np.clip(np.floor(samples + 0.5), 0, ref.max_value)
        out[block.rows, block.cols] = rounded.astype(ref.pixels.dtype)
    return Frame(out, ref.bit_depth)
