"""Viewport-adaptive block-matching motion estimation and compensation for
equisolid fisheye video.

The package provides the lens/sphere/viewport geometry with exact
virtual-image-plane handling, 1/8-pel cubic-convolution sampling, the
translatory, projection-based and viewport-adaptive estimators, masked
PSNR/SSIM, side-information rate measurement, and a synthetic-scene
harness with analytically known motion planes.
"""

from .geometry import (
    EPS_THETA,
    FisheyeCamera,
    GeometryError,
    MappedCoordinates,
    ProjectionDomainError,
    TangentSingularityError,
    Viewport,
    ViewportPlane,
    fisheye_to_sphere,
    map_coordinates,
    perspective_to_sphere,
    project_to_viewport,
    rotate_from_viewport,
    rotate_to_viewport,
    sphere_to_fisheye,
    sphere_to_perspective,
    unproject_from_viewport,
)
from .metrics import circular_mask, psnr_masked, ssim_masked
from .motion import (
    Block,
    BlockEstimate,
    INFINITE_COST,
    Method,
    MotionField,
    SearchConfig,
    Strategy,
    block_grid,
    compensate_frame,
    diamond_search,
    estimate_block,
    estimate_motion_field,
    exhaustive_search,
    materialize_candidate,
    ssd,
)
from .sampling import Frame, SubpelGrid, cubic_kernel, quantize_coords, sample_at
from .sideinfo import (
    COMPRESSORS,
    SideInfoError,
    SideInfoStream,
    pack_side_info,
    rate_bits_per_pixel,
    side_info_stream,
    unpack_side_info,
)
from .synth import (
    BACKGROUND_LABEL,
    CheckerTexture,
    EXPECTED_VIEWPORT,
    MotionSpec,
    NoiseTexture,
    PlaneOrientation,
    SceneMotionError,
    ScenePlane,
    generate_pair,
    load_scene,
    plane_labels,
    render_fisheye_frame,
    scene_from_dict,
)

__version__ = "0.1.0"
