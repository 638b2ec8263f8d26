"""Search machinery: SSD, candidate materialization, diamond/exhaustive, fields."""

import numpy as np
import pytest

from fisheyemc.geometry import FisheyeCamera, Viewport
from fisheyemc.motion import (
    Block,
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
from fisheyemc.sampling import Frame, SubpelGrid

import oracles


@pytest.fixture(scope="module")
def cam():
    return FisheyeCamera.from_fov(128, 128, np.deg2rad(185.0))


def smooth_noise_frame(shape, seed, blur=3):
    """Band-limited random frame: enough texture, smooth cost surfaces."""
    from scipy import ndimage

    rng = np.random.default_rng(seed)
    base = ndimage.gaussian_filter(rng.random(shape), blur)
    base -= base.min()
    base /= base.max()
    return Frame((base * 255).astype(np.uint8))


def shifted_pair(shape, shift, seed):
    """cur(x) = ref(x + shift), cut from one larger render to avoid seams."""
    dx, dy = shift
    big = smooth_noise_frame((shape[0] + 2 * abs(dy) + 8, shape[1] + 2 * abs(dx) + 8), seed)
    oy, ox = abs(dy) + 4, abs(dx) + 4
    ref = big.pixels[oy : oy + shape[0], ox : ox + shape[1]]
    cur = big.pixels[oy + dy : oy + dy + shape[0], ox + dx : ox + dx + shape[1]]
    return Frame(ref.copy()), Frame(cur.copy())


class TestSsd:
    def test_identical_blocks(self):
        a = np.arange(16.0).reshape(4, 4)
        assert ssd(a, a) == 0.0

    def test_direct_sum(self):
        assert ssd(np.zeros((2, 2)), np.array([[1, 2], [3, 4]])) == 30.0

    def test_symmetry_and_nonnegativity(self):
        rng = np.random.default_rng(31)
        a, b = rng.random((8, 8)), rng.random((8, 8))
        assert ssd(a, b) == ssd(b, a) >= 0.0
        assert ssd(a, b) == pytest.approx(oracles.reference_ssd(a, b), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            ssd(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_no_overflow_at_large_blocks(self):
        a = np.zeros((128, 128))
        b = np.full((128, 128), 255.0)
        assert ssd(a, b) == 128 * 128 * 255**2


class TestBlockGrid:
    def test_full_cover_with_partial_edges(self):
        blocks = block_grid(1088, 1088, 128)
        assert len(blocks) == 9 * 9
        assert blocks[-1].width == blocks[-1].height == 1088 - 8 * 128
        covered = np.zeros((1088, 1088), dtype=int)
        for blk in blocks:
            covered[blk.rows, blk.cols] += 1
        assert (covered == 1).all()


class TestMaterialize:
    def test_zero_motion_is_colocated_block(self, cam):
        frame = smooth_noise_frame((128, 128), 32)
        grid = SubpelGrid(frame)
        block = Block(40, 56, 16, 16)
        for method in Method:
            for viewport in (
                (Viewport.FRONT_BACK,) if method is not Method.VA_PTMC else tuple(Viewport)
            ):
                cand, clean = materialize_candidate(grid, block, viewport, (0, 0), cam, method)
                assert clean
                assert np.array_equal(cand, frame.pixels[block.rows, block.cols].astype(float))

    def test_tmc_pure_translation_reaches_zero_cost(self, cam):
        ref, cur = shifted_pair((128, 128), (4, 2), 33)
        grid = SubpelGrid(ref)
        block = Block(48, 48, 16, 16)
        cand, _ = materialize_candidate(grid, block, Viewport.FRONT_BACK, (4, 2), cam, Method.TMC)
        assert ssd(cur.pixels[block.rows, block.cols], cand) == 0.0

    def test_geometry_candidate_matches_oracle_mapping(self, cam):
        frame = smooth_noise_frame((128, 128), 34)
        grid = SubpelGrid(frame)
        block = Block(32, 80, 16, 16)  # bottom half: bottom/top real plane
        mv = (5, -3)
        cand, clean = materialize_candidate(
            grid, block, Viewport.BOTTOM_TOP, mv, cam, Method.VA_PTMC
        )
        assert clean
        coords = block.pixel_coords().reshape(-1, 2)
        mapped = oracles.viewport_remap(
            coords, "bottom_top", mv, cam.focal_length, cam.principal_point
        )
        expected = np.array(
            [
                oracles.scalar_bicubic(
                    frame.pixels, oracles.quantize_eighth(x), oracles.quantize_eighth(y), 255
                )
                for x, y in mapped
            ]
        ).reshape(16, 16)
        np.testing.assert_allclose(cand, expected, atol=1e-9)

    def test_singular_block_flagged_not_raised(self):
        # integer-centered principal point: the pixel row through the center
        # lies exactly on the bottom/top guard locus
        cam = FisheyeCamera(32.0, (64.0, 64.0), 2 * np.pi, (128, 128))
        frame = smooth_noise_frame((128, 128), 35)
        grid = SubpelGrid(frame)
        block = Block(8, 63, 4, 2)
        coords = block.pixel_coords()
        assert np.any(np.abs(coords[..., 1] - cam.principal_point[1]) < 1e-9)
        cand, clean = materialize_candidate(
            grid, block, Viewport.BOTTOM_TOP, (2, 0), cam, Method.VA_PTMC
        )
        assert not clean
        assert cand.shape == (2, 4)  # samples still materialize via the fallback


class TestSearches:
    def test_diamond_descends_unimodal_surface(self):
        cost = lambda mv: abs(mv[0] - 6) + abs(mv[1])
        mv, value = diamond_search(cost, 96)
        assert mv == (6, 0) and value == 0

    def test_diamond_on_static_content(self):
        calls = []

        def cost(mv):
            calls.append(mv)
            return 0.0

        mv, value = diamond_search(cost, 96)
        assert mv == (0, 0) and value == 0.0
        assert len(calls) == 13  # one large diamond round plus the small diamond
        assert calls[0] == (0, 0)

    def test_exhaustive_enumerates_window(self):
        seen = []
        exhaustive_search(lambda mv: seen.append(mv) or 1.0, 3)
        assert len(seen) == 49 and seen[0] == (0, 0)
        assert set(seen) == {(dx, dy) for dx in range(-3, 4) for dy in range(-3, 4)}

    def test_diamond_never_beats_exhaustive(self):
        rng = np.random.default_rng(36)
        for _ in range(40):
            table = rng.random((13, 13))
            cost = lambda mv: table[mv[1] + 6, mv[0] + 6]
            _, diamond_cost = diamond_search(cost, 6)
            _, full_cost = exhaustive_search(cost, 6)
            assert diamond_cost >= full_cost

    def test_probes_clamped_to_range(self):
        seen = []
        diamond_search(lambda mv: seen.append(mv) or float(-mv[0]), 2)
        assert all(abs(dx) <= 2 and abs(dy) <= 2 for dx, dy in seen)
        assert len(seen) == len(set(seen))  # memoized: no vector twice


class TestEstimate:
    def test_static_pair_zero_vector_front_viewport(self, cam):
        frame = smooth_noise_frame((128, 128), 37)
        config = SearchConfig(32, 8, Strategy.DIAMOND, Method.VA_PTMC)
        field = estimate_motion_field(frame, frame, cam, config)
        assert (field.mvs == 0).all()
        assert (field.viewports == Viewport.FRONT_BACK.value).all()
        assert (field.costs == 0.0).all()

    def test_tmc_recovers_translation(self, cam):
        ref, cur = shifted_pair((128, 128), (4, 2), 38)
        config = SearchConfig(32, 8, Strategy.DIAMOND, Method.TMC)
        field = estimate_motion_field(cur, ref, cam, config)
        inner = field.mvs[1:3, 1:3]
        assert (inner == np.array([4, 2])).all()
        assert (field.costs[1:3, 1:3] == 0.0).all()

    def test_superset_dominance_exhaustive(self, cam):
        ref, cur = shifted_pair((128, 128), (2, 1), 39)
        grid = SubpelGrid(ref)
        for block in (Block(32, 32, 16, 16), Block(64, 80, 16, 16), Block(16, 96, 16, 16)):
            costs = {}
            for method in (Method.PTMC, Method.VA_PTMC):
                config = SearchConfig(16, 4, Strategy.EXHAUSTIVE, method)
                costs[method] = estimate_block(cur, grid, block, cam, config).cost
            assert costs[Method.VA_PTMC] <= costs[Method.PTMC]

    def test_va_restricted_to_front_equals_ptmc(self, cam):
        ref, cur = shifted_pair((128, 128), (3, -2), 40)
        grid = SubpelGrid(ref)
        block = Block(48, 32, 16, 16)
        ptmc = estimate_block(
            cur, grid, block, cam, SearchConfig(16, 6, Strategy.DIAMOND, Method.PTMC)
        )
        va = estimate_block(
            cur,
            grid,
            block,
            cam,
            SearchConfig(16, 6, Strategy.DIAMOND, Method.VA_PTMC),
            viewports=(Viewport.FRONT_BACK,),
        )
        assert ptmc.mv == va.mv and ptmc.cost == va.cost

    def test_stored_cost_consistency(self, cam):
        ref, cur = shifted_pair((128, 128), (-3, 2), 41)
        config = SearchConfig(32, 6, Strategy.DIAMOND, Method.VA_PTMC)
        field = estimate_motion_field(cur, ref, cam, config)
        grid = SubpelGrid(ref)
        for _, _, block, est in field.blocks():
            cand, clean = materialize_candidate(
                grid, block, est.viewport, est.mv, cam, Method.VA_PTMC
            )
            cost = ssd(cur.pixels[block.rows, block.cols], cand) if clean else INFINITE_COST
            assert cost == est.cost

    def test_determinism(self, cam):
        ref, cur = shifted_pair((128, 128), (1, 3), 42)
        config = SearchConfig(32, 6, Strategy.DIAMOND, Method.VA_PTMC)
        a = estimate_motion_field(cur, ref, cam, config)
        b = estimate_motion_field(cur, ref, cam, config)
        assert np.array_equal(a.mvs, b.mvs)
        assert np.array_equal(a.viewports, b.viewports)
        assert np.array_equal(a.costs, b.costs)


class TestCompensate:
    def test_zero_field_reproduces_reference_all_methods(self, cam):
        frame = smooth_noise_frame((128, 128), 43)
        for method in Method:
            config = SearchConfig(32, 8, Strategy.DIAMOND, method)
            field = MotionField.zero((frame.width, frame.height), config)
            out = compensate_frame(frame, field, cam)
            assert np.array_equal(out.pixels, frame.pixels)

    def test_zero_field_nonforward_viewports_also_identity(self, cam):
        frame = smooth_noise_frame((128, 128), 44)
        config = SearchConfig(32, 8, Strategy.DIAMOND, Method.VA_PTMC)
        field = MotionField.zero((frame.width, frame.height), config)
        field.viewports[:] = Viewport.LEFT_RIGHT.value
        out = compensate_frame(frame, field, cam)
        assert np.array_equal(out.pixels, frame.pixels)

    def test_field_from_identical_frames_compensates_exactly(self, cam):
        frame = smooth_noise_frame((128, 128), 45)
        config = SearchConfig(32, 8, Strategy.DIAMOND, Method.PTMC)
        field = estimate_motion_field(frame, frame, cam, config)
        out = compensate_frame(frame, field, cam)
        assert np.array_equal(out.pixels, frame.pixels)

    def test_compensation_not_worse_than_reference(self, cam):
        ref, cur = shifted_pair((128, 128), (3, 1), 46)
        config = SearchConfig(32, 8, Strategy.DIAMOND, Method.TMC)
        field = estimate_motion_field(cur, ref, cam, config)
        out = compensate_frame(ref, field, cam)
        err_out = np.sum((out.pixels.astype(float) - cur.pixels) ** 2)
        err_ref = np.sum((ref.pixels.astype(float) - cur.pixels) ** 2)
        assert err_out <= err_ref  # the zero vector was always a candidate
