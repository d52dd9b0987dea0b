import numpy as np
import pytest

from trackstab import (
    CLAMP,
    BoundaryPolicy,
    DimensionMismatchError,
    DisplacementField,
    Frame,
    FrameSequence,
    InvalidParameterError,
    NonFiniteFieldError,
    SchemaError,
    central_crop,
    load_frame,
    load_sequence,
    resize_to,
    sample_at,
    save_frame,
    save_sequence,
    warp,
)
from trackstab.imgcore import export_bytes

import oracles


def random_frame(rng, h=16, w=16):
    return Frame(rng.uniform(0, 255, size=(h, w)))


def smooth_field(rng, h, w, scale=3.0):
    ident = DisplacementField.identity(w, h)
    dx = scale * np.sin(2 * np.pi * np.arange(w) / w + rng.uniform(0, 6))
    dy = scale * np.cos(2 * np.pi * np.arange(h) / h + rng.uniform(0, 6))
    return DisplacementField(ident.map_x + dx[None, :], ident.map_y + dy[:, None])


class TestFrameTypes:
    def test_frame_validation(self):
        with pytest.raises(DimensionMismatchError):
            Frame(np.zeros((3, 3, 3)))
        with pytest.raises(InvalidParameterError):
            Frame(np.full((4, 4), np.nan))
        with pytest.raises(InvalidParameterError):
            Frame(np.full((4, 4), -1.0))
        with pytest.raises(InvalidParameterError):
            Frame(np.full((4, 4), 256.0))

    def test_frame_is_readonly_float64(self):
        f = Frame(np.zeros((4, 4), dtype=np.uint8))
        assert f.pixels.dtype == np.float64
        with pytest.raises(ValueError):
            f.pixels[0, 0] = 1.0

    def test_sequence_requires_uniform_shape(self):
        with pytest.raises(DimensionMismatchError):
            FrameSequence((Frame(np.zeros((4, 4))), Frame(np.zeros((5, 4)))))
        with pytest.raises(InvalidParameterError):
            FrameSequence(())

    def test_field_shape_validation(self):
        with pytest.raises(DimensionMismatchError):
            DisplacementField(np.zeros((4, 4)), np.zeros((4, 5)))

    def test_identity_field_values(self):
        f = DisplacementField.identity(3, 2)
        assert np.array_equal(f.map_x, [[0, 1, 2], [0, 1, 2]])
        assert np.array_equal(f.map_y, [[0, 0, 0], [1, 1, 1]])

    def test_boundary_policy_parse(self):
        assert BoundaryPolicy.parse("clamp").mode == "clamp"
        bp = BoundaryPolicy.parse("constant:12.5")
        assert bp.mode == "constant" and bp.value == 12.5
        assert BoundaryPolicy.parse("constant").value == 0.0
        with pytest.raises(InvalidParameterError):
            BoundaryPolicy.parse("mirror")


class TestWarp:
    def test_identity_is_bit_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            f = random_frame(rng, 20, 17)
            out = warp(f, DisplacementField.identity(17, 20))
            assert np.array_equal(out.pixels, f.pixels)

    def test_integer_shift_on_ramp(self):
        # ramp I(r, c) = 10 c; source coordinate x + 2 pulls content left,
        # so out(r, c) = 10 (c + 2) until the clamp at the right edge
        ramp = Frame(np.tile(10.0 * np.arange(8), (8, 1)))
        ident = DisplacementField.identity(8, 8)
        field = DisplacementField(ident.map_x + 2.0, ident.map_y)
        out = warp(ramp, field)
        for c in range(8):
            expected = 10.0 * min(c + 2, 7)
            assert out.pixels[3, c] == expected

    @pytest.mark.parametrize("interp", ["bilinear", "nearest"])
    @pytest.mark.parametrize("boundary", [CLAMP, BoundaryPolicy("constant", 12.5)])
    def test_matches_per_pixel_oracle(self, interp, boundary):
        rng = np.random.default_rng(7)
        for trial in range(3):
            f = random_frame(rng, 10, 12)
            ident = DisplacementField.identity(12, 10)
            mx = ident.map_x + rng.uniform(-4, 4, size=(10, 12))
            my = ident.map_y + rng.uniform(-4, 4, size=(10, 12))
            field = DisplacementField(mx, my)
            got = warp(f, field, interp, boundary).pixels
            want = oracles.warp_loops(
                f.pixels, mx, my, interp, boundary.mode, boundary.value
            )
            assert np.allclose(got, want, atol=1e-12, rtol=0)

    def test_nearest_rounds_half_up(self):
        f = Frame(np.arange(16, dtype=np.float64).reshape(4, 4))
        vals = sample_at(f.pixels, np.array([1.5, 2.49]), np.array([0.0, 0.0]),
                         "nearest")
        assert vals[0] == 2.0 and vals[1] == 2.0
        vals = sample_at(f.pixels, np.array([-0.5]), np.array([2.5]), "nearest")
        assert vals[0] == f.pixels[3, 0]

    def test_clamp_replicates_edges(self):
        f = Frame(np.arange(16, dtype=np.float64).reshape(4, 4))
        vals = sample_at(f.pixels, np.array([-10.0, 30.0]), np.array([1.0, 2.0]))
        assert vals[0] == f.pixels[1, 0]
        assert vals[1] == f.pixels[2, 3]

    def test_constant_boundary_blends(self):
        f = Frame(np.full((4, 4), 100.0))
        b = BoundaryPolicy("constant", 0.0)
        vals = sample_at(f.pixels, np.array([-0.5, -10.0]), np.array([1.0, 1.0]),
                         "bilinear", b)
        assert vals[0] == 50.0  # half inside, half fill
        assert vals[1] == 0.0

    def test_nan_field_raises(self):
        f = Frame(np.zeros((4, 4)))
        mx = np.zeros((4, 4))
        mx[1, 2] = np.nan
        field = DisplacementField(mx, np.zeros((4, 4)))
        with pytest.raises(NonFiniteFieldError):
            warp(f, field)

    def test_shape_mismatch_raises(self):
        with pytest.raises(DimensionMismatchError):
            warp(Frame(np.zeros((4, 4))), DisplacementField.identity(5, 4))


class TestResize:
    def test_same_size_is_bit_exact(self):
        rng = np.random.default_rng(3)
        f = random_frame(rng, 13, 9)
        out = resize_to(f, 9, 13)
        assert np.array_equal(out.pixels, f.pixels)

    def test_constant_stays_constant(self):
        f = Frame(np.full((8, 8), 42.0))
        out = resize_to(f, 16, 16)
        assert np.allclose(out.pixels, 42.0, atol=1e-12)

    def test_linear_ramp_center_aligned(self):
        # doubling a ramp: output x' samples source (x' + 0.5) / 2 - 0.5
        f = Frame(np.tile(np.arange(8, dtype=np.float64), (8, 1)))
        out = resize_to(f, 16, 8)
        for c in range(2, 14):
            src = (c + 0.5) * 0.5 - 0.5
            assert out.pixels[4, c] == pytest.approx(src, abs=1e-12)

    def test_bad_dims(self):
        f = Frame(np.zeros((4, 4)))
        with pytest.raises(InvalidParameterError):
            resize_to(f, 0, 4)


class TestExportAndCrop:
    def test_rounding_half_away_from_zero(self):
        vals = np.array([[0.4, 0.5, 1.5, 2.49], [254.5, 255.0, 300.0, -3.0]])
        out = export_bytes(vals)
        assert out.tolist() == [[0, 1, 2, 2], [255, 255, 255, 0]]

    def test_central_crop(self):
        f = Frame(np.arange(100, dtype=np.float64).reshape(10, 10))
        c = central_crop(f, 0.8)
        assert c.shape == (8, 8)
        assert c.pixels[0, 0] == f.pixels[1, 1]
        with pytest.raises(InvalidParameterError):
            central_crop(f, 0.0)


class TestIO:
    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        f = Frame(rng.integers(0, 256, size=(12, 9)).astype(np.float64))
        save_frame(f, tmp_path / "a.png")
        back = load_frame(tmp_path / "a.png")
        assert np.array_equal(back.pixels, f.pixels)

    def test_pgm_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        f = Frame(rng.integers(0, 256, size=(7, 7)).astype(np.float64))
        save_frame(f, tmp_path / "a.pgm")
        back = load_frame(tmp_path / "a.pgm")
        assert np.array_equal(back.pixels, f.pixels)

    def test_sequence_round_trip_and_naming(self, tmp_path):
        rng = np.random.default_rng(8)
        seq = FrameSequence(
            tuple(Frame(rng.integers(0, 256, (6, 6)).astype(float), i) for i in range(3))
        )
        paths = save_sequence(seq, tmp_path)
        assert [p.name for p in paths] == [
            "frame_000000.png", "frame_000001.png", "frame_000002.png"
        ]
        back = load_sequence(tmp_path)
        assert back.num_frames == 3
        for a, b in zip(back, seq):
            assert np.array_equal(a.pixels, b.pixels)

    def test_missing_and_gapped_frames(self, tmp_path):
        with pytest.raises(SchemaError):
            load_sequence(tmp_path)
        save_frame(Frame(np.zeros((4, 4))), tmp_path / "frame_000000.png")
        save_frame(Frame(np.zeros((4, 4))), tmp_path / "frame_000002.png")
        with pytest.raises(SchemaError, match="consecutively"):
            load_sequence(tmp_path)

    def test_mixed_sizes_rejected(self, tmp_path):
        save_frame(Frame(np.zeros((4, 4))), tmp_path / "frame_000000.png")
        save_frame(Frame(np.zeros((5, 4))), tmp_path / "frame_000001.png")
        with pytest.raises(DimensionMismatchError):
            load_sequence(tmp_path)

    def test_save_is_deterministic(self, tmp_path):
        f = Frame(np.arange(64, dtype=np.float64).reshape(8, 8))
        save_frame(f, tmp_path / "x.png")
        save_frame(f, tmp_path / "y.png")
        assert (tmp_path / "x.png").read_bytes() == (tmp_path / "y.png").read_bytes()
