import struct

import numpy as np
import pytest

import uavgeom as ug
from synth import random_rotation


def random_camera(rng):
    w = int(rng.integers(2, 2000))
    h = int(rng.integers(2, 2000))
    return ug.CameraModel(w, h, float(rng.uniform(0.5, 5000)), float(rng.uniform(0.5, 5000)),
                          float(rng.normal(scale=1000)), float(rng.normal(scale=1000)))


def random_pose(rng):
    return ug.ViewPose(random_rotation(rng), rng.normal(scale=100, size=3))


class TestCamerasFormat:
    def test_identity_pose_writes_unit_quaternion(self, tmp_path):
        path = tmp_path / "cams.txt"
        cam = ug.CameraModel(100, 80, 50.0, 50.0, 49.5, 39.5)
        ug.write_cameras(path, [("a", cam, ug.ViewPose.identity())])
        tokens = path.read_text().split()
        assert tokens[7:11] == ["1", "0", "0", "0"]
        assert tokens[11:14] == ["0", "0", "0"]

    def test_write_read_write_byte_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        views = [(f"img{i}", random_camera(rng), random_pose(rng)) for i in range(20)]
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        ug.write_cameras(p1, views)
        ug.write_cameras(p2, ug.read_cameras(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_read_recovers_values_exactly(self, tmp_path):
        rng = np.random.default_rng(1)
        views = [(f"v{i}", random_camera(rng), random_pose(rng)) for i in range(5)]
        path = tmp_path / "cams.txt"
        ug.write_cameras(path, views)
        back = ug.read_cameras(path)
        for (i1, c1, p1), (i2, c2, p2) in zip(views, back):
            assert i1 == i2
            assert c1 == c2
            np.testing.assert_array_equal(p1.center, p2.center)
            np.testing.assert_allclose(p1.rotation, p2.rotation, atol=1e-15)

    def test_wrong_token_count_names_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        good = "a 10 10 5 5 5 5 1 0 0 0 0 0 0"
        path.write_text(good + "\n" + good + " extra_token 0\n")
        with pytest.raises(ug.ParseError, match="line 2"):
            ug.read_cameras(path)

    def test_non_numeric_token(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("a 10 10 xx 5 5 5 1 0 0 0 0 0 0\n")
        with pytest.raises(ug.ParseError, match="line 1"):
            ug.read_cameras(path)

    def test_denormalized_quaternion_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("a 10 10 5 5 5 5 1.1 0 0 0 0 0 0\n")
        with pytest.raises(ug.ValidationError):
            ug.read_cameras(path)

    def test_whitespace_image_id_rejected_on_write(self, tmp_path):
        cam = ug.CameraModel(4, 4, 2.0, 2.0, 1.5, 1.5)
        with pytest.raises(ug.ValidationError):
            ug.write_cameras(tmp_path / "x.txt", [("a b", cam, ug.ViewPose.identity())])


class TestPlyFormat:
    def test_three_point_round_trip(self, tmp_path):
        pts = np.array([[1.5, -2.25, 3.0], [0.0, 0.1, -0.2], [9.0, 8.0, 7.0]])
        path = tmp_path / "c.ply"
        ug.write_pointcloud(path, pts)
        np.testing.assert_array_equal(ug.read_pointcloud(path), pts)

    def test_write_read_write_byte_identical(self, tmp_path):
        rng = np.random.default_rng(2)
        pts = rng.normal(scale=100, size=(500, 3))
        p1, p2 = tmp_path / "a.ply", tmp_path / "b.ply"
        ug.write_pointcloud(p1, pts)
        ug.write_pointcloud(p2, ug.read_pointcloud(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_float32_payload_reads_exactly(self, tmp_path):
        pts32 = np.random.default_rng(3).normal(size=(10, 3)).astype(np.float32)
        path = tmp_path / "f32.ply"
        header = (b"ply\nformat binary_little_endian 1.0\n"
                  b"element vertex 10\n"
                  b"property float x\nproperty float y\nproperty float z\n"
                  b"end_header\n")
        path.write_bytes(header + pts32.astype("<f4").tobytes())
        out = ug.read_pointcloud(path)
        assert out.dtype == np.float64
        np.testing.assert_array_equal(out, pts32.astype(np.float64))

    def test_extra_properties_ignored(self, tmp_path):
        path = tmp_path / "extra.ply"
        header = (b"ply\nformat binary_little_endian 1.0\n"
                  b"element vertex 2\n"
                  b"property float x\nproperty float y\nproperty float z\n"
                  b"property uchar red\nproperty uchar green\nproperty uchar blue\n"
                  b"end_header\n")
        rec = struct.pack("<fffBBB", 1.0, 2.0, 3.0, 255, 0, 0)
        rec += struct.pack("<fffBBB", 4.0, 5.0, 6.0, 0, 255, 0)
        path.write_bytes(header + rec)
        np.testing.assert_array_equal(ug.read_pointcloud(path),
                                      [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])

    def test_ascii_rejected(self, tmp_path):
        path = tmp_path / "ascii.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 1\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "end_header\n1 2 3\n")
        with pytest.raises(ug.FormatError):
            ug.read_pointcloud(path)

    def test_big_endian_rejected(self, tmp_path):
        path = tmp_path / "be.ply"
        path.write_text("ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "end_header\n")
        with pytest.raises(ug.FormatError):
            ug.read_pointcloud(path)

    def test_missing_xyz_rejected(self, tmp_path):
        path = tmp_path / "noz.ply"
        path.write_bytes(b"ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
                         b"property float x\nproperty float y\n"
                         b"end_header\n" + struct.pack("<ff", 1.0, 2.0))
        with pytest.raises(ug.FormatError):
            ug.read_pointcloud(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.ply"
        ug.write_pointcloud(path, np.zeros((10, 3)))
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ug.TruncatedFileError):
            ug.read_pointcloud(path)


class TestMeshFormat:
    def test_round_trip(self, tmp_path):
        verts = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0], [1.0, 1, 1]])
        tris = np.array([[0, 1, 2], [1, 3, 2]])
        path = tmp_path / "m.ply"
        ug.write_mesh(path, ug.TriangleMesh(verts, tris))
        mesh = ug.read_mesh(path)
        np.testing.assert_array_equal(mesh.vertices, verts)
        np.testing.assert_array_equal(mesh.triangles, tris)

    def test_quad_faces_rejected(self, tmp_path):
        path = tmp_path / "quad.ply"
        header = (b"ply\nformat binary_little_endian 1.0\n"
                  b"element vertex 4\n"
                  b"property double x\nproperty double y\nproperty double z\n"
                  b"element face 1\n"
                  b"property list uchar int vertex_indices\n"
                  b"end_header\n")
        body = np.zeros((4, 3)).tobytes() + struct.pack("<B4i", 4, 0, 1, 2, 3)
        path.write_bytes(header + body)
        with pytest.raises(ug.FormatError):
            ug.read_mesh(path)


class TestPfmFormat:
    def test_constant_map_bit_exact(self, tmp_path):
        d = ug.DepthMap(np.full((5, 7), 10.0))
        p1, p2 = tmp_path / "a.pfm", tmp_path / "b.pfm"
        ug.write_depth(p1, d)
        ug.write_depth(p2, ug.read_depth(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_zero_pixels_become_invalid_mask(self, tmp_path):
        values = np.array([[0.0, 5.0], [3.0, 0.0]])
        path = tmp_path / "d.pfm"
        ug.write_depth(path, values)
        back = ug.read_depth(path)
        np.testing.assert_array_equal(back.valid_mask(), [[False, True], [True, False]])

    def test_row_order_is_bottom_up(self, tmp_path):
        values = np.array([[1.0, 1.0], [2.0, 2.0]])  # row 0 on top in memory
        path = tmp_path / "d.pfm"
        ug.write_depth(path, values)
        raw = path.read_bytes()
        payload = raw.split(b"-1.0\n", 1)[1]
        first_row = np.frombuffer(payload[:8], dtype="<f4")
        np.testing.assert_array_equal(first_row, [2.0, 2.0])  # bottom row first

    def test_corrupt_magic(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"Px\n2 2\n-1.0\n" + b"\x00" * 16)
        with pytest.raises(ug.FormatError):
            ug.read_depth(path)

    def test_color_pfm_rejected(self, tmp_path):
        path = tmp_path / "color.pfm"
        path.write_bytes(b"PF\n2 2\n-1.0\n" + b"\x00" * 48)
        with pytest.raises(ug.FormatError):
            ug.read_depth(path)

    def test_big_endian_rejected(self, tmp_path):
        path = tmp_path / "be.pfm"
        path.write_bytes(b"Pf\n2 2\n1.0\n" + b"\x00" * 16)
        with pytest.raises(ug.FormatError):
            ug.read_depth(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.pfm"
        path.write_bytes(b"Pf\n4 4\n-1.0\n" + b"\x00" * 10)
        with pytest.raises(ug.TruncatedFileError):
            ug.read_depth(path)


class TestPgmFormat:
    def test_all_valid(self, tmp_path):
        path = tmp_path / "m.pgm"
        ug.write_mask(path, np.ones((4, 6), bool))
        assert ug.read_mask(path).all()

    def test_checkerboard_round_trip(self, tmp_path):
        mask = np.indices((8, 9)).sum(axis=0) % 2 == 0
        path = tmp_path / "m.pgm"
        ug.write_mask(path, mask)
        np.testing.assert_array_equal(ug.read_mask(path), mask)

    def test_write_read_write_byte_identical(self, tmp_path):
        mask = np.random.default_rng(5).random((16, 11)) > 0.5
        p1, p2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
        ug.write_mask(p1, mask)
        ug.write_mask(p2, ug.read_mask(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_value_128_reads_valid(self, tmp_path):
        path = tmp_path / "gray.pgm"
        path.write_bytes(b"P5\n2 1\n255\n" + bytes([128, 0]))
        np.testing.assert_array_equal(ug.read_mask(path), [[True, False]])

    def test_comment_in_header(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([1, 2]))
        assert ug.read_mask(path).all()

    def test_non_p5_rejected(self, tmp_path):
        path = tmp_path / "p2.pgm"
        path.write_bytes(b"P2\n2 1\n255\n1 2\n")
        with pytest.raises(ug.FormatError):
            ug.read_mask(path)


class TestManifest:
    def make_scene_files(self, tmp_path):
        cam = ug.CameraModel(4, 3, 2.0, 2.0, 1.5, 1.0)
        ug.write_cameras(tmp_path / "cams.txt",
                         [("v0", cam, ug.ViewPose.identity()),
                          ("v1", cam, ug.ViewPose.identity())])
        for i in range(2):
            ug.write_depth(tmp_path / f"v{i}.pfm", np.full((3, 4), 5.0))
            ug.write_mask(tmp_path / f"v{i}.pgm", np.ones((3, 4), bool))
        ug.write_pointcloud(tmp_path / "gt.ply", np.zeros((4, 3)))
        views = [
            ug.ManifestView(f"v{i}", "cams.txt", f"v{i}.pfm", f"v{i}.pgm",
                            split="test", acquisition="nadir")
            for i in range(2)
        ]
        return ug.SceneManifest("scene-a", views, gt_cloud="gt.ply",
                                metadata={"voxel_size": 0.25, "hfov": 60.0},
                                base_dir=str(tmp_path))

    def test_round_trip(self, tmp_path):
        manifest = self.make_scene_files(tmp_path)
        path = tmp_path / "scene.json"
        ug.write_manifest(path, manifest)
        back = ug.read_manifest(path)
        assert back.scene_id == "scene-a"
        assert len(back.views) == 2
        assert back.metadata["voxel_size"] == 0.25

    def test_missing_reference_fails_fast(self, tmp_path):
        manifest = self.make_scene_files(tmp_path)
        path = tmp_path / "scene.json"
        ug.write_manifest(path, manifest)
        (tmp_path / "v1.pfm").unlink()
        with pytest.raises(FileNotFoundError, match="v1.pfm"):
            ug.read_manifest(path)

    def test_schema_version_mandatory(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text('{"scene_id": "x", "views": []}')
        with pytest.raises(ug.FormatError, match="schema_version"):
            ug.read_manifest(path)

    def test_duplicate_ids_rejected(self):
        v = ug.ManifestView("a", "c.txt", "d.pfm", "m.pgm")
        with pytest.raises(ug.ValidationError):
            ug.SceneManifest("s", (v, v))

    def test_invalid_tags_rejected(self):
        with pytest.raises(ug.ValidationError):
            ug.ManifestView("a", "c", "d", "m", split="validation")
        with pytest.raises(ug.ValidationError):
            ug.ManifestView("a", "c", "d", "m", acquisition="orbit")
