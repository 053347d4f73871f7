"""On-disk formats for cameras, point clouds, depth maps, masks, and manifests.

These formats are the toolkit's external contract:

- Cameras: line-oriented text, one view per line,
  ``image_id w h fx fy cx cy qw qx qy qz tx ty tz``
  where (q, t) is the world-from-camera rotation quaternion (w,x,y,z)
  and t the camera center. Floats carry 17 significant digits, so a full
  round trip is lossless.
- Point clouds: binary little-endian PLY with float or double x,y,z;
  extra per-vertex properties are ignored on read and dropped on write.
- Depth: grayscale PFM, little-endian (negative scale), rows bottom-up
  per the PFM convention, invalid pixels stored as 0. Bit-exact float32.
- Masks: binary PGM (P5), 0 = invalid; any nonzero byte reads as valid.
- Scene manifests: JSON with a mandatory schema_version field; loading
  checks that every referenced file resolves before evaluation starts.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .depthrender import DepthMap, TriangleMesh
from .errors import FormatError, ParseError, TruncatedFileError, ValidationError
from .geometry import CameraModel, ViewPose

__all__ = [
    "read_cameras",
    "write_cameras",
    "read_pointcloud",
    "write_pointcloud",
    "read_depth",
    "write_depth",
    "read_mask",
    "write_mask",
    "read_mesh",
    "write_mesh",
    "ManifestView",
    "SceneManifest",
    "read_manifest",
    "write_manifest",
    "MANIFEST_SCHEMA_VERSION",
]

MANIFEST_SCHEMA_VERSION = 1
QUAT_NORM_TOL = 1e-6


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# cameras


def _quat_from_matrix(rotation: np.ndarray):
    q = Rotation.from_matrix(rotation).as_quat()  # scipy order (x,y,z,w)
    q = np.array([q[3], q[0], q[1], q[2]])
    nz = np.nonzero(q)[0]
    if nz.size and q[nz[0]] < 0:  # canonical sign
        q = -q
    return tuple(float(v) for v in q)


def _matrix_from_quat(qw, qx, qy, qz) -> np.ndarray:
    return Rotation.from_quat([qx, qy, qz, qw]).as_matrix()


def write_cameras(path, views) -> None:
    """Write (image_id, CameraModel, ViewPose) records, one line per view.

    When a pose was read from a camera file, its original quaternion is
    re-emitted verbatim so write -> read -> write is byte-identical.
    """
    lines = []
    for image_id, camera, pose in views:
        if not image_id or any(c.isspace() for c in str(image_id)):
            raise ValidationError(f"image id {image_id!r} must be non-empty without whitespace")
        q = pose._quat_wxyz if pose._quat_wxyz is not None else _quat_from_matrix(pose.rotation)
        fields = [str(image_id), str(int(camera.width)), str(int(camera.height)),
                  _fmt(camera.fx), _fmt(camera.fy), _fmt(camera.cx), _fmt(camera.cy),
                  *[_fmt(v) for v in q], *[_fmt(v) for v in pose.center]]
        lines.append(" ".join(fields))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines))
        if lines:
            f.write("\n")


def read_cameras(path):
    """Read a camera file back into (image_id, CameraModel, ViewPose) records."""
    records = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 14:
                raise ParseError(f"{path}: line {lineno}: expected 14 fields, got {len(tokens)}")
            image_id = tokens[0]
            try:
                w, h = int(tokens[1]), int(tokens[2])
                vals = [float(t) for t in tokens[3:]]
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
            fx, fy, cx, cy = vals[0:4]
            q = vals[4:8]
            t = vals[8:11]
            norm = math.sqrt(sum(v * v for v in q))
            if abs(norm - 1.0) > QUAT_NORM_TOL:
                raise ValidationError(
                    f"{path}: line {lineno}: quaternion norm {norm:.9f} deviates beyond "
                    f"{QUAT_NORM_TOL:g}"
                )
            qn = [v / norm for v in q]
            camera = CameraModel(width=w, height=h, fx=fx, fy=fy, cx=cx, cy=cy)
            pose = ViewPose(_matrix_from_quat(*qn), np.array(t), _quat_wxyz=tuple(q))
            records.append((image_id, camera, pose))
    return records


# ---------------------------------------------------------------------------
# point clouds and meshes (binary little-endian PLY)

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _parse_ply_header(f, path):
    if f.readline().strip() != b"ply":
        raise FormatError(f"{path}: not a PLY file")
    fmt = None
    elements = []  # (name, count, [(prop_name, np_type)])
    while True:
        raw = f.readline()
        if not raw:
            raise FormatError(f"{path}: unterminated PLY header")
        line = raw.decode("ascii", errors="replace").strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        if line.startswith("format"):
            parts = line.split()
            if len(parts) < 2 or parts[1] != "binary_little_endian":
                raise FormatError(
                    f"{path}: unsupported PLY format {parts[1] if len(parts) > 1 else '?'}; "
                    "only binary_little_endian is supported"
                )
            fmt = parts[1]
        elif line.startswith("element"):
            _, name, count = line.split()
            elements.append((name, int(count), []))
        elif line.startswith("property"):
            if not elements:
                raise FormatError(f"{path}: property before any element")
            parts = line.split()
            if parts[1] == "list":
                elements[-1][2].append((parts[-1], "list", parts[2], parts[3]))
            else:
                if parts[1] not in _PLY_TYPES:
                    raise FormatError(f"{path}: unknown PLY type {parts[1]!r}")
                elements[-1][2].append((parts[-1], "<" + _PLY_TYPES[parts[1]]))
        elif line == "end_header":
            break
        else:
            raise FormatError(f"{path}: unrecognized header line {line!r}")
    if fmt is None:
        raise FormatError(f"{path}: PLY header has no format line")
    return elements


def _read_fixed_element(f, path, name, count, props):
    for p in props:
        if p[1] == "list":
            raise FormatError(
                f"{path}: element {name!r} has a list property; cannot read as fixed stride"
            )
    dt = np.dtype([(p[0], p[1]) for p in props])
    payload = f.read(count * dt.itemsize)
    if len(payload) < count * dt.itemsize:
        raise TruncatedFileError(
            f"{path}: element {name!r} promises {count} entries but the payload is short"
        )
    return np.frombuffer(payload, dtype=dt, count=count)


def read_pointcloud(path) -> np.ndarray:
    """Read vertex x,y,z from a binary little-endian PLY into an (N,3) float64 array."""
    with open(path, "rb") as f:
        elements = _parse_ply_header(f, path)
        for name, count, props in elements:
            if name == "vertex":
                names = [p[0] for p in props]
                if not all(k in names for k in ("x", "y", "z")):
                    raise FormatError(f"{path}: vertex element lacks x, y, z properties")
                arr = _read_fixed_element(f, path, name, count, props)
                return np.column_stack(
                    [arr["x"].astype(np.float64),
                     arr["y"].astype(np.float64),
                     arr["z"].astype(np.float64)]
                )
            _read_fixed_element(f, path, name, count, props)  # skip
    raise FormatError(f"{path}: PLY file has no vertex element")


def write_pointcloud(path, points) -> None:
    """Write an (N,3) cloud as binary little-endian PLY with double x,y,z."""
    pts = np.ascontiguousarray(np.asarray(points, dtype="<f8"))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError(f"points must have shape (N,3), got {pts.shape}")
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {pts.shape[0]}\n"
        "property double x\nproperty double y\nproperty double z\n"
        "end_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(pts.tobytes())


def read_mesh(path) -> TriangleMesh:
    """Read a binary little-endian PLY with vertex and triangular face elements."""
    with open(path, "rb") as f:
        elements = _parse_ply_header(f, path)
        vertices = None
        faces = None
        for name, count, props in elements:
            if name == "vertex":
                arr = _read_fixed_element(f, path, name, count, props)
                vertices = np.column_stack(
                    [arr["x"].astype(np.float64),
                     arr["y"].astype(np.float64),
                     arr["z"].astype(np.float64)]
                )
            elif name == "face" and len(props) == 1 and props[0][1] == "list":
                _, _, count_t, index_t = props[0]
                cdt = np.dtype("<" + _PLY_TYPES[count_t])
                idt = np.dtype("<" + _PLY_TYPES[index_t])
                rows = []
                for _ in range(count):
                    nb = f.read(cdt.itemsize)
                    if len(nb) < cdt.itemsize:
                        raise TruncatedFileError(f"{path}: face element is short")
                    n = int(np.frombuffer(nb, dtype=cdt, count=1)[0])
                    if n != 3:
                        raise FormatError(f"{path}: only triangular faces are supported, got {n}")
                    ib = f.read(3 * idt.itemsize)
                    if len(ib) < 3 * idt.itemsize:
                        raise TruncatedFileError(f"{path}: face element is short")
                    rows.append(np.frombuffer(ib, dtype=idt, count=3))
                faces = np.array(rows, dtype=np.int64) if rows else np.zeros((0, 3), np.int64)
            else:
                _read_fixed_element(f, path, name, count, props)
    if vertices is None or faces is None:
        raise FormatError(f"{path}: mesh PLY needs vertex and face elements")
    return TriangleMesh(vertices, faces)


def write_mesh(path, mesh: TriangleMesh) -> None:
    """Write a mesh as binary little-endian PLY (double vertices, int32 faces)."""
    verts = np.ascontiguousarray(mesh.vertices.astype("<f8"))
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {verts.shape[0]}\n"
        "property double x\nproperty double y\nproperty double z\n"
        f"element face {mesh.triangles.shape[0]}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(verts.tobytes())
        for tri in mesh.triangles:
            f.write(np.uint8(3).tobytes())
            f.write(tri.astype("<i4").tobytes())


# ---------------------------------------------------------------------------
# depth maps (PFM) and masks (PGM)


def write_depth(path, depth) -> None:
    """Write a depth map as little-endian grayscale PFM (rows bottom-up)."""
    values = depth.values if isinstance(depth, DepthMap) else np.asarray(depth, dtype=float)
    if values.ndim != 2:
        raise ValidationError(f"depth must be 2-D, got shape {values.shape}")
    data = values.astype("<f4")[::-1, :]  # PFM stores the bottom row first
    h, w = values.shape
    with open(path, "wb") as f:
        f.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        f.write(np.ascontiguousarray(data).tobytes())


def read_depth(path, camera_id: str = None) -> DepthMap:
    """Read a little-endian grayscale PFM; invalid pixels are the zeros."""
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic == b"PF":
            raise FormatError(f"{path}: color PFM is not supported")
        if magic != b"Pf":
            raise FormatError(f"{path}: not a PFM file (magic {magic!r})")
        try:
            w, h = (int(t) for t in f.readline().split())
            scale = float(f.readline())
        except ValueError:
            raise FormatError(f"{path}: malformed PFM header") from None
        if scale > 0:
            raise FormatError(f"{path}: big-endian PFM is not supported")
        if scale == 0:
            raise FormatError(f"{path}: PFM scale must be nonzero")
        payload = f.read(w * h * 4)
        if len(payload) < w * h * 4:
            raise TruncatedFileError(f"{path}: PFM payload is short")
        data = np.frombuffer(payload, dtype="<f4").reshape(h, w)[::-1, :]
    return DepthMap(data.astype(np.float64), camera_id=camera_id)


def write_mask(path, mask) -> None:
    """Write a boolean mask as binary PGM (P5): 255 = valid, 0 = invalid."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValidationError(f"mask must be 2-D, got shape {m.shape}")
    data = np.where(m.astype(bool), 255, 0).astype(np.uint8)
    h, w = m.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(data).tobytes())


def _read_pgm_token(f, path):
    # skip whitespace and '#' comment lines between header tokens
    token = b""
    while True:
        c = f.read(1)
        if not c:
            raise FormatError(f"{path}: truncated PGM header")
        if c == b"#":
            while c not in (b"\n", b""):
                c = f.read(1)
            continue
        if c.isspace():
            if token:
                return token
            continue
        token += c


def read_mask(path) -> np.ndarray:
    """Read a binary PGM (P5) into a boolean mask; any nonzero byte is valid."""
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic != b"P5":
            raise FormatError(f"{path}: not a binary PGM (magic {magic!r})")
        try:
            w = int(_read_pgm_token(f, path))
            h = int(_read_pgm_token(f, path))
            maxval = int(_read_pgm_token(f, path))
        except ValueError:
            raise FormatError(f"{path}: malformed PGM header") from None
        if not 0 < maxval < 256:
            raise FormatError(f"{path}: only single-byte PGM is supported (maxval {maxval})")
        payload = f.read(w * h)
        if len(payload) < w * h:
            raise TruncatedFileError(f"{path}: PGM payload is short")
        data = np.frombuffer(payload, dtype=np.uint8).reshape(h, w)
    return data != 0


# ---------------------------------------------------------------------------
# scene manifests


@dataclass(frozen=True)
class ManifestView:
    image_id: str
    camera_file: str
    depth_file: str
    mask_file: str
    split: str = "test"          # train | test
    acquisition: str = "nadir"   # nadir | oblique | manual

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValidationError(f"split must be train or test, got {self.split!r}")
        if self.acquisition not in ("nadir", "oblique", "manual"):
            raise ValidationError(
                f"acquisition must be nadir, oblique, or manual, got {self.acquisition!r}"
            )


@dataclass(frozen=True, eq=False)
class SceneManifest:
    scene_id: str
    views: tuple
    gt_cloud: str = None
    metadata: dict = field(default_factory=dict)
    base_dir: str = "."

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        ids = [v.image_id for v in self.views]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate image ids in manifest {self.scene_id!r}")

    def resolve(self, ref: str) -> str:
        return os.path.normpath(os.path.join(self.base_dir, ref))


def write_manifest(path, manifest: SceneManifest) -> None:
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "scene_id": manifest.scene_id,
        "views": [
            {
                "image_id": v.image_id,
                "camera_file": v.camera_file,
                "depth_file": v.depth_file,
                "mask_file": v.mask_file,
                "split": v.split,
                "acquisition": v.acquisition,
            }
            for v in manifest.views
        ],
        "gt_cloud": manifest.gt_cloud,
        "metadata": manifest.metadata,
    }
    with open(path, "w", newline="\n") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def read_manifest(path, check_refs: bool = True) -> SceneManifest:
    """Load a scene manifest; with check_refs, fail fast on any missing file."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from None
    version = doc.get("schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        raise FormatError(
            f"{path}: schema_version {version!r} is missing or unsupported "
            f"(expected {MANIFEST_SCHEMA_VERSION})"
        )
    views = [
        ManifestView(
            image_id=v["image_id"],
            camera_file=v["camera_file"],
            depth_file=v["depth_file"],
            mask_file=v["mask_file"],
            split=v.get("split", "test"),
            acquisition=v.get("acquisition", "nadir"),
        )
        for v in doc.get("views", [])
    ]
    manifest = SceneManifest(
        scene_id=doc.get("scene_id", ""),
        views=tuple(views),
        gt_cloud=doc.get("gt_cloud"),
        metadata=doc.get("metadata", {}),
        base_dir=os.path.dirname(os.path.abspath(path)),
    )
    if check_refs:
        refs = [manifest.gt_cloud] if manifest.gt_cloud else []
        for v in manifest.views:
            refs.extend([v.camera_file, v.depth_file, v.mask_file])
        for ref in refs:
            resolved = manifest.resolve(ref)
            if not os.path.exists(resolved):
                raise FileNotFoundError(f"{path}: referenced file is missing: {resolved}")
    return manifest
