"""Batch orchestration: view-set sampling, aggregation, and report emission.

Evaluation runs sample multi-view sets of each requested size from a
scene manifest, score every set under the shared-alignment protocol,
average within each view count, and then average the per-count means
into the final score. Tables serialize to CSV with a fixed column order
and full float precision so re-emission is byte-identical.
"""

import concurrent.futures
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dataio import SceneManifest, read_cameras, read_depth, read_mask
from .depthrender import unproject_map
from .errors import CoverageError, UndefinedBaselineError, ValidationError
from .geometry import CameraModel, ViewPose
from .metrics import DEFAULT_VOXEL_SIZE, SceneSample, ViewSample, evaluate_shared

__all__ = [
    "AggregationSpec",
    "ViewPrediction",
    "BenchmarkRow",
    "BenchmarkTable",
    "run_eval",
    "aggregate_rows",
    "relative_reduction",
    "oblique_nadir_gap",
    "emit_report",
]

CSV_COLUMNS = [
    "model", "input_mode", "dataset", "view_tag",
    "absrel", "ray_error", "chamfer", "ate_shared",
    "ate_independent", "ate_gap", "rotation_mae",
]
METRIC_COLUMNS = CSV_COLUMNS[4:]


@dataclass(frozen=True)
class AggregationSpec:
    """How to sample and aggregate multi-view sets."""

    samples_per_count: int
    view_counts: tuple = (8, 16, 24, 32)
    seed: int = 0
    sampling: str = "window"  # "window": contiguous runs; "random": uniform subsets

    def __post_init__(self):
        object.__setattr__(self, "view_counts", tuple(int(c) for c in self.view_counts))
        if not self.view_counts:
            raise ValidationError("view_counts must be non-empty")
        if any(c < 2 for c in self.view_counts):
            raise ValidationError("every view count must be >= 2")
        if self.samples_per_count < 1:
            raise ValidationError("samples_per_count must be >= 1")
        if self.sampling not in ("window", "random"):
            raise ValidationError(f"sampling must be 'window' or 'random', got {self.sampling!r}")


@dataclass(frozen=True, eq=False)
class ViewPrediction:
    """Per-view model outputs; the point map is derived from depth when absent."""

    pose: ViewPose
    depth: np.ndarray
    camera: CameraModel = None
    points: np.ndarray = None


@dataclass(frozen=True)
class BenchmarkRow:
    model: str
    input_mode: str
    dataset: str
    view_tag: str
    absrel: float
    ray_error: float
    chamfer: float
    ate_shared: float
    ate_independent: float
    ate_gap: float
    rotation_mae: float

    @property
    def key(self):
        return (self.model, self.input_mode, self.dataset, self.view_tag)

    def metrics(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_COLUMNS}


class BenchmarkTable:
    """Keyed benchmark rows with duplicate and finiteness checks."""

    def __init__(self, rows=()):
        self._rows = []
        self._keys = set()
        for row in rows:
            self.add(row)

    def add(self, row: BenchmarkRow) -> None:
        if row.key in self._keys:
            raise ValidationError(f"duplicate benchmark key {row.key}")
        for name, value in row.metrics().items():
            if not math.isfinite(value):
                raise ValidationError(f"non-finite {name} for {row.key}")
        self._keys.add(row.key)
        self._rows.append(row)

    @property
    def rows(self):
        return tuple(self._rows)

    def __len__(self):
        return len(self._rows)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for row in self._rows:
                writer.writerow(
                    [row.model, row.input_mode, row.dataset, row.view_tag]
                    + [repr(getattr(row, name)) for name in METRIC_COLUMNS]
                )

    @classmethod
    def from_csv(cls, path) -> "BenchmarkTable":
        table = cls()
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != CSV_COLUMNS:
                raise ValidationError(f"{path}: unexpected CSV header {header}")
            for rec in reader:
                table.add(BenchmarkRow(
                    rec[0], rec[1], rec[2], rec[3],
                    *[float(v) for v in rec[4:11]],
                ))
        return table


def _mean_rows(rows, view_tag):
    first = rows[0]
    means = {
        name: float(np.mean([getattr(r, name) for r in rows]))
        for name in METRIC_COLUMNS
    }
    return BenchmarkRow(first.model, first.input_mode, first.dataset, view_tag, **means)


def _load_gt_views(manifest: SceneManifest, split):
    cameras_cache = {}
    gt = {}
    order = []
    for view in manifest.views:
        if split is not None and view.split != split:
            continue
        cam_path = manifest.resolve(view.camera_file)
        if cam_path not in cameras_cache:
            cameras_cache[cam_path] = {
                image_id: (camera, pose)
                for image_id, camera, pose in read_cameras(cam_path)
            }
        if view.image_id not in cameras_cache[cam_path]:
            raise ValidationError(
                f"view {view.image_id!r} is not listed in {cam_path}"
            )
        camera, pose = cameras_cache[cam_path][view.image_id]
        depth = read_depth(manifest.resolve(view.depth_file), camera_id=view.image_id)
        mask = read_mask(manifest.resolve(view.mask_file))
        gt[view.image_id] = (camera, pose, depth.values, mask & (depth.values > 0))
        order.append(view.image_id)
    return gt, order


def _build_sample(image_ids, gt, predictions, voxel_size) -> SceneSample:
    views = []
    for image_id in image_ids:
        camera, pose, depth, mask = gt[image_id]
        pred = predictions[image_id]
        pred_depth = np.asarray(pred.depth, dtype=float)
        if pred.points is not None:
            pred_points = np.asarray(pred.points, dtype=float)
        else:
            intrinsics = pred.camera if pred.camera is not None else camera
            pred_points = unproject_map(pred_depth, intrinsics, pred.pose)
        views.append(ViewSample(
            image_id=image_id,
            gt_camera=camera,
            gt_pose=pose,
            gt_depth=depth,
            valid_mask=mask & (pred_depth > 0),
            pred_pose=pred.pose,
            pred_depth=pred_depth,
            pred_points=pred_points,
            pred_camera=pred.camera,
        ))
    return SceneSample(tuple(views), voxel_size=voxel_size)


def _sample_view_sets(order, spec: AggregationSpec):
    n = len(order)
    sets = []
    for count in spec.view_counts:
        if count > n:
            raise ValidationError(f"view count {count} exceeds available views ({n})")
        for k in range(spec.samples_per_count):
            rng = np.random.default_rng([spec.seed, count, k])
            if spec.sampling == "window":
                start = int(rng.integers(0, n - count + 1))
                ids = order[start:start + count]
            else:
                idx = np.sort(rng.choice(n, size=count, replace=False))
                ids = [order[i] for i in idx]
            sets.append((count, k, list(ids)))
    return sets


def run_eval(manifest: SceneManifest, predictions, spec: AggregationSpec,
             model: str = "model", input_mode: str = "rgb", dataset: str = None,
             split: str = None, threads: int = 1, voxel_size: float = None,
             stride: int = 1, trim_fraction: float = 0.2) -> BenchmarkTable:
    """Sample view sets, evaluate each, and aggregate into a benchmark table.

    Emits one row per sampled set (view_tag "views=C/sample=K"), one mean
    row per view count ("views=C"), and the final row ("final") that
    averages the per-count means. Deterministic for a fixed spec seed.
    """
    dataset = manifest.scene_id if dataset is None else dataset
    gt, order = _load_gt_views(manifest, split)
    if voxel_size is None:
        voxel_size = float(manifest.metadata.get("voxel_size", DEFAULT_VOXEL_SIZE))

    sets = _sample_view_sets(order, spec)
    needed = sorted({i for _, _, ids in sets for i in ids})
    missing = [i for i in needed if i not in predictions]
    if missing:
        raise CoverageError(f"missing predictions for views: {', '.join(missing)}")

    def score(entry):
        _, _, ids = entry
        sample = _build_sample(ids, gt, predictions, voxel_size)
        return evaluate_shared(sample, trim_fraction=trim_fraction, stride=stride)

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(score, sets))
    else:
        reports = [score(entry) for entry in sets]

    table = BenchmarkTable()
    per_count = {}
    for (count, k, _), report in zip(sets, reports):
        row = BenchmarkRow(
            model, input_mode, dataset, f"views={count}/sample={k}",
            absrel=report.absrel, ray_error=report.ray_error,
            chamfer=report.chamfer, ate_shared=report.ate_shared,
            ate_independent=report.ate_independent, ate_gap=report.ate_gap,
            rotation_mae=report.rotation_mae,
        )
        table.add(row)
        per_count.setdefault(count, []).append(row)

    count_rows = [
        _mean_rows(rows, f"views={count}") for count, rows in sorted(per_count.items())
    ]
    for row in count_rows:
        table.add(row)
    table.add(_mean_rows(count_rows, "final"))
    return table


def aggregate_rows(table: BenchmarkTable) -> BenchmarkTable:
    """Recompute per-count means and the final row from per-set rows."""
    groups = {}
    for row in table.rows:
        if "/sample=" not in row.view_tag or not row.view_tag.startswith("views="):
            continue
        count = int(row.view_tag.split("/", 1)[0].split("=", 1)[1])
        key = (row.model, row.input_mode, row.dataset)
        groups.setdefault(key, {}).setdefault(count, []).append(row)
    if not groups:
        raise ValidationError("no per-set rows (view_tag 'views=C/sample=K') to aggregate")
    out = BenchmarkTable()
    for key in sorted(groups):
        count_rows = [
            _mean_rows(rows, f"views={count}")
            for count, rows in sorted(groups[key].items())
        ]
        for row in count_rows:
            out.add(row)
        out.add(_mean_rows(count_rows, "final"))
    return out


def relative_reduction(e_pre: float, e_ft: float) -> float:
    """Relative error reduction in percent: (e_pre - e_ft) / e_pre * 100."""
    if not e_pre > 0:
        raise UndefinedBaselineError(
            f"relative reduction needs a positive baseline error, got {e_pre}"
        )
    return (e_pre - e_ft) / e_pre * 100.0


def oblique_nadir_gap(e_oblique: float, e_nadir: float) -> float:
    """Oblique-minus-nadir error difference; positive means oblique is harder."""
    return e_oblique - e_nadir


def emit_report(table: BenchmarkTable, path, fmt: str = "csv") -> str:
    """Write a table as CSV or as long-form per-HFOV plot data.

    plot-data expects rows tagged "hfov=<value>" and emits one
    (model, input_mode, dataset, metric, hfov, value) row per metric and
    HFOV setting, sorted, full precision. Returns the written path.
    """
    if len(table) == 0:
        raise ValidationError("cannot emit an empty table")
    if fmt == "csv":
        table.to_csv(path)
        return path
    if fmt != "plot-data":
        raise ValidationError(f"unknown report format {fmt!r}")
    series = []
    for row in table.rows:
        if not row.view_tag.startswith("hfov="):
            continue
        hfov = float(row.view_tag.split("=", 1)[1])
        for name in METRIC_COLUMNS:
            series.append((row.model, row.input_mode, row.dataset, name, hfov,
                           getattr(row, name)))
    if not series:
        raise ValidationError("plot-data needs rows tagged 'hfov=<value>'")
    series.sort(key=lambda s: (s[0], s[1], s[2], s[3], s[4]))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["model", "input_mode", "dataset", "metric", "hfov", "value"])
        for model, input_mode, dataset, metric, hfov, value in series:
            writer.writerow([model, input_mode, dataset, metric, repr(hfov), repr(value)])
    return path
