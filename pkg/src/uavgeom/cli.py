"""Command-line interface.

Subcommands: eval, align, register, render-depth, gen-flight, aggregate,
report. Global flags --config/--seed/--threads/--voxel apply defaults
from a JSON config file, overridden by explicit flags. Exit codes:
0 success, 1 validation error, 2 I/O error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import dataio, flightgen, harness, metrics
from .alignment import IcpParams, align_trajectory, icp, register_lidar_to_sfm, umeyama
from .errors import UavgeomError
from .geometry import Sim3Transform

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _transform_dict(result):
    t = result.transform
    return {
        "scale": t.scale,
        "rotation": t.rotation.tolist(),
        "translation": t.translation.tolist(),
        "rms_residual": result.rms_residual,
        "inlier_count": result.inlier_count,
        "iterations_used": result.iterations_used,
        "residual_trace": list(result.residual_trace),
    }


def _write_json(path, payload):
    if path == "-":
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        with open(path, "w", newline="\n") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")


def _load_predictions(cameras_path, depth_dir):
    predictions = {}
    for image_id, camera, pose in dataio.read_cameras(cameras_path):
        depth = dataio.read_depth(os.path.join(depth_dir, f"{image_id}.pfm"),
                                  camera_id=image_id)
        predictions[image_id] = harness.ViewPrediction(
            pose=pose, depth=depth.values, camera=camera)
    return predictions


def _cmd_eval(args):
    if args.chamfer_pair:
        a = dataio.read_pointcloud(args.chamfer_pair[0])
        b = dataio.read_pointcloud(args.chamfer_pair[1])
        if args.voxel and args.voxel > 0:
            a = metrics.voxel_downsample(a, args.voxel)
            b = metrics.voxel_downsample(b, args.voxel)
        r = metrics.chamfer_l1(a, b, neighbor_metric=args.neighbor_metric)
        _write_json(args.json_out, {
            "one_way_ab": r.one_way_ab, "one_way_ba": r.one_way_ba,
            "symmetric": r.symmetric,
        })
        return EXIT_OK

    if args.ray_pair:
        pred = {i: c for i, c, _ in dataio.read_cameras(args.ray_pair[0])}
        gt = {i: c for i, c, _ in dataio.read_cameras(args.ray_pair[1])}
        shared = sorted(set(pred) & set(gt))
        if not shared:
            raise UavgeomError("ray-pair camera files share no image ids")
        total = 0.0
        count = 0
        per_view = {}
        for image_id in shared:
            err = metrics.ray_error(pred[image_id], gt[image_id], stride=args.stride)
            n = ((gt[image_id].height + args.stride - 1) // args.stride) * \
                ((gt[image_id].width + args.stride - 1) // args.stride)
            total += err * n
            count += n
            per_view[image_id] = err
        _write_json(args.json_out, {"ray_error": total / count, "per_view": per_view})
        return EXIT_OK

    if not args.manifest:
        raise UavgeomError("eval requires --manifest (or --chamfer-pair / --ray-pair)")
    manifest = dataio.read_manifest(args.manifest)
    predictions = _load_predictions(args.pred_cameras, args.pred_depth_dir)

    if args.single:
        gt, order = harness._load_gt_views(manifest, args.split)
        missing = [i for i in order if i not in predictions]
        if missing:
            raise UavgeomError(f"missing predictions for views: {', '.join(missing)}")
        voxel = args.voxel
        if voxel is None:
            voxel = float(manifest.metadata.get("voxel_size", metrics.DEFAULT_VOXEL_SIZE))
        sample = harness._build_sample(order, gt, predictions, voxel)
        report = metrics.evaluate_shared(sample, trim_fraction=args.trim, stride=args.stride)
        _write_json(args.json_out, report.to_dict())
        return EXIT_OK

    spec = harness.AggregationSpec(
        samples_per_count=args.samples_per_count,
        view_counts=tuple(int(c) for c in args.view_counts.split(",")),
        seed=args.seed,
        sampling=args.sampling,
    )
    table = harness.run_eval(
        manifest, predictions, spec,
        model=args.model, input_mode=args.input_mode, dataset=args.dataset,
        split=args.split, threads=args.threads, voxel_size=args.voxel,
        stride=args.stride, trim_fraction=args.trim,
    )
    table.to_csv(args.out)
    print(f"wrote {args.out} ({len(table)} rows)")
    return EXIT_OK


def _icp_params(args, mode):
    return IcpParams(
        mode=mode,
        max_iterations=args.max_iter,
        convergence_rel_tol=args.tol,
        trim_fraction=args.trim,
        max_correspondence_dist=args.max_corr,
    )


def _cmd_align(args):
    src = dataio.read_pointcloud(args.src)
    dst = dataio.read_pointcloud(args.dst)
    if args.method == "umeyama":
        transform = umeyama(src, dst, with_scale=(args.mode == "sim3"))
        residuals = np.linalg.norm(transform.apply(src) - dst, axis=1)
        result_dict = {
            "scale": transform.scale,
            "rotation": transform.rotation.tolist(),
            "translation": transform.translation.tolist(),
            "rms_residual": float(np.sqrt(np.mean(residuals ** 2))),
            "inlier_count": int(src.shape[0]),
            "iterations_used": 1,
            "residual_trace": [float(np.sqrt(np.mean(residuals ** 2)))],
        }
    elif args.method == "trajectory":
        result_dict = _transform_dict(align_trajectory(src, dst))
    else:
        result = icp(src, dst, init=Sim3Transform.identity(),
                     params=_icp_params(args, args.mode))
        result_dict = _transform_dict(result)
    _write_json(args.json_out, result_dict)
    return EXIT_OK


def _cmd_register(args):
    lidar = dataio.read_pointcloud(args.lidar)
    sfm = dataio.read_pointcloud(args.sfm)
    result = register_lidar_to_sfm(lidar, sfm, params=_icp_params(args, "se3"))
    _write_json(args.json_out, _transform_dict(result))
    if args.out_cloud:
        dataio.write_pointcloud(args.out_cloud, result.transform.apply(lidar))
    return EXIT_OK


def _cmd_render_depth(args):
    from .depthrender import filter_depth_outliers, rasterize_mesh_depth, render_point_depth

    cloud = dataio.read_pointcloud(args.cloud)
    views = dataio.read_cameras(args.cameras)
    mesh = dataio.read_mesh(args.mesh) if args.mesh else None
    os.makedirs(args.out_dir, exist_ok=True)
    for image_id, camera, pose in views:
        depth, mask = render_point_depth(cloud, camera, pose,
                                         splat_radius=args.splat_radius)
        if mesh is not None:
            mesh_depth, _ = rasterize_mesh_depth(mesh, camera, pose)
            depth, mask = filter_depth_outliers(depth, mesh_depth,
                                                rel_tol=args.rel_tol,
                                                abs_tol=args.abs_tol)
        dataio.write_depth(os.path.join(args.out_dir, f"{image_id}.pfm"), depth)
        dataio.write_mask(os.path.join(args.out_dir, f"{image_id}.pgm"), mask)
    print(f"rendered {len(views)} view(s) into {args.out_dir}")
    return EXIT_OK


def _plan_views(plan):
    return [(v.image_id, v.camera, v.pose) for v in plan.views]


def _plan_meta(plan, extra=None):
    meta = {
        "hfov": plan.hfov,
        "altitude": plan.altitude,
        "forward_overlap": plan.forward_overlap,
        "side_overlap": plan.side_overlap,
        "n_views": len(plan.views),
        "tags": sorted({v.tag for v in plan.views}),
    }
    if extra:
        meta.update(extra)
    return meta


def _cmd_gen_flight(args):
    region = flightgen.RegionSpec(args.x_extent, args.y_extent, args.ground_elevation)
    image_size = (args.image_width, args.image_height)
    os.makedirs(args.out_dir, exist_ok=True)
    overlaps = dict(forward_overlap=args.forward_overlap, side_overlap=args.side_overlap)

    if args.pattern == "nadir":
        plan = flightgen.plan_nadir_grid(region, args.altitude, args.hfov,
                                         image_size=image_size, **overlaps)
        plans = [("nadir", plan, {})]
    elif args.pattern == "oblique":
        plan = flightgen.plan_oblique_rig(region, args.altitude, args.hfov,
                                          tilt=args.tilt, image_size=image_size,
                                          **overlaps)
        plans = [("oblique", plan, {"tilt": args.tilt})]
    else:
        hfovs = [float(h) for h in args.hfov_list.split(",")]
        group = flightgen.gen_fa_groups(
            region, hfovs, args.target_footprint,
            altitude_limits=(args.min_altitude, args.max_altitude),
            image_size=image_size, clamp=args.clamp, **overlaps)
        plans = [
            (f"fa_hfov{int(theta) if float(theta).is_integer() else theta}", plan,
             {"target_footprint": args.target_footprint})
            for theta, plan in zip(hfovs, group)
        ]

    for name, plan, extra in plans:
        dataio.write_cameras(os.path.join(args.out_dir, f"{name}_cameras.txt"),
                             _plan_views(plan))
        _write_json(os.path.join(args.out_dir, f"{name}_plan.json"),
                    _plan_meta(plan, extra))
    print(f"wrote {len(plans)} plan(s) into {args.out_dir}")
    return EXIT_OK


def _cmd_aggregate(args):
    table = harness.BenchmarkTable.from_csv(args.infile)
    aggregated = harness.aggregate_rows(table)
    aggregated.to_csv(args.out)
    if args.baseline:
        base = {r.key: r for r in harness.BenchmarkTable.from_csv(args.baseline).rows}
        reductions = []
        for row in aggregated.rows:
            # reductions are keyed on (input_mode, dataset, view_tag): the model
            # name differs between the baseline and fine-tuned tables
            matches = [b for k, b in base.items() if k[1:] == row.key[1:]]
            if len(matches) != 1:
                continue
            b = matches[0]
            reductions.append({
                "baseline_model": b.model,
                "model": row.model,
                "input_mode": row.input_mode,
                "dataset": row.dataset,
                "view_tag": row.view_tag,
                **{
                    name: harness.relative_reduction(getattr(b, name), getattr(row, name))
                    for name in harness.METRIC_COLUMNS
                    if getattr(b, name) > 0
                },
            })
        _write_json(args.reduction_out, reductions)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_report(args):
    table = harness.BenchmarkTable.from_csv(args.infile)
    harness.emit_report(table, args.out, fmt=args.format)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavgeom",
        description="Shared-alignment evaluation and acquisition toolkit "
                    "for UAV 3D reconstruction.",
    )
    parser.add_argument("--config", help="JSON file with default flag values")
    parser.add_argument("--seed", type=int, default=None, help="sampling seed")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--voxel", type=float, default=None,
                        help="voxel size in meters for Chamfer downsampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate predictions under the shared alignment")
    p.add_argument("--manifest")
    p.add_argument("--pred-cameras", help="camera file with predicted intrinsics+poses")
    p.add_argument("--pred-depth-dir", help="directory of per-view predicted depth PFMs")
    p.add_argument("--single", action="store_true",
                   help="evaluate all selected views as one sample, emit JSON report")
    p.add_argument("--split", choices=["train", "test"], default=None)
    p.add_argument("--view-counts", default="8,16,24,32")
    p.add_argument("--samples-per-count", type=int, default=1)
    p.add_argument("--sampling", choices=["window", "random"], default="window")
    p.add_argument("--model", default="model")
    p.add_argument("--input-mode", default="rgb")
    p.add_argument("--dataset", default=None)
    p.add_argument("--trim", type=float, default=0.2, help="alignment trim fraction")
    p.add_argument("--stride", type=int, default=1, help="pixel stride for ray/depth terms")
    p.add_argument("--neighbor-metric", choices=["l1", "l2"], default="l1")
    p.add_argument("--chamfer-pair", nargs=2, metavar=("A.PLY", "B.PLY"),
                   help="just compute Chamfer-L1 between two clouds")
    p.add_argument("--ray-pair", nargs=2, metavar=("PRED.TXT", "GT.TXT"),
                   help="just compute ray error between two camera files")
    p.add_argument("--out", default="benchmark.csv")
    p.add_argument("--json-out", default="-")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("align", help="align two point clouds")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--method", choices=["umeyama", "icp", "trajectory"], default="icp")
    p.add_argument("--mode", choices=["sim3", "se3"], default="sim3")
    p.add_argument("--trim", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-corr", type=float, default=None)
    p.add_argument("--json-out", default="-")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("register", help="register a LiDAR cloud to an SfM cloud")
    p.add_argument("--lidar", required=True)
    p.add_argument("--sfm", required=True)
    p.add_argument("--trim", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-corr", type=float, default=None)
    p.add_argument("--out-cloud", default=None, help="write the registered cloud here")
    p.add_argument("--json-out", default="-")
    p.set_defaults(func=_cmd_register)

    p = sub.add_parser("render-depth", help="render reference depth for each view")
    p.add_argument("--cloud", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--splat-radius", type=int, default=1)
    p.add_argument("--mesh", default=None,
                   help="mesh PLY used to filter outlier depth (never copied)")
    p.add_argument("--rel-tol", type=float, default=0.02)
    p.add_argument("--abs-tol", type=float, default=0.10)
    p.set_defaults(func=_cmd_render_depth)

    p = sub.add_parser("gen-flight", help="generate synthetic acquisition plans")
    p.add_argument("pattern", choices=["nadir", "oblique", "fa"])
    p.add_argument("--x-extent", type=float, required=True)
    p.add_argument("--y-extent", type=float, required=True)
    p.add_argument("--ground-elevation", type=float, default=0.0)
    p.add_argument("--altitude", type=float, default=None)
    p.add_argument("--hfov", type=float, default=None)
    p.add_argument("--hfov-list", default="25,35,45,55,65,75,85,95")
    p.add_argument("--target-footprint", type=float, default=None)
    p.add_argument("--min-altitude", type=float, default=40.0)
    p.add_argument("--max-altitude", type=float, default=210.0)
    p.add_argument("--clamp", action="store_true",
                   help="clamp out-of-range altitudes instead of failing")
    p.add_argument("--tilt", type=float, default=45.0)
    p.add_argument("--forward-overlap", type=float, default=0.9)
    p.add_argument("--side-overlap", type=float, default=0.8)
    p.add_argument("--image-width", type=int, default=1024)
    p.add_argument("--image-height", type=int, default=1024)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_gen_flight)

    p = sub.add_parser("aggregate", help="aggregate per-set rows into per-count/final means")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--baseline", default=None,
                   help="aggregated baseline CSV for relative-reduction output")
    p.add_argument("--reduction-out", default="-")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("report", help="re-emit a table as CSV or plot data")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["csv", "plot-data"], default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def _apply_config(args):
    if not args.config:
        return
    with open(args.config) as f:
        conf = json.load(f)
    for key in ("seed", "threads", "voxel"):
        if getattr(args, key, None) is None and key in conf:
            setattr(args, key, conf[key])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        if getattr(args, "seed", None) is None:
            args.seed = 0
        if getattr(args, "threads", None) is None:
            args.threads = 1
        return args.func(args)
    except (UavgeomError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
