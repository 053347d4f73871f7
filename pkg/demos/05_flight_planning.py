"""Flight planning: nadir grids, five-view oblique rigs, FA groups.

Generates the three acquisition patterns over a 300 x 200 m block and,
when matplotlib is available, draws the ground tracks to demos/output/.
"""

import os

import numpy as np

import uavgeom as ug

region = ug.RegionSpec(300.0, 200.0)

print("=== serpentine nadir grid (90%/80% overlap) ===")
plan = ug.plan_nadir_grid(region, altitude=100.0, hfov=70.0,
                          forward_overlap=0.9, side_overlap=0.8)
footprint = ug.footprint_width(100.0, 70.0)
xs = sorted({v.pose.center[0] for v in plan.views})
ys = sorted({v.pose.center[1] for v in plan.views})
print(f"  footprint {footprint:.1f} m -> station spacing {xs[1]-xs[0]:.1f} m, "
      f"line spacing {ys[1]-ys[0]:.1f} m")
print(f"  {len(plan.views)} stations on {len(ys)} lines")

print("\n=== five-view oblique rig at the same stations ===")
rig = ug.plan_oblique_rig(region, altitude=100.0, hfov=70.0, tilt=45.0)
tags = {}
for v in rig.views:
    tags[v.tag] = tags.get(v.tag, 0) + 1
print(f"  {len(rig.views)} views: { {t: n for t, n in sorted(tags.items())} }")
axis = rig.views[1].pose.optical_axis
print(f"  example oblique axis {np.round(axis, 4)} "
      f"(45 deg off nadir, footprint center {100.0 * np.tan(np.radians(45.0)):.0f} m out)")

print("\n=== controlled HFOV-height group: eight plans, one footprint ===")
hfovs = [25.0, 35.0, 45.0, 55.0, 65.0, 75.0, 85.0, 95.0]
plans = ug.gen_fa_groups(region, hfovs, target_footprint=90.0,
                         altitude_limits=(40.0, 210.0))
print(f"  {'HFOV':>6} {'altitude':>9} {'stations':>9}")
for theta, p in zip(hfovs, plans):
    print(f"  {theta:6.1f} {p.altitude:9.2f} {len(p.views):9d}")
same = all(
    [(v.pose.center[0], v.pose.center[1]) for v in p.views]
    == [(v.pose.center[0], v.pose.center[1]) for v in plans[0].views]
    for p in plans
)
print(f"  all plans share one station ground pattern: {same}")

out_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")
os.makedirs(out_dir, exist_ok=True)

cams_path = os.path.join(out_dir, "fa_hfov65_cameras.txt")
ug.write_cameras(cams_path, [(v.image_id, v.camera, v.pose) for v in plans[4].views])
print(f"\nwrote the 65-degree plan to {cams_path}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the track plot")
else:
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    centers = np.array([v.pose.center for v in plan.views])
    axes[0].plot(centers[:, 0], centers[:, 1], "-o", ms=2, lw=0.7)
    axes[0].set_title(f"nadir serpentine ({len(plan.views)} stations)")
    axes[0].set_aspect("equal")
    for theta, p in zip(hfovs, plans):
        c = np.array([v.pose.center for v in p.views])
        axes[1].plot(c[0, 0], c[0, 1], "s", ms=4)
        axes[1].plot([0], [0])
    alts = [p.altitude for p in plans]
    axes[1].bar([str(int(t)) for t in hfovs], alts)
    axes[1].set_title("FA group altitudes (one shared footprint)")
    axes[1].set_ylabel("altitude [m]")
    png = os.path.join(out_dir, "flight_plans.png")
    fig.tight_layout()
    fig.savefig(png, dpi=110)
    print(f"saved {png}")
