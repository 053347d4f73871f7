"""Camera projection geometry and the HFOV-height ambiguity.

A narrow field of view flown high and a wide field of view flown low can
image the same ground footprint. This script walks the formulas that
relate focal length, HFOV, altitude, and footprint, and shows how the
pixel rays differ even when the footprint does not.
"""

import numpy as np

import uavgeom as ug

print("=== focal length from HFOV ===")
for hfov, width in [(25.0, 518), (60.0, 1000), (90.0, 1024)]:
    f = ug.hfov_to_focal(hfov, width)
    print(f"  hfov {hfov:5.1f} deg, width {width:4d} px -> fx = {f:9.2f} px")

print("\n=== the ambiguity: same 90 m footprint, eight projection geometries ===")
hfovs = [25.0, 35.0, 45.0, 55.0, 65.0, 75.0, 85.0, 95.0]
print(f"  {'HFOV':>6} {'altitude':>9} {'footprint':>10}")
for theta in hfovs:
    alt = ug.altitude_for_footprint(90.0, theta)
    fp = ug.footprint_width(alt, theta)
    print(f"  {theta:6.1f} {alt:9.2f} {fp:10.4f}")

print("\nAll eight fly over identical ground, but their cameras disagree:")
cam_narrow = ug.CameraModel.from_hfov(25.0, 64, 48)
cam_wide = ug.CameraModel.from_hfov(95.0, 64, 48)
mask = np.zeros((48, 64), dtype=bool)
mask[int(cam_narrow.cy - 0.5), -1] = True  # center-row edge pixel
disparity = ug.ray_error(cam_narrow, cam_wide, mask)
print(f"  edge-pixel ray disparity between 25 and 95 deg cameras: "
      f"{disparity:.6f} deg (= (95-25)/2)")

print("\n=== pixel rays ===")
cam = ug.CameraModel.from_hfov(90.0, 9, 7)
rays = ug.pixel_rays(cam)
center = rays.directions[3, 4]
corner = rays.directions[0, 0]
print(f"  principal-point ray: {np.round(center, 6)}  (the optical axis)")
print(f"  corner ray:          {np.round(corner, 4)}")
print(f"  every ray has unit norm: "
      f"{np.allclose(np.linalg.norm(rays.directions, axis=2), 1.0)}")

print("\n=== similarity transforms compose and invert ===")
g = ug.Sim3Transform(2.0, ug.rotation_about_axis([0, 0, 1], 30.0), np.array([1.0, 2.0, 3.0]))
p = np.array([[1.0, 1.0, 1.0]])
print(f"  g(p)         = {np.round(g.apply(p)[0], 6)}")
print(f"  g^-1(g(p))   = {np.round(g.inverse().apply(g.apply(p))[0], 6)}")
print(f"  (g @ g^-1) is identity: "
      f"{np.allclose((g @ g.inverse()).matrix(), np.eye(4))}")
