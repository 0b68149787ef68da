"""
Choosing the radius threshold
=============================

Three ways of picking R_min, and what happens to the retained graph as the
threshold slides from 0 to 1.
"""

import numpy as np

from biovessel import ScaParams, generate_tree
from biovessel.calibration import capillary_coverage, derive_rmin, radius_stats, sensitivity_sweep
from biovessel.raster import rasterize_2d

tree = generate_tree(ScaParams(seed=3))
stats = radius_stats(tree)
print(f"mean {stats.mean:.3f}  std {stats.std_dev:.3f}  r_max {stats.r_max:.3f}  n {stats.count}")

print("fixed          ->", derive_rmin(stats, "fixed"))
print("mean_over_max  ->", round(derive_rmin(stats, "mean_over_max"), 4))

# smallest threshold that leaves 20% of the canvas covered by capillaries
r = derive_rmin(stats, "coverage_target", graph=tree, dims=(512, 512), target=0.20)
cap, full = capillary_coverage(tree, r, (512, 512))
print(f"coverage_target -> {r:.4f} (capillaries {cap:.3f} of the canvas, vessels {full:.3f})")

# sweep against the main subgraph at 0.2 as reference
truth = rasterize_2d(tree.subgraph(tree.radii >= 0.2 * tree.r_max), (512, 512))
curve = sensitivity_sweep(tree, truth, np.linspace(0, 1, 11))
print(curve.to_csv())
best = curve.best()
print(f"best ratio {best.r_min_ratio:.2f} with IoU {best.iou:.4f}")
