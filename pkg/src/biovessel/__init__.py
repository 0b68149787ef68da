"""Radius-threshold DFS extraction of primary retinal vessels.

The package grows synthetic vessel trees, turns centerline samples into
weighted graphs, keeps the vessels thicker than a fraction of the largest
radius, walks the largest surviving component thickest-branch-first, and
scores the result with IoU, Dice, SSIM and MSE.
"""

__version__ = "0.1.0"

from .calibration import (
    RadiusStats,
    SensitivityCurve,
    capillary_coverage,
    derive_rmin,
    radius_stats,
    sensitivity_sweep,
)
from .graph import (
    ComponentLabeling,
    Explicit,
    Proximity,
    VesselEdge,
    VesselGraph,
    VesselNode,
    build_graph,
    connected_components,
    validate,
)
from .metrics import MetricReport, dice, evaluate, iou, mse, ssim
from .raster import (
    RasterMask,
    StyleParams,
    dark_channel_dehaze,
    rasterize,
    rasterize_2d,
    rasterize_3d,
    rebinarize,
    style_adapt,
    unsharp_mask,
)
from .segment import (
    Coordinate,
    MaxRadius,
    NodeId,
    SegmentationResult,
    SegmentorConfig,
    dfs_extract,
    filter_by_radius,
    segment,
    structural_consistency,
)
from .synthesis import (
    GroundTruth,
    ScaParams,
    TaperParams,
    assign_radii,
    generate_attractors,
    generate_tree,
    grow_sca,
    label_ground_truth,
)
