"""
Styled masks and the metrics
============================

A rendered mask is turned into a noisy grayscale image, then thresholded
back. The vessel cells never move, so every metric reports a perfect match.
"""

from biovessel import ScaParams, generate_tree
from biovessel.metrics import evaluate
from biovessel.raster import StyleParams, rasterize_2d, rebinarize, style_adapt
from biovessel.segment import structural_consistency

tree = generate_tree(ScaParams(seed=1, attractor_count=1500, domain=((0, 256), (0, 256))))
mask = rasterize_2d(tree, (256, 256))
print(f"mask has {mask.count} vessel cells")

for params in (StyleParams(), StyleParams(noise_sigma=30, contrast_gamma=0.5, background_level=200, seed=7)):
    image = style_adapt(mask, params)
    back = rebinarize(image, params)
    print(params)
    print("  image range", image.min(), image.max())
    print("  structural consistency", structural_consistency(mask, back))
    print("  ", evaluate(back, mask).to_json())

# a shifted copy shows what a real mismatch looks like
shifted = rasterize_2d(tree.with_coords(tree.coords + [2, 0, 0]), (260, 256))
print("shifted by 2 px:", evaluate(shifted.data[:, :256], mask).to_json())
