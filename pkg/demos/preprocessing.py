"""
Dehazing and sharpening
=======================

The two filters that clean up a real scan before centerline extraction, on a
synthetic image with added haze.
"""

import numpy as np

from biovessel import ScaParams, generate_tree
from biovessel.raster import StyleParams, dark_channel, dark_channel_dehaze, rasterize_2d, style_adapt, unsharp_mask

tree = generate_tree(ScaParams(seed=2, attractor_count=1500, domain=((0, 256), (0, 256))))
clean = style_adapt(rasterize_2d(tree, (256, 256)), StyleParams(noise_sigma=4)).astype(float)

# uniform haze: I = J t + A (1 - t)
t, A = 0.55, 230.0
hazy = clean * t + A * (1 - t)
print(f"hazy contrast {hazy.std():.1f} vs clean {clean.std():.1f}")

print("dark channel mean", round(dark_channel(hazy, 15).mean(), 1))
restored = dark_channel_dehaze(hazy, 15)
print(f"dehazed contrast {restored.std():.1f}, mean abs error {np.abs(restored - clean).mean():.1f}")

sharp = unsharp_mask(restored, sigma=1.0, amount=1.0)
edges = lambda im: np.abs(np.diff(im, axis=1)).mean()
print(f"mean horizontal gradient: {edges(restored):.2f} -> {edges(sharp):.2f}")
