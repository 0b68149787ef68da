"""Mask overlap and image similarity metrics.

Masks count any non-zero cell as vessel. ``iou`` and ``dice`` define two empty
masks as a perfect match (1.0).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidWindow, ShapeMismatch


def _pair(a, b, dtype=None) -> tuple[np.ndarray, np.ndarray]:
    x, y = np.asarray(a), np.asarray(b)
    if x.shape != y.shape:
        raise ShapeMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    if dtype is not None:
        x, y = x.astype(dtype), y.astype(dtype)
    return x, y


def _counts(a, b) -> tuple[int, int, int]:
    x, y = _pair(a, b)
    x, y = x != 0, y != 0
    return int(np.count_nonzero(x & y)), int(np.count_nonzero(x)), int(np.count_nonzero(y))


def iou(a, b) -> float:
    """Jaccard index ``|a & b| / |a | b|``."""
    inter, na, nb = _counts(a, b)
    union = na + nb - inter
    return 1.0 if union == 0 else inter / union


def dice(a, b) -> float:
    inter, na, nb = _counts(a, b)
    total = na + nb
    return 1.0 if total == 0 else 2.0 * inter / total


def mse(a, b) -> float:
    """Mean squared gray-level difference."""
    x, y = _pair(a, b, np.float64)
    return float(np.mean((x - y) ** 2)) if x.size else 0.0


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    """Normalized 1D Gaussian taps; the 2D window is their outer product."""
    half = size // 2
    taps = np.exp(-(np.arange(-half, half + 1, dtype=np.float64) ** 2) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def ssim(a, b, window: int = 11, k1: float = 0.01, k2: float = 0.03, L: float = 255.0, sigma: float = 1.5) -> float:
    """Mean structural similarity over every fully contained Gaussian window."""
    x, y = _pair(a, b, np.float64)
    if x.ndim != 2:
        raise ValueError("ssim expects 2D images")
    if window < 1 or window % 2 == 0:
        raise InvalidWindow(f"window must be a positive odd size, got {window}")
    if window > min(x.shape):
        raise InvalidWindow(f"window {window} exceeds image shape {x.shape}")
    taps = gaussian_window(window, sigma)
    half = window // 2
    crop = (slice(half, x.shape[0] - half), slice(half, x.shape[1] - half))

    def local_mean(img):
        out = ndimage.correlate1d(img, taps, axis=0, mode="constant")
        return ndimage.correlate1d(out, taps, axis=1, mode="constant")[crop]

    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    mx, my = local_mean(x), local_mean(y)
    vx = local_mean(x * x) - mx * mx
    vy = local_mean(y * y) - my * my
    cxy = local_mean(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class MetricReport:
    iou: float
    dice: float
    ssim: float
    mse: float

    FIELDS = ("iou", "dice", "ssim", "mse")

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(self.FIELDS)
        writer.writerow([repr(getattr(self, f)) for f in self.FIELDS])
        return buf.getvalue()


def evaluate(pred, truth, **ssim_kw) -> MetricReport:
    """All four metrics of ``pred`` against ``truth``."""
    return MetricReport(iou(pred, truth), dice(pred, truth), ssim(pred, truth, **ssim_kw), mse(pred, truth))
