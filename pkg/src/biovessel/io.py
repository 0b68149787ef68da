"""Persistence: ``vesselgraph/1`` JSON, ``u8-raw`` volumes, PNG masks, CSV.

All writers go through a temporary file in the target directory followed by an
atomic rename, so concurrent writers never leave a partial file behind.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError
from .graph import VesselGraph
from .raster import RasterMask

GRAPH_FORMAT = "vesselgraph/1"
VOLUME_ENCODING = "u8-raw"
VOLUME_ORDER = "x-fastest"


def atomic_write(path, data: bytes | str) -> None:
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# -- graphs ------------------------------------------------------------------

def graph_to_dict(graph: VesselGraph) -> dict:
    # float() keeps json on repr(), i.e. shortest round-trip decimals
    nodes = [
        {"x": float(x), "y": float(y), "z": float(z), "r": float(r)}
        for (x, y, z), r in zip(graph.coords.tolist(), graph.radii.tolist())
    ]
    return {
        "format_version": GRAPH_FORMAT,
        "nodes": nodes,
        "edges": graph.edges.tolist(),
        "meta": {str(k): str(v) for k, v in sorted(graph.meta.items())},
    }


def dumps_graph(graph: VesselGraph) -> str:
    return json.dumps(graph_to_dict(graph), separators=(",", ":"), allow_nan=False) + "\n"


def graph_from_dict(doc: dict) -> VesselGraph:
    if not isinstance(doc, dict) or doc.get("format_version") != GRAPH_FORMAT:
        raise FormatError(f"expected format_version {GRAPH_FORMAT!r}")
    try:
        nodes = doc["nodes"]
        coords = np.array([[n["x"], n["y"], n.get("z", 0.0)] for n in nodes], dtype=np.float64).reshape(-1, 3)
        radii = np.array([n["r"] for n in nodes], dtype=np.float64)
        edges = np.array(doc.get("edges") or [], dtype=np.int64).reshape(-1, 2)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed {GRAPH_FORMAT} document: {exc}") from exc
    meta = doc.get("meta") or {}
    if not isinstance(meta, dict):
        raise FormatError("meta must be an object")
    return VesselGraph(coords, radii, edges, meta={str(k): str(v) for k, v in meta.items()})


def loads_graph(text: str) -> VesselGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    return graph_from_dict(doc)


def save_graph(graph: VesselGraph, path) -> None:
    atomic_write(path, dumps_graph(graph))


def load_graph(path) -> VesselGraph:
    return loads_graph(Path(path).read_text(encoding="utf-8"))


# -- volumes -----------------------------------------------------------------

def dumps_volume(mask) -> bytes:
    data = np.ascontiguousarray(np.asarray(mask), dtype=np.uint8)
    if data.ndim != 3:
        raise FormatError("volumes must be 3D")
    depth, height, width = data.shape
    header = {"dims": [width, height, depth], "encoding": VOLUME_ENCODING, "order": VOLUME_ORDER}
    return json.dumps(header, separators=(",", ":")).encode("ascii") + b"\n" + data.tobytes()


def loads_volume(blob: bytes) -> RasterMask:
    head, sep, payload = blob.partition(b"\n")
    if not sep:
        raise FormatError("missing volume header line")
    try:
        header = json.loads(head)
        width, height, depth = (int(v) for v in header["dims"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"bad volume header: {exc}") from exc
    if header.get("encoding") != VOLUME_ENCODING or header.get("order") != VOLUME_ORDER:
        raise FormatError("unsupported volume encoding or order")
    if len(payload) != width * height * depth:
        raise FormatError(f"payload has {len(payload)} bytes, header promises {width * height * depth}")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(depth, height, width).copy()
    return RasterMask(data)


def save_volume(mask, path) -> None:
    atomic_write(path, dumps_volume(mask))


def load_volume(path) -> RasterMask:
    return loads_volume(Path(path).read_bytes())


# -- images ------------------------------------------------------------------

def save_png(image, path) -> None:
    """8-bit grayscale PNG, no palette, no alpha."""
    data = np.ascontiguousarray(np.asarray(image), dtype=np.uint8)
    if data.ndim != 2:
        raise FormatError("PNG output needs a 2D image")
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    atomic_write(path, buf.getvalue())


def load_png(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "1", "P", "RGB", "RGBA", "I", "I;16", "LA"):
            raise FormatError(f"unsupported PNG mode {im.mode}")
        return np.asarray(im.convert("L"), dtype=np.uint8)


def load_mask_png(path) -> RasterMask:
    return RasterMask(np.where(load_png(path) > 0, 255, 0).astype(np.uint8))
