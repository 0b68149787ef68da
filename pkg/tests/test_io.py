import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biovessel.errors import FormatError
from biovessel.graph import VesselGraph
from biovessel.io import (
    dumps_graph,
    dumps_volume,
    load_graph,
    load_mask_png,
    load_png,
    load_volume,
    loads_graph,
    loads_volume,
    save_graph,
    save_png,
    save_volume,
)
from biovessel.raster import RasterMask
from biovessel.synthesis import random_tree

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_graph_roundtrip_is_bit_exact(data):
    n = data.draw(st.integers(1, 30))
    coords = np.array(data.draw(st.lists(st.tuples(finite, finite, finite), min_size=n, max_size=n)))
    radii = np.array(data.draw(st.lists(st.floats(1e-6, 1e3), min_size=n, max_size=n)))
    pairs = data.draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    edges = sorted({(a, b) for a, b in pairs if a != b})
    g = VesselGraph(coords, radii, edges, meta={"seed": "7", "note": "ü"})
    text = dumps_graph(g)
    back = loads_graph(text)
    assert back.coords.tobytes() == g.coords.tobytes()
    assert back.radii.tobytes() == g.radii.tobytes()
    assert np.array_equal(back.edges, g.edges)
    assert back.meta == g.meta
    assert dumps_graph(back) == text


def test_file_roundtrip(tmp_path):
    g = random_tree(200, seed=3)
    path = tmp_path / "g.json"
    save_graph(g, path)
    first = path.read_bytes()
    save_graph(load_graph(path), path)
    assert path.read_bytes() == first
    doc = json.loads(first)
    assert doc["format_version"] == "vesselgraph/1"
    assert set(doc["nodes"][0]) == {"x", "y", "z", "r"}
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]


def test_missing_z_defaults_to_plane():
    g = loads_graph('{"format_version":"vesselgraph/1","nodes":[{"x":1,"y":2,"r":3}],"edges":[]}')
    assert g.coords.tolist() == [[1.0, 2.0, 0.0]] and g.is_planar


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        '{"format_version":"vesselgraph/2","nodes":[],"edges":[]}',
        '{"format_version":"vesselgraph/1","edges":[]}',
        '{"format_version":"vesselgraph/1","nodes":[{"x":1}],"edges":[]}',
        '{"format_version":"vesselgraph/1","nodes":[],"edges":[],"meta":[1]}',
    ],
)
def test_malformed_graph_documents(text):
    with pytest.raises(FormatError):
        loads_graph(text)


def test_volume_roundtrip(tmp_path, rng):
    data = (rng.random((3, 5, 7)) > 0.5).astype(np.uint8) * 255
    mask = RasterMask(data)
    blob = dumps_volume(mask)
    header, payload = blob.split(b"\n", 1)
    assert json.loads(header) == {"dims": [7, 5, 3], "encoding": "u8-raw", "order": "x-fastest"}
    # x varies fastest in the payload
    assert payload[:7] == data[0, 0, :].tobytes()
    assert loads_volume(blob) == mask
    save_volume(mask, tmp_path / "v.vol")
    assert load_volume(tmp_path / "v.vol") == mask


@pytest.mark.parametrize(
    "blob",
    [
        b"no header",
        b"{bad json\n",
        b'{"dims":[2,2,1],"encoding":"u16","order":"x-fastest"}\n' + bytes(4),
        b'{"dims":[2,2,1],"encoding":"u8-raw","order":"x-fastest"}\n' + bytes(3),
    ],
)
def test_malformed_volumes(blob):
    with pytest.raises(FormatError):
        loads_volume(blob)


def test_png_roundtrip(tmp_path, rng):
    img = rng.integers(0, 256, (9, 13), dtype=np.uint8)
    save_png(img, tmp_path / "a.png")
    assert np.array_equal(load_png(tmp_path / "a.png"), img)
    mask = RasterMask(np.where(img > 128, 255, 0).astype(np.uint8))
    save_png(mask, tmp_path / "m.png")
    assert load_mask_png(tmp_path / "m.png") == mask
    with pytest.raises(FormatError):
        save_png(np.zeros((2, 2, 2), np.uint8), tmp_path / "bad.png")
