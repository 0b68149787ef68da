"""``biovessel`` command line.

Every command prints exactly one JSON object on stdout; diagnostics go to
stderr. Exit codes: 0 ok, 1 unexpected failure, 2 usage or parse error,
3 domain error (e.g. nothing left after filtering), 4 shape mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bench import bench_dfs, records_to_csv
from .calibration import derive_rmin, radius_stats, sensitivity_sweep
from .errors import (
    EmptyAfterFilter,
    EmptyInput,
    FormatError,
    InvalidParams,
    InvalidRadius,
    InvalidEdge,
    IoError,
    OutOfBounds,
    RootNotFound,
    ShapeMismatch,
    VesselError,
)
from .graph import Explicit, Proximity, VesselGraph
from .io import atomic_write, load_graph, load_mask_png, save_graph, save_png, save_volume
from .metrics import MetricReport, evaluate
from .raster import StyleParams, rasterize, style_adapt
from .segment import SegmentorConfig, parse_root, segment
from .synthesis import ScaParams, TaperParams, generate_tree

EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE, EXIT_DOMAIN, EXIT_SHAPE = 0, 1, 2, 3, 4
SEED_ENV = "VESSELGRAPH_SEED"


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def _default_seed() -> int:
    value = os.environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {value!r}") from None


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like 512x512 or 64x64x32, got {text!r}") from None
    if len(dims) not in (2, 3) or min(dims) <= 0:
        raise argparse.ArgumentTypeError(f"dims must have 2 or 3 positive entries, got {text!r}")
    return dims


def _graph_dims(graph: VesselGraph, explicit, want_3d: bool = False) -> tuple[int, ...]:
    if explicit is not None:
        return explicit
    if "dims" in graph.meta:
        dims = _dims(graph.meta["dims"])
        if want_3d and len(dims) == 2:
            dims = dims + (int(np.ceil(graph.coords[:, 2].max() + graph.radii.max())) + 1,)
        return dims
    if graph.n_nodes == 0:
        raise UsageError("cannot infer canvas dims from an empty graph; pass --dims")
    hi = np.ceil(graph.coords + graph.radii[:, None]).max(axis=0).astype(int) + 1
    return tuple(int(v) for v in (hi if want_3d or not graph.is_planar else hi[:2]))


def _load_input_graph(path) -> VesselGraph:
    try:
        return load_graph(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _connectivity(graph: VesselGraph, delta: float):
    return Explicit(graph.edges) if graph.n_edges else Proximity(delta)


def _write_mask(mask, path: Path) -> None:
    if np.asarray(mask).ndim == 3:
        save_volume(mask, path)
    else:
        save_png(mask, path)


# -- commands ----------------------------------------------------------------

def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    domain = ((0.0, float(args.width)), (0.0, float(args.height)))
    if args.depth:
        domain = domain + ((0.0, float(args.depth)),)
    params = ScaParams(
        attraction_radius=args.attraction_radius,
        kill_radius=args.kill_radius,
        step=args.step,
        max_iterations=args.max_iterations,
        domain=domain,
        attractor_count=args.attractors,
        seed=seed,
    )
    taper = TaperParams(args.terminal_radius, args.murray_exponent)
    graph = generate_tree(params, taper)
    save_graph(graph, args.out)
    _emit({"out": str(args.out), "nodes": graph.n_nodes, "edges": graph.n_edges, "seed": seed, "r_max": graph.r_max})
    return EXIT_OK


def cmd_segment(args) -> int:
    graph = _load_input_graph(args.input)
    root = parse_root(args.root)
    dims = _graph_dims(graph, args.dims) if args.mask_out else None
    config = SegmentorConfig(args.rmin, root, args.mask_out is not None, dims, args.snap_distance)
    # files without edges are connected by proximity
    source = graph if graph.n_edges else np.column_stack([graph.coords, graph.radii])
    result = segment(source, config, _connectivity(graph, args.delta))
    if args.json_out:
        main = result.main_graph
        meta = {**main.meta, "source": str(args.input), "r_min_ratio": repr(args.rmin)}
        save_graph(VesselGraph(main.coords, main.radii, main.edges, meta=meta), args.json_out)
    if args.mask_out:
        _write_mask(result.mask, args.mask_out)
    summary = result.summary()
    summary["input_nodes"] = graph.n_nodes
    _emit(summary)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    graph = _load_input_graph(args.input)
    stats = radius_stats(graph)
    dims = None
    if args.strategy == "coverage-target" or args.sweep or args.ratios:
        dims = _graph_dims(graph, args.dims)
    ratio = derive_rmin(stats, args.strategy, graph=graph, dims=dims, target=args.target)
    out = {"strategy": args.strategy, "r_min_ratio": ratio, **stats.to_dict()}

    ratios = None
    if args.ratios:
        ratios = [float(v) for v in args.ratios.split(",")]
    elif args.sweep:
        ratios = np.linspace(0.0, 1.0, args.sweep).tolist()
    if ratios is not None:
        if not args.csv_out:
            raise UsageError("--sweep/--ratios need --csv-out")
        if args.truth:
            truth = load_mask_png(args.truth)
        else:
            truth = rasterize(graph.subgraph(graph.radii >= ratio * graph.r_max), dims)
        curve = sensitivity_sweep(graph, truth, ratios)
        atomic_write(args.csv_out, curve.to_csv())
        best = curve.best()
        out.update(csv=str(args.csv_out), rows=len(curve), best_ratio=best.r_min_ratio, best_iou=best.iou)
    _emit(out)
    return EXIT_OK


def _evaluate_pair(pred_path, truth_path) -> dict:
    return evaluate(load_mask_png(pred_path), load_mask_png(truth_path)).to_dict()


def _evaluate_batch(args) -> int:
    if not (args.pred.is_dir() and args.truth.is_dir()):
        raise UsageError("--batch needs --pred and --truth to be directories")
    names = sorted(p.name for p in args.pred.glob("*.png"))
    missing = [n for n in names if not (args.truth / n).is_file()]
    if missing:
        raise UsageError(f"no truth mask for {missing[0]}")
    if not names:
        raise EmptyInput(f"no PNG files in {args.pred}")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    jobs = [(args.pred / n, args.truth / n) for n in names]
    if args.workers == 1:
        reports = [_evaluate_pair(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(args.workers) as pool:
            reports = list(pool.map(_evaluate_pair, *zip(*jobs)))
    rows = [{"name": n, **r} for n, r in zip(names, reports)]
    if args.csv_out:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, ["name", *MetricReport.FIELDS], lineterminator="\n")
        writer.writeheader()
        writer.writerows({k: (v if k == "name" else repr(v)) for k, v in row.items()} for row in rows)
        atomic_write(args.csv_out, buf.getvalue())
    mean = {k: float(np.mean([r[k] for r in reports])) for k in MetricReport.FIELDS}
    _emit({"pairs": len(rows), "mean": mean, "results": rows})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if args.batch:
        return _evaluate_batch(args)
    try:
        pred, truth = load_mask_png(args.pred), load_mask_png(args.truth)
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    report = evaluate(pred, truth)
    if args.csv_out:
        atomic_write(args.csv_out, report.to_csv())
    _emit(report.to_dict())
    return EXIT_OK


def cmd_render(args) -> int:
    graph = _load_input_graph(args.input)
    dims = _graph_dims(graph, args.dims, want_3d=args.three_d)
    if args.three_d and len(dims) != 3:
        raise UsageError("--3d needs three dims")
    if not args.three_d:
        dims = dims[:2]
    if args.style and args.three_d:
        raise UsageError("--style applies to 2D renders only")
    mask = rasterize(graph, dims, fit=args.fit)
    if args.style:
        seed = args.seed if args.seed is not None else _default_seed()
        image = style_adapt(mask, StyleParams(args.noise_sigma, args.gamma, args.background, seed))
        save_png(image, args.out)
    else:
        _write_mask(mask, args.out)
    _emit({"out": str(args.out), "dims": list(dims), "vessel_cells": mask.count})
    return EXIT_OK


def cmd_bench(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    records = bench_dfs(args.sizes, args.reps, seed=seed)
    if args.out:
        atomic_write(args.out, records_to_csv(records))
    _emit({"records": [r.__dict__ for r in records], "out": str(args.out) if args.out else None})
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _sizes(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biovessel", description="Radius-threshold DFS vessel segmentation toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="grow a synthetic vessel tree")
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--width", type=float, default=512)
    g.add_argument("--height", type=float, default=512)
    g.add_argument("--depth", type=float, default=0, help="non-zero grows in 3D")
    g.add_argument("--attractors", type=int, default=ScaParams.attractor_count)
    g.add_argument("--attraction-radius", type=float, default=ScaParams.attraction_radius)
    g.add_argument("--kill-radius", type=float, default=ScaParams.kill_radius)
    g.add_argument("--step", type=float, default=ScaParams.step)
    g.add_argument("--max-iterations", type=int, default=ScaParams.max_iterations)
    g.add_argument("--terminal-radius", type=float, default=TaperParams.terminal_radius)
    g.add_argument("--murray-exponent", type=float, default=TaperParams.murray_exponent)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("segment", help="extract the primary vessel graph")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--rmin", type=float, default=0.2)
    s.add_argument("--root", default="max_radius", help="max_radius, id:N or x,y[,z]")
    s.add_argument("--snap-distance", type=float, default=10.0)
    s.add_argument("--delta", type=float, default=0.5, help="proximity slack for files without edges")
    s.add_argument("--dims", type=_dims)
    s.add_argument("--mask-out", type=Path)
    s.add_argument("--json-out", type=Path)
    s.set_defaults(func=cmd_segment)

    c = sub.add_parser("calibrate", help="radius statistics, R_min and sensitivity sweeps")
    c.add_argument("--in", dest="input", type=Path, required=True)
    c.add_argument("--strategy", choices=["fixed", "mean-over-max", "coverage-target"], default="fixed")
    c.add_argument("--target", type=float, help="capillary coverage for coverage-target")
    c.add_argument("--sweep", type=int, help="number of evenly spaced ratios in [0, 1]")
    c.add_argument("--ratios", help="explicit comma-separated ratios")
    c.add_argument("--truth", type=Path, help="PNG truth mask for the sweep")
    c.add_argument("--dims", type=_dims)
    c.add_argument("--csv-out", type=Path)
    c.set_defaults(func=cmd_calibrate)

    e = sub.add_parser("evaluate", help="IoU, Dice, SSIM and MSE of two PNG masks")
    e.add_argument("--pred", type=Path, required=True)
    e.add_argument("--truth", type=Path, required=True)
    e.add_argument("--csv-out", type=Path)
    e.add_argument("--batch", action="store_true", help="--pred/--truth are directories of same-named PNGs")
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("render", help="rasterize a graph to PNG or a raw volume")
    r.add_argument("--in", dest="input", type=Path, required=True)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--dims", type=_dims)
    r.add_argument("--3d", dest="three_d", action="store_true")
    r.add_argument("--fit", action="store_true")
    r.add_argument("--style", action="store_true")
    r.add_argument("--noise-sigma", type=float, default=StyleParams.noise_sigma)
    r.add_argument("--gamma", type=float, default=StyleParams.contrast_gamma)
    r.add_argument("--background", type=float, default=StyleParams.background_level)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_render)

    b = sub.add_parser("bench", help="time dfs_extract on fixed-seed trees")
    b.add_argument("--sizes", type=_sizes, default=[5000, 10000, 20000])
    b.add_argument("--reps", type=int, default=50)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", type=Path)
    b.set_defaults(func=cmd_bench)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    _emit({"error": type(exc).__name__, "message": str(exc), "exit_code": code})
    print(f"biovessel: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except ShapeMismatch as exc:
        return _fail(EXIT_SHAPE, exc)
    except (EmptyAfterFilter, EmptyInput, RootNotFound, OutOfBounds) as exc:
        return _fail(EXIT_DOMAIN, exc)
    except (UsageError, InvalidParams, FormatError, InvalidRadius, InvalidEdge, ValueError) as exc:
        return _fail(EXIT_USAGE, exc)
    except VesselError as exc:
        return _fail(EXIT_DOMAIN, exc)
    except OSError as exc:
        return _fail(EXIT_UNEXPECTED, IoError(f"{exc.strerror or exc}: {exc.filename or ''}".rstrip(": ")))
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        return _fail(EXIT_UNEXPECTED, exc)
