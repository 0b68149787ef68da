"""Wall-clock timing of the DFS extraction stage."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam
from .segment import SegmentorConfig, dfs_extract
from .synthesis import random_tree

MIN_REPETITIONS = 30


@dataclass(frozen=True)
class BenchRecord:
    graph_size: int
    median_ns: int
    p95_ns: int
    repetitions: int

    CSV_COLUMNS = ("graph_size", "median_ns", "p95_ns", "repetitions")


def time_dfs(graph, config: SegmentorConfig, reps: int, warmup: int = 5) -> np.ndarray:
    for _ in range(warmup):
        dfs_extract(graph, config)
    samples = np.empty(reps, dtype=np.int64)
    clock = time.perf_counter_ns
    for k in range(reps):
        t0 = clock()
        dfs_extract(graph, config)
        samples[k] = clock() - t0
    return samples


def bench_dfs(sizes, reps: int = 50, *, seed: int = 0, r_min_ratio: float = 0.0, warmup: int = 5) -> list[BenchRecord]:
    """Median and 95th-percentile ``dfs_extract`` time on fixed-seed trees of each size.

    The default ratio of 0 keeps every node, so the whole tree is traversed.
    """
    if reps < MIN_REPETITIONS:
        raise InvalidParam(f"need at least {MIN_REPETITIONS} repetitions, got {reps}")
    config = SegmentorConfig(r_min_ratio=r_min_ratio)
    records = []
    for size in sizes:
        graph = random_tree(int(size), seed)
        samples = time_dfs(graph, config, reps, warmup)
        median = int(np.percentile(samples, 50))
        p95 = int(np.percentile(samples, 95))
        records.append(BenchRecord(int(size), median, p95, reps))
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BenchRecord.CSV_COLUMNS)
    for r in records:
        w.writerow([r.graph_size, r.median_ns, r.p95_ns, r.repetitions])
    return buf.getvalue()
