"""
Timing the traversal
====================

Median and 95th percentile wall time of ``dfs_extract`` for a few tree sizes,
followed by the same numbers as CSV.
"""

from biovessel.bench import bench_dfs, records_to_csv

records = bench_dfs([1_000, 5_000, 10_000, 20_000], reps=50, seed=0)
for r in records:
    print(f"{r.graph_size:>6} nodes  median {r.median_ns / 1e6:.3f} ms  p95 {r.p95_ns / 1e6:.3f} ms")
print(records_to_csv(records))
