"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--json]

Times spray evaluation, an RK4 geodesic and the polyline length/gradient on a
curved 3-D conformal config and checks that both backends agree.
"""

import argparse
import json
import timeit

import numpy as np

from wqfinsler.acceptance import conformal_config
from wqfinsler.geodesic import x_step
from wqfinsler.kernels import BACKENDS, build_metric


def workloads(cfg, metric):
    hx = x_step(cfg)
    x = np.array([0.3, -0.2, 0.1])
    y = np.array([0.5, 1.0, -0.4])
    nodes = np.linspace([-1.0, -0.5, 0.2], [1.0, 0.8, -0.3], 64)
    return {
        "spray x1000": (lambda: [metric.spray(x, y, hx) for _ in range(1000)], lambda: metric.spray(x, y, hx)),
        "rk4 1000 steps": (
            lambda: metric.rk4(x, y, 1.0, 1000, hx, cfg.lo, cfg.hi),
            lambda: metric.rk4(x, y, 1.0, 1000, hx, cfg.lo, cfg.hi)[0][-1],
        ),
        "polyline 64 nodes x1000": (lambda: [metric.polyline(nodes) for _ in range(1000)], lambda: metric.polyline(nodes)[1]),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args()

    cfg = conformal_config("square_shift2")
    results = {}
    values = {}
    for backend in BACKENDS:
        metric = build_metric(cfg, backend)
        for name, (job, probe) in workloads(cfg, metric).items():
            best = min(timeit.repeat(job, number=1, repeat=args.repeat))
            results.setdefault(name, {})[backend] = best
            values.setdefault(name, {})[backend] = np.asarray(probe())

    rows = []
    for name, times in results.items():
        row = {"workload": name, **{f"{b}_s": t for b, t in times.items()}}
        if "cython" in times:
            row["speedup"] = times["python"] / times["cython"]
            row["max_abs_diff"] = float(np.max(np.abs(values[name]["python"] - values[name]["cython"])))
        rows.append(row)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if "cython" not in BACKENDS:
        print("compiled backend unavailable; timing the python backend only")
    for row in rows:
        line = f"{row['workload']:<26} python {row['python_s'] * 1e3:9.2f} ms"
        if "cython_s" in row:
            line += f"   cython {row['cython_s'] * 1e3:8.2f} ms   x{row['speedup']:6.1f}   diff {row['max_abs_diff']:.1e}"
        print(line)


if __name__ == "__main__":
    main()
