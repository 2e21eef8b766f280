"""Compare the compiled and numpy kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--triangles 200000] [--repeat 5]

Both backends are imported directly, so the environment switch is not needed.
"""
import argparse
import time

import numpy as np

from heisenperim import _pykernels
from heisenperim.perimeter import _bary_points
from heisenperim.planar import ConvexBody

try:
    from heisenperim import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--triangles", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--level", type=int, default=2, help="subdivision level of the barycentric rule")
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    n = args.triangles
    p0, p1, p2 = (rng.normal(size=(n, 3)) for _ in range(3))
    w = rng.normal(size=(4 * n, 2))
    bary = _bary_points(args.level)
    cases = [("diamond", ConvexBody.diamond()), ("16-gon", ConvexBody.regular(16)), ("disk", ConvexBody.disk())]

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    print(f"{'kernel':<14}{'body':<9}" + "".join(f"{b:>12}" for b, _ in backends) + f"{'speedup':>10}")
    for name, Q in cases:
        V = np.ascontiguousarray(Q.vertices if Q.is_polygon else np.zeros((1, 2)))
        R = 0.0 if Q.is_polygon else Q.radius
        rows = {}
        if Q.is_polygon:
            rows["support_max"] = [best_of(lambda m=m: m.support_max(w, V), args.repeat) for _, m in backends]
        rows["tri_contents"] = [
            best_of(lambda m=m: m.tri_contents(p0, p1, p2, bary, V, R), args.repeat) for _, m in backends
        ]
        for kern, res in rows.items():
            if len(res) == 2:
                diff = float(np.max(np.abs(res[0][1] - res[1][1])))
                assert diff < 1e-9 * (1 + float(np.max(np.abs(res[0][1])))), diff
            ts = [t for t, _ in res]
            sp = f"{ts[0] / ts[-1]:>9.1f}x" if len(ts) == 2 else ""
            print(f"{kern:<14}{name:<9}" + "".join(f"{t * 1e3:>10.1f}ms" for t in ts) + sp)


if __name__ == "__main__":
    main()
