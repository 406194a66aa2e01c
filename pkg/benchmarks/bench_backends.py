"""Wall time of the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py [--size 128] [--repeat 3]

Both backends render the same images (to float rounding), so this only
reports speed. Timings are best-of-repeat and advisory.
"""

import argparse
import time

import numpy as np

from visbitmask import PassConfig, bitmask_pass, builtin_scene, render_gtao, render_ssr_gi, synthesize_gbuffer


def best(fn, repeat):
    out = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t0)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="corner")
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    gb = synthesize_gbuffer(builtin_scene(args.scene, args.size, args.size))
    cfg = PassConfig(samples=8)
    passes = {
        "bitmask ao+gi+ambient": lambda be: bitmask_pass(gb, cfg, backend=be),
        "gtao": lambda be: render_gtao(gb, cfg, backend=be),
        "ssr gi (2 rays)": lambda be: render_ssr_gi(gb, cfg, 2, backend=be),
    }
    print(f"scene={args.scene} size={args.size}x{args.size} samples={cfg.samples} repeat={args.repeat}")
    print(f"{'pass':<24}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}{'max |diff|':>12}")
    for name, fn in passes.items():
        a, b = fn("numba"), fn("numpy")  # also warms the JIT cache
        a = a if isinstance(a, dict) else {"out": a}
        b = b if isinstance(b, dict) else {"out": b}
        diff = max(float(np.max(np.abs(a[k] - b[k]))) for k in a)
        t_nb = best(lambda: fn("numba"), args.repeat)
        t_np = best(lambda: fn("numpy"), args.repeat)
        print(f"{name:<24}{1e3 * t_nb:10.1f}{1e3 * t_np:10.1f}{t_np / t_nb:9.1f}x{diff:12.2e}")


if __name__ == "__main__":
    main()
