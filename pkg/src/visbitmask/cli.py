"""Command-line interface: ``synth``, ``render``, ``compare`` and ``bench``.

Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines, metrics
from ._jit import DEFAULT_BACKEND
from .buffers import CameraModel, GBuffer, validate
from .environment import DEFAULT_ENV, AmbientEnvironment
from .imageio import TONE_MAPS, PFMError, load_pfm, save_pfm, save_png
from .passes import SECTOR_COUNTS, ConfigError, PassConfig, bitmask_pass
from .scenegen import SCENE_NAMES, builtin_scene, synthesize_gbuffer

METHODS = ("bitmask", "gtao", "gtao-falloff", "bent", "normal", "ssr")
MODES = ("ao", "gi", "ambient", "all")
PLANES = ("depth", "normal", "light", "albedo")
OUTPUTS = ("ao", "gi", "ambient")
# what each method can produce
PRODUCES = {
    "bitmask": ("ao", "gi", "ambient"),
    "gtao": ("ao",),
    "gtao-falloff": ("ao",),
    "bent": ("ao", "ambient"),
    "normal": ("ao", "ambient"),
    "ssr": ("gi",),
}
BENCH_GRID = ((0.8, 8), (1.0, 12), (1.0, 16), (2.0, 16), (3.0, 16))


class UsageError(Exception):
    pass


# --- manifests --------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(repr(float(x)) for x in np.ravel(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_manifest(path, entries: dict) -> None:
    with open(path, "w", encoding="ascii") as f:
        for k, v in entries.items():
            f.write(f"{k}={_fmt(v)}\n")


def read_manifest(path) -> dict:
    out = {}
    with open(path, encoding="ascii") as f:
        for n, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _floats(text, n):
    vals = [float(x) for x in text.split(",")]
    if len(vals) != n:
        raise UsageError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def camera_entries(cam: CameraModel) -> dict:
    return {"width": cam.width, "height": cam.height, "vertical_fov": float(cam.vertical_fov),
            "near": float(cam.near), "far": float(cam.far), "rotation": cam.rotation,
            "translation": cam.translation}


def camera_from_manifest(m: dict) -> CameraModel:
    try:
        return CameraModel(int(m["width"]), int(m["height"]), float(m["vertical_fov"]),
                           float(m["near"]), float(m["far"]),
                           np.array(_floats(m["rotation"], 9)).reshape(3, 3),
                           np.array(_floats(m["translation"], 3)))
    except KeyError as e:
        raise UsageError(f"manifest lacks camera key {e.args[0]!r}") from None


def scene_from_manifest(m: dict):
    if m.get("scene") not in SCENE_NAMES:
        raise UsageError(f"manifest names no builtin scene (scene={m.get('scene')!r})")
    params = {}
    if "wall_thickness" in m:
        params["thickness"] = float(m["wall_thickness"])
    return builtin_scene(m["scene"], **params)


# --- synth ------------------------------------------------------------------

def synth_camera(scene, width, height, fov_deg):
    base = scene.camera
    return CameraModel(width, height, math.radians(fov_deg), base.near, base.far, base.rotation,
                       base.translation)


def cmd_synth(args) -> int:
    params = {} if args.wall_thickness is None else {"thickness": args.wall_thickness}
    if params and args.scene != "thin_wall":
        raise UsageError("--wall-thickness only applies to the thin_wall scene")
    try:
        scene = builtin_scene(args.scene, **params)
    except ValueError as e:
        raise UsageError(str(e)) from None
    camera = synth_camera(scene, args.width, args.height, args.fov)
    gb = synthesize_gbuffer(scene, camera)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in PLANES:
        save_pfm(getattr(gb, name), out / f"{name}.pfm")
    entries = {"scene": args.scene}
    if params:
        entries["wall_thickness"] = float(args.wall_thickness)
    entries.update(camera_entries(camera))
    entries["seed"] = args.seed
    write_manifest(out / "manifest.txt", entries)
    print(f"wrote {', '.join(p + '.pfm' for p in PLANES)} and manifest.txt to {out}")
    return 0


# --- render -----------------------------------------------------------------

def load_gbuffer(path) -> tuple[GBuffer, dict]:
    path = Path(path)
    if not path.is_dir():
        raise UsageError(f"{path} is not a directory written by 'synth'")
    manifest = read_manifest(path / "manifest.txt")
    camera = camera_from_manifest(manifest)
    planes = {name: load_pfm(path / f"{name}.pfm") for name in PLANES}
    gb = GBuffer(camera=camera, **planes)
    validate(gb)
    return gb, manifest


def config_from_args(args) -> PassConfig:
    return PassConfig(radius=args.radius, samples=args.samples, slices=args.slices,
                      sectors=args.sectors, thickness=args.thickness,
                      thickness_linear=args.thickness_linear,
                      step_mode={"const": "constant", "exp": "exponential"}[args.steps],
                      seed=args.seed, frames=args.frames, ambient_subregions=args.ambient_samples)


def render_outputs(gb, config, method, wanted, env, threads=1, backend=None, rays=2) -> dict:
    ex = dict(threads=threads, backend=backend)
    out = {}
    if method == "bitmask":
        res = bitmask_pass(gb, config, env, gi="gi" in wanted, ambient="ambient" in wanted, **ex)
        out = {k: res[k] for k in wanted}
    elif method in ("gtao", "gtao-falloff"):
        out["ao"] = baselines.render_gtao(gb, config, "linear" if method == "gtao-falloff" else "none", **ex)
    elif method in ("bent", "normal"):
        res = bitmask_pass(gb, config, env, gi=False, ambient=True, **ex)
        out["ao"] = res["ao"]
        if "ambient" in wanted:
            fn = baselines.render_bent_normal_ambient if method == "bent" else baselines.render_normal_ambient
            out["ambient"] = fn(gb, config, env, **ex)
    elif method == "ssr":
        out["gi"] = baselines.render_ssr_gi(gb, config, rays, **ex)
    return {k: v for k, v in out.items() if k in wanted}


def cmd_render(args) -> int:
    if args.half_res != "off":
        raise UsageError("half-resolution rendering is not implemented")
    try:
        config = config_from_args(args)
        env = AmbientEnvironment.parse(args.env) if args.env else DEFAULT_ENV
    except (ConfigError, ValueError) as e:
        raise UsageError(str(e)) from None
    wanted = PRODUCES[args.method] if args.mode == "all" else (args.mode,)
    if any(w not in PRODUCES[args.method] for w in wanted):
        raise UsageError(f"method {args.method!r} cannot produce {args.mode!r} "
                         f"(it produces {', '.join(PRODUCES[args.method])})")
    gb, manifest = load_gbuffer(args.input)
    start = time.perf_counter()
    out = render_outputs(gb, config, args.method, wanted, env, args.threads, args.backend, args.rays)
    elapsed = time.perf_counter() - start
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    for name, img in out.items():
        save_pfm(img.astype(np.float32), dest / f"{name}.pfm")
        if not args.no_png:
            save_png(img, dest / f"{name}.png", args.tone_map or ("clamp_gamma22" if name == "ao" else "reinhard_gamma22"))
    entries = dict(manifest)
    entries.update({"method": args.method, "mode": args.mode, "env": env.to_string(),
                    "radius": config.radius, "samples": config.samples, "slices": config.slices,
                    "sectors": config.sectors, "thickness": config.thickness,
                    "thickness_linear": config.thickness_linear, "steps": config.step_mode,
                    "seed": config.seed, "frames": config.frames,
                    "ambient_samples": config.ambient_subregions})
    if args.method == "ssr":
        entries["rays"] = args.rays
    if args.method == "gtao-falloff":
        entries["falloff"] = "linear"
    write_manifest(dest / "manifest.txt", entries)
    print(f"{args.method}: wrote {', '.join(sorted(out))} to {dest} ({elapsed:.2f} s)")
    return 0


# --- compare ----------------------------------------------------------------

def _surface_mask(manifest, shape):
    try:
        scene = scene_from_manifest(manifest)
        camera = camera_from_manifest(manifest)
    except UsageError:
        return None
    if (camera.height, camera.width) != tuple(shape[:2]):
        return None
    return synthesize_gbuffer(scene, camera).surface


def _load_dir_or_file(path):
    path = Path(path)
    if path.is_dir():
        images = {n: load_pfm(path / f"{n}.pfm") for n in OUTPUTS if (path / f"{n}.pfm").exists()}
        manifest = read_manifest(path / "manifest.txt") if (path / "manifest.txt").exists() else {}
        return images, manifest
    if path.suffix.lower() != ".pfm" or not path.exists():
        raise UsageError(f"{path} is neither an output directory nor a .pfm file")
    return {path.stem: load_pfm(path)}, {}


def cmd_compare(args) -> int:
    from .oracle import world_ao_reference

    a_imgs, a_man = _load_dir_or_file(args.a)
    if args.reference:
        if args.b is not None:
            raise UsageError("give either a second input or --reference, not both")
        if "ao" not in a_imgs:
            raise UsageError("--reference compares AO; the input has no ao.pfm")
        scene = scene_from_manifest(a_man)
        camera = camera_from_manifest(a_man)
        radius = float(a_man.get("radius", PassConfig.radius))
        ref = world_ao_reference(scene, camera, args.rays, radius, seed=args.seed)
        b_imgs, label = {"ao": ref}, f"world ray-cast reference ({args.rays} rays, max_dist {radius:g})"
    else:
        if args.b is None:
            raise UsageError("compare needs two inputs or --reference")
        b_imgs, _ = _load_dir_or_file(args.b)
        label = str(args.b)
        if len(a_imgs) == 1 and len(b_imgs) == 1:
            b_imgs = {next(iter(a_imgs)): next(iter(b_imgs.values()))}
    common = [k for k in a_imgs if k in b_imgs]
    if not common:
        raise UsageError("the inputs share no output planes")
    print(f"compare {args.a} vs {label}")
    for name in common:
        a, b = a_imgs[name], b_imgs[name]
        if a.shape != b.shape:
            raise UsageError(f"{name}: shapes differ {a.shape} vs {b.shape}")
        mask = _surface_mask(a_man, a.shape)
        stats = metrics.summary(a, b, mask)
        print(f"[{name}]" + ("" if mask is not None else " (unmasked)"))
        print(metrics.format_report(stats))
        if args.diff:
            diff = np.abs(a.astype(np.float64) - b)
            target = Path(args.diff)
            if len(common) > 1:
                target = target.with_name(f"{target.stem}_{name}{target.suffix}")
            save_pfm(diff.astype(np.float32), target)
    return 0


# --- bench ------------------------------------------------------------------

def _time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(scene="poles", size=256, repeat=5, threads=1, backend=None, compare_backends=False):
    """Best-of-``repeat`` wall times over the radius / sample grid plus sample scaling."""
    gb = synthesize_gbuffer(builtin_scene(scene, size, size))

    def run(cfg, be=backend):
        return lambda: bitmask_pass(gb, cfg, gi=True, ambient=False, threads=threads, backend=be)

    run(PassConfig(samples=2))()  # compile / warm caches
    result = {"grid": [(r, n, _time(run(PassConfig(radius=r, samples=n)), repeat)) for r, n in BENCH_GRID]}
    t8 = t32 = math.inf
    for _ in range(repeat):  # interleaved so drift hits both sides equally
        t8 = min(t8, _time(run(PassConfig(radius=1.0, samples=8)), 1))
        t32 = min(t32, _time(run(PassConfig(radius=1.0, samples=32)), 1))
    result["scaling"] = t32 / t8
    if compare_backends:
        small = PassConfig(radius=1.0, samples=8)
        run(small, "numpy")()
        result["backends"] = (_time(run(small, "numba"), repeat), _time(run(small, "numpy"), 1))
    return result


def cmd_bench(args) -> int:
    backend = args.backend
    print(f"bench: scene={args.scene} size={args.size}x{args.size} backend={backend} "
          f"threads={args.threads} repeat={args.repeat} (best-of wall time; advisory)")
    res = run_bench(args.scene, args.size, args.repeat, args.threads, backend, args.compare_backends)
    print(f"{'radius':>7} {'samples':>8} {'ms':>10} {'rel':>7}")
    base = res["grid"][0][2]
    for radius, samples, t in res["grid"]:
        print(f"{radius:7.1f} {samples:8d} {1e3 * t:10.1f} {t / base:7.2f}")
    print(f"sample scaling: time(N_s=32) / time(N_s=8) = {res['scaling']:.2f} (linear cost gives ~4)")
    if "backends" in res:
        t_nb, t_np = res["backends"]
        print(f"backends at radius 1, 8 samples: numba {1e3 * t_nb:.1f} ms, numpy {1e3 * t_np:.1f} ms, "
              f"speedup {t_np / t_nb:.1f}x")
    return 0


# --- argument parsing -------------------------------------------------------

def _add_render_flags(p):
    d = PassConfig()
    p.add_argument("--radius", type=float, default=d.radius, help="hemisphere radius in world units")
    p.add_argument("--samples", type=int, default=d.samples, help="steps per horizon side")
    p.add_argument("--slices", type=int, default=d.slices, help="slices per pixel per frame")
    p.add_argument("--sectors", type=int, default=d.sectors, choices=SECTOR_COUNTS)
    p.add_argument("--thickness", type=float, default=d.thickness)
    p.add_argument("--thickness-linear", type=float, default=d.thickness_linear,
                   help="thickness growth k in t*(1 + k*|p|)")
    p.add_argument("--steps", choices=("const", "exp"), default="const")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--frames", type=int, default=d.frames, help="jittered frames to accumulate")
    p.add_argument("--ambient-samples", type=int, default=d.ambient_subregions,
                   help="ambient subregions per slice")
    p.add_argument("--method", choices=METHODS, default="bitmask")
    p.add_argument("--mode", choices=MODES, default="all")
    p.add_argument("--env", default=None, help="constant:r,g,b or gradient:top:horizon[:axis]")
    p.add_argument("--rays", type=int, default=2, help="rays per pixel for --method ssr")
    p.add_argument("--half-res", choices=("off",), default="off",
                   help="reserved; half-resolution rendering is not implemented")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--backend", choices=("numba", "numpy"), default=DEFAULT_BACKEND)
    p.add_argument("--no-png", action="store_true", help="skip PNG previews")
    p.add_argument("--tone-map", choices=TONE_MAPS, default=None,
                   help="preview tone map (default: clamp for AO, Reinhard for color)")
    p.add_argument("--config", help="key=value file of defaults; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="visbitmask", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="ray cast a builtin scene into G-buffer PFMs")
    p.add_argument("scene", choices=SCENE_NAMES)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--fov", type=float, default=60.0, help="vertical field of view in degrees")
    p.add_argument("--wall-thickness", type=float, default=None, help="thin_wall only")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="render AO / GI / ambient from a G-buffer directory")
    p.add_argument("input", help="directory written by 'synth'")
    p.add_argument("--out", required=True)
    _add_render_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("compare", help="metrics between two renders or against a ray-cast reference")
    p.add_argument("a")
    p.add_argument("b", nargs="?")
    p.add_argument("--reference", action="store_true", help="compare AO against world-space ray casting")
    p.add_argument("--rays", type=int, default=256, help="reference rays per pixel")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--diff", help="write |a - b| to this PFM")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="relative timings over the radius / sample grid")
    p.add_argument("--scene", choices=SCENE_NAMES, default="poles")
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--backend", choices=("numba", "numpy"), default=DEFAULT_BACKEND)
    p.add_argument("--compare-backends", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def _apply_config_file(parser, argv):
    """Load ``--config`` values as subparser defaults so explicit flags win."""
    pre = parser.parse_args(argv)
    if getattr(pre, "config", None) is None:
        return pre
    values = read_manifest(pre.config)
    sub = parser._subparsers._group_actions[0].choices[pre.command]  # noqa: SLF001
    known = {a.dest for a in sub._actions}  # noqa: SLF001
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "input", "out"):
            raise UsageError(f"{pre.config}: unknown setting {key!r}")
        action = next(a for a in sub._actions if a.dest == dest)  # noqa: SLF001
        if action.const is True:
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            value = action.type(raw) if action.type else raw
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{pre.config}: {key}={raw} is not one of {list(action.choices)}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config_file(parser, argv)
        return args.func(args)
    except SystemExit as e:  # argparse usage errors
        return int(e.code or 0)
    except UsageError as e:
        print(f"visbitmask: error: {e}", file=sys.stderr)
        return 2
    except (OSError, PFMError, RuntimeError, ValueError) as e:
        print(f"visbitmask: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
