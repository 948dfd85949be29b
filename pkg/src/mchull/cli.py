"""Command-line entry point: ``mchull {shape,flow,hull,verify,export}``.

Configuration comes from built-in defaults, then an optional JSON file
(``--config``), then explicit flags; the resolved configuration is echoed to
``<out>/config.json``. Exit status: 0 success, 1 exact-check failure, 2 usage
or precondition error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .flow import FlowParams, default_h, run
from .grid import GridError, GridSpec, read_mchv, write_mchv, write_pgm
from .hull import HullParams, mean_convex_hull, obj_mesh
from .scenes import DEFAULT_MARGIN, KINDS, SceneSpec, generate
from .stencil import VALID_ORDERS, build_stencil, default_order

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

_SCENE_DIM = {"l_shape": 2, "star": 2, "torus": 3, "catenoid_region": 3, "omega_theta0": 3}

GLOBAL_DEFAULTS = {"grid": "128", "dim": None, "stencil": None, "seed": 0, "out": "out", "jobs": 1}
COMMAND_DEFAULTS = {
    "shape": {"scene": "ball", "params": {}, "margin": DEFAULT_MARGIN},
    "flow": {"scene": "ball", "params": {}, "margin": DEFAULT_MARGIN, "input": None,
             "h": None, "max_steps": 500, "snapshot_every": 0},
    "hull": {"scene": "ball", "params": {}, "margin": DEFAULT_MARGIN, "input": None,
             "eps": None, "hs": None, "max_steps": 500, "obj": False},
    "verify": {"suite": "submodularity,lattice,comparison", "trials": None},
    "export": {"input": None, "obj": False, "pgm": False},
}


class UsageError(Exception):
    pass


def _floats(text: str) -> list:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as err:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from err


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k, float(v)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--grid", help="cells per axis: N or NxM or NxMxK (default 128)")
    g.add_argument("--dim", type=int, choices=(2, 3), help="dimension when --grid is a single N")
    g.add_argument("--stencil", type=int, help="stencil order (2D: 4,8,16; 3D: 6,18,26)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--config", help="JSON file with configuration keys")
    g.add_argument("--jobs", type=int, help="worker processes for independent runs")

    p = argparse.ArgumentParser(prog="mchull", parents=[common],
                                description="Mean-convex hulls by discrete flows with obstacle.")
    p.add_argument("--version", action="version", version=f"mchull {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def scene_args(sp):
        sp.add_argument("--scene", choices=KINDS)
        sp.add_argument("--param", action="append", type=_param, metavar="KEY=VALUE",
                        help="scene parameter override (repeatable)")
        sp.add_argument("--margin", type=int)

    sp = sub.add_parser("shape", parents=[common], help="rasterize a scene")
    scene_args(sp)

    sp = sub.add_parser("flow", parents=[common], help="run one flow with obstacle")
    scene_args(sp)
    sp.add_argument("--in", dest="input", help="obstacle volume (MCHV) instead of a scene")
    sp.add_argument("--h", type=float, help="time step in units of dx^2")
    sp.add_argument("--max-steps", type=int)
    sp.add_argument("--snapshot-every", type=int)

    sp = sub.add_parser("hull", parents=[common], help="mean-convex hull pipeline")
    scene_args(sp)
    sp.add_argument("--in", dest="input", help="obstacle volume (MCHV) instead of a scene")
    sp.add_argument("--eps", help="dilation radii in units of dx, decreasing (e.g. 2,1,0.5)")
    sp.add_argument("--hs", help="time steps in units of dx^2, decreasing")
    sp.add_argument("--max-steps", type=int)
    sp.add_argument("--obj", action="store_true", default=None, help="also write an OBJ mesh")

    sp = sub.add_parser("verify", parents=[common], help="run check suites")
    sp.add_argument("--suite", help="comma-separated suites")
    sp.add_argument("--trials", type=int)

    sp = sub.add_parser("export", parents=[common], help="convert an MCHV volume")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--obj", action="store_true", default=None)
    sp.add_argument("--pgm", action="store_true", default=None)
    return p


def parse_config(argv=None) -> dict:
    """Resolve defaults, then the JSON file, then flags; reject unknown keys."""
    ns = build_parser().parse_args(argv)
    cmd = ns.command
    allowed = {**GLOBAL_DEFAULTS, **COMMAND_DEFAULTS[cmd]}
    cfg = dict(allowed)
    file_cfg = {}
    if ns.config:
        try:
            file_cfg = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"config: cannot read {ns.config}: {err}") from err
        if not isinstance(file_cfg, dict):
            raise UsageError("config: top level must be an object")
        file_cfg.pop("command", None)
        file_cfg.pop("overridden", None)
        for k in file_cfg:
            if k not in allowed:
                raise UsageError(f"config: unknown key {k!r} for command {cmd!r}")
        cfg.update(file_cfg)
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None}
    if "param" in flags:
        flags["params"] = {**cfg.get("params", {}), **dict(flags.pop("param"))}
    overridden = sorted(k for k in flags if k in file_cfg and file_cfg[k] != flags[k])
    cfg.update(flags)
    cfg["command"] = cmd
    cfg["overridden"] = overridden
    _validate(cfg)
    return cfg


def _check_type(cfg, key, types):
    v = cfg.get(key)
    if v is not None and not isinstance(v, types) or isinstance(v, bool) and bool not in types:
        raise UsageError(f"config: {key!r} has wrong type {type(v).__name__}")


def _validate(cfg: dict) -> None:
    for k in ("seed", "jobs", "margin", "max_steps", "snapshot_every", "trials", "dim", "stencil"):
        _check_type(cfg, k, (int,))
    for k in ("h",):
        _check_type(cfg, k, (int, float))
    for k in ("grid", "out", "scene", "input", "suite"):
        _check_type(cfg, k, (str,))
    for k in ("eps", "hs"):
        _check_type(cfg, k, (str, list))
    if not isinstance(cfg.get("params", {}), dict):
        raise UsageError("config: 'params' must be an object")
    if cfg["jobs"] < 1:
        raise UsageError("config: 'jobs' must be >= 1")
    if cfg.get("scene") is not None and cfg["scene"] not in KINDS:
        raise UsageError(f"config: unknown scene {cfg['scene']!r}; choose from {KINDS}")
    spec = grid_of(cfg)
    order = cfg["stencil"]
    if order is not None and order not in VALID_ORDERS[spec.dim]:
        raise UsageError(f"--stencil {order}: valid orders for dim {spec.dim} are "
                         f"{VALID_ORDERS[spec.dim]}")
    if cfg.get("input") and not Path(cfg["input"]).is_file():
        raise UsageError(f"input file not found: {cfg['input']}")
    if cfg["command"] == "export" and not cfg.get("input"):
        raise UsageError("export needs --in")


def grid_of(cfg: dict) -> GridSpec:
    """Grid centered on the origin with half-width 1 along the longest axis."""
    try:
        dims = [int(x) for x in str(cfg["grid"]).lower().split("x")]
    except ValueError as err:
        raise UsageError(f"--grid: cannot parse {cfg['grid']!r}") from err
    if len(dims) == 1:
        dim = cfg.get("dim") or _SCENE_DIM.get(cfg.get("scene"), 2)
        dims = dims * dim
    if len(dims) not in (2, 3):
        raise UsageError("--grid: dimension must be 2 or 3")
    try:
        dx = 2.0 / max(dims)
        return GridSpec(tuple(dims), dx, tuple(-0.5 * n * dx for n in dims))
    except GridError as err:
        raise UsageError(f"--grid: {err}") from err


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _obstacle(cfg: dict, spec: GridSpec):
    if cfg.get("input"):
        E = read_mchv(cfg["input"])
        return E, {"input": cfg["input"]}
    s = SceneSpec(cfg["scene"], spec, dict(cfg.get("params") or {}), cfg["margin"])
    return generate(s), s.to_dict()


def _stencil(cfg, spec):
    return build_stencil(spec.dim, cfg["stencil"] or default_order(spec.dim), spec.spacing)


def _write_set(out: Path, stem: str, E) -> None:
    write_mchv(out / f"{stem}.mchv", E)
    if E.dim == 2:
        write_pgm(out / f"{stem}.pgm", E)


def _setup(cfg: dict):
    """Build inputs; precondition failures here are usage errors."""
    cmd = cfg["command"]
    if cmd in ("verify",):
        return {}
    if cmd == "export":
        return {"E": read_mchv(cfg["input"])}
    spec = read_mchv(cfg["input"]).spec if cfg.get("input") else grid_of(cfg)
    E, scene = _obstacle(cfg, spec)
    st = _stencil(cfg, E.spec)
    job = {"E": E, "scene": scene, "stencil": st}
    dx2 = E.spec.spacing ** 2
    if cmd == "flow":
        h = cfg["h"] * dx2 if cfg["h"] is not None else default_h(E.spec.shape, E.spec.spacing)
        job["params"] = FlowParams(h, E, st, max_steps=cfg["max_steps"])
    elif cmd == "hull":
        eps = _floats(cfg["eps"]) if isinstance(cfg["eps"], str) else (cfg["eps"] or [])
        hs = _floats(cfg["hs"]) if isinstance(cfg["hs"], str) else (cfg["hs"] or [])
        job["params"] = HullParams(E, st, epsilons=tuple(e * E.spec.spacing for e in eps),
                                   hs=tuple(h * dx2 for h in hs), max_steps=cfg["max_steps"])
    return job


def _run_verify(cfg: dict, out: Path) -> int:
    from . import verify as V

    suites = [s.strip() for s in cfg["suite"].split(",") if s.strip()]
    for s in suites:
        if s not in V.SUITES:
            raise UsageError(f"unknown suite {s!r}; choose from {V.SUITES}")
    seed, jobs, n = cfg["seed"], cfg["jobs"], cfg["trials"]
    reports = []
    sweep = None

    def displacement_sweep():
        nonlocal sweep
        if sweep is None:
            obst, st = V.displacement_scene()
            dx2 = obst.spec.spacing ** 2
            sweep = V.sweep(obst, st, [h * dx2 for h in (256, 128, 64, 32)])
        return sweep

    for s in suites:
        if s == "submodularity":
            reports.append(V.check_submodularity(n or 1000, 32, seed, dim=2, jobs=jobs))
            reports.append(V.check_submodularity(n or 500, 16, seed, dim=3, jobs=jobs))
        elif s == "lattice":
            reports.append(V.check_lattice(n or 2000, seed, jobs=jobs))
        elif s == "comparison":
            reports.append(V.check_comparison(n or 500, seed, jobs=jobs))
        elif s == "minimizing_hull":
            spec = GridSpec.centered(64, 2)
            disk = generate(SceneSpec("ball", spec, {"r": 10 * spec.spacing}))
            reports.append(V.check_minimizing_hull(disk, build_stencil(2, 16, spec.spacing),
                                                   samples=n or 200, seed=seed))
        elif s == "displacement":
            reports.append(V.check_displacement(displacement_sweep()))
        elif s == "holder":
            reports.append(V.check_holder(displacement_sweep()[-1]))
        elif s == "density":
            tr = displacement_sweep()[0]
            E = tr.steps[0].set
            reports.append(V.check_density(E, tr.params.stencil, samples=n or 50, seed=seed))
        elif s == "h_monotone":
            tr = displacement_sweep()
            reports.append(V.check_h_monotone({t.params.h: t.final for t in tr},
                                              tr[0].params.stencil))
    _dump(out / "checks.json", [r.to_dict() for r in reports])
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} [{r.mode}] trials={r.trials} "
              f"violations={r.violations}")
    exact_fail = any(r.mode == "exact" and not r.passed for r in reports)
    return EXIT_CHECK if exact_fail else EXIT_OK


def execute(cfg: dict, job: dict) -> int:
    out = Path(cfg["out"])
    cmd = cfg["command"]
    if cmd == "verify":
        return _run_verify(cfg, out)
    if cmd == "shape":
        E = job["E"]
        _write_set(out, "shape", E)
        _dump(out / "shape.json", {"scene": job["scene"], "count": E.count(),
                                   "volume": E.count() * E.spec.cell_volume})
    elif cmd == "flow":
        p = job["params"]
        tr = run(p)
        _write_set(out, "final", tr.final)
        if cfg["snapshot_every"] > 0:
            snap = out / "snapshots"
            snap.mkdir(exist_ok=True)
            for s in tr.steps[cfg["snapshot_every"] - 1::cfg["snapshot_every"]]:
                write_mchv(snap / f"step_{s.i:05d}.mchv", s.set)
        _dump(out / "trajectory.json", {"scene": job["scene"], **tr.to_dict()})
        if not tr.stationary:
            print(f"warning: not stationary after {p.max_steps} steps", file=sys.stderr)
    elif cmd == "hull":
        rep = mean_convex_hull(job["params"], jobs=cfg["jobs"])
        _write_set(out, "hull", rep.hull)
        _dump(out / "hull_report.json", {"scene": job["scene"], **rep.to_dict()})
        if cfg["obj"] and rep.hull.dim == 3:
            (out / "hull.obj").write_text(obj_mesh(rep.hull))
        if rep.degraded:
            print("warning: some runs did not reach a stationary set", file=sys.stderr)
    elif cmd == "export":
        E = job["E"]
        stem = Path(cfg["input"]).stem
        if cfg["obj"]:
            (out / f"{stem}.obj").write_text(obj_mesh(E))
        if cfg["pgm"]:
            write_pgm(out / f"{stem}.pgm", E)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        _dump(out / "config.json", cfg)
        job = _setup(cfg)
    except SystemExit as err:  # argparse
        return EXIT_USAGE if err.code not in (0, None) else EXIT_OK
    except (UsageError, GridError, ValueError, OSError) as err:
        print(f"mchull: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return execute(cfg, job)
    except UsageError as err:
        print(f"mchull: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # noqa: BLE001 - reported as a runtime failure
        print(f"mchull: runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
