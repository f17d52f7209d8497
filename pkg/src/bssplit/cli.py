"""Command-line entry point: ``bssplit run-convergence | verify-oracle | export-mesh``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

from .harness import ConfigError, RunConfig, emit_csv, emit_plot, run_convergence
from .mesh import MeshError, build_disk_mesh, disk_mesh_from_rings, write_mesh
from .oracle import MAX_BULK_NODES, SUITE_RINGS, run_suite
from .problems import NEUMANN_TRACES, PROBLEMS

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

# command-line flag -> RunConfig field
_RUN_FLAGS = {
    "problem": "problem", "tau0": "tau0", "tau_levels": "tau_levels", "h0": "h0",
    "mesh_levels": "mesh_levels", "tmax": "t_max", "expmv_tol": "expmv_tol",
    "out": "out", "plot": "plot", "h1": "h1", "neumann": "neumann",
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                key, _, value = line.partition(" ")
            key = key.strip().replace("-", "_")
            if not key or not value.strip():
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            out[key] = value.strip()
    return out


def _coerce(name: str, value):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    kind = kinds[name]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("1", "true", "yes", "on"):
                return True
            if str(value).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise ConfigError(f"bad value {value!r} for {name}") from None
    return value


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        try:
            raw = read_config_file(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        for key, value in raw.items():
            name = _RUN_FLAGS.get(key, key)
            if name not in {f.name for f in fields(RunConfig)}:
                raise ConfigError(f"unknown config key {key!r}")
            values[name] = _coerce(name, value)
    for flag, name in _RUN_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            values[name] = _coerce(name, value)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def cmd_run_convergence(args) -> int:
    cfg = build_run_config(args)
    report = run_convergence(cfg)
    if report.rows:
        emit_csv(report, cfg.out or sys.stdout)
        if cfg.plot:
            emit_plot(report, cfg.plot)
    for level, tau, msg in report.failures:
        print(f"failed: mesh level {level}, tau={tau}: {msg}", file=sys.stderr)
    return EXIT_FAILED if report.failures or not report.rows else EXIT_OK


def cmd_verify_oracle(args) -> int:
    cap = args.mesh_size_cap
    if cap < 1 or cap > MAX_BULK_NODES:
        raise ConfigError(f"--mesh-size-cap must lie in [1, {MAX_BULK_NODES}]")
    meshes = [m for m in (disk_mesh_from_rings(j) for j in SUITE_RINGS) if m.n_nodes <= cap]
    if not meshes:
        raise ConfigError(f"no suite mesh has at most {cap} bulk nodes")
    results = run_suite(meshes)
    lines = [r.line() for r in results]
    text = "\n".join(lines) + "\n"
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def cmd_export_mesh(args) -> int:
    if not 0 < args.h <= 1:
        raise ConfigError(f"--h must lie in (0, 1], got {args.h}")
    mesh = build_disk_mesh(args.h)
    write_mesh(mesh, args.out)
    print(f"wrote {mesh.n_nodes} nodes, {len(mesh.triangles)} triangles, h={mesh.h:.4f} to {args.out}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bssplit", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log each run")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run-convergence", help="temporal convergence study, CSV to --out or stdout")
    r.add_argument("--config", help="key = value file; command-line flags take precedence")
    r.add_argument("--problem", choices=PROBLEMS)
    r.add_argument("--tau0", type=float)
    r.add_argument("--tau-levels", type=int)
    r.add_argument("--h0", type=float)
    r.add_argument("--mesh-levels", type=int)
    r.add_argument("--tmax", type=float)
    r.add_argument("--expmv-tol", type=float)
    r.add_argument("--out")
    r.add_argument("--plot", help="SVG path for the log-log error plot")
    r.add_argument("--neumann", choices=NEUMANN_TRACES,
                   help="normal-derivative discretization for the dynbc problems")
    r.add_argument("--h1", action="store_const", const=True, help="report discrete H1 errors")
    r.set_defaults(func=cmd_run_convergence)

    o = sub.add_parser("verify-oracle", help="dense identity checks on tiny meshes")
    o.add_argument("--mesh-size-cap", type=int, default=MAX_BULK_NODES)
    o.add_argument("--report", help="also write the report to this file")
    o.set_defaults(func=cmd_verify_oracle)

    e = sub.add_parser("export-mesh", help="write a disk mesh as text")
    e.add_argument("--h", type=float, required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export_mesh)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MeshError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
