"""Command-line front end.

    qzeno run --preset fig1a --out fig1a.csv
    qzeno run --config my.conf --grid 0.01,5,200,log --threads 4
    qzeno presets
    qzeno validate my.conf

Exit status: 0 on success, 2 for configuration or I/O problems, 3 when the
computation fails numerically (the offending tau is reported).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as cfg
from .analysis import GridSpec, sweep
from .errors import QZenoError, ValidationError
from .output import format_csv, format_json, sidecar

THREADS_ENV = "QZENO_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parse_grid(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected tau_min,tau_max,count,spacing")
    try:
        return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]), parts[3])
    except (ValueError, ValidationError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise cfg.ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}", kind="parse")
    return 1


def _sidecar_path(out: Path) -> Path:
    path = out.with_suffix(".json")
    return path if path != out else out.with_name(out.stem + ".sidecar.json")


def run_config(config, out: Path, threads: int = 1) -> list:
    curves = sweep(config.model, config.bath, config.protocols, config.grid, threads=threads)
    if config.output_format == "json":
        out.write_text(format_json(sidecar(config, curves, include_samples=True)),
                       encoding="utf-8", newline="\n")
    else:
        out.write_text(format_csv(curves), encoding="utf-8", newline="\n")
        _sidecar_path(out).write_text(format_json(sidecar(config, curves)),
                                      encoding="utf-8", newline="\n")
    return curves


def _err(msg):
    print(msg, file=sys.stderr)


def cmd_run(args) -> int:
    try:
        if args.preset:
            config = cfg.load_preset(args.preset)
            stem = args.preset
        else:
            config = cfg.load(args.config)
            stem = Path(args.config).stem
        config = config.with_overrides(grid=args.grid, output_format=args.format,
                                       output_path=args.out)
        threads = _threads(args.threads)
    except ValidationError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    out = Path(config.output_path or f"{stem}.{config.output_format}")
    try:
        run_config(config, out, threads)
    except QZenoError as exc:
        where = f" at tau={exc.tau!r}" if exc.tau is not None else ""
        _err(f"numerical error{where}: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return EXIT_CONFIG
    print(out)
    return EXIT_OK


def cmd_presets(args) -> int:
    for pid in cfg.PRESET_IDS:
        flat = cfg.load_preset(pid).to_flat()
        print(f"{pid}: {flat.pop('description', '')}")
        for k, v in flat.items():
            print(f"    {k} = {v}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        if args.preset:
            cfg.load_preset(args.preset)
        else:
            cfg.load(args.path)
    except cfg.ConfigError as exc:
        print(json.dumps({"ok": False, "errors": [exc.to_dict()]}))
        return EXIT_CONFIG
    except ValidationError as exc:
        print(json.dumps({"ok": False, "errors": [
            {"key": None, "line": None, "kind": "validation", "message": str(exc)}]}))
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qzeno", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="sweep a preset or config file and write CSV/JSON")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=cfg.PRESET_IDS)
    src.add_argument("--config", type=Path)
    r.add_argument("--out", type=Path)
    r.add_argument("--format", choices=("csv", "json"))
    r.add_argument("--grid", type=_parse_grid, metavar="TAU_MIN,TAU_MAX,COUNT,SPACING")
    r.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    r.set_defaults(func=cmd_run)

    sub.add_parser("presets", help="list the built-in presets").set_defaults(func=cmd_presets)

    v = sub.add_parser("validate", help="check a config without computing")
    vsrc = v.add_mutually_exclusive_group(required=True)
    vsrc.add_argument("path", nargs="?", type=Path)
    vsrc.add_argument("--preset", choices=cfg.PRESET_IDS)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
