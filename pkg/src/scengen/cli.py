"""Command-line driver.

Exit codes: 0 success, 2 parse/resolution/construction error, 3 sampling
exhaustion, 4 world or schema error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ExhaustionError, ScenError, WorldError
from .evaluator import run_program
from .parser import parse
from .sampler import ALL_PASSES, SamplerConfig, apply_pruning, sample_scene
from .scenedoc import write_scene_json, write_scene_svg
from .worlds import BUNDLED_WORLDS, resolve_world

EXIT_OK = 0
EXIT_FRONTEND = 2
EXIT_EXHAUSTED = 3
EXIT_WORLD = 4


def _search_paths(scenario_path: str, extra) -> list:
    paths = [os.path.dirname(os.path.abspath(scenario_path))]
    paths.extend(extra or [])
    env = os.environ.get("SCENGEN_PATH")
    if env:
        paths.extend(p for p in env.split(os.pathsep) if p)
    return paths


def _load_model(args):
    world = resolve_world(args.world)
    with open(args.scenario, "r", encoding="utf-8") as fh:
        source = fh.read()
    program = parse(source)
    model = run_program(program, world, source_name=args.scenario,
                        search_paths=_search_paths(args.scenario, args.path))
    return world, model


def _parse_prune(spec: str) -> tuple:
    if spec == "all":
        return ALL_PASSES
    if spec == "none":
        return ()
    passes = tuple(p.strip() for p in spec.split(",") if p.strip())
    for p in passes:
        if p not in ALL_PASSES:
            raise ScenError(f"unknown pruning pass {p!r} "
                            f"(expected all, none, or a list of {', '.join(ALL_PASSES)})")
    return passes


def cmd_generate(args) -> int:
    world, model = _load_model(args)
    passes = _parse_prune(args.prune)
    overrides, stats = apply_pruning(model, passes) if passes else ({}, {})
    config = SamplerConfig(max_iterations=args.max_rejections, prune=passes,
                           seed=args.seed, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    reports = []
    for index in range(args.count):
        scene, report = sample_scene(model, config, (args.seed, index),
                                     overrides=overrides, stats=stats)
        base = os.path.join(args.out, f"scene_{index:03d}")
        if args.format in ("json", "both"):
            write_scene_json(scene, base + ".json")
        if args.format in ("svg", "both"):
            write_scene_svg(scene, world, base + ".svg")
        reports.append({
            "scene": index,
            "iterations": report.iterations,
            "rejections": dict(sorted(report.rejections.items())),
            "pruned_area_fraction": {k: round(v, 6) for k, v in sorted(report.pruned_area.items())},
            "wall_time_s": round(report.wall_time, 6),
        })
        print(f"scene {index}: accepted after {report.iterations} iteration(s)",
              file=sys.stderr)
    if args.report:
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(reports, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_check(args) -> int:
    _load_model(args)
    print(f"{args.scenario}: ok", file=sys.stderr)
    return EXIT_OK


def cmd_worlds(args) -> int:
    if args.world_command == "validate":
        world = resolve_world(args.world)
        print(f"{world.name}: ok ({len(world.regions)} regions, "
              f"{len(world.fields)} fields)", file=sys.stderr)
        return EXIT_OK
    if args.world_command == "list":
        for name in BUNDLED_WORLDS:
            print(name)
        return EXIT_OK
    raise ScenError(f"unknown worlds subcommand {args.world_command!r}")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scengen",
                                 description="Compile scenario programs and sample scenes.")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample scenes from a scenario")
    gen.add_argument("scenario")
    gen.add_argument("--world", required=True,
                     help="bundled world name or path to a .world.json file")
    gen.add_argument("-n", "--count", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="out")
    gen.add_argument("--format", choices=["json", "svg", "both"], default="json")
    gen.add_argument("--max-rejections", type=int, default=10000)
    gen.add_argument("--prune", default="all",
                     help="all, none, or a comma-separated subset of "
                          "containment,heading,width")
    gen.add_argument("--report", action="store_true",
                     help="write report.json with iteration statistics")
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--path", action="append", help="extra import search directory")
    gen.set_defaults(fn=cmd_generate)

    chk = sub.add_parser("check", help="parse, resolve and construct without sampling")
    chk.add_argument("scenario")
    chk.add_argument("--world", required=True)
    chk.add_argument("--path", action="append")
    chk.set_defaults(fn=cmd_check)

    wld = sub.add_parser("worlds", help="world utilities")
    wsub = wld.add_subparsers(dest="world_command", required=True)
    val = wsub.add_parser("validate")
    val.add_argument("world")
    val.set_defaults(fn=cmd_worlds)
    lst = wsub.add_parser("list")
    lst.set_defaults(fn=cmd_worlds)

    return ap


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.fn(args)
    except WorldError as err:
        print(f"world error: {err}", file=sys.stderr)
        return EXIT_WORLD
    except ExhaustionError as err:
        print(f"sampling exhausted: {err}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except ScenError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FRONTEND
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FRONTEND


if __name__ == "__main__":
    sys.exit(main())
