"""Batch command-line entry points.

Subcommands:

* ``mc``             -- Monte Carlo classification study over model classes
* ``track``          -- run a scenario through the tracker and score it
* ``particle-study`` -- replay one stream at several particle counts

Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import metrics, rbpf, sim

EXIT_CONFIG = 2
EXIT_RUNTIME = 1


class ConfigError(Exception):
    pass


def _tracker_config(scenario: sim.Scenario, args) -> rbpf.TrackerConfig:
    noise = {s.sensor_id: s.noise_cov for s in scenario.sensors}
    return rbpf.TrackerConfig(
        classes=tuple(args.classes.split(",")),
        num_particles=args.particles,
        seed=args.seed,
        heading_mode=args.heading_mode,
        ego=scenario.ego,
        sensor_noise=noise)


def _load_scenario(args) -> sim.Scenario:
    path = Path(args.scenario)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    scenario = sim.load_scenario(path)
    if args.seed is not None:
        scenario.seed = args.seed
    else:
        args.seed = scenario.seed
    letters = set(args.sensors.upper())
    unknown = letters - set(sim.SENSOR_LETTERS)
    if unknown:
        raise ConfigError(f"unknown sensor letters: {sorted(unknown)}")
    kinds = {sim.SENSOR_LETTERS[c] for c in letters}
    scenario.sensors = [s for s in scenario.sensors if s.kind in kinds
                        or s.kind == "gps"]
    if not scenario.sensors:
        raise ConfigError("sensor subset leaves no sensors enabled")
    return scenario


def cmd_mc(args) -> int:
    classes = tuple(args.classes.split(","))
    for c in classes:
        if c not in sim.SPEED_RANGES:
            raise ConfigError(f"unknown class {c!r}")
    if args.iterations < 0:
        raise ConfigError("iterations must be >= 0")
    report = sim.run_mc_study(classes, args.iterations,
                              seed=args.seed or 0)
    if args.iterations == 0:
        print("no iterations requested; empty report")
        return 0
    print(report.table())
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        np.savetxt(Path(args.out) / "mc_mean_eps.txt", report.mean_eps)
        np.savetxt(Path(args.out) / "mc_confusion.txt", report.confusion)
    return 0


def cmd_track(args) -> int:
    scenario = _load_scenario(args)
    config = _tracker_config(scenario, args)
    stream, truth_log = sim.run_scenario(scenario,
                                         label_classes=config.classes)
    snapshots = rbpf.track_stream(stream, config,
                                  output_rate=scenario.output_rate,
                                  t_start=0.0, t_end=scenario.duration)
    report = metrics.score_run(truth_log, snapshots, ego=scenario.ego)
    print(report.table())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        sim.save_stream(stream, out / "stream.txt")
        rbpf.save_snapshots(snapshots, out / "snapshots.txt")
        with open(out / "report.txt", "w") as fh:
            fh.write(report.table() + "\n")
        trace = np.array([[s.time, len(s.records)] for s in snapshots])
        np.savetxt(out / "trace_object_count.txt", trace,
                   header="t n_objects")
    return 0


def cmd_particle_study(args) -> int:
    scenario = _load_scenario(args)
    config = _tracker_config(scenario, args)
    stream, _ = sim.run_scenario(scenario, label_classes=config.classes)
    counts = tuple(int(c) for c in args.counts.split(","))
    results = metrics.particle_study(stream, config, counts=counts,
                                     benchmark=args.benchmark,
                                     output_rate=scenario.output_rate)
    print("particles  rms_objects  rms_classified")
    for count in counts:
        overall, classified = results[count]
        print(f"{count:9d}  {overall.rms:11.3f}  {classified.rms:14.3f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for count in counts:
            overall, classified = results[count]
            np.savetxt(out / f"cdf_overall_{count}.txt", overall.cdf)
            np.savetxt(out / f"cdf_classified_{count}.txt", classified.cdf)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointtrack",
        description="joint data association, tracking and classification")
    sub = parser.add_subparsers(dest="command", required=True)

    mc = sub.add_parser("mc", help="Monte Carlo classification study")
    mc.add_argument("--classes", default="cyclist,pedestrian")
    mc.add_argument("--iterations", type=int, default=100)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--out", default=None)
    mc.set_defaults(func=cmd_mc)

    common = dict(scenario=True)
    for name, func in (("track", cmd_track),
                       ("particle-study", cmd_particle_study)):
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=common["scenario"])
        p.add_argument("--particles", type=int, default=8)
        p.add_argument("--sensors", default="CLR",
                       help="sensor subset, letters from C, L, R")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--heading-mode", choices=("split", "raw"),
                       default="split")
        p.add_argument("--classes", default="car,pedestrian")
        p.add_argument("--out", default=None)
        if name == "particle-study":
            p.add_argument("--counts", default="1,4,8,12,16,20")
            p.add_argument("--benchmark", type=int, default=50)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
