"""Command-line entry point: ``tarsim chain|leg|sim|gait``.

Every run writes its outputs into ``--out`` together with a
``manifest.json`` recording the command line, the configuration hash and
the input file hashes, so any result can be reproduced bit for bit.

Exit codes: 0 success, 1 domain error (unreachable target, no cycles
found, bad input data), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import chain as chain_mod
from . import contact as contact_mod
from . import gait as gait_mod
from . import leg as leg_mod
from . import stats as stats_mod
from . import svgplot
from .config import Config, ConfigError, load_config

DEFAULT_CONFIG_NAME = "tarsim.conf"
CONFIG_ENV_VAR = "TARSIM_CONFIG"


class DomainError(RuntimeError):
    """Input-data problem mapped to exit code 1."""


# -- generic lossless tables ------------------------------------------------

def write_table(path, header, rows) -> None:
    """CSV writer using repr for floats, so reads round-trip exactly."""
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(float(v))
        return str(v)

    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(v) for v in row) + "\n")


def read_table(path):
    """Read a CSV written by write_table: (header, rows of strings)."""
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return header, rows


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


class RunContext:
    """Output directory, format selection and manifest bookkeeping."""

    def __init__(self, cfg: Config, out: Path, fmt: str, seed=None,
                 config_path=None):
        self.cfg = cfg
        self.out = out
        self.fmt = fmt
        self.seed = seed
        self.config_path = config_path
        self.inputs: dict = {}
        self.outputs: list = []

    @property
    def csv(self) -> bool:
        return self.fmt in ("csv", "both")

    @property
    def svg(self) -> bool:
        return self.fmt in ("svg", "both")

    def note_input(self, path) -> None:
        self.inputs[str(path)] = _sha256(path)

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.outputs.append(str(p))
        return p

    def write_manifest(self, argv) -> None:
        if not self.outputs:
            return
        manifest = {
            "command": ["tarsim"] + list(argv),
            "tool_version": __version__,
            "config_file": str(self.config_path) if self.config_path else None,
            "config_hash": self.cfg.hash(),
            "input_hashes": self.inputs,
            "outputs": sorted(self.outputs),
            "seed": self.seed,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _parse_vector(text: str, n: int, what: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise DomainError(f"{what}: expected comma-separated numbers, "
                          f"got {text!r}") from None
    if len(vals) != n:
        raise DomainError(f"{what}: expected {n} values, got {len(vals)}")
    return np.array(vals)


# -- chain command -----------------------------------------------------------

def cmd_chain(args, ctx: RunContext) -> int:
    chain = ctx.cfg.build_chain()
    solver_tol = ctx.cfg.getfloat("solver", "tol_mm", 1e-9)
    solver_iters = ctx.cfg.getint("solver", "max_iter", 200)

    def solve(pull):
        return chain_mod.solve_bend_from_pull(chain, pull, tol=solver_tol,
                                              max_iter=solver_iters)

    if args.pull is not None:
        if args.pull < 0:
            raise DomainError("--pull must be >= 0")
        state = solve(args.pull)
        rows = []
        for i in range(len(chain.segments)):
            rows.append([f"segment_{i + 1}",
                         float(np.degrees(state.theta[i])),
                         float(state.compression[i]),
                         float(state.slack[i]),
                         float(chain_mod.segment_pull(chain.segments[i],
                                                      float(state.theta[i])))])
        total_bend = chain_mod.total_bend_angle(state)
        total_pull = chain_mod.chain_pull(chain, state)
        rows.append(["total", total_bend, float(state.compression.sum()),
                     float(state.slack.sum()), total_pull])
        if ctx.csv:
            write_table(ctx.path("chain_state.csv"),
                        ["segment", "theta_deg", "compression_mm",
                         "slack_mm", "pull_mm"], rows)
        print(f"pull {args.pull} mm -> total bend {total_bend:.4f} deg, "
              f"total pull {total_pull:.6f} mm, spring force "
              f"{chain_mod.restoring_force(chain, state):.4f} N")

    if args.sweep is not None:
        try:
            start, stop, step_ = (float(v) for v in args.sweep.split(":"))
        except ValueError:
            raise DomainError(
                f"--sweep: expected start:stop:step, got {args.sweep!r}") \
                from None
        if step_ <= 0 or stop < start or start < 0:
            raise DomainError("--sweep: need 0 <= start <= stop and step > 0")
        pulls = np.arange(start, stop + 0.5 * step_, step_)
        bends = []
        with warnings.catch_warnings():
            # sweeping past the chain capacity clamps by design
            warnings.simplefilter("ignore", UserWarning)
            for p in pulls:
                bends.append(chain_mod.total_bend_angle(solve(float(p))))
        if ctx.csv:
            write_table(ctx.path("bend_vs_pull.csv"),
                        ["pull_mm", "total_bend_deg"],
                        [[float(p), float(b)] for p, b in zip(pulls, bends)])
        if ctx.svg:
            svgplot.line_chart(ctx.path("bend_vs_pull.svg"),
                               [("total bend", pulls, bends)],
                               title="Tarsal bend vs string pull",
                               xlabel="pull (mm)", ylabel="bend (deg)")
        print(f"sweep {start}..{stop} mm: bend {bends[0]:.3f} -> "
              f"{bends[-1]:.3f} deg over {len(pulls)} points")

    if args.stiffness:
        d_max = 1.5 * chain.vertical_cap / chain.k_rigid
        disp = np.linspace(0.0, d_max, 101)
        curves = {}
        for mode in ("rigid", "flexible"):
            force = chain_mod.stiffness_curve(chain, mode, disp)
            curves[mode] = force
            if ctx.csv:
                write_table(ctx.path(f"stiffness_{mode}.csv"),
                            ["displacement_mm", "force_N"],
                            [[float(d), float(f)]
                             for d, f in zip(disp, force)])
        if ctx.svg:
            svgplot.line_chart(
                ctx.path("stiffness.svg"),
                [(m, disp, curves[m]) for m in ("rigid", "flexible")],
                title="Force vs displacement",
                xlabel="displacement (mm)", ylabel="force (N)")
        print(f"stiffness curves written (rigid caps at "
              f"{chain.vertical_cap} N)")
    return 0


# -- leg command --------------------------------------------------------------

def cmd_leg(args, ctx: RunContext) -> int:
    model = ctx.cfg.build_leg()
    ik_kwargs = ctx.cfg.ik_params()

    if args.fk is not None:
        q = np.radians(_parse_vector(args.fk, 4, "--fk"))
        pose = leg_mod.forward_kinematics(model, q)
        p, r = pose.position, pose.rotation
        if ctx.csv:
            write_table(ctx.path("leg_fk.csv"),
                        ["x_mm", "y_mm", "z_mm",
                         "r11", "r12", "r13", "r21", "r22", "r23",
                         "r31", "r32", "r33"],
                        [[float(p[0]), float(p[1]), float(p[2]),
                          *(float(v) for v in r.flatten())]])
        print(f"fk({args.fk} deg) -> tip ({p[0]:.4f}, {p[1]:.4f}, "
              f"{p[2]:.4f}) mm")

    if args.ik is not None:
        target = _parse_vector(args.ik, 3, "--ik")
        q0 = np.radians(_parse_vector(args.q0, 4, "--q0")) \
            if args.q0 else 0.5 * (model.lower + model.upper)
        result = leg_mod.inverse_kinematics(model, target, q0, **ik_kwargs)
        qd = np.degrees(result.q)
        if ctx.csv:
            write_table(ctx.path("leg_ik.csv"),
                        ["coxa_deg", "trochanter_deg", "femur_deg",
                         "tibia_deg", "residual_mm", "iterations"],
                        [[*(float(v) for v in qd),
                          result.residual_mm, result.iterations]])
        print(f"ik({args.ik}) -> q = ({qd[0]:.4f}, {qd[1]:.4f}, "
              f"{qd[2]:.4f}, {qd[3]:.4f}) deg, residual "
              f"{result.residual_mm:.3e} mm, {result.iterations} iterations")

    if args.retarget is not None:
        ctx.note_input(args.retarget)
        try:
            traj = leg_mod.load_trajectory(args.retarget)
        except (OSError, ValueError) as err:
            raise DomainError(f"--retarget: {err}") from None
        scale = args.scale if args.scale is not None \
            else ctx.cfg.getfloat("retarget", "scale", 8.0)
        origin = _parse_vector(args.origin, 3, "--origin") \
            if args.origin else None
        scaled = leg_mod.retarget_trajectory(traj, scale, origin)
        leg_mod.save_trajectory(ctx.path("retargeted.csv"), scaled)
        print(f"retargeted {len(traj)} samples by x{scale}")
        if args.to_joints:
            qs = leg_mod.trajectory_to_joints(model, scaled, **ik_kwargs)
            if ctx.csv:
                write_table(ctx.path("joints.csv"),
                            ["t_ms", "coxa_deg", "trochanter_deg",
                             "femur_deg", "tibia_deg"],
                            [[float(t), *(float(v) for v in np.degrees(q))]
                             for t, q in zip(scaled.t_ms, qs)])
            print(f"joint series written ({len(qs)} samples)")
    return 0


# -- sim command --------------------------------------------------------------

def cmd_sim(args, ctx: RunContext) -> int:
    chain = ctx.cfg.build_chain()
    leg = ctx.cfg.build_leg()
    mesh = ctx.cfg.build_mesh()
    limits = ctx.cfg.build_limits()
    try:
        scenario = ctx.cfg.build_scenario(args.scenario, chain, mesh)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    dt = ctx.cfg.getfloat("sim", "dt_ms", 10.0)
    claw_len = ctx.cfg.claw_params()["length_mm"]

    samples, final = contact_mod.run_demo_cycle(
        leg, chain, mesh, scenario, dt_ms=dt, limits=limits,
        claw_length=claw_len)
    if ctx.csv:
        contact_mod.save_demo_csv(ctx.path(f"{scenario.name}_demo.csv"),
                                  samples)
        write_table(ctx.path(f"{scenario.name}_events.csv"),
                    ["t_ms", "event"],
                    [[float(t), kind] for t, kind in final.events])
    if ctx.svg and samples:
        t = [s.t_ms for s in samples]
        svgplot.line_chart(
            ctx.path(f"{scenario.name}_heights.svg"),
            [("claw", t, [s.claw_z for s in samples]),
             ("mesh", t, [s.mesh_z for s in samples]),
             ("rest", t, [mesh.rest_height] * len(samples))],
            title=f"Scenario {scenario.name}",
            xlabel="time (ms)", ylabel="height (mm)")
    for t, kind in final.events:
        print(f"event t={t:.0f} ms: {kind}")
    failures = sum(1 for _, kind in final.events if kind == "ClawFailure")
    if failures and not scenario.expect_failures:
        print(f"{failures} ClawFailure event(s) in scenario "
              f"{scenario.name!r}", file=sys.stderr)
        return 1
    return 0


# -- gait command -------------------------------------------------------------

def _parse_pair(text: str):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (7, 8):
        raise DomainError(
            f"--pair: expected label,mean_a,sd_a,n_a,mean_b,sd_b,n_b"
            f"[,published_p], got {text!r}")
    try:
        a = stats_mod.GroupStats(float(parts[1]), float(parts[2]),
                                 int(parts[3]))
        b = stats_mod.GroupStats(float(parts[4]), float(parts[5]),
                                 int(parts[6]))
        pub = float(parts[7]) if len(parts) == 8 else None
    except ValueError as err:
        raise DomainError(f"--pair {text!r}: {err}") from None
    return stats_mod.ConditionPair(parts[0], a, b, pub)


def _report_rows(rows):
    return [[r["label"], r["mean_a"], r["sd_a"], r["n_a"],
             r["mean_b"], r["sd_b"], r["n_b"], r["df"], r["t"],
             r["p_one_tail"], r["p_two_tail"], r["published_p_one_tail"],
             r["flag"]] for r in rows]


def cmd_gait(args, ctx: RunContext) -> int:
    if args.summary_stats:
        if not args.pair:
            raise DomainError("--summary-stats needs at least one --pair")
        pairs = [_parse_pair(p) for p in args.pair]
        rows = stats_mod.comparison_report(pairs)
        text = stats_mod.format_report_text(rows)
        print(text)
        if ctx.csv:
            write_table(ctx.path("report.csv"),
                        list(stats_mod.REPORT_COLUMNS), _report_rows(rows))
        with open(ctx.path("report.txt"), "w") as fh:
            fh.write(text + "\n")
        return 0

    if not args.input:
        raise DomainError("gait needs --input files (or --summary-stats "
                          "with --pair)")
    conditions = args.condition or []
    if conditions and len(conditions) != len(args.input):
        raise DomainError("--condition must be given once per --input")
    if not conditions:
        conditions = ["all"] * len(args.input)

    ap = ctx.cfg.analytics_params()
    cycle_kwargs = dict(hysteresis_frac=ap["hysteresis_frac"],
                        min_separation_ms=ap["min_separation_ms"],
                        amplitude_mode=ap["amplitude_mode"])
    metric_rows = []
    grouped: dict = {}
    for path, condition in zip(args.input, conditions):
        ctx.note_input(path)
        try:
            rec = gait_mod.load_recording(path, rate=ap["rate_fps"])
        except (OSError, ValueError) as err:
            raise DomainError(f"{path}: {err}") from None
        try:
            tm = gait_mod.trial_metrics(
                rec, args.side, interpolate_gaps=ap["interpolate_gaps"],
                **cycle_kwargs)
        except gait_mod.NoCyclesFound as err:
            print(f"warning: {path}: no cycles found ({err})",
                  file=sys.stderr)
            metric_rows.append([str(path), condition, args.side, 0,
                                None, None])
            continue
        metric_rows.append([
            str(path), condition, args.side, len(tm.cycle_times),
            tm.mean_cycle_time,
            tm.mean_bend_amplitude if tm.bend_amplitudes else None,
        ])
        grouped.setdefault(condition, []).append(tm)
    if ctx.csv:
        write_table(ctx.path("metrics.csv"),
                    ["input", "condition", "side", "n_cycles",
                     "mean_cycle_ms", "mean_amplitude_deg"], metric_rows)
    for row in metric_rows:
        cyc = "n/a" if row[4] is None else f"{row[4]:.1f} ms"
        print(f"{row[0]} [{row[1]}]: {row[3]} cycles, mean cycle {cyc}")

    labels = [c for c in grouped if len(grouped[c]) >= 2]
    if len(labels) == 2:
        pairs = []
        for metric, pick in (("cycle_time_ms",
                              lambda m: m.mean_cycle_time),
                             ("bend_amplitude_deg",
                              lambda m: m.mean_bend_amplitude)):
            groups = []
            for c in labels:
                vals = np.array([pick(m) for m in grouped[c]])
                groups.append(stats_mod.GroupStats(
                    float(vals.mean()), float(vals.std(ddof=1)), len(vals)))
            pairs.append(stats_mod.ConditionPair(
                f"{metric}:{labels[0]}_vs_{labels[1]}", *groups))
        rows = stats_mod.comparison_report(pairs)
        text = stats_mod.format_report_text(rows)
        print(text)
        if ctx.csv:
            write_table(ctx.path("report.csv"),
                        list(stats_mod.REPORT_COLUMNS), _report_rows(rows))
        with open(ctx.path("report.txt"), "w") as fh:
            fh.write(text + "\n")
    return 0


# -- parser / dispatch --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"configuration file (default "
                        f"./{DEFAULT_CONFIG_NAME}, or ${CONFIG_ENV_VAR})")
    common.add_argument("--out", default="tarsim_out",
                        help="output directory (default tarsim_out)")
    common.add_argument("--format", choices=("csv", "svg", "both"),
                        default="csv", help="output formats to emit")
    common.add_argument("--seed", type=int, default=None,
                        help="seed recorded for randomized workflows")

    parser = argparse.ArgumentParser(
        prog="tarsim",
        description="Tendon-driven tarsus simulator and gait analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chain", parents=[common],
                       help="tarsal chain bend/pull tables and curves")
    p.add_argument("--pull", type=float, help="string pull in mm")
    p.add_argument("--sweep", help="pull sweep start:stop:step (mm)")
    p.add_argument("--stiffness", action="store_true",
                   help="emit force-displacement curves for both modes")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("leg", parents=[common],
                       help="leg forward/inverse kinematics and retargeting")
    p.add_argument("--fk", help="joint angles in degrees: q1,q2,q3,q4")
    p.add_argument("--ik", help="tip target in mm: x,y,z")
    p.add_argument("--q0", help="IK start joint angles in degrees")
    p.add_argument("--retarget", help="trajectory CSV to scale onto the leg")
    p.add_argument("--scale", type=float, default=None,
                   help="retarget scale factor (default from config, 8)")
    p.add_argument("--origin", help="scaling origin x,y,z (default first "
                   "sample)")
    p.add_argument("--to-joints", action="store_true",
                   help="also solve the retargeted trajectory to joints")
    p.set_defaults(func=cmd_leg)

    p = sub.add_parser("sim", parents=[common],
                       help="run a scripted leg-on-mesh scenario")
    p.add_argument("--scenario", required=True,
                   help="scenario name (walk_cycle, tubed, or from config)")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("gait", parents=[common],
                       help="marker-recording metrics and group statistics")
    p.add_argument("--input", action="append",
                   help="marker CSV (repeatable)")
    p.add_argument("--condition", action="append",
                   help="condition label, one per --input")
    p.add_argument("--side", choices=("left", "right"), default="right")
    p.add_argument("--summary-stats", action="store_true",
                   help="bypass recordings; t-test summary pairs directly")
    p.add_argument("--pair", action="append",
                   help="label,mean_a,sd_a,n_a,mean_b,sd_b,n_b[,published_p]")
    p.set_defaults(func=cmd_gait)
    return parser


def _resolve_config(args) -> tuple[Config, Path | None]:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return load_config(path), path
    env = os.environ.get(CONFIG_ENV_VAR)
    if env:
        path = Path(env)
        if not path.exists():
            raise ConfigError(f"${CONFIG_ENV_VAR} points to a missing "
                              f"file: {path}")
        return load_config(path), path
    path = Path(DEFAULT_CONFIG_NAME)
    if path.exists():
        return load_config(path), path
    return Config.default(), None


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg, config_path = _resolve_config(args)
        ctx = RunContext(cfg, Path(args.out), args.format, args.seed,
                         config_path)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    try:
        rc = args.func(args, ctx)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (DomainError, leg_mod.NotReachable,
            gait_mod.NoCyclesFound, stats_mod.ZeroVariance) as err:
        print(f"error: {err}", file=sys.stderr)
        ctx.write_manifest(argv)
        return 1
    ctx.write_manifest(argv)
    return rc


def entry() -> None:
    sys.exit(main())
