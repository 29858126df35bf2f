"""Command-line front end: run scenarios, design the probing signal, sweep
parameters.

Configs are INI-style text (see the bundled files under ``configs/``); the
``--config`` argument accepts either a filesystem path or a bundled name.
Every run writes its outputs plus a ``manifest.json`` with SHA-256
checksums; the simulations are fixed-step and seed-free, so re-running the
same config reproduces identical checksums.  A run directory that failed
mid-write carries a ``.failed`` marker.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, svgplot
from .controller import ForbiddenGainError, GainConfig, check_gain
from .dither import DitherParams, design_dither, dither_field, dither_signal, gauss_legendre, verify_integral_identity
from .heat import Grid, SolverConfig
from .loop import (
    ScenarioConfig,
    StaticMap,
    run_average_system,
    run_esc,
    run_standard_esc,
    save_average_csv,
    save_field_csv,
    save_trajectory_csv,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

SWEEP_PARAMS = ("a", "omega", "K")


class ConfigError(Exception):
    pass


def _resolve_config(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.is_file():
        return p
    bundled = resources.files("diffesc.configs").joinpath(f"{name_or_path}.cfg")
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config not found: {name_or_path!r} (no such file or bundled name)")


def _parse_ini(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not read or not parser.sections():
        raise ConfigError(f"config {path} is empty or has no sections")
    return parser


def _get(parser, section, key, cast, default=None, required=False):
    try:
        raw = parser.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError):
        if required:
            raise ConfigError(f"missing required key [{section}] {key}")
        return default
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc


class RunPlan:
    """Parsed scenario: kind plus everything needed to execute it."""

    def __init__(self, parser: configparser.ConfigParser):
        self.kind = _get(parser, "scenario", "kind", str, required=True)
        if self.kind not in ("esc", "average", "standard"):
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        self.duration = _get(parser, "scenario", "duration", float, required=True)
        self.record_every = _get(parser, "scenario", "record_every", int, default=10)
        self.snapshot_every = _get(parser, "scenario", "snapshot_every", int, default=0)

        self.map = StaticMap(
            y_star=_get(parser, "map", "y_star", float, required=True),
            theta_star=_get(parser, "map", "theta_star", float, required=True),
            H=_get(parser, "map", "curvature", float, required=True),
        )
        length = _get(parser, "actuator", "length", float, required=True)
        self.dither = DitherParams(
            a=_get(parser, "dither", "amplitude", float, required=True),
            omega=_get(parser, "dither", "frequency", float, required=True),
            L=length,
        )
        self.K = _get(parser, "gains", "K", float, required=True)
        corner = _get(parser, "gains", "corner", float, default=10.0)
        k_bar_default = self.K * self.map.H
        self.K_bar = _get(parser, "average", "K_bar", float, default=k_bar_default)
        self.gains = GainConfig(K=self.K, K_bar=self.K_bar, c=corner)
        self.washout_corner = _get(parser, "gains", "washout_corner", float, default=1.0)
        self.hessian_corner = _get(parser, "gains", "hessian_corner", float, default=1.0)

        self.dt = _get(parser, "actuator", "dt", float, required=True)
        self.nodes = _get(parser, "actuator", "nodes", int, default=101)
        self.scheme = _get(parser, "actuator", "scheme", str, default="crank_nicolson")
        self.diffusion = _get(parser, "actuator", "diffusion", float, default=1.0)
        self.initial_theta_hat = _get(parser, "actuator", "initial_theta_hat", float, default=0.0)
        self.grid = Grid(L=length, n=self.nodes)
        self.solver = SolverConfig(dt=self.dt, scheme=self.scheme)

        self.initial_vartheta = _get(parser, "average", "initial_vartheta", float, default=1.0)
        self.allow_unstable = _get(parser, "average", "allow_unstable", bool, default=False)

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig(
            map=self.map,
            dither=self.dither,
            gains=self.gains,
            solver=self.solver,
            grid=self.grid,
            T_final=self.duration,
            initial_theta_hat=self.initial_theta_hat,
            record_every=self.record_every,
            snapshot_every=self.snapshot_every,
            washout_corner=self.washout_corner,
            hessian_corner=self.hessian_corner,
            diffusion=self.diffusion,
        )

    def validate(self) -> None:
        self.map.validate()
        self.dither.validate()
        self.solver.validate()
        if self.duration <= 0:
            raise ConfigError("scenario duration must be > 0")
        if self.kind == "esc":
            if abs(self.diffusion - 1.0) > 1e-12:
                raise ConfigError(
                    f"esc scenarios require actuator diffusion 1, got {self.diffusion}; "
                    "the probing-signal design is only valid there"
                )
            check_gain(self.gains.K_bar, self.grid.L)
        if self.kind == "average" and not self.allow_unstable:
            check_gain(self.gains.K_bar, self.grid.L)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_manifest(out_dir: Path, scenario: str, config_path: str) -> None:
    files = sorted(p for p in out_dir.iterdir() if p.is_file() and p.name != "manifest.json")
    manifest = {
        "scenario": scenario,
        "config": str(config_path),
        "out_dir": str(out_dir),
        "determinism": "fixed-step, seed-free simulation; identical config "
                       "reproduces identical checksums",
        "files": [{"name": p.name, "sha256": _sha256(p)} for p in files],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _execute_run(plan: RunPlan, out_dir: Path, config_path: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if plan.kind == "esc":
            _run_esc_outputs(plan, out_dir)
        elif plan.kind == "average":
            _run_average_outputs(plan, out_dir)
        else:
            _run_standard_outputs(plan, out_dir)
        _write_manifest(out_dir, plan.kind, config_path)
    except Exception as exc:
        (out_dir / ".failed").write_text(f"{type(exc).__name__}: {exc}\n")
        raise


def _run_esc_outputs(plan: RunPlan, out: Path) -> None:
    cfg = plan.scenario_config()
    rec = run_esc(cfg)
    save_trajectory_csv(rec, out / "trajectory.csv")
    m = plan.map
    svgplot.line_chart(out / "output.svg", "Map output", "t [s]", "y",
                       [("y(t)", rec.t, rec.y),
                        ("optimum", rec.t, np.full_like(rec.t, m.y_star))])
    svgplot.line_chart(out / "control.svg", "Control signal", "t [s]", "U",
                       [("U(t)", rec.t, rec.U)])
    svgplot.line_chart(out / "input.svg", "Actuator boundary and map input", "t [s]", "value",
                       [("boundary command", rec.t, rec.theta),
                        ("map input", rec.t, rec.Theta),
                        ("optimizer", rec.t, np.full_like(rec.t, m.theta_star))])
    design = design_dither(plan.dither)
    one_period = np.linspace(0.0, plan.dither.period, 201)
    svgplot.line_chart(out / "dither.svg", "Boundary dither vs. target perturbation",
                       "t [s]", "value",
                       [("boundary dither", one_period, dither_signal(design, one_period)),
                        ("target a*sin", one_period,
                         plan.dither.a * np.sin(plan.dither.omega * one_period))])
    if rec.field_history is not None:
        save_field_csv(rec.field_history, out / "field.csv")
        svgplot.heatmap(out / "field.svg", "Actuator field", "t [s]", "x",
                        rec.field_history.t, rec.field_history.x, rec.field_history.alpha)
    y_res, th_res = analysis.late_time_residuals(rec, m)
    report = {
        "scenario": "esc",
        "late_time_mean_abs_output_error": y_res,
        "late_time_mean_abs_input_error": th_res,
        "final_map_input": float(rec.Theta[-1]),
        "final_output": float(rec.y[-1]),
        "designed_amplitude": design.amplitude,
        "designed_phase_rad": design.phase,
    }
    (out / "report.txt").write_text(analysis.format_report(report))


def _run_average_outputs(plan: RunPlan, out: Path) -> None:
    cfg = plan.scenario_config()
    rec = run_average_system(cfg, initial_vartheta=plan.initial_vartheta,
                             check_admissible=not plan.allow_unstable)
    save_average_csv(rec, out / "average.csv")
    svgplot.line_chart(out / "norm.svg", "Composite squared norm", "t [s]", "Omega",
                       [("Omega(t)", rec.t, rec.Omega)], y_log=True)
    svgplot.line_chart(out / "error.svg", "Averaged tracking error", "t [s]", "vartheta",
                       [("vartheta(t)", rec.t, rec.vartheta)])
    fit = analysis.fit_decay(rec.t, rec.Omega, window=0.5)
    if not fit.degenerate:
        analysis.save_fit_residuals_csv(rec.t, rec.Omega, fit, out / "fit_residuals.csv")
    report = {
        "scenario": "average",
        "compensator_gain": plan.gains.K_bar,
        "fitted_decay_rate": fit.nu_hat,
        "fitted_prefactor": fit.eta_hat,
        "fit_r_squared": fit.r_squared,
        "fit_degenerate": fit.degenerate,
    }
    (out / "report.txt").write_text(analysis.format_report(report))


def _run_standard_outputs(plan: RunPlan, out: Path) -> None:
    rec = run_standard_esc(plan.map, plan.dither, K=plan.K, T=plan.duration,
                           dt=plan.dt, record_every=plan.record_every)
    save_trajectory_csv(rec, out / "trajectory.csv")
    svgplot.line_chart(out / "output.svg", "Map output (no actuator dynamics)", "t [s]", "y",
                       [("y(t)", rec.t, rec.y),
                        ("optimum", rec.t, np.full_like(rec.t, plan.map.y_star))])
    svgplot.line_chart(out / "input.svg", "Map input", "t [s]", "Theta",
                       [("Theta(t)", rec.t, rec.Theta),
                        ("optimizer", rec.t, np.full_like(rec.t, plan.map.theta_star))])
    y_res, th_res = analysis.late_time_residuals(rec, plan.map)
    report = {
        "scenario": "standard",
        "late_time_mean_abs_output_error": y_res,
        "late_time_mean_abs_input_error": th_res,
    }
    (out / "report.txt").write_text(analysis.format_report(report))


def cmd_run(args) -> int:
    try:
        path = _resolve_config(args.config)
        plan = RunPlan(_parse_ini(path))
        plan.validate()
    except (ConfigError, ForbiddenGainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out)
    try:
        _execute_run(plan, out_dir, str(path))
    except Exception as exc:
        print(f"error: run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {out_dir}/manifest.json")
    return EXIT_OK


def cmd_design_dither(args) -> int:
    if args.a <= 0 or args.omega <= 0 or args.L <= 0:
        print("error: a, omega and L must all be positive", file=sys.stderr)
        return EXIT_USAGE
    params = DitherParams(a=args.a, omega=args.omega, L=args.L)
    design = design_dither(params)
    print(f"A   = {design.amplitude:.6f}")
    print(f"phi = {design.phase:.6f} rad")
    print(f"B   = {design.norm_const:.6f}")
    print(f"psi = {design.psi:.6f} rad")
    print()
    print(f"{'t':>10} {'dither':>12} {'a*sin(wt)':>12} {'integral':>12}")
    x, w = gauss_legendre(64, 0.0, params.L)
    for j in range(args.samples):
        t = j * params.period / (args.samples - 1) if args.samples > 1 else 0.0
        s_val = float(dither_signal(design, t))
        target = params.a * math.sin(params.omega * t)
        integral = float(w @ dither_field(design, x, t))
        print(f"{t:10.5f} {s_val:12.7f} {target:12.7f} {integral:12.7f}")
    report = verify_integral_identity(design, np.linspace(0, params.period, 200, endpoint=False))
    print(f"\nmax |integral - a*sin| over one period: {report.max_residual:.3e}")
    return EXIT_OK


def _sweep_apply(plan_parser: configparser.ConfigParser, param: str, value: float) -> None:
    if param == "a":
        plan_parser.set("dither", "amplitude", repr(value))
    elif param == "omega":
        plan_parser.set("dither", "frequency", repr(value))
    else:
        plan_parser.set("gains", "K", repr(value))
        if plan_parser.has_section("average") and plan_parser.has_option("average", "K_bar"):
            plan_parser.remove_option("average", "K_bar")


def cmd_sweep(args) -> int:
    try:
        path = _resolve_config(args.config)
        base = _parse_ini(path)
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.param not in SWEEP_PARAMS:
        print(f"error: sweep parameter must be one of {SWEEP_PARAMS}", file=sys.stderr)
        return EXIT_USAGE
    if not values:
        print("error: no sweep values given", file=sys.stderr)
        return EXIT_USAGE

    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)

    def one(value: float):
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.read(path)
        _sweep_apply(parser, args.param, value)
        plan = RunPlan(parser)
        plan.validate()
        sub = out_root / f"{args.param}_{value:g}"
        if plan.kind != "esc":
            raise ConfigError("sweeps need an esc scenario config")
        sub.mkdir(parents=True, exist_ok=True)
        cfg = plan.scenario_config()
        rec = run_esc(cfg)
        save_trajectory_csv(rec, sub / "trajectory.csv")
        _write_manifest(sub, "esc", str(path))
        return plan.map, rec

    env_threads = os.environ.get("ESC_THREADS")
    if env_threads:
        try:
            max_workers = max(1, int(env_threads))
        except ValueError:
            print(f"error: ESC_THREADS must be an integer, got {env_threads!r}", file=sys.stderr)
            return EXIT_USAGE
    else:
        max_workers = min(4, len(values))
    results, failures = {}, {}
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {pool.submit(one, v): v for v in values}
        for fut, v in futures.items():
            try:
                results[v] = fut.result()
            except Exception as exc:
                failures[v] = f"{type(exc).__name__}: {exc}"

    lines = {"sweep_parameter": args.param,
             "values_requested": ",".join(f"{v:g}" for v in values),
             "values_completed": ",".join(f"{v:g}" for v in sorted(results)),
             "values_failed": ",".join(f"{v:g}" for v in sorted(failures)) or "none"}
    for v in sorted(failures):
        lines[f"failure_{v:g}"] = failures[v]

    if args.param == "a" and results:
        map_ = next(iter(results.values()))[0]
        fit = analysis.residual_scaling([(v, rec) for v, (_, rec) in results.items()], map_)
        lines.update({
            "output_residual_exponent": fit.y_exponent,
            "input_residual_exponent": fit.theta_exponent,
            "output_fit_r_squared": fit.y_r_squared,
            "input_fit_r_squared": fit.theta_r_squared,
            "scaling_inconclusive": fit.inconclusive,
        })
        if fit.note:
            lines["scaling_note"] = fit.note
        for amp, yr, tr in zip(fit.amplitudes, fit.y_residuals, fit.theta_residuals):
            lines[f"residuals_a_{amp:g}"] = f"y={yr:.6g} theta={tr:.6g}"
    elif results:
        for v, (map_, rec) in sorted(results.items()):
            yr, tr = analysis.late_time_residuals(rec, map_)
            lines[f"residuals_{args.param}_{v:g}"] = f"y={yr:.6g} theta={tr:.6g}"
    if len(results) < 3 and args.param == "a":
        lines["scaling_inconclusive"] = True
        lines.setdefault("scaling_note", "need at least 3 completed runs")

    (out_root / "sweep_report.txt").write_text(analysis.format_report(lines))
    print(f"wrote {out_root}/sweep_report.txt "
          f"({len(results)} completed, {len(failures)} failed)")
    if failures and not results:
        return EXIT_FAILURE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffesc",
        description="Extremum-seeking control through a diffusion actuator: "
                    "run scenarios, design probing signals, sweep parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config and write its artifacts")
    p_run.add_argument("--config", required=True,
                       help="path to a config file or a bundled name "
                            "(baseline, average_system, standard_esc, amplitude_sweep, gain_probe)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_dd = sub.add_parser("design-dither", help="print probing-signal constants and a sample table")
    p_dd.add_argument("--a", type=float, required=True, help="target perturbation amplitude")
    p_dd.add_argument("--omega", type=float, required=True, help="angular frequency, rad/s")
    p_dd.add_argument("--L", type=float, required=True, help="actuator domain length")
    p_dd.add_argument("--samples", type=int, default=9, help="table rows over one period")
    p_dd.set_defaults(func=cmd_design_dither)

    p_sw = sub.add_parser("sweep", help="run a config across parameter values and fit scaling")
    p_sw.add_argument("--config", required=True, help="base esc config (path or bundled name)")
    p_sw.add_argument("--param", required=True, help=f"one of {SWEEP_PARAMS}")
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    p_sw.add_argument("--out", required=True, help="output directory (one subdirectory per value)")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
