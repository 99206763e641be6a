"""Command-line front end: ``hipvp simulate|calibrate|compare``.

Exit codes: 0 success, 2 configuration error (nothing written), 3 numerical
or calibration failure. Log verbosity is read from ``HIPVP_LOG_LEVEL``.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationConfig, YieldTestSettings, run_pipeline
from .errors import CalibrationError, ConfigurationError, HipvpError, IntegrationError
from .fileio import (load_yaml, read_dataset, read_mccp, read_tables, schedule_from_dict,
                     write_tables)
from .integrator import (HydrostaticHip, IntegratorOptions, LoadingProgram, Trajectory,
                         UniaxialCompression, atomic_write_text, integrate, mean_series,
                         write_rows_csv)
from .mccp import MccpParams
from .tables import MaterialTables

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("hipvp")

_INTEGRATOR_KEYS = {"dt_min_s": "dt_min", "dt_max_s": "dt_max", "dt_initial_s": "dt_initial",
                    "growth": "growth", "shrink": "shrink", "newton_tol": "newton_tol",
                    "max_newton": "max_newton", "fast_newton": "fast_newton", "cetol": "cetol"}


@dataclass(frozen=True)
class Scenario:
    name: str
    model: str
    rho0: float
    tables: MaterialTables
    mccp: MccpParams | None
    loading: object
    options: IntegratorOptions
    T_ref: float = 20.0

    def program(self) -> LoadingProgram:
        return LoadingProgram(self.loading, rho0=self.rho0, T_ref=self.T_ref)

    def run(self) -> Trajectory:
        return integrate(self.program(), self.model, self.tables, self.options, mccp=self.mccp)


# -- config parsing ---------------------------------------------------------------

def _resolve(base_dir, path):
    if not isinstance(path, str):
        raise ConfigurationError(f"expected a file path, got {path!r}")
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def _check_keys(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {sorted(unknown)}")


def _integrator_options(d) -> IntegratorOptions:
    d = d or {}
    _check_keys(d, _INTEGRATOR_KEYS, "integrator")
    kw = {}
    for key, attr in _INTEGRATOR_KEYS.items():
        if key in d and d[key] is not None:
            kw[attr] = int(d[key]) if attr in ("max_newton", "fast_newton") else float(d[key])
    try:
        return IntegratorOptions(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"integrator: {exc}") from None


def _loading(d, base_dir):
    if not isinstance(d, dict):
        raise ConfigurationError("loading: expected a mapping")
    kind = d.get("type", "hip")
    if kind == "hip":
        _check_keys(d, ("type", "schedule", "schedule_file"), "loading")
        if "schedule_file" in d:
            sched = schedule_from_dict(load_yaml(_resolve(base_dir, d["schedule_file"])))
        elif "schedule" in d:
            sched = schedule_from_dict(d["schedule"])
        else:
            raise ConfigurationError("loading: hip needs 'schedule' or 'schedule_file'")
        return HydrostaticHip(sched)
    if kind == "uniaxial":
        _check_keys(d, ("type", "strain_rate_per_s", "temperature_C", "duration_s",
                        "stop_offset_strain"), "loading")
        try:
            return UniaxialCompression(
                strain_rate=float(d["strain_rate_per_s"]), T=float(d["temperature_C"]),
                duration=float(d["duration_s"]),
                stop_offset_strain=(None if d.get("stop_offset_strain") is None
                                    else float(d["stop_offset_strain"])))
        except KeyError as exc:
            raise ConfigurationError(f"loading: missing key {exc}") from None
    raise ConfigurationError(f"loading: unknown type {kind!r} (hip | uniaxial)")


_SCENARIO_KEYS = ("name", "model", "rho0", "tables", "mccp", "loading", "integrator", "T_ref_C")


def _scenarios(spec: dict, defaults: dict, base_dir: str, default_name: str) -> list:
    """Expand one scenario description into one Scenario per selected model."""
    merged = {**defaults, **spec}
    model = merged.get("model", "abouaf")
    if model not in ("abouaf", "mccp", "both"):
        raise ConfigurationError(f"model must be abouaf, mccp or both, got {model!r}")
    if "tables" not in merged:
        raise ConfigurationError("config: missing 'tables' file")
    if "rho0" not in merged:
        raise ConfigurationError("config: missing 'rho0'")
    if "loading" not in merged:
        raise ConfigurationError("config: missing 'loading'")
    models = ("abouaf", "mccp") if model == "both" else (model,)
    tables = read_tables(_resolve(base_dir, merged["tables"]))
    mccp = None
    if "mccp" in models:
        if "mccp" not in merged:
            raise ConfigurationError("config: model mccp needs an 'mccp' parameter file")
        mccp = read_mccp(_resolve(base_dir, merged["mccp"]))
    loading = _loading(merged["loading"], base_dir)
    opts = _integrator_options(merged.get("integrator"))
    rho0 = float(merged["rho0"])
    if not 0.0 < rho0 <= 1.0:
        raise ConfigurationError(f"rho0 must lie in (0, 1], got {rho0}")
    name = str(merged.get("name", default_name))
    out = []
    for m in models:
        out.append(Scenario(name=name if len(models) == 1 else f"{name}_{m}", model=m,
                            rho0=rho0, tables=tables, mccp=mccp if m == "mccp" else None,
                            loading=loading, options=opts,
                            T_ref=float(merged.get("T_ref_C", 20.0))))
    return out


def _output_dir(args, cfg, base_dir):
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigurationError("no output directory (use --out or 'out' in the config)")
    return out if args.out else _resolve(base_dir, out)


# -- output helpers ---------------------------------------------------------------

def _fmt(v):
    if v is None:
        return "nan"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_mixed_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    atomic_write_text(path, buf.getvalue())


def _summary_rows(scenarios, trajs):
    rows = []
    for sc, tr in zip(scenarios, trajs):
        rows.append((sc.name, sc.model, float(sc.rho0), float(tr.rho[-1]),
                     tr.time_to(0.99), len(tr) - 1))
    return rows


SUMMARY_COLUMNS = ("scenario", "model", "rho0", "final_rho", "time_to_rho_0.99_s", "steps")


def _run_all(scenarios):
    trajs = []
    for sc in scenarios:
        log.info("running scenario %s (%s, rho0=%g)", sc.name, sc.model, sc.rho0)
        try:
            trajs.append(sc.run())
        except IntegrationError as exc:
            raise IntegrationError(f"scenario {sc.name}: {exc}", time=exc.time) from exc
    return trajs


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_yaml(args.config)
    base = os.path.dirname(os.path.abspath(args.config))
    _check_keys(cfg, _SCENARIO_KEYS + ("out", "seed"), "config")
    scenarios = _scenarios(cfg, {}, base, default_name="run")
    out = _output_dir(args, cfg, base)
    trajs = _run_all(scenarios)
    os.makedirs(out, exist_ok=True)
    for sc, tr in zip(scenarios, trajs):
        tr.to_csv(os.path.join(out, f"{sc.name}.csv"))
    rows = _summary_rows(scenarios, trajs)
    _write_mixed_csv(os.path.join(out, "summary.csv"), SUMMARY_COLUMNS, rows)
    for r in rows:
        t99 = "never" if r[4] is None else f"{r[4]:.1f} s"
        print(f"{r[0]}: final rho = {r[3]:.6f}, rho >= 0.99 at {t99}")
    return EXIT_OK


def _same_schedule(a, b) -> bool:
    if isinstance(a, HydrostaticHip) and isinstance(b, HydrostaticHip):
        return a.schedule == b.schedule
    return a == b


def cmd_compare(args) -> int:
    cfg = load_yaml(args.config)
    base = os.path.dirname(os.path.abspath(args.config))
    _check_keys(cfg, _SCENARIO_KEYS + ("out", "seed", "scenarios"), "config")
    specs = cfg.get("scenarios")
    if not isinstance(specs, list) or len(specs) < 2:
        raise ConfigurationError("compare: 'scenarios' must list at least two scenarios")
    defaults = {k: v for k, v in cfg.items() if k in _SCENARIO_KEYS}
    scenarios = []
    for i, spec in enumerate(specs):
        if not isinstance(spec, dict):
            raise ConfigurationError(f"scenario {i}: expected a mapping")
        _check_keys(spec, _SCENARIO_KEYS, f"scenario {i}")
        scenarios.extend(_scenarios(spec, defaults, base, default_name=f"scenario{i}"))
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"compare: scenario names must be unique, got {names}")
    ref = scenarios[0].loading
    for sc in scenarios[1:]:
        if not _same_schedule(ref, sc.loading):
            raise ConfigurationError(
                f"compare: scenario {sc.name} uses a different loading schedule")
    out = _output_dir(args, cfg, base)
    trajs = _run_all(scenarios)

    grid, mean = mean_series(trajs, "rho")
    series = [np.interp(grid, tr.t, tr.rho) for tr in trajs]
    hold = None
    if isinstance(ref, HydrostaticHip):
        hold = ref.schedule.pressure_hold()
    rows = []
    for sc, tr, s in zip(scenarios, trajs, series):
        diff = np.abs(s - series[0])
        if hold is not None:
            mask = (grid >= hold[0]) & (grid <= hold[1])
            hold_diff = float(diff[mask].max()) if mask.any() else None
        else:
            hold_diff = None
        rows.append((sc.name, sc.model, float(sc.rho0), float(tr.rho[-1]), tr.time_to(0.99),
                     float(diff.max()), hold_diff, float(tr.rho[-1] / trajs[0].rho[-1])))
    header = ("scenario", "model", "rho0", "final_rho", "time_to_rho_0.99_s",
              "max_abs_drho_vs_first", "max_abs_drho_vs_first_during_hold",
              "final_rho_ratio_vs_first")

    os.makedirs(out, exist_ok=True)
    for sc, tr in zip(scenarios, trajs):
        tr.to_csv(os.path.join(out, f"{sc.name}.csv"))
    write_rows_csv(os.path.join(out, "mean_series.csv"),
                   ("t",) + tuple(f"rho_{n}" for n in names) + ("rho_mean",),
                   zip(grid, *series, mean))
    _write_mixed_csv(os.path.join(out, "comparison.csv"), header, rows)
    lines = [f"comparison against {names[0]}"]
    for r in rows:
        t99 = "never" if r[4] is None else f"{r[4]:.1f} s"
        hd = "n/a" if r[6] is None else f"{r[6]:.3e}"
        lines.append(f"{r[0]:>20s}  final rho {r[3]:.6f}  rho>=0.99 at {t99:>10s}  "
                     f"max|drho| {r[5]:.3e}  during hold {hd}  final ratio {r[7]:.9f}")
    text = "\n".join(lines) + "\n"
    atomic_write_text(os.path.join(out, "comparison.txt"), text)
    sys.stdout.write(text)
    return EXIT_OK


_CAL_KEYS = ("base_tables", "dataset", "calibration", "out", "seed")
_CAL_OPT_KEYS = ("tol_AN", "tol_c", "fix_N", "legacy_forms", "max_evaluations", "max_sweeps",
                 "initial_guess", "yield_strain_increment", "yield_offset")


def _calibration_config(d, base, seed) -> CalibrationConfig:
    d = d or {}
    _check_keys(d, _CAL_OPT_KEYS, "calibration")
    guess = None
    if d.get("initial_guess"):
        g = read_tables(_resolve(base, d["initial_guess"]))
        guess = (g.A, g.N)
    ys = YieldTestSettings(strain_increment=float(d.get("yield_strain_increment", 2.5e-5)),
                           offset=float(d.get("yield_offset", 0.002)))
    return CalibrationConfig(
        initial_guess=guess, fix_N=bool(d.get("fix_N", False)),
        tol_AN=float(d.get("tol_AN", 1e-3)), tol_c=float(d.get("tol_c", 1e-6)),
        max_evaluations=int(d.get("max_evaluations", 2000)),
        max_sweeps=int(d.get("max_sweeps", 8)),
        legacy_forms=bool(d.get("legacy_forms", False)), yield_test=ys, seed=seed)


def _dataset(d, base, seed):
    if not isinstance(d, dict):
        raise ConfigurationError("calibrate: 'dataset' must be a mapping")
    if "synthetic" in d:
        from .synthetic import synthetic_dataset
        syn = d["synthetic"] or {}
        _check_keys(syn, ("truth", "noise", "rho0"), "dataset.synthetic")
        truth = read_tables(_resolve(base, syn["truth"])) if "truth" in syn else None
        return synthetic_dataset(truth, noise=float(syn.get("noise", 0.0)), seed=seed,
                                 rho0=float(syn.get("rho0", 0.69)))
    _check_keys(d, ("dense_yield", "porous_yield", "densification", "schedule",
                    "schedule_file", "rho0"), "dataset")
    sched = None
    if "schedule_file" in d:
        sched = schedule_from_dict(load_yaml(_resolve(base, d["schedule_file"])))
    elif "schedule" in d:
        sched = schedule_from_dict(d["schedule"])
    paths = {k: _resolve(base, d[k]) if d.get(k) else None
             for k in ("dense_yield", "porous_yield", "densification")}
    ds = read_dataset(**paths, schedule=sched, rho0=float(d.get("rho0", 0.69)))
    if not (ds.dense_yield or ds.porous_yield or ds.densification):
        raise ConfigurationError("calibrate: dataset is empty")
    if ds.densification and sched is None:
        raise ConfigurationError("calibrate: densification data needs a schedule")
    return ds


def cmd_calibrate(args) -> int:
    cfg = load_yaml(args.config)
    base = os.path.dirname(os.path.abspath(args.config))
    _check_keys(cfg, _CAL_KEYS, "config")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    if "base_tables" not in cfg:
        raise ConfigurationError("calibrate: missing 'base_tables' (elastic properties)")
    base_tables = read_tables(_resolve(base, cfg["base_tables"]), require_flow=False)
    config = _calibration_config(cfg.get("calibration"), base, seed)
    dataset = _dataset(cfg.get("dataset"), base, seed)
    out = _output_dir(args, cfg, base)
    try:
        result = run_pipeline(dataset, base_tables, config)
        code = EXIT_OK
        tables_name = "calibrated_tables.yaml"
    except CalibrationError as exc:
        result = exc.partial
        code = EXIT_NUMERIC
        tables_name = "calibrated_tables.PARTIAL.yaml"
        print(f"hipvp: {exc}", file=sys.stderr)
    os.makedirs(out, exist_ok=True)
    write_tables(os.path.join(out, tables_name), result.tables)
    atomic_write_text(os.path.join(out, "calibration_report.txt"), result.report_text())
    atomic_write_text(os.path.join(out, "calibration_report.json"), result.to_json() + "\n")
    if code == EXIT_OK:
        print(f"calibrated tables written to {os.path.join(out, tables_name)}")
    return code


# -- entry point ------------------------------------------------------------------

def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hipvp", description=(
        "Material-point simulation and calibration of visco-plastic powder "
        "densification models."))
    sub = p.add_subparsers(dest="command", required=True)
    for name, func, text in (
            ("simulate", cmd_simulate, "integrate one scenario and write trajectories"),
            ("calibrate", cmd_calibrate, "identify A, N, f and c tables from test data"),
            ("compare", cmd_compare, "run several scenarios and tabulate differences")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="YAML configuration file")
        sp.add_argument("--out", help="output directory (overrides config 'out')")
        sp.add_argument("--seed", type=_seed, default=None,
                        help="random seed for synthetic data generation")
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    level = os.environ.get("HIPVP_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"hipvp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        where = "" if exc.time is None else f" (t = {exc.time:.6g} s)"
        print(f"hipvp: numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HipvpError as exc:
        print(f"hipvp: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
