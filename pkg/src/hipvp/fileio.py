"""Reading and writing material tables, schedules and calibration data.

Material tables and scenario configurations are YAML documents. Every
physical quantity sits under a key carrying its unit (``E_MPa``,
``temperature_C``, ``time_s``...). Floats are emitted with ``repr`` so a
written file parses back to identical values.

Calibration data are CSV files with fixed headers:

``dense_yield.csv``
    ``temperature_C,strain_rate_per_s,sigma02_MPa``
``porous_yield.csv``
    ``temperature_C,rho,strain_rate_per_s,sigma02_MPa``
``densification.csv``
    ``time_s,rho``
"""
from __future__ import annotations

import csv
import os

import yaml

from .calibration import CalibrationDataset
from .errors import ConfigurationError, HipvpError
from .integrator import atomic_write_text, write_rows_csv
from .mccp import MccpParams
from .state import HipSchedule
from .tables import MaterialTables, Table1D, Table2D

DENSE_YIELD_COLUMNS = ("temperature_C", "strain_rate_per_s", "sigma02_MPa")
POROUS_YIELD_COLUMNS = ("temperature_C", "rho", "strain_rate_per_s", "sigma02_MPa")
DENSIFICATION_COLUMNS = ("time_s", "rho")


def load_yaml(path) -> dict:
    """Parse a YAML mapping, raising :class:`ConfigurationError` on any problem."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"file not found: {path}") from None
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a mapping at top level")
    return data


def dump_yaml(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=100)


def _section(d, key, where):
    try:
        return d[key]
    except (KeyError, TypeError):
        raise ConfigurationError(f"{where}: missing key {key!r}") from None


def _floats(seq, where):
    try:
        return [float(x) for x in seq]
    except (TypeError, ValueError):
        raise ConfigurationError(f"{where}: expected a list of numbers") from None


# -- material tables ------------------------------------------------------------

_TABLE1D_KEYS = {
    "A": ("temperature_C", "A_per_MPaN_per_s"),
    "N": ("temperature_C", "N"),
    "c": ("rho", "c"),
    "f": ("rho", "f"),
}
_ELASTIC_KEYS = (("E", "E_MPa"), ("nu", "nu"), ("alpha", "alpha_per_C"))


def table1d_to_dict(tab: Table1D, xkey: str, ykey: str) -> dict:
    return {xkey: list(tab.keys), ykey: list(tab.values)}


def table1d_from_dict(d, xkey, ykey, name) -> Table1D:
    x = _floats(_section(d, xkey, name), f"{name}.{xkey}")
    y = _floats(_section(d, ykey, name), f"{name}.{ykey}")
    return Table1D(x, y, name=name)


def tables_to_dict(tables: MaterialTables) -> dict:
    out = {"label": tables.label}
    for name, (xk, yk) in _TABLE1D_KEYS.items():
        out[name] = table1d_to_dict(getattr(tables, name), xk, yk)
    el = {"rho": list(tables.E.rho_keys), "temperature_C": list(tables.E.T_keys)}
    for attr, key in _ELASTIC_KEYS:
        tab = getattr(tables, attr)
        if tab.rho_keys != tables.E.rho_keys or tab.T_keys != tables.E.T_keys:
            el[key] = {"rho": list(tab.rho_keys), "temperature_C": list(tab.T_keys),
                       "values": [list(r) for r in tab.values]}
        else:
            el[key] = [list(r) for r in tab.values]
    out["elastic"] = el
    return out


def _elastic_from_dict(el, attr, key) -> Table2D:
    raw = _section(el, key, "elastic")
    if isinstance(raw, dict):
        rho, T, vals = raw.get("rho"), raw.get("temperature_C"), raw.get("values")
    else:
        rho, T, vals = el.get("rho"), el.get("temperature_C"), raw
    if rho is None or T is None or vals is None:
        raise ConfigurationError(f"elastic.{key}: needs rho, temperature_C and values")
    return Table2D(_floats(rho, f"elastic.{key}.rho"), _floats(T, f"elastic.{key}.T"),
                   vals, name=attr)


def tables_from_dict(d: dict, *, require_flow: bool = True) -> MaterialTables:
    """Build :class:`MaterialTables`; without ``require_flow`` missing creep
    tables are filled with dense placeholders (used for calibration bases)."""
    el = _section(d, "elastic", "tables")
    kw = {attr: _elastic_from_dict(el, attr, key) for attr, key in _ELASTIC_KEYS}
    placeholder = {"A": ((20.0,), (1.0,)), "N": ((20.0,), (1.0,)),
                   "c": ((1.0,), (1.0,)), "f": ((1.0,), (0.0,))}
    for name, (xk, yk) in _TABLE1D_KEYS.items():
        if name in d:
            kw[name] = table1d_from_dict(d[name], xk, yk, name)
        elif require_flow:
            raise ConfigurationError(f"tables: missing {name!r} table")
        else:
            kw[name] = Table1D(*placeholder[name], name=name)
    return MaterialTables(label=str(d.get("label", "user-supplied")), **kw)


def read_tables(path, *, require_flow: bool = True) -> MaterialTables:
    try:
        return tables_from_dict(load_yaml(path), require_flow=require_flow)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def write_tables(path, tables: MaterialTables) -> None:
    atomic_write_text(path, dump_yaml(tables_to_dict(tables)))


# -- Cam-Clay parameters --------------------------------------------------------

def mccp_to_dict(params: MccpParams) -> dict:
    h = params.hardening
    return {
        "rho0": params.rho0,
        "hardening": {"plastic_compaction": list(h.keys), "a_MPa": list(h.values)},
        "M": {"rho": list(params.M.rho_keys), "temperature_C": list(params.M.T_keys),
              "values": [list(r) for r in params.M.values]},
    }


def mccp_from_dict(d: dict) -> MccpParams:
    h = _section(d, "hardening", "mccp")
    hard = Table1D(_floats(_section(h, "plastic_compaction", "mccp.hardening"), "hardening"),
                   _floats(_section(h, "a_MPa", "mccp.hardening"), "hardening"),
                   name="hardening", right="linear")
    M = _section(d, "M", "mccp")
    if isinstance(M, (int, float)):
        M_tab = Table2D.constant(float(M), name="M")
    else:
        M_tab = Table2D(_floats(_section(M, "rho", "mccp.M"), "M.rho"),
                        _floats(_section(M, "temperature_C", "mccp.M"), "M.temperature_C"),
                        _section(M, "values", "mccp.M"), name="M")
    rho0 = d.get("rho0")
    return MccpParams(M=M_tab, hardening=hard, rho0=None if rho0 is None else float(rho0))


def read_mccp(path) -> MccpParams:
    try:
        return mccp_from_dict(load_yaml(path))
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def write_mccp(path, params: MccpParams) -> None:
    atomic_write_text(path, dump_yaml(mccp_to_dict(params)))


# -- schedules ------------------------------------------------------------------

def schedule_to_dict(s: HipSchedule) -> dict:
    return {"pressure": {"time_s": [t for t, _ in s.pressure_profile],
                         "pressure_MPa": [p for _, p in s.pressure_profile]},
            "temperature": {"time_s": [t for t, _ in s.temperature_profile],
                            "temperature_C": [T for _, T in s.temperature_profile]}}


def schedule_from_dict(d: dict) -> HipSchedule:
    p = _section(d, "pressure", "schedule")
    T = _section(d, "temperature", "schedule")
    pt = _floats(_section(p, "time_s", "schedule.pressure"), "schedule.pressure.time_s")
    pv = _floats(_section(p, "pressure_MPa", "schedule.pressure"), "pressure_MPa")
    Tt = _floats(_section(T, "time_s", "schedule.temperature"), "schedule.temperature.time_s")
    Tv = _floats(_section(T, "temperature_C", "schedule.temperature"), "temperature_C")
    if len(pt) != len(pv) or len(Tt) != len(Tv):
        raise ConfigurationError("schedule: time and value lists differ in length")
    return HipSchedule(tuple(zip(pt, pv)), tuple(zip(Tt, Tv)))


# -- calibration data -----------------------------------------------------------

def read_csv_rows(path, columns) -> list:
    """Rows of a float CSV whose header must equal ``columns``."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(h.strip() for h in next(reader, ()))
            if header != tuple(columns):
                raise ConfigurationError(
                    f"{path}: expected header {','.join(columns)}, got {','.join(header)}")
            rows = []
            for n, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(columns):
                    raise ConfigurationError(f"{path}:{n}: expected {len(columns)} fields")
                try:
                    rows.append(tuple(float(x) for x in row))
                except ValueError:
                    raise ConfigurationError(f"{path}:{n}: non-numeric field") from None
    except FileNotFoundError:
        raise ConfigurationError(f"file not found: {path}") from None
    return rows


def write_dataset(directory, dataset: CalibrationDataset) -> dict:
    """Write the three CSV files plus ``schedule.yaml``; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = {k: os.path.join(directory, f"{k}.csv")
             for k in ("dense_yield", "porous_yield", "densification")}
    write_rows_csv(paths["dense_yield"], DENSE_YIELD_COLUMNS, dataset.dense_yield)
    write_rows_csv(paths["porous_yield"], POROUS_YIELD_COLUMNS, dataset.porous_yield)
    write_rows_csv(paths["densification"], DENSIFICATION_COLUMNS, dataset.densification)
    if dataset.schedule is not None:
        paths["schedule"] = os.path.join(directory, "schedule.yaml")
        atomic_write_text(paths["schedule"], dump_yaml(schedule_to_dict(dataset.schedule)))
    return paths


def read_dataset(dense_yield=None, porous_yield=None, densification=None,
                 schedule: HipSchedule | None = None, rho0: float = 0.69) -> CalibrationDataset:
    """Assemble a dataset from CSV paths; ``None`` leaves that list empty."""
    try:
        return CalibrationDataset(
            dense_yield=read_csv_rows(dense_yield, DENSE_YIELD_COLUMNS) if dense_yield else (),
            porous_yield=read_csv_rows(porous_yield, POROUS_YIELD_COLUMNS) if porous_yield else (),
            densification=(read_csv_rows(densification, DENSIFICATION_COLUMNS)
                           if densification else ()),
            schedule=schedule, rho0=rho0)
    except ConfigurationError:
        raise
    except HipvpError as exc:
        raise ConfigurationError(str(exc)) from None
