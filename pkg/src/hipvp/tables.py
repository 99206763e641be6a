"""Piecewise-linear material property tables.

All temperature and density dependence in the models goes through these
tables. Interpolation is linear between keys with constant extrapolation
outside the key range, and table slopes use the right-hand segment at a knot.
"""
from __future__ import annotations

import bisect
import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError


def _as_keys(keys, name) -> tuple:
    keys = tuple(float(k) for k in keys)
    if not keys:
        raise ConfigurationError(f"{name}: table is empty")
    if any(not math.isfinite(k) for k in keys):
        raise ConfigurationError(f"{name}: non-finite key")
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise ConfigurationError(f"{name}: keys must be strictly increasing")
    return keys


@dataclass(frozen=True)
class Table1D:
    """Scalar function of one variable given at strictly increasing keys.

    Parameters
    ----------
    keys, values : sequence of float
        Knot abscissae and ordinates.
    name : str
        Used in error messages.
    right : {'constant', 'linear'}
        Extrapolation above the last key. ``'linear'`` continues the last
        segment (needs at least two keys).
    """

    keys: tuple
    values: tuple
    name: str = "table"
    right: str = "constant"

    def __post_init__(self):
        keys = _as_keys(self.keys, self.name)
        values = tuple(float(v) for v in self.values)
        if len(values) != len(keys):
            raise ConfigurationError(
                f"{self.name}: {len(keys)} keys but {len(values)} values")
        if any(not math.isfinite(v) for v in values):
            raise ConfigurationError(f"{self.name}: non-finite value")
        if self.right not in ("constant", "linear"):
            raise ConfigurationError(f"{self.name}: unknown extrapolation {self.right!r}")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_pairs(cls, pairs, name="table", right="constant") -> Table1D:
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs),
                   name=name, right=right)

    def pairs(self) -> list:
        return list(zip(self.keys, self.values))

    def _segment(self, x: float) -> int:
        # index i of the segment [k_i, k_{i+1}) holding x; right-hand at knots
        return bisect.bisect_right(self.keys, x) - 1

    def __call__(self, x: float) -> float:
        k, v = self.keys, self.values
        if x <= k[0]:
            return v[0]
        i = self._segment(x)
        if i >= len(k) - 1:
            if self.right == "linear" and len(k) > 1:
                return v[-1] + (x - k[-1]) * (v[-1] - v[-2]) / (k[-1] - k[-2])
            return v[-1]
        w = (x - k[i]) / (k[i + 1] - k[i])
        return v[i] + w * (v[i + 1] - v[i])

    def slope(self, x: float) -> float:
        """Right-hand derivative; zero wherever extrapolation is constant."""
        k, v = self.keys, self.values
        i = self._segment(x)
        if i < 0:
            return 0.0
        if i >= len(k) - 1:
            if self.right == "linear" and len(k) > 1:
                i = len(k) - 2
            else:
                return 0.0
        return (v[i + 1] - v[i]) / (k[i + 1] - k[i])

    def evaluate(self, x) -> np.ndarray:
        """Vectorised evaluation (constant extrapolation on both sides)."""
        return np.interp(x, self.keys, self.values)


@dataclass(frozen=True)
class Table2D:
    """Bilinear table over a (relative density, temperature) grid.

    ``values[i][j]`` is the value at ``rho_keys[i]`` and ``T_keys[j]``.
    """

    rho_keys: tuple
    T_keys: tuple
    values: tuple
    name: str = "table2d"

    def __post_init__(self):
        rk = _as_keys(self.rho_keys, self.name + " (density keys)")
        tk = _as_keys(self.T_keys, self.name + " (temperature keys)")
        grid = np.array(self.values, dtype=float)
        if grid.ndim == 0:
            grid = np.full((len(rk), len(tk)), float(grid))
        if grid.shape != (len(rk), len(tk)):
            raise ConfigurationError(
                f"{self.name}: grid shape {grid.shape} does not match "
                f"({len(rk)}, {len(tk)})")
        if not np.all(np.isfinite(grid)):
            raise ConfigurationError(f"{self.name}: non-finite value")
        object.__setattr__(self, "rho_keys", rk)
        object.__setattr__(self, "T_keys", tk)
        object.__setattr__(self, "values", tuple(tuple(row) for row in grid.tolist()))

    @classmethod
    def constant(cls, value: float, name="table2d") -> Table2D:
        return cls((1.0,), (20.0,), ((value,),), name=name)

    def _row_index(self, rho):
        k = self.rho_keys
        if len(k) == 1 or rho <= k[0]:
            return 0, 0, 0.0
        i = bisect.bisect_right(k, rho) - 1
        if i >= len(k) - 1:
            return len(k) - 1, len(k) - 1, 0.0
        return i, i + 1, (rho - k[i]) / (k[i + 1] - k[i])

    def _in_T(self, row, T):
        k = self.T_keys
        if len(k) == 1 or T <= k[0]:
            return row[0]
        j = bisect.bisect_right(k, T) - 1
        if j >= len(k) - 1:
            return row[-1]
        w = (T - k[j]) / (k[j + 1] - k[j])
        return row[j] + w * (row[j + 1] - row[j])

    def __call__(self, rho: float, T: float) -> float:
        i0, i1, w = self._row_index(rho)
        a = self._in_T(self.values[i0], T)
        if i1 == i0:
            return a
        b = self._in_T(self.values[i1], T)
        return a + w * (b - a)

    def slope_rho(self, rho: float, T: float) -> float:
        """Right-hand derivative with respect to relative density."""
        k = self.rho_keys
        if len(k) == 1:
            return 0.0
        i = bisect.bisect_right(k, rho) - 1
        if i < 0 or i >= len(k) - 1:
            return 0.0
        a = self._in_T(self.values[i], T)
        b = self._in_T(self.values[i + 1], T)
        return (b - a) / (k[i + 1] - k[i])

    def all_values(self) -> np.ndarray:
        return np.array(self.values)


def _check_fully_dense(table: Table1D, dense_value: float) -> Table1D:
    """Append the fully dense key, or verify it if the user supplied one."""
    if table.keys[-1] > 1.0:
        raise ConfigurationError(f"{table.name}: density keys must lie in (0, 1]")
    if table.keys[-1] == 1.0:
        if table.values[-1] != dense_value:
            raise ConfigurationError(
                f"{table.name}: value at rho=1 must be {dense_value}, "
                f"got {table.values[-1]}")
        return table
    return Table1D(table.keys + (1.0,), table.values + (dense_value,), name=table.name)


@dataclass(frozen=True)
class MaterialTables:
    """Temperature and density dependent parameters of the powder.

    Attributes
    ----------
    A, N : Table1D
        Power-law constants versus temperature (deg C). ``A`` is in
        MPa^-N s^-1.
    c, f : Table1D
        Density weighting functions versus relative density. The fully dense
        limits ``c(1) = 1`` and ``f(1) = 0`` are appended when absent.
    E, nu, alpha : Table2D
        Young's modulus (MPa), Poisson ratio and thermal expansion
        coefficient (1/deg C) on a (rho, T) grid.
    label : str
        Provenance note carried into output files.
    """

    A: Table1D
    N: Table1D
    c: Table1D
    f: Table1D
    E: Table2D
    nu: Table2D
    alpha: Table2D
    label: str = "user-supplied"

    def __post_init__(self):
        if any(a <= 0 for a in self.A.values):
            raise ConfigurationError("A table: all values must be positive")
        if any(n < 1 for n in self.N.values):
            raise ConfigurationError("N table: all values must be >= 1")
        for tab in (self.c, self.f):
            if tab.keys[0] <= 0:
                raise ConfigurationError(f"{tab.name}: density keys must lie in (0, 1]")
        if any(v <= 0 for v in self.c.values):
            raise ConfigurationError("c table: all values must be positive")
        if any(v < 0 for v in self.f.values):
            raise ConfigurationError("f table: values must be non-negative")
        object.__setattr__(self, "c", _check_fully_dense(self.c, 1.0))
        object.__setattr__(self, "f", _check_fully_dense(self.f, 0.0))
        if np.any(self.E.all_values() <= 0):
            raise ConfigurationError("E table: values must be positive")
        nu = self.nu.all_values()
        if np.any(nu < 0) or np.any(nu >= 0.5):
            raise ConfigurationError("nu table: values must satisfy 0 <= nu < 0.5")

    def replace(self, **changes) -> MaterialTables:
        return dataclasses.replace(self, **changes)


def table_from_pairs(pairs: Sequence, name: str) -> Table1D:
    return Table1D.from_pairs(pairs, name=name)


def lookup_AN(tables: MaterialTables, T: float) -> tuple[float, float]:
    """Power-law constants ``(A, N)`` at temperature ``T`` (deg C)."""
    if not tables.A.keys or not tables.N.keys:
        raise ConfigurationError("A/N tables are empty")
    return tables.A(T), tables.N(T)


def check_density(rho: float) -> None:
    if not (0.0 < rho <= 1.0) or math.isnan(rho):
        raise DomainError(f"relative density {rho!r} outside (0, 1]")


def lookup_cf(tables: MaterialTables, rho: float) -> tuple[float, float]:
    """Weighting functions ``(c, f)`` at relative density ``rho``."""
    check_density(rho)
    return tables.c(rho), tables.f(rho)


def cf_slopes(tables: MaterialTables, rho: float) -> tuple[float, float]:
    """Right-hand table slopes ``(dc/drho, df/drho)``."""
    return tables.c.slope(rho), tables.f.slope(rho)
