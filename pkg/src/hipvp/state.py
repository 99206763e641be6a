"""Material point state and HIP load schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .tables import Table1D
from .tensors import SymTensor3


@dataclass(frozen=True)
class HipSchedule:
    """Piecewise-linear pressure (MPa) and temperature (deg C) versus time (s).

    Values are held constant before the first and after the last key.
    """

    pressure_profile: tuple
    temperature_profile: tuple

    def __post_init__(self):
        p = Table1D.from_pairs(self.pressure_profile, name="pressure profile")
        T = Table1D.from_pairs(self.temperature_profile, name="temperature profile")
        if any(v < 0 for v in p.values):
            raise ConfigurationError("pressure profile: pressures must be >= 0")
        object.__setattr__(self, "pressure_profile", tuple(p.pairs()))
        object.__setattr__(self, "temperature_profile", tuple(T.pairs()))
        object.__setattr__(self, "_p", p)
        object.__setattr__(self, "_T", T)

    def pressure(self, t: float) -> float:
        return self._p(t)

    def temperature(self, t: float) -> float:
        return self._T(t)

    @property
    def end_time(self) -> float:
        return max(self._p.keys[-1], self._T.keys[-1])

    def breakpoints(self) -> list[float]:
        """Sorted union of all profile time keys."""
        return sorted(set(self._p.keys) | set(self._T.keys))

    def pressure_hold(self) -> tuple[float, float]:
        """Start and end time of the peak-pressure plateau."""
        keys, vals = self._p.keys, self._p.values
        peak = max(vals)
        at_peak = [k for k, v in zip(keys, vals) if v == peak]
        return at_peak[0], at_peak[-1]

    def scaled_pressure(self, factor: float) -> HipSchedule:
        """Same cycle with every pressure multiplied by ``factor``."""
        return HipSchedule(tuple((t, factor * v) for t, v in self.pressure_profile),
                           self.temperature_profile)


@dataclass(frozen=True)
class PointState:
    """State of one material point.

    The total strain is ``eps_e + eps_th + eps_vp`` exactly; ``eps_vp`` holds
    the visco-plastic strain for the creep model and the plastic strain for
    the Cam-Clay model.
    """

    stress: SymTensor3
    T: float
    rho: float
    rho0: float
    eps_vp: SymTensor3 = field(default_factory=SymTensor3.zeros)
    eps_e: SymTensor3 = field(default_factory=SymTensor3.zeros)
    eps_th: SymTensor3 = field(default_factory=SymTensor3.zeros)
    t: float = 0.0

    @classmethod
    def initial(cls, rho0: float, T: float, stress: SymTensor3 | None = None,
                t: float = 0.0) -> PointState:
        return cls(stress=stress if stress is not None else SymTensor3.zeros(),
                   T=T, rho=rho0, rho0=rho0, t=t)

    @property
    def strain(self) -> SymTensor3:
        return self.eps_e + self.eps_th + self.eps_vp

    @property
    def eps_vol_vp(self) -> float:
        return self.eps_vp.trace()

    def density_defect(self) -> float:
        """``|rho - rho0 exp(-tr eps_vp)|`` (zero up to the full-density clamp)."""
        return abs(self.rho - min(1.0, self.rho0 * math.exp(-self.eps_vol_vp)))
