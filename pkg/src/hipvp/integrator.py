"""Implicit integration of a single material point.

Two loading programs are supported:

* ``HydrostaticHip`` -- stress control ``sigma = -P(t) I`` with a
  temperature history, as in a HIP cycle on a single powder element.
* ``UniaxialCompression`` -- constant axial strain rate (compressive) with
  traction-free lateral faces at fixed temperature.

Both constitutive models are driven by the same adaptive stepper: the step is
halved when the local solve fails and grown by ``growth`` after a fast solve.
"""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import brentq

from . import abouaf
from .abouaf import derivatives_pq, equivalent_stress_pq, increments_pq
from .errors import ConfigurationError, IntegrationError, ReturnMapError, YieldExtractionError
from .mccp import MccpParams, mccp_step
from .state import HipSchedule, PointState
from .tables import MaterialTables, check_density, lookup_AN
from .tensors import SymTensor3, invariants

CSV_COLUMNS = ("t", "T", "P", "sigma_11", "sigma_22", "sigma_33",
               "sigma_12", "sigma_23", "sigma_13", "rho", "sigma_eqv")


@dataclass(frozen=True)
class HydrostaticHip:
    schedule: HipSchedule


@dataclass(frozen=True)
class UniaxialCompression:
    """Constant strain-rate compression.

    ``strain_rate`` is the magnitude (1/s) of the compressive axial rate.
    ``stop_offset_strain`` ends the run once the plastic offset strain
    ``|eps_11| - |sigma_11| / E(rho0, T)`` reaches the given value.
    """

    strain_rate: float
    T: float
    duration: float
    stop_offset_strain: float | None = None

    def __post_init__(self):
        if not self.strain_rate > 0:
            raise ConfigurationError("strain_rate must be positive (compression)")
        if not self.duration > 0:
            raise ConfigurationError("duration must be positive")


@dataclass(frozen=True)
class LoadingProgram:
    mode: Union[HydrostaticHip, UniaxialCompression]
    rho0: float
    T_ref: float = 20.0

    def __post_init__(self):
        check_density(self.rho0)


@dataclass(frozen=True)
class IntegratorOptions:
    """Step-size control and solver tolerances.

    Setting ``dt_min == dt_max == dt_initial`` gives fixed steps.
    ``cetol`` optionally bounds the local error of the inelastic strain
    increment, estimated as half the difference between the end-of-step and
    start-of-step increments; steps exceeding it are repeated with a smaller
    ``dt`` (never below ``dt_min``).
    """

    dt_min: float = 1e-3
    dt_max: float = 60.0
    dt_initial: float | None = None
    growth: float = 1.5
    shrink: float = 0.5
    newton_tol: float = 1e-10
    max_newton: int = 40
    fast_newton: int = 4
    cetol: float | None = None

    def __post_init__(self):
        if not (self.dt_min > 0 and self.dt_max > 0):
            raise ConfigurationError("dt_min and dt_max must be positive")
        if self.dt_min > self.dt_max:
            raise ConfigurationError(
                f"dt_min ({self.dt_min}) must not exceed dt_max ({self.dt_max})")
        if self.dt_initial is not None and not (self.dt_min <= self.dt_initial <= self.dt_max):
            raise ConfigurationError("dt_initial must lie in [dt_min, dt_max]")
        if not self.growth >= 1.0:
            raise ConfigurationError("growth factor must be >= 1")
        if not 0.0 < self.shrink < 1.0:
            raise ConfigurationError("shrink factor must lie in (0, 1)")
        if not self.newton_tol > 0 or self.max_newton < 1:
            raise ConfigurationError("invalid Newton settings")
        if self.cetol is not None and not self.cetol > 0:
            raise ConfigurationError("cetol must be positive")

    @classmethod
    def fixed(cls, dt: float, **kw) -> IntegratorOptions:
        return cls(dt_min=dt, dt_max=dt, dt_initial=dt, **kw)


@dataclass
class Trajectory:
    """Sampled history of one integration (one row per accepted step)."""

    t: np.ndarray
    T: np.ndarray
    P: np.ndarray
    stress: np.ndarray
    strain: np.ndarray
    eps_vp: np.ndarray
    rho: np.ndarray
    sigma_eqv: np.ndarray
    model: str = "abouaf"
    rho0: float = 1.0
    newton_iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    def __len__(self):
        return len(self.t)

    def field(self, name: str) -> np.ndarray:
        if name in ("t", "T", "P", "rho", "sigma_eqv"):
            return getattr(self, name)
        if name.startswith("sigma_"):
            return self.stress[:, _component_index(name[6:])]
        if name.startswith("eps_"):
            return self.strain[:, _component_index(name[4:])]
        raise KeyError(f"unknown trajectory field {name!r}")

    def density_defect(self) -> np.ndarray:
        """``|rho - rho0 exp(-tr eps_vp)|`` at every sample."""
        tr = self.eps_vp[:, :3].sum(axis=1)
        return np.abs(self.rho - np.minimum(1.0, self.rho0 * np.exp(-tr)))

    def time_to(self, rho_level: float) -> float | None:
        """First sampled time with ``rho >= rho_level`` (linear interpolation)."""
        idx = np.nonzero(self.rho >= rho_level)[0]
        if idx.size == 0:
            return None
        i = int(idx[0])
        if i == 0:
            return float(self.t[0])
        r0, r1 = self.rho[i - 1], self.rho[i]
        w = (rho_level - r0) / (r1 - r0)
        return float(self.t[i - 1] + w * (self.t[i] - self.t[i - 1]))

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.T[i], self.P[i], *self.stress[i],
                   self.rho[i], self.sigma_eqv[i])

    def to_csv(self, path) -> None:
        write_rows_csv(path, CSV_COLUMNS, self.rows())


def _component_index(name: str) -> int:
    from .tensors import COMPONENT_NAMES
    return COMPONENT_NAMES.index(name)


def write_rows_csv(path, header, rows) -> None:
    """Write a float table with ``repr`` formatting (exact round trip).

    The file is written to a temporary name and renamed into place.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    atomic_write_text(path, buf.getvalue())


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)),
                               prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_trajectory_csv(path) -> dict:
    """Parse a trajectory CSV into a dict of column arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ConfigurationError(f"{path}: unexpected trajectory columns {header}")
        data = np.array([[float(x) for x in row] for row in reader], dtype=float)
    data = data.reshape(-1, len(CSV_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(CSV_COLUMNS)}


class _StepFailed(Exception):
    pass


class _Recorder:
    def __init__(self, model, rho0):
        self.model, self.rho0 = model, rho0
        self.rows = []
        self.iters = []

    def add(self, state: PointState, P: float, s_eqv: float, iters: int):
        self.rows.append((state.t, state.T, P, state.stress.components,
                          state.strain.components, state.eps_vp.components,
                          state.rho, s_eqv))
        self.iters.append(iters)

    def build(self) -> Trajectory:
        r = self.rows
        return Trajectory(
            t=np.array([x[0] for x in r]), T=np.array([x[1] for x in r]),
            P=np.array([x[2] for x in r]),
            stress=np.array([x[3] for x in r]).reshape(-1, 6),
            strain=np.array([x[4] for x in r]).reshape(-1, 6),
            eps_vp=np.array([x[5] for x in r]).reshape(-1, 6),
            rho=np.array([x[6] for x in r]), sigma_eqv=np.array([x[7] for x in r]),
            model=self.model, rho0=self.rho0,
            newton_iterations=np.array(self.iters, dtype=int))


def _march(step, state, t_end, breakpoints, options, rec, stop=None):
    """Generic adaptive time loop.

    ``step(state, h)`` returns ``(new_state, P, s_eqv, iterations, err)`` or
    raises ``_StepFailed``; ``err`` is the local inelastic-strain error
    estimate used when ``options.cetol`` is set.
    """
    dt = options.dt_initial or min(options.dt_max, max(options.dt_min, 1.0))
    bps = [b for b in breakpoints if b > state.t]
    tiny = 1e-12 * max(1.0, t_end)
    cetol = options.cetol
    while state.t < t_end - tiny:
        while bps and bps[0] <= state.t + tiny:
            bps.pop(0)
        limit = min(t_end, bps[0]) if bps else t_end
        h = min(dt, limit - state.t)
        try:
            new, P, s_eqv, iters, err = step(state, h)
        except _StepFailed as exc:
            dt = min(dt, h) * options.shrink
            if dt < options.dt_min * (1.0 - 1e-12):
                raise IntegrationError(
                    f"time step fell below dt_min={options.dt_min} at t={state.t:.6g} s "
                    f"({exc})", state=state, time=state.t, trajectory=rec.build()) from None
            continue
        ratio = None
        if cetol is not None and err > 0.0:
            ratio = math.sqrt(cetol / err)
            if err > cetol and h > options.dt_min * (1.0 + 1e-12):
                dt = max(h * max(0.2, 0.9 * ratio), options.dt_min)
                continue
        if new.t > limit - tiny:
            new = _with_time(new, limit)
        state = new
        rec.add(state, P, s_eqv, iters)
        if ratio is None:
            if iters <= options.fast_newton:
                dt = min(dt * options.growth, options.dt_max)
        else:
            factor = min(options.growth if iters <= options.fast_newton else 1.0, 0.9 * ratio)
            dt = min(max(h * factor, options.dt_min), options.dt_max)
        if stop is not None and stop(state):
            break
    return state


def _with_time(state: PointState, t: float) -> PointState:
    from dataclasses import replace
    return replace(state, t=t)


# -- visco-plastic model ----------------------------------------------------

def _abouaf_hip_step(tables, schedule, T_ref, options):
    lo_cache = {}

    def step(state: PointState, h: float):
        t1 = state.t + h
        P1 = schedule.pressure(t1)
        T1 = schedule.temperature(t1)
        A, N = lookup_AN(tables, T1)
        rho0 = state.rho0
        E_n = state.eps_vp.trace()
        lo = lo_cache.setdefault(rho0, math.log(rho0))
        hi = E_n
        E = E_n
        iters = 0
        if P1 > 0.0:
            K_scale = abouaf.bulk_shear(tables, state.rho, T1)[0]
            tol = options.newton_tol * (P1 * math.sqrt(3.0) + 1.0) / K_scale
            for iters in range(1, options.max_newton + 1):
                rho = min(1.0, rho0 * math.exp(-E))
                c, f = tables.c(rho), tables.f(rho)
                d_sw, _ = increments_pq(P1, 0.0, A, N, c, f, h)
                R = E - E_n - d_sw
                if abs(R) <= tol:
                    break
                if R > 0:
                    hi = min(hi, E)
                else:
                    lo = max(lo, E)
                if f > 0.0:
                    d = derivatives_pq(P1, 0.0, rho, A, N, c, f,
                                       tables.c.slope(rho), tables.f.slope(rho), h)
                    dR = 1.0 - d.dsw_deps_sw
                else:
                    dR = 1.0
                E_new = E - R / dR
                if not (lo < E_new < hi):
                    E_new = 0.5 * (lo + hi)
                E = E_new
            else:
                raise _StepFailed("Newton did not converge (hydrostatic)")
        err = 0.0
        if options.cetol is not None:
            P0 = schedule.pressure(state.t)
            A0, N0 = lookup_AN(tables, state.T)
            d0, _ = increments_pq(P0, 0.0, A0, N0, tables.c(state.rho), tables.f(state.rho), h)
            err = 0.5 * abs((E - E_n) - d0)
        eps_vp = state.eps_vp + SymTensor3.identity((E - E_n) / 3.0)
        rho = min(1.0, rho0 * math.exp(-eps_vp.trace()))
        stress = SymTensor3.identity(-P1)
        f = tables.f(rho)
        new = PointState(
            stress=stress, T=T1, rho=rho, rho0=rho0, eps_vp=eps_vp,
            eps_e=abouaf.elastic_strain(stress, T1, rho, tables),
            eps_th=abouaf.thermal_strain(T1, T_ref, rho, tables), t=t1)
        return new, P1, 3.0 * P1 * math.sqrt(f), iters, err

    return step


def _abouaf_uniaxial_step(tables, prog: UniaxialCompression, options):
    T = prog.T
    A, N = lookup_AN(tables, T)

    def step(state: PointState, h: float):
        rho0 = state.rho0
        E_n = state.eps_vp.trace()
        v = state.eps_vp.components
        evp11, evp22 = v[0], v[1]
        eps11 = state.strain.components[0] - prog.strain_rate * h
        sig_n = state.stress.components[0]
        E_el0 = tables.E(state.rho, T)
        sig = sig_n if sig_n != 0.0 else E_el0 * (eps11 - evp11)
        E = E_n
        lnrho0 = math.log(rho0)
        for iters in range(1, options.max_newton + 1):
            rho = min(1.0, rho0 * math.exp(-E))
            c, f = tables.c(rho), tables.f(rho)
            E_el = tables.E(rho, T)
            p, q = -sig / 3.0, abs(sig)
            sgn = -1.0 if sig < 0 else 1.0
            d_sw, d_cr = increments_pq(p, q, A, N, c, f, h)
            R1 = eps11 - evp11 - d_sw / 3.0 - sgn * d_cr - sig / E_el
            R2 = E - E_n - d_sw
            scale = options.newton_tol * (abs(sig) + 1.0)
            if abs(R1) * E_el <= scale and abs(R2) * E_el <= scale:
                break
            if equivalent_stress_pq(p, q, c, f) > 0.0:
                d = derivatives_pq(p, q, rho, A, N, c, f,
                                   tables.c.slope(rho), tables.f.slope(rho), h)
                dsw_ds = -d.dsw_dp / 3.0 + sgn * d.dsw_dq
                dcr_ds = -d.dcr_dp / 3.0 + sgn * d.dcr_dq
                dsw_dE, dcr_dE = d.dsw_deps_sw, d.dcr_deps_sw
            else:
                dsw_ds = dcr_ds = dsw_dE = dcr_dE = 0.0
            dEel_dE = -rho * tables.E.slope_rho(rho, T) if rho < 1.0 else 0.0
            J11 = -dsw_ds / 3.0 - sgn * dcr_ds - 1.0 / E_el
            J12 = -dsw_dE / 3.0 - sgn * dcr_dE + sig / (E_el * E_el) * dEel_dE
            J21 = -dsw_ds
            J22 = 1.0 - dsw_dE
            det = J11 * J22 - J12 * J21
            if det == 0.0 or not math.isfinite(det):
                raise _StepFailed("singular uniaxial Jacobian")
            d_sig = (-R1 * J22 + R2 * J12) / det
            d_E = (-R2 * J11 + R1 * J21) / det
            cap = 0.5 * (abs(sig) + 1.0)
            if abs(d_sig) > cap:
                d_sig = math.copysign(cap, d_sig)
            new_sig = sig + d_sig
            if new_sig > 0.0 and sig <= 0.0:
                new_sig = 0.5 * sig
            sig = new_sig
            E = max(E + d_E, lnrho0)
        else:
            raise _StepFailed("Newton did not converge (uniaxial)")
        rho = min(1.0, rho0 * math.exp(-E))
        c, f = tables.c(rho), tables.f(rho)
        d_sw, d_cr = increments_pq(-sig / 3.0, abs(sig), A, N, c, f, h)
        sgn = -1.0 if sig < 0 else 1.0
        d_sw = E - E_n
        err = 0.0
        if options.cetol is not None:
            s0 = state.stress.components[0]
            b_sw, b_cr = increments_pq(-s0 / 3.0, abs(s0), A, N, tables.c(state.rho),
                                       tables.f(state.rho), h)
            err = 0.5 * max(abs(d_sw - b_sw), abs(d_cr - b_cr))
        eps_vp = SymTensor3.diag(evp11 + d_sw / 3.0 + sgn * d_cr,
                                 evp22 + d_sw / 3.0 - 0.5 * sgn * d_cr,
                                 evp22 + d_sw / 3.0 - 0.5 * sgn * d_cr)
        rho = min(1.0, rho0 * math.exp(-eps_vp.trace()))
        stress = SymTensor3.diag(sig, 0.0, 0.0)
        new = PointState(stress=stress, T=T, rho=rho, rho0=rho0, eps_vp=eps_vp,
                         eps_e=abouaf.elastic_strain(stress, T, rho, tables),
                         t=state.t + h)
        return new, -sig / 3.0, abs(sig) * math.sqrt(c + f), iters, err

    return step


# -- Cam-Clay model ---------------------------------------------------------

def _mccp_mixed_step(tables, params: MccpParams, program: LoadingProgram):
    mode = program.mode
    T_ref = program.T_ref
    hip = isinstance(mode, HydrostaticHip)

    def step(state: PointState, h: float):
        t1 = state.t + h
        if hip:
            target = mode.schedule.pressure(t1)
            T1 = mode.schedule.temperature(t1)

            def load(x):
                return SymTensor3.identity(x / 3.0)

            def g(x):
                new, info = mccp_step(state, load(x), params, tables, h, T_new=T1, T_ref=T_ref)
                return invariants(new.stress).p - target, new, info
            K, G = abouaf.bulk_shear(tables, state.rho, T1)
            stiff = -K
        else:
            T1 = mode.T
            ax = -mode.strain_rate * h

            def load(x):
                return SymTensor3.diag(ax, x, x)

            def g(x):
                new, info = mccp_step(state, load(x), params, tables, h, T_new=T1, T_ref=T_ref)
                c = new.stress.components
                return 0.5 * (c[1] + c[2]), new, info
            lam, mu = abouaf.lame(tables, state.rho, T1)
            stiff = 2.0 * (lam + mu)

        cache = {}

        def resid(x):
            if x not in cache:
                cache[x] = g(x)
            return cache[x][0]

        try:
            g0 = resid(0.0)
            if g0 == 0.0:
                root = 0.0
            else:
                b = -g0 / stiff
                for _ in range(80):
                    if resid(b) * g0 < 0.0:
                        break
                    b *= 2.0
                else:
                    raise _StepFailed("could not bracket the mixed-control solution")
                root = brentq(resid, 0.0, b, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                              maxiter=200)
        except ReturnMapError as exc:
            raise _StepFailed(str(exc)) from None
        except RuntimeError as exc:
            raise _StepFailed(f"mixed-control solve failed: {exc}") from None
        resid(root)
        _, new, info = cache[root]
        inv = invariants(new.stress)
        P_out = target if hip else inv.p
        return new, P_out, inv.q, info.iterations, 0.0

    return step


def integrate(program: LoadingProgram, model: str | MccpParams,
              tables: MaterialTables, options: IntegratorOptions | None = None,
              mccp: MccpParams | None = None) -> Trajectory:
    """Integrate one material point through a loading program.

    Parameters
    ----------
    program : LoadingProgram
    model : {'abouaf', 'mccp'} or MccpParams
        Constitutive model. Passing an ``MccpParams`` selects the Cam-Clay
        model with those parameters.
    tables : MaterialTables
        Elastic and thermal tables (and the creep tables for ``'abouaf'``).
    options : IntegratorOptions, optional
    mccp : MccpParams, optional
        Cam-Clay parameters when ``model == 'mccp'``.

    Returns
    -------
    Trajectory
        One sample per accepted step, the initial state included.

    Raises
    ------
    IntegrationError
        If the step size falls below ``options.dt_min``.
    """
    options = options or IntegratorOptions()
    if isinstance(model, MccpParams):
        model, mccp = "mccp", model
    if model not in ("abouaf", "mccp"):
        raise ConfigurationError(f"unknown model {model!r}")
    if model == "mccp" and mccp is None:
        raise ConfigurationError("Cam-Clay model requires MccpParams")
    mode = program.mode
    rec = _Recorder(model, program.rho0)

    if isinstance(mode, HydrostaticHip):
        sched = mode.schedule
        T0 = sched.temperature(0.0)
        P0 = sched.pressure(0.0)
        stress0 = SymTensor3.identity(-P0)
        eps_th0 = abouaf.thermal_strain(T0, program.T_ref, program.rho0, tables)
        eps_e0 = abouaf.elastic_strain(stress0, T0, program.rho0, tables)
        state = PointState(stress=stress0, T=T0, rho=program.rho0, rho0=program.rho0,
                           eps_e=eps_e0, eps_th=eps_th0)
        f0 = tables.f(program.rho0)
        rec.add(state, P0, 3.0 * P0 * math.sqrt(f0) if model == "abouaf" else 0.0, 0)
        t_end, bps = sched.end_time, sched.breakpoints()
        stop = None
    elif isinstance(mode, UniaxialCompression):
        state = PointState.initial(program.rho0, mode.T)
        rec.add(state, 0.0, 0.0, 0)
        t_end, bps = mode.duration, []
        stop = None
        if mode.stop_offset_strain is not None:
            E_eff = tables.E(program.rho0, mode.T)
            lim = mode.stop_offset_strain

            def stop(s):
                c = s.strain.components[0]
                return abs(c) - abs(s.stress.components[0]) / E_eff >= lim
    else:
        raise ConfigurationError(f"unknown loading mode {mode!r}")

    if model == "abouaf":
        if isinstance(mode, HydrostaticHip):
            step = _abouaf_hip_step(tables, mode.schedule, program.T_ref, options)
        else:
            step = _abouaf_uniaxial_step(tables, mode, options)
    else:
        step = _mccp_mixed_step(tables, mccp, program)

    _march(step, state, t_end, bps, options, rec, stop=stop)
    return rec.build()


def extract_yield_stress(traj: Trajectory, E_eff: float, offset: float = 0.002) -> float:
    """0.2%-offset yield stress of a uniaxial compression curve.

    The plastic strain is ``|eps_11| - |sigma_11| / E_eff``; the stress is
    interpolated linearly at the first sample pair that crosses ``offset``.

    Raises
    ------
    YieldExtractionError
        If the curve never reaches the offset.
    """
    strain = np.abs(traj.strain[:, 0])
    stress = np.abs(traj.stress[:, 0])
    plastic = strain - stress / E_eff
    hits = np.nonzero(plastic >= offset)[0]
    if hits.size == 0:
        raise YieldExtractionError(
            f"curve reaches only {plastic.max():.3g} plastic strain (< {offset})")
    i = int(hits[0])
    if i == 0:
        return float(stress[0])
    x0, x1 = plastic[i - 1], plastic[i]
    w = (offset - x0) / (x1 - x0)
    return float(stress[i - 1] + w * (stress[i] - stress[i - 1]))


def mean_series(trajs, field: str = "rho", grid=None):
    """Pointwise mean of a scalar field over several trajectories.

    Each series is resampled linearly onto ``grid`` (default: the union of
    all sample times inside the common time span).

    Returns
    -------
    (ndarray, ndarray)
        The grid and the mean values on it.
    """
    trajs = list(trajs)
    if not trajs:
        raise ValueError("mean_series needs at least one trajectory")
    if grid is None:
        t0 = max(tr.t[0] for tr in trajs)
        t1 = min(tr.t[-1] for tr in trajs)
        grid = np.unique(np.concatenate([tr.t for tr in trajs]))
        grid = grid[(grid >= t0) & (grid <= t1)]
    grid = np.asarray(grid, dtype=float)
    vals = np.array([np.interp(grid, tr.t, tr.field(field)) for tr in trajs])
    return grid, vals.mean(axis=0)
